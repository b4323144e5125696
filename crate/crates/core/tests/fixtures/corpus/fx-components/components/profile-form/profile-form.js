Component({
  data: { cities: [] },
  methods: {
    onPhone: function (e) {
      this.triggerEvent('save', { phone: e.detail.value });
    },
    onCity: function (e) {
      this.triggerEvent('save', { city: e.detail.value });
    }
  }
});
