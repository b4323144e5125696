Component({
  methods: {
    onInput: function (e) {
      this.triggerEvent('change', { value: e.detail.value });
    }
  }
});
