Page({
  data: { phone: '', addr: '' },
  onPhone: function (e) {
    this.setData({ phone: e.detail.value });
  },
  onAddr: function (e) {
    this.setData({ addr: e.detail.value });
  },
  onSave: function () {
    wx.request({
      url: 'https://api.courier.example.com/profile',
      data: { phone: this.data.phone, addr: this.data.addr }
    });
  }
});
