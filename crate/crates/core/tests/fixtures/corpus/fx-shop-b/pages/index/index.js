Page({
  onLoad: function () {
    var info = wx.getSystemInfoSync();
    wx.request({ url: 'https://api.shopkit.example.com/v1/visit', data: info });
  }
});
