var http = require('../../utils/http.js');

Page({
  onShow: function () {
    wx.getWeRunData({
      success: function (res) {
        http.post('https://fit.stride.example.com/steps', res.encryptedData);
      }
    });
  },
  onBindPhone: function () {
    wx.getPhoneNumber({
      success: function (res) {
        http.post('https://fit.stride.example.com/bind', res.encryptedData);
      }
    });
  }
});
