Page({
  data: { loc: null },
  onLoad: function () {
    var that = this;
    wx.getLocation({
      success: function (res) {
        that.setData({ loc: res });
      }
    });
  }
});
