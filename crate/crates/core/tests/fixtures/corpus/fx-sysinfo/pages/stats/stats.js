function deviceSnapshot() {
  var info = wx.getSystemInfoSync();
  return { model: info.model, system: info.system, pixelRatio: info.pixelRatio };
}

Page({
  onShow: function () {
    var snap = deviceSnapshot();
    wx.request({ url: 'https://metrics.lumen.example.com/device', data: snap });
  }
});
