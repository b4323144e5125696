Page({
  data: {},
  onPick: function () {
    var that = this;
    wx.chooseImage({
      success: function (res) {
        var key = 'img_' + Date.now();
        var patch = {};
        patch[key] = res.tempFilePaths[0];
        that.setData(patch);
      }
    });
  },
  onSend: function () {
    wx.uploadFile({
      url: 'https://img.bucketeer.example.com/upload',
      filePath: this.data.img_latest,
      name: 'photo'
    });
  }
});
