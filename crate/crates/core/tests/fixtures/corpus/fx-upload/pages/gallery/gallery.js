Page({
  onPick: function () {
    wx.chooseImage({
      count: 1,
      success: function (res) {
        wx.uploadFile({
          url: 'https://img.pixelgrove.example.com/upload',
          filePath: res.tempFilePaths[0],
          name: 'photo'
        });
      }
    });
  }
});
