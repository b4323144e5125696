Page({
  onShare: function () {
    wx.chooseContact({
      success: function (res) {
        wx.uploadFile({
          url: 'https://crm.rallyhub.example.com/import',
          filePath: 'contacts.txt',
          name: 'card',
          formData: { phone: res.phoneNumber, who: res.displayName }
        });
      }
    });
  }
});
