var track = require('../../vendor/track/core.js');

Page({
  onLoad: function () {
    track.init('home1');
  }
});
