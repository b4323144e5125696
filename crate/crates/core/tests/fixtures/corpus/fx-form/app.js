App({ onLaunch: function () {} });
