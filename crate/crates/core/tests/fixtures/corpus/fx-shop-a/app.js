App({ onLaunch: function () {}, globalData: { cart: [] } });
