//! Data-flow stage: finds privacy data entering the app (platform API
//! results, user input fields) and follows it through assignments, page
//! data, helper calls, and module boundaries to network sinks.

mod engine;

use std::collections::BTreeSet;

use serde::Serialize;

use crate::ingest::Package;
use crate::render::uip;
use crate::script::ast::Span;
use crate::script::callgraph::CallGraph;
use crate::taxonomy::{SinkKind, Taxonomy};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SourceKind {
    /// Result object delivered to a `success`/`complete` callback or an
    /// event-listener argument.
    ApiCallback,
    /// Result returned directly from the call.
    ApiSyncReturn,
    /// Input-field value delivered to a bound handler.
    UipHandler,
    /// Aggregated form fields delivered to the submit handler.
    FormSubmit,
}

/// A point where privacy data enters app code.
#[derive(Debug, Clone, Serialize)]
pub struct FlowSource {
    pub kind: SourceKind,
    /// Platform API name for the api kinds.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub api: Option<String>,
    /// Page route for the input kinds.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub route: Option<String>,
    /// File the span points into (script for api kinds, markup for input
    /// kinds).
    pub file: String,
    pub span: Span,
    pub items: BTreeSet<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SinkHit {
    pub api: String,
    pub kind: SinkKind,
    pub file: String,
    pub span: Span,
}

#[derive(Debug, Clone, Serialize)]
pub struct PathStep {
    pub file: String,
    pub span: Span,
}

/// One source-to-sink leak: the items of `source` reach the network call at
/// `sink`.
#[derive(Debug, Clone, Serialize)]
pub struct TaintFlow {
    pub source: FlowSource,
    pub sink: SinkHit,
    pub items: BTreeSet<String>,
    /// Spans the value moved through, source first, sink last.
    pub path: Vec<PathStep>,
}

#[derive(Debug, Default)]
pub struct FlowResult {
    pub flows: Vec<TaintFlow>,
    /// Every detected source, whether or not it reached a sink.
    pub sources: Vec<FlowSource>,
    /// Call sites where a tainted value was passed to code the analysis
    /// cannot follow (taint is dropped there, never transferred).
    pub dropped_at_calls: usize,
    pub warnings: Vec<String>,
}

impl FlowResult {
    /// Union of items across all flows: what the app collects and sends.
    pub fn collect_set(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for f in &self.flows {
            out.extend(f.items.iter().cloned());
        }
        out
    }
}

pub fn analyze(pkg: &Package, tax: &Taxonomy, cg: &CallGraph) -> FlowResult {
    let (uip_sources, uip_warnings) = uip::detect_sources(pkg, tax);
    let mut result = engine::run(pkg, tax, cg, &uip_sources);
    result.warnings.splice(0..0, uip_warnings);
    result
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::load_package;
    use crate::script::callgraph;
    use std::fs;
    use std::path::Path;

    fn write(root: &Path, rel: &str, content: &str) {
        let p = root.join(rel);
        fs::create_dir_all(p.parent().unwrap()).unwrap();
        fs::write(p, content).unwrap();
    }

    fn analyze_app(files: &[(&str, &str)]) -> FlowResult {
        let dir = tempfile::tempdir().unwrap();
        for (rel, content) in files {
            write(dir.path(), rel, content);
        }
        let pkg = load_package(dir.path()).unwrap();
        let tax = Taxonomy::load_default();
        let cg = callgraph::build(&pkg);
        analyze(&pkg, &tax, &cg)
    }

    fn one_page(js: &str, wxml: &str) -> Vec<(&'static str, String)> {
        vec![
            ("app.json", r#"{ "pages": ["pages/index/index"] }"#.to_string()),
            ("app.js", "App({});".to_string()),
            ("pages/index/index.js", js.to_string()),
            ("pages/index/index.wxml", wxml.to_string()),
        ]
    }

    fn analyze_page(js: &str, wxml: &str) -> FlowResult {
        let files = one_page(js, wxml);
        let borrowed: Vec<(&str, &str)> = files.iter().map(|(a, b)| (*a, b.as_str())).collect();
        analyze_app(&borrowed)
    }

    #[test]
    fn success_callback_to_request() {
        let r = analyze_page(
            r#"Page({
  onLoad: function () {
    wx.getLocation({
      type: 'wgs84',
      success: function (res) {
        wx.request({ url: 'https://api.example.com/loc', data: { lat: res.latitude } });
      }
    });
  }
});"#,
            "<view/>",
        );
        assert_eq!(r.flows.len(), 1);
        let f = &r.flows[0];
        assert_eq!(f.source.kind, SourceKind::ApiCallback);
        assert_eq!(f.source.api.as_deref(), Some("getLocation"));
        assert_eq!(f.sink.api, "request");
        assert!(f.items.contains("location information_d"));
        assert!(f.path.len() >= 2);
    }

    #[test]
    fn fail_callback_is_not_a_source() {
        let r = analyze_page(
            r#"Page({
  onLoad: function () {
    wx.getLocation({
      fail: function (err) {
        wx.request({ url: 'https://api.example.com/e', data: err });
      }
    });
  }
});"#,
            "<view/>",
        );
        assert!(r.flows.is_empty());
    }

    #[test]
    fn sync_return_two_hops_through_helper() {
        let r = analyze_page(
            r#"function describe(info) {
  return { model: info.model, sys: info.system };
}
Page({
  onShow: function () {
    var info = wx.getSystemInfoSync();
    var body = describe(info);
    wx.request({ url: 'https://api.example.com/sys', data: body });
  }
});"#,
            "<view/>",
        );
        assert_eq!(r.flows.len(), 1);
        assert_eq!(r.flows[0].source.kind, SourceKind::ApiSyncReturn);
        assert_eq!(r.flows[0].source.api.as_deref(), Some("getSystemInfoSync"));
        assert!(r.flows[0].items.contains("device information_d"));
    }

    #[test]
    fn set_data_relay_and_uip_handler() {
        let r = analyze_page(
            r#"Page({
  data: { phone: '' },
  onInput: function (e) {
    this.setData({ phone: e.detail.value });
  },
  submit: function () {
    wx.request({ url: 'https://api.example.com/save', data: { p: this.data.phone } });
  }
});"#,
            r#"<input placeholder="phone number" bindinput="onInput"/><button bindtap="submit">go</button>"#,
        );
        assert_eq!(r.flows.len(), 1);
        let f = &r.flows[0];
        assert_eq!(f.source.kind, SourceKind::UipHandler);
        assert!(f.items.contains("contact information_u"));
        assert!(f.path.len() >= 3);
    }

    #[test]
    fn form_submit_aggregate() {
        let r = analyze_page(
            r#"Page({
  onSubmit: function (e) {
    wx.request({ url: 'https://api.example.com/form', data: e.detail.value });
  }
});"#,
            r#"<form catchsubmit="onSubmit">
  <input name="n" placeholder="your name"/>
  <view><text>city</text><picker range="{{cities}}"/></view>
  <button form-type="submit">OK</button>
</form>"#,
        );
        assert_eq!(r.flows.len(), 1);
        let f = &r.flows[0];
        assert_eq!(f.source.kind, SourceKind::FormSubmit);
        assert_eq!(
            f.items.iter().collect::<Vec<_>>(),
            vec!["location information_u", "name_u"]
        );
    }

    #[test]
    fn upload_file_path() {
        let r = analyze_page(
            r#"Page({
  pick: function () {
    wx.chooseImage({
      count: 1,
      success: function (res) {
        wx.uploadFile({ url: 'https://api.example.com/up', filePath: res.tempFilePaths[0], name: 'f' });
      }
    });
  }
});"#,
            r#"<button bindtap="pick">pick</button>"#,
        );
        assert_eq!(r.flows.len(), 1);
        assert_eq!(r.flows[0].sink.api, "uploadFile");
        assert_eq!(r.flows[0].sink.kind, SinkKind::Upload);
    }

    #[test]
    fn socket_task_member_sink() {
        let r = analyze_page(
            r#"Page({
  onLoad: function () {
    var task = wx.connectSocket({ url: 'wss://x.example.com' });
    wx.getClipboardData({
      success: function (res) {
        task.send({ data: res.data });
      }
    });
  }
});"#,
            "<view/>",
        );
        assert_eq!(r.flows.len(), 1);
        assert_eq!(r.flows[0].sink.api, "SocketTask.send");
        assert!(r.flows[0].items.contains("clipboard data_d"));
    }

    #[test]
    fn storage_relay_is_missed() {
        // Indirection through storage is a known blind spot: the write and
        // the read are separate keys to the analysis.
        let r = analyze_page(
            r#"Page({
  onLoad: function () {
    wx.getLocation({
      success: function (res) {
        wx.setStorage({ key: 'loc', data: res });
      }
    });
  },
  onShow: function () {
    var loc = wx.getStorageSync('loc');
    wx.request({ url: 'https://api.example.com/loc', data: loc });
  }
});"#,
            "<view/>",
        );
        assert!(r.flows.is_empty());
    }

    #[test]
    fn local_only_use_is_not_a_flow() {
        let r = analyze_page(
            r#"Page({
  data: { city: '' },
  onLoad: function () {
    var that = this;
    wx.getLocation({
      success: function (res) {
        that.setData({ city: res.latitude + ',' + res.longitude });
      }
    });
  }
});"#,
            "<view/>",
        );
        assert!(r.flows.is_empty());
        assert_eq!(r.sources.len(), 1);
    }

    #[test]
    fn cross_module_wrapper() {
        let r = analyze_app(&[
            ("app.json", r#"{ "pages": ["pages/p/p"] }"#),
            ("app.js", "App({});"),
            (
                "utils/http.js",
                r#"function post(url, body) {
  wx.request({ url: url, data: body, method: 'POST' });
}
module.exports.post = post;"#,
            ),
            (
                "pages/p/p.js",
                r#"var http = require('../../utils/http.js');
Page({
  onLoad: function () {
    wx.getWeRunData({
      success: function (res) {
        http.post('https://api.example.com/run', res.encryptedData);
      }
    });
  }
});"#,
            ),
            ("pages/p/p.wxml", "<view/>"),
        ]);
        assert_eq!(r.flows.len(), 1);
        assert_eq!(r.flows[0].source.api.as_deref(), Some("getWeRunData"));
        assert!(r.flows[0].items.contains("activity information_p"));
        assert!(r.flows[0].sink.file.ends_with("utils/http.js"));
    }

    #[test]
    fn unresolved_call_drops_taint() {
        let r = analyze_page(
            r#"Page({
  onLoad: function (opts) {
    var info = wx.getSystemInfoSync();
    opts.callback(info);
  }
});"#,
            "<view/>",
        );
        assert!(r.flows.is_empty());
        assert_eq!(r.dropped_at_calls, 1);
    }

    #[test]
    fn collect_set_unions_flow_items() {
        let r = analyze_page(
            r#"Page({
  onLoad: function () {
    var info = wx.getSystemInfoSync();
    wx.request({ url: 'https://a.example.com', data: info });
    wx.getLocation({
      success: function (res) {
        wx.request({ url: 'https://b.example.com', data: res });
      }
    });
  }
});"#,
            "<view/>",
        );
        assert_eq!(r.flows.len(), 2);
        let set = r.collect_set();
        assert!(set.contains("device information_d"));
        assert!(set.contains("location information_d"));
    }

    #[test]
    fn event_listener_source() {
        let r = analyze_page(
            r#"Page({
  onLoad: function () {
    wx.onCompassChange(function (res) {
      wx.request({ url: 'https://api.example.com/c', data: { d: res.direction } });
    });
  }
});"#,
            "<view/>",
        );
        assert_eq!(r.flows.len(), 1);
        assert_eq!(r.flows[0].source.kind, SourceKind::ApiCallback);
        assert_eq!(r.flows[0].source.api.as_deref(), Some("onCompassChange"));
    }

    #[test]
    fn template_and_string_ops_propagate() {
        let r = analyze_page(
            r#"Page({
  onLoad: function () {
    var info = wx.getSystemInfoSync();
    var tag = 'm=' + info.model;
    var line = [tag, info.system].join('|');
    wx.request({ url: 'https://api.example.com/t?q=' + line });
  }
});"#,
            "<view/>",
        );
        assert_eq!(r.flows.len(), 1);
    }
}
