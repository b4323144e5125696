//! Loads an unpacked sub-app package from disk into an analyzable model:
//! every script parsed, every page template parsed, component dependencies
//! resolved, metadata and policy text picked up.
//!
//! A package is a directory named by its app id:
//!
//! ```text
//! <appid>/app.json        route list, subpackages, global components
//! <appid>/app.js          App({...})
//! <appid>/pages/<r>.js    Page({...}) logic
//! <appid>/pages/<r>.wxml  page template
//! <appid>/pages/<r>.json  page config (usingComponents)
//! <appid>/meta.json       optional store metadata
//! <appid>/policy.txt      optional externally supplied policy text
//! ```
//!
//! Only a missing or unreadable `app.json` (or a duplicate route) fails the
//! load; every per-page problem degrades to a warning so one broken page
//! does not hide the rest of the app.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::SpoError;
use crate::render::markup::{parse_markup, MarkupDoc};
use crate::script::ast::FnId;
use crate::script::model::{self, RegKind, Registration, ScriptModel, PAGE_LIFECYCLE};
use crate::script::parser::parse_script;
use crate::script::ScriptAst;

#[derive(Debug)]
pub struct ScriptFile {
    /// Package-relative path with `/` separators, extension kept.
    pub path: String,
    pub src: String,
    pub ast: ScriptAst,
    pub model: ScriptModel,
}

#[derive(Debug)]
pub struct PageInfo {
    /// Route without extension, e.g. `pages/index/index`. Components use
    /// their component path here.
    pub route: String,
    /// Index into `Package::files` for the page script, if it parsed.
    pub file: Option<usize>,
    pub is_entry: bool,
    pub is_component: bool,
    pub lifecycle: BTreeMap<String, FnId>,
    pub handlers: BTreeMap<String, FnId>,
    pub fn_aliases: BTreeMap<String, String>,
    pub data_fields: BTreeSet<String>,
    /// Tag name -> component route, merged from page and global config.
    pub using_components: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Meta {
    pub developer: Option<String>,
    pub category: Option<String>,
    /// Popularity proxy: how many users recently opened the app.
    pub recently_used: Option<u64>,
}

#[derive(Debug)]
pub struct Package {
    pub appid: String,
    pub root: PathBuf,
    pub files: Vec<ScriptFile>,
    pub file_index: BTreeMap<String, usize>,
    /// `App({...})` registration from app.js.
    pub app_reg: Option<Registration>,
    /// Pages first (app.json order), then discovered components.
    pub pages: Vec<PageInfo>,
    /// Parsed template per route (pages and components alike).
    pub docs: BTreeMap<String, MarkupDoc>,
    pub meta: Meta,
    pub external_policy: Option<String>,
    pub warnings: Vec<String>,
    /// (path, message) for scripts that failed to parse.
    pub parse_failures: Vec<(String, String)>,
    /// Total bytes of script, markup and config files.
    pub byte_size: u64,
    /// Size per script file, for library clustering.
    pub script_sizes: BTreeMap<String, u64>,
}

impl Package {
    pub fn page(&self, route: &str) -> Option<&PageInfo> {
        self.pages.iter().find(|p| p.route == route)
    }

    pub fn file_by_path(&self, path: &str) -> Option<&ScriptFile> {
        self.file_index.get(path).map(|i| &self.files[*i])
    }

    pub fn pages_total(&self) -> usize {
        self.pages.iter().filter(|p| !p.is_component).count()
    }

    pub fn pages_analyzed(&self) -> usize {
        self.pages
            .iter()
            .filter(|p| !p.is_component && p.file.is_some())
            .count()
    }
}

#[derive(Debug, Deserialize)]
struct AppConfig {
    #[serde(default)]
    pages: Vec<String>,
    #[serde(default, alias = "subpackages")]
    #[serde(rename = "subPackages")]
    sub_packages: Vec<SubPackage>,
    #[serde(default, rename = "usingComponents")]
    using_components: BTreeMap<String, String>,
}

#[derive(Debug, Deserialize)]
struct SubPackage {
    root: String,
    #[serde(default)]
    pages: Vec<String>,
}

#[derive(Debug, Default, Deserialize)]
struct PageConfig {
    #[serde(default, rename = "usingComponents")]
    using_components: BTreeMap<String, String>,
}

pub fn load_package(dir: &Path) -> Result<Package, SpoError> {
    let appid = dir
        .file_name()
        .and_then(|n| n.to_str())
        .unwrap_or("unknown")
        .to_string();

    let app_json_path = dir.join("app.json");
    let app_json = std::fs::read_to_string(&app_json_path).map_err(|e| SpoError::PackageLoad {
        dir: dir.to_path_buf(),
        message: format!("cannot read app.json: {e}"),
    })?;
    let app_config: AppConfig =
        serde_json::from_str(&app_json).map_err(|e| SpoError::PackageLoad {
            dir: dir.to_path_buf(),
            message: format!("invalid app.json: {e}"),
        })?;

    let mut pkg = Package {
        appid,
        root: dir.to_path_buf(),
        files: Vec::new(),
        file_index: BTreeMap::new(),
        app_reg: None,
        pages: Vec::new(),
        docs: BTreeMap::new(),
        meta: Meta::default(),
        external_policy: None,
        warnings: Vec::new(),
        parse_failures: Vec::new(),
        byte_size: 0,
        script_sizes: BTreeMap::new(),
    };

    // Routes, in declaration order; first main-package route is the entry.
    let mut routes: Vec<String> = Vec::new();
    for r in &app_config.pages {
        routes.push(normalize_path(r));
    }
    for sp in &app_config.sub_packages {
        for r in &sp.pages {
            routes.push(normalize_path(&format!("{}/{}", sp.root, r)));
        }
    }
    {
        let mut seen = BTreeSet::new();
        for r in &routes {
            if !seen.insert(r.clone()) {
                return Err(SpoError::PackageLoad {
                    dir: dir.to_path_buf(),
                    message: format!("duplicate route `{r}`"),
                });
            }
        }
    }

    // Load every script, template and config file under the package so
    // `require` targets and library files are available regardless of how
    // pages reference them.
    let mut markup_raw: BTreeMap<String, String> = BTreeMap::new();
    let mut configs: BTreeMap<String, PageConfig> = BTreeMap::new();
    for entry in walkdir::WalkDir::new(dir)
        .sort_by_file_name()
        .into_iter()
        .filter_map(Result::ok)
        .filter(|e| e.file_type().is_file())
    {
        let rel = match entry.path().strip_prefix(dir) {
            Ok(r) => normalize_path(&r.to_string_lossy()),
            Err(_) => continue,
        };
        let ext = entry.path().extension().and_then(|e| e.to_str());
        if !matches!(ext, Some("js" | "wxml" | "json")) {
            continue;
        }
        let Ok(src) = std::fs::read_to_string(entry.path()) else {
            pkg.warnings.push(format!("cannot read {rel}, skipped"));
            continue;
        };
        pkg.byte_size += src.len() as u64;
        match ext {
            Some("js") => {
                pkg.script_sizes.insert(rel.clone(), src.len() as u64);
                match parse_script(&src) {
                    Ok(ast) => {
                        let m = model::extract(&ast);
                        for w in &m.warnings {
                            pkg.warnings.push(format!("{rel}: {w}"));
                        }
                        let idx = pkg.files.len();
                        pkg.files.push(ScriptFile {
                            path: rel.clone(),
                            src,
                            ast,
                            model: m,
                        });
                        pkg.file_index.insert(rel, idx);
                    }
                    Err(e) => {
                        pkg.warnings
                            .push(format!("script {rel} failed to parse: {e}"));
                        pkg.parse_failures.push((rel, e.to_string()));
                    }
                }
            }
            Some("wxml") => {
                markup_raw.insert(rel, src);
            }
            Some("json") => {
                if rel != "app.json" && rel != "meta.json" {
                    match serde_json::from_str::<PageConfig>(&src) {
                        Ok(c) => {
                            configs.insert(rel, c);
                        }
                        Err(e) => pkg.warnings.push(format!("invalid config {rel}: {e}")),
                    }
                }
            }
            _ => unreachable!(),
        }
    }

    // App registration.
    match pkg.file_by_path("app.js") {
        Some(f) => match &f.model.registration {
            Some((RegKind::App, reg)) => {
                pkg.app_reg = Some(clone_registration(reg));
            }
            Some((k, _)) => pkg
                .warnings
                .push(format!("app.js registers {} instead of App", k.label())),
            None => pkg.warnings.push("app.js has no App registration".into()),
        },
        None => pkg.warnings.push("app.js missing or unparseable".into()),
    }

    // Pages.
    let mut component_queue: Vec<String> = Vec::new();
    for (i, route) in routes.iter().enumerate() {
        let page = build_page_info(
            &mut pkg,
            route,
            i == 0,
            false,
            &app_config.using_components,
            &configs,
            &markup_raw,
            &mut component_queue,
        );
        pkg.pages.push(page);
    }

    // Components, breadth-first over usingComponents references.
    let mut seen: BTreeSet<String> = routes.iter().cloned().collect();
    while let Some(comp_route) = component_queue.pop() {
        if !seen.insert(comp_route.clone()) {
            continue;
        }
        let page = build_page_info(
            &mut pkg,
            &comp_route,
            false,
            true,
            &app_config.using_components,
            &configs,
            &markup_raw,
            &mut component_queue,
        );
        pkg.pages.push(page);
    }

    // Metadata and external policy text.
    if let Ok(src) = std::fs::read_to_string(dir.join("meta.json")) {
        match serde_json::from_str::<Meta>(&src) {
            Ok(m) => pkg.meta = m,
            Err(e) => pkg.warnings.push(format!("invalid meta.json: {e}")),
        }
    }
    if let Ok(text) = std::fs::read_to_string(dir.join("policy.txt")) {
        pkg.external_policy = Some(text);
    }

    Ok(pkg)
}

#[allow(clippy::too_many_arguments)]
fn build_page_info(
    pkg: &mut Package,
    route: &str,
    is_entry: bool,
    is_component: bool,
    global_components: &BTreeMap<String, String>,
    configs: &BTreeMap<String, PageConfig>,
    markup_raw: &BTreeMap<String, String>,
    component_queue: &mut Vec<String>,
) -> PageInfo {
    let js_path = format!("{route}.js");
    let wxml_path = format!("{route}.wxml");
    let json_path = format!("{route}.json");
    let kind_label = if is_component { "component" } else { "page" };

    let mut info = PageInfo {
        route: route.to_string(),
        file: None,
        is_entry,
        is_component,
        lifecycle: BTreeMap::new(),
        handlers: BTreeMap::new(),
        fn_aliases: BTreeMap::new(),
        data_fields: BTreeSet::new(),
        using_components: BTreeMap::new(),
    };

    match pkg.file_index.get(&js_path) {
        Some(idx) => {
            info.file = Some(*idx);
            let file = &pkg.files[*idx];
            match &file.model.registration {
                Some((_, reg)) => {
                    for (name, fn_id) in &reg.fn_props {
                        if !is_component && PAGE_LIFECYCLE.contains(&name.as_str()) {
                            info.lifecycle.insert(name.clone(), *fn_id);
                        } else {
                            info.handlers.insert(name.clone(), *fn_id);
                        }
                    }
                    info.fn_aliases = reg.fn_aliases.clone();
                    info.data_fields = reg.data_fields.clone();
                }
                None => pkg.warnings.push(format!(
                    "{kind_label} {route} has no registration call; handlers unknown"
                )),
            }
        }
        None => {
            pkg.warnings.push(format!(
                "{kind_label} {route} skipped: script {js_path} missing or unparseable"
            ));
        }
    }

    match markup_raw.get(&wxml_path) {
        Some(src) => {
            let doc = parse_markup(src);
            for r in &doc.repairs {
                pkg.warnings.push(format!("{wxml_path}: {r}"));
            }
            pkg.docs.insert(route.to_string(), doc);
        }
        None => {
            pkg.warnings
                .push(format!("{kind_label} {route} has no template, treated as empty"));
            pkg.docs.insert(route.to_string(), MarkupDoc::default());
        }
    }

    let mut using = global_components.clone();
    if let Some(cfg) = configs.get(&json_path) {
        using.extend(cfg.using_components.clone());
    }
    for (tag, path) in &using {
        let resolved = resolve_component_path(route, path);
        component_queue.push(resolved.clone());
        info.using_components.insert(tag.clone(), resolved);
    }

    info
}

/// Component references are either root-absolute (`/components/x/index`) or
/// relative to the referencing page's directory.
fn resolve_component_path(from_route: &str, reference: &str) -> String {
    if let Some(stripped) = reference.strip_prefix('/') {
        return normalize_path(stripped);
    }
    let parent = match from_route.rfind('/') {
        Some(i) => &from_route[..i],
        None => "",
    };
    if parent.is_empty() {
        normalize_path(reference)
    } else {
        normalize_path(&format!("{parent}/{reference}"))
    }
}

/// Collapses `.`/`..` segments and unifies separators.
pub fn normalize_path(p: &str) -> String {
    let unified = p.replace('\\', "/");
    let mut out: Vec<&str> = Vec::new();
    for seg in unified.split('/') {
        match seg {
            "" | "." => {}
            ".." => {
                out.pop();
            }
            s => out.push(s),
        }
    }
    out.join("/")
}

fn clone_registration(reg: &Registration) -> Registration {
    Registration {
        fn_props: reg.fn_props.clone(),
        fn_aliases: reg.fn_aliases.clone(),
        data_fields: reg.data_fields.clone(),
        span: reg.span,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    fn write(root: &Path, rel: &str, content: &str) {
        let p = root.join(rel);
        fs::create_dir_all(p.parent().unwrap()).unwrap();
        fs::write(p, content).unwrap();
    }

    fn minimal_page_js() -> &'static str {
        "Page({ data: { x: 1 }, onLoad: function () {} });"
    }

    fn scaffold(root: &Path) {
        write(
            root,
            "app.json",
            r#"{ "pages": ["pages/index/index", "pages/a/a", "pages/b/b", "pages/c/c"],
                "subPackages": [{ "root": "subpkg-1", "pages": ["pages/d/d"] }] }"#,
        );
        write(root, "app.js", "App({ onLaunch: function () {} });");
        for r in [
            "pages/index/index",
            "pages/a/a",
            "pages/b/b",
            "pages/c/c",
            "subpkg-1/pages/d/d",
        ] {
            write(root, &format!("{r}.js"), minimal_page_js());
            write(root, &format!("{r}.wxml"), "<view><text>hi</text></view>");
        }
    }

    #[test]
    fn loads_five_pages_with_subpackage() {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().join("wxfixture01");
        fs::create_dir_all(&root).unwrap();
        scaffold(&root);

        let pkg = load_package(&root).unwrap();
        assert_eq!(pkg.appid, "wxfixture01");
        assert_eq!(pkg.pages_total(), 5);
        assert_eq!(pkg.pages_analyzed(), 5);
        assert!(pkg.pages[0].is_entry);
        assert!(!pkg.pages[1].is_entry);
        assert_eq!(pkg.pages[4].route, "subpkg-1/pages/d/d");
        assert!(pkg.app_reg.is_some());
        assert_eq!(pkg.docs.len(), 5);
        assert!(pkg.byte_size > 0);
        assert!(pkg.pages.iter().all(|p| p.lifecycle.contains_key("onLoad")));
    }

    #[test]
    fn missing_page_script_degrades_to_warning() {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().join("wxfixture02");
        fs::create_dir_all(&root).unwrap();
        scaffold(&root);
        fs::remove_file(root.join("pages/b/b.js")).unwrap();

        let pkg = load_package(&root).unwrap();
        assert_eq!(pkg.pages_total(), 5);
        assert_eq!(pkg.pages_analyzed(), 4);
        assert!(pkg
            .warnings
            .iter()
            .any(|w| w.contains("pages/b/b") && w.contains("skipped")));
    }

    #[test]
    fn unparseable_page_script_is_recorded() {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().join("wxfixture03");
        fs::create_dir_all(&root).unwrap();
        scaffold(&root);
        write(&root, "pages/c/c.js", "Page({ onLoad: function() { if (x) { });");

        let pkg = load_package(&root).unwrap();
        assert_eq!(pkg.pages_analyzed(), 4);
        assert_eq!(pkg.parse_failures.len(), 1);
        assert!(pkg.parse_failures[0].0 == "pages/c/c.js");
    }

    #[test]
    fn missing_app_json_is_fatal() {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().join("wxempty");
        fs::create_dir_all(&root).unwrap();
        let err = load_package(&root).unwrap_err();
        assert!(err.to_string().contains("app.json"));
    }

    #[test]
    fn duplicate_route_is_fatal() {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().join("wxdup");
        fs::create_dir_all(&root).unwrap();
        write(
            &root,
            "app.json",
            r#"{ "pages": ["pages/a/a", "pages/a/a"] }"#,
        );
        let err = load_package(&root).unwrap_err();
        assert!(err.to_string().contains("duplicate route"));
    }

    #[test]
    fn components_resolved_absolute_and_relative() {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().join("wxcomp");
        fs::create_dir_all(&root).unwrap();
        write(root.as_path(), "app.json", r#"{ "pages": ["pages/p/p"] }"#);
        write(root.as_path(), "app.js", "App({});");
        write(root.as_path(), "pages/p/p.js", minimal_page_js());
        write(root.as_path(), "pages/p/p.wxml", "<phone-field/><card/>");
        write(
            root.as_path(),
            "pages/p/p.json",
            r#"{ "usingComponents": { "phone-field": "/components/phone/index",
                                       "card": "../../widgets/card" } }"#,
        );
        write(
            root.as_path(),
            "components/phone/index.js",
            "Component({ methods: { onInput: function (e) {} } });",
        );
        write(root.as_path(), "components/phone/index.wxml", "<input bindinput=\"onInput\"/>");
        // Nested reference from a component's own config.
        write(
            root.as_path(),
            "components/phone/index.json",
            r#"{ "usingComponents": { "inner": "./inner" } }"#,
        );
        write(root.as_path(), "components/phone/inner.js", "Component({});");
        write(root.as_path(), "components/phone/inner.wxml", "<view/>");
        write(root.as_path(), "widgets/card.js", "Component({});");
        write(root.as_path(), "widgets/card.wxml", "<view/>");

        let pkg = load_package(&root).unwrap();
        let comp_routes: Vec<&str> = pkg
            .pages
            .iter()
            .filter(|p| p.is_component)
            .map(|p| p.route.as_str())
            .collect();
        assert!(comp_routes.contains(&"components/phone/index"));
        assert!(comp_routes.contains(&"components/phone/inner"));
        assert!(comp_routes.contains(&"widgets/card"));
        let page = pkg.page("pages/p/p").unwrap();
        assert_eq!(
            page.using_components.get("phone-field").map(String::as_str),
            Some("components/phone/index")
        );
        assert_eq!(
            page.using_components.get("card").map(String::as_str),
            Some("widgets/card")
        );
    }

    #[test]
    fn meta_and_policy_loaded() {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().join("wxmeta");
        fs::create_dir_all(&root).unwrap();
        scaffold(&root);
        write(
            &root,
            "meta.json",
            r#"{ "developer": "Acme Ltd", "category": "shopping", "recently_used": 52000 }"#,
        );
        write(&root, "policy.txt", "We collect your location information.");

        let pkg = load_package(&root).unwrap();
        assert_eq!(pkg.meta.developer.as_deref(), Some("Acme Ltd"));
        assert_eq!(pkg.meta.recently_used, Some(52000));
        assert!(pkg.external_policy.as_deref().unwrap().contains("location"));
    }

    #[test]
    fn reload_is_stable() {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().join("wxstable");
        fs::create_dir_all(&root).unwrap();
        scaffold(&root);
        let a = load_package(&root).unwrap();
        let b = load_package(&root).unwrap();
        assert_eq!(a.byte_size, b.byte_size);
        assert_eq!(
            a.pages.iter().map(|p| &p.route).collect::<Vec<_>>(),
            b.pages.iter().map(|p| &p.route).collect::<Vec<_>>()
        );
        assert_eq!(a.warnings, b.warnings);
        assert_eq!(
            a.files.iter().map(|f| &f.path).collect::<Vec<_>>(),
            b.files.iter().map(|f| &f.path).collect::<Vec<_>>()
        );
    }
}
