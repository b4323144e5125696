//! Detects user-input collection points in page templates: native input
//! fields (and custom components wrapping them) whose surrounding labels
//! name a privacy item, together with the handler that receives the value.

use std::collections::{BTreeMap, BTreeSet};

use crate::ingest::Package;
use crate::render::components;
use crate::render::markup::MarkupDoc;
use crate::script::ast::Span;
use crate::script::callgraph::binding_event;
use crate::taxonomy::Taxonomy;

/// Free-text entry elements and the events that deliver their value.
const ENTRY_ELEMENTS: &[&str] = &["editor", "input", "textarea"];
const ENTRY_EVENTS: &[&str] = &["input", "confirm"];

/// Choice/adjustment elements.
const CHOICE_ELEMENTS: &[&str] = &[
    "checkbox",
    "checkbox-group",
    "picker",
    "picker-view",
    "radio",
    "radio-group",
    "slider",
    "switch",
];
const CHOICE_EVENTS: &[&str] = &["change", "columnchange", "changing"];

/// Elements whose nested option/label text describes what is being chosen.
const CHILD_TEXT_ELEMENTS: &[&str] = &[
    "picker",
    "picker-view",
    "radio-group",
    "checkbox-group",
    "radio",
    "checkbox",
];

/// Documents needing more repairs than this are too damaged for positional
/// label inference.
const MAX_TRUSTED_REPAIRS: usize = 25;

pub fn is_native_input(tag: &str) -> bool {
    ENTRY_ELEMENTS.contains(&tag) || CHOICE_ELEMENTS.contains(&tag)
}

fn collection_events(tag: &str) -> &'static [&'static str] {
    if ENTRY_ELEMENTS.contains(&tag) {
        ENTRY_EVENTS
    } else if CHOICE_ELEMENTS.contains(&tag) {
        CHOICE_EVENTS
    } else {
        &[]
    }
}

/// One detected user-input collection point.
#[derive(Debug, Clone)]
pub struct UipSource {
    pub page_route: String,
    /// Element span in the route's template source.
    pub span: Span,
    pub items: BTreeSet<String>,
    /// Handler receiving the value; resolved against the route's script.
    pub handler: Option<String>,
    pub binding_attr: Option<String>,
    /// True when this is a form-level aggregate delivered to the submit
    /// handler rather than a per-field binding.
    pub via_form_submit: bool,
}

pub fn detect_sources(pkg: &Package, tax: &Taxonomy) -> (Vec<UipSource>, Vec<String>) {
    let (comp_items, mut warnings) = components::component_items(pkg, tax);
    let mut sources = Vec::new();

    for page in &pkg.pages {
        let Some(doc) = pkg.docs.get(&page.route) else { continue };
        if doc.repairs.len() > MAX_TRUSTED_REPAIRS {
            warnings.push(format!(
                "{}: markup needed {} repairs; input-field analysis skipped",
                page.route,
                doc.repairs.len()
            ));
            continue;
        }

        // Forms with a static submit handler collect their unbound fields.
        let mut form_buckets: BTreeMap<usize, (String, String, BTreeSet<String>)> = BTreeMap::new();
        for el in doc.elements() {
            if doc.tag(el) != Some("form") {
                continue;
            }
            if let Some((attr, handler)) = find_binding(doc, el, &["submit"]) {
                form_buckets.insert(el, (attr, handler, BTreeSet::new()));
            }
        }

        for el in doc.elements() {
            let tag = doc.tag(el).unwrap_or_default().to_string();

            let (items, binding): (BTreeSet<String>, Option<(String, String)>) =
                if is_native_input(&tag) {
                    (
                        label_context_items(doc, el, tax),
                        find_binding(doc, el, collection_events(&tag)),
                    )
                } else if let Some(croute) = page.using_components.get(&tag) {
                    let Some(citems) = comp_items.get(croute) else { continue };
                    let mut items = citems.clone();
                    items.extend(label_context_items(doc, el, tax));
                    // Component events are custom names; any binding on the
                    // usage tag can deliver the wrapped value.
                    (items, find_any_binding(doc, el))
                } else {
                    continue;
                };

            if items.is_empty() {
                continue;
            }
            match binding {
                Some((attr, handler)) => sources.push(UipSource {
                    page_route: page.route.clone(),
                    span: doc.span(el),
                    items,
                    handler: Some(handler),
                    binding_attr: Some(attr),
                    via_form_submit: false,
                }),
                None => {
                    // Unbound field: reaches code only through an enclosing
                    // form's submit payload.
                    if let Some(form) = enclosing_form(doc, el, &form_buckets) {
                        form_buckets.get_mut(&form).unwrap().2.extend(items);
                    }
                }
            }
        }

        for (el, (attr, handler, items)) in form_buckets {
            if items.is_empty() {
                continue;
            }
            sources.push(UipSource {
                page_route: page.route.clone(),
                span: doc.span(el),
                items,
                handler: Some(handler),
                binding_attr: Some(attr),
                via_form_submit: true,
            });
        }
    }

    sources.sort_by(|a, b| (&a.page_route, a.span).cmp(&(&b.page_route, b.span)));
    (sources, warnings)
}

fn find_binding(doc: &MarkupDoc, el: usize, events: &[&str]) -> Option<(String, String)> {
    for (attr, value) in doc.attrs(el) {
        let Some(event) = binding_event(attr) else { continue };
        if events.contains(&event) && !value.is_empty() && !value.contains("{{") {
            return Some((attr.clone(), value.clone()));
        }
    }
    None
}

fn find_any_binding(doc: &MarkupDoc, el: usize) -> Option<(String, String)> {
    for (attr, value) in doc.attrs(el) {
        if binding_event(attr).is_some() && !value.is_empty() && !value.contains("{{") {
            return Some((attr.clone(), value.clone()));
        }
    }
    None
}

fn enclosing_form(
    doc: &MarkupDoc,
    el: usize,
    forms: &BTreeMap<usize, (String, String, BTreeSet<String>)>,
) -> Option<usize> {
    let mut cur = doc.parent(el);
    while let Some(p) = cur {
        if forms.contains_key(&p) {
            return Some(p);
        }
        cur = doc.parent(p);
    }
    None
}

/// What privacy item does this input field ask for? Contexts are tried in a
/// fixed order and the first one that names any item wins:
///
/// 1. the element's own describing attributes (and option text for choice
///    groups),
/// 2. the nearest preceding sibling with text,
/// 3. an enclosing `label` element,
/// 4. text immediately preceding the parent or grandparent.
pub fn label_context_items(doc: &MarkupDoc, el: usize, tax: &Taxonomy) -> BTreeSet<String> {
    const DESCRIBING_ATTRS: &[&str] = &["placeholder", "label", "value", "range-key", "name", "title"];

    // Context 1: own attributes and option text.
    let mut texts: Vec<String> = Vec::new();
    for attr in DESCRIBING_ATTRS {
        if let Some(v) = doc.attr(el, attr) {
            if !v.contains("{{") && !v.trim().is_empty() {
                texts.push(v.to_string());
            }
        }
    }
    if CHILD_TEXT_ELEMENTS.contains(&doc.tag(el).unwrap_or_default()) {
        let t = strip_moustache(&doc.subtree_text(el));
        if !t.trim().is_empty() {
            texts.push(t);
        }
    }
    let found = match_texts(tax, &texts);
    if !found.is_empty() {
        return found;
    }

    // Context 2: nearest preceding sibling with visible text.
    if let Some(t) = preceding_text(doc, el) {
        let found = match_texts(tax, &[t]);
        if !found.is_empty() {
            return found;
        }
    }

    // Context 3: enclosing label element.
    let mut cur = doc.parent(el);
    while let Some(p) = cur {
        if doc.tag(p) == Some("label") {
            let found = match_texts(tax, &[strip_moustache(&doc.subtree_text(p))]);
            if !found.is_empty() {
                return found;
            }
            break;
        }
        cur = doc.parent(p);
    }

    // Context 4: text right before the parent or grandparent.
    let mut anc = doc.parent(el);
    for _ in 0..2 {
        let Some(a) = anc else { break };
        if let Some(t) = preceding_text(doc, a) {
            let found = match_texts(tax, &[t]);
            if !found.is_empty() {
                return found;
            }
        }
        anc = doc.parent(a);
    }

    BTreeSet::new()
}

fn preceding_text(doc: &MarkupDoc, el: usize) -> Option<String> {
    let sibs = doc.siblings(el);
    let pos = sibs.iter().position(|&s| s == el)?;
    for &s in sibs[..pos].iter().rev() {
        let t = strip_moustache(&doc.subtree_text(s));
        if !t.trim().is_empty() {
            return Some(t);
        }
    }
    None
}

fn match_texts(tax: &Taxonomy, texts: &[impl AsRef<str>]) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for t in texts {
        out.extend(tax.match_ui_keywords(t.as_ref()));
    }
    out
}

/// Removes template interpolation blobs so their variable names do not get
/// mistaken for label text.
fn strip_moustache(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut rest = s;
    while let Some(open) = rest.find("{{") {
        out.push_str(&rest[..open]);
        match rest[open..].find("}}") {
            Some(close) => rest = &rest[open + close + 2..],
            None => return out,
        }
    }
    out.push_str(rest);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::load_package;
    use std::fs;
    use std::path::Path;

    fn write(root: &Path, rel: &str, content: &str) {
        let p = root.join(rel);
        fs::create_dir_all(p.parent().unwrap()).unwrap();
        fs::write(p, content).unwrap();
    }

    fn tax() -> Taxonomy {
        Taxonomy::load_default()
    }

    fn pkg_with_page(wxml: &str, js: &str) -> (tempfile::TempDir, Package) {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "app.json", r#"{ "pages": ["pages/p/p"] }"#);
        write(dir.path(), "app.js", "App({});");
        write(dir.path(), "pages/p/p.js", js);
        write(dir.path(), "pages/p/p.wxml", wxml);
        let pkg = load_package(dir.path()).unwrap();
        (dir, pkg)
    }

    #[test]
    fn placeholder_names_the_item() {
        let (_d, pkg) = pkg_with_page(
            r#"<input placeholder="please enter your ID card" bindinput="onId"/>"#,
            "Page({ onId: function (e) {} });",
        );
        let (sources, _) = detect_sources(&pkg, &tax());
        assert_eq!(sources.len(), 1);
        assert!(sources[0].items.contains("identity information_u"));
        assert_eq!(sources[0].handler.as_deref(), Some("onId"));
        assert!(!sources[0].via_form_submit);
    }

    #[test]
    fn non_privacy_placeholder_yields_nothing() {
        let (_d, pkg) = pkg_with_page(
            r#"<input placeholder="search products" bindinput="onSearch"/>"#,
            "Page({ onSearch: function (e) {} });",
        );
        let (sources, _) = detect_sources(&pkg, &tax());
        assert!(sources.is_empty());
    }

    #[test]
    fn preceding_sibling_label() {
        let (_d, pkg) = pkg_with_page(
            r#"<view><text>City</text><picker bindchange="onCity" range="{{cities}}"/></view>"#,
            "Page({ onCity: function (e) {} });",
        );
        let (sources, _) = detect_sources(&pkg, &tax());
        assert_eq!(sources.len(), 1);
        assert_eq!(
            sources[0].items.iter().collect::<Vec<_>>(),
            vec!["location information_u"]
        );
    }

    #[test]
    fn enclosing_label_element() {
        let (_d, pkg) = pkg_with_page(
            r#"<label><input bindinput="onPhone"/> phone number</label>"#,
            "Page({ onPhone: function (e) {} });",
        );
        let (sources, _) = detect_sources(&pkg, &tax());
        assert_eq!(sources.len(), 1);
        assert!(sources[0].items.contains("contact information_u"));
    }

    #[test]
    fn ancestor_preceding_text() {
        let (_d, pkg) = pkg_with_page(
            r#"<view><text>bank card number</text><view class="row"><input bindinput="onCard"/></view></view>"#,
            "Page({ onCard: function (e) {} });",
        );
        let (sources, _) = detect_sources(&pkg, &tax());
        assert_eq!(sources.len(), 1);
        assert!(sources[0].items.contains("property information_u"));
    }

    #[test]
    fn form_aggregates_unbound_fields() {
        let (_d, pkg) = pkg_with_page(
            r#"<form catchsubmit="onSubmit">
  <input name="who" placeholder="your name"/>
  <view><text>city</text><picker range="{{cities}}"/></view>
  <input placeholder="email address" bindinput="onEmail"/>
  <button form-type="submit">OK</button>
</form>"#,
            "Page({ onSubmit: function (e) {}, onEmail: function (e) {} });",
        );
        let (sources, _) = detect_sources(&pkg, &tax());
        assert_eq!(sources.len(), 2);
        let form = sources.iter().find(|s| s.via_form_submit).unwrap();
        assert_eq!(form.handler.as_deref(), Some("onSubmit"));
        assert_eq!(
            form.items.iter().collect::<Vec<_>>(),
            vec!["location information_u", "name_u"]
        );
        let email = sources.iter().find(|s| !s.via_form_submit).unwrap();
        assert_eq!(email.handler.as_deref(), Some("onEmail"));
        assert!(email.items.contains("contact information_u"));
    }

    #[test]
    fn component_usage_with_binding() {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path();
        write(root, "app.json", r#"{ "pages": ["pages/p/p"] }"#);
        write(root, "app.js", "App({});");
        write(root, "pages/p/p.js", "Page({ onPhone: function (e) {} });");
        write(root, "pages/p/p.wxml", r#"<phone-field bindchange="onPhone"/>"#);
        write(
            root,
            "pages/p/p.json",
            r#"{ "usingComponents": { "phone-field": "/components/phone/index" } }"#,
        );
        write(root, "components/phone/index.js", "Component({});");
        write(
            root,
            "components/phone/index.wxml",
            r#"<input placeholder="phone number" bindinput="onInput"/>"#,
        );
        let pkg = load_package(root).unwrap();
        let (sources, _) = detect_sources(&pkg, &tax());
        let usage = sources
            .iter()
            .find(|s| s.page_route == "pages/p/p")
            .expect("usage-site source");
        assert!(usage.items.contains("contact information_u"));
        assert_eq!(usage.handler.as_deref(), Some("onPhone"));
    }

    #[test]
    fn damaged_markup_is_skipped() {
        let bad = "</x>".repeat(30) + r#"<input placeholder="your name" bindinput="onName"/>"#;
        let (_d, pkg) = pkg_with_page(&bad, "Page({ onName: function (e) {} });");
        let (sources, warnings) = detect_sources(&pkg, &tax());
        assert!(sources.is_empty());
        assert!(warnings.iter().any(|w| w.contains("repairs")));
    }

    #[test]
    fn moustache_labels_are_ignored() {
        let (_d, pkg) = pkg_with_page(
            r#"<view><text>{{addressHint}}</text><input value="{{address}}" bindinput="onX"/></view>"#,
            "Page({ onX: function (e) {} });",
        );
        let (sources, _) = detect_sources(&pkg, &tax());
        assert!(sources.is_empty());
    }
}
