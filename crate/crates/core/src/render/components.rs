//! Custom components that wrap native input elements act as input elements
//! themselves at their usage sites. This pass computes, bottom-up, which
//! privacy items each component can collect: its own native input fields
//! plus anything contributed by nested components.

use std::collections::{BTreeMap, BTreeSet};

use crate::ingest::Package;
use crate::render::uip::{self, label_context_items};
use crate::taxonomy::Taxonomy;

/// Per component route: privacy items its subtree's input fields suggest.
/// Components with none are not input components and are dropped.
pub fn component_items(
    pkg: &Package,
    tax: &Taxonomy,
) -> (BTreeMap<String, BTreeSet<String>>, Vec<String>) {
    let mut memo: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    let mut warnings = Vec::new();
    let comp_routes: Vec<String> = pkg
        .pages
        .iter()
        .filter(|p| p.is_component)
        .map(|p| p.route.clone())
        .collect();
    for route in &comp_routes {
        let mut visiting = BTreeSet::new();
        resolve(pkg, tax, route, &mut memo, &mut visiting, &mut warnings);
    }
    memo.retain(|_, items| !items.is_empty());
    (memo, warnings)
}

fn resolve(
    pkg: &Package,
    tax: &Taxonomy,
    route: &str,
    memo: &mut BTreeMap<String, BTreeSet<String>>,
    visiting: &mut BTreeSet<String>,
    warnings: &mut Vec<String>,
) -> BTreeSet<String> {
    if let Some(done) = memo.get(route) {
        return done.clone();
    }
    if !visiting.insert(route.to_string()) {
        warnings.push(format!(
            "component cycle through {route}; treated as collecting nothing"
        ));
        return BTreeSet::new();
    }

    let mut items = BTreeSet::new();
    let page = pkg.page(route);
    if let (Some(page), Some(doc)) = (page, pkg.docs.get(route)) {
        for el in doc.elements() {
            let tag = doc.tag(el).unwrap_or_default().to_string();
            if uip::is_native_input(&tag) {
                // Inside a component every native input counts, bound or
                // not: the component's own wiring moves the value.
                items.extend(label_context_items(doc, el, tax));
            } else if let Some(dep_route) = page.using_components.get(&tag) {
                let dep_route = dep_route.clone();
                items.extend(resolve(pkg, tax, &dep_route, memo, visiting, warnings));
            }
        }
    }

    visiting.remove(route);
    memo.insert(route.to_string(), items.clone());
    items
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

    #[test]
    fn nested_components_union_their_fields() {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path();
        write(root, "app.json", r#"{ "pages": ["pages/p/p"] }"#);
        write(root, "app.js", "App({});");
        write(root, "pages/p/p.js", "Page({});");
        write(root, "pages/p/p.wxml", "<profile-form/>");
        write(
            root,
            "pages/p/p.json",
            r#"{ "usingComponents": { "profile-form": "/components/profile/index" } }"#,
        );
        write(
            root,
            "components/profile/index.js",
            "Component({ methods: {} });",
        );
        write(
            root,
            "components/profile/index.wxml",
            r#"<view><text>city</text><picker range="{{cities}}"/><phone-field/></view>"#,
        );
        write(
            root,
            "components/profile/index.json",
            r#"{ "usingComponents": { "phone-field": "../phone/index" } }"#,
        );
        write(root, "components/phone/index.js", "Component({});");
        write(
            root,
            "components/phone/index.wxml",
            r#"<input placeholder="phone number" bindinput="onInput"/>"#,
        );

        let pkg = load_package(root).unwrap();
        let (items, warnings) = component_items(&pkg, &tax());
        assert!(warnings.is_empty());
        let phone = &items["components/phone/index"];
        assert!(phone.contains("contact information_u"));
        let profile = &items["components/profile/index"];
        assert!(profile.contains("contact information_u"));
        assert!(profile.contains("location information_u"));
    }

    #[test]
    fn non_input_component_dropped_and_cycle_warned() {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path();
        write(root, "app.json", r#"{ "pages": ["pages/p/p"] }"#);
        write(root, "app.js", "App({});");
        write(root, "pages/p/p.js", "Page({});");
        write(root, "pages/p/p.wxml", "<card/><a-comp/>");
        write(
            root,
            "pages/p/p.json",
            r#"{ "usingComponents": { "card": "/widgets/card", "a-comp": "/widgets/a" } }"#,
        );
        write(root, "widgets/card.js", "Component({});");
        write(root, "widgets/card.wxml", "<view><text>hello</text></view>");
        write(root, "widgets/a.js", "Component({});");
        write(root, "widgets/a.wxml", "<b-comp/>");
        write(root, "widgets/a.json", r#"{ "usingComponents": { "b-comp": "/widgets/b" } }"#);
        write(root, "widgets/b.js", "Component({});");
        write(root, "widgets/b.wxml", "<a-comp/>");
        write(root, "widgets/b.json", r#"{ "usingComponents": { "a-comp": "/widgets/a" } }"#);

        let pkg = load_package(root).unwrap();
        let (items, warnings) = component_items(&pkg, &tax());
        assert!(!items.contains_key("widgets/card"));
        assert!(warnings.iter().any(|w| w.contains("cycle")));
    }
}
