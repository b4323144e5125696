//! Extracts the app/page/component registration model from a parsed script:
//! which properties of the registration object are functions (lifecycle
//! hooks, event handlers), which fields the page's data object declares,
//! and what the file exports for `require` consumers.

use std::collections::{BTreeMap, BTreeSet};

use super::ast::{Expr, FnId, PropKey, ScriptAst, Span, Stmt};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegKind {
    App,
    Page,
    Component,
}

impl RegKind {
    pub fn label(self) -> &'static str {
        match self {
            RegKind::App => "App",
            RegKind::Page => "Page",
            RegKind::Component => "Component",
        }
    }
}

/// One `App({...})` / `Page({...})` / `Component({...})` call.
#[derive(Debug, Default)]
pub struct Registration {
    /// Function-literal properties, flattened: `methods`, `lifetimes` and
    /// `pageLifetimes` groups contribute their members by name.
    pub fn_props: BTreeMap<String, FnId>,
    /// Properties whose value is a plain identifier, e.g. `onTap: handler`.
    pub fn_aliases: BTreeMap<String, String>,
    /// Static keys of the `data` (or `globalData`) object.
    pub data_fields: BTreeSet<String>,
    pub span: Span,
}

#[derive(Debug, Clone)]
pub enum ExportVal {
    Fn(FnId),
    /// Exported name bound to a top-level identifier; resolved against the
    /// file scope when the importer calls it.
    Alias(String),
}

/// Per-file extraction result.
#[derive(Debug, Default)]
pub struct ScriptModel {
    pub registration: Option<(RegKind, Registration)>,
    pub exports: BTreeMap<String, ExportVal>,
    /// `module.exports = function (...) {...}`
    pub whole_export: Option<FnId>,
    pub warnings: Vec<String>,
}

/// Page lifecycle hooks the framework invokes on its own; everything else
/// function-valued on a page is an event handler.
pub const PAGE_LIFECYCLE: &[&str] = &["onLoad", "onShow", "onReady", "onHide", "onUnload"];

pub fn extract(ast: &ScriptAst) -> ScriptModel {
    let mut m = ScriptModel::default();
    for stmt in &ast.body {
        let Stmt::Expr(e) = stmt else { continue };
        scan_top_expr(e, ast, &mut m);
    }
    m
}

fn scan_top_expr(e: &Expr, ast: &ScriptAst, m: &mut ScriptModel) {
    match e {
        Expr::Call { callee, args, span } => {
            let kind = match callee.as_ident() {
                Some("App") => RegKind::App,
                Some("Page") => RegKind::Page,
                Some("Component") => RegKind::Component,
                _ => return,
            };
            let Some(obj @ Expr::Object { .. }) = args.first() else {
                m.warnings.push(format!(
                    "{} registration without object literal at byte {}",
                    kind.label(),
                    span.start
                ));
                return;
            };
            if let Some((prev, _)) = &m.registration {
                m.warnings.push(format!(
                    "duplicate {} registration at byte {} ignored (file already registers {})",
                    kind.label(),
                    span.start,
                    prev.label()
                ));
                return;
            }
            let reg = build_registration(kind, obj, *span, &mut m.warnings);
            m.registration = Some((kind, reg));
            let _ = ast;
        }
        Expr::Assign { op: "=", target, value, .. } => {
            let Some(path) = target.static_path() else { return };
            match path.as_slice() {
                ["module", "exports"] => match value.as_ref() {
                    Expr::Function { fn_id, .. } => m.whole_export = Some(*fn_id),
                    Expr::Object { props, .. } => {
                        for (k, v) in props {
                            let Some(name) = k.as_static() else { continue };
                            match v {
                                Expr::Function { fn_id, .. } => {
                                    m.exports.insert(name.to_string(), ExportVal::Fn(*fn_id));
                                }
                                Expr::Ident { name: alias, .. } => {
                                    m.exports
                                        .insert(name.to_string(), ExportVal::Alias(alias.clone()));
                                }
                                _ => {}
                            }
                        }
                    }
                    Expr::Ident { name, .. } => {
                        // module.exports = localThing; exposed under its own
                        // name for member-call resolution.
                        m.exports
                            .insert(name.clone(), ExportVal::Alias(name.clone()));
                    }
                    _ => {}
                },
                ["module", "exports", name] | ["exports", name] => match value.as_ref() {
                    Expr::Function { fn_id, .. } => {
                        m.exports.insert(name.to_string(), ExportVal::Fn(*fn_id));
                    }
                    Expr::Ident { name: alias, .. } => {
                        m.exports
                            .insert(name.to_string(), ExportVal::Alias(alias.clone()));
                    }
                    _ => {}
                },
                _ => {}
            }
        }
        Expr::Sequence { exprs, .. } => {
            for e in exprs {
                scan_top_expr(e, ast, m);
            }
        }
        _ => {}
    }
}

fn build_registration(
    kind: RegKind,
    obj: &Expr,
    span: Span,
    warnings: &mut Vec<String>,
) -> Registration {
    let mut reg = Registration {
        span,
        ..Registration::default()
    };
    let Expr::Object { props, .. } = obj else {
        return reg;
    };
    collect_props(kind, props, &mut reg, warnings, false);
    reg
}

fn collect_props(
    kind: RegKind,
    props: &[(PropKey, Expr)],
    reg: &mut Registration,
    warnings: &mut Vec<String>,
    nested: bool,
) {
    for (key, value) in props {
        let Some(name) = key.as_static() else {
            match key {
                PropKey::Computed(e) => warnings.push(format!(
                    "computed property key in {} registration at byte {}: handler cannot be resolved",
                    kind.label(),
                    e.span().start
                )),
                PropKey::Spread => warnings.push(format!(
                    "spread in {} registration at byte {}: members cannot be resolved",
                    kind.label(),
                    value.span().start
                )),
                _ => unreachable!(),
            }
            continue;
        };
        match value {
            Expr::Function { fn_id, .. } => {
                if reg.fn_props.contains_key(name) {
                    warnings.push(format!(
                        "duplicate property `{name}` in {} registration: first definition wins",
                        kind.label()
                    ));
                } else {
                    reg.fn_props.insert(name.to_string(), *fn_id);
                }
            }
            Expr::Object { props: inner, .. }
                if !nested
                    && matches!(name, "methods" | "lifetimes" | "pageLifetimes") =>
            {
                collect_props(kind, inner, reg, warnings, true);
            }
            Expr::Object { props: inner, .. }
                if !nested && matches!(name, "data" | "globalData") =>
            {
                for (k, _) in inner {
                    match k.as_static() {
                        Some(f) => {
                            reg.data_fields.insert(f.to_string());
                        }
                        None => warnings.push(format!(
                            "non-static key in {} `{name}` object",
                            kind.label()
                        )),
                    }
                }
            }
            Expr::Ident { name: alias, .. } => {
                reg.fn_aliases.insert(name.to_string(), alias.clone());
            }
            _ => {}
        }
    }
}
