//! Lifecycle-aware call graph over a loaded package.
//!
//! A synthetic entry models the framework: it launches the app
//! (`onLaunch`), opens every page (`onLoad`/`onShow`/`onReady`), runs the
//! top-level module code of the app and page scripts, and can fire any
//! handler bound in a page's markup. From there, edges follow direct calls,
//! `require` imports, callbacks handed to platform APIs, and closures
//! passed between user functions.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::ingest::{normalize_path, Package};
use crate::script::ast::{walk_stmts, Expr, FnId, Stmt};
use crate::script::model::ExportVal;

/// Graph node: the synthetic entry, a file's top-level code, or a function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Node {
    Entry,
    TopLevel(usize),
    Fn(usize, FnId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum EdgeKind {
    /// Statically resolved user call, including calls through `require`d
    /// modules and app/page method lookups.
    Direct,
    /// Framework-invoked lifecycle hook.
    Lifecycle,
    /// Markup event binding.
    Handler,
    /// `success`/`fail`/`complete` function handed to a platform API call.
    Callback,
    /// Any other function value passed into a call.
    Closure,
}

#[derive(Debug)]
pub struct CallGraph {
    pub edges: BTreeMap<Node, BTreeSet<(Node, EdgeKind)>>,
    pub reachable: BTreeSet<Node>,
    pub unresolved_calls: usize,
    pub unreached_functions: usize,
    pub warnings: Vec<String>,
}

impl CallGraph {
    pub fn edges_from(&self, n: Node) -> impl Iterator<Item = &(Node, EdgeKind)> {
        self.edges.get(&n).into_iter().flatten()
    }

    pub fn has_edge(&self, from: Node, to: Node, kind: EdgeKind) -> bool {
        self.edges
            .get(&from)
            .is_some_and(|s| s.contains(&(to, kind)))
    }

    /// Reachable function nodes, the set the dataflow stage analyzes.
    pub fn analyzed_fns(&self) -> impl Iterator<Item = Node> + '_ {
        self.reachable
            .iter()
            .copied()
            .filter(|n| matches!(n, Node::Fn(..) | Node::TopLevel(_)))
    }
}

/// Where a call lands.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CallTarget {
    Fn(usize, FnId),
    /// The `require('...')` expression itself: running a module's top level.
    Module(usize),
    /// Platform API: `wx.<name>` (leaf name kept).
    SubApi(String),
    /// Library or builtin the analysis does not model (method on an
    /// arbitrary object, `console.log`, `JSON.parse`, ...).
    External,
    /// Looked like user code but could not be resolved.
    Unresolved,
}

#[derive(Debug, Clone)]
enum Alias {
    App,
    Module(usize),
    ModuleMember(usize, String),
}

/// Precomputed name-resolution context shared by the graph builder and the
/// dataflow stage.
pub struct Resolver<'p> {
    pkg: &'p Package,
    file_scope: Vec<BTreeMap<String, FnId>>,
    aliases: Vec<BTreeMap<String, Alias>>,
}

const GLOBAL_BUILTINS: &[&str] = &[
    "parseInt", "parseFloat", "String", "Number", "Boolean", "Array", "Object",
    "Date", "RegExp", "Error", "Promise", "Symbol", "Map", "Set",
    "encodeURIComponent", "decodeURIComponent", "encodeURI", "decodeURI",
    "setTimeout", "setInterval", "clearTimeout", "clearInterval", "isNaN",
    "isFinite", "getCurrentPages", "Page", "App", "Component", "Behavior",
];

impl<'p> Resolver<'p> {
    pub fn new(pkg: &'p Package) -> Self {
        let mut file_scope = Vec::with_capacity(pkg.files.len());
        let mut aliases = Vec::with_capacity(pkg.files.len());
        for file in &pkg.files {
            let mut scope = BTreeMap::new();
            let mut al = BTreeMap::new();
            collect_scope(&file.ast.body, &mut scope);
            for stmt in &file.ast.body {
                let Stmt::VarDecl { decls, .. } = stmt else { continue };
                for d in decls {
                    let Some(init) = &d.init else { continue };
                    match &d.pattern {
                        crate::script::ast::Pattern::Ident(name) => {
                            if is_get_app_call(init) {
                                al.insert(name.clone(), Alias::App);
                            } else if let Some(target) = require_target(pkg, &file.path, init) {
                                al.insert(name.clone(), Alias::Module(target));
                            }
                        }
                        crate::script::ast::Pattern::Object(pairs) => {
                            if let Some(target) = require_target(pkg, &file.path, init) {
                                for (prop, binding) in pairs {
                                    al.insert(
                                        binding.clone(),
                                        Alias::ModuleMember(target, prop.clone()),
                                    );
                                }
                            }
                        }
                        crate::script::ast::Pattern::Array(_) => {}
                    }
                }
            }
            file_scope.push(scope);
            aliases.push(al);
        }
        Resolver {
            pkg,
            file_scope,
            aliases,
        }
    }

    pub fn package(&self) -> &'p Package {
        self.pkg
    }

    /// Resolves `require('<spec>')` to a file index.
    pub fn resolve_require(&self, from_file: &str, spec: &str) -> Option<usize> {
        resolve_require_path(self.pkg, from_file, spec)
    }

    /// Name lookup through the lexical chain of `fn_ctx`, then file scope.
    pub fn lookup_name(&self, file: usize, fn_ctx: Option<FnId>, name: &str) -> Option<CallTarget> {
        let ast = &self.pkg.files[file].ast;
        let mut ctx = fn_ctx;
        while let Some(id) = ctx {
            let f = ast.function(id);
            if f.params.iter().any(|p| p == name) {
                // A parameter shadows outer bindings; its value is dynamic.
                return Some(CallTarget::Unresolved);
            }
            let mut scope = BTreeMap::new();
            collect_scope(&f.body, &mut scope);
            if let Some(fid) = scope.get(name) {
                return Some(CallTarget::Fn(file, *fid));
            }
            ctx = f.parent;
        }
        if let Some(fid) = self.file_scope[file].get(name) {
            return Some(CallTarget::Fn(file, *fid));
        }
        match self.aliases[file].get(name) {
            Some(Alias::Module(m)) => Some(CallTarget::Module(*m)),
            Some(Alias::ModuleMember(m, prop)) => Some(self.module_member(*m, prop)),
            Some(Alias::App) => Some(CallTarget::External),
            None => None,
        }
    }

    fn module_member(&self, module: usize, prop: &str) -> CallTarget {
        let m = &self.pkg.files[module].model;
        match m.exports.get(prop) {
            Some(ExportVal::Fn(fid)) => CallTarget::Fn(module, *fid),
            Some(ExportVal::Alias(name)) => self
                .lookup_name(module, None, name)
                .unwrap_or(CallTarget::Unresolved),
            None => CallTarget::Unresolved,
        }
    }

    fn app_member(&self, prop: &str) -> CallTarget {
        let Some(reg) = &self.pkg.app_reg else {
            return CallTarget::Unresolved;
        };
        let Some(app_file) = self.pkg.file_index.get("app.js") else {
            return CallTarget::Unresolved;
        };
        if let Some(fid) = reg.fn_props.get(prop) {
            return CallTarget::Fn(*app_file, *fid);
        }
        if let Some(alias) = reg.fn_aliases.get(prop) {
            return self
                .lookup_name(*app_file, None, alias)
                .unwrap_or(CallTarget::Unresolved);
        }
        CallTarget::Unresolved
    }

    /// Resolves `this.<prop>` against the file's registration object.
    pub fn this_member(&self, file: usize, prop: &str) -> CallTarget {
        let Some((_, reg)) = &self.pkg.files[file].model.registration else {
            return CallTarget::Unresolved;
        };
        if let Some(fid) = reg.fn_props.get(prop) {
            return CallTarget::Fn(file, *fid);
        }
        if let Some(alias) = reg.fn_aliases.get(prop) {
            return self
                .lookup_name(file, None, alias)
                .unwrap_or(CallTarget::Unresolved);
        }
        CallTarget::Unresolved
    }

    /// Is `name`, inside `fn_ctx`, a `var that = this` style alias?
    pub fn is_this_alias(&self, file: usize, fn_ctx: Option<FnId>, name: &str) -> bool {
        if matches!(name, "that" | "self" | "_this" | "me") {
            // Only trust the conventional names when an enclosing scope
            // actually binds them to `this`.
            let ast = &self.pkg.files[file].ast;
            let mut ctx = fn_ctx;
            loop {
                let body: &[Stmt] = match ctx {
                    Some(id) => &ast.function(id).body,
                    None => &ast.body,
                };
                for stmt in body {
                    let Stmt::VarDecl { decls, .. } = stmt else { continue };
                    for d in decls {
                        if matches!(&d.pattern, crate::script::ast::Pattern::Ident(n) if n == name)
                            && matches!(d.init, Some(Expr::This { .. }))
                        {
                            return true;
                        }
                    }
                }
                match ctx {
                    Some(id) => ctx = ast.function(id).parent,
                    None => return false,
                }
            }
        }
        false
    }

    /// Full callee resolution for a call expression's callee.
    pub fn resolve_callee(&self, file: usize, fn_ctx: Option<FnId>, callee: &Expr) -> CallTarget {
        match callee {
            Expr::Ident { name, .. } => {
                if name == "require" || name == "getApp" {
                    // Handled at the call site (needs the arguments).
                    return CallTarget::External;
                }
                if let Some(t) = self.lookup_name(file, fn_ctx, name) {
                    return t;
                }
                if GLOBAL_BUILTINS.contains(&name.as_str()) {
                    return CallTarget::External;
                }
                CallTarget::Unresolved
            }
            Expr::Member { object, property, .. } => {
                let crate::script::ast::MemberProp::Static(prop) = property else {
                    return CallTarget::External;
                };
                match object.as_ref() {
                    Expr::Ident { name, .. } if name == "wx" => {
                        return CallTarget::SubApi(prop.clone());
                    }
                    Expr::This { .. } => return self.this_member(file, prop),
                    Expr::Ident { name, .. } => {
                        if self.is_this_alias(file, fn_ctx, name) {
                            return self.this_member(file, prop);
                        }
                        match self.aliases[file].get(name) {
                            Some(Alias::App) => return self.app_member(prop),
                            Some(Alias::Module(m)) => return self.module_member(*m, prop),
                            _ => {}
                        }
                        // `util.post` where util is a lexical binding of a
                        // module object is covered above; anything else is a
                        // method on a value the analysis does not model.
                        CallTarget::External
                    }
                    // getApp().foo(), require('x').foo()
                    Expr::Call { callee: inner, args, .. } => {
                        match inner.as_ident() {
                            Some("getApp") => self.app_member(prop),
                            Some("require") => {
                                let Some(spec) = args.first().and_then(|a| a.as_str_lit()) else {
                                    return CallTarget::Unresolved;
                                };
                                match self.resolve_require(&self.pkg.files[file].path, spec) {
                                    Some(m) => self.module_member(m, prop),
                                    None => CallTarget::Unresolved,
                                }
                            }
                            _ => CallTarget::External,
                        }
                    }
                    _ => CallTarget::External,
                }
            }
            Expr::Function { fn_id, .. } => CallTarget::Fn(file, *fn_id),
            _ => CallTarget::External,
        }
    }
}

fn collect_scope(body: &[Stmt], scope: &mut BTreeMap<String, FnId>) {
    for stmt in body {
        match stmt {
            Stmt::FunctionDecl { name, fn_id, .. } => {
                scope.entry(name.clone()).or_insert(*fn_id);
            }
            Stmt::VarDecl { decls, .. } => {
                for d in decls {
                    if let (crate::script::ast::Pattern::Ident(name), Some(Expr::Function { fn_id, .. })) =
                        (&d.pattern, &d.init)
                    {
                        scope.entry(name.clone()).or_insert(*fn_id);
                    }
                }
            }
            _ => {}
        }
    }
}

fn is_get_app_call(e: &Expr) -> bool {
    matches!(e, Expr::Call { callee, .. } if callee.as_ident() == Some("getApp"))
}

fn require_target(pkg: &Package, from_file: &str, e: &Expr) -> Option<usize> {
    let Expr::Call { callee, args, .. } = e else {
        return None;
    };
    if callee.as_ident() != Some("require") {
        return None;
    }
    let spec = args.first()?.as_str_lit()?;
    resolve_require_path(pkg, from_file, spec)
}

fn resolve_require_path(pkg: &Package, from_file: &str, spec: &str) -> Option<usize> {
    let base = if let Some(stripped) = spec.strip_prefix('/') {
        normalize_path(stripped)
    } else if spec.starts_with('.') {
        let dir = match from_file.rfind('/') {
            Some(i) => &from_file[..i],
            None => "",
        };
        normalize_path(&format!("{dir}/{spec}"))
    } else {
        normalize_path(spec)
    };
    for candidate in [
        base.clone(),
        format!("{base}.js"),
        format!("{base}/index.js"),
    ] {
        if let Some(idx) = pkg.file_index.get(&candidate) {
            return Some(*idx);
        }
    }
    None
}

pub fn build(pkg: &Package) -> CallGraph {
    let resolver = Resolver::new(pkg);
    let mut g = CallGraph {
        edges: BTreeMap::new(),
        reachable: BTreeSet::new(),
        unresolved_calls: 0,
        unreached_functions: 0,
        warnings: Vec::new(),
    };

    // Entry wiring: app launch, then each page's module code, lifecycle
    // hooks, and markup-bound handlers.
    if let Some(app_file) = pkg.file_index.get("app.js") {
        add_edge(&mut g, Node::Entry, Node::TopLevel(*app_file), EdgeKind::Direct);
        if let Some(reg) = &pkg.app_reg {
            if let Some(fid) = reg.fn_props.get("onLaunch") {
                add_edge(
                    &mut g,
                    Node::Entry,
                    Node::Fn(*app_file, *fid),
                    EdgeKind::Lifecycle,
                );
            }
        }
    }
    for page in &pkg.pages {
        let Some(file) = page.file else { continue };
        if !page.is_component {
            add_edge(&mut g, Node::Entry, Node::TopLevel(file), EdgeKind::Direct);
            for hook in ["onLoad", "onShow", "onReady"] {
                if let Some(fid) = page.lifecycle.get(hook) {
                    add_edge(&mut g, Node::Entry, Node::Fn(file, *fid), EdgeKind::Lifecycle);
                }
            }
        }
        // Handlers bound in this route's markup fire against this route's
        // own registration (components receive their own events).
        if let Some(doc) = pkg.docs.get(&page.route) {
            for el in doc.elements() {
                for (attr, value) in doc.attrs(el) {
                    let Some(_event) = binding_event(attr) else { continue };
                    if value.is_empty() || value.contains("{{") {
                        g.warnings.push(format!(
                            "{}: dynamic or empty handler binding `{attr}` cannot be resolved",
                            page.route
                        ));
                        continue;
                    }
                    match resolver.this_member(file, value) {
                        CallTarget::Fn(f, id) => {
                            add_edge(&mut g, Node::Entry, Node::Fn(f, id), EdgeKind::Handler);
                        }
                        _ => {
                            g.unresolved_calls += 1;
                            g.warnings.push(format!(
                                "{}: handler `{value}` bound by `{attr}` not found",
                                page.route
                            ));
                        }
                    }
                }
            }
        }
    }

    // Call edges from every file's top level and every function.
    for (file_idx, file) in pkg.files.iter().enumerate() {
        scan_body(
            &resolver,
            &mut g,
            pkg,
            file_idx,
            None,
            &file.ast.body,
            Node::TopLevel(file_idx),
        );
        for (fn_id, f) in file.ast.functions.iter().enumerate() {
            scan_body(
                &resolver,
                &mut g,
                pkg,
                file_idx,
                Some(fn_id),
                &f.body,
                Node::Fn(file_idx, fn_id),
            );
        }
    }

    // Reachability from the entry.
    let mut queue: VecDeque<Node> = VecDeque::new();
    g.reachable.insert(Node::Entry);
    queue.push_back(Node::Entry);
    while let Some(n) = queue.pop_front() {
        let Some(outs) = g.edges.get(&n) else { continue };
        let next: Vec<Node> = outs.iter().map(|(t, _)| *t).collect();
        for t in next {
            if g.reachable.insert(t) {
                queue.push_back(t);
            }
        }
    }

    let total_fns: usize = pkg.files.iter().map(|f| f.ast.functions.len()).sum();
    let reached_fns = g
        .reachable
        .iter()
        .filter(|n| matches!(n, Node::Fn(..)))
        .count();
    g.unreached_functions = total_fns - reached_fns;

    g
}

/// Event-binding attributes: `bindtap`, `catchsubmit`, `bind:change`,
/// `capture-bind:tap`, `mut-bind:tap`. Returns the event name.
pub fn binding_event(attr: &str) -> Option<&str> {
    for prefix in ["capture-bind", "capture-catch", "mut-bind", "bind", "catch"] {
        if let Some(rest) = attr.strip_prefix(prefix) {
            let rest = rest.strip_prefix(':').unwrap_or(rest);
            if !rest.is_empty()
                && rest
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
            {
                return Some(rest);
            }
        }
    }
    None
}

fn add_edge(g: &mut CallGraph, from: Node, to: Node, kind: EdgeKind) {
    g.edges.entry(from).or_default().insert((to, kind));
}

fn scan_body(
    resolver: &Resolver,
    g: &mut CallGraph,
    pkg: &Package,
    file: usize,
    fn_ctx: Option<FnId>,
    body: &[Stmt],
    from: Node,
) {
    walk_stmts(body, &mut |e| {
        let (callee, args) = match e {
            Expr::Call { callee, args, .. } | Expr::New { callee, args, .. } => (callee, args),
            _ => return,
        };

        // Registration objects are wired through the entry (lifecycle,
        // handlers), never as closures: an unbound method stays unreached.
        if matches!(
            callee.as_ident(),
            Some("App" | "Page" | "Component" | "Behavior")
        ) {
            return;
        }

        // require('x') runs the module's top level.
        if callee.as_ident() == Some("require") {
            if let Some(spec) = args.first().and_then(|a| a.as_str_lit()) {
                match resolver.resolve_require(&pkg.files[file].path, spec) {
                    Some(m) => add_edge(g, from, Node::TopLevel(m), EdgeKind::Direct),
                    None => {
                        g.unresolved_calls += 1;
                        g.warnings.push(format!(
                            "{}: require target `{spec}` not found in package",
                            pkg.files[file].path
                        ));
                    }
                }
            }
            return;
        }

        let target = resolver.resolve_callee(file, fn_ctx, callee);
        let callee_is_member = matches!(callee.as_ref(), Expr::Member { .. });
        match &target {
            CallTarget::Fn(f, id) => add_edge(g, from, Node::Fn(*f, *id), EdgeKind::Direct),
            CallTarget::Module(m) => add_edge(g, from, Node::TopLevel(*m), EdgeKind::Direct),
            CallTarget::SubApi(_) | CallTarget::External => {}
            CallTarget::Unresolved => g.unresolved_calls += 1,
        }

        // Function values flowing into the call: callbacks on platform API
        // option objects, closures everywhere else.
        for arg in args {
            match arg {
                Expr::Function { fn_id, .. } => {
                    add_edge(g, from, Node::Fn(file, *fn_id), EdgeKind::Closure);
                }
                Expr::Ident { name, .. } => {
                    if let Some(CallTarget::Fn(f, id)) = resolver.lookup_name(file, fn_ctx, name) {
                        add_edge(g, from, Node::Fn(f, id), EdgeKind::Closure);
                    }
                }
                Expr::Object { props, .. } => {
                    for (key, value) in props {
                        let Expr::Function { fn_id, .. } = value else { continue };
                        let kind = match key.as_static() {
                            Some("success" | "fail" | "complete") if callee_is_member => {
                                EdgeKind::Callback
                            }
                            _ => EdgeKind::Closure,
                        };
                        add_edge(g, from, Node::Fn(file, *fn_id), kind);
                    }
                    // Identifier-valued callback props also keep their
                    // targets reachable.
                    for (key, value) in props {
                        if let (Some(_), Expr::Ident { name, .. }) = (key.as_static(), value) {
                            if let Some(CallTarget::Fn(f, id)) =
                                resolver.lookup_name(file, fn_ctx, name)
                            {
                                add_edge(g, from, Node::Fn(f, id), EdgeKind::Closure);
                            }
                        }
                    }
                }
                _ => {}
            }
        }
    });
}
