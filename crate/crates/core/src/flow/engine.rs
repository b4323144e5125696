//! Fixpoint taint propagation over abstract storage slots.
//!
//! A slot is a variable binding (per declaring scope), a page data field, or
//! a function's return channel. Taint sets only grow, so iterating all
//! reachable code until nothing changes terminates.

use std::collections::{BTreeMap, BTreeSet};

use crate::ingest::Package;
use crate::render::uip::UipSource;
use crate::script::ast::{Expr, FnId, MemberProp, Pattern, PropKey, Span, Stmt};
use crate::script::callgraph::{CallGraph, CallTarget, Node, Resolver};
use crate::taxonomy::{CallbackStyle, SinkKind, Taxonomy};

use super::{FlowResult, FlowSource, PathStep, SinkHit, SourceKind, TaintFlow};

const MAX_ROUNDS: usize = 64;

/// Properties of a sink call's options object that leave the device.
const PAYLOAD_PROPS: &[&str] = &["url", "data", "header", "message", "msg", "filePath", "formData"];

/// Factory APIs whose result is addressed by a class name in the sink table.
const FACTORY_CLASS: &[(&str, &str)] = &[
    ("connectSocket", "SocketTask"),
    ("createTCPSocket", "TCPSocket"),
    ("createUDPSocket", "UDPSocket"),
];

const GLOBAL_PASSTHROUGH: &[&str] = &[
    "String",
    "Number",
    "Boolean",
    "parseInt",
    "parseFloat",
    "encodeURIComponent",
    "decodeURIComponent",
    "encodeURI",
    "decodeURI",
];

const STATIC_PASSTHROUGH: &[&str] = &[
    "JSON.stringify",
    "JSON.parse",
    "Object.assign",
    "Object.keys",
    "Object.values",
    "Object.entries",
    "Array.from",
];

/// Methods whose result carries the receiver's (and arguments') taint.
const METHOD_PASSTHROUGH: &[&str] = &[
    "join", "concat", "toString", "slice", "substring", "substr", "trim", "toLowerCase",
    "toUpperCase", "map", "filter", "reduce", "split", "replace", "replaceAll", "padStart",
    "padEnd", "sort", "reverse",
];

/// Methods that fold their arguments into the receiver.
const METHOD_MUTATORS: &[&str] = &["push", "unshift", "splice"];

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum Slot {
    /// A variable, keyed by the scope that declares it (None = file top
    /// level, which also absorbs undeclared names).
    Var {
        file: usize,
        fn_ctx: Option<FnId>,
        name: String,
    },
    /// Page/component state: `data` fields and own `this.<x>` properties.
    Field { file: usize, name: String },
    /// A function's return value.
    Ret { file: usize, fn_id: FnId },
}

type Ctx = (usize, Option<FnId>);
type Taint = BTreeSet<usize>;

struct Engine<'a> {
    pkg: &'a Package,
    tax: &'a Taxonomy,
    resolver: Resolver<'a>,
    /// Names declared per file, per function (params live on FunctionData).
    decls: Vec<Vec<BTreeSet<String>>>,
    sources: Vec<FlowSource>,
    /// Memoized api-source per call site.
    source_sites: BTreeMap<(usize, u32), usize>,
    taint: BTreeMap<Slot, Taint>,
    /// Which platform factory produced the value in a slot.
    origins: BTreeMap<Slot, BTreeSet<String>>,
    /// (slot, source) -> (slot it came from, file, span) at first arrival;
    /// backbone of flow path reconstruction.
    prov: BTreeMap<(Slot, usize), (Option<Slot>, usize, Span)>,
    flows: BTreeMap<(usize, usize, u32, String), TaintFlow>,
    /// Slots read while evaluating the current statement.
    read_log: Vec<(Slot, Taint)>,
    dropped_sites: BTreeSet<(usize, u32)>,
    warnings: Vec<String>,
    warned: BTreeSet<String>,
    changed: bool,
    cur: Ctx,
}

pub(super) fn run(
    pkg: &Package,
    tax: &Taxonomy,
    cg: &CallGraph,
    uip_sources: &[UipSource],
) -> FlowResult {
    let mut ctxs: Vec<Ctx> = cg
        .reachable
        .iter()
        .filter_map(|n| match n {
            Node::TopLevel(f) => Some((*f, None)),
            Node::Fn(f, id) => Some((*f, Some(*id))),
            Node::Entry => None,
        })
        .collect();
    ctxs.sort();
    ctxs.dedup();

    let decls = pkg
        .files
        .iter()
        .map(|f| {
            f.ast
                .functions
                .iter()
                .map(|func| {
                    let mut names = BTreeSet::new();
                    collect_decls(&func.body, &mut names);
                    names
                })
                .collect()
        })
        .collect();

    let mut eng = Engine {
        pkg,
        tax,
        resolver: Resolver::new(pkg),
        decls,
        sources: Vec::new(),
        source_sites: BTreeMap::new(),
        taint: BTreeMap::new(),
        origins: BTreeMap::new(),
        prov: BTreeMap::new(),
        flows: BTreeMap::new(),
        read_log: Vec::new(),
        dropped_sites: BTreeSet::new(),
        warnings: Vec::new(),
        warned: BTreeSet::new(),
        changed: false,
        cur: (0, None),
    };

    eng.seed_uip(uip_sources);

    let mut rounds = 0;
    loop {
        eng.changed = false;
        for &ctx in &ctxs {
            eng.exec_ctx(ctx);
        }
        rounds += 1;
        if !eng.changed {
            break;
        }
        if rounds >= MAX_ROUNDS {
            eng.warnings
                .push("taint propagation hit its iteration bound; results may be incomplete".into());
            break;
        }
    }

    FlowResult {
        flows: eng.flows.into_values().collect(),
        sources: eng.sources,
        dropped_at_calls: eng.dropped_sites.len(),
        warnings: eng.warnings,
    }
}

fn collect_decls(body: &[Stmt], names: &mut BTreeSet<String>) {
    for s in body {
        match s {
            Stmt::VarDecl { decls, .. } => {
                for d in decls {
                    match &d.pattern {
                        Pattern::Ident(n) => {
                            names.insert(n.clone());
                        }
                        Pattern::Object(pairs) => {
                            names.extend(pairs.iter().map(|(_, b)| b.clone()));
                        }
                        Pattern::Array(elems) => {
                            names.extend(elems.iter().flatten().cloned());
                        }
                    }
                }
            }
            Stmt::FunctionDecl { name, .. } => {
                names.insert(name.clone());
            }
            Stmt::ForIn {
                decl_name, body, ..
            } => {
                names.insert(decl_name.clone());
                collect_decls(body, names);
            }
            Stmt::If {
                then_body,
                else_body,
                ..
            } => {
                collect_decls(then_body, names);
                collect_decls(else_body, names);
            }
            Stmt::While { body, .. } | Stmt::DoWhile { body, .. } | Stmt::Block { body, .. } => {
                collect_decls(body, names);
            }
            Stmt::For { init, body, .. } => {
                if let Some(init) = init {
                    collect_decls(std::slice::from_ref(init), names);
                }
                collect_decls(body, names);
            }
            Stmt::TryCatch {
                body,
                catch_param,
                catch_body,
                finally_body,
                ..
            } => {
                collect_decls(body, names);
                if let Some(p) = catch_param {
                    names.insert(p.clone());
                }
                collect_decls(catch_body, names);
                collect_decls(finally_body, names);
            }
            Stmt::Switch { cases, .. } => {
                for c in cases {
                    collect_decls(&c.body, names);
                }
            }
            _ => {}
        }
    }
}

impl<'a> Engine<'a> {
    fn file_path(&self, file: usize) -> String {
        self.pkg.files[file].path.clone()
    }

    fn warn_once(&mut self, msg: String) {
        if self.warned.insert(msg.clone()) {
            self.warnings.push(msg);
        }
    }

    fn seed_uip(&mut self, uip_sources: &[UipSource]) {
        for s in uip_sources {
            let Some(handler) = &s.handler else { continue };
            let Some(page) = self.pkg.page(&s.page_route) else { continue };
            let Some(file) = page.file else {
                self.warnings
                    .push(format!("{}: no script backs this route", s.page_route));
                continue;
            };
            let kind = if s.via_form_submit {
                SourceKind::FormSubmit
            } else {
                SourceKind::UipHandler
            };
            let idx = self.sources.len();
            self.sources.push(FlowSource {
                kind,
                api: None,
                route: Some(s.page_route.clone()),
                file: format!("{}.wxml", s.page_route),
                span: s.span,
                items: s.items.clone(),
            });
            match self.resolver.this_member(file, handler) {
                CallTarget::Fn(f2, fid) => {
                    let fspan = self.pkg.files[f2].ast.function(fid).span;
                    self.cur = (f2, Some(fid));
                    self.seed_param0(f2, fid, idx, fspan);
                }
                _ => self.warnings.push(format!(
                    "{}: input handler `{handler}` not found; its data cannot be followed",
                    s.page_route
                )),
            }
        }
    }

    fn seed_param0(&mut self, file: usize, fn_id: FnId, src: usize, span: Span) {
        let Some(p0) = self.pkg.files[file].ast.function(fn_id).params.first() else {
            return;
        };
        let slot = Slot::Var {
            file,
            fn_ctx: Some(fn_id),
            name: p0.clone(),
        };
        if self.taint.entry(slot.clone()).or_default().insert(src) {
            self.changed = true;
            let at = self.cur.0;
            self.prov.entry((slot, src)).or_insert((None, at, span));
        }
    }

    fn exec_ctx(&mut self, ctx: Ctx) {
        self.cur = ctx;
        let pkg = self.pkg;
        let body: &'a [Stmt] = match ctx.1 {
            None => &pkg.files[ctx.0].ast.body,
            Some(id) => &pkg.files[ctx.0].ast.function(id).body,
        };
        self.exec_body(body);
    }

    fn exec_body(&mut self, body: &'a [Stmt]) {
        for s in body {
            self.exec_stmt(s);
        }
    }

    fn exec_stmt(&mut self, s: &'a Stmt) {
        self.read_log.clear();
        match s {
            Stmt::Expr(e) => {
                self.eval(e);
            }
            Stmt::VarDecl { decls, .. } => {
                for d in decls {
                    let t = d.init.as_ref().map(|e| self.eval(e)).unwrap_or_default();
                    let og = d
                        .init
                        .as_ref()
                        .map(|e| self.origins_of(e))
                        .unwrap_or_default();
                    match &d.pattern {
                        Pattern::Ident(name) => {
                            let slot = self.var_slot(name);
                            self.union_into(slot.clone(), &t, d.span);
                            self.add_origins(slot, og);
                        }
                        Pattern::Object(pairs) => {
                            for (_, binding) in pairs {
                                let slot = self.var_slot(binding);
                                self.union_into(slot, &t, d.span);
                            }
                        }
                        Pattern::Array(elems) => {
                            for name in elems.iter().flatten() {
                                let slot = self.var_slot(name);
                                self.union_into(slot, &t, d.span);
                            }
                        }
                    }
                }
            }
            Stmt::FunctionDecl { .. } => {}
            Stmt::Return { value, span } => {
                if let Some(e) = value {
                    let t = self.eval(e);
                    if let (file, Some(fid)) = self.cur {
                        self.union_into(Slot::Ret { file, fn_id: fid }, &t, *span);
                    }
                }
            }
            Stmt::If {
                cond,
                then_body,
                else_body,
                ..
            } => {
                self.eval(cond);
                self.exec_body(then_body);
                self.exec_body(else_body);
            }
            Stmt::While { cond, body, .. } => {
                self.eval(cond);
                self.exec_body(body);
            }
            Stmt::DoWhile { body, cond, .. } => {
                self.exec_body(body);
                self.eval(cond);
            }
            Stmt::For {
                init,
                cond,
                update,
                body,
                ..
            } => {
                if let Some(init) = init {
                    self.exec_stmt(init);
                }
                if let Some(c) = cond {
                    self.eval(c);
                }
                if let Some(u) = update {
                    self.eval(u);
                }
                self.exec_body(body);
            }
            Stmt::ForIn {
                decl_name,
                object,
                body,
                span,
            } => {
                let t = self.eval(object);
                let slot = self.var_slot(decl_name);
                self.union_into(slot, &t, *span);
                self.exec_body(body);
            }
            Stmt::Block { body, .. } => self.exec_body(body),
            Stmt::TryCatch {
                body,
                catch_body,
                finally_body,
                ..
            } => {
                self.exec_body(body);
                self.exec_body(catch_body);
                self.exec_body(finally_body);
            }
            Stmt::Switch { disc, cases, .. } => {
                self.eval(disc);
                for c in cases {
                    if let Some(t) = &c.test {
                        self.eval(t);
                    }
                    self.exec_body(&c.body);
                }
            }
            Stmt::Throw { value, .. } => {
                self.eval(value);
            }
            Stmt::Opaque {
                reads,
                writes,
                span,
                ..
            } => {
                let mut t = Taint::new();
                for r in reads {
                    let slot = self.var_slot(r);
                    t.extend(self.read_slot(slot));
                }
                for w in writes {
                    let slot = self.var_slot(w);
                    self.union_into(slot, &t, *span);
                }
            }
            Stmt::Break(_) | Stmt::Continue(_) | Stmt::Empty(_) => {}
        }
    }

    fn eval(&mut self, e: &'a Expr) -> Taint {
        match e {
            Expr::Ident { name, .. } => {
                let slot = self.var_slot(name);
                self.read_slot(slot)
            }
            Expr::This { .. } | Expr::Literal { .. } | Expr::Function { .. } => Taint::new(),
            Expr::Template { parts, .. } => {
                let mut t = Taint::new();
                for p in parts {
                    if let crate::script::ast::TplPart::Expr(e) = p {
                        t.extend(self.eval(e));
                    }
                }
                t
            }
            Expr::Call { callee, args, span } => self.handle_call(callee, args, *span),
            Expr::New { args, .. } => {
                let mut t = Taint::new();
                for a in args {
                    t.extend(self.eval(a));
                }
                t
            }
            Expr::Member { .. } => self.eval_member(e),
            Expr::Assign {
                op,
                target,
                value,
                span,
            } => {
                let mut t = self.eval(value);
                if *op != "=" {
                    t.extend(self.eval(target));
                }
                let og = self.origins_of(value);
                self.assign_to(target, &t, *span, og);
                t
            }
            Expr::Object { props, .. } => {
                let mut t = Taint::new();
                for (key, value) in props {
                    if let PropKey::Computed(k) = key {
                        t.extend(self.eval(k));
                    }
                    t.extend(self.eval(value));
                }
                t
            }
            Expr::Array { elems, .. } => {
                let mut t = Taint::new();
                for el in elems {
                    t.extend(self.eval(el));
                }
                t
            }
            Expr::Binary { left, right, .. } => {
                let mut t = self.eval(left);
                t.extend(self.eval(right));
                t
            }
            Expr::Unary { operand, .. } | Expr::Update { operand, .. } => self.eval(operand),
            Expr::Ternary {
                cond,
                then_expr,
                else_expr,
                ..
            } => {
                let mut t = self.eval(cond);
                t.extend(self.eval(then_expr));
                t.extend(self.eval(else_expr));
                t
            }
            Expr::Sequence { exprs, .. } => {
                let mut last = Taint::new();
                for e in exprs {
                    last = self.eval(e);
                }
                last
            }
            Expr::Spread { expr, .. } => self.eval(expr),
        }
    }

    fn eval_member(&mut self, e: &'a Expr) -> Taint {
        let Expr::Member {
            object, property, ..
        } = e
        else {
            return Taint::new();
        };
        if let Some(path) = e.static_path() {
            if let Some(slot) = self.field_path_slot(&path) {
                return self.read_slot(slot);
            }
            // `this.data` as a whole: every field of this page.
            if path.len() == 2 && self.path_head_is_this(&path) && path[1] == "data" {
                let file = self.cur.0;
                let fields: Vec<Slot> = self
                    .taint
                    .keys()
                    .filter(|s| matches!(s, Slot::Field { file: f, .. } if *f == file))
                    .cloned()
                    .collect();
                let mut t = Taint::new();
                for slot in fields {
                    t.extend(self.read_slot(slot));
                }
                return t;
            }
        }
        match property {
            MemberProp::Computed(idx) => {
                let mut t = self.eval(object);
                t.extend(self.eval(idx));
                t
            }
            MemberProp::Static(_) => self.eval(object),
        }
    }

    fn path_head_is_this(&self, path: &[&str]) -> bool {
        path.first().is_some_and(|h| {
            *h == "this" || self.resolver.is_this_alias(self.cur.0, self.cur.1, h)
        })
    }

    /// `this.data.x` (any deeper suffix) and `this.x` instance properties.
    fn field_path_slot(&self, path: &[&str]) -> Option<Slot> {
        if !self.path_head_is_this(path) || path.len() < 2 {
            return None;
        }
        let file = self.cur.0;
        if path[1] == "data" {
            return path.get(2).map(|f| Slot::Field {
                file,
                name: (*f).to_string(),
            });
        }
        if path[1] == "setData" {
            return None;
        }
        Some(Slot::Field {
            file,
            name: format!("this.{}", path[1]),
        })
    }

    fn assign_to(&mut self, target: &'a Expr, t: &Taint, span: Span, origins: BTreeSet<String>) {
        match target {
            Expr::Ident { name, .. } => {
                let slot = self.var_slot(name);
                self.union_into(slot.clone(), t, span);
                self.add_origins(slot, origins);
            }
            Expr::Member { .. } => {
                if let Some(path) = target.static_path() {
                    if let Some(slot) = self.field_path_slot(&path) {
                        self.union_into(slot, t, span);
                        return;
                    }
                }
                if let Some(slot) = self.base_slot(target) {
                    self.union_into(slot, t, span);
                }
            }
            _ => {}
        }
    }

    /// Innermost variable a member chain hangs off: `obj.a.b` gives obj's
    /// slot, so writes into it make the whole object tainted.
    fn base_slot(&self, e: &Expr) -> Option<Slot> {
        match e {
            Expr::Ident { name, .. } => Some(self.var_slot(name)),
            Expr::Member { object, .. } => {
                if let Some(path) = object.static_path() {
                    if let Some(slot) = self.field_path_slot(&path) {
                        return Some(slot);
                    }
                }
                self.base_slot(object)
            }
            _ => None,
        }
    }

    fn var_slot(&self, name: &str) -> Slot {
        let (file, fn_ctx) = self.cur;
        let ast = &self.pkg.files[file].ast;
        let mut ctx = fn_ctx;
        while let Some(id) = ctx {
            let f = ast.function(id);
            if f.params.iter().any(|p| p == name) || self.decls[file][id].contains(name) {
                return Slot::Var {
                    file,
                    fn_ctx: Some(id),
                    name: name.to_string(),
                };
            }
            ctx = f.parent;
        }
        Slot::Var {
            file,
            fn_ctx: None,
            name: name.to_string(),
        }
    }

    fn read_slot(&mut self, slot: Slot) -> Taint {
        let t = self.taint.get(&slot).cloned().unwrap_or_default();
        self.read_log.push((slot, t.clone()));
        t
    }

    fn union_into(&mut self, slot: Slot, set: &Taint, span: Span) {
        if set.is_empty() {
            return;
        }
        let file = self.cur.0;
        for &src in set {
            if self.taint.entry(slot.clone()).or_default().insert(src) {
                self.changed = true;
                let from = self
                    .read_log
                    .iter()
                    .find(|(s, t)| *s != slot && t.contains(&src))
                    .map(|(s, _)| s.clone());
                self.prov.entry((slot.clone(), src)).or_insert((from, file, span));
            }
        }
    }

    fn add_origins(&mut self, slot: Slot, origins: BTreeSet<String>) {
        if origins.is_empty() {
            return;
        }
        let entry = self.origins.entry(slot).or_default();
        for o in origins {
            if entry.insert(o) {
                self.changed = true;
            }
        }
    }

    /// Which platform factory could have produced this value.
    fn origins_of(&self, e: &Expr) -> BTreeSet<String> {
        match e {
            Expr::Ident { name, .. } => self
                .origins
                .get(&self.var_slot(name))
                .cloned()
                .unwrap_or_default(),
            Expr::Call { callee, .. } => {
                let Some(path) = callee.static_path() else {
                    return BTreeSet::new();
                };
                if path.len() == 2 && path[0] == "wx" {
                    factory_names(path[1])
                } else {
                    BTreeSet::new()
                }
            }
            Expr::Assign { value, .. } => self.origins_of(value),
            Expr::Ternary {
                then_expr,
                else_expr,
                ..
            } => {
                let mut o = self.origins_of(then_expr);
                o.extend(self.origins_of(else_expr));
                o
            }
            _ => BTreeSet::new(),
        }
    }

    fn handle_call(&mut self, callee: &'a Expr, args: &'a [Expr], span: Span) -> Taint {
        let (file, fn_ctx) = self.cur;

        if let Expr::Member {
            object,
            property: MemberProp::Static(p),
            ..
        } = callee
        {
            if p == "setData" && self.is_this_expr(object) {
                self.do_set_data(args, span);
                return Taint::new();
            }
        }

        let arg_taints: Vec<Taint> = args.iter().map(|a| self.eval(a)).collect();

        // Member calls on values that came out of a platform factory match
        // the api tables under their qualified name (`SocketTask.send`,
        // `createMapContext.getCenterLocation`), or the bare member name.
        let mut api: Option<String> = None;
        if let Expr::Member {
            object,
            property: MemberProp::Static(prop),
            ..
        } = callee
        {
            let obj_origins = self.origins_of(object);
            if !obj_origins.is_empty() {
                for q in &obj_origins {
                    let qual = format!("{q}.{prop}");
                    if self.tax.subapi_mapping(&qual).is_some() || self.tax.sink(&qual).is_some() {
                        api = Some(qual);
                        break;
                    }
                }
                if api.is_none()
                    && (self.tax.subapi_mapping(prop).is_some() || self.tax.sink(prop).is_some())
                {
                    api = Some(prop.clone());
                }
            }
        }

        let target = if api.is_some() {
            None
        } else {
            Some(self.resolver.resolve_callee(file, fn_ctx, callee))
        };
        if api.is_none() {
            if let Some(CallTarget::SubApi(name)) = &target {
                api = Some(name.clone());
            }
        }
        if let Some(name) = api {
            return self.handle_subapi(&name, args, &arg_taints, span);
        }

        match target.unwrap() {
            // Pulled into `api` above.
            CallTarget::SubApi(_) => Taint::new(),
            CallTarget::Fn(f2, fid) => {
                let params = self.pkg.files[f2].ast.function(fid).params.clone();
                for (i, p) in params.iter().enumerate() {
                    let Some(t) = arg_taints.get(i) else { break };
                    let slot = Slot::Var {
                        file: f2,
                        fn_ctx: Some(fid),
                        name: p.clone(),
                    };
                    self.union_into(slot.clone(), t, span);
                    if let Some(a) = args.get(i) {
                        let og = self.origins_of(a);
                        self.add_origins(slot, og);
                    }
                }
                self.read_slot(Slot::Ret {
                    file: f2,
                    fn_id: fid,
                })
            }
            CallTarget::Module(_) => Taint::new(),
            CallTarget::External | CallTarget::Unresolved => {
                let mut all_args = Taint::new();
                for t in &arg_taints {
                    all_args.extend(t.iter().copied());
                }
                if let Some(path) = callee.static_path() {
                    if STATIC_PASSTHROUGH.contains(&path.join(".").as_str()) {
                        return all_args;
                    }
                }
                if let Some(name) = callee.as_ident() {
                    if GLOBAL_PASSTHROUGH.contains(&name) {
                        return all_args;
                    }
                }
                if let Expr::Member {
                    object,
                    property: MemberProp::Static(prop),
                    ..
                } = callee
                {
                    if METHOD_MUTATORS.contains(&prop.as_str()) {
                        let mut t = self.eval(object);
                        if let Some(slot) = self.base_slot(object) {
                            self.union_into(slot, &all_args, span);
                        }
                        t.extend(all_args);
                        return t;
                    }
                    if METHOD_PASSTHROUGH.contains(&prop.as_str()) {
                        let mut t = self.eval(object);
                        t.extend(all_args);
                        return t;
                    }
                }
                if !all_args.is_empty() {
                    // Tainted data handed to code the analysis cannot see;
                    // by design nothing is transferred.
                    self.dropped_sites.insert((file, span.start));
                }
                Taint::new()
            }
        }
    }

    fn is_this_expr(&self, e: &Expr) -> bool {
        match e {
            Expr::This { .. } => true,
            Expr::Ident { name, .. } => self.resolver.is_this_alias(self.cur.0, self.cur.1, name),
            _ => false,
        }
    }

    fn do_set_data(&mut self, args: &'a [Expr], span: Span) {
        let file = self.cur.0;
        match args.first() {
            Some(Expr::Object { props, .. }) => {
                for (key, value) in props {
                    match key.as_static() {
                        Some(k) => {
                            // Path keys ('a.b' / 'a[0]') update inside the
                            // first-level field.
                            let field = k.split(['.', '[']).next().unwrap_or(k);
                            let t = self.eval(value);
                            self.union_into(
                                Slot::Field {
                                    file,
                                    name: field.to_string(),
                                },
                                &t,
                                span,
                            );
                        }
                        None => {
                            let t = self.eval(value);
                            if !t.is_empty() {
                                self.warn_once(format!(
                                    "{}: dynamic setData key carries collected data; field tracking is incomplete",
                                    self.file_path(file)
                                ));
                            }
                        }
                    }
                }
            }
            Some(other) => {
                let t = self.eval(other);
                if !t.is_empty() {
                    self.warn_once(format!(
                        "{}: non-literal setData argument carries collected data; field tracking is incomplete",
                        self.file_path(file)
                    ));
                }
            }
            None => {}
        }
    }

    fn handle_subapi(&mut self, name: &str, args: &'a [Expr], arg_taints: &[Taint], span: Span) -> Taint {
        let mut result = Taint::new();

        if let Some(mapping) = self.tax.subapi_mapping(name) {
            let style = mapping.callback_style;
            let items = mapping.items.clone();
            match style {
                CallbackStyle::SyncReturn => {
                    let idx = self.source_at(span, SourceKind::ApiSyncReturn, name, items);
                    result.insert(idx);
                }
                CallbackStyle::SuccessCallback => {
                    if let Some(Expr::Object { props, .. }) = args.first() {
                        for (key, value) in props {
                            let is_result_cb = matches!(key.as_static(), Some("success" | "complete"));
                            if !is_result_cb {
                                continue;
                            }
                            if let Some((f2, fid)) = self.fn_value(value) {
                                let idx = self.source_at(
                                    span,
                                    SourceKind::ApiCallback,
                                    name,
                                    items.clone(),
                                );
                                self.seed_param0(f2, fid, idx, span);
                            }
                        }
                    }
                }
                CallbackStyle::EventListener => {
                    if let Some(listener) = args.first() {
                        if let Some((f2, fid)) = self.fn_value(listener) {
                            let idx = self.source_at(span, SourceKind::ApiCallback, name, items);
                            self.seed_param0(f2, fid, idx, span);
                        }
                    }
                }
            }
        }

        if let Some(sink) = self.tax.sink(name) {
            let kind = sink.kind;
            match args.first() {
                Some(Expr::Object { props, .. }) => {
                    for (key, value) in props {
                        let Some(k) = key.as_static() else { continue };
                        if !PAYLOAD_PROPS.contains(&k) {
                            continue;
                        }
                        let t = self.eval(value);
                        for src in t {
                            self.record_flow(src, name, kind, span);
                        }
                    }
                }
                Some(_) => {
                    if let Some(t) = arg_taints.first() {
                        for &src in t {
                            self.record_flow(src, name, kind, span);
                        }
                    }
                }
                None => {}
            }
        }

        result
    }

    /// Fn value usable as a callback: a literal, a resolvable reference, or
    /// either wrapped in `.bind(...)`.
    fn fn_value(&self, e: &Expr) -> Option<(usize, FnId)> {
        match e {
            Expr::Function { fn_id, .. } => Some((self.cur.0, *fn_id)),
            Expr::Call { callee, .. } => {
                if let Expr::Member {
                    object,
                    property: MemberProp::Static(p),
                    ..
                } = callee.as_ref()
                {
                    if p == "bind" {
                        return self.fn_value(object);
                    }
                }
                None
            }
            _ => match self.resolver.resolve_callee(self.cur.0, self.cur.1, e) {
                CallTarget::Fn(f, id) => Some((f, id)),
                _ => None,
            },
        }
    }

    fn source_at(
        &mut self,
        span: Span,
        kind: SourceKind,
        api: &str,
        items: BTreeSet<String>,
    ) -> usize {
        let key = (self.cur.0, span.start);
        if let Some(&idx) = self.source_sites.get(&key) {
            return idx;
        }
        let idx = self.sources.len();
        self.sources.push(FlowSource {
            kind,
            api: Some(api.to_string()),
            route: None,
            file: self.file_path(self.cur.0),
            span,
            items,
        });
        self.source_sites.insert(key, idx);
        idx
    }

    fn record_flow(&mut self, src: usize, api: &str, kind: SinkKind, span: Span) {
        let file = self.cur.0;
        let key = (src, file, span.start, api.to_string());
        if self.flows.contains_key(&key) {
            return;
        }

        let source = self.sources[src].clone();
        let mut steps = vec![PathStep {
            file: source.file.clone(),
            span: source.span,
        }];
        if let Some((slot, _)) = self.read_log.iter().find(|(_, t)| t.contains(&src)) {
            let mut chain = Vec::new();
            let mut cur_slot = Some(slot.clone());
            let mut guard = 0;
            while let Some(s) = cur_slot {
                guard += 1;
                if guard > 32 {
                    break;
                }
                let Some((from, f, sp)) = self.prov.get(&(s, src)) else { break };
                chain.push(PathStep {
                    file: self.file_path(*f),
                    span: *sp,
                });
                cur_slot = from.clone();
            }
            chain.reverse();
            steps.extend(chain);
        }
        steps.push(PathStep {
            file: self.file_path(file),
            span,
        });
        steps.dedup_by(|a, b| a.file == b.file && a.span == b.span);

        let items = source.items.clone();
        self.flows.insert(
            key,
            TaintFlow {
                source,
                sink: SinkHit {
                    api: api.to_string(),
                    kind,
                    file: self.file_path(file),
                    span,
                },
                items,
                path: steps,
            },
        );
    }
}

fn factory_names(f: &str) -> BTreeSet<String> {
    let mut out = BTreeSet::from([f.to_string()]);
    for (factory, class) in FACTORY_CLASS {
        if *factory == f {
            out.insert((*class).to_string());
        }
    }
    out
}
