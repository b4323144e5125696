//! AST for the analyzed script dialect. Functions live in a flat arena so
//! later passes can address them by index; each records its lexically
//! enclosing function, which the dataflow stage walks to resolve free
//! variables.

use serde::Serialize;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Span {
    pub start: u32,
    pub end: u32,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Span {
            start: start as u32,
            end: end as u32,
        }
    }

    pub fn join(self, other: Span) -> Span {
        Span {
            start: self.start.min(other.start),
            end: self.end.max(other.end),
        }
    }
}

pub type FnId = usize;

#[derive(Debug)]
pub struct ScriptAst {
    pub body: Vec<Stmt>,
    pub functions: Vec<FunctionData>,
    /// Statements the parser could not understand and degraded to opaque
    /// read/write summaries, as human-readable notes.
    pub repairs: Vec<String>,
}

impl ScriptAst {
    pub fn function(&self, id: FnId) -> &FunctionData {
        &self.functions[id]
    }
}

#[derive(Debug)]
pub struct FunctionData {
    pub name: Option<String>,
    pub params: Vec<String>,
    pub body: Vec<Stmt>,
    pub span: Span,
    /// Lexically enclosing function, None for top level.
    pub parent: Option<FnId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeclKind {
    Var,
    Let,
    Const,
}

#[derive(Debug)]
pub enum Pattern {
    Ident(String),
    /// (property name, binding name) pairs; shorthand repeats the name.
    Object(Vec<(String, String)>),
    /// Positional bindings; holes stay None.
    Array(Vec<Option<String>>),
}

#[derive(Debug)]
pub struct VarDeclarator {
    pub pattern: Pattern,
    pub init: Option<Expr>,
    pub span: Span,
}

#[derive(Debug)]
pub struct SwitchCase {
    pub test: Option<Expr>,
    pub body: Vec<Stmt>,
}

#[derive(Debug)]
pub enum Stmt {
    Expr(Expr),
    VarDecl {
        kind: DeclKind,
        decls: Vec<VarDeclarator>,
        span: Span,
    },
    FunctionDecl {
        name: String,
        fn_id: FnId,
        span: Span,
    },
    Return {
        value: Option<Expr>,
        span: Span,
    },
    If {
        cond: Expr,
        then_body: Vec<Stmt>,
        else_body: Vec<Stmt>,
        span: Span,
    },
    While {
        cond: Expr,
        body: Vec<Stmt>,
        span: Span,
    },
    DoWhile {
        body: Vec<Stmt>,
        cond: Expr,
        span: Span,
    },
    For {
        init: Option<Box<Stmt>>,
        cond: Option<Expr>,
        update: Option<Expr>,
        body: Vec<Stmt>,
        span: Span,
    },
    /// Covers both for-in and for-of; the distinction does not matter to the
    /// dataflow rules (the loop variable inherits the object's taint).
    ForIn {
        decl_name: String,
        object: Expr,
        body: Vec<Stmt>,
        span: Span,
    },
    Block {
        body: Vec<Stmt>,
        span: Span,
    },
    TryCatch {
        body: Vec<Stmt>,
        catch_param: Option<String>,
        catch_body: Vec<Stmt>,
        finally_body: Vec<Stmt>,
        span: Span,
    },
    Switch {
        disc: Expr,
        cases: Vec<SwitchCase>,
        span: Span,
    },
    Throw {
        value: Expr,
        span: Span,
    },
    Break(Span),
    Continue(Span),
    Empty(Span),
    /// Fallback for syntax the parser does not model. `reads` is every
    /// identifier mentioned, `writes` the ones in assignment-target
    /// position; the dataflow stage treats it as reads feeding writes.
    Opaque {
        reads: Vec<String>,
        writes: Vec<String>,
        raw: String,
        span: Span,
    },
}

impl Stmt {
    pub fn span(&self) -> Span {
        match self {
            Stmt::Expr(e) => e.span(),
            Stmt::VarDecl { span, .. }
            | Stmt::FunctionDecl { span, .. }
            | Stmt::Return { span, .. }
            | Stmt::If { span, .. }
            | Stmt::While { span, .. }
            | Stmt::DoWhile { span, .. }
            | Stmt::For { span, .. }
            | Stmt::ForIn { span, .. }
            | Stmt::Block { span, .. }
            | Stmt::TryCatch { span, .. }
            | Stmt::Switch { span, .. }
            | Stmt::Throw { span, .. }
            | Stmt::Opaque { span, .. } => *span,
            Stmt::Break(s) | Stmt::Continue(s) | Stmt::Empty(s) => *s,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Lit {
    Num(String),
    Str(String),
    Bool(bool),
    Null,
    Undefined,
    Regex(String),
}

#[derive(Debug)]
pub enum TplPart {
    Text(String),
    Expr(Box<Expr>),
}

#[derive(Debug)]
pub enum PropKey {
    Ident(String),
    Str(String),
    Num(String),
    Computed(Box<Expr>),
    /// `...expr` inside an object literal; the paired value is the spread
    /// operand.
    Spread,
}

impl PropKey {
    /// Statically known property name, if any.
    pub fn as_static(&self) -> Option<&str> {
        match self {
            PropKey::Ident(s) | PropKey::Str(s) | PropKey::Num(s) => Some(s),
            PropKey::Computed(_) | PropKey::Spread => None,
        }
    }
}

#[derive(Debug)]
pub enum MemberProp {
    Static(String),
    Computed(Box<Expr>),
}

#[derive(Debug)]
pub enum Expr {
    Ident {
        name: String,
        span: Span,
    },
    This {
        span: Span,
    },
    Literal {
        value: Lit,
        span: Span,
    },
    Template {
        parts: Vec<TplPart>,
        span: Span,
    },
    Function {
        fn_id: FnId,
        span: Span,
    },
    Call {
        callee: Box<Expr>,
        args: Vec<Expr>,
        span: Span,
    },
    New {
        callee: Box<Expr>,
        args: Vec<Expr>,
        span: Span,
    },
    Member {
        object: Box<Expr>,
        property: MemberProp,
        span: Span,
    },
    Assign {
        op: &'static str,
        target: Box<Expr>,
        value: Box<Expr>,
        span: Span,
    },
    Object {
        props: Vec<(PropKey, Expr)>,
        span: Span,
    },
    Array {
        elems: Vec<Expr>,
        span: Span,
    },
    Binary {
        op: String,
        left: Box<Expr>,
        right: Box<Expr>,
        span: Span,
    },
    Unary {
        op: String,
        operand: Box<Expr>,
        span: Span,
    },
    Update {
        op: String,
        operand: Box<Expr>,
        prefix: bool,
        span: Span,
    },
    Ternary {
        cond: Box<Expr>,
        then_expr: Box<Expr>,
        else_expr: Box<Expr>,
        span: Span,
    },
    Sequence {
        exprs: Vec<Expr>,
        span: Span,
    },
    Spread {
        expr: Box<Expr>,
        span: Span,
    },
}

impl Expr {
    pub fn span(&self) -> Span {
        match self {
            Expr::Ident { span, .. }
            | Expr::This { span }
            | Expr::Literal { span, .. }
            | Expr::Template { span, .. }
            | Expr::Function { span, .. }
            | Expr::Call { span, .. }
            | Expr::New { span, .. }
            | Expr::Member { span, .. }
            | Expr::Assign { span, .. }
            | Expr::Object { span, .. }
            | Expr::Array { span, .. }
            | Expr::Binary { span, .. }
            | Expr::Unary { span, .. }
            | Expr::Update { span, .. }
            | Expr::Ternary { span, .. }
            | Expr::Sequence { span, .. }
            | Expr::Spread { span, .. } => *span,
        }
    }

    pub fn as_ident(&self) -> Option<&str> {
        match self {
            Expr::Ident { name, .. } => Some(name),
            _ => None,
        }
    }

    pub fn as_str_lit(&self) -> Option<&str> {
        match self {
            Expr::Literal {
                value: Lit::Str(s), ..
            } => Some(s),
            _ => None,
        }
    }

    /// Flattens a static member chain: `wx.getLocation` gives
    /// `["wx", "getLocation"]`, `this.data.x` gives `["this", "data", "x"]`.
    /// Any computed step or non-ident base yields None.
    pub fn static_path(&self) -> Option<Vec<&str>> {
        match self {
            Expr::Ident { name, .. } => Some(vec![name.as_str()]),
            Expr::This { .. } => Some(vec!["this"]),
            Expr::Member {
                object,
                property: MemberProp::Static(p),
                ..
            } => {
                let mut path = object.static_path()?;
                path.push(p.as_str());
                Some(path)
            }
            _ => None,
        }
    }

    /// Looks up a statically named property in an object literal.
    pub fn object_prop(&self, key: &str) -> Option<&Expr> {
        match self {
            Expr::Object { props, .. } => props
                .iter()
                .find(|(k, _)| k.as_static() == Some(key))
                .map(|(_, v)| v),
            _ => None,
        }
    }
}

/// Visits every expression under `stmts`, pre-order. Does not descend into
/// function literals: their bodies live in the arena and are walked when
/// their own node is processed.
pub fn walk_stmts<'a>(stmts: &'a [Stmt], f: &mut impl FnMut(&'a Expr)) {
    for s in stmts {
        walk_stmt(s, f);
    }
}

fn walk_stmt<'a>(s: &'a Stmt, f: &mut impl FnMut(&'a Expr)) {
    match s {
        Stmt::Expr(e) | Stmt::Throw { value: e, .. } => walk_expr(e, f),
        Stmt::VarDecl { decls, .. } => {
            for d in decls {
                if let Some(init) = &d.init {
                    walk_expr(init, f);
                }
            }
        }
        Stmt::Return { value, .. } => {
            if let Some(e) = value {
                walk_expr(e, f);
            }
        }
        Stmt::If {
            cond,
            then_body,
            else_body,
            ..
        } => {
            walk_expr(cond, f);
            walk_stmts(then_body, f);
            walk_stmts(else_body, f);
        }
        Stmt::While { cond, body, .. } | Stmt::DoWhile { body, cond, .. } => {
            walk_expr(cond, f);
            walk_stmts(body, f);
        }
        Stmt::For {
            init,
            cond,
            update,
            body,
            ..
        } => {
            if let Some(i) = init {
                walk_stmt(i, f);
            }
            if let Some(c) = cond {
                walk_expr(c, f);
            }
            if let Some(u) = update {
                walk_expr(u, f);
            }
            walk_stmts(body, f);
        }
        Stmt::ForIn { object, body, .. } => {
            walk_expr(object, f);
            walk_stmts(body, f);
        }
        Stmt::Block { body, .. } => walk_stmts(body, f),
        Stmt::TryCatch {
            body,
            catch_body,
            finally_body,
            ..
        } => {
            walk_stmts(body, f);
            walk_stmts(catch_body, f);
            walk_stmts(finally_body, f);
        }
        Stmt::Switch { disc, cases, .. } => {
            walk_expr(disc, f);
            for c in cases {
                if let Some(t) = &c.test {
                    walk_expr(t, f);
                }
                walk_stmts(&c.body, f);
            }
        }
        Stmt::FunctionDecl { .. }
        | Stmt::Break(_)
        | Stmt::Continue(_)
        | Stmt::Empty(_)
        | Stmt::Opaque { .. } => {}
    }
}

pub fn walk_expr<'a>(e: &'a Expr, f: &mut impl FnMut(&'a Expr)) {
    f(e);
    match e {
        Expr::Ident { .. }
        | Expr::This { .. }
        | Expr::Literal { .. }
        | Expr::Function { .. } => {}
        Expr::Template { parts, .. } => {
            for p in parts {
                if let TplPart::Expr(e) = p {
                    walk_expr(e, f);
                }
            }
        }
        Expr::Call { callee, args, .. } | Expr::New { callee, args, .. } => {
            walk_expr(callee, f);
            for a in args {
                walk_expr(a, f);
            }
        }
        Expr::Member {
            object, property, ..
        } => {
            walk_expr(object, f);
            if let MemberProp::Computed(i) = property {
                walk_expr(i, f);
            }
        }
        Expr::Assign { target, value, .. } => {
            walk_expr(target, f);
            walk_expr(value, f);
        }
        Expr::Object { props, .. } => {
            for (k, v) in props {
                if let PropKey::Computed(e) = k {
                    walk_expr(e, f);
                }
                walk_expr(v, f);
            }
        }
        Expr::Array { elems, .. } => {
            for e in elems {
                walk_expr(e, f);
            }
        }
        Expr::Binary { left, right, .. } => {
            walk_expr(left, f);
            walk_expr(right, f);
        }
        Expr::Unary { operand, .. } | Expr::Update { operand, .. } | Expr::Spread { expr: operand, .. } => {
            walk_expr(operand, f)
        }
        Expr::Ternary {
            cond,
            then_expr,
            else_expr,
            ..
        } => {
            walk_expr(cond, f);
            walk_expr(then_expr, f);
            walk_expr(else_expr, f);
        }
        Expr::Sequence { exprs, .. } => {
            for e in exprs {
                walk_expr(e, f);
            }
        }
    }
}
