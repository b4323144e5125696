//! Recursive-descent parser over the lexer's token stream.
//!
//! Error policy: lexical problems that make the stream unusable (unbalanced
//! braces, unterminated literals) fail the whole file. Anything the parser
//! trips on inside an otherwise sound file degrades to an opaque statement
//! carrying identifier read/write summaries, so one exotic construct does
//! not discard a page's remaining dataflow.

use super::ast::*;
use super::lexer::{Kw, Lexer, Tok, Token, TplPiece};

#[derive(Debug)]
pub struct ScriptError {
    pub message: String,
    pub offset: usize,
}

impl std::fmt::Display for ScriptError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} (byte {})", self.message, self.offset)
    }
}

pub fn parse_script(src: &str) -> Result<ScriptAst, ScriptError> {
    let toks = Lexer::lex_all(src).map_err(|e| ScriptError {
        message: e.message,
        offset: e.offset,
    })?;
    let mut st = ParseState {
        fns: Vec::new(),
        repairs: Vec::new(),
    };
    let mut p = Parser {
        src,
        toks: &toks,
        pos: 0,
        st: &mut st,
        current_fn: None,
    };
    let body = p.parse_program();
    Ok(ScriptAst {
        body,
        functions: st.fns,
        repairs: st.repairs,
    })
}

struct ParseState {
    fns: Vec<FunctionData>,
    repairs: Vec<String>,
}

type PResult<T> = Result<T, String>;

struct Parser<'a, 's> {
    src: &'a str,
    toks: &'a [Token],
    pos: usize,
    st: &'s mut ParseState,
    current_fn: Option<FnId>,
}

impl<'a, 's> Parser<'a, 's> {
    fn token(&self) -> &'a Token {
        &self.toks[self.pos.min(self.toks.len() - 1)]
    }

    fn tok(&self) -> &'a Tok {
        &self.token().tok
    }

    fn nth(&self, k: usize) -> &'a Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    fn bump(&mut self) {
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
    }

    fn at_eof(&self) -> bool {
        matches!(self.tok(), Tok::Eof)
    }

    fn prev_end(&self) -> u32 {
        if self.pos == 0 {
            0
        } else {
            self.toks[self.pos - 1].span.end
        }
    }

    fn mark(&self) -> u32 {
        self.token().span.start
    }

    fn span_from(&self, start: u32) -> Span {
        Span {
            start,
            end: self.prev_end().max(start),
        }
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(self.tok(), Tok::Punct(q) if *q == p)
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if self.is_punct(p) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, p: &str) -> PResult<()> {
        if self.eat_punct(p) {
            Ok(())
        } else {
            Err(self.err(&format!("expected `{p}`")))
        }
    }

    fn is_kw(&self, k: Kw) -> bool {
        matches!(self.tok(), Tok::Kw(q) if *q == k)
    }

    fn eat_kw(&mut self, k: Kw) -> bool {
        if self.is_kw(k) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn err(&self, msg: &str) -> String {
        format!("{msg}, found {:?} at byte {}", self.tok(), self.token().span.start)
    }

    fn expect_ident(&mut self) -> PResult<String> {
        match self.tok() {
            Tok::Ident(n) => {
                let n = n.clone();
                self.bump();
                Ok(n)
            }
            _ => Err(self.err("expected identifier")),
        }
    }

    /// Identifier or keyword in a property-name position.
    fn prop_name(&mut self) -> PResult<String> {
        match self.tok() {
            Tok::Ident(n) => {
                let n = n.clone();
                self.bump();
                Ok(n)
            }
            Tok::Kw(k) => {
                let n = kw_text(*k).to_string();
                self.bump();
                Ok(n)
            }
            _ => Err(self.err("expected property name")),
        }
    }

    // In statement lists a semicolon may be a real `;`, a closing `}`, end
    // of input, or a line break before the next token.
    fn eat_semi(&mut self) -> PResult<()> {
        if self.eat_punct(";") {
            return Ok(());
        }
        if self.is_punct("}") || self.at_eof() || self.token().nl_before {
            return Ok(());
        }
        Err(self.err("expected `;`"))
    }

    fn parse_program(&mut self) -> Vec<Stmt> {
        let mut body = Vec::new();
        while !self.at_eof() {
            if self.is_punct("}") {
                // Desynced close brace: note it and move on.
                self.st.repairs.push(format!(
                    "skipped stray `}}` at byte {}",
                    self.token().span.start
                ));
                self.bump();
                continue;
            }
            body.push(self.parse_statement_recover());
        }
        body
    }

    fn parse_statement_recover(&mut self) -> Stmt {
        let start = self.pos;
        match self.parse_statement() {
            Ok(s) => s,
            Err(e) => self.recover_opaque(start, e),
        }
    }

    fn recover_opaque(&mut self, start_pos: usize, err: String) -> Stmt {
        self.pos = start_pos;
        let start_span = self.token().span;
        let mut depth: i64 = 0;
        let mut reads = Vec::new();
        let mut writes = Vec::new();
        loop {
            match self.tok() {
                Tok::Eof => break,
                Tok::Punct(";") if depth == 0 => {
                    self.bump();
                    break;
                }
                Tok::Punct("{") | Tok::Punct("(") | Tok::Punct("[") => {
                    depth += 1;
                    self.bump();
                }
                Tok::Punct(")") | Tok::Punct("]") => {
                    if depth == 0 {
                        break;
                    }
                    depth -= 1;
                    self.bump();
                }
                Tok::Punct("}") => {
                    if depth == 0 {
                        break;
                    }
                    depth -= 1;
                    self.bump();
                    // A top-level brace group just closed; unless the next
                    // token continues an expression this is the end of the
                    // unparseable region.
                    if depth == 0 && !matches!(self.tok(), Tok::Punct("." | "(" | "[")) {
                        break;
                    }
                }
                Tok::Ident(name) => {
                    let n = name.clone();
                    if matches!(self.nth(1), Tok::Punct("=")) {
                        writes.push(n);
                    } else {
                        reads.push(n);
                    }
                    self.bump();
                }
                _ => self.bump(),
            }
        }
        if self.pos == start_pos {
            self.bump();
        }
        reads.sort();
        reads.dedup();
        writes.sort();
        writes.dedup();
        let span = self.span_from(start_span.start);
        let raw: String = self.src[span.start as usize..span.end as usize]
            .chars()
            .take(120)
            .collect();
        self.st.repairs.push(format!(
            "statement degraded to read/write summary at byte {}: {}",
            span.start, err
        ));
        Stmt::Opaque {
            reads,
            writes,
            raw,
            span,
        }
    }

    fn parse_statement(&mut self) -> PResult<Stmt> {
        let start = self.mark();
        match self.tok() {
            Tok::Punct(";") => {
                self.bump();
                Ok(Stmt::Empty(self.span_from(start)))
            }
            Tok::Punct("{") => {
                let body = self.parse_block_body()?;
                Ok(Stmt::Block {
                    body,
                    span: self.span_from(start),
                })
            }
            Tok::Kw(Kw::Var) | Tok::Kw(Kw::Let) | Tok::Kw(Kw::Const) => {
                let s = self.parse_var_decl(false)?;
                self.eat_semi()?;
                Ok(s)
            }
            Tok::Kw(Kw::Function) => self.parse_function_decl(),
            Tok::Kw(Kw::Return) => {
                self.bump();
                let value = if self.is_punct(";")
                    || self.is_punct("}")
                    || self.at_eof()
                    || self.token().nl_before
                {
                    None
                } else {
                    Some(self.parse_expression(false)?)
                };
                self.eat_semi()?;
                Ok(Stmt::Return {
                    value,
                    span: self.span_from(start),
                })
            }
            Tok::Kw(Kw::If) => self.parse_if(),
            Tok::Kw(Kw::While) => {
                self.bump();
                self.expect_punct("(")?;
                let cond = self.parse_expression(false)?;
                self.expect_punct(")")?;
                let body = self.parse_body_stmt();
                Ok(Stmt::While {
                    cond,
                    body,
                    span: self.span_from(start),
                })
            }
            Tok::Kw(Kw::Do) => {
                self.bump();
                let body = self.parse_body_stmt();
                if !self.eat_kw(Kw::While) {
                    return Err(self.err("expected `while` after do body"));
                }
                self.expect_punct("(")?;
                let cond = self.parse_expression(false)?;
                self.expect_punct(")")?;
                self.eat_semi()?;
                Ok(Stmt::DoWhile {
                    body,
                    cond,
                    span: self.span_from(start),
                })
            }
            Tok::Kw(Kw::For) => self.parse_for(),
            Tok::Kw(Kw::Switch) => self.parse_switch(),
            Tok::Kw(Kw::Try) => self.parse_try(),
            Tok::Kw(Kw::Throw) => {
                self.bump();
                let value = self.parse_expression(false)?;
                self.eat_semi()?;
                Ok(Stmt::Throw {
                    value,
                    span: self.span_from(start),
                })
            }
            Tok::Kw(Kw::Break) => {
                self.bump();
                if let Tok::Ident(_) = self.tok() {
                    if !self.token().nl_before {
                        self.bump(); // label, not tracked
                    }
                }
                self.eat_semi()?;
                Ok(Stmt::Break(self.span_from(start)))
            }
            Tok::Kw(Kw::Continue) => {
                self.bump();
                if let Tok::Ident(_) = self.tok() {
                    if !self.token().nl_before {
                        self.bump();
                    }
                }
                self.eat_semi()?;
                Ok(Stmt::Continue(self.span_from(start)))
            }
            Tok::Kw(Kw::Class) => Err(self.err("class declarations are not modeled")),
            Tok::Kw(Kw::Import) => Err(self.err("import declarations are not modeled")),
            Tok::Kw(Kw::Export) => Err(self.err("export declarations are not modeled")),
            Tok::Ident(name) => {
                // Labeled statement; the label itself is not tracked.
                if matches!(self.nth(1), Tok::Punct(":")) {
                    self.bump();
                    self.bump();
                    return self.parse_statement();
                }
                // `async function f() {}`: the async marker changes nothing
                // for dataflow purposes.
                if name == "async" && matches!(self.nth(1), Tok::Kw(Kw::Function)) {
                    self.bump();
                    return self.parse_function_decl();
                }
                let e = self.parse_expression(false)?;
                self.eat_semi()?;
                Ok(Stmt::Expr(e))
            }
            _ => {
                let e = self.parse_expression(false)?;
                self.eat_semi()?;
                Ok(Stmt::Expr(e))
            }
        }
    }

    /// A loop/branch body: either a block or a single statement wrapped in
    /// a one-element list.
    fn parse_body_stmt(&mut self) -> Vec<Stmt> {
        if self.is_punct("{") {
            let start = self.pos;
            match self.parse_block_body() {
                Ok(b) => b,
                Err(e) => vec![self.recover_opaque(start, e)],
            }
        } else {
            vec![self.parse_statement_recover()]
        }
    }

    fn parse_block_body(&mut self) -> PResult<Vec<Stmt>> {
        self.expect_punct("{")?;
        let mut body = Vec::new();
        while !self.is_punct("}") {
            if self.at_eof() {
                return Err(self.err("unexpected end of input in block"));
            }
            body.push(self.parse_statement_recover());
        }
        self.bump(); // }
        Ok(body)
    }

    fn parse_if(&mut self) -> PResult<Stmt> {
        let start = self.mark();
        self.bump();
        self.expect_punct("(")?;
        let cond = self.parse_expression(false)?;
        self.expect_punct(")")?;
        let then_body = self.parse_body_stmt();
        let else_body = if self.eat_kw(Kw::Else) {
            self.parse_body_stmt()
        } else {
            Vec::new()
        };
        Ok(Stmt::If {
            cond,
            then_body,
            else_body,
            span: self.span_from(start),
        })
    }

    fn parse_var_decl(&mut self, no_in: bool) -> PResult<Stmt> {
        let start = self.mark();
        let kind = match self.tok() {
            Tok::Kw(Kw::Var) => DeclKind::Var,
            Tok::Kw(Kw::Let) => DeclKind::Let,
            Tok::Kw(Kw::Const) => DeclKind::Const,
            _ => return Err(self.err("expected var/let/const")),
        };
        self.bump();
        let mut decls = Vec::new();
        loop {
            let dstart = self.mark();
            let pattern = self.parse_pattern()?;
            let init = if self.eat_punct("=") {
                Some(self.parse_assignment(no_in)?)
            } else {
                None
            };
            decls.push(VarDeclarator {
                pattern,
                init,
                span: self.span_from(dstart),
            });
            if !self.eat_punct(",") {
                break;
            }
        }
        Ok(Stmt::VarDecl {
            kind,
            decls,
            span: self.span_from(start),
        })
    }

    fn parse_pattern(&mut self) -> PResult<Pattern> {
        match self.tok() {
            Tok::Ident(n) => {
                let n = n.clone();
                self.bump();
                Ok(Pattern::Ident(n))
            }
            Tok::Punct("{") => {
                self.bump();
                let mut pairs = Vec::new();
                while !self.is_punct("}") {
                    if self.eat_punct("...") {
                        let b = self.expect_ident()?;
                        pairs.push(("...".to_string(), b));
                    } else {
                        let key = match self.tok() {
                            Tok::Str(s) => {
                                let s = s.clone();
                                self.bump();
                                s
                            }
                            _ => self.prop_name()?,
                        };
                        let binding = if self.eat_punct(":") {
                            match self.tok() {
                                Tok::Ident(b) => {
                                    let b = b.clone();
                                    self.bump();
                                    b
                                }
                                _ => return Err(self.err("nested destructuring is not modeled")),
                            }
                        } else {
                            key.clone()
                        };
                        if self.eat_punct("=") {
                            self.parse_assignment(false)?; // default value, dropped
                        }
                        pairs.push((key, binding));
                    }
                    if !self.eat_punct(",") {
                        break;
                    }
                }
                self.expect_punct("}")?;
                Ok(Pattern::Object(pairs))
            }
            Tok::Punct("[") => {
                self.bump();
                let mut elems = Vec::new();
                while !self.is_punct("]") {
                    if self.is_punct(",") {
                        elems.push(None);
                        self.bump();
                        continue;
                    }
                    if self.eat_punct("...") {
                        elems.push(Some(self.expect_ident()?));
                    } else {
                        match self.tok() {
                            Tok::Ident(n) => {
                                let n = n.clone();
                                self.bump();
                                if self.eat_punct("=") {
                                    self.parse_assignment(false)?;
                                }
                                elems.push(Some(n));
                            }
                            _ => return Err(self.err("nested destructuring is not modeled")),
                        }
                    }
                    if !self.eat_punct(",") {
                        break;
                    }
                }
                self.expect_punct("]")?;
                Ok(Pattern::Array(elems))
            }
            _ => Err(self.err("expected binding pattern")),
        }
    }

    fn parse_for(&mut self) -> PResult<Stmt> {
        let start = self.mark();
        self.bump();
        self.expect_punct("(")?;

        // for (;;), for (init; cond; update), for (x in o), for (x of o)
        let init: Option<Box<Stmt>> = if self.is_punct(";") {
            self.bump();
            None
        } else if matches!(self.tok(), Tok::Kw(Kw::Var) | Tok::Kw(Kw::Let) | Tok::Kw(Kw::Const)) {
            let decl = self.parse_var_decl(true)?;
            if self.is_kw(Kw::In) || self.is_kw(Kw::Of) {
                self.bump();
                let decl_name = match &decl {
                    Stmt::VarDecl { decls, .. } if decls.len() == 1 => match &decls[0].pattern {
                        Pattern::Ident(n) => n.clone(),
                        _ => return Err(self.err("destructuring loop variable is not modeled")),
                    },
                    _ => return Err(self.err("bad for-in declaration")),
                };
                let object = self.parse_expression(false)?;
                self.expect_punct(")")?;
                let body = self.parse_body_stmt();
                return Ok(Stmt::ForIn {
                    decl_name,
                    object,
                    body,
                    span: self.span_from(start),
                });
            }
            self.expect_punct(";")?;
            Some(Box::new(decl))
        } else {
            let e = self.parse_expression(true)?;
            if self.is_kw(Kw::In) || self.is_kw(Kw::Of) {
                self.bump();
                let decl_name = e
                    .as_ident()
                    .ok_or_else(|| self.err("for-in target must be a plain name"))?
                    .to_string();
                let object = self.parse_expression(false)?;
                self.expect_punct(")")?;
                let body = self.parse_body_stmt();
                return Ok(Stmt::ForIn {
                    decl_name,
                    object,
                    body,
                    span: self.span_from(start),
                });
            }
            self.expect_punct(";")?;
            Some(Box::new(Stmt::Expr(e)))
        };

        let cond = if self.is_punct(";") {
            None
        } else {
            Some(self.parse_expression(false)?)
        };
        self.expect_punct(";")?;
        let update = if self.is_punct(")") {
            None
        } else {
            Some(self.parse_expression(false)?)
        };
        self.expect_punct(")")?;
        let body = self.parse_body_stmt();
        Ok(Stmt::For {
            init,
            cond,
            update,
            body,
            span: self.span_from(start),
        })
    }

    fn parse_switch(&mut self) -> PResult<Stmt> {
        let start = self.mark();
        self.bump();
        self.expect_punct("(")?;
        let disc = self.parse_expression(false)?;
        self.expect_punct(")")?;
        self.expect_punct("{")?;
        let mut cases = Vec::new();
        while !self.is_punct("}") {
            if self.at_eof() {
                return Err(self.err("unexpected end of input in switch"));
            }
            let test = if self.eat_kw(Kw::Case) {
                let t = self.parse_expression(false)?;
                Some(t)
            } else if self.eat_kw(Kw::Default) {
                None
            } else {
                return Err(self.err("expected case or default"));
            };
            self.expect_punct(":")?;
            let mut body = Vec::new();
            while !self.is_punct("}") && !self.is_kw(Kw::Case) && !self.is_kw(Kw::Default) {
                if self.at_eof() {
                    return Err(self.err("unexpected end of input in switch"));
                }
                body.push(self.parse_statement_recover());
            }
            cases.push(SwitchCase { test, body });
        }
        self.bump(); // }
        Ok(Stmt::Switch {
            disc,
            cases,
            span: self.span_from(start),
        })
    }

    fn parse_try(&mut self) -> PResult<Stmt> {
        let start = self.mark();
        self.bump();
        let body = self.parse_block_body()?;
        let mut catch_param = None;
        let mut catch_body = Vec::new();
        if self.eat_kw(Kw::Catch) {
            if self.eat_punct("(") {
                catch_param = Some(self.expect_ident()?);
                self.expect_punct(")")?;
            }
            catch_body = self.parse_block_body()?;
        }
        let finally_body = if self.eat_kw(Kw::Finally) {
            self.parse_block_body()?
        } else {
            Vec::new()
        };
        Ok(Stmt::TryCatch {
            body,
            catch_param,
            catch_body,
            finally_body,
            span: self.span_from(start),
        })
    }

    fn parse_function_decl(&mut self) -> PResult<Stmt> {
        let start = self.mark();
        self.bump(); // function
        let name = self.expect_ident()?;
        let fn_id = self.parse_fn_tail(Some(name.clone()), start)?;
        Ok(Stmt::FunctionDecl {
            name,
            fn_id,
            span: self.span_from(start),
        })
    }

    /// Parses `(params) { body }` into the arena and returns the new id.
    fn parse_fn_tail(&mut self, name: Option<String>, start: u32) -> PResult<FnId> {
        let (params, prologue) = self.parse_fn_params()?;
        let fn_id = self.st.fns.len();
        self.st.fns.push(FunctionData {
            name,
            params,
            body: Vec::new(),
            span: Span { start, end: start },
            parent: self.current_fn,
        });
        let saved = self.current_fn;
        self.current_fn = Some(fn_id);
        let body = self.parse_block_body();
        self.current_fn = saved;
        let body = body?;
        let span = self.span_from(start);
        let f = &mut self.st.fns[fn_id];
        f.body = prologue.into_iter().chain(body).collect();
        f.span = span;
        Ok(fn_id)
    }

    /// Parameter list. Destructured parameters bind a synthetic name and a
    /// prologue declaration re-destructures it, so downstream passes only
    /// see plain named parameters.
    fn parse_fn_params(&mut self) -> PResult<(Vec<String>, Vec<Stmt>)> {
        self.expect_punct("(")?;
        let mut names = Vec::new();
        let mut prologue = Vec::new();
        while !self.is_punct(")") {
            if self.eat_punct("...") {
                names.push(self.expect_ident()?);
            } else {
                match self.tok() {
                    Tok::Ident(n) => {
                        let n = n.clone();
                        self.bump();
                        if self.eat_punct("=") {
                            self.parse_assignment(false)?; // default, dropped
                        }
                        names.push(n);
                    }
                    Tok::Punct("{") | Tok::Punct("[") => {
                        let pstart = self.mark();
                        let pattern = self.parse_pattern()?;
                        if self.eat_punct("=") {
                            self.parse_assignment(false)?;
                        }
                        let synth = format!("__arg{}", names.len());
                        let span = self.span_from(pstart);
                        prologue.push(Stmt::VarDecl {
                            kind: DeclKind::Var,
                            decls: vec![VarDeclarator {
                                pattern,
                                init: Some(Expr::Ident {
                                    name: synth.clone(),
                                    span,
                                }),
                                span,
                            }],
                            span,
                        });
                        names.push(synth);
                    }
                    _ => return Err(self.err("expected parameter")),
                }
            }
            if !self.eat_punct(",") {
                break;
            }
        }
        self.expect_punct(")")?;
        Ok((names, prologue))
    }

    // ---- expressions ----

    fn parse_expression(&mut self, no_in: bool) -> PResult<Expr> {
        let start = self.mark();
        let first = self.parse_assignment(no_in)?;
        if !self.is_punct(",") {
            return Ok(first);
        }
        let mut exprs = vec![first];
        while self.eat_punct(",") {
            exprs.push(self.parse_assignment(no_in)?);
        }
        Ok(Expr::Sequence {
            exprs,
            span: self.span_from(start),
        })
    }

    fn parse_assignment(&mut self, no_in: bool) -> PResult<Expr> {
        if let Some(arrow) = self.try_parse_arrow()? {
            return Ok(arrow);
        }
        let start = self.mark();
        let lhs = self.parse_ternary(no_in)?;
        let op = match self.tok() {
            Tok::Punct(
                p @ ("=" | "+=" | "-=" | "*=" | "/=" | "%=" | "<<=" | ">>=" | ">>>=" | "&="
                | "|=" | "^=" | "&&=" | "||=" | "??=" | "**="),
            ) => *p,
            _ => return Ok(lhs),
        };
        self.bump();
        let value = self.parse_assignment(no_in)?;
        Ok(Expr::Assign {
            op,
            target: Box::new(lhs),
            value: Box::new(value),
            span: self.span_from(start),
        })
    }

    /// Detects `x => ...`, `(a, b) => ...`, `async x => ...` without
    /// consuming anything on a miss.
    fn try_parse_arrow(&mut self) -> PResult<Option<Expr>> {
        let mut k = 0;
        if matches!(self.tok(), Tok::Ident(n) if n == "async")
            && !matches!(self.nth(1), Tok::Punct("=>"))
        {
            // `async (params) =>` or `async x =>`; anything else is not an
            // arrow prefix.
            match self.nth(1) {
                Tok::Ident(_) | Tok::Punct("(") => k = 1,
                _ => return Ok(None),
            }
        }
        let is_arrow = match self.nth(k) {
            Tok::Ident(_) => matches!(self.nth(k + 1), Tok::Punct("=>")),
            Tok::Punct("(") => {
                let mut i = self.pos + k + 1;
                let mut depth = 1i64;
                loop {
                    let Some(t) = self.toks.get(i) else { break false };
                    match &t.tok {
                        Tok::Eof => break false,
                        Tok::Punct("(") | Tok::Punct("[") | Tok::Punct("{") => depth += 1,
                        Tok::Punct(")") | Tok::Punct("]") | Tok::Punct("}") => {
                            depth -= 1;
                            if depth == 0 {
                                break matches!(
                                    self.toks.get(i + 1).map(|t| &t.tok),
                                    Some(Tok::Punct("=>"))
                                );
                            }
                        }
                        _ => {}
                    }
                    i += 1;
                }
            }
            _ => false,
        };
        if !is_arrow {
            return Ok(None);
        }
        let start = self.mark();
        for _ in 0..k {
            self.bump(); // async
        }
        let (params, prologue) = if let Tok::Ident(n) = self.tok() {
            let n = n.clone();
            self.bump();
            (vec![n], Vec::new())
        } else {
            self.parse_fn_params()?
        };
        self.expect_punct("=>")?;

        let fn_id = self.st.fns.len();
        self.st.fns.push(FunctionData {
            name: None,
            params,
            body: Vec::new(),
            span: Span { start, end: start },
            parent: self.current_fn,
        });
        let saved = self.current_fn;
        self.current_fn = Some(fn_id);
        let body = if self.is_punct("{") {
            self.parse_block_body()
        } else {
            let bstart = self.mark();
            self.parse_assignment(false).map(|e| {
                vec![Stmt::Return {
                    value: Some(e),
                    span: self.span_from(bstart),
                }]
            })
        };
        self.current_fn = saved;
        let body = body?;
        let span = self.span_from(start);
        let f = &mut self.st.fns[fn_id];
        f.body = prologue.into_iter().chain(body).collect();
        f.span = span;
        Ok(Some(Expr::Function { fn_id, span }))
    }

    fn parse_ternary(&mut self, no_in: bool) -> PResult<Expr> {
        let start = self.mark();
        let cond = self.parse_binary(0, no_in)?;
        if !self.eat_punct("?") {
            return Ok(cond);
        }
        let then_expr = self.parse_assignment(false)?;
        self.expect_punct(":")?;
        let else_expr = self.parse_assignment(no_in)?;
        Ok(Expr::Ternary {
            cond: Box::new(cond),
            then_expr: Box::new(then_expr),
            else_expr: Box::new(else_expr),
            span: self.span_from(start),
        })
    }

    fn binary_op_at(&self, level: usize, no_in: bool) -> Option<String> {
        const LEVELS: &[&[&str]] = &[
            &["??"],
            &["||"],
            &["&&"],
            &["|"],
            &["^"],
            &["&"],
            &["==", "!=", "===", "!=="],
            &["<", ">", "<=", ">="],
            &["<<", ">>", ">>>"],
            &["+", "-"],
            &["*", "/", "%"],
            &["**"],
        ];
        match self.tok() {
            Tok::Punct(p) if LEVELS[level].contains(p) => Some(p.to_string()),
            Tok::Kw(Kw::In) if level == 7 && !no_in => Some("in".to_string()),
            Tok::Kw(Kw::Instanceof) if level == 7 => Some("instanceof".to_string()),
            _ => None,
        }
    }

    fn parse_binary(&mut self, level: usize, no_in: bool) -> PResult<Expr> {
        if level == 12 {
            return self.parse_unary(no_in);
        }
        let start = self.mark();
        let mut left = self.parse_binary(level + 1, no_in)?;
        while let Some(op) = self.binary_op_at(level, no_in) {
            self.bump();
            let right = self.parse_binary(level + 1, no_in)?;
            left = Expr::Binary {
                op,
                left: Box::new(left),
                right: Box::new(right),
                span: self.span_from(start),
            };
        }
        Ok(left)
    }

    fn parse_unary(&mut self, no_in: bool) -> PResult<Expr> {
        let start = self.mark();
        let op: Option<String> = match self.tok() {
            Tok::Punct(p @ ("!" | "~" | "+" | "-")) => Some(p.to_string()),
            Tok::Punct(p @ ("++" | "--")) => {
                let p = *p;
                self.bump();
                let operand = self.parse_unary(no_in)?;
                return Ok(Expr::Update {
                    op: p.to_string(),
                    operand: Box::new(operand),
                    prefix: true,
                    span: self.span_from(start),
                });
            }
            Tok::Kw(Kw::Typeof) => Some("typeof".into()),
            Tok::Kw(Kw::Void) => Some("void".into()),
            Tok::Kw(Kw::Delete) => Some("delete".into()),
            Tok::Ident(n) if n == "await" && starts_expr(self.nth(1)) => Some("await".into()),
            _ => None,
        };
        if let Some(op) = op {
            self.bump();
            let operand = self.parse_unary(no_in)?;
            return Ok(Expr::Unary {
                op,
                operand: Box::new(operand),
                span: self.span_from(start),
            });
        }
        let e = self.parse_call_chain(true)?;
        if matches!(self.tok(), Tok::Punct("++" | "--")) && !self.token().nl_before {
            let Tok::Punct(p) = self.tok() else { unreachable!() };
            let p = *p;
            self.bump();
            return Ok(Expr::Update {
                op: p.to_string(),
                operand: Box::new(e),
                prefix: false,
                span: self.span_from(start),
            });
        }
        Ok(e)
    }

    fn parse_call_chain(&mut self, allow_call: bool) -> PResult<Expr> {
        let start = self.mark();
        let mut e = if self.is_kw(Kw::New) {
            self.bump();
            let callee = self.parse_call_chain(false)?;
            let args = if self.is_punct("(") {
                self.parse_args()?
            } else {
                Vec::new()
            };
            Expr::New {
                callee: Box::new(callee),
                args,
                span: self.span_from(start),
            }
        } else {
            self.parse_primary()?
        };
        loop {
            if self.eat_punct(".") || self.eat_punct("?.") {
                let name = self.prop_name()?;
                e = Expr::Member {
                    object: Box::new(e),
                    property: MemberProp::Static(name),
                    span: self.span_from(start),
                };
            } else if self.is_punct("[") {
                self.bump();
                let idx = self.parse_expression(false)?;
                self.expect_punct("]")?;
                e = Expr::Member {
                    object: Box::new(e),
                    property: MemberProp::Computed(Box::new(idx)),
                    span: self.span_from(start),
                };
            } else if allow_call && self.is_punct("(") {
                let args = self.parse_args()?;
                e = Expr::Call {
                    callee: Box::new(e),
                    args,
                    span: self.span_from(start),
                };
            } else if allow_call && matches!(self.tok(), Tok::Template(_)) {
                // Tagged template: model as a call taking the template.
                let arg = self.parse_primary()?;
                e = Expr::Call {
                    callee: Box::new(e),
                    args: vec![arg],
                    span: self.span_from(start),
                };
            } else {
                return Ok(e);
            }
        }
    }

    fn parse_args(&mut self) -> PResult<Vec<Expr>> {
        self.expect_punct("(")?;
        let mut args = Vec::new();
        while !self.is_punct(")") {
            let start = self.mark();
            if self.eat_punct("...") {
                let inner = self.parse_assignment(false)?;
                args.push(Expr::Spread {
                    expr: Box::new(inner),
                    span: self.span_from(start),
                });
            } else {
                args.push(self.parse_assignment(false)?);
            }
            if !self.eat_punct(",") {
                break;
            }
        }
        self.expect_punct(")")?;
        Ok(args)
    }

    fn parse_primary(&mut self) -> PResult<Expr> {
        let start = self.mark();
        let span1 = self.token().span;
        match self.tok() {
            Tok::Punct("(") => {
                self.bump();
                let e = self.parse_expression(false)?;
                self.expect_punct(")")?;
                Ok(e)
            }
            Tok::Ident(n) => {
                let name = n.clone();
                self.bump();
                Ok(Expr::Ident { name, span: span1 })
            }
            Tok::Kw(Kw::This) => {
                self.bump();
                Ok(Expr::This { span: span1 })
            }
            Tok::Kw(Kw::True) => {
                self.bump();
                Ok(Expr::Literal {
                    value: Lit::Bool(true),
                    span: span1,
                })
            }
            Tok::Kw(Kw::False) => {
                self.bump();
                Ok(Expr::Literal {
                    value: Lit::Bool(false),
                    span: span1,
                })
            }
            Tok::Kw(Kw::Null) => {
                self.bump();
                Ok(Expr::Literal {
                    value: Lit::Null,
                    span: span1,
                })
            }
            Tok::Kw(Kw::Undefined) => {
                self.bump();
                Ok(Expr::Literal {
                    value: Lit::Undefined,
                    span: span1,
                })
            }
            Tok::Num(n) => {
                let n = n.clone();
                self.bump();
                Ok(Expr::Literal {
                    value: Lit::Num(n),
                    span: span1,
                })
            }
            Tok::Str(s) => {
                let s = s.clone();
                self.bump();
                Ok(Expr::Literal {
                    value: Lit::Str(s),
                    span: span1,
                })
            }
            Tok::Regex(r) => {
                let r = r.clone();
                self.bump();
                Ok(Expr::Literal {
                    value: Lit::Regex(r),
                    span: span1,
                })
            }
            Tok::Template(pieces) => {
                self.bump();
                let mut parts = Vec::new();
                for piece in pieces {
                    match piece {
                        TplPiece::Text(t) => parts.push(TplPart::Text(t.clone())),
                        TplPiece::Expr(inner) => {
                            let e = self.parse_subexpr(inner, span1);
                            parts.push(TplPart::Expr(Box::new(e)));
                        }
                    }
                }
                Ok(Expr::Template { parts, span: span1 })
            }
            Tok::Punct("[") => {
                self.bump();
                let mut elems = Vec::new();
                while !self.is_punct("]") {
                    if self.is_punct(",") {
                        self.bump(); // hole
                        elems.push(Expr::Literal {
                            value: Lit::Undefined,
                            span: self.token().span,
                        });
                        continue;
                    }
                    let estart = self.mark();
                    if self.eat_punct("...") {
                        let inner = self.parse_assignment(false)?;
                        elems.push(Expr::Spread {
                            expr: Box::new(inner),
                            span: self.span_from(estart),
                        });
                    } else {
                        elems.push(self.parse_assignment(false)?);
                    }
                    if !self.eat_punct(",") {
                        break;
                    }
                }
                self.expect_punct("]")?;
                Ok(Expr::Array {
                    elems,
                    span: self.span_from(start),
                })
            }
            Tok::Punct("{") => self.parse_object(),
            Tok::Kw(Kw::Function) => {
                self.bump();
                let name = match self.tok() {
                    Tok::Ident(n) => {
                        let n = n.clone();
                        self.bump();
                        Some(n)
                    }
                    _ => None,
                };
                let fn_id = self.parse_fn_tail(name, start)?;
                Ok(Expr::Function {
                    fn_id,
                    span: self.span_from(start),
                })
            }
            _ => Err(self.err("expected expression")),
        }
    }

    fn parse_object(&mut self) -> PResult<Expr> {
        let start = self.mark();
        self.expect_punct("{")?;
        let mut props = Vec::new();
        while !self.is_punct("}") {
            if self.at_eof() {
                return Err(self.err("unexpected end of input in object literal"));
            }
            if self.eat_punct("...") {
                let v = self.parse_assignment(false)?;
                props.push((PropKey::Spread, v));
            } else {
                // get/set accessors: an ident `get`/`set` directly followed
                // by another key token is an accessor definition.
                if matches!(self.tok(), Tok::Ident(n) if n == "get" || n == "set")
                    && !matches!(self.nth(1), Tok::Punct(":" | "," | "(" | "}"))
                {
                    self.bump();
                }
                let kstart = self.mark();
                let key = match self.tok() {
                    Tok::Ident(n) => {
                        let n = n.clone();
                        self.bump();
                        PropKey::Ident(n)
                    }
                    Tok::Kw(k) => {
                        let n = kw_text(*k).to_string();
                        self.bump();
                        PropKey::Ident(n)
                    }
                    Tok::Str(s) => {
                        let s = s.clone();
                        self.bump();
                        PropKey::Str(s)
                    }
                    Tok::Num(n) => {
                        let n = n.clone();
                        self.bump();
                        PropKey::Num(n)
                    }
                    Tok::Punct("[") => {
                        self.bump();
                        let e = self.parse_assignment(false)?;
                        self.expect_punct("]")?;
                        PropKey::Computed(Box::new(e))
                    }
                    _ => return Err(self.err("expected property key")),
                };
                let value = if self.is_punct("(") {
                    // Method shorthand.
                    let name = key.as_static().map(|s| s.to_string());
                    let fn_id = self.parse_fn_tail(name, kstart)?;
                    Expr::Function {
                        fn_id,
                        span: self.span_from(kstart),
                    }
                } else if self.eat_punct(":") {
                    self.parse_assignment(false)?
                } else {
                    match &key {
                        PropKey::Ident(n) => Expr::Ident {
                            name: n.clone(),
                            span: self.span_from(kstart),
                        },
                        _ => return Err(self.err("expected `:` after property key")),
                    }
                };
                props.push((key, value));
            }
            if !self.eat_punct(",") {
                break;
            }
        }
        self.expect_punct("}")?;
        Ok(Expr::Object {
            props,
            span: self.span_from(start),
        })
    }

    /// Parses one interpolation token stream from a template literal by
    /// temporarily swapping the cursor onto it.
    fn parse_subexpr(&mut self, inner: &'a [Token], outer_span: Span) -> Expr {
        let saved_toks = self.toks;
        let saved_pos = self.pos;
        self.toks = inner;
        self.pos = 0;
        let parsed = self.parse_expression(false);
        self.toks = saved_toks;
        self.pos = saved_pos;
        match parsed {
            Ok(e) => e,
            Err(msg) => {
                self.st
                    .repairs
                    .push(format!("template interpolation dropped: {msg}"));
                Expr::Literal {
                    value: Lit::Undefined,
                    span: outer_span,
                }
            }
        }
    }
}

fn starts_expr(t: &Tok) -> bool {
    matches!(
        t,
        Tok::Ident(_)
            | Tok::Num(_)
            | Tok::Str(_)
            | Tok::Template(_)
            | Tok::Regex(_)
            | Tok::Punct("(" | "[" | "{" | "!" | "~" | "+" | "-" | "++" | "--")
            | Tok::Kw(
                Kw::This
                    | Kw::New
                    | Kw::Function
                    | Kw::True
                    | Kw::False
                    | Kw::Null
                    | Kw::Undefined
                    | Kw::Typeof
                    | Kw::Void
                    | Kw::Delete
            )
    )
}

fn kw_text(k: Kw) -> &'static str {
    use Kw::*;
    match k {
        Function => "function", Var => "var", Let => "let", Const => "const",
        Return => "return", If => "if", Else => "else", For => "for",
        While => "while", Do => "do", New => "new", Typeof => "typeof",
        Delete => "delete", In => "in", Of => "of", True => "true",
        False => "false", Null => "null", Undefined => "undefined",
        This => "this", Break => "break", Continue => "continue",
        Switch => "switch", Case => "case", Default => "default",
        Try => "try", Catch => "catch", Finally => "finally",
        Throw => "throw", Instanceof => "instanceof", Void => "void",
        Class => "class", Import => "import", Export => "export",
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(src: &str) -> ScriptAst {
        parse_script(src).expect("parse failed")
    }

    #[test]
    fn empty_file() {
        let ast = p("");
        assert!(ast.body.is_empty());
        assert!(ast.functions.is_empty());
    }

    #[test]
    fn unbalanced_braces_fail_whole_file() {
        assert!(parse_script("function f() { if (x) {").is_err());
    }

    #[test]
    fn page_registration_shape() {
        let ast = p(r#"
Page({
  onLoad: function () {
    wx.getLocation({
      success: res => this.setData({ lat: res.latitude })
    });
  }
});
"#);
        assert_eq!(ast.body.len(), 1);
        let Stmt::Expr(Expr::Call { callee, args, .. }) = &ast.body[0] else {
            panic!("expected call statement");
        };
        assert_eq!(callee.as_ident(), Some("Page"));
        let onload = args[0].object_prop("onLoad").expect("onLoad prop");
        let Expr::Function { fn_id, .. } = onload else {
            panic!("onLoad should be a function");
        };
        let f = ast.function(*fn_id);
        assert_eq!(f.name, None);
        assert_eq!(f.body.len(), 1);

        // Inside: wx.getLocation({ success: <arrow> })
        let Stmt::Expr(Expr::Call { callee, args, .. }) = &f.body[0] else {
            panic!("expected call inside onLoad");
        };
        assert_eq!(
            callee.static_path().unwrap(),
            vec!["wx", "getLocation"]
        );
        let success = args[0].object_prop("success").expect("success prop");
        let Expr::Function { fn_id: arrow_id, .. } = success else {
            panic!("success should be a function");
        };
        let arrow = ast.function(*arrow_id);
        assert_eq!(arrow.params, vec!["res"]);
        assert_eq!(arrow.parent, Some(*fn_id));
        // Expression-bodied arrow becomes a single return.
        assert!(matches!(arrow.body[0], Stmt::Return { .. }));
    }

    #[test]
    fn asi_between_lines_and_after_return() {
        let ast = p("var a = 1\nvar b = 2");
        assert_eq!(ast.body.len(), 2);

        let ast = p("function f() { return\n1 }");
        let Stmt::Return { value, .. } = &ast.functions[0].body[0] else {
            panic!("expected return");
        };
        assert!(value.is_none());
    }

    #[test]
    fn postfix_update_does_not_cross_newline() {
        let ast = p("a\n++b");
        assert_eq!(ast.body.len(), 2);
        assert!(matches!(
            &ast.body[1],
            Stmt::Expr(Expr::Update { prefix: true, .. })
        ));
    }

    #[test]
    fn class_degrades_to_opaque_and_parsing_continues() {
        let ast = p("class Foo { go() { return 1 } }\nvar ok = count;");
        assert!(matches!(&ast.body[0], Stmt::Opaque { .. }));
        assert!(matches!(&ast.body[1], Stmt::VarDecl { .. }));
        assert!(!ast.repairs.is_empty());
    }

    #[test]
    fn opaque_read_write_summary() {
        let ast = p("export y = x + z;");
        let Stmt::Opaque { reads, writes, .. } = &ast.body[0] else {
            panic!("expected opaque, got {:?}", ast.body[0]);
        };
        assert_eq!(writes, &["y"]);
        assert_eq!(reads, &["x", "z"]);
    }

    #[test]
    fn destructuring_declaration() {
        let ast = p("var { latitude, longitude: lng } = res;");
        let Stmt::VarDecl { decls, .. } = &ast.body[0] else {
            panic!("expected var decl");
        };
        let Pattern::Object(pairs) = &decls[0].pattern else {
            panic!("expected object pattern");
        };
        assert_eq!(
            pairs,
            &[
                ("latitude".to_string(), "latitude".to_string()),
                ("longitude".to_string(), "lng".to_string())
            ]
        );
    }

    #[test]
    fn destructured_param_gets_prologue() {
        let ast = p("function f({ name }) { return name; }");
        let f = &ast.functions[0];
        assert_eq!(f.params, vec!["__arg0"]);
        let Stmt::VarDecl { decls, .. } = &f.body[0] else {
            panic!("expected prologue decl");
        };
        assert!(matches!(&decls[0].pattern, Pattern::Object(_)));
        assert_eq!(
            decls[0].init.as_ref().and_then(|e| e.as_ident()),
            Some("__arg0")
        );
    }

    #[test]
    fn for_variants() {
        let ast = p("for (var i = 0; i < 3; i++) { go(i); } for (var k in obj) use(k); for (x of xs) use(x);");
        assert!(matches!(&ast.body[0], Stmt::For { .. }));
        assert!(matches!(&ast.body[1], Stmt::ForIn { decl_name, .. } if decl_name == "k"));
        assert!(matches!(&ast.body[2], Stmt::ForIn { decl_name, .. } if decl_name == "x"));
    }

    #[test]
    fn template_interpolation_is_parsed() {
        let ast = p("var s = `v=${a.b}`;");
        let Stmt::VarDecl { decls, .. } = &ast.body[0] else {
            panic!()
        };
        let Some(Expr::Template { parts, .. }) = &decls[0].init else {
            panic!("expected template");
        };
        let TplPart::Expr(e) = &parts[1] else {
            panic!("expected interpolation");
        };
        assert_eq!(e.static_path().unwrap(), vec!["a", "b"]);
    }

    #[test]
    fn arrow_forms() {
        let ast = p("var f = x => x + 1; var g = (a, b) => { return a; }; var h = () => ({ ok: 1 });");
        assert_eq!(ast.functions.len(), 3);
        assert_eq!(ast.functions[0].params, vec!["x"]);
        assert_eq!(ast.functions[1].params, vec!["a", "b"]);
        assert!(ast.functions[2].params.is_empty());
        let Stmt::Return { value: Some(e), .. } = &ast.functions[2].body[0] else {
            panic!("expected return");
        };
        assert!(matches!(e, Expr::Object { .. }));
    }

    #[test]
    fn method_shorthand_and_accessors() {
        let ast = p("var o = { go() { return 1 }, get size() { return 2 }, 'k-v': 3, [dyn]: 4 };");
        let Stmt::VarDecl { decls, .. } = &ast.body[0] else {
            panic!()
        };
        let Some(Expr::Object { props, .. }) = &decls[0].init else {
            panic!()
        };
        assert_eq!(props.len(), 4);
        assert!(matches!(&props[0].1, Expr::Function { .. }));
        assert_eq!(props[1].0.as_static(), Some("size"));
        assert!(matches!(&props[1].1, Expr::Function { .. }));
        assert_eq!(props[2].0.as_static(), Some("k-v"));
        assert!(matches!(&props[3].0, PropKey::Computed(_)));
    }

    #[test]
    fn spreads() {
        let ast = p("f(...args); var o = { ...rest }; var a = [...xs];");
        let Stmt::Expr(Expr::Call { args, .. }) = &ast.body[0] else {
            panic!()
        };
        assert!(matches!(&args[0], Expr::Spread { .. }));
        let Stmt::VarDecl { decls, .. } = &ast.body[1] else {
            panic!()
        };
        let Some(Expr::Object { props, .. }) = &decls[0].init else {
            panic!()
        };
        assert!(matches!(&props[0].0, PropKey::Spread));
    }

    #[test]
    fn keyword_as_property_name() {
        let ast = p("var x = map.delete; var o = { default: 1, in: 2 };");
        let Stmt::VarDecl { decls, .. } = &ast.body[0] else {
            panic!()
        };
        assert_eq!(
            decls[0].init.as_ref().unwrap().static_path().unwrap(),
            vec!["map", "delete"]
        );
    }

    #[test]
    fn switch_try_dowhile_label() {
        let ast = p(r#"
outer: for (var i = 0; i < 2; i++) { break outer; }
switch (v) { case 1: go(); break; default: stop(); }
try { risky(); } catch (e) { log(e); } finally { done(); }
do { tick(); } while (more);
"#);
        assert_eq!(ast.body.len(), 4);
        assert!(matches!(&ast.body[1], Stmt::Switch { cases, .. } if cases.len() == 2));
        assert!(
            matches!(&ast.body[2], Stmt::TryCatch { catch_param: Some(p), .. } if p == "e")
        );
        assert!(matches!(&ast.body[3], Stmt::DoWhile { .. }));
    }

    #[test]
    fn async_await() {
        let ast = p("async function f() { var r = await g(); return r; }");
        let f = &ast.functions[0];
        let Stmt::VarDecl { decls, .. } = &f.body[0] else {
            panic!()
        };
        let Some(Expr::Unary { op, operand, .. }) = &decls[0].init else {
            panic!("expected await unary, got {:?}", decls[0].init)
        };
        assert_eq!(op, "await");
        assert!(matches!(**operand, Expr::Call { .. }));
    }

    #[test]
    fn module_exports_assignment() {
        let ast = p("module.exports = { post: post }; exports.get = get;");
        assert_eq!(ast.body.len(), 2);
        let Stmt::Expr(Expr::Assign { target, .. }) = &ast.body[0] else {
            panic!()
        };
        assert_eq!(target.static_path().unwrap(), vec!["module", "exports"]);
    }

    #[test]
    fn new_and_ternary_and_sequence() {
        let ast = p("var s = new Date().getTime(); var t = a ? b : c; (x = 1, y = 2);");
        assert!(matches!(&ast.body[2], Stmt::Expr(Expr::Sequence { exprs, .. }) if exprs.len() == 2));
        let Stmt::VarDecl { decls, .. } = &ast.body[0] else {
            panic!()
        };
        let Some(Expr::Call { callee, .. }) = &decls[0].init else {
            panic!()
        };
        assert!(matches!(**callee, Expr::Member { .. }));
    }
}
