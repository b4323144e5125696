//! Hand-rolled lexer for the ECMAScript dialect found in sub-app logic
//! layers. Produces a flat token stream; template literals carry their
//! interpolation expressions as nested token streams.

use super::ast::Span;

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Ident(String),
    Kw(Kw),
    Num(String),
    Str(String),
    Template(Vec<TplPiece>),
    Regex(String),
    Punct(&'static str),
    Eof,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TplPiece {
    Text(String),
    Expr(Vec<Token>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kw {
    Function, Var, Let, Const, Return, If, Else, For, While, Do, New, Typeof,
    Delete, In, Of, True, False, Null, Undefined, This, Break, Continue,
    Switch, Case, Default, Try, Catch, Finally, Throw, Instanceof, Void,
    Class, Import, Export,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
    /// A line terminator appeared between the previous token and this one
    /// (drives semicolon insertion).
    pub nl_before: bool,
}

#[derive(Debug)]
pub struct LexError {
    pub message: String,
    pub offset: usize,
}

fn keyword(s: &str) -> Option<Kw> {
    use Kw::*;
    Some(match s {
        "function" => Function, "var" => Var, "let" => Let, "const" => Const,
        "return" => Return, "if" => If, "else" => Else, "for" => For,
        "while" => While, "do" => Do, "new" => New, "typeof" => Typeof,
        "delete" => Delete, "in" => In, "of" => Of, "true" => True,
        "false" => False, "null" => Null, "undefined" => Undefined,
        "this" => This, "break" => Break, "continue" => Continue,
        "switch" => Switch, "case" => Case, "default" => Default, "try" => Try,
        "catch" => Catch, "finally" => Finally, "throw" => Throw,
        "instanceof" => Instanceof, "void" => Void, "class" => Class,
        "import" => Import, "export" => Export,
        _ => return None,
    })
}

// Longest first so the scanner can take the first prefix match.
const PUNCTS: &[&str] = &[
    ">>>=", "===", "!==", "**=", "...", "<<=", ">>=", ">>>", "&&=", "||=",
    "??=", "=>", "==", "!=", "<=", ">=", "&&", "||", "??", "?.", "++", "--",
    "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<", ">>", "**",
    "{", "}", "(", ")", "[", "]", ";", ",", ".", "<", ">", "+", "-", "*",
    "/", "%", "&", "|", "^", "!", "~", "?", ":", "=",
];

pub struct Lexer<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
    nl_pending: bool,
    /// Last significant token kind, for regex-vs-division disambiguation.
    prev: PrevTok,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum PrevTok {
    None,
    Value,    // ident, literal, ++/--, closing ) ] — division follows
    Operator, // everything else — a regex may follow
}

impl<'a> Lexer<'a> {
    pub fn new(src: &'a str) -> Self {
        Lexer {
            src,
            bytes: src.as_bytes(),
            pos: 0,
            nl_pending: false,
            prev: PrevTok::None,
        }
    }

    /// Lexes the whole input. Also verifies brace balance: a file whose
    /// braces never re-balance cannot be recovered statement-wise and is a
    /// fatal per-file parse error.
    pub fn lex_all(src: &str) -> Result<Vec<Token>, LexError> {
        let mut lx = Lexer::new(src);
        let mut out = Vec::new();
        let mut depth: i64 = 0;
        loop {
            let t = lx.next_token(0)?;
            match &t.tok {
                Tok::Punct("{") => depth += 1,
                Tok::Punct("}") => {
                    depth -= 1;
                    if depth < 0 {
                        return Err(LexError {
                            message: "unbalanced braces: unexpected `}`".into(),
                            offset: t.span.start as usize,
                        });
                    }
                }
                _ => {}
            }
            let eof = t.tok == Tok::Eof;
            out.push(t);
            if eof {
                break;
            }
        }
        if depth != 0 {
            return Err(LexError {
                message: format!("unbalanced braces: {depth} unclosed"),
                offset: src.len(),
            });
        }
        Ok(out)
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn peek_at(&self, off: usize) -> Option<u8> {
        self.bytes.get(self.pos + off).copied()
    }

    fn skip_trivia(&mut self) -> Result<(), LexError> {
        loop {
            match self.peek() {
                Some(b'\n') => {
                    self.nl_pending = true;
                    self.pos += 1;
                }
                Some(c) if (c as char).is_whitespace() => self.pos += 1,
                Some(0xE2..=0xEF) => {
                    // Multi-byte char: whitespace like U+00A0/U+2028 or real
                    // text. Decode one char.
                    let ch = self.src[self.pos..].chars().next().unwrap();
                    if ch.is_whitespace() {
                        if ch == '\u{2028}' || ch == '\u{2029}' {
                            self.nl_pending = true;
                        }
                        self.pos += ch.len_utf8();
                    } else {
                        return Ok(());
                    }
                }
                Some(b'/') if self.peek_at(1) == Some(b'/') => {
                    while let Some(c) = self.peek() {
                        if c == b'\n' {
                            break;
                        }
                        self.pos += 1;
                    }
                }
                Some(b'/') if self.peek_at(1) == Some(b'*') => {
                    let start = self.pos;
                    self.pos += 2;
                    loop {
                        match self.peek() {
                            None => {
                                return Err(LexError {
                                    message: "unterminated block comment".into(),
                                    offset: start,
                                })
                            }
                            Some(b'*') if self.peek_at(1) == Some(b'/') => {
                                self.pos += 2;
                                break;
                            }
                            Some(b'\n') => {
                                self.nl_pending = true;
                                self.pos += 1;
                            }
                            _ => self.pos += 1,
                        }
                    }
                }
                _ => return Ok(()),
            }
        }
    }

    /// `tpl_depth` guards against runaway recursion from nested templates.
    fn next_token(&mut self, tpl_depth: usize) -> Result<Token, LexError> {
        self.skip_trivia()?;
        let nl = std::mem::take(&mut self.nl_pending);
        let start = self.pos;
        let Some(c) = self.peek() else {
            return Ok(Token {
                tok: Tok::Eof,
                span: Span::new(start, start),
                nl_before: nl,
            });
        };

        let tok = if c == b'"' || c == b'\'' {
            self.prev = PrevTok::Value;
            Tok::Str(self.lex_string(c)?)
        } else if c == b'`' {
            if tpl_depth > 16 {
                return Err(LexError {
                    message: "template nesting too deep".into(),
                    offset: start,
                });
            }
            self.prev = PrevTok::Value;
            Tok::Template(self.lex_template(tpl_depth)?)
        } else if c.is_ascii_digit() || (c == b'.' && self.peek_at(1).is_some_and(|d| d.is_ascii_digit())) {
            self.prev = PrevTok::Value;
            Tok::Num(self.lex_number())
        } else if c == b'/' && self.prev != PrevTok::Value {
            self.prev = PrevTok::Value;
            Tok::Regex(self.lex_regex()?)
        } else if is_ident_start(self.src[self.pos..].chars().next().unwrap()) {
            let word = self.lex_word();
            match keyword(&word) {
                Some(k) => {
                    self.prev = match k {
                        Kw::This | Kw::True | Kw::False | Kw::Null | Kw::Undefined => PrevTok::Value,
                        _ => PrevTok::Operator,
                    };
                    Tok::Kw(k)
                }
                None => {
                    self.prev = PrevTok::Value;
                    Tok::Ident(word)
                }
            }
        } else if let Some(p) = PUNCTS
            .iter()
            .find(|p| self.src[self.pos..].starts_with(**p))
        {
            self.pos += p.len();
            self.prev = match *p {
                ")" | "]" | "++" | "--" => PrevTok::Value,
                _ => PrevTok::Operator,
            };
            Tok::Punct(p)
        } else {
            return Err(LexError {
                message: format!(
                    "unexpected character `{}`",
                    self.src[self.pos..].chars().next().unwrap()
                ),
                offset: start,
            });
        };

        Ok(Token {
            tok,
            span: Span::new(start, self.pos),
            nl_before: nl,
        })
    }

    fn lex_word(&mut self) -> String {
        let start = self.pos;
        while self.pos < self.bytes.len() {
            let ch = self.src[self.pos..].chars().next().unwrap();
            if is_ident_continue(ch) {
                self.pos += ch.len_utf8();
            } else {
                break;
            }
        }
        self.src[start..self.pos].to_string()
    }

    fn lex_number(&mut self) -> String {
        let start = self.pos;
        if self.peek() == Some(b'0')
            && matches!(self.peek_at(1), Some(b'x' | b'X' | b'o' | b'O' | b'b' | b'B'))
        {
            self.pos += 2;
            while self.peek().is_some_and(|c| c.is_ascii_alphanumeric()) {
                self.pos += 1;
            }
        } else {
            while self
                .peek()
                .is_some_and(|c| c.is_ascii_digit() || c == b'.')
            {
                self.pos += 1;
            }
            if matches!(self.peek(), Some(b'e' | b'E')) {
                self.pos += 1;
                if matches!(self.peek(), Some(b'+' | b'-')) {
                    self.pos += 1;
                }
                while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                    self.pos += 1;
                }
            }
        }
        self.src[start..self.pos].to_string()
    }

    fn lex_string(&mut self, quote: u8) -> Result<String, LexError> {
        let start = self.pos;
        self.pos += 1;
        let mut out = String::new();
        loop {
            match self.peek() {
                None | Some(b'\n') => {
                    return Err(LexError {
                        message: "unterminated string literal".into(),
                        offset: start,
                    })
                }
                Some(c) if c == quote => {
                    self.pos += 1;
                    return Ok(out);
                }
                Some(b'\\') => {
                    self.pos += 1;
                    self.lex_escape(&mut out)?;
                }
                Some(_) => {
                    let ch = self.src[self.pos..].chars().next().unwrap();
                    out.push(ch);
                    self.pos += ch.len_utf8();
                }
            }
        }
    }

    fn lex_escape(&mut self, out: &mut String) -> Result<(), LexError> {
        let Some(c) = self.peek() else {
            return Err(LexError {
                message: "dangling escape at end of input".into(),
                offset: self.pos,
            });
        };
        self.pos += 1;
        match c {
            b'n' => out.push('\n'),
            b't' => out.push('\t'),
            b'r' => out.push('\r'),
            b'0' => out.push('\0'),
            b'\n' => {} // line continuation
            b'u' => {
                let hex = if self.peek() == Some(b'{') {
                    self.pos += 1;
                    let s = self.pos;
                    while self.peek().is_some_and(|c| c != b'}') {
                        self.pos += 1;
                    }
                    let h = &self.src[s..self.pos];
                    self.pos += 1; // }
                    h.to_string()
                } else {
                    let s = self.pos;
                    for _ in 0..4 {
                        if self.peek().is_some_and(|c| c.is_ascii_hexdigit()) {
                            self.pos += 1;
                        }
                    }
                    self.src[s..self.pos].to_string()
                };
                match u32::from_str_radix(&hex, 16).ok().and_then(char::from_u32) {
                    Some(ch) => out.push(ch),
                    None => out.push('\u{FFFD}'),
                }
            }
            b'x' => {
                let s = self.pos;
                for _ in 0..2 {
                    if self.peek().is_some_and(|c| c.is_ascii_hexdigit()) {
                        self.pos += 1;
                    }
                }
                match u32::from_str_radix(&self.src[s..self.pos], 16)
                    .ok()
                    .and_then(char::from_u32)
                {
                    Some(ch) => out.push(ch),
                    None => out.push('\u{FFFD}'),
                }
            }
            _ => {
                // Identity escape (\' \" \\ \/ and anything else).
                let ch = self.src[self.pos - 1..].chars().next().unwrap();
                out.push(ch);
                self.pos = self.pos - 1 + ch.len_utf8();
            }
        }
        Ok(())
    }

    fn lex_template(&mut self, tpl_depth: usize) -> Result<Vec<TplPiece>, LexError> {
        let start = self.pos;
        self.pos += 1; // `
        let mut pieces = Vec::new();
        let mut text = String::new();
        loop {
            match self.peek() {
                None => {
                    return Err(LexError {
                        message: "unterminated template literal".into(),
                        offset: start,
                    })
                }
                Some(b'`') => {
                    self.pos += 1;
                    if !text.is_empty() {
                        pieces.push(TplPiece::Text(text));
                    }
                    return Ok(pieces);
                }
                Some(b'\\') => {
                    self.pos += 1;
                    self.lex_escape(&mut text)?;
                }
                Some(b'$') if self.peek_at(1) == Some(b'{') => {
                    if !text.is_empty() {
                        pieces.push(TplPiece::Text(std::mem::take(&mut text)));
                    }
                    self.pos += 2;
                    let mut depth = 0usize;
                    let mut inner = Vec::new();
                    loop {
                        let t = self.next_token(tpl_depth + 1)?;
                        match &t.tok {
                            Tok::Eof => {
                                return Err(LexError {
                                    message: "unterminated template interpolation".into(),
                                    offset: start,
                                })
                            }
                            Tok::Punct("{") => depth += 1,
                            Tok::Punct("}") if depth == 0 => break,
                            Tok::Punct("}") => depth -= 1,
                            _ => {}
                        }
                        inner.push(t);
                    }
                    inner.push(Token {
                        tok: Tok::Eof,
                        span: Span::new(self.pos, self.pos),
                        nl_before: false,
                    });
                    pieces.push(TplPiece::Expr(inner));
                }
                Some(b'\n') => {
                    text.push('\n');
                    self.pos += 1;
                }
                Some(_) => {
                    let ch = self.src[self.pos..].chars().next().unwrap();
                    text.push(ch);
                    self.pos += ch.len_utf8();
                }
            }
        }
    }

    fn lex_regex(&mut self) -> Result<String, LexError> {
        let start = self.pos;
        self.pos += 1; // /
        let mut in_class = false;
        loop {
            match self.peek() {
                None | Some(b'\n') => {
                    return Err(LexError {
                        message: "unterminated regex literal".into(),
                        offset: start,
                    })
                }
                Some(b'\\') => self.pos += 2,
                Some(b'[') => {
                    in_class = true;
                    self.pos += 1;
                }
                Some(b']') => {
                    in_class = false;
                    self.pos += 1;
                }
                Some(b'/') if !in_class => {
                    self.pos += 1;
                    break;
                }
                Some(_) => {
                    let ch = self.src[self.pos..].chars().next().unwrap();
                    self.pos += ch.len_utf8();
                }
            }
        }
        while self.peek().is_some_and(|c| c.is_ascii_alphabetic()) {
            self.pos += 1;
        }
        Ok(self.src[start..self.pos].to_string())
    }
}

fn is_ident_start(ch: char) -> bool {
    ch.is_alphabetic() || ch == '_' || ch == '$'
}

fn is_ident_continue(ch: char) -> bool {
    ch.is_alphanumeric() || ch == '_' || ch == '$'
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lex(src: &str) -> Vec<Tok> {
        Lexer::lex_all(src)
            .unwrap()
            .into_iter()
            .map(|t| t.tok)
            .collect()
    }

    #[test]
    fn basic_stream() {
        let toks = lex("var x = wx.getLocation(1.5);");
        assert_eq!(
            toks,
            vec![
                Tok::Kw(Kw::Var),
                Tok::Ident("x".into()),
                Tok::Punct("="),
                Tok::Ident("wx".into()),
                Tok::Punct("."),
                Tok::Ident("getLocation".into()),
                Tok::Punct("("),
                Tok::Num("1.5".into()),
                Tok::Punct(")"),
                Tok::Punct(";"),
                Tok::Eof,
            ]
        );
    }

    #[test]
    fn strings_and_escapes() {
        assert_eq!(
            lex(r#"'a\'b' "c\nd""#),
            vec![Tok::Str("a'b".into()), Tok::Str("c\nd".into()), Tok::Eof]
        );
    }

    #[test]
    fn template_with_interpolation() {
        let toks = lex("`lat=${pos.latitude}!`");
        let Tok::Template(pieces) = &toks[0] else {
            panic!("expected template: {toks:?}");
        };
        assert_eq!(pieces.len(), 3);
        assert!(matches!(&pieces[0], TplPiece::Text(t) if t == "lat="));
        assert!(matches!(&pieces[1], TplPiece::Expr(inner) if inner.len() == 4));
        assert!(matches!(&pieces[2], TplPiece::Text(t) if t == "!"));
    }

    #[test]
    fn regex_vs_division() {
        assert_eq!(
            lex("a / b"),
            vec![
                Tok::Ident("a".into()),
                Tok::Punct("/"),
                Tok::Ident("b".into()),
                Tok::Eof
            ]
        );
        assert_eq!(
            lex("x = /ab+c/g"),
            vec![
                Tok::Ident("x".into()),
                Tok::Punct("="),
                Tok::Regex("/ab+c/g".into()),
                Tok::Eof
            ]
        );
    }

    #[test]
    fn comments_skipped_and_newline_flag_set() {
        let toks = Lexer::lex_all("a // c\n/* x\ny */ b").unwrap();
        assert_eq!(toks[1].tok, Tok::Ident("b".into()));
        assert!(toks[1].nl_before);
    }

    #[test]
    fn unbalanced_braces_fatal() {
        assert!(Lexer::lex_all("function f() { if (x) { }").is_err());
        assert!(Lexer::lex_all("} }").is_err());
    }

    #[test]
    fn unicode_identifiers_and_text() {
        let toks = lex("var 名字 = '地址'");
        assert_eq!(
            toks,
            vec![
                Tok::Kw(Kw::Var),
                Tok::Ident("名字".into()),
                Tok::Punct("="),
                Tok::Str("地址".into()),
                Tok::Eof
            ]
        );
    }
}
