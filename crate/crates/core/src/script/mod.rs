//! Script front end: lexing, parsing, app/page model extraction, and the
//! lifecycle-aware call graph over all of a package's script files.

pub mod ast;
pub mod callgraph;
pub mod lexer;
pub mod model;
pub mod parser;

pub use ast::{Expr, FnId, ScriptAst, Span, Stmt};
pub use callgraph::{CallGraph, CallTarget, EdgeKind, Node, Resolver};
pub use parser::{parse_script, ScriptError};
