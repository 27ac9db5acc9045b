//! The `.tsg` description language: lexer, parser, canonical serializer and
//! registry-aware validation.
//!
//! ```text
//! document  := statement*
//! statement := decl ';' | chain ';'
//! decl      := IDENT '::' CLASS args?
//! chain     := endpoint (('->' | '-->') endpoint)+
//! endpoint  := ports? (decl | CLASS args | IDENT) ports?
//! ports     := '[' port (',' port)* ']'
//! port      := INT | '-' INT          // '-' marks a 1-based config index
//! args      := '(' (value (',' value)*)? ')'
//! ```

mod ast;
mod lexer;
mod parser;
mod serialize;
mod validate;

use std::fmt;

pub use ast::*;
pub use lexer::{tokenize, Token, TokenKind};
pub use parser::parse_document;
pub use serialize::{serialize_document, serialize_statement};
pub use validate::{has_errors, validate_document, Diagnostic, Severity};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct ParseError {
    pub message: String,
    pub span: SourceSpan,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.span, self.message)
    }
}
