//! Tokenizer for `.tsg` text.
//!
//! Argument lists are lexed in a separate mode: an argument runs up to the
//! next top-level `,` or `)`, so values like `10.0.0.1`, `-n` or
//! `http://host:8080/x` need no quoting. Arguments containing `(` are kept
//! whole as one balanced s-expression blob. `//` comments are only
//! recognised outside argument lists.

use super::ast::{parse_int_literal, SourceSpan};
use super::ParseError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    Ident,
    Int,
    /// Quoted string; `text` holds the unescaped contents.
    Str,
    /// Unquoted argument text.
    Word,
    Sexpr,
    ColonColon,
    Arrow,
    LongArrow,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Semi,
    Minus,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub text: String,
    pub span: SourceSpan,
}

pub(crate) struct LineIndex {
    starts: Vec<usize>,
}

impl LineIndex {
    pub(crate) fn new(text: &str) -> Self {
        let mut starts = vec![0];
        starts.extend(text.match_indices('\n').map(|(i, _)| i + 1));
        LineIndex { starts }
    }

    pub(crate) fn span(&self, text: &str, start: usize, end: usize) -> SourceSpan {
        let line = match self.starts.binary_search(&start) {
            Ok(i) => i,
            Err(i) => i - 1,
        };
        let column = text[self.starts[line]..start].chars().count() + 1;
        SourceSpan {
            start,
            end,
            line: line + 1,
            column,
        }
    }
}

struct Lexer<'a> {
    text: &'a str,
    bytes: &'a [u8],
    pos: usize,
    lines: LineIndex,
    tokens: Vec<Token>,
    bracket_depth: usize,
}

pub fn tokenize(text: &str) -> Result<Vec<Token>, ParseError> {
    let mut lexer = Lexer {
        text,
        bytes: text.as_bytes(),
        pos: 0,
        lines: LineIndex::new(text),
        tokens: Vec::new(),
        bracket_depth: 0,
    };
    lexer.run()?;
    Ok(lexer.tokens)
}

fn ident_start(b: u8) -> bool {
    b.is_ascii_alphabetic() || b == b'_'
}

fn ident_continue(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b == b'_'
}

impl<'a> Lexer<'a> {
    fn span(&self, start: usize, end: usize) -> SourceSpan {
        self.lines.span(self.text, start, end)
    }

    fn error(&self, start: usize, end: usize, message: impl Into<String>) -> ParseError {
        ParseError {
            message: message.into(),
            span: self.span(start, end),
        }
    }

    fn peek(&self, off: usize) -> Option<u8> {
        self.bytes.get(self.pos + off).copied()
    }

    fn push(&mut self, kind: TokenKind, start: usize, end: usize, text: String) {
        let span = self.span(start, end);
        self.tokens.push(Token { kind, text, span });
    }

    fn push_raw(&mut self, kind: TokenKind, len: usize) {
        let start = self.pos;
        self.pos += len;
        let text = self.text[start..self.pos].to_string();
        self.push(kind, start, self.pos, text);
    }

    fn skip_trivia(&mut self) {
        while let Some(b) = self.peek(0) {
            if b.is_ascii_whitespace() {
                self.pos += 1;
            } else if b == b'/' && self.peek(1) == Some(b'/') {
                while let Some(c) = self.peek(0) {
                    if c == b'\n' {
                        break;
                    }
                    self.pos += 1;
                }
            } else {
                break;
            }
        }
    }

    fn run(&mut self) -> Result<(), ParseError> {
        loop {
            self.skip_trivia();
            let Some(b) = self.peek(0) else {
                return Ok(());
            };
            let start = self.pos;
            match b {
                b':' if self.peek(1) == Some(b':') => self.push_raw(TokenKind::ColonColon, 2),
                b'-' if self.peek(1) == Some(b'-') && self.peek(2) == Some(b'>') => {
                    self.push_raw(TokenKind::LongArrow, 3)
                }
                b'-' if self.peek(1) == Some(b'>') => self.push_raw(TokenKind::Arrow, 2),
                b'-' if self.bracket_depth > 0 => self.push_raw(TokenKind::Minus, 1),
                b'[' => {
                    self.bracket_depth += 1;
                    self.push_raw(TokenKind::LBracket, 1)
                }
                b']' => {
                    self.bracket_depth = self.bracket_depth.saturating_sub(1);
                    self.push_raw(TokenKind::RBracket, 1)
                }
                b',' => self.push_raw(TokenKind::Comma, 1),
                b';' => self.push_raw(TokenKind::Semi, 1),
                b'(' => {
                    self.push_raw(TokenKind::LParen, 1);
                    self.lex_args()?;
                }
                b')' => return Err(self.error(start, start + 1, "unbalanced ')'")),
                b if b.is_ascii_digit() => {
                    while self.peek(0).is_some_and(|c| c.is_ascii_digit()) {
                        self.pos += 1;
                    }
                    let text = self.text[start..self.pos].to_string();
                    self.push(TokenKind::Int, start, self.pos, text);
                }
                b if ident_start(b) => {
                    self.pos += 1;
                    while let Some(c) = self.peek(0) {
                        if ident_continue(c) {
                            self.pos += 1;
                        } else if c == b'-' && self.peek(1).is_some_and(ident_continue) {
                            self.pos += 2;
                        } else {
                            break;
                        }
                    }
                    let text = self.text[start..self.pos].to_string();
                    self.push(TokenKind::Ident, start, self.pos, text);
                }
                _ => {
                    let ch = self.text[start..].chars().next().unwrap_or('?');
                    return Err(self.error(
                        start,
                        start + ch.len_utf8(),
                        format!("unexpected character '{ch}'"),
                    ));
                }
            }
        }
    }

    fn skip_ws(&mut self) {
        while self.peek(0).is_some_and(|b| b.is_ascii_whitespace()) {
            self.pos += 1;
        }
    }

    fn unclosed(&self) -> ParseError {
        self.error(self.pos, self.pos, "unclosed argument list")
    }

    /// Lexes from just after `(` through the matching `)`.
    fn lex_args(&mut self) -> Result<(), ParseError> {
        self.skip_ws();
        if self.peek(0) == Some(b')') {
            self.push_raw(TokenKind::RParen, 1);
            return Ok(());
        }
        loop {
            self.skip_ws();
            match self.peek(0) {
                None => return Err(self.unclosed()),
                Some(b')') | Some(b',') => {
                    return Err(self.error(self.pos, self.pos + 1, "empty argument"));
                }
                Some(b'"') => self.lex_string()?,
                Some(_) => self.lex_word()?,
            }
            self.skip_ws();
            match self.peek(0) {
                None => return Err(self.unclosed()),
                Some(b',') => self.push_raw(TokenKind::Comma, 1),
                Some(b')') => {
                    self.push_raw(TokenKind::RParen, 1);
                    return Ok(());
                }
                Some(_) => {
                    return Err(self.error(
                        self.pos,
                        self.pos + 1,
                        "expected ',' or ')' in argument list",
                    ))
                }
            }
        }
    }

    /// Consumes a quoted string starting at `"`; returns the unescaped text.
    fn scan_string(&mut self) -> Result<String, ParseError> {
        let start = self.pos;
        self.pos += 1;
        let mut out = String::new();
        loop {
            let Some(c) = self.text[self.pos..].chars().next() else {
                return Err(self.error(start, self.pos, "unterminated string"));
            };
            self.pos += c.len_utf8();
            match c {
                '"' => return Ok(out),
                '\\' => {
                    let Some(e) = self.text[self.pos..].chars().next() else {
                        return Err(self.error(start, self.pos, "unterminated string"));
                    };
                    self.pos += e.len_utf8();
                    out.push(match e {
                        'n' => '\n',
                        't' => '\t',
                        'r' => '\r',
                        other => other,
                    });
                }
                c => out.push(c),
            }
        }
    }

    fn lex_string(&mut self) -> Result<(), ParseError> {
        let start = self.pos;
        let text = self.scan_string()?;
        self.push(TokenKind::Str, start, self.pos, text);
        Ok(())
    }

    fn lex_word(&mut self) -> Result<(), ParseError> {
        let start = self.pos;
        let mut depth = 0usize;
        loop {
            let Some(b) = self.peek(0) else {
                return Err(self.unclosed());
            };
            match b {
                b'(' => {
                    depth += 1;
                    self.pos += 1;
                }
                b')' if depth > 0 => {
                    depth -= 1;
                    self.pos += 1;
                }
                b'"' if depth > 0 => {
                    self.scan_string()?;
                }
                b',' | b')' | b'\n' | b'\r' | b'"' if depth == 0 => break,
                b';' if depth == 0 => return Err(self.unclosed()),
                _ => {
                    let ch = self.text[self.pos..].chars().next().unwrap();
                    self.pos += ch.len_utf8();
                }
            }
        }
        let raw = self.text[start..self.pos].trim_end();
        let end = start + raw.len();
        let kind = if raw.contains('(') {
            TokenKind::Sexpr
        } else if parse_int_literal(raw).is_some() {
            TokenKind::Int
        } else {
            TokenKind::Word
        };
        self.push(kind, start, end, raw.to_string());
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(text: &str) -> Vec<TokenKind> {
        tokenize(text).unwrap().into_iter().map(|t| t.kind).collect()
    }

    #[test]
    fn hyphenated_identifiers_and_arrows() {
        use TokenKind::*;
        assert_eq!(kinds("ping-decision->x"), vec![Ident, Arrow, Ident]);
        assert_eq!(kinds("a-->b"), vec![Ident, LongArrow, Ident]);
        let toks = tokenize("Topology-SDN").unwrap();
        assert_eq!(toks[0].text, "Topology-SDN");
    }

    #[test]
    fn argument_mode_keeps_raw_words() {
        let toks = tokenize("Arp(localhost, nil, -n)").unwrap();
        let texts: Vec<_> = toks[1..].iter().map(|t| (t.kind, t.text.as_str())).collect();
        assert_eq!(
            texts,
            vec![
                (TokenKind::LParen, "("),
                (TokenKind::Word, "localhost"),
                (TokenKind::Comma, ","),
                (TokenKind::Word, "nil"),
                (TokenKind::Comma, ","),
                (TokenKind::Word, "-n"),
                (TokenKind::RParen, ")"),
            ]
        );
        assert_eq!(toks[0].kind, TokenKind::Ident);
    }

    #[test]
    fn sexpr_blob_spans_lines_and_commas() {
        let toks = tokenize("D(l, (lambda (x)\n   (> (length x) 0)), y)").unwrap();
        let blob = toks.iter().find(|t| t.kind == TokenKind::Sexpr).unwrap();
        assert_eq!(blob.text, "(lambda (x)\n   (> (length x) 0))");
    }

    #[test]
    fn urls_in_arguments_are_not_comments() {
        let toks = tokenize("R(http://127.0.0.1:8080/dpids, GET) // trailing").unwrap();
        assert_eq!(toks[2].text, "http://127.0.0.1:8080/dpids");
        assert_eq!(toks.len(), 6);
    }

    #[test]
    fn spans_are_monotone() {
        let toks = tokenize("Clock(5) -> t :: Topology-SDN(localhost)\n-> Graph() --> view;").unwrap();
        for pair in toks.windows(2) {
            assert!(pair[0].span.start <= pair[1].span.start);
            assert!(pair[0].span.end >= pair[0].span.start);
        }
        let last = toks.last().unwrap();
        assert_eq!(last.span.line, 2);
    }

    #[test]
    fn unclosed_argument_list_reports_end_of_input() {
        let text = "ping :: Ping(localhost";
        let err = tokenize(text).unwrap_err();
        assert_eq!(err.message, "unclosed argument list");
        assert_eq!(err.span.start, text.len());
    }
}
