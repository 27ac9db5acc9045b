use super::ast::*;
use super::lexer::{tokenize, Token, TokenKind};
use super::ParseError;

/// Parses `.tsg` text into a document.
pub fn parse_document(text: &str, source_name: &str) -> Result<TsgDocument, ParseError> {
    let tokens = tokenize(text)?;
    let eof = super::lexer::LineIndex::new(text).span(text, text.len(), text.len());
    let mut parser = Parser {
        tokens,
        pos: 0,
        eof,
    };
    let mut doc = TsgDocument::new(source_name);
    while !parser.at_end() {
        doc.statements.push(parser.statement()?);
    }
    Ok(doc)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    eof: SourceSpan,
}

impl Parser {
    fn at_end(&self) -> bool {
        self.pos >= self.tokens.len()
    }

    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn peek_kind(&self, off: usize) -> Option<TokenKind> {
        self.tokens.get(self.pos + off).map(|t| t.kind)
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        self.pos += 1;
        t
    }

    fn here(&self) -> SourceSpan {
        self.peek().map(|t| t.span).unwrap_or(self.eof)
    }

    fn prev_span(&self) -> SourceSpan {
        self.tokens[self.pos - 1].span
    }

    fn err<T>(&self, span: SourceSpan, message: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError {
            message: message.into(),
            span,
        })
    }

    fn expect(&mut self, kind: TokenKind, what: &str) -> Result<Token, ParseError> {
        match self.peek() {
            Some(t) if t.kind == kind => Ok(self.bump()),
            Some(t) => {
                let span = t.span;
                let found = t.text.clone();
                self.err(span, format!("expected {what}, found '{found}'"))
            }
            None => self.err(self.eof, format!("expected {what}, found end of input")),
        }
    }

    fn statement(&mut self) -> Result<Statement, ParseError> {
        let start = self.here();
        let mut endpoints = vec![self.endpoint()?];
        let mut ops = Vec::new();
        loop {
            let op = match self.peek_kind(0) {
                Some(TokenKind::Arrow) => LinkOp::Link,
                Some(TokenKind::LongArrow) => LinkOp::SelfLink,
                _ => break,
            };
            let op_span = self.bump().span;
            let left = endpoints.last().expect("chain has a head");
            if op == LinkOp::SelfLink && left.outputs.is_some() {
                return self.err(op_span, "'-->' links the node itself and takes no output ports");
            }
            ops.push(op);
            endpoints.push(self.endpoint()?);
        }
        match self.peek_kind(0) {
            Some(TokenKind::Semi) => {
                self.bump();
            }
            Some(_) => {
                let t = self.peek().unwrap();
                return self.err(t.span, format!("missing ';' before '{}'", t.text));
            }
            None => return self.err(self.eof, "missing ';' at end of input"),
        }
        let span = start.to(self.prev_span());

        if ops.is_empty() {
            let ep = endpoints.pop().unwrap();
            if ep.inputs.is_some() || ep.outputs.is_some() {
                return self.err(ep.span, "port list outside a linking expression");
            }
            return match ep.target {
                EndpointTarget::Decl(mut d) if d.name.is_some() => {
                    d.span = span;
                    Ok(Statement::Decl(d))
                }
                EndpointTarget::Decl(_) => {
                    self.err(ep.span, "anonymous declaration must be part of a link chain")
                }
                EndpointTarget::Name(n) => {
                    self.err(ep.span, format!("expected '::' or a link operator after '{n}'"))
                }
            };
        }
        let first = &endpoints[0];
        if first.inputs.is_some() {
            return self.err(first.span, "input ports on the head of a link chain");
        }
        let last = endpoints.last().unwrap();
        if last.outputs.is_some() {
            return self.err(last.span, "output ports on the tail of a link chain");
        }
        Ok(Statement::Chain(LinkChain {
            endpoints,
            ops,
            span,
        }))
    }

    fn endpoint(&mut self) -> Result<Endpoint, ParseError> {
        let start = self.here();
        let inputs = if self.peek_kind(0) == Some(TokenKind::LBracket) {
            Some(self.port_list(true)?)
        } else {
            None
        };
        let target = self.target()?;
        let outputs = if self.peek_kind(0) == Some(TokenKind::LBracket) {
            Some(self.port_list(false)?)
        } else {
            None
        };
        Ok(Endpoint {
            inputs,
            target,
            outputs,
            span: start.to(self.prev_span()),
        })
    }

    fn target(&mut self) -> Result<EndpointTarget, ParseError> {
        let first = self.expect(TokenKind::Ident, "a node name or class")?;
        match self.peek_kind(0) {
            Some(TokenKind::ColonColon) => {
                self.bump();
                let class = self.expect(TokenKind::Ident, "a class name after '::'")?;
                let args = if self.peek_kind(0) == Some(TokenKind::LParen) {
                    self.args()?
                } else {
                    Vec::new()
                };
                Ok(EndpointTarget::Decl(NodeDecl {
                    name: Some(first.text),
                    class: class.text,
                    args,
                    span: first.span.to(self.prev_span()),
                }))
            }
            Some(TokenKind::LParen) => {
                let args = self.args()?;
                Ok(EndpointTarget::Decl(NodeDecl {
                    name: None,
                    class: first.text,
                    args,
                    span: first.span.to(self.prev_span()),
                }))
            }
            _ => Ok(EndpointTarget::Name(first.text)),
        }
    }

    fn args(&mut self) -> Result<Vec<ConfigValue>, ParseError> {
        let open = self.expect(TokenKind::LParen, "'('")?;
        let mut args = Vec::new();
        loop {
            let Some(tok) = self.peek().cloned() else {
                return self.err(self.eof, "unclosed argument list");
            };
            self.bump();
            match tok.kind {
                TokenKind::RParen => return Ok(args),
                TokenKind::Comma => continue,
                TokenKind::Str => args.push(ConfigValue::Quoted(tok.text)),
                TokenKind::Int => match parse_int_literal(&tok.text) {
                    Some(n) => args.push(ConfigValue::Int(n)),
                    None => args.push(ConfigValue::Bare(tok.text)),
                },
                TokenKind::Sexpr => args.push(ConfigValue::Sexpr(tok.text)),
                TokenKind::Word if tok.text == "nil" => args.push(ConfigValue::Nil),
                TokenKind::Word => args.push(ConfigValue::Bare(tok.text)),
                _ => return self.err(open.span, "malformed argument list"),
            }
        }
    }

    fn port_list(&mut self, input_side: bool) -> Result<Vec<PortRef>, ParseError> {
        let open = self.bump();
        let mut ports = Vec::new();
        loop {
            let config = if self.peek_kind(0) == Some(TokenKind::Minus) {
                let minus = self.bump();
                if !input_side {
                    return self.err(minus.span, "config indices are only valid on the input side");
                }
                true
            } else {
                false
            };
            let idx_tok = match self.peek() {
                Some(t) if t.kind == TokenKind::Int => self.bump(),
                Some(t) if t.kind == TokenKind::RBracket && ports.is_empty() && !config => {
                    return self.err(t.span, "empty port list");
                }
                Some(t) => {
                    let (span, text) = (t.span, t.text.clone());
                    return self.err(span, format!("expected a port index, found '{text}'"));
                }
                None => return self.err(open.span, "unclosed port list"),
            };
            let Ok(index) = idx_tok.text.parse::<usize>() else {
                return self.err(idx_tok.span, "port index too large");
            };
            let port = if config {
                if index == 0 {
                    return self.err(idx_tok.span, "config indices are 1-based; '-0' is invalid");
                }
                PortRef::config(index)
            } else if input_side {
                PortRef::input(index)
            } else {
                PortRef::output(index)
            };
            ports.push(port);
            match self.peek_kind(0) {
                Some(TokenKind::Comma) => {
                    self.bump();
                }
                Some(TokenKind::RBracket) => {
                    self.bump();
                    return Ok(ports);
                }
                Some(_) => {
                    let t = self.peek().unwrap();
                    return self.err(t.span, format!("expected ',' or ']', found '{}'", t.text));
                }
                None => return self.err(open.span, "unclosed port list"),
            }
        }
    }
}
