//! Syntax tree of a `.tsg` document.

use std::fmt;

use serde::Serialize;

/// Byte range plus 1-based line/column of its start.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize)]
pub struct SourceSpan {
    pub start: usize,
    pub end: usize,
    pub line: usize,
    pub column: usize,
}

impl SourceSpan {
    pub fn to(self, other: SourceSpan) -> SourceSpan {
        SourceSpan {
            start: self.start,
            end: other.end.max(self.start),
            line: self.line,
            column: self.column,
        }
    }
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

/// A configuration argument exactly as written.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "kebab-case")]
pub enum ConfigValue {
    /// Unquoted text such as `localhost`, `-n` or `10.0.0.1`.
    Bare(String),
    Quoted(String),
    Int(i64),
    /// The `nil` marker: an intentionally empty slot.
    Nil,
    /// A parenthesised expression kept as opaque text.
    Sexpr(String),
}

impl ConfigValue {
    /// Builds a value from free text, picking the bare form whenever the text
    /// would lex back to the same value.
    pub fn from_text(text: &str) -> ConfigValue {
        if text == "nil" {
            return ConfigValue::Nil;
        }
        if let Some(n) = parse_int_literal(text) {
            return ConfigValue::Int(n);
        }
        if text.contains('(') && text.trim() == text && balanced(text) && clean_top_level(text) {
            return ConfigValue::Sexpr(text.to_string());
        }
        if is_bare_safe(text) {
            ConfigValue::Bare(text.to_string())
        } else {
            ConfigValue::Quoted(text.to_string())
        }
    }

    /// Text handed to nodes; `None` for `nil`.
    pub fn as_text(&self) -> Option<String> {
        match self {
            ConfigValue::Bare(s) | ConfigValue::Quoted(s) | ConfigValue::Sexpr(s) => Some(s.clone()),
            ConfigValue::Int(n) => Some(n.to_string()),
            ConfigValue::Nil => None,
        }
    }

    pub fn is_nil(&self) -> bool {
        matches!(self, ConfigValue::Nil)
    }
}

pub(crate) fn parse_int_literal(text: &str) -> Option<i64> {
    let digits = text.strip_prefix('-').unwrap_or(text);
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    text.parse().ok()
}

fn balanced(text: &str) -> bool {
    let mut depth = 0i64;
    let mut in_str = false;
    let mut escaped = false;
    for c in text.chars() {
        if in_str {
            match (escaped, c) {
                (true, _) => escaped = false,
                (false, '\\') => escaped = true,
                (false, '"') => in_str = false,
                _ => {}
            }
            continue;
        }
        match c {
            '"' => in_str = true,
            '(' => depth += 1,
            ')' => {
                depth -= 1;
                if depth < 0 {
                    return false;
                }
            }
            _ => {}
        }
    }
    depth == 0 && !in_str
}

/// No argument separators, terminators or quotes outside parentheses.
fn clean_top_level(text: &str) -> bool {
    let mut depth = 0i64;
    let mut in_str = false;
    let mut escaped = false;
    for c in text.chars() {
        if in_str {
            match (escaped, c) {
                (true, _) => escaped = false,
                (false, '\\') => escaped = true,
                (false, '"') => in_str = false,
                _ => {}
            }
            continue;
        }
        match c {
            '"' if depth > 0 => in_str = true,
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' | ';' | '"' | '\n' | '\r' if depth == 0 => return false,
            _ => {}
        }
    }
    true
}

fn is_bare_safe(text: &str) -> bool {
    !text.is_empty()
        && text.trim() == text
        && !text
            .chars()
            .any(|c| matches!(c, ',' | '(' | ')' | '"' | ';' | '\n' | '\r'))
}

/// `[name ::] Class(args)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NodeDecl {
    pub name: Option<String>,
    pub class: String,
    pub args: Vec<ConfigValue>,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PortKind {
    Output,
    Input,
    Config,
}

/// One entry of a bracketed port list. Config indices are 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct PortRef {
    pub kind: PortKind,
    pub index: usize,
}

impl PortRef {
    pub fn output(index: usize) -> Self {
        PortRef { kind: PortKind::Output, index }
    }

    pub fn input(index: usize) -> Self {
        PortRef { kind: PortKind::Input, index }
    }

    pub fn config(index: usize) -> Self {
        PortRef { kind: PortKind::Config, index }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "kebab-case")]
pub enum EndpointTarget {
    Name(String),
    Decl(NodeDecl),
}

impl EndpointTarget {
    pub fn name(&self) -> Option<&str> {
        match self {
            EndpointTarget::Name(n) => Some(n),
            EndpointTarget::Decl(d) => d.name.as_deref(),
        }
    }
}

/// A node reference inside a link chain.
///
/// `inputs` is the bracket list written before the target, `outputs` the one
/// written after it. `None` means the list was omitted (implicit port 0).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Endpoint {
    pub inputs: Option<Vec<PortRef>>,
    pub target: EndpointTarget,
    pub outputs: Option<Vec<PortRef>>,
    pub span: SourceSpan,
}

impl Endpoint {
    pub fn named(name: &str) -> Self {
        Endpoint {
            inputs: None,
            target: EndpointTarget::Name(name.to_string()),
            outputs: None,
            span: SourceSpan::default(),
        }
    }

    /// Ports used when this endpoint is on the right of a link operator.
    pub fn effective_inputs(&self) -> Vec<PortRef> {
        self.inputs.clone().unwrap_or_else(|| vec![PortRef::input(0)])
    }

    /// Ports used when this endpoint is on the left of `->`.
    pub fn effective_outputs(&self) -> Vec<PortRef> {
        self.outputs.clone().unwrap_or_else(|| vec![PortRef::output(0)])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LinkOp {
    /// `->`
    Link,
    /// `-->`: the node itself into a View.
    SelfLink,
}

impl LinkOp {
    pub fn as_str(self) -> &'static str {
        match self {
            LinkOp::Link => "->",
            LinkOp::SelfLink => "-->",
        }
    }
}

/// `e0 op0 e1 op1 e2 ...`; `ops.len() + 1 == endpoints.len()`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LinkChain {
    pub endpoints: Vec<Endpoint>,
    pub ops: Vec<LinkOp>,
    pub span: SourceSpan,
}

impl LinkChain {
    /// `(left, op, right)` for every operator in the chain.
    pub fn links(&self) -> impl Iterator<Item = (&Endpoint, LinkOp, &Endpoint)> {
        self.ops
            .iter()
            .enumerate()
            .map(move |(i, op)| (&self.endpoints[i], *op, &self.endpoints[i + 1]))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Statement {
    Decl(NodeDecl),
    Chain(LinkChain),
}

impl Statement {
    pub fn span(&self) -> SourceSpan {
        match self {
            Statement::Decl(d) => d.span,
            Statement::Chain(c) => c.span,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct TsgDocument {
    pub source_name: String,
    pub statements: Vec<Statement>,
}

impl TsgDocument {
    pub fn new(source_name: impl Into<String>) -> Self {
        TsgDocument {
            source_name: source_name.into(),
            statements: Vec::new(),
        }
    }

    /// Every declaration in statement order, inline ones included.
    pub fn decls(&self) -> Vec<&NodeDecl> {
        let mut out = Vec::new();
        for stmt in &self.statements {
            match stmt {
                Statement::Decl(d) => out.push(d),
                Statement::Chain(chain) => {
                    for ep in &chain.endpoints {
                        if let EndpointTarget::Decl(d) = &ep.target {
                            out.push(d);
                        }
                    }
                }
            }
        }
        out
    }

    pub(crate) fn decls_mut(&mut self) -> Vec<&mut NodeDecl> {
        let mut out = Vec::new();
        for stmt in &mut self.statements {
            match stmt {
                Statement::Decl(d) => out.push(d),
                Statement::Chain(chain) => {
                    for ep in &mut chain.endpoints {
                        if let EndpointTarget::Decl(d) = &mut ep.target {
                            out.push(d);
                        }
                    }
                }
            }
        }
        out
    }

    /// Copy with every span zeroed, for structural comparison.
    pub fn without_spans(&self) -> TsgDocument {
        let mut doc = self.clone();
        for stmt in &mut doc.statements {
            match stmt {
                Statement::Decl(d) => d.span = SourceSpan::default(),
                Statement::Chain(chain) => {
                    chain.span = SourceSpan::default();
                    for ep in &mut chain.endpoints {
                        ep.span = SourceSpan::default();
                        if let EndpointTarget::Decl(d) = &mut ep.target {
                            d.span = SourceSpan::default();
                        }
                    }
                }
            }
        }
        doc
    }

    /// Equality ignoring spans and source name.
    pub fn structurally_eq(&self, other: &TsgDocument) -> bool {
        self.without_spans().statements == other.without_spans().statements
    }
}
