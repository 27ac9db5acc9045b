use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::Serialize;

use super::ast::*;
use crate::nodes::{NodeRegistry, VIEW_CLASS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub message: String,
    pub span: SourceSpan,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let level = match self.severity {
            Severity::Warning => "warning",
            Severity::Error => "error",
        };
        write!(f, "{}: {level}: {}", self.span, self.message)
    }
}

pub fn has_errors(diags: &[Diagnostic]) -> bool {
    diags.iter().any(|d| d.severity == Severity::Error)
}

struct Checker<'a> {
    registry: &'a NodeRegistry,
    /// instance name -> class
    classes: HashMap<String, String>,
    diags: Vec<Diagnostic>,
    /// (instance, config index) pairs fed by a link
    linked_configs: HashSet<(String, usize)>,
}

/// Lints a document against the registry without building it.
pub fn validate_document(doc: &TsgDocument, registry: &NodeRegistry) -> Vec<Diagnostic> {
    let mut checker = Checker {
        registry,
        classes: HashMap::new(),
        diags: Vec::new(),
        linked_configs: HashSet::new(),
    };
    checker.declarations(doc);
    checker.links(doc);
    checker.required_configs(doc);
    checker.diags
}

impl Checker<'_> {
    fn push(&mut self, severity: Severity, span: SourceSpan, message: String) {
        self.diags.push(Diagnostic {
            severity,
            message,
            span,
        });
    }

    fn declarations(&mut self, doc: &TsgDocument) {
        for decl in doc.decls() {
            if self.registry.get(&decl.class).is_none() {
                self.push(
                    Severity::Error,
                    decl.span,
                    format!("unknown node class '{}'", decl.class),
                );
            }
            if let Some(name) = &decl.name {
                if self.classes.contains_key(name) {
                    self.push(
                        Severity::Error,
                        decl.span,
                        format!("duplicate instance name '{name}'"),
                    );
                } else {
                    self.classes.insert(name.clone(), decl.class.clone());
                }
            }
        }
    }

    /// Class of an endpoint, if it can be determined. Undeclared names on the
    /// right of an operator are Views.
    fn class_of(&self, ep: &Endpoint, right_side: bool) -> Option<String> {
        match &ep.target {
            EndpointTarget::Decl(d) => Some(d.class.clone()),
            EndpointTarget::Name(n) => match self.classes.get(n) {
                Some(c) => Some(c.clone()),
                None if right_side => Some(VIEW_CLASS.to_string()),
                None => None,
            },
        }
    }

    fn links(&mut self, doc: &TsgDocument) {
        // Names that appear on the right of an operator anywhere become Views.
        let mut inferred_views = HashSet::new();
        for stmt in &doc.statements {
            if let Statement::Chain(chain) = stmt {
                for (_, _, right) in chain.links() {
                    if let EndpointTarget::Name(n) = &right.target {
                        if !self.classes.contains_key(n) {
                            inferred_views.insert(n.clone());
                        }
                    }
                }
            }
        }
        for stmt in &doc.statements {
            let Statement::Chain(chain) = stmt else {
                continue;
            };
            for (left, op, right) in chain.links() {
                let left_class = match self.class_of(left, false) {
                    Some(c) => Some(c),
                    None => {
                        let name = left.target.name().unwrap_or_default().to_string();
                        if inferred_views.contains(&name) {
                            Some(VIEW_CLASS.to_string())
                        } else {
                            self.push(
                                Severity::Error,
                                left.span,
                                format!("unknown instance '{name}'"),
                            );
                            None
                        }
                    }
                };
                let right_class = self.class_of(right, true);
                let right_ports = right.effective_inputs();
                let instance = right.target.name().map(str::to_string);

                if op == LinkOp::SelfLink {
                    if let Some(c) = &right_class {
                        if c != VIEW_CLASS {
                            self.push(
                                Severity::Error,
                                right.span,
                                format!("'-->' must end at a View, not a {c}"),
                            );
                        }
                    }
                    if right_ports.iter().any(|p| p.kind == PortKind::Config) {
                        self.push(
                            Severity::Error,
                            right.span,
                            "'-->' cannot target a config argument".to_string(),
                        );
                    }
                    self.check_inputs(right, right_class.as_deref(), &right_ports, instance);
                    continue;
                }

                let left_ports = left.effective_outputs();
                if left_ports.len() != right_ports.len() {
                    self.push(
                        Severity::Error,
                        left.span.to(right.span),
                        format!(
                            "port list arity mismatch {} vs {}",
                            left_ports.len(),
                            right_ports.len()
                        ),
                    );
                }
                if let Some(spec) = left_class.as_deref().and_then(|c| self.registry.get(c)) {
                    for p in &left_ports {
                        if !spec.accepts_output(p.index) {
                            self.push(
                                Severity::Error,
                                left.span,
                                format!(
                                    "output index {} out of range for {} ({} outputs)",
                                    p.index,
                                    spec.class_name,
                                    spec.outputs.len()
                                ),
                            );
                        }
                    }
                }
                self.check_inputs(right, right_class.as_deref(), &right_ports, instance);
            }
        }
    }

    fn check_inputs(
        &mut self,
        ep: &Endpoint,
        class: Option<&str>,
        ports: &[PortRef],
        instance: Option<String>,
    ) {
        let Some(spec) = class.and_then(|c| self.registry.get(c)) else {
            return;
        };
        for p in ports {
            match p.kind {
                PortKind::Config => {
                    if !spec.accepts_config(p.index) {
                        self.push(
                            Severity::Error,
                            ep.span,
                            format!(
                                "config index {} out of range for {} ({} configs)",
                                p.index,
                                spec.class_name,
                                spec.configs.len()
                            ),
                        );
                    }
                    if let Some(name) = &instance {
                        self.linked_configs.insert((name.clone(), p.index));
                    }
                }
                _ => {
                    if !spec.accepts_input(p.index) {
                        self.push(
                            Severity::Error,
                            ep.span,
                            format!(
                                "input index {} out of range for {} ({} inputs)",
                                p.index,
                                spec.class_name,
                                spec.inputs.len()
                            ),
                        );
                    }
                }
            }
        }
    }

    fn required_configs(&mut self, doc: &TsgDocument) {
        for decl in doc.decls() {
            let Some(spec) = self.registry.get(&decl.class) else {
                continue;
            };
            for (i, cfg) in spec.configs.iter().enumerate() {
                let index = i + 1;
                if !cfg.required || decl.args.len() >= index {
                    continue;
                }
                let linked = decl
                    .name
                    .as_ref()
                    .is_some_and(|n| self.linked_configs.contains(&(n.clone(), index)));
                if !linked {
                    self.push(
                        Severity::Warning,
                        decl.span,
                        format!(
                            "{} config {} ({}) is not set",
                            decl.class, index, cfg.name
                        ),
                    );
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse_document;

    fn check(text: &str) -> Vec<Diagnostic> {
        let doc = parse_document(text, "t").unwrap();
        validate_document(&doc, &NodeRegistry::builtin())
    }

    #[test]
    fn topology_listing_is_clean() {
        let diags = check("Clock(5) -> t :: Topology-SDN(localhost) -> Graph() --> view;\nt[0] -> [1]view;");
        assert!(!has_errors(&diags), "{diags:?}");
    }

    #[test]
    fn output_index_out_of_range() {
        let diags = check("a :: Ping(); a[7] -> b;");
        assert!(
            diags.iter().any(|d| d.message.starts_with("output index 7 out of range")),
            "{diags:?}"
        );
    }

    #[test]
    fn arity_mismatch_is_reported() {
        let diags = check("x[0,1] -> [0]y;");
        assert!(diags.iter().any(|d| d.message == "port list arity mismatch 2 vs 1"), "{diags:?}");
    }

    #[test]
    fn duplicates_unknown_classes_and_bad_config_index() {
        let diags = check("a :: Ping(h, t); a :: Arp(); b :: Nope(); a -> [-9]c :: Clock(1);");
        let msgs: Vec<_> = diags.iter().map(|d| d.message.as_str()).collect();
        assert!(msgs.iter().any(|m| m.contains("duplicate instance name 'a'")));
        assert!(msgs.iter().any(|m| m.contains("unknown node class 'Nope'")));
        assert!(msgs.iter().any(|m| m.contains("config index 9 out of range")));
        assert!(msgs.iter().any(|m| m.contains("input index") || m.contains("config index")));
    }

    #[test]
    fn self_link_must_end_at_view() {
        let diags = check("g :: Graph(); p :: Ping(h, t); g --> p;");
        assert!(diags.iter().any(|d| d.message.contains("must end at a View")), "{diags:?}");
    }

    #[test]
    fn unset_required_config_is_a_warning() {
        let diags = check("c :: Clock(); c -> v;");
        assert!(!has_errors(&diags));
        assert!(diags.iter().any(|d| d.severity == Severity::Warning));
    }
}
