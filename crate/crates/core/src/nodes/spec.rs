use std::fmt;
use std::sync::Arc;

use indexmap::IndexMap;
use serde::Serialize;

use crate::engine::NodeContext;

/// Failure reported by a node callback.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{0}")]
pub struct NodeError(pub String);

impl NodeError {
    pub fn new(msg: impl Into<String>) -> Self {
        NodeError(msg.into())
    }
}

impl From<String> for NodeError {
    fn from(s: String) -> Self {
        NodeError(s)
    }
}

impl From<&str> for NodeError {
    fn from(s: &str) -> Self {
        NodeError(s.to_string())
    }
}

pub type Callback = Arc<dyn Fn(&mut NodeContext<'_>) -> Result<(), NodeError> + Send + Sync>;

/// Wraps a closure as a life-cycle callback.
pub fn callback<F>(f: F) -> Callback
where
    F: Fn(&mut NodeContext<'_>) -> Result<(), NodeError> + Send + Sync + 'static,
{
    Arc::new(f)
}

/// A callback that does nothing.
pub fn noop() -> Callback {
    callback(|_| Ok(()))
}

#[derive(Clone, Default)]
pub struct Callbacks {
    pub init: Option<Callback>,
    pub exec: Option<Callback>,
    pub term: Option<Callback>,
}

impl fmt::Debug for Callbacks {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Callbacks")
            .field("init", &self.init.is_some())
            .field("exec", &self.exec.is_some())
            .field("term", &self.term.is_some())
            .finish()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PortDoc {
    pub name: String,
    pub doc: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConfigDoc {
    pub name: String,
    pub doc: String,
    pub required: bool,
}

/// Self-description of a node class plus its life-cycle callbacks.
#[derive(Debug, Clone, Serialize)]
pub struct NodeClassSpec {
    pub class_name: String,
    pub doc: String,
    pub inputs: Vec<PortDoc>,
    pub configs: Vec<ConfigDoc>,
    pub outputs: Vec<PortDoc>,
    /// Ports past the documented ones are accepted.
    pub variadic_inputs: bool,
    pub variadic_configs: bool,
    pub variadic_outputs: bool,
    /// Run once right after start when no input is linked.
    pub autostart: bool,
    #[serde(skip)]
    pub callbacks: Callbacks,
}

impl NodeClassSpec {
    pub fn new(class_name: impl Into<String>, doc: impl Into<String>) -> Self {
        NodeClassSpec {
            class_name: class_name.into(),
            doc: doc.into(),
            inputs: Vec::new(),
            configs: Vec::new(),
            outputs: Vec::new(),
            variadic_inputs: false,
            variadic_configs: false,
            variadic_outputs: false,
            autostart: false,
            callbacks: Callbacks::default(),
        }
    }

    pub fn input(mut self, name: &str, doc: &str) -> Self {
        self.inputs.push(PortDoc {
            name: name.into(),
            doc: doc.into(),
        });
        self
    }

    pub fn output(mut self, name: &str, doc: &str) -> Self {
        self.outputs.push(PortDoc {
            name: name.into(),
            doc: doc.into(),
        });
        self
    }

    pub fn config(mut self, name: &str, doc: &str, required: bool) -> Self {
        self.configs.push(ConfigDoc {
            name: name.into(),
            doc: doc.into(),
            required,
        });
        self
    }

    pub fn variadic_inputs(mut self) -> Self {
        self.variadic_inputs = true;
        self
    }

    pub fn variadic_configs(mut self) -> Self {
        self.variadic_configs = true;
        self
    }

    pub fn variadic_outputs(mut self) -> Self {
        self.variadic_outputs = true;
        self
    }

    pub fn autostart(mut self) -> Self {
        self.autostart = true;
        self
    }

    pub fn on_init(mut self, cb: Callback) -> Self {
        self.callbacks.init = Some(cb);
        self
    }

    pub fn on_exec(mut self, cb: Callback) -> Self {
        self.callbacks.exec = Some(cb);
        self
    }

    pub fn on_term(mut self, cb: Callback) -> Self {
        self.callbacks.term = Some(cb);
        self
    }

    pub fn accepts_input(&self, index: usize) -> bool {
        self.variadic_inputs || index < self.inputs.len()
    }

    pub fn accepts_output(&self, index: usize) -> bool {
        self.variadic_outputs || index < self.outputs.len()
    }

    /// `index` is 1-based.
    pub fn accepts_config(&self, index: usize) -> bool {
        index >= 1 && (self.variadic_configs || index <= self.configs.len())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RegistryError {
    #[error("node class '{0}' is already registered")]
    Duplicate(String),
    #[error("node class '{class}' lacks its {callback} callback")]
    MissingCallback { class: String, callback: &'static str },
    #[error("node class '{0}' has no documentation")]
    Undocumented(String),
}

/// Node classes by name.
#[derive(Debug, Clone, Default)]
pub struct NodeRegistry {
    classes: IndexMap<String, Arc<NodeClassSpec>>,
}

impl NodeRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&mut self, spec: NodeClassSpec) -> Result<(), RegistryError> {
        if self.classes.contains_key(&spec.class_name) {
            return Err(RegistryError::Duplicate(spec.class_name));
        }
        for (cb, name) in [
            (&spec.callbacks.init, "init"),
            (&spec.callbacks.exec, "exec"),
            (&spec.callbacks.term, "term"),
        ] {
            if cb.is_none() {
                return Err(RegistryError::MissingCallback {
                    class: spec.class_name.clone(),
                    callback: name,
                });
            }
        }
        let undocumented = spec.doc.trim().is_empty()
            || spec.inputs.iter().any(|p| p.doc.trim().is_empty())
            || spec.outputs.iter().any(|p| p.doc.trim().is_empty())
            || spec.configs.iter().any(|c| c.doc.trim().is_empty());
        if undocumented {
            return Err(RegistryError::Undocumented(spec.class_name));
        }
        self.classes.insert(spec.class_name.clone(), Arc::new(spec));
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&Arc<NodeClassSpec>> {
        self.classes.get(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.classes.contains_key(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.classes.keys().map(String::as_str)
    }

    pub fn specs(&self) -> impl Iterator<Item = &Arc<NodeClassSpec>> {
        self.classes.values()
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn echo(name: &str) -> NodeClassSpec {
        NodeClassSpec::new(name, "copies input 0 to output 0")
            .input("in", "text")
            .output("out", "same text")
            .on_init(noop())
            .on_exec(noop())
            .on_term(noop())
    }

    #[test]
    fn duplicate_and_incomplete_specs_are_refused() {
        let mut reg = NodeRegistry::builtin();
        assert_eq!(
            reg.register(echo("Ping")),
            Err(RegistryError::Duplicate("Ping".into()))
        );
        let mut no_term = echo("Echo");
        no_term.callbacks.term = None;
        assert!(matches!(
            reg.register(no_term),
            Err(RegistryError::MissingCallback { callback: "term", .. })
        ));
        assert!(matches!(
            reg.register(NodeClassSpec::new("Blank", "").on_init(noop()).on_exec(noop()).on_term(noop())),
            Err(RegistryError::Undocumented(_))
        ));
        reg.register(echo("Echo")).unwrap();
        assert!(reg.contains("Echo"));
    }

    #[test]
    fn config_indices_are_one_based() {
        let spec = echo("E").config("a", "first", true);
        assert!(!spec.accepts_config(0));
        assert!(spec.accepts_config(1));
        assert!(!spec.accepts_config(2));
        assert!(spec.accepts_input(0) && !spec.accepts_input(1));
    }
}
