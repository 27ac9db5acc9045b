//! Node classes: the registry, the built-in library and its helpers.

pub mod decision;
pub mod expr;
pub mod functions;
pub mod sdn;
pub mod spec;
pub mod summary;
pub mod text;
pub mod tools;

pub use spec::{
    callback, noop, Callback, Callbacks, ConfigDoc, NodeClassSpec, NodeError, NodeRegistry, PortDoc,
    RegistryError,
};

pub const VIEW_CLASS: &str = "View";
pub const DECISION_CLASS: &str = "Decision";
pub const SUMMARY_CLASS: &str = "Decision-summary";

impl NodeRegistry {
    /// Every built-in class.
    pub fn builtin() -> NodeRegistry {
        let mut reg = NodeRegistry::new();
        let all = tools::register(&mut reg)
            .and_then(|_| text::register(&mut reg))
            .and_then(|_| decision::register(&mut reg))
            .and_then(|_| summary::register(&mut reg))
            .and_then(|_| sdn::register(&mut reg));
        all.expect("built-in classes are consistent");
        reg
    }
}
