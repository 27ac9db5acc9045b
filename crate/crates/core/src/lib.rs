//! Build, run and inspect troubleshooting graphs: chains of wrapped network
//! diagnostic tools described in a small dataflow language.
//!
//! ```
//! use std::sync::Arc;
//! use tsgraph::engine::{Engine, EngineOptions};
//! use tsgraph::graph::build_graph;
//! use tsgraph::lang::parse_document;
//! use tsgraph::nodes::NodeRegistry;
//!
//! let doc = parse_document("c :: Clock(5) -> v;", "doc").unwrap();
//! let registry = Arc::new(NodeRegistry::builtin());
//! let tsg = build_graph(&doc, &registry).unwrap();
//! let mut engine = Engine::start(tsg, registry, EngineOptions::default());
//! engine.advance_to(12_000);
//! let ticks: Vec<_> = engine.buffer("c:0").unwrap().records().iter().map(|r| r.text.clone()).collect();
//! assert_eq!(ticks, ["0", "1", "2"]);
//! ```

pub mod api;
pub mod cli;
pub mod engine;
pub mod graph;
pub mod lang;
pub mod mock_controller;
pub mod nodes;
pub mod recommend;
