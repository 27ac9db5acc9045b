mod common;

use common::{engine, texts};
use tsgraph::engine::{Engine, EngineOptions, EventKind};

fn node_errors(e: &Engine, node: &str) -> usize {
    e.events()
        .iter()
        .filter(|ev| ev.kind == EventKind::NodeError && ev.node.as_deref() == Some(node))
        .count()
}

#[test]
fn filter_with_bad_pattern_fails_at_init() {
    let e = engine("src :: Format(\"x\") -> f :: Filter(\"(\") -> out;", EngineOptions::default());
    assert_eq!(node_errors(&e, "f"), 1);
}

#[test]
fn format_without_placeholders_repeats_its_constant() {
    let mut e = engine("src :: Format(\"x\") -> c :: Format(\"const\") -> out;", EngineOptions::default());
    for _ in 0..3 {
        e.inject("src:0", "tick").unwrap();
        e.run_until_idle();
    }
    assert_eq!(texts(&e, "c:0"), vec!["const"; 3]);
}

#[test]
fn tee_appends_and_forwards() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("log.txt");
    let doc = format!("src :: Format(\"x\") -> tee :: Tee(\"{}\") -> out;", path.display());
    let mut e = engine(&doc, EngineOptions::default());
    e.inject("src:0", "x").unwrap();
    e.run_until_idle();
    e.inject("src:0", "y").unwrap();
    e.run_until_idle();
    assert_eq!(texts(&e, "tee:0"), vec!["x", "y"]);
    assert_eq!(std::fs::read_to_string(&path).unwrap(), "xy");
}

#[test]
fn tee_with_empty_delta_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("log.txt");
    let doc = format!("src :: Format(\"x\") -> tee :: Tee(\"{}\") -> out;", path.display());
    let mut e = engine(&doc, EngineOptions::default());
    e.inject("src:0", "").unwrap();
    e.run_until_idle();
    assert!(!path.exists());
    assert!(texts(&e, "tee:0").is_empty());
}

#[test]
fn tee_on_unwritable_path_reports_and_still_forwards() {
    // A directory cannot be opened for appending, even by root.
    let dir = tempfile::tempdir().unwrap();
    let doc = format!("src :: Format(\"x\") -> tee :: Tee(\"{}\") -> out;", dir.path().display());
    let mut e = engine(&doc, EngineOptions::default());
    e.inject("src:0", "x").unwrap();
    e.run_until_idle();
    assert_eq!(node_errors(&e, "tee"), 1);
    assert_eq!(texts(&e, "tee:0"), vec!["x"]);
}

#[test]
fn clean_run_has_no_node_errors() {
    let mut e = engine("src :: Format(\"x\") -> f :: Filter(x) -> out;", EngineOptions::default());
    e.inject("src:0", "x\ny").unwrap();
    e.run_until_idle();
    assert!(e.events().iter().all(|ev| ev.kind != EventKind::NodeError));
}
