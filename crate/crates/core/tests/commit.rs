mod common;

use common::{build, engine, read_fixture, registry};
use tsgraph::api::commit_document;
use tsgraph::engine::EngineOptions;
use tsgraph::graph::{build_graph, EdgeSource, EdgeTarget};
use tsgraph::lang::{parse_document, ConfigValue};

#[test]
fn edits_survive_commit_and_reload() {
    let mut e = engine(&read_fixture("everyday-full.tsg"), EngineOptions::default());
    e.add_edge(
        EdgeSource::Output { node: "ping".into(), index: 1 },
        EdgeTarget::Input { node: "ds".into(), index: 6 },
    )
    .unwrap();
    e.set_config("ping", 2, ConfigValue::from_text("10.9.9.9")).unwrap();
    assert_eq!(e.tsg().revision, 2);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("committed.tsg");
    let bytes = commit_document(e.tsg(), &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(bytes, text.len());
    let reloaded = build_graph(&parse_document(&text, "committed").unwrap(), &registry()).unwrap();
    assert_eq!(reloaded.shape(), e.tsg().shape());
    assert_eq!(
        reloaded.node("ping").unwrap().static_config(2),
        Some(&ConfigValue::from_text("10.9.9.9"))
    );
    let leftovers: Vec<_> = std::fs::read_dir(dir.path()).unwrap().collect();
    assert_eq!(leftovers.len(), 1);
}

#[test]
fn fixtures_commit_unchanged() {
    for f in ["fig2.tsg", "everyday.tsg", "everyday-full.tsg"] {
        let tsg = build(&read_fixture(f));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(f);
        commit_document(&tsg, &path).unwrap();
        let again = build(&std::fs::read_to_string(&path).unwrap());
        assert_eq!(again.shape(), tsg.shape(), "{f}");
        let first = std::fs::read(&path).unwrap();
        commit_document(&again, &path).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), first, "{f}");
    }
}

#[test]
fn fig2_shape() {
    let tsg = build(&read_fixture("fig2.tsg"));
    let (nodes, edges) = tsg.shape();
    assert_eq!(nodes.len(), 4);
    assert_eq!(edges.len(), 4);
    assert!(nodes.iter().any(|n| n.starts_with("view View")));
}

#[test]
fn commit_into_missing_directory_fails_cleanly() {
    let tsg = build(&read_fixture("fig2.tsg"));
    let dir = tempfile::tempdir().unwrap();
    let err = commit_document(&tsg, &dir.path().join("no/such/dir/x.tsg"));
    assert!(err.is_err());
}
