mod common;

use common::{engine, execution_order, texts};
use tsgraph::engine::{events_to_jsonl, EngineOptions, EventKind, Origin};

fn chain(n: usize) -> String {
    let mut doc = String::from("clock :: Clock(1);\nclock");
    for i in 1..=n {
        doc.push_str(&format!(" -> p{i} :: Format(\"{{0}}\")"));
    }
    doc.push_str(" -> out;\n");
    doc
}

fn chain_log() -> String {
    let mut e = engine(&chain(10), EngineOptions::default());
    e.run_until_idle();
    e.advance_to(5_000);
    e.stop();
    events_to_jsonl(e.events())
}

#[test]
fn pass_through_chain_logs_are_identical() {
    let first = chain_log();
    assert!(!first.is_empty());
    for _ in 0..2 {
        assert_eq!(chain_log(), first);
    }
}

#[test]
fn chain_forwards_every_tick() {
    let mut e = engine(&chain(10), EngineOptions::default());
    e.advance_to(5_000);
    assert_eq!(texts(&e, "p10:0"), ["0", "1", "2", "3", "4", "5"]);
    let order = execution_order(&e);
    // clock, ten pass-throughs and the view, per tick
    assert_eq!(order.len(), 6 * 12);
    assert_eq!(&order[..3], ["clock", "p1", "p2"]);
}

#[test]
fn execution_follows_queue_appends() {
    let doc = "\
src :: Filter(x);
src -> a :: Format(\"a{0}\");
src -> b :: Format(\"b{0}\");
a -> c :: Format(\"c{0}\");
b -> c2 :: Format(\"d{0}\");
a -> c2;
";
    let mut e = engine(doc, EngineOptions::default());
    e.inject("src:0", "1").unwrap();
    e.inject("src:0", "2").unwrap();
    e.run_until_idle();
    let appended: Vec<String> = e.events().iter().flat_map(|ev| ev.enqueued.clone()).collect();
    assert_eq!(execution_order(&e), appended);
    assert_eq!(&appended[..4], ["a", "b", "a", "b"]);
}

#[test]
fn diamond_join_runs_once_per_upstream_write() {
    let doc = "\
top :: Filter(x);
top -> left :: Format(\"l{0}\");
top -> right :: Format(\"r{0}\");
left -> [0]join :: Table-view();
right -> [1]join;
";
    let mut e = engine(doc, EngineOptions::default());
    e.inject("top:0", "v=1").unwrap();
    e.run_until_idle();
    let order = execution_order(&e);
    assert_eq!(order, ["left", "right", "join", "join"]);
    assert_eq!(e.buffer("join:0").unwrap().len(), 2);

    let mut coalescing = engine(doc, EngineOptions { coalesce: true, ..EngineOptions::default() });
    coalescing.inject("top:0", "v=1").unwrap();
    coalescing.run_until_idle();
    assert_eq!(execution_order(&coalescing), ["left", "right", "join"]);
}

#[test]
fn runaway_cycles_stop_at_the_budget() {
    let doc = "a :: Format(\"{0}\"); a -> b :: Format(\"{0}\") -> a;";
    let mut e = engine(doc, EngineOptions { budget: 50, ..EngineOptions::default() });
    e.inject("a:0", "x").unwrap();
    assert_eq!(e.run_until_idle(), 50);
    assert!(e.queue().is_empty());
    let last = e.events().last().unwrap();
    assert_eq!(last.kind, EventKind::NodeError);
    assert!(last.detail.as_deref().unwrap().contains("budget"));
}

#[test]
fn config_links_do_not_schedule() {
    let doc = "\
src :: Filter(x);
c :: Filter(x);
src -> f :: Filter(nomatch);
c -> [-1]f;
";
    let mut e = engine(doc, EngineOptions::default());
    e.inject("c:0", "b").unwrap();
    e.run_until_idle();
    assert!(execution_order(&e).is_empty());
    e.inject("src:0", "a\nb").unwrap();
    e.run_until_idle();
    assert_eq!(texts(&e, "f:0"), ["a\n>>> b <<<"]);
    assert_eq!(e.buffer("src:0").unwrap().records()[0].origin, Origin::Injected);
}
