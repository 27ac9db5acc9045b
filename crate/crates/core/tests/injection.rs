mod common;

use std::collections::BTreeSet;

use common::{engine, executed, texts};
use tsgraph::engine::{Engine, EngineOptions, EventKind, Origin};

const DOC: &str = "\
clock :: Clock(1);
clock -> label :: Format(\"tick {0}\") -> mark :: Filter(tick);
clock -> table :: Table-view();
mark -> out;
";

fn downstream(e: &Engine) -> BTreeSet<String> {
    let mut s = executed(e);
    s.remove("clock");
    s
}

#[test]
fn injected_record_runs_the_same_nodes() {
    // The first tick fires at t=0; the other engine never advances.
    let mut written = engine(DOC, EngineOptions::default());
    written.advance_to(0);
    let mut injected = engine(DOC, EngineOptions::default());
    injected.inject("clock:0", "0").unwrap();
    injected.run_until_idle();

    assert_eq!(downstream(&written), downstream(&injected));
    assert_eq!(texts(&written, "mark:0"), texts(&injected, "mark:0"));
    assert_eq!(texts(&written, "table:0"), texts(&injected, "table:0"));

    let origin = |e: &Engine| e.buffer("clock:0").unwrap().records()[0].origin;
    assert_eq!(origin(&written), Origin::Node);
    assert_eq!(origin(&injected), Origin::Injected);
    assert!(injected.events().iter().any(|ev| ev.kind == EventKind::Injected));
}

#[test]
fn injection_into_unknown_buffer_fails() {
    let mut e = engine(DOC, EngineOptions::default());
    assert!(e.inject("nope:0", "x").is_err());
    assert!(e.inject("clock:7", "x").is_err());
    e.stop();
    assert!(e.inject("clock:0", "x").is_err());
}
