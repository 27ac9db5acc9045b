mod common;

use common::{engine, texts};
use tsgraph::engine::{Engine, EngineOptions};
use tsgraph::nodes::decision::{DecisionStatus, Verdict};

/// `n` sources feeding one Decision that accepts lines starting with `ok`.
fn decision_doc(n: usize, combine: &str) -> String {
    let mut doc = String::new();
    let mut args = vec!["d".to_string()];
    for _ in 0..n {
        args.push("string-match".into());
        args.push("^ok".into());
    }
    args.push(format!("combine={combine}"));
    doc.push_str(&format!("d :: Decision({});\n", args.join(", ")));
    for i in 0..n {
        doc.push_str(&format!("s{i} :: Filter(x);\ns{i} -> [{i}]d;\n"));
    }
    doc.push_str("d[2] -> status;\n");
    doc
}

fn text_for(i: usize, pass: bool) -> String {
    if pass {
        format!("ok {i}")
    } else {
        format!("bad {i}")
    }
}

fn statuses(e: &Engine) -> Vec<DecisionStatus> {
    texts(e, "d:2").iter().map(|t| DecisionStatus::from_json(t).unwrap()).collect()
}

/// First passing input, as the `or` combiner should report it.
fn oracle(pattern: &[bool]) -> Option<usize> {
    pattern.iter().position(|p| *p)
}

fn patterns(n: usize) -> impl Iterator<Item = Vec<bool>> {
    (0..1u32 << n).map(move |m| (0..n).map(|i| m & (1 << i) != 0).collect())
}

#[test]
fn or_matches_oracle_for_every_pattern() {
    for n in 1..=4 {
        for pattern in patterns(n) {
            let mut e = engine(&decision_doc(n, "or"), EngineOptions::default());
            for (i, pass) in pattern.iter().enumerate() {
                e.inject(&format!("s{i}:0"), &text_for(i, *pass)).unwrap();
            }
            e.run_until_idle();
            let st = statuses(&e);
            assert_eq!(st.len(), 1, "{pattern:?}");
            match oracle(&pattern) {
                Some(i) => {
                    assert_eq!(st[0].result, Verdict::Pass);
                    assert_eq!(texts(&e, "d:0"), [text_for(i, true)]);
                    assert!(texts(&e, "d:1").is_empty());
                }
                None => {
                    assert_eq!(st[0].result, Verdict::Fail);
                    assert!(texts(&e, "d:0").is_empty());
                    assert_eq!(texts(&e, "d:1").len(), 1);
                }
            }
        }
    }
}

#[test]
fn one_status_per_evaluation_when_inputs_arrive_apart() {
    for n in 1..=4 {
        for pattern in patterns(n) {
            let mut e = engine(&decision_doc(n, "or"), EngineOptions::default());
            for (i, pass) in pattern.iter().enumerate() {
                e.inject(&format!("s{i}:0"), &text_for(i, *pass)).unwrap();
                e.run_until_idle();
                let st = statuses(&e);
                assert_eq!(st.len(), i + 1);
                let last = st.last().unwrap();
                assert_eq!(last.seq, i as u64 + 1);
                let want = oracle(&pattern[..=i]).map_or(Verdict::Fail, |_| Verdict::Pass);
                assert_eq!(last.result, want, "{pattern:?} after input {i}");
            }
        }
    }
}

#[test]
fn and_needs_every_input() {
    for n in 1..=4 {
        for pattern in patterns(n) {
            let mut e = engine(&decision_doc(n, "and"), EngineOptions::default());
            for (i, pass) in pattern.iter().enumerate() {
                e.inject(&format!("s{i}:0"), &text_for(i, *pass)).unwrap();
            }
            e.run_until_idle();
            let all = pattern.iter().all(|p| *p);
            let st = statuses(&e);
            assert_eq!(st.len(), 1);
            assert_eq!(st[0].result == Verdict::Pass, all, "{pattern:?}");
        }
    }
}

#[test]
fn failing_status_names_the_unverified_inputs() {
    let mut e = engine(&decision_doc(2, "or"), EngineOptions::default());
    e.inject("s0:0", "bad").unwrap();
    e.inject("s1:0", "worse").unwrap();
    e.run_until_idle();
    let st = statuses(&e);
    assert_eq!(st[0].label, "d");
    assert_eq!(st[0].detail, "input 0 did not verify; input 1 did not verify");
    assert_eq!(texts(&e, "d:1"), ["d: input 0 did not verify; input 1 did not verify"]);
}
