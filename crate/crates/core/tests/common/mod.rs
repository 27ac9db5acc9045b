#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::net::Ipv4Addr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;

use tsgraph::engine::{Engine, EngineOptions, EventKind};
use tsgraph::graph::{build_graph, Tsg};
use tsgraph::lang::{
    parse_document, ConfigValue, Endpoint, EndpointTarget, LinkChain, LinkOp, NodeDecl, PortRef, SourceSpan,
    Statement, TsgDocument,
};
use tsgraph::mock_controller::{ControllerFixture, FlowFixture, SwitchFixture};
use tsgraph::nodes::NodeRegistry;

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn read_fixture(name: &str) -> String {
    std::fs::read_to_string(fixture(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn registry() -> Arc<NodeRegistry> {
    Arc::new(NodeRegistry::builtin())
}

pub fn build(text: &str) -> Tsg {
    let doc = parse_document(text, "test").expect("document parses");
    build_graph(&doc, &registry()).expect("document builds")
}

pub fn engine(text: &str, opts: EngineOptions) -> Engine {
    Engine::start(build(text), registry(), opts)
}

/// Nodes that ran at least once.
pub fn executed(engine: &Engine) -> BTreeSet<String> {
    engine
        .events()
        .iter()
        .filter(|e| e.kind == EventKind::NodeExecuted)
        .filter_map(|e| e.node.clone())
        .collect()
}

/// Node ids in execution order.
pub fn execution_order(engine: &Engine) -> Vec<String> {
    engine
        .events()
        .iter()
        .filter(|e| e.kind == EventKind::NodeExecuted)
        .filter_map(|e| e.node.clone())
        .collect()
}

pub fn texts(engine: &Engine, buffer: &str) -> Vec<String> {
    engine
        .buffer(buffer)
        .unwrap_or_else(|| panic!("no buffer {buffer}"))
        .records()
        .iter()
        .map(|r| r.text.clone())
        .collect()
}

// ---- random documents ----

const CLASSES: &[&str] = &[
    "Ping", "Arp", "Decision", "Decision-summary", "Function", "Topology-SDN", "Clock", "View", "Graph",
    "Flow-stat-ODL", "Table-view",
];
const WORDS: &[&str] = &["ping", "arp", "ifc", "route", "s1", "decision", "host", "eth0", "x", "trace"];
const LAMBDAS: &[&str] = &[
    "(lambda (x) (> (length x) 0))",
    "(lambda (x) (string-match \"ttl\" x))",
    "(lambda (a b) (concat a \",\" b))",
    "(not (null x))",
];

fn word<R: Rng>(rng: &mut R) -> String {
    let parts = rng.gen_range(1..=3);
    (0..parts)
        .map(|_| *WORDS.choose(rng).unwrap())
        .collect::<Vec<_>>()
        .join("-")
}

fn name<R: Rng>(rng: &mut R) -> String {
    format!("{}{}", word(rng), rng.gen_range(0..20))
}

fn quoted<R: Rng>(rng: &mut R) -> String {
    let alphabet: Vec<char> = "ab \"\\\n\t,;()[]->::é{}0".chars().collect();
    let n = rng.gen_range(0..12);
    (0..n).map(|_| *alphabet.choose(rng).unwrap()).collect()
}

fn value<R: Rng>(rng: &mut R) -> ConfigValue {
    match rng.gen_range(0..7) {
        0 => ConfigValue::Nil,
        1 => ConfigValue::Int(rng.gen_range(-1000..100_000)),
        2 => ConfigValue::Quoted(quoted(rng)),
        3 => ConfigValue::Sexpr(LAMBDAS.choose(rng).unwrap().to_string()),
        4 => ConfigValue::Bare(format!("{}.{}.{}.{}", rng.gen_range(0..256), rng.gen_range(0..256), rng.gen_range(0..256), rng.gen_range(0..256))),
        5 => ConfigValue::Bare(format!("-{}", ["n", "c", "i"].choose(rng).unwrap())),
        _ => ConfigValue::Bare(word(rng)),
    }
}

fn decl<R: Rng>(rng: &mut R, named: bool) -> NodeDecl {
    NodeDecl {
        name: named.then(|| name(rng)),
        class: CLASSES.choose(rng).unwrap().to_string(),
        args: (0..rng.gen_range(0..5)).map(|_| value(rng)).collect(),
        span: SourceSpan::default(),
    }
}

/// Input-side lists may mix input and config ports.
fn ports<R: Rng>(rng: &mut R, input_side: bool) -> Option<Vec<PortRef>> {
    if rng.gen_bool(0.5) {
        return None;
    }
    let n = rng.gen_range(1..=3);
    Some(
        (0..n)
            .map(|_| {
                if input_side && rng.gen_bool(0.3) {
                    PortRef::config(rng.gen_range(1..5))
                } else if input_side {
                    PortRef::input(rng.gen_range(0..4))
                } else {
                    PortRef::output(rng.gen_range(0..4))
                }
            })
            .collect(),
    )
}

fn endpoint<R: Rng>(rng: &mut R) -> Endpoint {
    let target = if rng.gen_bool(0.3) {
        let named = rng.gen_bool(0.5);
        EndpointTarget::Decl(decl(rng, named))
    } else {
        EndpointTarget::Name(name(rng))
    };
    Endpoint {
        inputs: ports(rng, true),
        target,
        outputs: ports(rng, false),
        span: SourceSpan::default(),
    }
}

/// A well-formed document: declarations and link chains over a small
/// vocabulary with every value form and port list shape.
pub fn random_document<R: Rng>(rng: &mut R) -> TsgDocument {
    let mut doc = TsgDocument::new("random");
    for _ in 0..rng.gen_range(0..12) {
        if rng.gen_bool(0.4) {
            doc.statements.push(Statement::Decl(decl(rng, true)));
        } else {
            let len = rng.gen_range(2..=5);
            let mut endpoints: Vec<Endpoint> = (0..len).map(|_| endpoint(rng)).collect();
            let ops: Vec<LinkOp> = (1..len)
                .map(|_| if rng.gen_bool(0.2) { LinkOp::SelfLink } else { LinkOp::Link })
                .collect();
            // Heads take no input ports, tails and self-link sources no outputs.
            endpoints[0].inputs = None;
            endpoints[len - 1].outputs = None;
            for (i, op) in ops.iter().enumerate() {
                if *op == LinkOp::SelfLink {
                    endpoints[i].outputs = None;
                }
            }
            doc.statements.push(Statement::Chain(LinkChain {
                endpoints,
                ops,
                span: SourceSpan::default(),
            }));
        }
    }
    doc
}

// ---- everyday scenarios ----

pub struct Scenario {
    pub name: &'static str,
    pub executed: &'static [&'static str],
    pub overall: &'static str,
    /// Failing decision labels, in summary order.
    pub failing: &'static [&'static str],
}

const SCENARIO_A: &[&str] = &["ping", "ping-decision", "ds"];
const SCENARIO_B: &[&str] = &["ping", "ping-decision", "ds", "ifconfig", "ifc-decision"];
const SCENARIO_C: &[&str] = &[
    "ping", "ping-decision", "ds", "ifconfig", "ifc-decision", "host", "host-decision", "Function-1", "arp",
    "arp-decision",
];
const SCENARIO_D: &[&str] = &[
    "ping", "ping-decision", "ds", "ifconfig", "ifc-decision", "host", "host-decision", "Function-1", "arp",
    "arp-decision", "trace", "trace-decision", "hop", "route", "route-decision", "iptables",
];

/// Expected outcomes, read off the troubleshooting flow chart.
pub const SCENARIOS: &[Scenario] = &[
    Scenario { name: "a", executed: SCENARIO_A, overall: "pass", failing: &[] },
    Scenario { name: "b", executed: SCENARIO_B, overall: "fail", failing: &["ping", "ifc"] },
    Scenario { name: "c", executed: SCENARIO_C, overall: "fail", failing: &["ping", "arp-cache"] },
    Scenario { name: "d", executed: SCENARIO_D, overall: "fail", failing: &["ping", "trace"] },
];

pub fn run_scenario(name: &str) -> Engine {
    let opts = EngineOptions::default().with_stub_dir(fixture(&format!("scenarios/{name}")));
    let mut e = engine(&read_fixture("everyday-full.tsg"), opts);
    e.run_until_idle();
    e
}

// ---- SDN pipeline ----

pub fn sdn_fixture() -> ControllerFixture {
    ControllerFixture::from_json(&read_fixture("sdn/controller.json")).expect("fixture parses")
}

pub fn sdn_document(controller: &str) -> String {
    read_fixture("sdn/flow-space.tsg").replace("CONTROLLER", controller)
}

pub fn sdn_document_for(controller: &str, flavor: &str, src: &str, dst: &str) -> String {
    sdn_document(controller)
        .replace("-POX(", &format!("-{flavor}("))
        .replace("(10.0.0.0/24, 10.0.1.0/24)", &format!("({src}, {dst})"))
}

fn prefix(text: Option<&str>) -> Option<(u32, u32)> {
    let t = text?;
    if t == "nil" || t == "*" {
        return None;
    }
    let (a, len) = match t.split_once('/') {
        Some((a, l)) => (a, l.parse::<u32>().unwrap()),
        None => (t, 32),
    };
    Some((u32::from(a.parse::<Ipv4Addr>().unwrap()), len))
}

/// Two address spaces intersect when they agree on the shorter prefix.
fn intersects(a: Option<(u32, u32)>, b: Option<(u32, u32)>) -> bool {
    match (a, b) {
        (Some((x, lx)), Some((y, ly))) => {
            let len = lx.min(ly);
            let mask = if len == 0 { 0 } else { u32::MAX << (32 - len) };
            x & mask == y & mask
        }
        _ => true,
    }
}

/// Flows of the first two switches (in fixture order) whose match overlaps
/// the filter's source and destination spaces.
pub fn brute_force_rows(f: &ControllerFixture, src: &str, dst: &str) -> usize {
    let queried: Vec<u64> = f.switches.iter().take(2).map(|s| s.id).collect();
    let (src, dst) = (prefix(Some(src)), prefix(Some(dst)));
    f.flows
        .iter()
        .filter(|fl| queried.contains(&fl.switch))
        .filter(|fl| intersects(prefix(fl.nw_src.as_deref()), src) && intersects(prefix(fl.nw_dst.as_deref()), dst))
        .count()
}

fn random_space<R: Rng>(rng: &mut R) -> String {
    let len = *[8u32, 16, 24, 25, 32].choose(rng).unwrap();
    let addr = Ipv4Addr::new(10, rng.gen_range(0..2), rng.gen_range(0..2), rng.gen_range(0..=255));
    let mask = u32::MAX << (32 - len);
    let net = Ipv4Addr::from(u32::from(addr) & mask);
    if len == 32 {
        net.to_string()
    } else {
        format!("{net}/{len}")
    }
}

pub fn random_filter_space<R: Rng>(rng: &mut R) -> String {
    if rng.gen_bool(0.15) {
        "nil".to_string()
    } else {
        random_space(rng)
    }
}

pub fn random_controller<R: Rng>(rng: &mut R) -> ControllerFixture {
    let n = rng.gen_range(2..=4);
    let switches: Vec<SwitchFixture> = (1..=n).map(|i| SwitchFixture { id: i * 7 + 1, name: format!("sw{i}") }).collect();
    let flows = (0..rng.gen_range(0..25))
        .map(|_| FlowFixture {
            switch: switches.choose(rng).unwrap().id,
            nw_src: rng.gen_bool(0.8).then(|| random_space(rng)),
            nw_dst: rng.gen_bool(0.8).then(|| random_space(rng)),
            out_port: rng.gen_range(1..48),
        })
        .collect();
    ControllerFixture { switches, flows, links: vec![] }
}

// ---- recommender repositories ----

/// Classes with arguments that build without errors.
pub const PALETTE: &[(&str, &str)] = &[
    ("Ping", "Ping(localhost, 10.0.0.1)"),
    ("Arp", "Arp(localhost, nil, -n)"),
    ("Ifconfig", "Ifconfig(localhost)"),
    ("Host", "Host(localhost, a.example)"),
    ("Traceroute", "Traceroute(localhost, 10.0.0.9)"),
    ("Clock", "Clock(5)"),
    ("Filter", "Filter(ttl)"),
    ("Decision", "Decision(d, string-match, ttl)"),
    ("Decision-summary", "Decision-summary()"),
    ("Graph", "Graph()"),
    ("Table-view", "Table-view()"),
    ("Topology-SDN", "Topology-SDN(localhost)"),
];

pub struct SyntheticRepo {
    /// File contents in name order.
    pub files: Vec<(String, String)>,
    /// Class counts tallied while generating.
    pub counts: BTreeMap<String, u64>,
}

/// One file: named declarations, inline and anonymous instances linked in a
/// chain, and fresh undeclared names that become Views. About one file in
/// eight is broken and must not count.
fn synthetic_file<R: Rng>(rng: &mut R, counts: &mut BTreeMap<String, u64>) -> String {
    let broken = rng.gen_ratio(1, 8);
    let mut local: BTreeMap<String, u64> = BTreeMap::new();
    let mut lines = Vec::new();
    let mut names = Vec::new();
    for i in 0..rng.gen_range(0..6) {
        let (class, text) = PALETTE.choose(rng).unwrap();
        let n = format!("n{i}");
        lines.push(format!("{n} :: {text};"));
        names.push(n);
        *local.entry(class.to_string()).or_insert(0) += 1;
    }
    let mut views = 0;
    for _ in 0..rng.gen_range(0..4) {
        let mut chain = Vec::new();
        for pos in 0..rng.gen_range(2..5) {
            // Only right-hand names become Views.
            let pick = if pos == 0 { rng.gen_range(0..2) } else { rng.gen_range(0..3) };
            match pick {
                0 if !names.is_empty() => chain.push(names.choose(rng).unwrap().clone()),
                1 => {
                    let (class, text) = PALETTE.choose(rng).unwrap();
                    *local.entry(class.to_string()).or_insert(0) += 1;
                    chain.push(text.to_string());
                }
                2 => {
                    views += 1;
                    chain.push(format!("v{views}"));
                }
                _ => {
                    let (class, text) = PALETTE.choose(rng).unwrap();
                    *local.entry(class.to_string()).or_insert(0) += 1;
                    chain.push(text.to_string());
                }
            }
        }
        lines.push(format!("{};", chain.join(" -> ")));
    }
    if views > 0 {
        *local.entry("View".to_string()).or_insert(0) += views;
    }
    if broken {
        lines.push("oops :: Ping(localhost;".to_string());
    } else {
        for (c, n) in local {
            *counts.entry(c).or_insert(0) += n;
        }
    }
    lines.join("\n") + "\n"
}

pub fn synthetic_repo<R: Rng>(rng: &mut R) -> SyntheticRepo {
    let mut counts = BTreeMap::new();
    let files = (0..rng.gen_range(1..8))
        .map(|i| (format!("f{i:02}.tsg"), synthetic_file(rng, &mut counts)))
        .collect();
    SyntheticRepo { files, counts }
}

/// Top `k` of `counts` minus `current`: count descending, then name.
pub fn expected_ranking(counts: &BTreeMap<String, u64>, current: &BTreeSet<String>, k: usize) -> Vec<(String, u64)> {
    let mut v: Vec<(String, u64)> = counts
        .iter()
        .filter(|(c, n)| **n > 0 && !current.contains(*c))
        .map(|(c, n)| (c.clone(), *n))
        .collect();
    v.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    v.truncate(k);
    v
}

/// A buildable document instantiating `classes`.
pub fn document_with<'a>(classes: impl IntoIterator<Item = &'a str>) -> String {
    classes
        .into_iter()
        .enumerate()
        .map(|(i, c)| {
            let text = PALETTE.iter().find(|(p, _)| *p == c).map(|(_, t)| *t).unwrap();
            format!("c{i} :: {text};\n")
        })
        .collect()
}
