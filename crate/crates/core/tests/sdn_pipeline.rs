mod common;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{
    brute_force_rows, engine, random_controller, random_filter_space, sdn_document, sdn_document_for, sdn_fixture,
    texts,
};
use tsgraph::engine::EngineOptions;
use tsgraph::mock_controller::MockController;
use tsgraph::nodes::sdn::Flavor;
use tsgraph::nodes::text::table_row_count;

fn rendered_rows(doc: &str) -> usize {
    let mut e = engine(doc, EngineOptions::default());
    e.run_until_idle();
    let table = texts(&e, "table:0").pop().unwrap_or_default();
    table_row_count(&table)
}

#[test]
fn fixture_rows_match_brute_force() {
    let f = sdn_fixture();
    let mock = MockController::start(f.clone(), Flavor::Pox).unwrap();
    let mut e = engine(&sdn_document(&mock.base_url()), EngineOptions::default());
    e.run_until_idle();
    assert_eq!(texts(&e, "split:0"), ["00-00-00-00-00-01"]);
    assert_eq!(texts(&e, "split:1"), ["00-00-00-00-00-02"]);
    let table = texts(&e, "table:0").pop().unwrap();
    let want = brute_force_rows(&f, "10.0.0.0/24", "10.0.1.0/24");
    assert_eq!(want, 5);
    assert_eq!(table_row_count(&table), want, "{table}");
    let paths: Vec<String> = mock.requests().into_iter().map(|r| r.path).collect();
    assert_eq!(paths[0], "/dpids");
    assert!(paths.contains(&"/flowstats/00-00-00-00-00-02".to_string()));
    assert!(!paths.iter().any(|p| p.ends_with("03")));
}

#[test]
fn every_flavor_renders_the_same_rows() {
    let f = sdn_fixture();
    let want = brute_force_rows(&f, "10.0.0.0/24", "10.0.1.0/24");
    for (flavor, suffix) in [(Flavor::Pox, "POX"), (Flavor::Floodlight, "Floodlight"), (Flavor::Odl, "ODL")] {
        let mock = MockController::start(f.clone(), flavor).unwrap();
        let doc = sdn_document_for(&mock.base_url(), suffix, "10.0.0.0/24", "10.0.1.0/24");
        assert_eq!(rendered_rows(&doc), want, "{suffix}");
    }
}

#[test]
fn random_controllers_match_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for round in 0..20 {
        let f = random_controller(&mut rng);
        let (src, dst) = (random_filter_space(&mut rng), random_filter_space(&mut rng));
        let mock = MockController::start(f.clone(), Flavor::Pox).unwrap();
        let doc = sdn_document_for(&mock.base_url(), "POX", &src, &dst);
        assert_eq!(rendered_rows(&doc), brute_force_rows(&f, &src, &dst), "round {round}: {src} {dst}\n{f:?}");
    }
}

#[test]
fn unreachable_controller_reports_errors() {
    let mut e = engine(&sdn_document("http://127.0.0.1:9"), EngineOptions::default());
    e.run_until_idle();
    let errors = e
        .events()
        .iter()
        .filter(|ev| ev.kind == tsgraph::engine::EventKind::NodeError)
        .count();
    assert!(errors >= 1);
    assert!(texts(&e, "dpids:0").iter().any(|t| t.starts_with("ERROR")));
}
