mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{random_document, read_fixture};
use tsgraph::lang::{parse_document, serialize_document};

fn round_trip(text: &str) {
    let first = parse_document(text, "a").unwrap_or_else(|e| panic!("{e}\n{text}"));
    let printed = serialize_document(&first);
    let second = parse_document(&printed, "b").unwrap_or_else(|e| panic!("{e}\n{printed}"));
    assert!(first.structurally_eq(&second), "reparse differs:\n{text}\n--\n{printed}");
    assert_eq!(serialize_document(&second), printed);
}

#[test]
fn fixtures_round_trip() {
    for f in ["fig2.tsg", "everyday.tsg", "everyday-full.tsg", "sdn/flow-space.tsg"] {
        round_trip(&read_fixture(f));
    }
}

#[test]
fn generated_documents_survive_printing() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..1000 {
        let doc = random_document(&mut rng);
        let text = serialize_document(&doc);
        let back = parse_document(&text, "random").unwrap_or_else(|e| panic!("{e}\n{text}"));
        assert!(back.structurally_eq(&doc), "{text}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig {
        cases: 256,
        failure_persistence: None,
        ..ProptestConfig::default()
    })]

    #[test]
    fn printing_is_a_fixed_point(seed in any::<u64>()) {
        let doc = random_document(&mut ChaCha8Rng::seed_from_u64(seed));
        round_trip(&serialize_document(&doc));
    }

    #[test]
    fn whitespace_and_comments_do_not_matter(seed in any::<u64>()) {
        let doc = random_document(&mut ChaCha8Rng::seed_from_u64(seed));
        let spaced = serialize_document(&doc).replace(";\n", ";\n  // note\n\n");
        let back = parse_document(&spaced, "s").unwrap();
        prop_assert!(back.structurally_eq(&doc));
    }
}
