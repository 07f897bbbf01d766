mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;

use common::{perturbed_pair, random_database, rng, synthetic_config};
use siglink::matcher::{MatchParams, Matcher};
use siglink::{
    build_signature_database, link, match_records, Combination, CombinationSource, Config,
    Database, MatchSet,
};

fn pairs(m: &MatchSet) -> BTreeSet<(String, String)> {
    m.pairs()
        .iter()
        .map(|p| (p.id_a.clone(), p.id_b.clone()))
        .collect()
}

fn csv(m: &MatchSet) -> Vec<u8> {
    let mut out = Vec::new();
    m.write_csv(&mut out).unwrap();
    out
}

fn random_setup(seed: u64, n: usize) -> (siglink::SignatureDatabase, siglink::SignatureDatabase) {
    let mut r = rng(seed);
    let a = random_database(&mut r, "a", 4, n);
    let b = random_database(&mut r, "b", 4, n);
    let schema = a.schema().to_vec();
    let combos: Vec<Combination> = ["x0+x1", "x1+x2", "x2+x3", "x0+x3"]
        .iter()
        .map(|c| Combination::parse(c, &schema).unwrap())
        .collect();
    let mut cfg = Config {
        p_t: 0.3,
        ..Config::default()
    };
    cfg.set("relationship", "x0").unwrap();
    (
        build_signature_database(&a, &combos, &cfg).unwrap(),
        build_signature_database(&b, &combos, &cfg).unwrap(),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn raising_threshold_never_adds_pairs(seed in any::<u64>(), lo in 0.0f64..1.0, hi in 0.0f64..1.0) {
        let (lo, hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
        let (s_a, s_b) = random_setup(seed, 120);
        let m = Matcher::new(&s_a, &s_b).unwrap();
        for attribute_only in [false, true] {
            let low = pairs(&m.classify(MatchParams { beta: 0.5, s_t: lo, attribute_only }));
            let high = pairs(&m.classify(MatchParams { beta: 0.5, s_t: hi, attribute_only }));
            prop_assert!(high.is_subset(&low));
        }
    }

    #[test]
    fn attribute_only_is_a_subset_of_full(seed in any::<u64>(), s_t in 0.0f64..=1.0, beta in 0.0f64..=1.0) {
        let (s_a, s_b) = random_setup(seed, 120);
        let m = Matcher::new(&s_a, &s_b).unwrap();
        let full = pairs(&m.classify(MatchParams { beta, s_t, attribute_only: false }));
        let attr = pairs(&m.classify(MatchParams { beta, s_t, attribute_only: true }));
        prop_assert!(attr.is_subset(&full));
    }

    #[test]
    fn swapping_databases_transposes_matches(seed in any::<u64>()) {
        let (s_a, s_b) = random_setup(seed, 120);
        let cfg = Config { s_t: 0.5, ..Config::default() };
        let ab = match_records(&s_a, &s_b, &cfg).unwrap();
        let ba = match_records(&s_b, &s_a, &cfg).unwrap();
        prop_assert_eq!(ab.transposed(), ba);
    }

    #[test]
    fn matches_are_candidates_with_signatures(seed in any::<u64>()) {
        let (s_a, s_b) = random_setup(seed, 120);
        let m = Matcher::new(&s_a, &s_b).unwrap();
        let cands: BTreeSet<(u32, u32)> = m.candidates().iter().map(|c| (c.a, c.b)).collect();
        for c in m.candidates() {
            prop_assert!(!s_a.signatures_of(c.a as usize).is_empty());
            prop_assert!(!s_b.signatures_of(c.b as usize).is_empty());
        }
        let all = m.classify(MatchParams { beta: 0.5, s_t: 0.0, attribute_only: false });
        prop_assert_eq!(all.len(), cands.len());
    }
}

fn reversed(db: &Database) -> Database {
    db.with_records(db.records().iter().rev().cloned().collect())
        .unwrap()
}

#[test]
fn record_order_does_not_change_matches() {
    let (a, b, _) = perturbed_pair(3000, 4);
    let cfg = synthetic_config();
    let one = link(&a, &b, &cfg, CombinationSource::Select).unwrap();
    let two = link(
        &reversed(&a),
        &reversed(&b),
        &cfg,
        CombinationSource::Select,
    )
    .unwrap();
    assert_eq!(one.combinations, two.combinations);
    assert_eq!(csv(&one.matches), csv(&two.matches));
}

#[test]
fn worker_count_does_not_change_output() {
    let (a, b, _) = perturbed_pair(3000, 8);
    let mut cfg = synthetic_config();
    cfg.c_t = 0.85;
    let run = |workers| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .unwrap();
        pool.install(|| {
            csv(&link(&a, &b, &cfg, CombinationSource::Select)
                .unwrap()
                .matches)
        })
    };
    let base = run(1);
    assert!(!base.is_empty());
    for w in [2, 3, 8] {
        assert_eq!(run(w), base);
    }
}

#[test]
fn one_to_one_keeps_each_record_once() {
    let (a, b, _) = perturbed_pair(2000, 2);
    let mut cfg = synthetic_config();
    cfg.s_t = 0.3;
    cfg.c_t = 0.85;
    cfg.one_to_one = true;
    let out = link(&a, &b, &cfg, CombinationSource::Select).unwrap();
    let ids_a: BTreeSet<&str> = out
        .matches
        .pairs()
        .iter()
        .map(|p| p.id_a.as_str())
        .collect();
    let ids_b: BTreeSet<&str> = out
        .matches
        .pairs()
        .iter()
        .map(|p| p.id_b.as_str())
        .collect();
    assert_eq!(ids_a.len(), out.matches.len());
    assert_eq!(ids_b.len(), out.matches.len());
}
