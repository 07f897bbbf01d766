mod common;

use std::collections::BTreeSet;

use rand::Rng;

use common::{brute_force_candidates, random_database, rng};
use siglink::{build_signature_database, gen_candidate_pairs, Combination, Config};

#[test]
fn inverted_index_matches_cross_product() {
    let mut r = rng(5);
    for case in 0..25 {
        let attrs = r.gen_range(2..=5);
        let n_a = r.gen_range(1..=300);
        let a = random_database(&mut r, "a", attrs, n_a);
        let n_b = r.gen_range(1..=300);
        let b = random_database(&mut r, "b", attrs, n_b);
        let schema = a.schema().to_vec();
        let combos: Vec<Combination> = (0..r.gen_range(1..=4))
            .map(|_| {
                let x = r.gen_range(0..attrs);
                let y = (x + r.gen_range(1..attrs)) % attrs;
                Combination::parse(&format!("{}+{}", schema[x], schema[y]), &schema).unwrap()
            })
            .collect();
        let cfg = Config {
            p_t: r.gen_range(0.0..0.9),
            ..Config::default()
        };
        let s_a = build_signature_database(&a, &combos, &cfg).unwrap();
        let s_b = build_signature_database(&b, &combos, &cfg).unwrap();
        let got: BTreeSet<(usize, usize)> = gen_candidate_pairs(&s_a, &s_b)
            .iter()
            .map(|c| (c.a as usize, c.b as usize))
            .collect();
        assert_eq!(got, brute_force_candidates(&s_a, &s_b), "case {case}");
    }
}

#[test]
fn shared_counts_are_set_intersections() {
    let mut r = rng(9);
    let a = random_database(&mut r, "a", 4, 200);
    let b = random_database(&mut r, "b", 4, 200);
    let schema = a.schema().to_vec();
    let combos: Vec<Combination> = ["x0+x1", "x2+x3", "x1+x3"]
        .iter()
        .map(|c| Combination::parse(c, &schema).unwrap())
        .collect();
    let cfg = Config {
        p_t: 0.0,
        ..Config::default()
    };
    let s_a = build_signature_database(&a, &combos, &cfg).unwrap();
    let s_b = build_signature_database(&b, &combos, &cfg).unwrap();
    for c in gen_candidate_pairs(&s_a, &s_b) {
        let x: BTreeSet<_> = s_a
            .signatures_of(c.a as usize)
            .iter()
            .map(|&i| s_a.signature(i).clone())
            .collect();
        let y: BTreeSet<_> = s_b
            .signatures_of(c.b as usize)
            .iter()
            .map(|&i| s_b.signature(i).clone())
            .collect();
        assert_eq!(c.shared as usize, x.intersection(&y).count());
    }
}
