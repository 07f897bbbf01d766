#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use siglink::synth::{corrupt, generate_pair, inject_mcar, SynthParams, QID_ATTRIBUTES};
use siglink::{
    Atom, Combination, Config, Database, GroundTruth, Record, ScoreScope, SignatureDatabase,
};

pub fn schema(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

/// Random database over `attrs` attributes. Each attribute gets its own
/// alphabet size and missing rate so scores spread across [0, 1].
pub fn random_database(rng: &mut ChaCha8Rng, name: &str, attrs: usize, records: usize) -> Database {
    let columns: Vec<(u32, f64)> = (0..attrs)
        .map(|_| (rng.gen_range(1..=40), rng.gen_range(0.0..0.4)))
        .collect();
    let rows = (0..records)
        .map(|i| {
            let values: Vec<Option<String>> = columns
                .iter()
                .map(|&(card, miss)| {
                    (!rng.gen_bool(miss)).then(|| format!("v{}", rng.gen_range(0..card)))
                })
                .collect();
            Record::new(format!("{name}{i}"), values)
        })
        .collect();
    let names: Vec<String> = (0..attrs).map(|i| format!("x{i}")).collect();
    Database::new(name, names, rows).unwrap()
}

/// Completeness and Gini by direct counting of joined member values.
pub fn direct_scores(db: &Database, members: &[usize], alpha: f64) -> f64 {
    let n = db.len() as u128;
    if n == 0 {
        return alpha;
    }
    let mut counts: HashMap<Vec<&str>, u128> = HashMap::new();
    let mut missing = 0u128;
    for r in db.records() {
        let vals: Option<Vec<&str>> = members.iter().map(|&m| r.value(m)).collect();
        match vals {
            Some(v) => *counts.entry(v).or_default() += 1,
            None => missing += 1,
        }
    }
    let completeness = (n - missing) as f64 / n as f64;
    let numerator: u128 = counts.values().map(|&f| f * (n - f)).sum();
    let gini = numerator as f64 / (n * n) as f64;
    alpha * completeness + (1.0 - alpha) * gini
}

/// Exhaustive selection: every subset of size ≥ 2 is scored; a subset is
/// viable when it reaches `c_t` and all its one-smaller subsets of size ≥ 2
/// are viable; viable subsets with a viable strict superset are dropped.
pub fn brute_force_selection(a: &Database, b: &Database, cfg: &Config) -> Vec<(Vec<usize>, f64)> {
    let n = a.schema().len();
    let mut subsets: Vec<Vec<usize>> = (1u32..(1 << n))
        .filter(|m| m.count_ones() >= 2)
        .map(|m| (0..n).filter(|i| m & (1 << i) != 0).collect())
        .collect();
    subsets.sort_by_key(|s| s.len());
    let mut viable: HashMap<Vec<usize>, f64> = HashMap::new();
    for s in &subsets {
        let parents_ok = s.len() == 2
            || (0..s.len()).all(|skip| {
                let sub: Vec<usize> = s
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != skip)
                    .map(|(_, &x)| x)
                    .collect();
                viable.contains_key(&sub)
            });
        if !parents_ok {
            continue;
        }
        let mut score = direct_scores(a, s, cfg.alpha);
        if cfg.score_scope == ScoreScope::Both {
            score = score.min(direct_scores(b, s, cfg.alpha));
        }
        if score >= cfg.c_t {
            viable.insert(s.clone(), score);
        }
    }
    let mut kept: Vec<(Vec<usize>, f64)> = viable
        .iter()
        .filter(|(s, _)| {
            !viable
                .keys()
                .any(|t| t.len() > s.len() && s.iter().all(|x| t.contains(x)))
        })
        .map(|(s, &v)| (s.clone(), v))
        .collect();
    kept.sort_by(|x, y| {
        y.1.total_cmp(&x.1)
            .then(x.0.len().cmp(&y.0.len()))
            .then_with(|| x.0.cmp(&y.0))
    });
    kept.truncate(cfg.n_a);
    kept
}

pub fn members_of(c: &Combination) -> Vec<usize> {
    c.members().iter().map(|a: &Atom| a.attribute).collect()
}

/// Every cross pair whose signature sets share an element, compared by
/// signature value rather than id.
pub fn brute_force_candidates(
    s_a: &SignatureDatabase,
    s_b: &SignatureDatabase,
) -> BTreeSet<(usize, usize)> {
    let sets = |s: &SignatureDatabase| -> Vec<BTreeSet<siglink::AttributeSignature>> {
        (0..s.record_count())
            .map(|r| {
                s.signatures_of(r)
                    .iter()
                    .map(|&id| s.signature(id).clone())
                    .collect()
            })
            .collect()
    };
    let (xa, xb) = (sets(s_a), sets(s_b));
    let mut out = BTreeSet::new();
    for (i, x) in xa.iter().enumerate() {
        for (j, y) in xb.iter().enumerate() {
            if !x.is_disjoint(y) {
                out.insert((i, j));
            }
        }
    }
    out
}

pub const EXAMPLE_SCHEMA: &[&str] = &[
    "first_name",
    "last_name",
    "birth_date",
    "street_address",
    "city",
    "phone",
];

pub const EXAMPLE_A: &str = "\
id,entity_id,first_name,last_name,birth_date,street_address,city,phone
r1,e1,Peter,Smith,1981-11-25,,London,
r2,e2,Peter,,1981-11-25,43 Skye Pl,Dublin,+353 456 785
r3,e3,Anne,Miller,1991-09-11,43 Skye Plc,,+353 456 785
";

pub const EXAMPLE_B: &str = "\
id,entity_id,first_name,last_name,birth_date,street_address,city,phone
r4,e2,Peter,Smith,1981-11-25,43 Skye Pl,,
r5,e3,Ann,Myller,,43 Skye Place,Dublin,+353 456 785
";

pub fn worked_example() -> (Database, Database) {
    let layout = siglink::CsvLayout {
        id_column: "id".into(),
        entity_column: Some("entity_id".into()),
        attributes: None,
    };
    let a = siglink::ingest::read_database(EXAMPLE_A.as_bytes(), "A", &layout).unwrap();
    let b = siglink::ingest::read_database(EXAMPLE_B.as_bytes(), "B", &layout).unwrap();
    (a, b)
}

/// S_1 and S_2 as fixed combinations, phone and address relationships.
pub fn example_config() -> Config {
    let mut cfg = Config::default();
    cfg.set("combination", "first_name + last_name + yearOf(birth_date)")
        .unwrap();
    cfg.set(
        "combination",
        "first_name + yearOf(birth_date) + streetName(street_address)",
    )
    .unwrap();
    cfg.set("relationship", "phone").unwrap();
    cfg.set("relationship", "street_address").unwrap();
    cfg
}

/// Generated pair with MCAR and corruption on both sides, reduced to the
/// quasi-identifiers.
pub fn perturbed_pair(records: usize, seed: u64) -> (Database, Database, GroundTruth) {
    let pair = generate_pair(&SynthParams {
        records_a: records,
        records_b: records,
        overlap: 0.8,
        household_size: 3.0,
        seed,
    })
    .unwrap();
    let qids: Vec<String> = QID_ATTRIBUTES.iter().map(|s| s.to_string()).collect();
    let perturb = |db: &Database, salt: u64| {
        let db = inject_mcar(db, 0.2, 5, &qids, seed ^ salt).unwrap();
        let db = corrupt(&db, 0.2, 3, &qids, seed ^ (salt << 8)).unwrap();
        let idx: Vec<usize> = qids
            .iter()
            .map(|q| db.attribute_index(q).unwrap())
            .collect();
        let records = db
            .records()
            .iter()
            .map(|r| {
                let rec = Record::new(r.id(), idx.iter().map(|&i| r.value(i)));
                match r.entity_id() {
                    Some(e) => rec.with_entity(e),
                    None => rec,
                }
            })
            .collect();
        Database::new(db.name(), qids.clone(), records).unwrap()
    };
    (perturb(&pair.a, 0xa1), perturb(&pair.b, 0xb1), pair.truth)
}

/// Defaults with n_a = 5 and a same-surname, same-address relationship.
pub fn synthetic_config() -> Config {
    let mut cfg = Config {
        attributes: QID_ATTRIBUTES.iter().map(|s| s.to_string()).collect(),
        n_a: 5,
        s_t: 0.8,
        ..Config::default()
    };
    cfg.set("relationship", "last_name + street_address")
        .unwrap();
    cfg
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
