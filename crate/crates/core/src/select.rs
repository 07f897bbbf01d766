//! Attribute-combination selection: a level-wise Apriori search over atoms,
//! scored by completeness and Gini impurity.
//!
//! Level 1 holds every atom on its own and is never scored. From level 2 on,
//! a combination is kept as join material only while its score reaches
//! `c_t`; accepted combinations evict their strict subsets from the accepted
//! list, and the best `n_a` survivors are returned.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};

use rayon::prelude::*;

use crate::config::{Config, ScoreScope};
use crate::error::{Error, Result};
use crate::model::{Atom, AttributeCombination, Combination, Database};

/// Completeness, Gini impurity and their weighted score on one database.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CombinationScores {
    pub completeness: f64,
    pub gini: f64,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredCombination {
    pub combination: Combination,
    /// One entry per scored database, in input order.
    pub per_database: Vec<CombinationScores>,
    /// Minimum score over `per_database`.
    pub score: f64,
}

impl ScoredCombination {
    fn new(combination: Combination, per_database: Vec<CombinationScores>) -> Self {
        let score = per_database
            .iter()
            .map(|s| s.score)
            .fold(f64::INFINITY, f64::min);
        ScoredCombination {
            combination,
            per_database,
            score,
        }
    }

    /// Scores of the database that bound the minimum.
    fn binding(&self) -> CombinationScores {
        *self
            .per_database
            .iter()
            .find(|s| s.score == self.score)
            .expect("at least one database is scored")
    }

    pub fn to_attribute_combination(&self) -> AttributeCombination {
        let b = self.binding();
        AttributeCombination {
            combination: self.combination.clone(),
            score: self.score,
            completeness: b.completeness,
            gini: b.gini,
        }
    }
}

/// Descending score, then fewer members, then canonical member order.
pub fn rank_order(a: &ScoredCombination, b: &ScoredCombination) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then(a.combination.len().cmp(&b.combination.len()))
        .then_with(|| a.combination.cmp(&b.combination))
}

/// Search state: surviving combinations per level and the accepted list.
#[derive(Debug, Clone, Default)]
pub struct SelectionLattice {
    pub levels: BTreeMap<usize, BTreeSet<Combination>>,
    pub accepted: Vec<ScoredCombination>,
}

#[derive(Debug, Clone)]
pub struct Selection {
    /// The top `n_a` accepted combinations, best first.
    pub combinations: Vec<AttributeCombination>,
    /// Scores of `combinations`, same order.
    pub scored: Vec<ScoredCombination>,
    pub lattice: SelectionLattice,
}

fn check_atoms(combination: &Combination, db: &Database) -> Result<()> {
    combination.check_schema(db.schema())
}

/// Fraction of records with a value for every member.
pub fn completeness_score(combination: &Combination, db: &Database) -> Result<f64> {
    check_atoms(combination, db)?;
    let complete = db
        .records()
        .iter()
        .filter(|r| combination.members().iter().all(|a| a.value(r).is_some()))
        .count();
    Ok(completeness_from_counts(db.len(), complete))
}

/// `Σ P(v)(1 − P(v))` over distinct member-value tuples, with `P(v) = f_v/|D|`
/// where `|D|` counts every record, complete or not.
pub fn gini_impurity_score(combination: &Combination, db: &Database) -> Result<f64> {
    check_atoms(combination, db)?;
    let mut freq: HashMap<Vec<String>, u64> = HashMap::new();
    for r in db.records() {
        let tuple: Option<Vec<String>> = combination.members().iter().map(|a| a.value(r)).collect();
        if let Some(t) = tuple {
            *freq.entry(t).or_default() += 1;
        }
    }
    Ok(gini_from_counts(db.len(), freq.values().copied()))
}

pub fn combined_score(completeness: f64, gini: f64, alpha: f64) -> f64 {
    alpha * completeness + (1.0 - alpha) * gini
}

pub(crate) fn completeness_from_counts(n: usize, complete: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        complete as f64 / n as f64
    }
}

/// Exact integer numerator so the value does not depend on summation order.
pub(crate) fn gini_from_counts(n: usize, counts: impl Iterator<Item = u64>) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let n128 = n as u128;
    let num: u128 = counts.map(|f| f as u128 * (n128 - f as u128)).sum();
    num as f64 / (n as f64 * n as f64)
}

pub fn score_combination(
    combination: &Combination,
    db: &Database,
    alpha: f64,
) -> Result<CombinationScores> {
    let completeness = completeness_score(combination, db)?;
    let gini = gini_impurity_score(combination, db)?;
    Ok(CombinationScores {
        completeness,
        gini,
        score: combined_score(completeness, gini, alpha),
    })
}

/// Every atom as a singleton combination.
pub fn seed_combinations(atoms: &[Atom]) -> BTreeSet<Combination> {
    atoms
        .iter()
        .map(|&a| Combination::from_sorted(vec![a]))
        .collect()
}

/// Apriori join: two size-(k−1) combinations sharing their first k−2
/// members yield a size-k candidate, kept only when all of its size-(k−1)
/// subsets are in `prev`.
pub fn gen_combinations(prev: &BTreeSet<Combination>) -> Result<BTreeSet<Combination>> {
    let mut out = BTreeSet::new();
    let Some(first) = prev.iter().next() else {
        return Ok(out);
    };
    let size = first.len();
    if prev.iter().any(|c| c.len() != size) {
        return Err(Error::InvalidCombination(
            "cannot join combinations of different sizes".to_string(),
        ));
    }
    let items: Vec<&Combination> = prev.iter().collect();
    let shared = size - 1;
    for (i, x) in items.iter().enumerate() {
        let xm = x.members();
        for y in &items[i + 1..] {
            let ym = y.members();
            if xm[..shared] != ym[..shared] {
                break;
            }
            let mut members = xm.to_vec();
            members.push(ym[shared]);
            let all_subsets_present = (0..members.len()).all(|skip| {
                let sub: Vec<Atom> = members
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != skip)
                    .map(|(_, a)| *a)
                    .collect();
                prev.contains(&Combination::from_sorted(sub))
            });
            if all_subsets_present {
                out.insert(Combination::from_sorted(members));
            }
        }
    }
    Ok(out)
}

const MISSING: u32 = u32::MAX;

/// Dense per-atom value codes for one database.
struct EncodedDatabase {
    len: usize,
    codes: HashMap<Atom, Vec<u32>>,
}

impl EncodedDatabase {
    fn new(db: &Database, atoms: &[Atom]) -> Self {
        let codes = atoms
            .par_iter()
            .map(|&atom| {
                let mut dict: HashMap<String, u32> = HashMap::new();
                let col = db
                    .records()
                    .iter()
                    .map(|r| match atom.value(r) {
                        Some(v) => {
                            let next = dict.len() as u32;
                            *dict.entry(v).or_insert(next)
                        }
                        None => MISSING,
                    })
                    .collect();
                (atom, col)
            })
            .collect();
        EncodedDatabase {
            len: db.len(),
            codes,
        }
    }
}

/// Group ids of a combination's value tuples, built from the ids of its
/// prefix and the codes of its last atom.
fn extend_groups(prefix: &[u32], last: &[u32]) -> (Vec<u32>, Vec<u64>) {
    let mut index: HashMap<u64, u32> = HashMap::new();
    let mut counts: Vec<u64> = Vec::new();
    let ids = prefix
        .iter()
        .zip(last)
        .map(|(&p, &c)| {
            if p == MISSING || c == MISSING {
                return MISSING;
            }
            let key = (p as u64) << 32 | c as u64;
            let next = counts.len() as u32;
            let id = *index.entry(key).or_insert(next);
            if id == next {
                counts.push(0);
            }
            counts[id as usize] += 1;
            id
        })
        .collect();
    (ids, counts)
}

fn scores_from_groups(len: usize, counts: &[u64], alpha: f64) -> CombinationScores {
    let complete: u64 = counts.iter().sum();
    let completeness = completeness_from_counts(len, complete as usize);
    let gini = gini_from_counts(len, counts.iter().copied());
    CombinationScores {
        completeness,
        gini,
        score: combined_score(completeness, gini, alpha),
    }
}

/// Runs the level-wise search on one or two databases (see [`ScoreScope`]).
pub fn select_attribute_combinations(
    db_a: &Database,
    db_b: &Database,
    cfg: &Config,
) -> Result<Selection> {
    if db_a.schema() != db_b.schema() {
        return Err(Error::SchemaMismatch(format!(
            "{} has [{}], {} has [{}]",
            db_a.name(),
            db_a.schema().join(", "),
            db_b.name(),
            db_b.schema().join(", ")
        )));
    }
    let atoms = cfg.atoms(db_a.schema())?;
    let dbs: Vec<&Database> = match cfg.score_scope {
        ScoreScope::Both => vec![db_a, db_b],
        ScoreScope::First => vec![db_a],
    };
    let encoded: Vec<EncodedDatabase> = dbs
        .iter()
        .map(|db| EncodedDatabase::new(db, &atoms))
        .collect();

    let mut lattice = SelectionLattice::default();
    let level1 = seed_combinations(&atoms);
    // group ids of every surviving combination of the previous level
    let mut groups: HashMap<Combination, Vec<Vec<u32>>> = level1
        .iter()
        .map(|c| {
            let atom = c.members()[0];
            (
                c.clone(),
                encoded.iter().map(|e| e.codes[&atom].clone()).collect(),
            )
        })
        .collect();
    lattice.levels.insert(1, level1);

    for k in 2..=atoms.len() {
        let candidates = gen_combinations(&lattice.levels[&(k - 1)])?;
        if candidates.is_empty() {
            break;
        }
        let candidates: Vec<Combination> = candidates.into_iter().collect();
        let scored: Vec<(Vec<Vec<u32>>, ScoredCombination)> = candidates
            .par_iter()
            .map(|c| {
                let members = c.members();
                let prefix = &groups[&Combination::from_sorted(members[..k - 1].to_vec())];
                let last = members[k - 1];
                let mut ids = Vec::with_capacity(encoded.len());
                let mut per_db = Vec::with_capacity(encoded.len());
                for (e, p) in encoded.iter().zip(prefix) {
                    let (g, counts) = extend_groups(p, &e.codes[&last]);
                    per_db.push(scores_from_groups(e.len, &counts, cfg.alpha));
                    ids.push(g);
                }
                (ids, ScoredCombination::new(c.clone(), per_db))
            })
            .collect();

        let mut level = BTreeSet::new();
        let mut next_groups = HashMap::new();
        for (ids, sc) in scored {
            if sc.score >= cfg.c_t {
                lattice
                    .accepted
                    .retain(|t| !t.combination.is_strict_subset_of(&sc.combination));
                level.insert(sc.combination.clone());
                next_groups.insert(sc.combination.clone(), ids);
                lattice.accepted.push(sc);
            }
        }
        groups = next_groups;
        lattice.levels.insert(k, level);
    }

    let mut ranked = lattice.accepted.clone();
    ranked.sort_by(rank_order);
    ranked.truncate(cfg.n_a);
    if ranked.is_empty() {
        log::warn!(
            "no attribute combination reached c_t = {}; no attribute signatures will be generated",
            cfg.c_t
        );
    }
    Ok(Selection {
        combinations: ranked
            .iter()
            .map(|s| s.to_attribute_combination())
            .collect(),
        scored: ranked,
        lattice,
    })
}

/// CSV audit report of the selected combinations.
pub fn write_report<W: std::io::Write>(
    selection: &Selection,
    schema: &[String],
    writer: W,
) -> Result<()> {
    let origin = std::path::Path::new("selection report");
    let err = |source| Error::Csv {
        path: origin.to_path_buf(),
        source,
    };
    let mut w = csv::Writer::from_writer(writer);
    let dbs = selection.scored.first().map_or(2, |s| s.per_database.len());
    let mut header = vec![
        "rank".to_string(),
        "combination".to_string(),
        "size".to_string(),
    ];
    for label in ["a", "b"].iter().take(dbs) {
        header.push(format!("completeness_{label}"));
        header.push(format!("gini_{label}"));
        header.push(format!("score_{label}"));
    }
    header.push("score".to_string());
    w.write_record(&header).map_err(err)?;
    for (i, s) in selection.scored.iter().enumerate() {
        let mut row = vec![
            (i + 1).to_string(),
            s.combination.label(schema),
            s.combination.len().to_string(),
        ];
        for d in &s.per_database {
            row.push(format!("{:.6}", d.completeness));
            row.push(format!("{:.6}", d.gini));
            row.push(format!("{:.6}", d.score));
        }
        row.push(format!("{:.6}", s.score));
        w.write_record(&row).map_err(err)?;
    }
    w.flush().map_err(|source| Error::Io {
        path: origin.to_path_buf(),
        source,
    })
}
