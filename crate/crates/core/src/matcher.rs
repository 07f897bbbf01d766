//! Signature-based matching between two signature databases.
//!
//! Candidate pairs share at least one attribute signature. A pair whose
//! attribute-signature Jaccard similarity reaches `s_t` is a match outright;
//! otherwise its relational similarity is blended in with weight `1 − β` and
//! the blend is tested against the same threshold.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use rayon::prelude::*;

use crate::config::Config;
use crate::error::{Error, Result};
use crate::signatures::{FeatureValue, RelationalSignature, SigId, SignatureDatabase};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct CandidatePair {
    /// Record position in the first database.
    pub a: u32,
    /// Record position in the second database.
    pub b: u32,
    /// Number of attribute signatures the two records share.
    pub shared: u32,
}

/// `|X ∩ Y| / |X ∪ Y|` on sorted, duplicate-free slices; 0 when both are
/// empty.
pub fn jaccard<T: Ord>(x: &[T], y: &[T]) -> f64 {
    let common = intersection_size(x, y);
    jaccard_from_counts(x.len(), y.len(), common)
}

fn jaccard_from_counts(x: usize, y: usize, common: usize) -> f64 {
    let union = x + y - common;
    if union == 0 {
        0.0
    } else {
        common as f64 / union as f64
    }
}

fn intersection_size<T: Ord>(x: &[T], y: &[T]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < x.len() && j < y.len() {
        match x[i].cmp(&y[j]) {
            Ordering::Less => i += 1,
            Ordering::Greater => j += 1,
            Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

/// Ids of the second database's signatures in the first database's id
/// space; `None` for signatures the first database does not have.
fn translate_ids(s_a: &SignatureDatabase, s_b: &SignatureDatabase) -> Vec<Option<SigId>> {
    (0..s_b.signature_count() as SigId)
        .into_par_iter()
        .map(|id| s_a.lookup(s_b.signature(id)))
        .collect()
}

fn check_compatible(s_a: &SignatureDatabase, s_b: &SignatureDatabase) -> Result<()> {
    match s_a.settings().describe_difference(s_b.settings()) {
        Some(why) => Err(Error::IncompatibleSignatures(why)),
        None => Ok(()),
    }
}

/// Every pair of records with at least one common attribute signature,
/// found through the inverted indices, sorted by record position.
pub fn gen_candidate_pairs(s_a: &SignatureDatabase, s_b: &SignatureDatabase) -> Vec<CandidatePair> {
    let to_a = translate_ids(s_a, s_b);
    candidates_with(s_a, s_b, &to_a)
}

fn candidates_with(
    s_a: &SignatureDatabase,
    s_b: &SignatureDatabase,
    to_a: &[Option<SigId>],
) -> Vec<CandidatePair> {
    let mut raw: Vec<(u32, u32)> = to_a
        .iter()
        .enumerate()
        .filter_map(|(b_sig, a_sig)| a_sig.map(|a| (a, b_sig as SigId)))
        .flat_map(|(a_sig, b_sig)| {
            let bs = s_b.records_with(b_sig);
            s_a.records_with(a_sig)
                .iter()
                .flat_map(move |&ra| bs.iter().map(move |&rb| (ra, rb)))
        })
        .collect();
    raw.par_sort_unstable();
    let mut out: Vec<CandidatePair> = Vec::new();
    for (a, b) in raw {
        match out.last_mut() {
            Some(last) if last.a == a && last.b == b => last.shared += 1,
            _ => out.push(CandidatePair { a, b, shared: 1 }),
        }
    }
    out
}

/// Unweighted mean of per-feature similarities: Jaccard for signature sets,
/// `1 − |x − y| / max(x, y, 1)` for numeric features.
fn relational_similarity(
    ra: &RelationalSignature,
    rb: &RelationalSignature,
    to_a: &[Option<SigId>],
) -> f64 {
    if ra.values.is_empty() {
        return 0.0;
    }
    let total: f64 = ra
        .values
        .iter()
        .zip(&rb.values)
        .map(|(x, y)| match (x, y) {
            (FeatureValue::Signatures(xs), FeatureValue::Signatures(ys)) => {
                let mut mapped: Vec<SigId> = ys.iter().filter_map(|&s| to_a[s as usize]).collect();
                mapped.sort_unstable();
                let common = intersection_size(xs, &mapped);
                jaccard_from_counts(xs.len(), ys.len(), common)
            }
            (FeatureValue::Numeric(x), FeatureValue::Numeric(y)) => numeric_similarity(*x, *y),
            _ => 0.0,
        })
        .sum();
    total / ra.values.len() as f64
}

pub fn numeric_similarity(x: f64, y: f64) -> f64 {
    1.0 - (x - y).abs() / x.max(y).max(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Stage {
    Attribute,
    Relational,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Attribute => "attribute",
            Stage::Relational => "relational",
        })
    }
}

impl std::str::FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "attribute" => Ok(Stage::Attribute),
            "relational" => Ok(Stage::Relational),
            other => Err(Error::Malformed(format!("unknown stage `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchedPair {
    pub id_a: String,
    pub id_b: String,
    pub similarity: f64,
    pub stage: Stage,
}

/// Classified matches, kept sorted by `(id_a, id_b)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MatchSet {
    pairs: Vec<MatchedPair>,
}

impl MatchSet {
    pub fn new(mut pairs: Vec<MatchedPair>) -> Self {
        pairs.sort_by(|x, y| (&x.id_a, &x.id_b).cmp(&(&y.id_a, &y.id_b)));
        MatchSet { pairs }
    }

    pub fn pairs(&self) -> &[MatchedPair] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn contains(&self, id_a: &str, id_b: &str) -> bool {
        self.get(id_a, id_b).is_some()
    }

    pub fn get(&self, id_a: &str, id_b: &str) -> Option<&MatchedPair> {
        self.pairs
            .binary_search_by(|p| (p.id_a.as_str(), p.id_b.as_str()).cmp(&(id_a, id_b)))
            .ok()
            .map(|i| &self.pairs[i])
    }

    pub fn count_stage(&self, stage: Stage) -> usize {
        self.pairs.iter().filter(|p| p.stage == stage).count()
    }

    /// Same pairs with the two sides swapped.
    pub fn transposed(&self) -> MatchSet {
        MatchSet::new(
            self.pairs
                .iter()
                .map(|p| MatchedPair {
                    id_a: p.id_b.clone(),
                    id_b: p.id_a.clone(),
                    ..p.clone()
                })
                .collect(),
        )
    }

    /// Greedy one-to-one assignment: highest similarity first, ties by
    /// `(id_a, id_b)`.
    pub fn one_to_one(&self) -> MatchSet {
        let mut order: Vec<&MatchedPair> = self.pairs.iter().collect();
        order.sort_by(|x, y| {
            y.similarity
                .total_cmp(&x.similarity)
                .then_with(|| (&x.id_a, &x.id_b).cmp(&(&y.id_a, &y.id_b)))
        });
        let mut used_a = HashSet::new();
        let mut used_b = HashSet::new();
        let kept = order
            .into_iter()
            .filter(|p| {
                if used_a.contains(&p.id_a) || used_b.contains(&p.id_b) {
                    return false;
                }
                used_a.insert(p.id_a.clone());
                used_b.insert(p.id_b.clone());
                true
            })
            .cloned()
            .collect();
        MatchSet::new(kept)
    }

    /// `id_a,id_b,similarity,stage`, sorted by `(id_a, id_b)`.
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let origin = Path::new("matches");
        let err = |source| Error::Csv {
            path: origin.to_path_buf(),
            source,
        };
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["id_a", "id_b", "similarity", "stage"])
            .map_err(err)?;
        for p in &self.pairs {
            w.write_record([
                p.id_a.as_str(),
                p.id_b.as_str(),
                &format!("{:.6}", p.similarity),
                &p.stage.to_string(),
            ])
            .map_err(err)?;
        }
        w.flush().map_err(|source| Error::Io {
            path: origin.to_path_buf(),
            source,
        })
    }

    pub fn read_csv<R: std::io::Read>(reader: R) -> Result<MatchSet> {
        let origin = Path::new("matches");
        let mut rdr = csv::Reader::from_reader(reader);
        let mut pairs = Vec::new();
        for row in rdr.records() {
            let row = row.map_err(|source| Error::Csv {
                path: origin.to_path_buf(),
                source,
            })?;
            if row.len() < 4 {
                return Err(Error::Malformed(format!(
                    "match rows need 4 columns, got {}",
                    row.len()
                )));
            }
            let similarity = row[2]
                .parse()
                .map_err(|_| Error::Malformed(format!("bad similarity `{}`", &row[2])))?;
            pairs.push(MatchedPair {
                id_a: row[0].to_string(),
                id_b: row[1].to_string(),
                similarity,
                stage: row[3].parse()?,
            });
        }
        Ok(MatchSet::new(pairs))
    }
}

/// Similarity threshold, weight and mode used to classify candidates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchParams {
    pub beta: f64,
    pub s_t: f64,
    pub attribute_only: bool,
}

impl From<&Config> for MatchParams {
    fn from(cfg: &Config) -> Self {
        MatchParams {
            beta: cfg.beta,
            s_t: cfg.s_t,
            attribute_only: cfg.attribute_only,
        }
    }
}

/// Candidates of two signature databases, prepared once and classified at
/// any number of thresholds.
pub struct Matcher<'a> {
    s_a: &'a SignatureDatabase,
    s_b: &'a SignatureDatabase,
    to_a: Vec<Option<SigId>>,
    candidates: Vec<CandidatePair>,
}

impl<'a> Matcher<'a> {
    pub fn new(s_a: &'a SignatureDatabase, s_b: &'a SignatureDatabase) -> Result<Self> {
        check_compatible(s_a, s_b)?;
        let to_a = translate_ids(s_a, s_b);
        let candidates = candidates_with(s_a, s_b, &to_a);
        Ok(Matcher {
            s_a,
            s_b,
            to_a,
            candidates,
        })
    }

    pub fn candidates(&self) -> &[CandidatePair] {
        &self.candidates
    }

    pub fn attribute_similarity(&self, pair: &CandidatePair) -> f64 {
        jaccard_from_counts(
            self.s_a.signatures_of(pair.a as usize).len(),
            self.s_b.signatures_of(pair.b as usize).len(),
            pair.shared as usize,
        )
    }

    pub fn relational_similarity(&self, pair: &CandidatePair) -> f64 {
        relational_similarity(
            self.s_a.relational(pair.a as usize),
            self.s_b.relational(pair.b as usize),
            &self.to_a,
        )
    }

    pub fn classify(&self, params: MatchParams) -> MatchSet {
        let pairs = self
            .candidates
            .par_iter()
            .filter_map(|pair| {
                let s_attr = self.attribute_similarity(pair);
                let (similarity, stage) = if s_attr >= params.s_t {
                    (s_attr, Stage::Attribute)
                } else if params.attribute_only {
                    return None;
                } else {
                    let s_rel = self.relational_similarity(pair);
                    let s = params.beta * s_attr + (1.0 - params.beta) * s_rel;
                    if s < params.s_t {
                        return None;
                    }
                    (s, Stage::Relational)
                };
                Some(MatchedPair {
                    id_a: self.s_a.record_id(pair.a as usize).to_string(),
                    id_b: self.s_b.record_id(pair.b as usize).to_string(),
                    similarity,
                    stage,
                })
            })
            .collect();
        MatchSet::new(pairs)
    }
}

/// Classifies every candidate pair of the two databases.
pub fn match_records(
    s_a: &SignatureDatabase,
    s_b: &SignatureDatabase,
    cfg: &Config,
) -> Result<MatchSet> {
    let matches = Matcher::new(s_a, s_b)?.classify(MatchParams::from(cfg));
    Ok(if cfg.one_to_one {
        matches.one_to_one()
    } else {
        matches
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jaccard_examples() {
        assert_eq!(jaccard(&[1, 2], &[1, 2]), 1.0);
        assert_eq!(jaccard(&[1, 2], &[3, 4]), 0.0);
        assert!((jaccard(&["x", "y"], &["y", "z"]) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(jaccard::<u32>(&[], &[]), 0.0);
    }

    #[test]
    fn numeric_similarity_is_bounded() {
        assert_eq!(numeric_similarity(0.0, 0.0), 1.0);
        assert_eq!(numeric_similarity(3.0, 3.0), 1.0);
        assert_eq!(numeric_similarity(0.0, 4.0), 0.0);
        assert_eq!(numeric_similarity(0.2, 0.7), 0.5);
    }

    #[test]
    fn blended_similarity_reaches_threshold() {
        // s_A = 0.5, s_R = 0.9, beta = 0.5 gives exactly 0.7
        let s: f64 = 0.5 * 0.5 + 0.5 * 0.9;
        assert!((s - 0.7).abs() < 1e-12);
    }

    fn pair(a: &str, b: &str, s: f64) -> MatchedPair {
        MatchedPair {
            id_a: a.into(),
            id_b: b.into(),
            similarity: s,
            stage: Stage::Attribute,
        }
    }

    #[test]
    fn one_to_one_is_greedy() {
        let m = MatchSet::new(vec![
            pair("a1", "b1", 0.9),
            pair("a1", "b2", 0.95),
            pair("a2", "b2", 0.8),
            pair("a2", "b1", 0.9),
            pair("a3", "b3", 0.9),
            pair("a4", "b3", 0.9),
        ]);
        let o = m.one_to_one();
        let ids: Vec<(&str, &str)> = o
            .pairs()
            .iter()
            .map(|p| (p.id_a.as_str(), p.id_b.as_str()))
            .collect();
        assert_eq!(ids, vec![("a1", "b2"), ("a2", "b1"), ("a3", "b3")]);
    }

    #[test]
    fn csv_round_trip() {
        let m = MatchSet::new(vec![pair("a2", "b1", 0.5), pair("a1", "b9", 1.0)]);
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("id_a,id_b,similarity,stage\na1,b9,1.000000,attribute\n"));
        let back = MatchSet::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, m);
    }
}
