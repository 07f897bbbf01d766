//! Per-database signature generation.
//!
//! Every record gets one attribute signature per combination it is complete
//! for. Signatures shared by too many records are dropped using
//! `p = 1 / (1 + λⁿ μ)`, where `n` is the number of records carrying the
//! signature, counted once before any removal. Each record then gets a
//! relational signature describing its neighbourhood in the record graph.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::config::Config;
use crate::error::{Error, Result};
use crate::graph::{build_record_graph, RecordGraph};
use crate::model::{Atom, AttributeSignature, Combination, Database, Record};

/// Index into a [`SignatureDatabase`]'s signature table.
pub type SigId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FeatureId {
    /// Union of the neighbours' surviving attribute signatures.
    NeighbourSignatures,
    Degree,
    EgonetDensity,
}

impl fmt::Display for FeatureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FeatureId::NeighbourSignatures => "neighbour_signatures",
            FeatureId::Degree => "degree",
            FeatureId::EgonetDensity => "egonet_density",
        })
    }
}

impl FromStr for FeatureId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "neighbour_signatures" | "neighbor_signatures" => Ok(FeatureId::NeighbourSignatures),
            "degree" => Ok(FeatureId::Degree),
            "egonet_density" => Ok(FeatureId::EgonetDensity),
            other => Err(Error::UnknownFeature(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FeatureValue {
    /// Sorted, duplicate-free signature ids.
    Signatures(Vec<SigId>),
    Numeric(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelationalSignature {
    pub values: Vec<FeatureValue>,
}

/// Probability that a value combination seen in `n` records is still a
/// signature.
pub fn signature_probability(n: usize, lambda: f64, mu: f64) -> Result<f64> {
    if n < 1 {
        return Err(Error::InvalidOccurrence(n));
    }
    if !(lambda > 1.0 && mu > 0.0 && mu < 1.0) {
        return Err(Error::ConfigRange(format!(
            "lambda = {lambda}, mu = {mu} violate 0 < mu < 1 < lambda"
        )));
    }
    let exponent = i32::try_from(n).unwrap_or(i32::MAX);
    Ok(1.0 / (1.0 + lambda.powi(exponent) * mu))
}

/// Tokens of `record` under `combination`, or `None` when a member value is
/// missing or its transform does not apply.
pub fn gen_attribute_signature(
    record: &Record,
    combination: &Combination,
    index: u32,
) -> Option<AttributeSignature> {
    let tokens = combination
        .members()
        .iter()
        .map(|a| a.value(record).map(String::into_boxed_str))
        .collect::<Option<Vec<_>>>()?;
    Some(AttributeSignature {
        combination: index,
        tokens: tokens.into_boxed_slice(),
    })
}

/// Relational signature of vertex `v` given every record's surviving
/// attribute signatures.
pub fn gen_relational_signature(
    v: usize,
    graph: &RecordGraph,
    signatures: &[Vec<SigId>],
    features: &[FeatureId],
) -> Result<RelationalSignature> {
    let neighbours = graph.neighbours(v)?;
    let values = features
        .iter()
        .map(|f| {
            Ok(match f {
                FeatureId::NeighbourSignatures => {
                    let mut union: Vec<SigId> = neighbours
                        .iter()
                        .flat_map(|&n| signatures[n as usize].iter().copied())
                        .collect();
                    union.sort_unstable();
                    union.dedup();
                    FeatureValue::Signatures(union)
                }
                FeatureId::Degree => FeatureValue::Numeric(neighbours.len() as f64),
                FeatureId::EgonetDensity => FeatureValue::Numeric(graph.egonet_density(v)?),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RelationalSignature { values })
}

/// Everything that must agree between two signature databases before their
/// signatures can be compared.
#[derive(Debug, Clone, PartialEq)]
pub struct SignatureSettings {
    pub schema: Vec<String>,
    pub combinations: Vec<Combination>,
    pub features: Vec<FeatureId>,
    pub p_t: f64,
    pub lambda: f64,
    pub mu: f64,
}

impl SignatureSettings {
    pub fn describe_difference(&self, other: &SignatureSettings) -> Option<String> {
        if self.schema != other.schema {
            Some("schemas differ".to_string())
        } else if self.combinations != other.combinations {
            Some("attribute combinations differ".to_string())
        } else if self.features != other.features {
            Some("relational features differ".to_string())
        } else if (self.p_t, self.lambda, self.mu) != (other.p_t, other.lambda, other.mu) {
            Some("probability filter parameters differ".to_string())
        } else {
            None
        }
    }
}

#[derive(Debug, Clone)]
pub struct SignatureDatabase {
    name: String,
    record_ids: Vec<String>,
    signatures: Vec<AttributeSignature>,
    occurrences: Vec<u32>,
    lookup: HashMap<AttributeSignature, SigId>,
    per_record: Vec<Vec<SigId>>,
    inverted: Vec<Vec<u32>>,
    relational: Vec<RelationalSignature>,
    graph: RecordGraph,
    settings: SignatureSettings,
}

impl SignatureDatabase {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn settings(&self) -> &SignatureSettings {
        &self.settings
    }

    pub fn record_count(&self) -> usize {
        self.record_ids.len()
    }

    pub fn record_id(&self, record: usize) -> &str {
        &self.record_ids[record]
    }

    /// Surviving signature ids of a record, sorted.
    pub fn signatures_of(&self, record: usize) -> &[SigId] {
        &self.per_record[record]
    }

    pub fn signature(&self, id: SigId) -> &AttributeSignature {
        &self.signatures[id as usize]
    }

    pub fn signature_count(&self) -> usize {
        self.signatures.len()
    }

    /// Number of records that generated the signature, counted before
    /// filtering.
    pub fn occurrences(&self, id: SigId) -> u32 {
        self.occurrences[id as usize]
    }

    pub fn lookup(&self, signature: &AttributeSignature) -> Option<SigId> {
        self.lookup.get(signature).copied()
    }

    /// Records carrying a signature, ascending.
    pub fn records_with(&self, id: SigId) -> &[u32] {
        &self.inverted[id as usize]
    }

    pub fn relational(&self, record: usize) -> &RelationalSignature {
        &self.relational[record]
    }

    pub fn graph(&self) -> &RecordGraph {
        &self.graph
    }

    /// CSV dump: `record_id,signature,combination`, one row per surviving
    /// signature of each record.
    pub fn write_dump<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let origin = std::path::Path::new("signature dump");
        let err = |source| Error::Csv {
            path: origin.to_path_buf(),
            source,
        };
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["record_id", "signature", "combination"])
            .map_err(err)?;
        for (i, sigs) in self.per_record.iter().enumerate() {
            for &s in sigs {
                let sig = &self.signatures[s as usize];
                let combination = &self.settings.combinations[sig.combination as usize];
                w.write_record([
                    self.record_ids[i].as_str(),
                    &sig.display(),
                    &combination.label(&self.settings.schema),
                ])
                .map_err(err)?;
            }
        }
        w.flush().map_err(|source| Error::Io {
            path: origin.to_path_buf(),
            source,
        })
    }
}

pub fn build_signature_database(
    db: &Database,
    combinations: &[Combination],
    cfg: &Config,
) -> Result<SignatureDatabase> {
    for c in combinations {
        c.check_schema(db.schema())?;
    }
    let relationships: Vec<Vec<Atom>> = cfg.relationship_atoms(db.schema())?;

    let generated: Vec<Vec<AttributeSignature>> = db
        .records()
        .par_iter()
        .map(|r| {
            combinations
                .iter()
                .enumerate()
                .filter_map(|(i, c)| gen_attribute_signature(r, c, i as u32))
                .collect()
        })
        .collect();

    // occurrence counts, ids in order of first appearance
    let mut lookup: HashMap<AttributeSignature, SigId> = HashMap::new();
    let mut all: Vec<AttributeSignature> = Vec::new();
    let mut counts: Vec<u32> = Vec::new();
    let mut per_record_all: Vec<Vec<SigId>> = Vec::with_capacity(generated.len());
    for sigs in generated {
        let mut ids = Vec::with_capacity(sigs.len());
        for sig in sigs {
            let id = match lookup.get(&sig) {
                Some(&id) => id,
                None => {
                    let id = all.len() as SigId;
                    lookup.insert(sig.clone(), id);
                    all.push(sig);
                    counts.push(0);
                    id
                }
            };
            counts[id as usize] += 1;
            ids.push(id);
        }
        per_record_all.push(ids);
    }
    drop(lookup);

    let mut remap: Vec<Option<SigId>> = Vec::with_capacity(all.len());
    let mut signatures = Vec::new();
    let mut occurrences = Vec::new();
    let mut lookup = HashMap::new();
    for (sig, &n) in all.into_iter().zip(&counts) {
        if signature_probability(n as usize, cfg.lambda, cfg.mu)? >= cfg.p_t {
            let id = signatures.len() as SigId;
            lookup.insert(sig.clone(), id);
            signatures.push(sig);
            occurrences.push(n);
            remap.push(Some(id));
        } else {
            remap.push(None);
        }
    }
    let per_record: Vec<Vec<SigId>> = per_record_all
        .into_iter()
        .map(|ids| {
            let mut kept: Vec<SigId> = ids
                .into_iter()
                .filter_map(|id| remap[id as usize])
                .collect();
            kept.sort_unstable();
            kept
        })
        .collect();
    let mut inverted = vec![Vec::new(); signatures.len()];
    for (r, sigs) in per_record.iter().enumerate() {
        for &s in sigs {
            inverted[s as usize].push(r as u32);
        }
    }

    let graph = build_record_graph(db, &relationships)?;
    let relational = (0..db.len())
        .into_par_iter()
        .map(|v| gen_relational_signature(v, &graph, &per_record, &cfg.features))
        .collect::<Result<Vec<_>>>()?;

    Ok(SignatureDatabase {
        name: db.name().to_string(),
        record_ids: db.records().iter().map(|r| r.id().to_string()).collect(),
        signatures,
        occurrences,
        lookup,
        per_record,
        inverted,
        relational,
        graph,
        settings: SignatureSettings {
            schema: db.schema().to_vec(),
            combinations: combinations.to_vec(),
            features: cfg.features.clone(),
            p_t: cfg.p_t,
            lambda: cfg.lambda,
            mu: cfg.mu,
        },
    })
}
