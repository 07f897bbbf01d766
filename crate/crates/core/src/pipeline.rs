//! The three linkage steps run end to end, with per-step timings.

use crate::config::Config;
use crate::error::{Error, Result};
use crate::evaluate::RuntimeReport;
use crate::matcher::{match_records, MatchSet};
use crate::model::{AttributeCombination, Combination, Database};
use crate::select::{select_attribute_combinations, Selection};
use crate::signatures::{build_signature_database, SignatureDatabase};

pub const STEP_SELECT: &str = "select";
pub const STEP_SIGNATURES: &str = "signatures";
pub const STEP_MATCH: &str = "match";

/// Where the attribute combinations come from.
#[derive(Debug, Clone)]
pub enum CombinationSource {
    /// Run selection, or use the config's fixed combinations if it has any.
    Select,
    /// Reuse combinations from an earlier selection.
    Cached(Vec<AttributeCombination>),
}

#[derive(Debug, Clone)]
pub struct LinkOutcome {
    pub combinations: Vec<AttributeCombination>,
    /// Present when selection actually ran.
    pub selection: Option<Selection>,
    pub signatures_a: SignatureDatabase,
    pub signatures_b: SignatureDatabase,
    pub matches: MatchSet,
    pub runtime: RuntimeReport,
}

pub fn link(
    db_a: &Database,
    db_b: &Database,
    cfg: &Config,
    source: CombinationSource,
) -> Result<LinkOutcome> {
    cfg.validate()?;
    if db_a.schema() != db_b.schema() {
        return Err(Error::SchemaMismatch(format!(
            "{} and {} have different attributes",
            db_a.name(),
            db_b.name()
        )));
    }
    let mut runtime = RuntimeReport::default();
    let fixed = cfg.fixed_combinations(db_a.schema())?;
    let (combinations, selection) = match source {
        CombinationSource::Cached(c) => {
            runtime.record_cached(STEP_SELECT);
            (c, None)
        }
        CombinationSource::Select if !fixed.is_empty() => {
            runtime.record_cached(STEP_SELECT);
            (
                fixed
                    .into_iter()
                    .map(AttributeCombination::unscored)
                    .collect(),
                None,
            )
        }
        CombinationSource::Select => {
            let sel = runtime.time(STEP_SELECT, || {
                select_attribute_combinations(db_a, db_b, cfg)
            })?;
            (sel.combinations.clone(), Some(sel))
        }
    };
    let list: Vec<Combination> = combinations.iter().map(|c| c.combination.clone()).collect();
    let (signatures_a, signatures_b) = runtime.time(STEP_SIGNATURES, || {
        rayon::join(
            || build_signature_database(db_a, &list, cfg),
            || build_signature_database(db_b, &list, cfg),
        )
    });
    let (signatures_a, signatures_b) = (signatures_a?, signatures_b?);
    let matches = runtime.time(STEP_MATCH, || {
        match_records(&signatures_a, &signatures_b, cfg)
    })?;
    Ok(LinkOutcome {
        combinations,
        selection,
        signatures_a,
        signatures_b,
        matches,
        runtime,
    })
}
