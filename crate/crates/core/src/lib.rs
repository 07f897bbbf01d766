//! Record linkage for databases with missing, erroneous and variant
//! quasi-identifiers.
//!
//! Linkage runs in three steps:
//!
//! 1. [`select`] searches attribute combinations level by level and keeps
//!    the most complete and distinctive ones.
//! 2. [`signatures`] turns each record into attribute signatures (one per
//!    combination), filters signatures that are too common, and adds a
//!    relational signature built from the record's neighbours in a
//!    [`graph::RecordGraph`].
//! 3. [`matcher`] pairs records sharing a signature and classifies them by
//!    attribute similarity, falling back to relational similarity.
//!
//! [`synth`] generates test data and [`evaluate`] scores results.

pub mod config;
pub mod error;
pub mod evaluate;
pub mod graph;
pub mod ingest;
pub mod matcher;
pub mod model;
pub mod pipeline;
pub mod select;
pub mod signatures;
pub mod synth;
pub mod transform;

pub use config::{Config, ScoreScope};
pub use error::{Error, Result};
pub use evaluate::{precision_recall, threshold_sweep, Metrics, RuntimeReport};
pub use ingest::{load_database, load_ground_truth, CsvLayout, GroundTruth};
pub use matcher::{gen_candidate_pairs, jaccard, match_records, MatchSet, MatchedPair, Stage};
pub use model::{
    normalize_value, Atom, AtomSpec, AttributeCombination, AttributeSignature, Combination,
    Database, Record,
};
pub use pipeline::{link, CombinationSource, LinkOutcome};
pub use select::select_attribute_combinations;
pub use signatures::{
    build_signature_database, signature_probability, FeatureId, SignatureDatabase,
};
pub use transform::Transform;
