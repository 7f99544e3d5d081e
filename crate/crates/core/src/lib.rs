//! Clustering tabular datasets with the cyclic structure of reversible
//! binary cellular automata.
//!
//! The pipeline: encode rows into fixed-length binary target
//! configurations ([`encoding`]), split them vertically into CA-sized
//! pieces and group each split by the cycles of a reversible rule, merge
//! the per-split cycle ranks through Gray codes, apply a second rule, and
//! cut the final cycles at their largest median gaps ([`clustering`]).
//! Rule quality is screened by information-propagation and cycle-XOR
//! criteria over a vendored candidate catalog ([`rules`]), and results
//! are scored with standard validity indices ([`metrics`]).

pub mod ca;
pub mod clustering;
pub mod dataset;
pub mod encoding;
pub mod metrics;
pub mod rules;

pub use ca::{
    decompose_cycles, is_reversible, orbit_membership, Configuration, CyclePartition, Rule,
};
pub use clustering::{cluster, ClusterParams, ClusteringResult};
pub use dataset::{load_dataset, AttributeKind, AttributeSpec, Dataset};
pub use encoding::{encode_dataset, fit_and_encode, fit_plan, EncodedDataset, EncodingPlan};
pub use metrics::{calinski_harabasz, davies_bouldin, feature_matrix, silhouette, MetricOutcome};
pub use rules::{
    candidate_rules, passes_criterion1, passes_criterion2, passes_criterion3, RuleCatalog,
};
