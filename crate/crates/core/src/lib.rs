//! Locality-based iterative search-space shrinkage (LISSNAS) for neural
//! architecture search, together with the measurement suite used to study
//! it: random-walk autocorrelation, average absolute accuracy difference,
//! shrink quality indices, error distributions, and diversity statistics.
//!
//! The crate is organised bottom-up:
//!
//! * [`arch`] — architecture encodings (cells and blocks), canonical keys,
//!   edit distances, and mutation moves;
//! * [`space`] — search-space specs, uniform sampling, cardinality, and
//!   snapshot containers with their CSV form;
//! * [`benchmark`] — accuracy/FLOP/param oracles, tabular or synthetic;
//! * [`predictor`] — ridge regression on one-hot embeddings;
//! * [`metrics`] — locality, shrink-quality, and diversity measurements;
//! * [`shrink`] — the LISSNAS loop and its baselines.
//!
//! Everything is deterministic given a seed: random work is fanned out over
//! counter-derived substreams (see [`rng`]) so results are byte-identical
//! across thread counts.

pub mod arch;
pub mod benchmark;
pub mod brute;
pub mod error;
pub mod metrics;
pub mod predictor;
pub mod rng;
pub mod shrink;
pub mod space;

pub use arch::{
    canonical_key, edit_distance, generate_neighbor, total_edit_distance, Architecture,
    BlockArchitecture, CanonicalKey, CellArchitecture, OpCode,
};
pub use benchmark::{
    default_synthetic_space, BenchmarkOracle, BenchmarkRecord, SyntheticOracle, SyntheticParams,
    TabularOracle,
};
pub use error::{Error, Result};
pub use metrics::{
    aad, error_edf, estimate_p_good, ks_two_sample, max_cosine_distance, prob_at_least_k,
    resource_histogram, rwa, shrink_index, Edf, Histogram, ResourceAxis, RwaCurve,
    ShrinkIndexReport,
};
pub use predictor::{embed, embedding_len, fit_ridge, fit_ridge_weighted, Predictor, RidgeModel};
pub use shrink::{lissnas, naive_topx, refill_without_locality, ShrinkConfig, ShrinkTrace};
pub use space::{
    format_architecture, parse_architecture, raw_cardinality, sample_uniform, snapshot_from,
    BlockSpaceSpec, Cardinality, CellSpaceSpec, SpaceSnapshot, SpaceSpec,
};
