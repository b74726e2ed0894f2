//! Differential privacy for unbalanced query batches.
//!
//! The protection pipeline ([`pipeline::hut_protect`]) runs in three steps:
//!
//! 1. **Micro-aggregation** ([`microagg`]): values at or below a rank
//!    threshold are grouped by 1-D k-means so each group gets its own
//!    sensitivity bound; the remaining values form one batch bounded by the
//!    dataset maximum.
//! 2. **Laplace noise** ([`mechanism`]): every record receives Laplace noise
//!    with scale Δ/ε for its group.
//! 3. **Order constraint** ([`order`]): noised answers are projected back onto
//!    the pre-noise sort order by least-squares isotonic regression.
//!
//! [`baselines`] holds the fixed-size micro-aggregation and K-aggregation
//! mechanisms used for comparison, [`datagen`] synthesises speed datasets,
//! and [`harness`] runs the parameter sweeps and writes reports.

pub mod baselines;
pub mod datagen;
pub mod dataset;
pub mod error;
pub mod exec;
pub mod harness;
pub mod mechanism;
pub mod microagg;
pub mod order;
pub mod pipeline;
pub mod rng;

pub use dataset::{Dataset, DatasetKind, Params, Permutation, Provenance, QueryResponse, Record};
pub use error::{HutError, Result};
pub use exec::ExecMode;
pub use pipeline::{hut_protect, protect_counting, Method, ProtectedDataset};
