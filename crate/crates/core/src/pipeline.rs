//! End-to-end HUT protection: sort, threshold split, k-means, per-cluster
//! bounds, Laplace noise, order constraint.

use std::fmt;
use std::str::FromStr;

use crate::baselines::{fixed_size_pipeline, k_aggregation_pipeline};
use crate::dataset::{Dataset, DatasetKind, Params, Permutation, Provenance, QueryResponse};
use crate::error::{HutError, Result};
use crate::mechanism::{noise_partition, LaplaceNoiser};
use crate::microagg::{sensitivity_bounds, threshold_split, ClusterSensitivity, Partition};
use crate::order::apply_order_constraint;

/// Which data a pipeline stage read.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StageRecord {
    pub stage: &'static str,
    pub reads: Provenance,
    pub writes: Provenance,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtectedDataset {
    pub noised: QueryResponse,
    pub post_processed: QueryResponse,
    pub partition: Partition,
    pub sensitivity: ClusterSensitivity,
    /// Pre-noise sort order used by the order constraint.
    pub permutation: Permutation,
    pub lineage: Vec<StageRecord>,
}

impl ProtectedDataset {
    /// True when no stage after noising touched raw values.
    pub fn raw_isolated_after_noise(&self) -> bool {
        self.lineage
            .iter()
            .skip_while(|s| s.writes != Provenance::Noised)
            .skip(1)
            .all(|s| s.reads != Provenance::Raw)
    }
}

pub fn hut_protect(ds: &Dataset, params: &Params, trial: u64) -> Result<ProtectedDataset> {
    params.validate()?;
    let raw = |stage| StageRecord {
        stage,
        reads: Provenance::Raw,
        writes: Provenance::Raw,
    };
    let mut lineage = Vec::with_capacity(6);

    let permutation = Permutation::sorting(&ds.values());
    lineage.push(raw("sort"));
    let split = threshold_split(ds, params.p)?;
    lineage.push(raw("threshold_split"));
    let partition = split.cluster(params.k, params.seed)?;
    lineage.push(raw("kmeans"));
    let sensitivity = sensitivity_bounds(&partition)?;
    lineage.push(raw("sensitivity"));

    let mut noiser = LaplaceNoiser::new(params.epsilon, params.seed, trial)?;
    let noised = noise_partition(&partition, &sensitivity, &mut noiser)?;
    lineage.push(StageRecord {
        stage: "laplace",
        reads: Provenance::Raw,
        writes: Provenance::Noised,
    });

    let post_processed = apply_order_constraint(&noised, &permutation)?;
    lineage.push(StageRecord {
        stage: "order_constraint",
        reads: Provenance::Noised,
        writes: Provenance::PostProcessed,
    });

    Ok(ProtectedDataset {
        noised,
        post_processed,
        partition,
        sensitivity,
        permutation,
        lineage,
    })
}

/// HUT on a histogram: every bound is 1, clustering runs on the bin counts.
pub fn protect_counting(ds: &Dataset, params: &Params, trial: u64) -> Result<ProtectedDataset> {
    if ds.kind() != DatasetKind::CountingHistogram {
        return Err(HutError::Contract(
            "counting protection needs a histogram dataset".into(),
        ));
    }
    hut_protect(ds, params, trial)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Hut,
    FixedSize,
    KAggregation,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Hut, Method::FixedSize, Method::KAggregation];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Hut => "hut",
            Method::FixedSize => "fixed_size",
            Method::KAggregation => "k_aggregation",
        }
    }

    /// Final released answers of this method for one trial.
    pub fn protect(self, ds: &Dataset, params: &Params, trial: u64) -> Result<QueryResponse> {
        match self {
            Method::Hut => hut_protect(ds, params, trial).map(|p| p.post_processed),
            Method::FixedSize => fixed_size_pipeline(ds, params, trial),
            Method::KAggregation => k_aggregation_pipeline(ds, params, trial),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = HutError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "hut" => Ok(Method::Hut),
            "fixed_size" | "fixedsize" | "microaggregation" => Ok(Method::FixedSize),
            "k_aggregation" | "kaggregation" => Ok(Method::KAggregation),
            other => Err(HutError::Config(format!("unknown method `{other}`"))),
        }
    }
}
