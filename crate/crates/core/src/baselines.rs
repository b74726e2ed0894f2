//! Comparison mechanisms: fixed-size micro-aggregation and K-aggregation.
//!
//! Both take the same (ε, k, p) as the HUT pipeline and draw noise from the
//! same per-trial stream, with record `i` consuming standard draw `i`, so a
//! sweep compares methods under common random numbers. Neither applies the
//! order constraint.

use crate::dataset::{Dataset, DatasetKind, Params, Provenance, QueryResponse};
use crate::error::Result;
use crate::mechanism::{noise_partition, LaplaceNoiser};
use crate::microagg::{sensitivity_bounds, threshold_split, Partition, MIN_SENSITIVITY};

/// Consecutive blocks of the sorted small batch, all of size `block_size`
/// except possibly the last.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedSizeClustering {
    pub block_size: usize,
    /// `start..end` ranges over the sorted small batch.
    pub blocks: Vec<std::ops::Range<usize>>,
}

impl FixedSizeClustering {
    /// Blocks of `ceil(n / k)` items.
    pub fn new(n: usize, k: usize) -> Self {
        let block_size = n.div_ceil(k.max(1)).max(1);
        let blocks = (0..n)
            .step_by(block_size)
            .map(|s| s..(s + block_size).min(n))
            .collect();
        FixedSizeClustering { block_size, blocks }
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.len()).collect()
    }

    /// Turns a threshold split into a clustered partition using these blocks.
    pub fn apply(&self, mut part: Partition) -> Partition {
        part.assignments = vec![0; part.small.len()];
        part.centroids = Vec::with_capacity(self.blocks.len());
        for (b, range) in self.blocks.iter().enumerate() {
            let members = &part.small[range.clone()];
            part.centroids
                .push(members.iter().map(|&(_, v)| v).sum::<f64>() / members.len() as f64);
            for a in &mut part.assignments[range.clone()] {
                *a = b;
            }
        }
        part
    }
}

pub fn fixed_size_pipeline(ds: &Dataset, params: &Params, trial: u64) -> Result<QueryResponse> {
    params.validate()?;
    let split = threshold_split(ds, params.p)?;
    let part = FixedSizeClustering::new(split.small.len(), params.k).apply(split);
    let sens = sensitivity_bounds(&part)?;
    let mut noiser = LaplaceNoiser::new(params.epsilon, params.seed, trial)?;
    noise_partition(&part, &sens, &mut noiser)
}

/// Runs of ascending small values closed as soon as their sum exceeds `sum_threshold`.
#[derive(Debug, Clone, PartialEq)]
pub struct KAggregation {
    pub sum_threshold: f64,
    /// `(record index, value)` members per group, in scan order.
    pub groups: Vec<Vec<(usize, f64)>>,
}

impl KAggregation {
    /// Scans `items` (ascending by value) and closes a group once its sum is strictly above the threshold.
    pub fn scan(items: &[(usize, f64)], sum_threshold: f64) -> Self {
        let mut groups = Vec::new();
        let mut current = Vec::new();
        let mut sum = 0.0;
        for &item in items {
            current.push(item);
            sum += item.1;
            if sum > sum_threshold {
                groups.push(std::mem::take(&mut current));
                sum = 0.0;
            }
        }
        if !current.is_empty() {
            groups.push(current);
        }
        KAggregation {
            sum_threshold,
            groups,
        }
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.groups.iter().map(Vec::len).collect()
    }
}

/// Each small-value group is released as one noisy sum (sensitivity: the
/// group's largest member, or 1 for counts) and every member reports the
/// noisy sum divided by the group size. Large values are noised one by one.
pub fn k_aggregation_pipeline(ds: &Dataset, params: &Params, trial: u64) -> Result<QueryResponse> {
    params.validate()?;
    let split = threshold_split(ds, params.p)?;
    let agg = KAggregation::scan(&split.small, split.threshold_value);
    let counting = ds.kind() == DatasetKind::CountingHistogram;
    let eps = params.epsilon;
    let mut noiser = LaplaceNoiser::new(eps, params.seed, trial)?;
    let draws = noiser.standard_draws(ds.len());

    let mut values = vec![0.0; ds.len()];
    for group in &agg.groups {
        let sum: f64 = group.iter().map(|&(_, v)| v).sum();
        let bound = if counting {
            1.0
        } else {
            group
                .iter()
                .map(|&(_, v)| v)
                .fold(MIN_SENSITIVITY, f64::max)
        };
        let noisy = sum + bound / eps * draws[group[0].0];
        let share = noisy / group.len() as f64;
        for &(i, _) in group {
            values[i] = share;
        }
    }
    let global = if counting {
        1.0
    } else {
        split.max_value.max(MIN_SENSITIVITY)
    };
    for &(i, v) in &split.large {
        values[i] = v + global / eps * draws[i];
    }
    Ok(QueryResponse::new(values, Provenance::Noised))
}
