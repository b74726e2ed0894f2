//! Laplace mechanism with seeded per-(trial, stage) streams, and an
//! empirical likelihood-ratio audit of the ε-DP inequality.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::dataset::{Dataset, DatasetKind, Provenance, QueryResponse};
use crate::error::{HutError, Result};
use crate::exec::{self, ExecMode};
use crate::microagg::{ClusterSensitivity, Partition};
use crate::rng::{self, Stage};

/// Slack multiplier on e^ε tolerated by the statistical audit.
pub const AUDIT_SLACK: f64 = 1.15;

/// Seeded source of Laplace noise for one (trial, stage).
#[derive(Debug, Clone)]
pub struct LaplaceNoiser {
    epsilon: f64,
    rng: ChaCha8Rng,
}

impl LaplaceNoiser {
    pub fn new(epsilon: f64, seed: u64, trial: u64) -> Result<Self> {
        Self::for_stage(epsilon, seed, trial, Stage::Noise)
    }

    pub fn for_stage(epsilon: f64, seed: u64, trial: u64, stage: Stage) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(HutError::Config(format!(
                "epsilon must be positive, got {epsilon}"
            )));
        }
        Ok(LaplaceNoiser {
            epsilon,
            rng: rng::stream(seed, trial, stage),
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Draws from Laplace(0, 1) by inverting the CDF of one uniform draw
    /// `u ∈ (-1/2, 1/2)`: `x = -sign(u)·ln(1 - 2|u|)`.
    pub fn standard(&mut self) -> f64 {
        let v = loop {
            // [0, 1); v = 0 would give u = -1/2 and ln(0)
            let v: f64 = self.rng.random();
            if v > 0.0 {
                break v;
            }
        };
        let u = v - 0.5;
        -u.signum() * (1.0 - 2.0 * u.abs()).ln()
    }

    /// Draws from Laplace(0, scale).
    pub fn laplace_sample(&mut self, scale: f64) -> f64 {
        debug_assert!(scale > 0.0, "Laplace scale must be positive");
        scale * self.standard()
    }

    /// `count` standard draws; record `i` of a response always consumes draw `i`.
    pub fn standard_draws(&mut self, count: usize) -> Vec<f64> {
        (0..count).map(|_| self.standard()).collect()
    }
}

/// Adds Laplace(Δ_c/ε) to every small record of cluster `c` and Laplace(Δ/ε)
/// to every large record. Output is in original record order.
pub fn noise_partition(
    part: &Partition,
    sens: &ClusterSensitivity,
    noiser: &mut LaplaceNoiser,
) -> Result<QueryResponse> {
    if part.assignments.len() != part.small.len() || sens.per_cluster.len() != part.k() {
        return Err(HutError::Contract(
            "partition and sensitivity bounds disagree on the clusters".into(),
        ));
    }
    let n = part.len();
    let scales = sens.record_scales(part, noiser.epsilon());
    let draws = noiser.standard_draws(n);
    let mut values = vec![0.0; n];
    let mut seen = vec![false; n];
    for &(i, v) in part.small.iter().chain(&part.large) {
        if i >= n || std::mem::replace(&mut seen[i], true) {
            return Err(HutError::Contract(format!(
                "record {i} appears twice in the partition"
            )));
        }
        values[i] = v + scales[i] * draws[i];
    }
    Ok(QueryResponse::new(values, Provenance::Noised))
}

/// Bin edges `e_0 < e_1 < ...` defining bins `(-∞, e_0), [e_0, e_1), ..., [e_last, ∞)`.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeBins {
    edges: Vec<f64>,
}

impl OutcomeBins {
    pub fn new(edges: Vec<f64>) -> Result<Self> {
        if edges.iter().any(|e| !e.is_finite()) || edges.windows(2).any(|w| w[0] >= w[1]) {
            return Err(HutError::Contract(
                "bin edges must be finite and strictly increasing".into(),
            ));
        }
        Ok(OutcomeBins { edges })
    }

    /// Edges at the empirical quantiles of `samples`, giving `bins` roughly equiprobable bins.
    pub fn from_quantiles(samples: &[f64], bins: usize) -> Result<Self> {
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mut edges: Vec<f64> = (1..bins).map(|b| sorted[b * sorted.len() / bins]).collect();
        edges.dedup();
        Self::new(edges)
    }

    pub fn len(&self) -> usize {
        self.edges.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn bin(&self, x: f64) -> usize {
        self.edges.partition_point(|&e| e <= x)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditReport {
    /// Largest `(c_a + 1)/(c_b + 1)` over bins and both orderings of the pair.
    pub max_ratio: f64,
    pub worst_bin: usize,
    pub counts_x1: Vec<u64>,
    pub counts_x2: Vec<u64>,
}

/// Datasets differing in at most one record's value; counts may move by at most 1.
pub fn check_neighbors(x1: &Dataset, x2: &Dataset) -> Result<()> {
    if x1.kind() != x2.kind() || x1.len() != x2.len() {
        return Err(HutError::Contract(
            "neighboring datasets must share kind and length".into(),
        ));
    }
    let mut differing = 0;
    for (a, b) in x1.records().iter().zip(x2.records()) {
        if a.id != b.id {
            return Err(HutError::Contract(format!(
                "record ids differ: `{}` vs `{}`",
                a.id, b.id
            )));
        }
        if a.value != b.value {
            differing += 1;
            if x1.kind() == DatasetKind::CountingHistogram && (a.value - b.value).abs() > 1.0 {
                return Err(HutError::Contract(format!(
                    "bin `{}` changes by more than one count",
                    a.id
                )));
            }
        }
    }
    if differing > 1 {
        return Err(HutError::Contract(format!(
            "datasets differ in {differing} records, not at most one"
        )));
    }
    Ok(())
}

/// Monte Carlo audit of `Pr[M(X1) ∈ S] ≤ e^ε · Pr[M(X2) ∈ S]` over the given bins.
///
/// `mech(ds, sample)` must be a deterministic function of its sample index;
/// X1 uses samples `0..samples` and X2 uses `samples..2·samples` so the two
/// histograms are independent.
pub fn dp_ratio_audit<F>(
    mech: F,
    x1: &Dataset,
    x2: &Dataset,
    bins: &OutcomeBins,
    samples: usize,
    mode: ExecMode,
) -> Result<AuditReport>
where
    F: Fn(&Dataset, u64) -> Result<f64> + Sync + Send,
{
    check_neighbors(x1, x2)?;
    if samples == 0 {
        return Err(HutError::Config("audit needs at least one sample".into()));
    }
    let histogram = |ds: &Dataset, offset: u64| -> Result<Vec<u64>> {
        let outcomes = exec::map_indices(mode, samples, |s| mech(ds, offset + s as u64));
        let mut counts = vec![0u64; bins.len()];
        for o in outcomes {
            counts[bins.bin(o?)] += 1;
        }
        Ok(counts)
    };
    let counts_x1 = histogram(x1, 0)?;
    let counts_x2 = histogram(x2, samples as u64)?;
    let (worst_bin, max_ratio) = counts_x1
        .iter()
        .zip(&counts_x2)
        .map(|(&a, &b)| {
            let (a, b) = (a as f64 + 1.0, b as f64 + 1.0);
            (a / b).max(b / a)
        })
        .enumerate()
        .fold(
            (0, 0.0),
            |best, (i, r)| if r > best.1 { (i, r) } else { best },
        );
    Ok(AuditReport {
        max_ratio,
        worst_bin,
        counts_x1,
        counts_x2,
    })
}

/// Largest ratio the audit accepts at privacy scale ε.
pub fn audit_bound(epsilon: f64) -> f64 {
    epsilon.exp() * AUDIT_SLACK
}
