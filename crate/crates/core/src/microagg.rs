//! Threshold split and k-means micro-aggregation of the small-value batch.
//!
//! Values at or below the nearest-rank `p`-quantile form the to-be-clustered
//! batch; the rest form a single not-clustered batch. The small batch is
//! grouped by 1-D k-means so that each cluster can be noised with a bound
//! derived from its own values instead of the dataset-wide maximum. Values
//! are never replaced by centroids.

use rand::Rng;

use crate::dataset::{Dataset, DatasetKind, Permutation};
use crate::error::{HutError, Result};
use crate::rng::{self, Stage};

pub const KMEANS_RESTARTS: usize = 10;
pub const KMEANS_MAX_ITER: usize = 100;
pub const KMEANS_TOL: f64 = 1e-9;

/// Lower bound applied to per-cluster sensitivities so the Laplace scale stays positive
/// when a cluster holds only zeros.
pub const MIN_SENSITIVITY: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    pub kind: DatasetKind,
    /// `(record index, value)` at or below the threshold, ascending by value.
    pub small: Vec<(usize, f64)>,
    /// `(record index, value)` above the threshold, ascending by value.
    pub large: Vec<(usize, f64)>,
    pub threshold_value: f64,
    /// Dataset-wide maximum value.
    pub max_value: f64,
    /// Cluster id per entry of `small`; empty until [`Partition::cluster`] runs.
    pub assignments: Vec<usize>,
    /// Cluster means, nondecreasing in cluster id.
    pub centroids: Vec<f64>,
}

impl Partition {
    pub fn len(&self) -> usize {
        self.small.len() + self.large.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_clustered(&self) -> bool {
        !self.centroids.is_empty()
    }

    pub fn k(&self) -> usize {
        self.centroids.len()
    }

    pub fn small_values(&self) -> Vec<f64> {
        self.small.iter().map(|&(_, v)| v).collect()
    }

    /// Runs [`kmeans_1d`] on the small batch and records the result.
    pub fn cluster(mut self, k: usize, seed: u64) -> Result<Self> {
        let fit = kmeans_1d(&self.small_values(), k, seed)?;
        self.assignments = fit.assignments;
        self.centroids = fit.centroids;
        Ok(self)
    }

    /// Members of cluster `c` as `(record index, value)`.
    pub fn cluster_members(&self, c: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.small
            .iter()
            .zip(&self.assignments)
            .filter(move |(_, &a)| a == c)
            .map(|(&m, _)| m)
    }
}

/// Nearest-rank index (1-based) of the `p`-quantile among `n` values.
fn nearest_rank(p: f64, n: usize) -> usize {
    let x = p * n as f64;
    // p·n that is an integer up to rounding must not be pushed to the next rank
    let r = if (x - x.round()).abs() < 1e-9 {
        x.round()
    } else {
        x.ceil()
    };
    (r as usize).min(n)
}

pub fn threshold_split(ds: &Dataset, p: f64) -> Result<Partition> {
    if !(p > 0.0 && p < 1.0) {
        return Err(HutError::Config(format!(
            "threshold fraction p must lie in (0, 1), got {p}"
        )));
    }
    let values = ds.values();
    let order = Permutation::sorting(&values);
    let rank = nearest_rank(p, values.len());
    if rank == 0 {
        return Err(HutError::Config(format!(
            "p = {p} selects no records out of {}",
            values.len()
        )));
    }
    let threshold_value = values[order.as_slice()[rank - 1]];
    let (small, large) = order
        .as_slice()
        .iter()
        .map(|&i| (i, values[i]))
        .partition(|&(_, v)| v <= threshold_value);
    Ok(Partition {
        kind: ds.kind(),
        small,
        large,
        threshold_value,
        max_value: ds.max_value(),
        assignments: Vec::new(),
        centroids: Vec::new(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansFit {
    /// Cluster id per input value, in input order.
    pub assignments: Vec<usize>,
    /// Nondecreasing cluster means.
    pub centroids: Vec<f64>,
    /// Within-cluster sum of squares.
    pub wcss: f64,
}

/// Seeded 1-D k-means: k-means++ initialisation, Lloyd iterations, best of
/// [`KMEANS_RESTARTS`] restarts by WCSS (ties go to the lowest restart).
/// Clusters come back as contiguous runs of the sorted values, labelled in
/// ascending centroid order.
pub fn kmeans_1d(values: &[f64], k: usize, seed: u64) -> Result<KMeansFit> {
    let restarts: Vec<KMeansFit> = (0..KMEANS_RESTARTS)
        .map(|r| kmeans_single(values, k, seed, r))
        .collect::<Result<_>>()?;
    Ok(restarts
        .into_iter()
        .reduce(|best, next| if next.wcss < best.wcss { next } else { best })
        .expect("at least one restart"))
}

/// One seeded restart of [`kmeans_1d`].
pub fn kmeans_single(values: &[f64], k: usize, seed: u64, restart: usize) -> Result<KMeansFit> {
    if k == 0 {
        return Err(HutError::Config("k must be at least 1".into()));
    }
    if values.len() < k {
        return Err(HutError::Config(format!(
            "k = {k} clusters requested for only {} values below the threshold",
            values.len()
        )));
    }
    let order = Permutation::sorting(values);
    let sorted = order.apply(values);
    let key = rng::stream_key(seed, 0, Stage::KMeans);
    let mut rng = rng::substream(key, restart as u64);

    let init = kmeans_pp(&sorted, k, &mut rng);
    let sorted_assign = lloyd(&sorted, init);
    let (sorted_assign, centroids) = canonicalize(&sorted, &sorted_assign, k);
    let wcss = wcss(&sorted, &sorted_assign, &centroids);
    Ok(KMeansFit {
        assignments: order.invert(&sorted_assign),
        centroids,
        wcss,
    })
}

fn kmeans_pp<R: Rng>(sorted: &[f64], k: usize, rng: &mut R) -> Vec<f64> {
    let n = sorted.len();
    let mut chosen = vec![false; n];
    let first = rng.random_range(0..n);
    chosen[first] = true;
    let mut centers = vec![sorted[first]];
    let mut d2: Vec<f64> = sorted
        .iter()
        .map(|&x| (x - sorted[first]).powi(2))
        .collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = None;
            for (i, &w) in d2.iter().enumerate() {
                if w > 0.0 {
                    pick = Some(i);
                    if target < w {
                        break;
                    }
                    target -= w;
                }
            }
            pick.expect("positive total weight")
        } else {
            // every remaining point duplicates a center
            let free: Vec<usize> = (0..n).filter(|&i| !chosen[i]).collect();
            free[rng.random_range(0..free.len())]
        };
        chosen[pick] = true;
        centers.push(sorted[pick]);
        for (w, &x) in d2.iter_mut().zip(sorted) {
            *w = w.min((x - sorted[pick]).powi(2));
        }
    }
    centers
}

fn nearest(x: f64, centroids: &[f64]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (c, &m) in centroids.iter().enumerate() {
        let d = (x - m).abs();
        if d < best_d {
            best = c;
            best_d = d;
        }
    }
    best
}

fn lloyd(sorted: &[f64], mut centroids: Vec<f64>) -> Vec<usize> {
    let k = centroids.len();
    let mut assign = vec![usize::MAX; sorted.len()];
    for _ in 0..KMEANS_MAX_ITER {
        for (a, &x) in assign.iter_mut().zip(sorted) {
            let best = nearest(x, &centroids);
            // keep a point whose current centroid is tied for nearest
            if *a == usize::MAX || (x - centroids[best]).abs() < (x - centroids[*a]).abs() {
                *a = best;
            }
        }
        let repaired = repair_empty(sorted, &mut assign, &mut centroids);
        let next = means(sorted, &assign, k);
        let moved = next
            .iter()
            .zip(&centroids)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        centroids = next;
        if !repaired && moved < KMEANS_TOL {
            break;
        }
    }
    assign
}

/// Reseeds each empty cluster with the point farthest from its current
/// centroid, taken from a cluster that can spare it.
fn repair_empty(sorted: &[f64], assign: &mut [usize], centroids: &mut [f64]) -> bool {
    let k = centroids.len();
    let mut sizes = vec![0usize; k];
    for &a in assign.iter() {
        sizes[a] += 1;
    }
    let mut repaired = false;
    for c in 0..k {
        if sizes[c] > 0 {
            continue;
        }
        let mut far = None;
        let mut far_d = -1.0;
        for (i, &x) in sorted.iter().enumerate() {
            let owner = assign[i];
            if sizes[owner] < 2 {
                continue;
            }
            let d = (x - centroids[owner]).abs();
            if d > far_d {
                far = Some(i);
                far_d = d;
            }
        }
        let i = far.expect("n >= k leaves a cluster with two or more points");
        sizes[assign[i]] -= 1;
        assign[i] = c;
        sizes[c] = 1;
        centroids[c] = sorted[i];
        repaired = true;
    }
    repaired
}

fn means(sorted: &[f64], assign: &[usize], k: usize) -> Vec<f64> {
    let mut sums = vec![0.0; k];
    let mut counts = vec![0usize; k];
    for (&x, &a) in sorted.iter().zip(assign) {
        sums[a] += x;
        counts[a] += 1;
    }
    sums.iter()
        .zip(&counts)
        .map(|(&s, &c)| if c > 0 { s / c as f64 } else { f64::NAN })
        .collect()
}

/// Relabels clusters in ascending centroid order and lays them out as
/// contiguous runs of the sorted values, keeping cluster sizes.
fn canonicalize(sorted: &[f64], assign: &[usize], k: usize) -> (Vec<usize>, Vec<f64>) {
    let raw = means(sorted, assign, k);
    let mut sizes = vec![0usize; k];
    for &a in assign {
        sizes[a] += 1;
    }
    let mut labels: Vec<usize> = (0..k).collect();
    labels.sort_by(|&a, &b| raw[a].total_cmp(&raw[b]).then(a.cmp(&b)));
    let mut out = Vec::with_capacity(sorted.len());
    for (new_label, &old) in labels.iter().enumerate() {
        out.extend(std::iter::repeat_n(new_label, sizes[old]));
    }
    let centroids = means(sorted, &out, k);
    (out, centroids)
}

fn wcss(values: &[f64], assign: &[usize], centroids: &[f64]) -> f64 {
    values
        .iter()
        .zip(assign)
        .map(|(&x, &a)| (x - centroids[a]).powi(2))
        .sum()
}

/// Sensitivity bounds used to scale the Laplace noise.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterSensitivity {
    /// Δ_c per cluster id.
    pub per_cluster: Vec<f64>,
    /// Δ for the not-clustered batch.
    pub global: f64,
}

impl ClusterSensitivity {
    /// Noise scale Δ/ε per record, in original record order.
    pub fn record_scales(&self, part: &Partition, epsilon: f64) -> Vec<f64> {
        let mut scales = vec![0.0; part.len()];
        for (&(i, _), &c) in part.small.iter().zip(&part.assignments) {
            scales[i] = self.per_cluster[c] / epsilon;
        }
        for &(i, _) in &part.large {
            scales[i] = self.global / epsilon;
        }
        scales
    }

    pub fn mean_record_scale(&self, part: &Partition, epsilon: f64) -> f64 {
        let s = self.record_scales(part, epsilon);
        s.iter().sum::<f64>() / s.len() as f64
    }
}

/// Max-of-cluster bounds for simple values; a fixed bound of 1 for counts.
pub fn sensitivity_bounds(part: &Partition) -> Result<ClusterSensitivity> {
    if !part.is_clustered() || part.assignments.len() != part.small.len() {
        return Err(HutError::Contract(
            "sensitivity bounds need a clustered partition".into(),
        ));
    }
    let k = part.k();
    Ok(match part.kind {
        DatasetKind::CountingHistogram => ClusterSensitivity {
            per_cluster: vec![1.0; k],
            global: 1.0,
        },
        DatasetKind::SimpleValues => {
            let mut per_cluster = vec![MIN_SENSITIVITY; k];
            for (&(_, v), &c) in part.small.iter().zip(&part.assignments) {
                per_cluster[c] = per_cluster[c].max(v);
            }
            ClusterSensitivity {
                per_cluster,
                global: part.max_value.max(MIN_SENSITIVITY),
            }
        }
    })
}
