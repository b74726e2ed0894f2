//! Experiment engine: parameter sweeps, trial averaging, MSE and reduction tables.

mod audit;
mod config;
mod output;
mod plot;

use std::fmt;
use std::io::Read;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use audit::{audit_counting, neighboring_histograms};
pub use config::{defaults_text, parse_config};
pub use output::emit_outputs;
pub use plot::{render_svg, Series};

use crate::dataset::{build_histogram, Dataset, DatasetKind, Params, QueryResponse};
use crate::error::{HutError, Result};
use crate::exec::{self, ExecMode};
use crate::pipeline::Method;

pub const DEFAULT_EPSILONS: [f64; 4] = [0.008, 0.01, 0.02, 0.05];
pub const DEFAULT_KS_SIMPLE: [usize; 3] = [5, 8, 10];
pub const DEFAULT_KS_COUNTING: [usize; 3] = [5, 10, 15];
pub const DEFAULT_PS: [f64; 3] = [0.30, 0.35, 0.40];
pub const DEFAULT_TRIALS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QueryKind {
    Simple,
    Counting,
}

impl QueryKind {
    pub fn as_str(self) -> &'static str {
        match self {
            QueryKind::Simple => "simple",
            QueryKind::Counting => "counting",
        }
    }
}

impl fmt::Display for QueryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for QueryKind {
    type Err = HutError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "simple" => Ok(QueryKind::Simple),
            "counting" => Ok(QueryKind::Counting),
            other => Err(HutError::Config(format!("unknown query type `{other}`"))),
        }
    }
}

/// Mean squared error between raw and protected answers.
pub fn mse(raw: &QueryResponse, protected: &QueryResponse) -> Result<f64> {
    if raw.len() != protected.len() || raw.is_empty() {
        return Err(HutError::Contract(format!(
            "cannot compare responses of length {} and {}",
            raw.len(),
            protected.len()
        )));
    }
    let sum: f64 = raw
        .values
        .iter()
        .zip(&protected.values)
        .map(|(d, p)| (p - d).powi(2))
        .sum();
    Ok(sum / raw.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub epsilons: Vec<f64>,
    pub ks: Vec<usize>,
    pub ps: Vec<f64>,
    pub trials: usize,
    pub methods: Vec<Method>,
    pub query: QueryKind,
    /// Histogram bin width used when a counting sweep is given raw speeds.
    pub bin_width: f64,
}

impl SweepSpec {
    pub fn defaults(query: QueryKind) -> Self {
        SweepSpec {
            epsilons: DEFAULT_EPSILONS.to_vec(),
            ks: match query {
                QueryKind::Simple => DEFAULT_KS_SIMPLE.to_vec(),
                QueryKind::Counting => DEFAULT_KS_COUNTING.to_vec(),
            },
            ps: DEFAULT_PS.to_vec(),
            trials: DEFAULT_TRIALS,
            methods: Method::ALL.to_vec(),
            query,
            bin_width: crate::dataset::DEFAULT_BIN_WIDTH,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epsilons.is_empty() || self.ks.is_empty() || self.ps.is_empty() {
            return Err(HutError::Config("sweep grid has an empty axis".into()));
        }
        if self.methods.is_empty() {
            return Err(HutError::Config("sweep has no methods".into()));
        }
        if !(self.bin_width.is_finite() && self.bin_width > 0.0) {
            return Err(HutError::Config(format!(
                "bin width must be positive, got {}",
                self.bin_width
            )));
        }
        for &epsilon in &self.epsilons {
            for &k in &self.ks {
                for &p in &self.ps {
                    Params::new(epsilon, k, p, 0, self.trials)?;
                }
            }
        }
        Ok(())
    }

    /// Grid cells in (ε, k, p, method) order.
    pub fn cells(&self) -> Vec<(f64, usize, f64, Method)> {
        let mut cells = Vec::new();
        for &epsilon in &self.epsilons {
            for &k in &self.ks {
                for &p in &self.ps {
                    for &m in &self.methods {
                        cells.push((epsilon, k, p, m));
                    }
                }
            }
        }
        cells
    }
}

/// One (method, query, ε, k, p) cell; `mean_mse` and `std_mse` are empty when the cell failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub method: String,
    pub query: QueryKind,
    pub epsilon: f64,
    pub k: usize,
    pub threshold: f64,
    pub mean_mse: Option<f64>,
    pub std_mse: Option<f64>,
    pub trials: usize,
    pub status: String,
}

impl ReportRow {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }

    fn key(&self) -> (QueryKind, f64, usize, f64, String) {
        (
            self.query,
            self.epsilon,
            self.k,
            self.threshold,
            self.method.clone(),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionRow {
    pub query: QueryKind,
    pub epsilon: f64,
    pub k: usize,
    pub threshold: f64,
    pub reduction_pct: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExperimentReport {
    pub rows: Vec<ReportRow>,
}

impl ExperimentReport {
    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn merge(mut self, other: ExperimentReport) -> Self {
        self.rows.extend(other.rows);
        self.sort();
        self
    }

    fn sort(&mut self) {
        self.rows.sort_by(|a, b| {
            let (ka, kb) = (a.key(), b.key());
            ka.0.cmp(&kb.0)
                .then(ka.1.total_cmp(&kb.1))
                .then(ka.2.cmp(&kb.2))
                .then(ka.3.total_cmp(&kb.3))
                .then(ka.4.cmp(&kb.4))
        });
    }

    pub fn failed(&self) -> impl Iterator<Item = &ReportRow> {
        self.rows.iter().filter(|r| !r.is_ok())
    }

    /// Mean MSE of a successful cell.
    pub fn mean(
        &self,
        method: Method,
        query: QueryKind,
        epsilon: f64,
        k: usize,
        p: f64,
    ) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| {
                r.method == method.as_str()
                    && r.query == query
                    && r.epsilon == epsilon
                    && r.k == k
                    && r.threshold == p
            })
            .and_then(|r| r.mean_mse)
    }

    /// `(MSE_base − MSE_HUT)/MSE_base` against the better baseline of one cell.
    pub fn cell_reduction(&self, query: QueryKind, epsilon: f64, k: usize, p: f64) -> Option<f64> {
        let hut = self.mean(Method::Hut, query, epsilon, k, p)?;
        let base = [Method::FixedSize, Method::KAggregation]
            .iter()
            .filter_map(|&m| self.mean(m, query, epsilon, k, p))
            .reduce(f64::min)?;
        Some((base - hut) / base)
    }

    /// Best reduction per (query, ε) over the (k, p) grid.
    pub fn reductions(&self) -> Vec<ReductionRow> {
        let mut out: Vec<ReductionRow> = Vec::new();
        for row in self
            .rows
            .iter()
            .filter(|r| r.method == Method::Hut.as_str())
        {
            let Some(red) = self.cell_reduction(row.query, row.epsilon, row.k, row.threshold)
            else {
                continue;
            };
            let candidate = ReductionRow {
                query: row.query,
                epsilon: row.epsilon,
                k: row.k,
                threshold: row.threshold,
                reduction_pct: red * 100.0,
            };
            match out
                .iter_mut()
                .find(|r| r.query == row.query && r.epsilon == row.epsilon)
            {
                Some(best) if candidate.reduction_pct > best.reduction_pct => *best = candidate,
                Some(_) => {}
                None => out.push(candidate),
            }
        }
        out
    }

    pub fn to_csv_bytes(&self) -> Vec<u8> {
        write_csv(&self.rows)
    }

    pub fn reduction_csv_bytes(&self) -> Vec<u8> {
        write_csv(&self.reductions())
    }

    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let rows = rdr
            .deserialize()
            .collect::<std::result::Result<Vec<ReportRow>, _>>()
            .map_err(|e| HutError::csv("<report>", e))?;
        let mut report = ExperimentReport { rows };
        report.sort();
        Ok(report)
    }
}

fn write_csv<T: Serialize>(rows: &[T]) -> Vec<u8> {
    let mut wtr = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    for r in rows {
        wtr.serialize(r).expect("writing to memory cannot fail");
    }
    wtr.into_inner().expect("writing to memory cannot fail")
}

/// Per-trial MSEs of one method on one parameter cell, trials `0..params.trials`.
pub fn trial_mses(
    method: Method,
    ds: &Dataset,
    params: &Params,
    mode: ExecMode,
) -> Result<Vec<f64>> {
    let raw = ds.raw_response();
    exec::map_indices(mode, params.trials, |t| {
        mse(&raw, &method.protect(ds, params, t as u64)?)
    })
    .into_iter()
    .collect()
}

pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let std = if xs.len() > 1 {
        (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (mean, std)
}

/// The dataset a sweep of `query` runs on.
pub fn dataset_for_query(ds: &Dataset, query: QueryKind, bin_width: f64) -> Result<Dataset> {
    match (query, ds.kind()) {
        (QueryKind::Simple, DatasetKind::SimpleValues) => Ok(ds.clone()),
        (QueryKind::Counting, DatasetKind::SimpleValues) => build_histogram(ds, bin_width),
        (QueryKind::Counting, DatasetKind::CountingHistogram) => Ok(ds.clone()),
        (QueryKind::Simple, DatasetKind::CountingHistogram) => Err(HutError::Data(
            "simple queries need per-record values, not a histogram".into(),
        )),
    }
}

/// Runs every grid cell and method. Failing cells are recorded, not fatal.
pub fn run_sweep(
    spec: &SweepSpec,
    ds: &Dataset,
    seed: u64,
    mode: ExecMode,
) -> Result<ExperimentReport> {
    spec.validate()?;
    let data = dataset_for_query(ds, spec.query, spec.bin_width)?;
    let cells = spec.cells();
    let rows = exec::map_slice(mode, &cells, |&(epsilon, k, p, method)| {
        let outcome = Params::new(epsilon, k, p, seed, spec.trials)
            .and_then(|params| trial_mses(method, &data, &params, mode));
        let (mean_mse, std_mse, status) = match outcome {
            Ok(mses) => {
                let (m, s) = mean_std(&mses);
                (Some(m), Some(s), "ok".to_string())
            }
            Err(e) => (None, None, format!("failed: {e}")),
        };
        ReportRow {
            method: method.as_str().to_string(),
            query: spec.query,
            epsilon,
            k,
            threshold: p,
            mean_mse,
            std_mse,
            trials: spec.trials,
            status,
        }
    });
    let mut report = ExperimentReport { rows };
    report.sort();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{gen_speeds, Profile};
    use crate::dataset::Provenance;

    #[test]
    fn mse_hand_values() {
        let d = QueryResponse::new(vec![0.0, 0.0], Provenance::Raw);
        let p = QueryResponse::new(vec![1.0, 3.0], Provenance::Noised);
        assert_eq!(mse(&d, &p).unwrap(), 5.0);
        assert_eq!(mse(&d, &d).unwrap(), 0.0);
        let short = QueryResponse::new(vec![1.0], Provenance::Noised);
        assert!(mse(&d, &short).is_err());
    }

    #[test]
    fn mse_scales_quadratically() {
        let d = QueryResponse::new(vec![1.0, -2.0, 7.5], Provenance::Raw);
        let p = QueryResponse::new(vec![0.5, 1.0, 9.0], Provenance::Noised);
        let c = 3.7;
        let scale = |r: &QueryResponse| {
            QueryResponse::new(r.values.iter().map(|v| v * c).collect(), r.provenance)
        };
        let lhs = mse(&scale(&d), &scale(&p)).unwrap();
        let rhs = c * c * mse(&d, &p).unwrap();
        assert!((lhs - rhs).abs() < 1e-9 * rhs);
    }

    #[test]
    fn default_grid_sizes() {
        assert_eq!(SweepSpec::defaults(QueryKind::Simple).cells().len(), 108);
        assert_eq!(SweepSpec::defaults(QueryKind::Counting).cells().len(), 108);
        assert_eq!(SweepSpec::defaults(QueryKind::Simple).ks, vec![5, 8, 10]);
        assert_eq!(SweepSpec::defaults(QueryKind::Counting).ks, vec![5, 10, 15]);
    }

    #[test]
    fn one_cell_sweep() {
        let ds = gen_speeds(200, Profile::RightSkewed, 1).unwrap();
        let spec = SweepSpec {
            epsilons: vec![0.05],
            ks: vec![5],
            ps: vec![0.3],
            trials: 1,
            methods: vec![Method::Hut],
            ..SweepSpec::defaults(QueryKind::Simple)
        };
        let report = run_sweep(&spec, &ds, 3, ExecMode::Sequential).unwrap();
        assert_eq!(report.rows.len(), 1);
        assert!(report.rows[0].is_ok());
        assert_eq!(report.rows[0].std_mse, Some(0.0));
    }

    #[test]
    fn failed_cells_do_not_abort() {
        let ds = gen_speeds(20, Profile::Uniform, 1).unwrap();
        let spec = SweepSpec {
            epsilons: vec![0.05],
            ks: vec![2, 15],
            ps: vec![0.3],
            trials: 2,
            methods: vec![Method::Hut, Method::FixedSize],
            ..SweepSpec::defaults(QueryKind::Simple)
        };
        let report = run_sweep(&spec, &ds, 3, ExecMode::Parallel).unwrap();
        assert_eq!(report.rows.len(), 4);
        let failed: Vec<_> = report.failed().collect();
        // only 6 records fall below the threshold: HUT cannot form 15 clusters
        assert_eq!(failed.len(), 1);
        assert_eq!(failed[0].method, "hut");
        assert_eq!(failed[0].k, 15);
        assert!(failed[0].mean_mse.is_none());
    }

    #[test]
    fn sequential_and_parallel_agree() {
        let ds = gen_speeds(300, Profile::Bimodal, 2).unwrap();
        let spec = SweepSpec {
            epsilons: vec![0.01, 0.05],
            ks: vec![3],
            ps: vec![0.3],
            trials: 4,
            ..SweepSpec::defaults(QueryKind::Counting)
        };
        let a = run_sweep(&spec, &ds, 5, ExecMode::Sequential).unwrap();
        let b = run_sweep(&spec, &ds, 5, ExecMode::Parallel).unwrap();
        assert_eq!(a.to_csv_bytes(), b.to_csv_bytes());
    }

    #[test]
    fn reduction_uses_better_baseline() {
        let row = |method: &str, mean: f64| ReportRow {
            method: method.into(),
            query: QueryKind::Simple,
            epsilon: 0.01,
            k: 5,
            threshold: 0.3,
            mean_mse: Some(mean),
            std_mse: Some(0.0),
            trials: 20,
            status: "ok".into(),
        };
        let report = ExperimentReport {
            rows: vec![
                row("hut", 10.0),
                row("fixed_size", 100.0),
                row("k_aggregation", 40.0),
            ],
        };
        let red = report.reductions();
        assert_eq!(red.len(), 1);
        assert!((red[0].reduction_pct - 75.0).abs() < 1e-12);
        let header = String::from_utf8(report.reduction_csv_bytes()).unwrap();
        assert!(header.starts_with("query,epsilon,k,threshold,reduction_pct\n"));
    }

    #[test]
    fn report_csv_round_trip() {
        let ds = gen_speeds(100, Profile::Uniform, 4).unwrap();
        let spec = SweepSpec {
            epsilons: vec![0.05],
            ks: vec![2, 40],
            ps: vec![0.3],
            trials: 2,
            ..SweepSpec::defaults(QueryKind::Simple)
        };
        let report = run_sweep(&spec, &ds, 1, ExecMode::Parallel).unwrap();
        let bytes = report.to_csv_bytes();
        let back = ExperimentReport::from_csv_reader(&bytes[..]).unwrap();
        assert_eq!(back, report);
        assert_eq!(back.to_csv_bytes(), bytes);
    }
}
