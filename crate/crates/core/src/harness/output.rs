use std::path::{Path, PathBuf};

use super::plot::{render_svg, Series};
use super::{ExperimentReport, QueryKind};
use crate::error::{HutError, Result};
use crate::pipeline::Method;

// fixed axes of the ε and k plots when present in the grid
const PLOT_K: usize = 10;
const PLOT_P: f64 = 0.35;
const PLOT_EPSILON: f64 = 0.02;

fn preferred<T: PartialEq + Copy>(values: &[T], want: T) -> Option<T> {
    if values.contains(&want) {
        Some(want)
    } else {
        values.get(values.len() / 2).copied()
    }
}

fn distinct<T: PartialEq + Copy>(values: impl Iterator<Item = T>) -> Vec<T> {
    let mut out = Vec::new();
    for v in values {
        if !out.contains(&v) {
            out.push(v);
        }
    }
    out
}

fn plots_for(report: &ExperimentReport, query: QueryKind) -> Vec<(String, String)> {
    let rows: Vec<_> = report.rows.iter().filter(|r| r.query == query).collect();
    let epsilons = distinct(rows.iter().map(|r| r.epsilon));
    let ks = distinct(rows.iter().map(|r| r.k));
    let ps = distinct(rows.iter().map(|r| r.threshold));
    let methods: Vec<Method> = Method::ALL
        .into_iter()
        .filter(|m| rows.iter().any(|r| r.method == m.as_str()))
        .collect();
    let (Some(k), Some(p), Some(eps)) = (
        preferred(&ks, PLOT_K),
        preferred(&ps, PLOT_P),
        preferred(&epsilons, PLOT_EPSILON),
    ) else {
        return Vec::new();
    };

    let by_epsilon: Vec<Series> = methods
        .iter()
        .map(|&m| Series {
            label: m.to_string(),
            points: epsilons
                .iter()
                .filter_map(|&e| report.mean(m, query, e, k, p).map(|y| (e, y)))
                .collect(),
        })
        .collect();
    let by_k: Vec<Series> = methods
        .iter()
        .map(|&m| Series {
            label: m.to_string(),
            points: ks
                .iter()
                .filter_map(|&kk| report.mean(m, query, eps, kk, p).map(|y| (kk as f64, y)))
                .collect(),
        })
        .collect();
    vec![
        (
            format!("{query}_mse_vs_epsilon.svg"),
            render_svg(
                &format!("{query} query: mean MSE vs epsilon (k = {k}, threshold = {p})"),
                "epsilon",
                "mean MSE",
                &by_epsilon,
            ),
        ),
        (
            format!("{query}_mse_vs_k.svg"),
            render_svg(
                &format!("{query} query: mean MSE vs k (epsilon = {eps}, threshold = {p})"),
                "k",
                "mean MSE",
                &by_k,
            ),
        ),
    ]
}

/// Writes `report.csv`, `reduction.csv` and two SVG plots per query type.
/// Everything is rendered before the first file is created.
pub fn emit_outputs(report: &ExperimentReport, out_dir: &Path) -> Result<Vec<PathBuf>> {
    if report.is_empty() {
        return Err(HutError::Contract("cannot emit an empty report".into()));
    }
    let mut files = vec![
        ("report.csv".to_string(), report.to_csv_bytes()),
        ("reduction.csv".to_string(), report.reduction_csv_bytes()),
    ];
    let queries = distinct(report.rows.iter().map(|r| r.query));
    for q in [QueryKind::Simple, QueryKind::Counting] {
        if queries.contains(&q) {
            files.extend(
                plots_for(report, q)
                    .into_iter()
                    .map(|(name, svg)| (name, svg.into_bytes())),
            );
        }
    }

    std::fs::create_dir_all(out_dir).map_err(|e| HutError::io(out_dir, e))?;
    let mut written = Vec::with_capacity(files.len());
    for (name, bytes) in files {
        let path = out_dir.join(name);
        std::fs::write(&path, bytes).map_err(|e| HutError::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}
