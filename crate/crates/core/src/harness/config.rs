//! `key = value` sweep configuration files.
//!
//! ```text
//! # comments and blank lines are ignored
//! epsilons = 0.008, 0.01
//! ks = 5, 10
//! ps = 0.3, 0.35
//! trials = 20
//! methods = hut, k_aggregation
//! bin_width = 1
//! ```

use std::fmt::Write as _;
use std::str::FromStr;

use super::{QueryKind, SweepSpec};
use crate::error::{HutError, Result};
use crate::pipeline::Method;

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    let items: Vec<T> = value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse()
                .map_err(|_| HutError::Config(format!("`{key}`: cannot parse `{s}`")))
        })
        .collect::<Result<_>>()?;
    if items.is_empty() {
        return Err(HutError::Config(format!("`{key}` has no values")));
    }
    Ok(items)
}

fn parse_one<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| HutError::Config(format!("`{key}`: cannot parse `{}`", value.trim())))
}

/// Applies a config file on top of the defaults for `query`.
pub fn parse_config(text: &str, query: QueryKind) -> Result<SweepSpec> {
    let mut spec = SweepSpec::defaults(query);
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            HutError::Config(format!("line {}: expected `key = value`", lineno + 1))
        })?;
        let key = key.trim();
        match key {
            "epsilons" | "epsilon" => spec.epsilons = parse_list(key, value)?,
            "ks" | "k" => spec.ks = parse_list(key, value)?,
            "ks_simple" if query == QueryKind::Simple => spec.ks = parse_list(key, value)?,
            "ks_counting" if query == QueryKind::Counting => spec.ks = parse_list(key, value)?,
            "ks_simple" | "ks_counting" => {}
            "ps" | "p" | "thresholds" => spec.ps = parse_list(key, value)?,
            "trials" => spec.trials = parse_one(key, value)?,
            "bin_width" => spec.bin_width = parse_one(key, value)?,
            "methods" => {
                spec.methods = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(str::parse::<Method>)
                    .collect::<Result<_>>()?;
            }
            other => {
                return Err(HutError::Config(format!(
                    "line {}: unknown key `{other}`",
                    lineno + 1
                )))
            }
        }
    }
    spec.validate()?;
    Ok(spec)
}

fn join<T: ToString>(items: &[T]) -> String {
    items
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(", ")
}

/// The default grids, in config-file syntax.
pub fn defaults_text() -> String {
    let simple = SweepSpec::defaults(QueryKind::Simple);
    let counting = SweepSpec::defaults(QueryKind::Counting);
    let mut out = String::new();
    writeln!(out, "epsilons = {}", join(&simple.epsilons)).unwrap();
    writeln!(out, "ks_simple = {}", join(&simple.ks)).unwrap();
    writeln!(out, "ks_counting = {}", join(&counting.ks)).unwrap();
    writeln!(out, "ps = {}", join(&simple.ps)).unwrap();
    writeln!(out, "trials = {}", simple.trials).unwrap();
    writeln!(out, "methods = {}", join(&simple.methods)).unwrap();
    writeln!(out, "bin_width = {}", simple.bin_width).unwrap();
    out
}
