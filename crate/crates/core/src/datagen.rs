//! Synthetic speed datasets standing in for the image–speed table.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, LogNormal, Normal};

use crate::dataset::{build_histogram, Dataset, DatasetKind, Record};
use crate::error::{HutError, Result};
use crate::rng::{self, Stage};

pub const MAX_SPEED: f64 = 130.0;
pub const DEFAULT_N: usize = 1200;
pub const MIN_N: usize = 10;

// lognormal(0, 1) scaled so that e^2.5 (about the 99.4th percentile) maps to MAX_SPEED
const SKEW_SIGMA: f64 = 1.0;
const SKEW_CAP: f64 = 2.5;

// urban / highway mixture
const URBAN_WEIGHT: f64 = 0.6;
const URBAN: (f64, f64) = (30.0, 10.0);
const HIGHWAY: (f64, f64) = (100.0, 12.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Profile {
    #[default]
    RightSkewed,
    Bimodal,
    Uniform,
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Profile::RightSkewed => "right-skewed",
            Profile::Bimodal => "bimodal",
            Profile::Uniform => "uniform",
        })
    }
}

impl FromStr for Profile {
    type Err = HutError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "right-skewed" | "rightskewed" | "skewed" => Ok(Profile::RightSkewed),
            "bimodal" => Ok(Profile::Bimodal),
            "uniform" => Ok(Profile::Uniform),
            other => Err(HutError::Config(format!("unknown profile `{other}`"))),
        }
    }
}

/// `n` speeds in `[0, 130]` rounded to 0.01, with ids `img_0000, img_0001, ...`.
pub fn gen_speeds(n: usize, profile: Profile, seed: u64) -> Result<Dataset> {
    if n < MIN_N {
        return Err(HutError::Config(format!(
            "at least {MIN_N} records are needed, got {n}"
        )));
    }
    let mut rng = rng::stream(seed, 0, Stage::DataGen);
    let lognormal = LogNormal::new(0.0, SKEW_SIGMA).expect("valid lognormal");
    let urban = Normal::new(URBAN.0, URBAN.1).expect("valid normal");
    let highway = Normal::new(HIGHWAY.0, HIGHWAY.1).expect("valid normal");
    let width = n.saturating_sub(1).to_string().len().max(4);

    let records = (0..n)
        .map(|i| {
            let raw = match profile {
                Profile::RightSkewed => lognormal.sample(&mut rng) / SKEW_CAP.exp() * MAX_SPEED,
                Profile::Bimodal => {
                    if rng.random::<f64>() < URBAN_WEIGHT {
                        urban.sample(&mut rng)
                    } else {
                        highway.sample(&mut rng)
                    }
                }
                Profile::Uniform => rng.random::<f64>() * MAX_SPEED,
            };
            let v = (raw.clamp(0.0, MAX_SPEED) * 100.0).round() / 100.0;
            Record::new(format!("img_{i:0width$}"), v)
        })
        .collect();
    Dataset::new(records, DatasetKind::SimpleValues)
}

/// Speed-value counts of a generated dataset.
pub fn gen_counting(ds: &Dataset, bin_width: f64) -> Result<Dataset> {
    build_histogram(ds, bin_width)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn values_stay_in_range() {
        for profile in [Profile::RightSkewed, Profile::Bimodal, Profile::Uniform] {
            let ds = gen_speeds(1000, profile, 3).unwrap();
            assert_eq!(ds.len(), 1000);
            assert!(ds.values().iter().all(|&v| (0.0..=MAX_SPEED).contains(&v)));
        }
    }

    #[test]
    fn right_skewed_median_below_mean() {
        for seed in 0..20 {
            let mut v = gen_speeds(DEFAULT_N, Profile::RightSkewed, seed)
                .unwrap()
                .values();
            let mean = v.iter().sum::<f64>() / v.len() as f64;
            v.sort_by(f64::total_cmp);
            let median = (v[v.len() / 2 - 1] + v[v.len() / 2]) / 2.0;
            assert!(median < mean, "seed {seed}: median {median} mean {mean}");
        }
    }

    #[test]
    fn same_seed_same_bytes() {
        let a = gen_speeds(300, Profile::Bimodal, 9).unwrap().to_csv_bytes();
        let b = gen_speeds(300, Profile::Bimodal, 9).unwrap().to_csv_bytes();
        let c = gen_speeds(300, Profile::Bimodal, 10)
            .unwrap()
            .to_csv_bytes();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn too_small_rejected() {
        assert!(gen_speeds(9, Profile::Uniform, 0).is_err());
    }

    #[test]
    fn counting_table_bounds() {
        let ds = gen_speeds(DEFAULT_N, Profile::RightSkewed, 1).unwrap();
        let hist = gen_counting(&ds, 1.0).unwrap();
        assert!(hist.len() <= 131);
        assert_eq!(hist.values().iter().sum::<f64>() as usize, DEFAULT_N);
        assert_eq!(hist.kind(), DatasetKind::CountingHistogram);
    }

    #[test]
    fn profile_parsing() {
        assert_eq!(
            "right-skewed".parse::<Profile>().unwrap(),
            Profile::RightSkewed
        );
        assert_eq!("Bimodal".parse::<Profile>().unwrap(), Profile::Bimodal);
        assert!("gaussian".parse::<Profile>().is_err());
    }
}
