use crate::datagen::{gen_counting, gen_speeds, Profile, DEFAULT_N};
use crate::dataset::{Dataset, Params, Record, DEFAULT_BIN_WIDTH};
use crate::error::Result;
use crate::exec::{self, ExecMode};
use crate::mechanism::{dp_ratio_audit, AuditReport, OutcomeBins};
use crate::pipeline::protect_counting;

pub const AUDIT_BINS: usize = 20;
pub const AUDIT_PILOT: usize = 20_000;
const PILOT_OFFSET: u64 = 1 << 40;

/// Neighboring histograms: the generated speed counts, and the same table
/// with one more record in its most populated bin (the last one on ties).
/// Raising that bin keeps the pre-noise order of the bins unchanged.
pub fn neighboring_histograms(seed: u64) -> Result<(Dataset, Dataset, usize)> {
    let x1 = gen_counting(
        &gen_speeds(DEFAULT_N, Profile::RightSkewed, seed)?,
        DEFAULT_BIN_WIDTH,
    )?;
    let values = x1.values();
    let top = values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .expect("non-empty histogram");
    let records: Vec<Record> = x1
        .records()
        .iter()
        .enumerate()
        .map(|(i, r)| Record::new(r.id.clone(), r.value + if i == top { 1.0 } else { 0.0 }))
        .collect();
    let x2 = Dataset::new(records, x1.kind())?;
    Ok((x1, x2, top))
}

/// Audits the full counting pipeline at `epsilon`, observing the released
/// count of the bin that differs between the neighbors.
pub fn audit_counting(
    epsilon: f64,
    samples: usize,
    seed: u64,
    mode: ExecMode,
) -> Result<AuditReport> {
    let (x1, x2, bin) = neighboring_histograms(seed)?;
    let params = Params::new(epsilon, 5, 0.30, seed, 1)?;
    let mech = |ds: &Dataset, sample: u64| -> Result<f64> {
        Ok(protect_counting(ds, &params, sample)?.post_processed.values[bin])
    };
    let pilot: Vec<f64> =
        exec::map_indices(mode, AUDIT_PILOT, |s| mech(&x1, PILOT_OFFSET + s as u64))
            .into_iter()
            .collect::<Result<_>>()?;
    let bins = OutcomeBins::from_quantiles(&pilot, AUDIT_BINS)?;
    dp_ratio_audit(mech, &x1, &x2, &bins, samples, mode)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Permutation;
    use crate::mechanism::{audit_bound, check_neighbors};

    #[test]
    fn neighbors_share_sort_order() {
        let (x1, x2, bin) = neighboring_histograms(3).unwrap();
        check_neighbors(&x1, &x2).unwrap();
        assert_eq!(x2.values()[bin], x1.values()[bin] + 1.0);
        assert_eq!(
            Permutation::sorting(&x1.values()),
            Permutation::sorting(&x2.values())
        );
    }

    #[test]
    fn small_audit_within_bound() {
        let report = audit_counting(1.0, 5_000, 7, ExecMode::Parallel).unwrap();
        assert_eq!(report.counts_x1.iter().sum::<u64>(), 5_000);
        assert!(
            report.max_ratio <= audit_bound(1.0) * 1.2,
            "{}",
            report.max_ratio
        );
    }
}
