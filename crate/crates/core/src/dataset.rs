//! Dataset, query and parameter model shared by every stage.

use std::collections::HashMap;
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{HutError, Result};

/// One keyed scalar. The id is an opaque lookup key (a face image in the
/// original workload), the value a nonnegative reading such as a speed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub id: String,
    pub value: f64,
}

impl Record {
    pub fn new(id: impl Into<String>, value: f64) -> Self {
        Record {
            id: id.into(),
            value,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DatasetKind {
    /// Individual readings answered by id lookup.
    SimpleValues,
    /// Bin counts of a contingency table; every value is an integer.
    CountingHistogram,
}

/// Non-empty ordered collection of records with unique ids.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    records: Vec<Record>,
    kind: DatasetKind,
    index: HashMap<String, usize>,
}

impl Dataset {
    pub fn new(records: Vec<Record>, kind: DatasetKind) -> Result<Self> {
        if records.is_empty() {
            return Err(HutError::Data("dataset is empty".into()));
        }
        let mut index = HashMap::with_capacity(records.len());
        for (i, r) in records.iter().enumerate() {
            if !r.value.is_finite() || r.value < 0.0 {
                return Err(HutError::Data(format!(
                    "record `{}` has value {} (must be finite and >= 0)",
                    r.id, r.value
                )));
            }
            if kind == DatasetKind::CountingHistogram && r.value.fract() != 0.0 {
                return Err(HutError::Data(format!(
                    "histogram bin `{}` has non-integer count {}",
                    r.id, r.value
                )));
            }
            if index.insert(r.id.clone(), i).is_some() {
                return Err(HutError::Data(format!("duplicate record id `{}`", r.id)));
            }
        }
        Ok(Dataset {
            records,
            kind,
            index,
        })
    }

    /// Builds a dataset with ids `r0, r1, ...`.
    pub fn from_values(values: &[f64], kind: DatasetKind) -> Result<Self> {
        let records = values
            .iter()
            .enumerate()
            .map(|(i, &v)| Record::new(format!("r{i}"), v))
            .collect();
        Dataset::new(records, kind)
    }

    pub fn kind(&self) -> DatasetKind {
        self.kind
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    /// Always false; kept for the `len`/`is_empty` pair.
    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn values(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.value).collect()
    }

    pub fn max_value(&self) -> f64 {
        self.records.iter().map(|r| r.value).fold(0.0, f64::max)
    }

    pub fn position(&self, id: &str) -> Result<usize> {
        self.index
            .get(id)
            .copied()
            .ok_or_else(|| HutError::UnknownId(id.to_string()))
    }

    /// The unprotected answer to the all-records query.
    pub fn raw_response(&self) -> QueryResponse {
        QueryResponse {
            values: self.values(),
            provenance: Provenance::Raw,
        }
    }

    /// Reads the `id,value` CSV format.
    pub fn read_csv(path: &Path, kind: DatasetKind) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| HutError::io(path, e))?;
        Self::from_csv_reader(file, kind).map_err(|e| match e {
            HutError::Csv { source, .. } => HutError::csv(path, source),
            other => other,
        })
    }

    pub fn from_csv_reader<R: Read>(reader: R, kind: DatasetKind) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr.headers().map_err(|e| HutError::csv("<input>", e))?;
        if headers.len() != 2 || &headers[0] != "id" || &headers[1] != "value" {
            return Err(HutError::Data(format!(
                "expected header `id,value`, found `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut records = Vec::new();
        for row in rdr.deserialize() {
            let rec: Record = row.map_err(|e| HutError::csv("<input>", e))?;
            records.push(rec);
        }
        Dataset::new(records, kind)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut file = std::fs::File::create(path).map_err(|e| HutError::io(path, e))?;
        file.write_all(&self.to_csv_bytes())
            .map_err(|e| HutError::io(path, e))
    }

    pub fn to_csv_bytes(&self) -> Vec<u8> {
        let mut wtr = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        for r in &self.records {
            wtr.serialize(r).expect("writing to memory cannot fail");
        }
        wtr.into_inner().expect("writing to memory cannot fail")
    }
}

/// Where a response's values came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Provenance {
    Raw,
    Noised,
    PostProcessed,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::Raw => "raw",
            Provenance::Noised => "noised",
            Provenance::PostProcessed => "post-processed",
        })
    }
}

/// Answers to the all-records query, aligned with the dataset's record order.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryResponse {
    pub values: Vec<f64>,
    pub provenance: Provenance,
}

impl QueryResponse {
    pub fn new(values: Vec<f64>, provenance: Provenance) -> Self {
        QueryResponse { values, provenance }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Single-record lookup against the dataset the response was computed for.
    pub fn lookup(&self, ds: &Dataset, id: &str) -> Result<f64> {
        if self.values.len() != ds.len() {
            return Err(HutError::Contract(format!(
                "response has {} values but dataset has {} records",
                self.values.len(),
                ds.len()
            )));
        }
        Ok(self.values[ds.position(id)?])
    }
}

/// Privacy and clustering parameters for one protection run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Params {
    /// Privacy scale ε; noise magnitude is inversely proportional to it.
    pub epsilon: f64,
    /// Number of k-means clusters for the small-value batch.
    pub k: usize,
    /// Rank fraction of the values treated as small.
    pub p: f64,
    pub seed: u64,
    pub trials: usize,
}

impl Params {
    pub fn new(epsilon: f64, k: usize, p: f64, seed: u64, trials: usize) -> Result<Self> {
        let params = Params {
            epsilon,
            k,
            p,
            seed,
            trials,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(HutError::Config(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if self.k == 0 {
            return Err(HutError::Config("k must be at least 1".into()));
        }
        if !(self.p > 0.0 && self.p < 1.0) {
            return Err(HutError::Config(format!(
                "threshold fraction p must lie in (0, 1), got {}",
                self.p
            )));
        }
        if self.trials == 0 {
            return Err(HutError::Config("trials must be at least 1".into()));
        }
        Ok(())
    }
}

/// Maps sorted position to original record index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Permutation(Vec<usize>);

impl Permutation {
    /// Stable ascending sort order of `values`; ties keep original index order.
    pub fn sorting(values: &[f64]) -> Self {
        let mut order: Vec<usize> = (0..values.len()).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        Permutation(order)
    }

    pub fn from_vec(order: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; order.len()];
        for &i in &order {
            if i >= order.len() || std::mem::replace(&mut seen[i], true) {
                return Err(HutError::Contract(format!(
                    "{order:?} is not a permutation"
                )));
            }
        }
        Ok(Permutation(order))
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Rearranges original-order items into sorted order.
    pub fn apply<T: Clone>(&self, original: &[T]) -> Vec<T> {
        self.0.iter().map(|&i| original[i].clone()).collect()
    }

    /// Puts sorted-order items back into original order.
    pub fn invert<T: Clone + Default>(&self, sorted: &[T]) -> Vec<T> {
        let mut out = vec![T::default(); sorted.len()];
        for (pos, &orig) in self.0.iter().enumerate() {
            out[orig] = sorted[pos].clone();
        }
        out
    }
}

/// Returns the dataset sorted by value together with the permutation that produced it.
pub fn sort_ascending(ds: &Dataset) -> (Dataset, Permutation) {
    let perm = Permutation::sorting(&ds.values());
    let records = perm.apply(ds.records());
    let index = records
        .iter()
        .enumerate()
        .map(|(i, r)| (r.id.clone(), i))
        .collect();
    (
        Dataset {
            records,
            kind: ds.kind,
            index,
        },
        perm,
    )
}

pub fn simple_query(ds: &Dataset, id: &str) -> Result<f64> {
    Ok(ds.records[ds.position(id)?].value)
}

/// Default bin width for counting queries (integer speeds).
pub const DEFAULT_BIN_WIDTH: f64 = 1.0;

/// Counts values into bins `[i·w, (i+1)·w)` covering `[0, max]`, zero bins included.
/// Bin ids are `bin_<lower edge>`.
pub fn build_histogram(ds: &Dataset, bin_width: f64) -> Result<Dataset> {
    if ds.kind != DatasetKind::SimpleValues {
        return Err(HutError::Contract(
            "histograms are built from simple-value datasets".into(),
        ));
    }
    if !(bin_width.is_finite() && bin_width > 0.0) {
        return Err(HutError::Config(format!(
            "bin width must be positive, got {bin_width}"
        )));
    }
    let bin_of = |v: f64| (v / bin_width).floor() as usize;
    let mut counts = vec![0u64; bin_of(ds.max_value()) + 1];
    for r in ds.records() {
        counts[bin_of(r.value)] += 1;
    }
    let records = counts
        .iter()
        .enumerate()
        .map(|(i, &c)| Record::new(format!("bin_{}", i as f64 * bin_width), c as f64))
        .collect();
    Dataset::new(records, DatasetKind::CountingHistogram)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ds(values: &[f64]) -> Dataset {
        Dataset::from_values(values, DatasetKind::SimpleValues).unwrap()
    }

    #[test]
    fn sort_small_case() {
        let (sorted, perm) = sort_ascending(&ds(&[3.0, 1.0, 2.0]));
        assert_eq!(sorted.values(), vec![1.0, 2.0, 3.0]);
        assert_eq!(perm.as_slice(), &[1, 2, 0]);
    }

    #[test]
    fn sort_identity_on_sorted_input() {
        let (_, perm) = sort_ascending(&ds(&[1.0, 2.0, 5.0, 9.0]));
        assert_eq!(perm.as_slice(), &[0, 1, 2, 3]);
    }

    #[test]
    fn sort_ties_keep_original_order() {
        let (sorted, perm) = sort_ascending(&ds(&[2.0, 2.0, 1.0]));
        assert_eq!(sorted.values(), vec![1.0, 2.0, 2.0]);
        assert_eq!(perm.as_slice(), &[2, 0, 1]);
        let ids: Vec<_> = sorted.records().iter().map(|r| r.id.as_str()).collect();
        assert_eq!(ids, ["r2", "r0", "r1"]);
    }

    #[test]
    fn lookup_by_id() {
        let d = Dataset::new(
            vec![Record::new("a", 30.0), Record::new("b", 60.0)],
            DatasetKind::SimpleValues,
        )
        .unwrap();
        assert_eq!(simple_query(&d, "a").unwrap(), 30.0);
        assert!(matches!(
            simple_query(&d, "zz"),
            Err(HutError::UnknownId(_))
        ));
        let all: Vec<f64> = d
            .records()
            .iter()
            .map(|r| simple_query(&d, &r.id).unwrap())
            .collect();
        assert_eq!(all, d.values());

        let post = QueryResponse::new(vec![31.5, 58.0], Provenance::PostProcessed);
        assert_eq!(post.lookup(&d, "b").unwrap(), 58.0);
    }

    #[test]
    fn rejects_invalid_datasets() {
        assert!(Dataset::from_values(&[], DatasetKind::SimpleValues).is_err());
        assert!(Dataset::from_values(&[-1.0], DatasetKind::SimpleValues).is_err());
        assert!(Dataset::from_values(&[1.5], DatasetKind::CountingHistogram).is_err());
        let dup = vec![Record::new("a", 1.0), Record::new("a", 2.0)];
        assert!(Dataset::new(dup, DatasetKind::SimpleValues).is_err());
    }

    #[test]
    fn params_validation() {
        assert!(Params::new(0.01, 5, 0.3, 1, 20).is_ok());
        assert!(Params::new(0.0, 5, 0.3, 1, 20).is_err());
        assert!(Params::new(0.01, 0, 0.3, 1, 20).is_err());
        assert!(Params::new(0.01, 5, 1.0, 1, 20).is_err());
        assert!(Params::new(0.01, 5, 0.3, 1, 0).is_err());
    }

    #[test]
    fn histogram_hand_counted() {
        let h = build_histogram(&ds(&[10.0, 10.0, 25.0]), 10.0).unwrap();
        assert_eq!(h.kind(), DatasetKind::CountingHistogram);
        assert_eq!(h.values(), vec![0.0, 2.0, 1.0]);
        assert_eq!(simple_query(&h, "bin_10").unwrap(), 2.0);
        assert_eq!(simple_query(&h, "bin_20").unwrap(), 1.0);
    }

    #[test]
    fn histogram_single_record() {
        let h = build_histogram(&ds(&[0.5]), 1.0).unwrap();
        assert_eq!(h.values(), vec![1.0]);
    }

    #[test]
    fn histogram_rejects_bad_input() {
        assert!(build_histogram(&ds(&[1.0]), 0.0).is_err());
        let h = build_histogram(&ds(&[1.0]), 1.0).unwrap();
        assert!(build_histogram(&h, 1.0).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let d = Dataset::new(
            vec![Record::new("img_001", 42.5), Record::new("img_002", 0.0)],
            DatasetKind::SimpleValues,
        )
        .unwrap();
        let bytes = d.to_csv_bytes();
        assert_eq!(
            String::from_utf8(bytes.clone()).unwrap(),
            "id,value\nimg_001,42.5\nimg_002,0.0\n"
        );
        let back = Dataset::from_csv_reader(&bytes[..], DatasetKind::SimpleValues).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn csv_rejects_wrong_header() {
        let err = Dataset::from_csv_reader(&b"key,speed\na,1\n"[..], DatasetKind::SimpleValues);
        assert!(matches!(err, Err(HutError::Data(_))));
    }

    proptest! {
        #[test]
        fn sort_round_trip_is_exact(values in prop::collection::vec(0.0f64..200.0, 1..60)) {
            let d = ds(&values);
            let (sorted, perm) = sort_ascending(&d);
            let sv = sorted.values();
            prop_assert!(sv.windows(2).all(|w| w[0] <= w[1]));
            let back = perm.invert(&sv);
            prop_assert_eq!(back, values);
        }

        #[test]
        fn histogram_conserves_mass(values in prop::collection::vec(0.0f64..130.0, 1..300),
                                    width in 0.5f64..20.0) {
            let h = build_histogram(&ds(&values), width).unwrap();
            let total: f64 = h.values().iter().sum();
            prop_assert_eq!(total as usize, values.len());
        }
    }
}
