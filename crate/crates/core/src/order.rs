//! Order-constrained post-processing.
//!
//! Noised answers are put back into the pre-noise sort order and projected
//! onto the nondecreasing cone under squared error. The projection is the
//! pool-adjacent-violators fit; index `i` of the result equals
//! `min_{j≥i} max_{k≤i} mean(x[k..=j])`.

use crate::dataset::{Permutation, Provenance, QueryResponse};
use crate::error::{HutError, Result};

/// A pooled run `start..end` (exclusive) sharing one fitted value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Block {
    pub start: usize,
    pub end: usize,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IsotonicFit {
    pub input: Vec<f64>,
    pub output: Vec<f64>,
    pub blocks: Vec<Block>,
}

/// L2 isotonic regression (unit weights) by pool-adjacent-violators.
pub fn isotonic_l2(values: &[f64]) -> Result<IsotonicFit> {
    if values.is_empty() {
        return Err(HutError::Contract(
            "isotonic fit of an empty sequence".into(),
        ));
    }
    // (start, len, sum) per block; merge backwards while the last block's mean
    // is below its predecessor's
    let mut stack: Vec<(usize, usize, f64)> = Vec::with_capacity(values.len());
    for (i, &x) in values.iter().enumerate() {
        let mut cur = (i, 1usize, x);
        while let Some(&(start, len, sum)) = stack.last() {
            if sum * cur.1 as f64 <= cur.2 * len as f64 {
                break;
            }
            stack.pop();
            cur = (start, len + cur.1, sum + cur.2);
        }
        stack.push(cur);
    }
    let blocks: Vec<Block> = stack
        .into_iter()
        .map(|(start, len, sum)| Block {
            start,
            end: start + len,
            mean: sum / len as f64,
        })
        .collect();
    let mut output = Vec::with_capacity(values.len());
    for b in &blocks {
        output.extend(std::iter::repeat_n(b.mean, b.end - b.start));
    }
    Ok(IsotonicFit {
        input: values.to_vec(),
        output,
        blocks,
    })
}

/// Restores the pre-noise order of a noised response.
///
/// Reads only the noised values and the permutation recorded before noise was
/// added: permute into sorted position, fit, and permute back.
pub fn apply_order_constraint(resp: &QueryResponse, perm: &Permutation) -> Result<QueryResponse> {
    if resp.provenance != Provenance::Noised {
        return Err(HutError::Contract(format!(
            "order constraint expects a noised response, got {}",
            resp.provenance
        )));
    }
    if resp.len() != perm.len() {
        return Err(HutError::Contract(format!(
            "permutation has {} entries but response has {}",
            perm.len(),
            resp.len()
        )));
    }
    let in_order = perm.apply(&resp.values);
    let fit = isotonic_l2(&in_order)?;
    Ok(QueryResponse::new(
        perm.invert(&fit.output),
        Provenance::PostProcessed,
    ))
}
