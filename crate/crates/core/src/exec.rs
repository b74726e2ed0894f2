//! Data-parallel helpers.
//!
//! Trials, sweep cells and k-means restarts are independent units of work with
//! their own RNG streams, so they can be mapped in any order. With the
//! `parallel` feature (on by default) they run on the rayon pool; without it,
//! or with [`ExecMode::Sequential`], they run on the calling thread. Results
//! always come back in input order.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExecMode {
    Sequential,
    /// Falls back to sequential when built without the `parallel` feature.
    #[default]
    Parallel,
}

impl ExecMode {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == ExecMode::Parallel
    }
}

/// Maps `f` over `0..n`, returning results in index order.
pub fn map_indices<T, F>(mode: ExecMode, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if mode.is_parallel() {
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = mode;
    (0..n).map(f).collect()
}

/// Maps `f` over a slice, returning results in slice order.
pub fn map_slice<S, T, F>(mode: ExecMode, items: &[S], f: F) -> Vec<T>
where
    S: Sync,
    T: Send,
    F: Fn(&S) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if mode.is_parallel() {
        return items.par_iter().map(f).collect();
    }
    let _ = mode;
    items.iter().map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_modes_preserve_order() {
        let seq = map_indices(ExecMode::Sequential, 1000, |i| i * i);
        let par = map_indices(ExecMode::Parallel, 1000, |i| i * i);
        assert_eq!(seq, par);
        let items: Vec<u32> = (0..100).collect();
        assert_eq!(
            map_slice(ExecMode::Parallel, &items, |x| x + 1),
            map_slice(ExecMode::Sequential, &items, |x| x + 1)
        );
    }
}
