//! Data-parallel map over independent work items.
//!
//! With the `parallel` feature (on by default) work is spread over a rayon
//! pool; without it, or when a single worker is requested, the same closure
//! runs sequentially. Results always come back in index order, so callers
//! that derive their randomness from the item index get identical output for
//! any worker count.

use serde::{Deserialize, Serialize};

/// How many threads to use for replication-level parallelism.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Workers {
    /// Use rayon's global pool (all cores).
    #[default]
    Auto,
    /// Use exactly this many threads; `Fixed(1)` is the sequential path.
    Fixed(usize),
}

impl Workers {
    pub fn from_count(count: Option<usize>) -> Self {
        match count {
            None | Some(0) => Workers::Auto,
            Some(w) => Workers::Fixed(w),
        }
    }

    pub fn is_sequential(self) -> bool {
        matches!(self, Workers::Fixed(1)) || !cfg!(feature = "parallel")
    }
}

/// Evaluate `f(0), f(1), …, f(len - 1)` and return the results in order.
pub fn map_indexed<T, F>(len: usize, workers: Workers, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    if workers.is_sequential() || len < 2 {
        return (0..len).map(f).collect();
    }
    parallel_map(len, workers, f)
}

#[cfg(feature = "parallel")]
fn parallel_map<T, F>(len: usize, workers: Workers, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    match workers {
        Workers::Auto => (0..len).into_par_iter().map(f).collect(),
        Workers::Fixed(w) => match rayon::ThreadPoolBuilder::new().num_threads(w).build() {
            Ok(pool) => pool.install(|| (0..len).into_par_iter().map(&f).collect()),
            Err(_) => (0..len).map(f).collect(),
        },
    }
}

#[cfg(not(feature = "parallel"))]
fn parallel_map<T, F>(len: usize, _workers: Workers, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..len).map(f).collect()
}

/// Fill `out[i] = f(i)` for every slot, in parallel when the slice is large.
pub(crate) fn fill_indexed<F>(out: &mut [f64], min_parallel: usize, f: F)
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if out.len() >= min_parallel {
        use rayon::prelude::*;
        out.par_iter_mut().enumerate().for_each(|(i, v)| *v = f(i));
        return;
    }
    let _ = min_parallel;
    for (i, v) in out.iter_mut().enumerate() {
        *v = f(i);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved_for_any_worker_count() {
        let seq = map_indexed(1000, Workers::Fixed(1), |i| i * i);
        let par = map_indexed(1000, Workers::Fixed(4), |i| i * i);
        let auto = map_indexed(1000, Workers::Auto, |i| i * i);
        assert_eq!(seq, par);
        assert_eq!(seq, auto);
    }

    #[test]
    fn fill_matches_sequential() {
        let mut a = vec![0.0; 5000];
        let mut b = vec![0.0; 5000];
        fill_indexed(&mut a, 1, |i| (i as f64).sqrt());
        fill_indexed(&mut b, usize::MAX, |i| (i as f64).sqrt());
        assert_eq!(a, b);
    }
}
