//! Execution policy for the data-parallel loops.
//!
//! With the `parallel` feature the loops run on the rayon pool; without it
//! [`Exec::Parallel`] silently degrades to the sequential path. Every helper
//! here returns results in index order, so outputs do not depend on the policy.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Whether a hot loop may fan out across threads.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Exec {
    Sequential,
    #[default]
    Parallel,
}

impl Exec {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }

    /// `(0..n).map(f).collect()`, in index order.
    pub fn map_range<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            return (0..n).into_par_iter().map(f).collect();
        }
        (0..n).map(f).collect()
    }

    /// Like [`Exec::map_range`] for fallible maps; any failing element aborts the loop.
    pub fn try_map_range<T, E, F>(self, n: usize, f: F) -> Result<Vec<T>, E>
    where
        T: Send,
        E: Send,
        F: Fn(usize) -> Result<T, E> + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            return (0..n).into_par_iter().map(f).collect();
        }
        (0..n).map(f).collect()
    }

    /// Smallest `i` in `range` with `pred(i)`.
    pub fn find_first<F>(self, range: std::ops::Range<u64>, pred: F) -> Option<u64>
    where
        F: Fn(u64) -> bool + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            return range.into_par_iter().find_first(|&i| pred(i));
        }
        range.into_iter().find(|&i| pred(i))
    }

    /// `f(i)` for the smallest `i` in `range` where it is `Some`.
    pub fn find_map_first<T, F>(self, range: std::ops::Range<u64>, f: F) -> Option<T>
    where
        T: Send,
        F: Fn(u64) -> Option<T> + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            return range.into_par_iter().find_map_first(f);
        }
        range.into_iter().find_map(f)
    }
}
