//! Sequential / data-parallel execution switch.
//!
//! Every sharded stage takes an [`Exec`]. Both variants produce identical
//! results; `Parallel` only changes how the per-item work is scheduled. When
//! the crate is built without the `parallel` feature, `Parallel` runs on the
//! calling thread.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Exec {
    Sequential,
    #[default]
    Parallel,
}

impl Exec {
    /// True when work will actually be spread over worker threads.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }

    /// Order-preserving map.
    pub fn map<T, U, F>(self, items: &[T], f: F) -> Vec<U>
    where
        T: Sync,
        U: Send,
        F: Fn(&T) -> U + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == Exec::Parallel {
            return items.par_iter().map(f).collect();
        }
        items.iter().map(f).collect()
    }

    /// Order-preserving map over an index range.
    pub fn map_range<U, F>(self, range: std::ops::Range<usize>, f: F) -> Vec<U>
    where
        U: Send,
        F: Fn(usize) -> U + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == Exec::Parallel {
            return range.into_par_iter().map(f).collect();
        }
        range.map(f).collect()
    }

    /// Maps fixed-size chunks and folds the partial results left to right, so
    /// a non-commutative but associative `merge` still gives the sequential
    /// answer.
    pub fn chunked_fold<T, A, F, M>(self, items: &[T], chunk: usize, init: A, f: F, merge: M) -> A
    where
        T: Sync,
        A: Send,
        F: Fn(&[T]) -> A + Sync + Send,
        M: Fn(A, A) -> A,
    {
        let chunk = chunk.max(1);
        let chunks: Vec<&[T]> = items.chunks(chunk).collect();
        let partials = self.map(&chunks, |c| f(c));
        partials.into_iter().fold(init, merge)
    }
}
