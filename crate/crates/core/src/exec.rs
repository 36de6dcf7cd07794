//! Data-parallel helpers with a sequential fallback.

use serde::{Deserialize, Serialize};

/// How independent work items (replicates, chains, seasons) are evaluated.
///
/// Without the `parallel` feature both variants run sequentially.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Execution {
    #[default]
    Parallel,
    Sequential,
}

impl Execution {
    /// Evaluates `f(0..n)` and returns the results in index order.
    pub fn map_range<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Execution::Parallel => {
                use rayon::prelude::*;
                (0..n).into_par_iter().map(f).collect()
            }
            _ => (0..n).map(f).collect(),
        }
    }

    /// Maps `f` over a slice, preserving order.
    pub fn map_slice<'a, S, T, F>(self, items: &'a [S], f: F) -> Vec<T>
    where
        S: Sync,
        T: Send,
        F: Fn(&'a S) -> T + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Execution::Parallel => {
                use rayon::prelude::*;
                items.par_iter().map(f).collect()
            }
            _ => items.iter().map(f).collect(),
        }
    }

    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

/// Configures the global rayon pool. `None` or `Some(0)` keeps rayon's default.
///
/// Returns `false` if the pool was already initialised or the crate was built
/// without the `parallel` feature.
pub fn configure_threads(threads: Option<usize>) -> bool {
    #[cfg(feature = "parallel")]
    {
        let n = threads.unwrap_or(0);
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .is_ok()
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_modes_preserve_order() {
        let par = Execution::Parallel.map_range(100, |i| i * i);
        let seq = Execution::Sequential.map_range(100, |i| i * i);
        assert_eq!(par, seq);
        let items = vec![3, 1, 2];
        assert_eq!(Execution::Parallel.map_slice(&items, |x| x + 1), vec![4, 2, 3]);
    }
}
