//! Execution mode for data-parallel loops.
//!
//! Every parallel loop in this crate maps independent work items (rows of a
//! pairwise sum, seeds of a sweep) to values and then folds those values
//! sequentially in index order. The per-item work is itself sequential, so
//! both modes produce bit-identical results; the mode only changes wall time.

#[cfg(feature = "parallel")]
use std::sync::Arc;

/// Environment variable capping internal parallelism. Unset means sequential.
pub const THREADS_ENV: &str = "MC_THREADS";

#[derive(Clone, Default)]
pub struct Execution {
    #[cfg(feature = "parallel")]
    pool: Option<Arc<rayon::ThreadPool>>,
}

impl std::fmt::Debug for Execution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Execution({} threads)", self.threads())
    }
}

impl Execution {
    pub fn sequential() -> Self {
        Self::default()
    }

    /// A pool of `threads` workers. Without the `parallel` feature, or with
    /// `threads <= 1`, this is the sequential mode.
    pub fn parallel(threads: usize) -> Self {
        #[cfg(feature = "parallel")]
        {
            if threads > 1 {
                if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
                    return Self {
                        pool: Some(Arc::new(pool)),
                    };
                }
            }
        }
        let _ = threads;
        Self::sequential()
    }

    /// Reads [`THREADS_ENV`]. Unset, empty, unparsable or `<= 1` all mean
    /// sequential; `0` is treated as "one per core".
    pub fn from_env() -> Self {
        match std::env::var(THREADS_ENV)
            .ok()
            .map(|s| s.trim().parse::<usize>())
        {
            Some(Ok(0)) => Self::parallel(
                std::thread::available_parallelism()
                    .map(|n| n.get())
                    .unwrap_or(1),
            ),
            Some(Ok(n)) => Self::parallel(n),
            _ => Self::sequential(),
        }
    }

    pub fn threads(&self) -> usize {
        #[cfg(feature = "parallel")]
        if let Some(pool) = &self.pool {
            return pool.current_num_threads();
        }
        1
    }

    pub fn is_parallel(&self) -> bool {
        self.threads() > 1
    }

    /// `(0..n).map(f).collect()`, possibly evaluated across the pool. Output
    /// order is always index order.
    pub fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if let Some(pool) = &self.pool {
            use rayon::prelude::*;
            return pool.install(|| (0..n).into_par_iter().map(f).collect());
        }
        (0..n).map(f).collect()
    }
}
