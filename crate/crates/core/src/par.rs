//! Switch between rayon and sequential evaluation.
//!
//! Every parallel kernel in the crate funnels through [`map_indexed`] so that
//! the two paths compute exactly the same floating point operations in the
//! same order per element; results are therefore bitwise independent of the
//! thread count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::Serialize;

/// Execution strategy for data-parallel kernels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum Execution {
    #[default]
    Parallel,
    Sequential,
}

impl Execution {
    /// `Parallel` degrades to sequential when the crate is built without the
    /// `parallel` feature.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

// below this many elements thread dispatch costs more than it saves
#[cfg(feature = "parallel")]
const MIN_PARALLEL_LEN: usize = 2048;

pub fn map_indexed<T, F>(exec: Execution, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() && n >= MIN_PARALLEL_LEN {
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = exec;
    (0..n).map(f).collect()
}

/// Like [`map_indexed`] without the size cutoff, for coarse tasks
/// (whole simulations, random trials).
pub fn map_tasks<T, F>(exec: Execution, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = exec;
    (0..n).map(f).collect()
}

pub fn max_abs(exec: Execution, values: &[f64]) -> f64 {
    #[cfg(feature = "parallel")]
    if exec.is_parallel() && values.len() >= MIN_PARALLEL_LEN {
        return values.par_iter().map(|v| v.abs()).reduce(|| 0.0, f64::max);
    }
    let _ = exec;
    values.iter().fold(0.0, |m, v| m.max(v.abs()))
}
