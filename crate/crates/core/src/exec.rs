//! Sequential or data-parallel execution of row-wise loops.

/// How heavy loops are scheduled.
///
/// `Parallel` uses rayon when the `parallel` feature is compiled in and
/// silently runs sequentially otherwise. Work is always split on row
/// boundaries and every output element is computed by exactly one closure
/// call, so results never depend on the mode.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    /// Whether this mode will actually fan out across threads.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

/// Calls `f(row_index, row)` for each `width`-long chunk of `data`.
pub(crate) fn for_each_row<T, F>(exec: Execution, data: &mut [T], width: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Send + Sync,
{
    if width == 0 {
        return;
    }
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        data.par_chunks_mut(width)
            .enumerate()
            .for_each(|(y, row)| f(y, row));
        return;
    }
    let _ = exec;
    for (y, row) in data.chunks_mut(width).enumerate() {
        f(y, row);
    }
}

/// Maps `f` over `0..n`, preserving index order in the output.
pub(crate) fn map_indices<R, F>(exec: Execution, n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Send + Sync,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = exec;
    (0..n).map(f).collect()
}
