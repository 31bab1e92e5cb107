//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature the maps below run on the rayon pool; without it
//! (or with [`Execution::Sequential`]) they are plain iterator maps. Output
//! order always matches input order.

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

pub fn map_indexed<T, F>(exec: Execution, len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return (0..len).into_par_iter().map(f).collect();
    }
    let _ = exec;
    (0..len).map(f).collect()
}

pub fn map_slice<S, T, F>(exec: Execution, items: &[S], f: F) -> Vec<T>
where
    S: Sync,
    T: Send,
    F: Fn(&S) -> T + Sync + Send,
{
    map_indexed(exec, items.len(), |i| f(&items[i]))
}

/// Runs `op` with at most `workers` rayon threads (0 = library default).
pub fn with_workers<R: Send>(workers: usize, op: impl FnOnce() -> R + Send) -> R {
    #[cfg(feature = "parallel")]
    if workers > 0 {
        if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
            return pool.install(op);
        }
    }
    let _ = workers;
    op()
}
