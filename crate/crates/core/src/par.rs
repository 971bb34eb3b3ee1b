//! Per-agent fan-out with an optional rayon backend.

/// How per-agent work inside a round is scheduled.
///
/// Results never depend on the choice: each agent writes only its own slot
/// and all reductions run afterwards in agent order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    /// Rayon's global (or currently installed) pool. Falls back to
    /// sequential when the `parallel` feature is off.
    #[default]
    Parallel,
}

pub(crate) fn map_mut<T, R, F>(exec: Execution, items: &mut [T], f: F) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(usize, &mut T) -> R + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            items.par_iter_mut().enumerate().map(|(i, t)| f(i, t)).collect()
        }
        _ => items.iter_mut().enumerate().map(|(i, t)| f(i, t)).collect(),
    }
}

/// Runs `f` on a dedicated pool of `threads` workers (0 = rayon default).
#[cfg(feature = "parallel")]
pub fn with_threads<R: Send>(threads: usize, f: impl FnOnce() -> R + Send) -> R {
    if threads == 0 {
        return f();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}

#[cfg(not(feature = "parallel"))]
pub fn with_threads<R: Send>(_threads: usize, f: impl FnOnce() -> R + Send) -> R {
    f()
}
