//! Data-parallel execution with a sequential fallback.
//!
//! Heavy loops (rasters, residual sweeps) funnel through [`map_indexed`],
//! which uses the rayon thread pool when the `parallel` feature is on and
//! plain iteration otherwise.  The sequential path is always compiled as
//! [`map_indexed_seq`] so benchmarks can compare the two in one build.

/// Apply `f` to 0..n, parallelising when the `parallel` feature is active.
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        map_indexed_seq(n, f)
    }
}

/// The sequential implementation, available under every feature set.
pub fn map_indexed_seq<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}

/// Run `job` on a dedicated pool of `threads` workers (None = default
/// pool).  Without the `parallel` feature the job just runs inline.
pub fn with_thread_count<R, F>(threads: Option<usize>, job: F) -> R
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    #[cfg(feature = "parallel")]
    {
        match threads {
            Some(k) if k > 0 => match rayon::ThreadPoolBuilder::new().num_threads(k).build() {
                Ok(pool) => pool.install(job),
                Err(_) => job(),
            },
            _ => job(),
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        job()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_and_sequential_agree() {
        let a = map_indexed(1000, |i| i * i);
        let b = map_indexed_seq(1000, |i| i * i);
        assert_eq!(a, b);
    }

    #[test]
    fn thread_count_override_runs_the_job() {
        let out = with_thread_count(Some(2), || map_indexed(64, |i| i + 1));
        assert_eq!(out[63], 64);
    }
}
