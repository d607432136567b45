//! Order-preserving fan-out over independent jobs.
//!
//! With the `parallel` feature (on by default) jobs run on a dedicated rayon
//! pool; without it, or with [`Execution::Sequential`], they run in order on
//! the calling thread. Results come back in input order either way, so the
//! choice never changes outputs.

/// How independent jobs are scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    #[default]
    Sequential,
    Parallel { workers: usize },
}

impl Execution {
    /// `Parallel` with `workers` threads, or `Sequential` for `workers <= 1`.
    pub fn with_workers(workers: usize) -> Self {
        if workers <= 1 {
            Execution::Sequential
        } else {
            Execution::Parallel { workers }
        }
    }

    pub fn workers(&self) -> usize {
        match self {
            Execution::Sequential => 1,
            Execution::Parallel { workers } => *workers,
        }
    }

    /// Applies `f` to every item. Items are split into `workers` contiguous
    /// chunks up front and each worker walks its chunk in order.
    pub fn map<T, R, F>(&self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync,
    {
        match self {
            Execution::Sequential => items.iter().map(f).collect(),
            Execution::Parallel { workers } => parallel_map(*workers, items, f),
        }
    }
}

#[cfg(feature = "parallel")]
fn parallel_map<T, R, F>(workers: usize, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync,
{
    use rayon::prelude::*;

    if items.is_empty() {
        return Vec::new();
    }
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool,
        Err(_) => return items.iter().map(f).collect(),
    };
    let chunk = items.len().div_ceil(workers.max(1));
    pool.install(|| {
        items
            .par_chunks(chunk)
            .map(|c| c.iter().map(&f).collect::<Vec<_>>())
            .collect::<Vec<_>>()
            .into_iter()
            .flatten()
            .collect()
    })
}

#[cfg(not(feature = "parallel"))]
fn parallel_map<T, R, F>(_workers: usize, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync,
{
    items.iter().map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn results_keep_input_order() {
        let items: Vec<u64> = (0..103).collect();
        let seq = Execution::Sequential.map(&items, |x| x * x);
        for w in [2, 3, 8, 200] {
            assert_eq!(Execution::with_workers(w).map(&items, |x| x * x), seq);
        }
    }
}
