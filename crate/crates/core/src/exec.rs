//! Chunked execution of independent work items.
//!
//! Estimators split their paths into fixed-size chunks, evaluate each chunk
//! through an [`Executor`] and fold the results in chunk order. The chunk
//! boundaries depend only on the path count, never on the executor, so a
//! parallel run reproduces a sequential one bit for bit.

use alloc::vec::Vec;

/// Paths per chunk.
pub const CHUNK: usize = 256;

pub trait Executor: Sync {
    /// Evaluates `job(i)` for `i in 0..n` and returns the results in index order.
    fn map<T, F>(&self, n: usize, job: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send;
}

/// Runs everything on the calling thread.
#[derive(Clone, Copy, Debug, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn map<T, F>(&self, n: usize, job: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (0..n).map(job).collect()
    }
}

/// Ranges of path indices covered by each chunk.
pub fn chunks(n_paths: usize) -> impl Iterator<Item = core::ops::Range<usize>> + Clone {
    (0..n_paths.div_ceil(CHUNK)).map(move |c| c * CHUNK..((c + 1) * CHUNK).min(n_paths))
}

pub fn chunk_range(chunk: usize, n_paths: usize) -> core::ops::Range<usize> {
    chunk * CHUNK..((chunk + 1) * CHUNK).min(n_paths)
}

pub fn chunk_count(n_paths: usize) -> usize {
    n_paths.div_ceil(CHUNK)
}
