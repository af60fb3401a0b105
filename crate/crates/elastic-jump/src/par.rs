//! Rayon-backed executor.

use elastic_jump_core::exec::Executor;
use rayon::prelude::*;

/// Spreads chunks over the global rayon pool. Results come back in index
/// order, so estimates match [`elastic_jump_core::exec::Sequential`] bit for bit.
#[derive(Clone, Copy, Debug, Default)]
pub struct Parallel;

impl Executor for Parallel {
    fn map<T, F>(&self, n: usize, job: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (0..n).into_par_iter().map(job).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use elastic_jump_core::exec::Sequential;

    #[test]
    fn matches_sequential() {
        let f = |i: usize| (i as f64).sqrt().sin();
        assert_eq!(Parallel.map(1000, f), Sequential.map(1000, f));
    }
}
