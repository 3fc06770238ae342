//! Work distribution seam. The core only ships a serial executor; the
//! `ordlab` crate adds a thread pool. Results always come back in job
//! order, so callers never observe scheduling.

use alloc::vec::Vec;

pub trait Executor: Sync {
    fn workers(&self) -> usize;

    /// Runs `job(0..count)` and returns the results in index order.
    fn map<T, F>(&self, count: usize, job: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Serial;

impl Executor for Serial {
    fn workers(&self) -> usize {
        1
    }

    fn map<T, F>(&self, count: usize, job: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync,
    {
        (0..count).map(job).collect()
    }
}
