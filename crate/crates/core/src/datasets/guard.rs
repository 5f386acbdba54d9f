//! Label vectors with an access counter, so a test can prove that a training
//! procedure never consulted them.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

/// Binary labels behind a read-counting accessor. Clones share the counter,
/// so reads through any copy of a dataset are all accounted for.
#[derive(Debug)]
pub struct GuardedLabels {
    y: Vec<u8>,
    reads: Arc<AtomicU64>,
}

impl Clone for GuardedLabels {
    fn clone(&self) -> Self {
        GuardedLabels { y: self.y.clone(), reads: Arc::clone(&self.reads) }
    }
}

impl GuardedLabels {
    pub fn new(y: Vec<u8>) -> Self {
        debug_assert!(y.iter().all(|&v| v <= 1), "labels must be binary");
        GuardedLabels { y, reads: Arc::new(AtomicU64::new(0)) }
    }

    /// The labels; every call increments the shared read counter.
    pub fn read(&self) -> &[u8] {
        self.reads.fetch_add(1, Ordering::Relaxed);
        &self.y
    }

    /// How many times `read` has been called across all clones.
    pub fn read_count(&self) -> u64 {
        self.reads.load(Ordering::Relaxed)
    }

    /// Length is not a label read.
    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }
}
