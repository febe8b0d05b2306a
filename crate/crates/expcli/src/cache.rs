use std::sync::atomic::{AtomicUsize, Ordering};

use ignition_core::cache::{ClassificationCache, DiskCache};
use ignition_core::periodic_solver::LimitClassification;

/// Wraps an optional disk cache and counts lookups and stores, so that a
/// run can report how much it simulated.
pub struct CountingCache {
    inner: Option<DiskCache>,
    lookups: AtomicUsize,
    hits: AtomicUsize,
    stores: AtomicUsize,
}

impl CountingCache {
    pub fn new(inner: Option<DiskCache>) -> Self {
        CountingCache { inner, lookups: AtomicUsize::new(0), hits: AtomicUsize::new(0), stores: AtomicUsize::new(0) }
    }

    pub fn enabled(&self) -> bool {
        self.inner.is_some()
    }

    pub fn lookups(&self) -> usize {
        self.lookups.load(Ordering::Relaxed)
    }

    pub fn stores(&self) -> usize {
        self.stores.load(Ordering::Relaxed)
    }
}

impl ClassificationCache for CountingCache {
    fn get(&self, key: &str) -> Option<LimitClassification> {
        self.lookups.fetch_add(1, Ordering::Relaxed);
        let hit = self.inner.as_ref().and_then(|c| c.get(key));
        if hit.is_some() {
            self.hits.fetch_add(1, Ordering::Relaxed);
        }
        hit
    }

    fn put(&self, key: &str, value: &LimitClassification) -> ignition_core::Result<()> {
        self.stores.fetch_add(1, Ordering::Relaxed);
        match &self.inner {
            Some(c) => c.put(key, value),
            None => Ok(()),
        }
    }

    fn hits(&self) -> usize {
        self.hits.load(Ordering::Relaxed)
    }
}
