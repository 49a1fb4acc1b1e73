// SPDX-License-Identifier: Apache-2.0

//! Call counters and backend-internal timing.
//!
//! Internal time is accumulated per thread around the innermost call into a backend: the
//! transparent primitive, or the device command behind an opaque driver. Everything else a
//! call spends is API overhead.

use std::cell::Cell;
use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::{Duration, Instant};

thread_local! {
    static BACKEND_TIME: Cell<Duration> = const { Cell::new(Duration::ZERO) };
}

/// Runs `f` and charges its duration to the calling thread's backend-internal time.
pub fn measure_backend<T>(f: impl FnOnce() -> T) -> T {
    let start = Instant::now();
    let out = f();
    let elapsed = start.elapsed();
    BACKEND_TIME.with(|t| t.set(t.get() + elapsed));
    out
}

/// Clears the calling thread's backend-internal time.
pub fn reset_backend_time() {
    BACKEND_TIME.with(|t| t.set(Duration::ZERO));
}

/// Backend-internal time accumulated on this thread since the last reset.
pub fn backend_time() -> Duration {
    BACKEND_TIME.with(Cell::get)
}

/// Per-route invocation counters. Routes are fixed at initialization; the map itself is
/// never mutated afterwards.
#[derive(Debug, Default)]
pub struct CallCounters {
    counts: BTreeMap<String, AtomicU64>,
}

impl CallCounters {
    pub fn new(routes: impl IntoIterator<Item = String>) -> Self {
        CallCounters {
            counts: routes.into_iter().map(|r| (r, AtomicU64::new(0))).collect(),
        }
    }

    pub(crate) fn hit(&self, route: &str) {
        if let Some(c) = self.counts.get(route) {
            c.fetch_add(1, Ordering::Relaxed);
        }
    }

    pub fn get(&self, route: &str) -> u64 {
        self.counts
            .get(route)
            .map_or(0, |c| c.load(Ordering::Relaxed))
    }

    pub fn total(&self) -> u64 {
        self.counts.values().map(|c| c.load(Ordering::Relaxed)).sum()
    }

    pub fn snapshot(&self) -> BTreeMap<String, u64> {
        self.counts
            .iter()
            .map(|(k, v)| (k.clone(), v.load(Ordering::Relaxed)))
            .collect()
    }

    pub fn reset(&self) {
        for c in self.counts.values() {
            c.store(0, Ordering::Relaxed);
        }
    }
}

/// Counter name for the driver registered at a secure-element location.
pub fn se_route(location: crate::Location) -> String {
    format!("se:{}", location.value())
}
