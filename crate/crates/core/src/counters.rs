//! Flop and main-memory word counters.
//!
//! "Main memory" means full-size arrays (one word per local degree of
//! freedom, or six for the geometric factors). Element-sized scratch and the
//! `n x n` differentiation matrix are not counted. Counts are algorithmic:
//! one read per word per pass, not per cache line.

use core::ops::{Add, Sub};
use core::sync::atomic::{AtomicU64, Ordering};

/// Shared counters. Increments are relaxed atomic adds of exact integers, so
/// totals do not depend on how work was scheduled across threads.
#[derive(Debug, Default)]
pub struct TrafficCounters {
    reads: AtomicU64,
    writes: AtomicU64,
    flops: AtomicU64,
}

impl TrafficCounters {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add_reads(&self, words: u64) {
        self.reads.fetch_add(words, Ordering::Relaxed);
    }

    #[inline]
    pub fn add_writes(&self, words: u64) {
        self.writes.fetch_add(words, Ordering::Relaxed);
    }

    #[inline]
    pub fn add_flops(&self, flops: u64) {
        self.flops.fetch_add(flops, Ordering::Relaxed);
    }

    pub fn add(&self, s: TrafficSnapshot) {
        self.add_reads(s.main_memory_reads);
        self.add_writes(s.main_memory_writes);
        self.add_flops(s.flops);
    }

    pub fn snapshot(&self) -> TrafficSnapshot {
        TrafficSnapshot {
            main_memory_reads: self.reads.load(Ordering::Relaxed),
            main_memory_writes: self.writes.load(Ordering::Relaxed),
            flops: self.flops.load(Ordering::Relaxed),
        }
    }

    pub fn reset(&self) {
        self.reads.store(0, Ordering::Relaxed);
        self.writes.store(0, Ordering::Relaxed);
        self.flops.store(0, Ordering::Relaxed);
    }
}

/// Point-in-time copy of [`TrafficCounters`]; differences of snapshots give
/// per-phase counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TrafficSnapshot {
    /// 8-byte words read from full-size arrays.
    pub main_memory_reads: u64,
    /// 8-byte words written to full-size arrays.
    pub main_memory_writes: u64,
    /// Multiplies and adds, each counted once.
    pub flops: u64,
}

impl Add for TrafficSnapshot {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        Self {
            main_memory_reads: self.main_memory_reads + rhs.main_memory_reads,
            main_memory_writes: self.main_memory_writes + rhs.main_memory_writes,
            flops: self.flops + rhs.flops,
        }
    }
}

impl Sub for TrafficSnapshot {
    type Output = Self;

    fn sub(self, rhs: Self) -> Self {
        Self {
            main_memory_reads: self.main_memory_reads - rhs.main_memory_reads,
            main_memory_writes: self.main_memory_writes - rhs.main_memory_writes,
            flops: self.flops - rhs.flops,
        }
    }
}
