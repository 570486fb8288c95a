//! Streaming-copy bandwidth probe.
//!
//! The probe copies one buffer holding a full iteration's modelled payload
//! (`240 D` bytes) into another, once per repetition. Each repetition counts
//! both the read and the write stream, i.e. twice the payload. Two warm-up
//! copies are discarded (first-touch page faults); the median of the
//! per-repetition rates is reported.
//!
//! The copy does not replay the solver's access pattern, so the roofline
//! built from it is an optimistic bound.

use std::hint::black_box;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use sem_core::perf_model::{BYTES_PER_POINT, BYTES_PER_WORD};

use crate::error::{BenchError, Result};
use crate::parallel::Executor;

pub const MIN_REPETITIONS: usize = 10;
pub const WARMUP_REPETITIONS: usize = 2;
/// Total timed copy time below this cannot be trusted.
pub const MIN_TOTAL_ELAPSED: Duration = Duration::from_millis(1);

const COPY_CHUNK_WORDS: usize = 64 * 1024;

#[derive(Debug, Clone, PartialEq)]
pub struct BandwidthMeasurement {
    pub dofs: u64,
    /// Model bytes per iteration, `240 D`.
    pub payload_bytes: u64,
    /// Bytes counted per repetition: read plus write stream.
    pub moved_bytes: u64,
    pub repetitions: usize,
    pub workers: usize,
    /// Median rate, bytes per second.
    pub bytes_per_second: f64,
    /// Per-repetition rates, in measurement order.
    pub samples: Vec<f64>,
    /// Last-level cache size if the platform exposes it.
    pub last_level_cache: Option<u64>,
}

impl BandwidthMeasurement {
    /// Whether source and destination together outgrow the last-level cache.
    /// Unknown cache size counts as exceeding.
    pub fn exceeds_cache(&self) -> bool {
        self.last_level_cache.is_none_or(|llc| 2 * self.payload_bytes > llc)
    }

    pub fn gigabytes_per_second(&self) -> f64 {
        self.bytes_per_second / 1e9
    }
}

/// Payload and counted bytes of one repetition for `dofs` local points.
pub fn probe_bytes(dofs: u64) -> (u64, u64) {
    let payload = BYTES_PER_POINT * dofs;
    (payload, 2 * payload)
}

pub fn measure_bandwidth(dofs: u64, repetitions: usize, exec: &Executor) -> Result<BandwidthMeasurement> {
    if dofs == 0 {
        return Err(BenchError::Config("bandwidth probe needs at least one point".into()));
    }
    if repetitions < MIN_REPETITIONS {
        return Err(BenchError::Config(format!(
            "bandwidth probe needs at least {MIN_REPETITIONS} repetitions, got {repetitions}"
        )));
    }
    let (payload, moved) = probe_bytes(dofs);
    let words = usize::try_from(payload / BYTES_PER_WORD)
        .map_err(|_| BenchError::Resource("probe buffer does not fit in memory".into()))?;
    let src = try_alloc(words, 1.0)?;
    let mut dst = try_alloc(words, 0.0)?;

    let mut copy = || {
        let start = Instant::now();
        exec.install(|| {
            dst.par_chunks_mut(COPY_CHUNK_WORDS)
                .zip(src.par_chunks(COPY_CHUNK_WORDS))
                .for_each(|(d, s)| d.copy_from_slice(s))
        });
        black_box(&mut dst);
        start.elapsed()
    };
    let rate = |elapsed: Duration| moved as f64 / elapsed.as_secs_f64().max(1e-12);

    for _ in 0..WARMUP_REPETITIONS {
        copy();
    }

    let mut samples = Vec::with_capacity(repetitions);
    let mut timed = Duration::ZERO;
    for _ in 0..repetitions {
        let elapsed = copy();
        timed += elapsed;
        samples.push(rate(elapsed));
    }
    if timed < MIN_TOTAL_ELAPSED {
        return Err(BenchError::Resource(format!(
            "probe finished in {timed:?}, below timer resolution; use more points or repetitions"
        )));
    }

    Ok(BandwidthMeasurement {
        dofs,
        payload_bytes: payload,
        moved_bytes: moved,
        repetitions,
        workers: exec.workers(),
        bytes_per_second: median(&samples),
        samples,
        last_level_cache: last_level_cache(),
    })
}

fn try_alloc(words: usize, value: f64) -> Result<Vec<f64>> {
    let mut v = Vec::new();
    v.try_reserve_exact(words)
        .map_err(|e| BenchError::Resource(format!("cannot allocate {} bytes: {e}", words * 8)))?;
    v.resize(words, value);
    Ok(v)
}

pub fn median(samples: &[f64]) -> f64 {
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let m = s.len() / 2;
    if s.len() % 2 == 1 {
        s[m]
    } else {
        0.5 * (s[m - 1] + s[m])
    }
}

/// Largest data or unified cache reported under sysfs, in bytes.
pub fn last_level_cache() -> Option<u64> {
    let dir = std::fs::read_dir("/sys/devices/system/cpu/cpu0/cache").ok()?;
    dir.filter_map(|entry| {
        let path = entry.ok()?.path();
        let kind = std::fs::read_to_string(path.join("type")).ok()?;
        if kind.trim() == "Instruction" {
            return None;
        }
        parse_cache_size(&std::fs::read_to_string(path.join("size")).ok()?)
    })
    .max()
}

fn parse_cache_size(s: &str) -> Option<u64> {
    let s = s.trim();
    let (digits, scale) = match s.chars().last()? {
        'K' => (&s[..s.len() - 1], 1024),
        'M' => (&s[..s.len() - 1], 1024 * 1024),
        'G' => (&s[..s.len() - 1], 1024 * 1024 * 1024),
        _ => (s, 1),
    };
    digits.parse::<u64>().ok().map(|v| v * scale)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn byte_accounting() {
        assert_eq!(probe_bytes(64_000), (15_360_000, 30_720_000));
        assert_eq!(probe_bytes(1), (240, 480));
    }

    #[test]
    fn small_probe_is_positive() {
        let exec = Executor::new(1).unwrap();
        let m = measure_bandwidth(64_000, 10, &exec).unwrap();
        assert!(m.bytes_per_second.is_finite() && m.bytes_per_second > 0.0);
        assert_eq!(m.samples.len(), 10);
        assert_eq!(m.moved_bytes, 30_720_000);
    }

    #[test]
    fn rejects_bad_arguments() {
        let exec = Executor::new(1).unwrap();
        assert!(matches!(measure_bandwidth(1000, 9, &exec), Err(BenchError::Config(_))));
        assert!(matches!(measure_bandwidth(0, 10, &exec), Err(BenchError::Config(_))));
    }

    #[test]
    fn median_and_cache_parsing() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert_eq!(parse_cache_size("32768K\n"), Some(32 * 1024 * 1024));
        assert_eq!(parse_cache_size("2M"), Some(2 * 1024 * 1024));
        assert_eq!(parse_cache_size("512"), Some(512));
        assert_eq!(parse_cache_size("x"), None);
    }
}
