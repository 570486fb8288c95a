//! Report rows and their CSV, JSON Lines and gnuplot renderings.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};

pub const SCHEMA_VERSION: &str = "sembench-report/1";
/// First line of every CSV report.
pub const CSV_PREAMBLE: &str = "# sembench-report/1";

pub const FLAG_CACHE_EFFECT: &str = "cache_effect";
pub const FLAG_TIMER_OVERHEAD: &str = "timer_overhead";
pub const FLAG_PROBE_IN_CACHE: &str = "probe_in_cache";
pub const FLAG_PROBE_FAILED: &str = "probe_failed";

/// One benchmark run: a (size, variant) pair.
///
/// Column order is the CSV schema. Timing fields are seconds, flops and
/// bytes are per CG iteration, rates are giga-units per second.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerfRow {
    pub schema_version: String,
    /// `ok` or `error: <message>`.
    pub status: String,
    pub variant: String,
    pub elements: u64,
    pub ex: u64,
    pub ey: u64,
    pub ez: u64,
    pub degree: u64,
    pub n: u64,
    pub dofs: u64,
    pub iterations: u64,
    pub workers: u64,
    pub seed: u64,
    pub include_dssum: bool,
    pub flops_source: String,
    pub solve_seconds: f64,
    pub seconds_per_iteration: f64,
    pub ax_seconds: f64,
    pub dssum_seconds: f64,
    pub ax_dssum_seconds: f64,
    pub model_flops_per_iteration: u64,
    pub model_bytes_per_iteration: u64,
    pub model_read_bytes_per_iteration: u64,
    pub model_write_bytes_per_iteration: u64,
    pub instrumented_flops_per_iteration: u64,
    pub instrumented_read_words_per_iteration: u64,
    pub instrumented_write_words_per_iteration: u64,
    pub achieved_gflops: f64,
    pub measured_bandwidth_gbs: f64,
    pub roofline_peak_gflops: f64,
    pub roofline_fraction: f64,
    pub final_residual: f64,
    /// Always `optimistic`: the probe streams, the kernel does not.
    pub roofline_basis: String,
    /// `;`-separated flags, empty when none.
    pub flags: String,
}

impl PerfRow {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }

    pub fn has_flag(&self, flag: &str) -> bool {
        self.flags.split(';').any(|f| f == flag)
    }

    pub fn add_flag(&mut self, flag: &str) {
        if self.has_flag(flag) {
            return;
        }
        if !self.flags.is_empty() {
            self.flags.push(';');
        }
        self.flags.push_str(flag);
    }

    /// A row carrying only the identifying fields and the failure message.
    pub fn failed(variant: &str, elements: u64, message: &str) -> Self {
        Self {
            status: format!("error: {message}"),
            variant: variant.to_owned(),
            elements,
            ..Self::empty()
        }
    }

    fn empty() -> Self {
        Self {
            schema_version: SCHEMA_VERSION.to_owned(),
            status: "ok".to_owned(),
            variant: String::new(),
            elements: 0,
            ex: 0,
            ey: 0,
            ez: 0,
            degree: 0,
            n: 0,
            dofs: 0,
            iterations: 0,
            workers: 0,
            seed: 0,
            include_dssum: false,
            flops_source: String::new(),
            solve_seconds: 0.0,
            seconds_per_iteration: 0.0,
            ax_seconds: 0.0,
            dssum_seconds: 0.0,
            ax_dssum_seconds: 0.0,
            model_flops_per_iteration: 0,
            model_bytes_per_iteration: 0,
            model_read_bytes_per_iteration: 0,
            model_write_bytes_per_iteration: 0,
            instrumented_flops_per_iteration: 0,
            instrumented_read_words_per_iteration: 0,
            instrumented_write_words_per_iteration: 0,
            achieved_gflops: 0.0,
            measured_bandwidth_gbs: 0.0,
            roofline_peak_gflops: 0.0,
            roofline_fraction: 0.0,
            final_residual: 0.0,
            roofline_basis: "optimistic".to_owned(),
            flags: String::new(),
        }
    }

    /// Copy with every timing-dependent field zeroed, for determinism
    /// comparisons.
    pub fn without_timing(&self) -> Self {
        let mut r = self.clone();
        r.solve_seconds = 0.0;
        r.seconds_per_iteration = 0.0;
        r.ax_seconds = 0.0;
        r.dssum_seconds = 0.0;
        r.ax_dssum_seconds = 0.0;
        r.achieved_gflops = 0.0;
        r.measured_bandwidth_gbs = 0.0;
        r.roofline_peak_gflops = 0.0;
        r.roofline_fraction = 0.0;
        r.flags.clear();
        r
    }

    pub fn all_finite(&self) -> bool {
        [
            self.solve_seconds,
            self.seconds_per_iteration,
            self.ax_seconds,
            self.dssum_seconds,
            self.ax_dssum_seconds,
            self.achieved_gflops,
            self.measured_bandwidth_gbs,
            self.roofline_peak_gflops,
            self.roofline_fraction,
            self.final_residual,
        ]
        .iter()
        .all(|v| v.is_finite())
    }
}

impl Default for PerfRow {
    fn default() -> Self {
        Self::empty()
    }
}

/// Standalone probe result of `sembench roofline`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RooflineRow {
    pub schema_version: String,
    pub dofs: u64,
    pub n: u64,
    pub workers: u64,
    pub repetitions: u64,
    pub payload_bytes: u64,
    pub moved_bytes: u64,
    pub measured_bandwidth_gbs: f64,
    pub intensity: f64,
    pub roofline_peak_gflops: f64,
    pub roofline_basis: String,
    pub flags: String,
}

pub fn write_csv<T: Serialize>(rows: &[T], mut out: impl Write) -> Result<()> {
    writeln!(out, "{CSV_PREAMBLE}")?;
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<T: for<'de> Deserialize<'de>>(input: impl std::io::Read) -> Result<Vec<T>> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(input);
    r.deserialize().map(|row| row.map_err(BenchError::from)).collect()
}

/// One JSON object per line.
pub fn write_json_lines<T: Serialize>(rows: &[T], mut out: impl Write) -> Result<()> {
    for r in rows {
        serde_json::to_writer(&mut out, r)?;
        writeln!(out)?;
    }
    Ok(())
}

pub fn read_json_lines<T: for<'de> Deserialize<'de>>(input: impl BufRead) -> Result<Vec<T>> {
    let mut rows = Vec::new();
    for line in input.lines() {
        let line = line?;
        if !line.trim().is_empty() {
            rows.push(serde_json::from_str(&line)?);
        }
    }
    Ok(rows)
}

/// gnuplot data: one indexed block per variant with `E GFlop/s` pairs, then
/// a `roofline` block with the peak at each size.
pub fn write_gnuplot(rows: &[PerfRow], mut out: impl Write) -> Result<()> {
    writeln!(out, "# {SCHEMA_VERSION}")?;
    let mut by_variant: BTreeMap<&str, Vec<&PerfRow>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.is_ok()) {
        by_variant.entry(&r.variant).or_default().push(r);
    }
    for (variant, rows) in &by_variant {
        writeln!(out, "# variant {variant}\n# elements gflops")?;
        for r in rows {
            writeln!(out, "{} {}", r.elements, r.achieved_gflops)?;
        }
        writeln!(out, "\n")?;
    }
    let mut peaks: BTreeMap<u64, f64> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.is_ok()) {
        peaks.entry(r.elements).or_insert(r.roofline_peak_gflops);
    }
    writeln!(out, "# roofline\n# elements gflops")?;
    for (e, p) in peaks {
        writeln!(out, "{e} {p}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(variant: &str, e: u64) -> PerfRow {
        PerfRow {
            variant: variant.into(),
            elements: e,
            ex: 4,
            ey: 4,
            ez: 4,
            degree: 9,
            n: 10,
            dofs: e * 1000,
            iterations: 100,
            workers: 1,
            seed: 1,
            flops_source: "model".into(),
            solve_seconds: 0.125,
            seconds_per_iteration: 0.00125,
            ax_seconds: 0.1,
            dssum_seconds: 0.01,
            ax_dssum_seconds: 0.11,
            model_flops_per_iteration: 154 * e * 1000,
            achieved_gflops: 1.0 / 3.0,
            roofline_fraction: 0.1 + 0.2,
            final_residual: 1.234_567_890_123e-7,
            flags: "cache_effect".into(),
            ..PerfRow::default()
        }
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let rows = vec![
            sample("layered", 64),
            sample("scratch", 128),
            PerfRow::failed("reference", 4096, "out of memory, sorry"),
        ];
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# sembench-report/1\nschema_version,status,variant,elements,"));
        let back: Vec<PerfRow> = read_csv(&buf[..]).unwrap();
        assert_eq!(back, rows);
    }

    #[test]
    fn json_lines_round_trip() {
        let rows = vec![sample("layered", 64), sample("layered", 128)];
        let mut buf = Vec::new();
        write_json_lines(&rows, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap().lines().count(), 2);
        let back: Vec<PerfRow> = read_json_lines(&buf[..]).unwrap();
        assert_eq!(back, rows);
    }

    #[test]
    fn gnuplot_blocks() {
        let mut rows = vec![sample("layered", 64), sample("reference", 64), sample("layered", 128)];
        rows[0].roofline_peak_gflops = 5.0;
        let mut buf = Vec::new();
        write_gnuplot(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("# variant layered\n# elements gflops\n64 0.3333333333333333\n128 "));
        assert!(text.contains("# variant reference"));
        assert!(text.contains("# roofline\n# elements gflops\n64 5\n128 0\n"));
    }

    #[test]
    fn flags() {
        let mut r = PerfRow::default();
        assert!(!r.has_flag(FLAG_CACHE_EFFECT));
        r.add_flag(FLAG_CACHE_EFFECT);
        r.add_flag(FLAG_TIMER_OVERHEAD);
        r.add_flag(FLAG_CACHE_EFFECT);
        assert_eq!(r.flags, "cache_effect;timer_overhead");
        assert!(r.has_flag(FLAG_TIMER_OVERHEAD));
        assert!(!PerfRow::failed("layered", 1, "x").is_ok());
    }
}
