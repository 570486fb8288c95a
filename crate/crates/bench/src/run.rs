//! The `bench`, `sweep` and `roofline` commands.

use std::time::{Duration, Instant};

use sem_core::cg::{cg_solve_with, CgResult};
use sem_core::perf_model::{self, evaluate_roofline, CostModel};
use sem_core::rng::random_masked_field;
use sem_core::{
    build_basis, build_geom, build_mesh, CgConfig, KernelVariant, Topology, TrafficCounters, TrafficSnapshot,
};

use crate::config::{factor_box, BenchConfig, FlopsSource};
use crate::error::{BenchError, Result};
use crate::parallel::{Executor, ParallelOps, TimedOperator};
use crate::probe::{measure_bandwidth, BandwidthMeasurement};
use crate::report::{
    PerfRow, RooflineRow, FLAG_CACHE_EFFECT, FLAG_PROBE_FAILED, FLAG_PROBE_IN_CACHE, FLAG_TIMER_OVERHEAD,
    SCHEMA_VERSION,
};

/// Timer overhead above this share of the AX time flags the row.
pub const TIMER_OVERHEAD_LIMIT: f64 = 0.01;

/// Upper estimate of resident words per local point during a run: geometry
/// (6), six CG and operator fields, six reference intermediates, topology
/// arrays and slack.
const RESIDENT_WORDS_PER_POINT: u64 = 24;

pub fn points_per_element(cfg: &BenchConfig) -> u64 {
    let n = cfg.n() as u64;
    n * n * n
}

/// Runs one (size, variant) case. A bandwidth measurement fills the
/// roofline columns; without one they stay zero and the row is flagged.
pub fn run_case(
    cfg: &BenchConfig,
    elements: usize,
    variant: KernelVariant,
    exec: &Executor,
    bandwidth: Option<&BandwidthMeasurement>,
) -> Result<PerfRow> {
    let (ex, ey, ez) = factor_box(elements)?;
    let n = cfg.n();
    let h = 1.0 / ex.max(ey).max(ez) as f64;
    let dofs = elements as u64 * points_per_element(cfg);
    check_memory(RESIDENT_WORDS_PER_POINT * 8 * dofs)?;

    let mesh = build_mesh(ex, ey, ez, n, h)?;
    let basis = build_basis(n)?;
    let geom = build_geom(&mesh, &basis)?;
    let topo = Topology::new(&mesh);
    let rhs = random_masked_field(&topo, cfg.seed);
    let mut op = TimedOperator::new(&basis, &geom, &topo, variant)?;

    let solve = |op: &mut TimedOperator<'_>, iterations: usize| -> Result<(CgResult, Duration)> {
        let cfg = CgConfig::fixed(iterations)?;
        let counters = TrafficCounters::new();
        exec.install(|| {
            let start = Instant::now();
            let res = cg_solve_with(&rhs, op, &topo, &cfg, &ParallelOps, &counters, |_| {})?;
            Ok((res, start.elapsed()))
        })
    };

    if cfg.warmup_iterations > 0 {
        solve(&mut op, cfg.warmup_iterations)?;
    }
    op.reset_times();
    let (res, elapsed) = solve(&mut op, cfg.iterations)?;
    let times = op.times();

    let iterations = res.iterations_run as u64;
    let per_iteration = mean_iteration(&res.iteration_counters);
    let model = CostModel::new(dofs, n as u64)?;
    let solve_seconds = elapsed.as_secs_f64();
    let ax_seconds = times.ax.as_secs_f64();
    let dssum_seconds = times.dssum.as_secs_f64();
    let timed_seconds = if cfg.include_dssum {
        solve_seconds
    } else {
        (solve_seconds - dssum_seconds).max(f64::MIN_POSITIVE)
    };
    let flops_per_iteration = match cfg.flops_source {
        FlopsSource::Model => model.flops_per_iteration(),
        FlopsSource::Instrumented => per_iteration.flops,
    };
    let run_flops = flops_per_iteration * iterations;

    let mut row = PerfRow {
        variant: variant.name().to_owned(),
        elements: elements as u64,
        ex: ex as u64,
        ey: ey as u64,
        ez: ez as u64,
        degree: cfg.degree as u64,
        n: n as u64,
        dofs,
        iterations,
        workers: exec.workers() as u64,
        seed: cfg.seed,
        include_dssum: cfg.include_dssum,
        flops_source: cfg.flops_source.name().to_owned(),
        solve_seconds,
        seconds_per_iteration: solve_seconds / iterations as f64,
        ax_seconds,
        dssum_seconds,
        ax_dssum_seconds: ax_seconds + dssum_seconds,
        model_flops_per_iteration: model.flops_per_iteration(),
        model_bytes_per_iteration: model.bytes_per_iteration(),
        model_read_bytes_per_iteration: model.read_bytes_per_iteration(),
        model_write_bytes_per_iteration: model.write_bytes_per_iteration(),
        instrumented_flops_per_iteration: per_iteration.flops,
        instrumented_read_words_per_iteration: per_iteration.main_memory_reads,
        instrumented_write_words_per_iteration: per_iteration.main_memory_writes,
        achieved_gflops: run_flops as f64 / timed_seconds / 1e9,
        final_residual: res.residual_history.last().copied().unwrap_or(0.0),
        ..PerfRow::default()
    };

    match bandwidth {
        None => row.add_flag(FLAG_PROBE_FAILED),
        Some(bw) => {
            let r = evaluate_roofline(run_flops, timed_seconds, bw.bytes_per_second, n as u64)?;
            row.measured_bandwidth_gbs = bw.gigabytes_per_second();
            row.roofline_peak_gflops = r.peak_flops / 1e9;
            row.roofline_fraction = r.fraction;
            if r.cache_effect {
                row.add_flag(FLAG_CACHE_EFFECT);
            }
            if !bw.exceeds_cache() {
                row.add_flag(FLAG_PROBE_IN_CACHE);
            }
        }
    }
    let overhead = timer_overhead().as_secs_f64() * times.scopes as f64;
    if overhead > TIMER_OVERHEAD_LIMIT * ax_seconds {
        row.add_flag(FLAG_TIMER_OVERHEAD);
    }
    Ok(row)
}

fn mean_iteration(per: &[TrafficSnapshot]) -> TrafficSnapshot {
    let total = per.iter().fold(TrafficSnapshot::default(), |a, &b| a + b);
    let k = per.len().max(1) as u64;
    TrafficSnapshot {
        main_memory_reads: total.main_memory_reads / k,
        main_memory_writes: total.main_memory_writes / k,
        flops: total.flops / k,
    }
}

/// Cost of one scoped timer (two clock reads), measured.
pub fn timer_overhead() -> Duration {
    const SAMPLES: u32 = 1000;
    let start = Instant::now();
    for _ in 0..SAMPLES {
        std::hint::black_box(Instant::now());
        std::hint::black_box(Instant::now());
    }
    start.elapsed() / SAMPLES
}

/// Refuses runs whose estimated footprint exceeds the available memory.
fn check_memory(bytes: u64) -> Result<()> {
    match available_memory() {
        Some(avail) if bytes > avail => Err(BenchError::Resource(format!(
            "run needs about {} MB, {} MB available",
            bytes >> 20,
            avail >> 20
        ))),
        _ => Ok(()),
    }
}

fn available_memory() -> Option<u64> {
    let meminfo = std::fs::read_to_string("/proc/meminfo").ok()?;
    let line = meminfo.lines().find(|l| l.starts_with("MemAvailable:"))?;
    let kb: u64 = line.split_whitespace().nth(1)?.parse().ok()?;
    Some(kb * 1024)
}

fn probe_for(cfg: &BenchConfig, elements: usize, exec: &Executor) -> Result<BandwidthMeasurement> {
    measure_bandwidth(elements as u64 * points_per_element(cfg), cfg.probe_repetitions, exec)
}

/// Probe for a benchmark run. A failed probe (typically a size too small to
/// time) only costs the roofline columns, so it is reported and dropped.
fn optional_probe(cfg: &BenchConfig, elements: usize, exec: &Executor) -> Option<BandwidthMeasurement> {
    probe_for(cfg, elements, exec)
        .inspect_err(|e| eprintln!("warning: bandwidth probe at E={elements}: {e}"))
        .ok()
}

/// Single configuration: the first element count, every selected variant.
pub fn cmd_bench(cfg: &BenchConfig) -> Result<Vec<PerfRow>> {
    cfg.validate()?;
    let exec = Executor::new(cfg.workers)?;
    let elements = cfg.elements[0];
    let bw = optional_probe(cfg, elements, &exec);
    cfg.variant
        .variants()
        .into_iter()
        .map(|v| run_case(cfg, elements, v, &exec, bw.as_ref()))
        .collect()
}

/// Every element count times every selected variant. Failures become error
/// rows and the sweep moves on; `progress` sees each row as it completes.
pub fn cmd_sweep(cfg: &BenchConfig, mut progress: impl FnMut(&PerfRow)) -> Result<Vec<PerfRow>> {
    cfg.validate()?;
    let exec = Executor::new(cfg.workers)?;
    let mut rows = Vec::new();
    for &elements in &cfg.elements {
        let bw = optional_probe(cfg, elements, &exec);
        for v in cfg.variant.variants() {
            let row = run_case(cfg, elements, v, &exec, bw.as_ref())
                .unwrap_or_else(|e| PerfRow::failed(v.name(), elements as u64, &e.to_string()));
            progress(&row);
            rows.push(row);
        }
    }
    Ok(rows)
}

/// Standalone probe at `D = E n^3` for the first element count.
pub fn cmd_roofline(cfg: &BenchConfig) -> Result<RooflineRow> {
    cfg.validate()?;
    let exec = Executor::new(cfg.workers)?;
    let n = cfg.n() as u64;
    let bw = probe_for(cfg, cfg.elements[0], &exec)?;
    Ok(RooflineRow {
        schema_version: SCHEMA_VERSION.to_owned(),
        dofs: bw.dofs,
        n,
        workers: bw.workers as u64,
        repetitions: bw.repetitions as u64,
        payload_bytes: bw.payload_bytes,
        moved_bytes: bw.moved_bytes,
        measured_bandwidth_gbs: bw.gigabytes_per_second(),
        intensity: perf_model::intensity(n),
        roofline_peak_gflops: perf_model::roofline_peak(bw.bytes_per_second, n) / 1e9,
        roofline_basis: "optimistic".to_owned(),
        flags: if bw.exceeds_cache() {
            String::new()
        } else {
            FLAG_PROBE_IN_CACHE.to_owned()
        },
    })
}
