//! Rayon drivers for the core kernels.
//!
//! Work is split over disjoint element ranges: `u` blocks are shared
//! read-only, every `w` block has exactly one writer and each worker owns its
//! scratch. Reductions follow the core's canonical block order and
//! gather-scatter reduces each global id on a single worker, so results are
//! bit-identical to the serial code for any worker count.

use std::time::{Duration, Instant};

use rayon::prelude::*;
use sem_core::ax::{check_shapes, reference, AxWorkspace, LayeredScratch, ScratchBuffer};
use sem_core::cg::{block_weighted_dot, LinearOperator, VectorOps, REDUCTION_BLOCK};
use sem_core::{ElementField, Error, GeomFactors, KernelVariant, PolynomialBasis, Topology, TrafficCounters};

use crate::error::{BenchError, Result};

/// Elements per parallel task.
const ELEMENTS_PER_TASK: usize = 1;
/// Words per task for streaming vector updates.
const UPDATE_CHUNK: usize = 16 * 1024;

/// Fixed-size thread pool; the worker count is part of every report.
pub struct Executor {
    pool: rayon::ThreadPool,
    workers: usize,
}

impl Executor {
    /// `workers == 0` means all available cores.
    pub fn new(workers: usize) -> Result<Self> {
        let workers = if workers == 0 { default_workers() } else { workers };
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .thread_name(|i| format!("sem-worker-{i}"))
            .build()
            .map_err(|e| BenchError::Resource(format!("thread pool: {e}")))?;
        Ok(Self { pool, workers })
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    pub fn install<R: Send>(&self, f: impl FnOnce() -> R + Send) -> R {
        self.pool.install(f)
    }
}

pub fn default_workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

/// Parallel `w = A_local u`. Must run inside [`Executor::install`] to use
/// that pool; otherwise rayon's global pool is used.
pub fn par_apply_ax(
    u: &ElementField,
    geom: &GeomFactors,
    basis: &PolynomialBasis,
    variant: KernelVariant,
    w: &mut ElementField,
    workspace: &mut AxWorkspace,
    counters: &TrafficCounters,
) -> sem_core::Result<()> {
    check_shapes(u, geom, basis)?;
    if !u.same_shape(w) {
        return Err(Error::ShapeMismatch("output field differs in shape"));
    }
    let n = basis.n();
    let block = n * n * n * ELEMENTS_PER_TASK;
    let geom_block = 6 * block;

    match variant {
        KernelVariant::Reference => {
            let [wr, ws, wt, ur, us, ut] = workspace.intermediates(u.len());
            u.values()
                .par_chunks(block)
                .zip(wr.par_chunks_mut(block))
                .zip(ws.par_chunks_mut(block))
                .zip(wt.par_chunks_mut(block))
                .for_each(|(((uc, a), b), c)| reference::gradient_pass(basis, uc, a, b, c, counters));
            geom.values()
                .par_chunks(geom_block)
                .zip(wr.par_chunks(block))
                .zip(ws.par_chunks(block))
                .zip(wt.par_chunks(block))
                .zip(ur.par_chunks_mut(block))
                .zip(us.par_chunks_mut(block))
                .zip(ut.par_chunks_mut(block))
                .for_each(|((((((g, a), b), c), r), s), t)| reference::metric_pass(n, g, a, b, c, r, s, t, counters));
            ur.par_chunks(block)
                .zip(us.par_chunks(block))
                .zip(ut.par_chunks(block))
                .zip(w.values_mut().par_chunks_mut(block))
                .for_each(|(((r, s), t), out)| reference::divergence_pass(basis, r, s, t, out, counters));
        }
        KernelVariant::Scratch => {
            // fail on capacity before any worker starts
            ScratchBuffer::new(n)?;
            u.values()
                .par_chunks(block)
                .zip(w.values_mut().par_chunks_mut(block))
                .zip(geom.values().par_chunks(geom_block))
                .try_for_each_init(
                    || ScratchBuffer::new(n).expect("capacity checked above"),
                    |scratch, ((uc, wc), gc)| scratch.apply_elements(basis, gc, uc, wc, counters),
                )?;
        }
        KernelVariant::Layered => {
            u.values()
                .par_chunks(block)
                .zip(w.values_mut().par_chunks_mut(block))
                .zip(geom.values().par_chunks(geom_block))
                .for_each_init(
                    || LayeredScratch::new(basis),
                    |scratch, ((uc, wc), gc)| scratch.apply_elements(gc, uc, wc, counters),
                );
        }
    }
    Ok(())
}

/// Parallel gather-scatter; `sums` is reused storage for the per-id totals.
pub fn par_dssum(f: &mut ElementField, topo: &Topology, sums: &mut Vec<f64>) -> sem_core::Result<()> {
    if !topo.conforms(f) {
        return Err(Error::ShapeMismatch("field does not conform to topology"));
    }
    let values = f.values();
    (0..topo.num_global())
        .into_par_iter()
        .map(|g| topo.class_sum(g, values))
        .collect_into_vec(sums);
    let sums = &*sums;
    f.values_mut()
        .par_chunks_mut(UPDATE_CHUNK)
        .zip(topo.global_ids().par_chunks(UPDATE_CHUNK))
        .for_each(|(vs, gs)| {
            for (v, &g) in vs.iter_mut().zip(gs) {
                *v = sums[g];
            }
        });
    Ok(())
}

pub fn par_mask(f: &mut ElementField, topo: &Topology) -> sem_core::Result<()> {
    if !topo.conforms(f) {
        return Err(Error::ShapeMismatch("field does not conform to topology"));
    }
    f.values_mut()
        .par_chunks_mut(UPDATE_CHUNK)
        .zip(topo.mask_values().par_chunks(UPDATE_CHUNK))
        .for_each(|(vs, ms)| {
            for (v, &m) in vs.iter_mut().zip(ms) {
                if m == 0.0 {
                    *v = 0.0;
                }
            }
        });
    Ok(())
}

/// Parallel vector kernels with the core's canonical reduction order.
#[derive(Debug, Clone, Copy, Default)]
pub struct ParallelOps;

impl VectorOps for ParallelOps {
    fn weighted_dot(&self, u: &[f64], v: &[f64], weight: &[f64]) -> f64 {
        let partials: Vec<f64> = u
            .par_chunks(REDUCTION_BLOCK)
            .zip(v.par_chunks(REDUCTION_BLOCK))
            .zip(weight.par_chunks(REDUCTION_BLOCK))
            .map(|((a, b), c)| block_weighted_dot(a, b, c))
            .collect();
        partials.into_iter().fold(0.0, |acc, s| acc + s)
    }

    fn axpy(&self, y: &mut [f64], alpha: f64, x: &[f64]) {
        y.par_chunks_mut(UPDATE_CHUNK)
            .zip(x.par_chunks(UPDATE_CHUNK))
            .for_each(|(y, x)| {
                for (y, x) in y.iter_mut().zip(x) {
                    *y += alpha * x;
                }
            });
    }

    fn xpay(&self, y: &mut [f64], beta: f64, x: &[f64]) {
        y.par_chunks_mut(UPDATE_CHUNK)
            .zip(x.par_chunks(UPDATE_CHUNK))
            .for_each(|(y, x)| {
                for (y, x) in y.iter_mut().zip(x) {
                    *y = x + beta * *y;
                }
            });
    }
}

/// Accumulated wall time per operator stage.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StageTimes {
    pub ax: Duration,
    pub dssum: Duration,
    /// Number of timed scopes (two per application).
    pub scopes: u64,
}

/// Parallel global operator `mask(dssum(A_local(mask(u))))` with scoped
/// timers around the local kernel and the gather-scatter.
pub struct TimedOperator<'a> {
    basis: &'a PolynomialBasis,
    geom: &'a GeomFactors,
    topo: &'a Topology,
    variant: KernelVariant,
    workspace: AxWorkspace,
    masked: ElementField,
    sums: Vec<f64>,
    times: StageTimes,
}

impl<'a> TimedOperator<'a> {
    pub fn new(
        basis: &'a PolynomialBasis,
        geom: &'a GeomFactors,
        topo: &'a Topology,
        variant: KernelVariant,
    ) -> sem_core::Result<Self> {
        let masked = ElementField::zeros_like_mesh(topo.mesh());
        check_shapes(&masked, geom, basis)?;
        Ok(Self {
            basis,
            geom,
            topo,
            variant,
            workspace: AxWorkspace::new(),
            masked,
            sums: Vec::new(),
            times: StageTimes::default(),
        })
    }

    pub fn times(&self) -> StageTimes {
        self.times
    }

    pub fn reset_times(&mut self) {
        self.times = StageTimes::default();
    }
}

impl LinearOperator for TimedOperator<'_> {
    fn apply(
        &mut self,
        input: &ElementField,
        output: &mut ElementField,
        counters: &TrafficCounters,
    ) -> sem_core::Result<()> {
        self.masked.copy_from(input)?;
        par_mask(&mut self.masked, self.topo)?;

        let t0 = Instant::now();
        par_apply_ax(
            &self.masked,
            self.geom,
            self.basis,
            self.variant,
            output,
            &mut self.workspace,
            counters,
        )?;
        let t1 = Instant::now();
        par_dssum(output, self.topo, &mut self.sums)?;
        let t2 = Instant::now();

        self.times.ax += t1 - t0;
        self.times.dssum += t2 - t1;
        self.times.scopes += 2;
        par_mask(output, self.topo)
    }
}
