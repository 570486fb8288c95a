//! Unpreconditioned conjugate gradient on the masked global operator.
//!
//! Inner products carry the inverse multiplicity as weight, so duplicated
//! interface values count once and the iteration is the one on unique
//! degrees of freedom.

use alloc::vec::Vec;

use crate::counters::TrafficSnapshot;
use crate::{assembly, ElementField, Error, Result, Topology, TrafficCounters};

/// Something that maps a field to a field, accumulating its own flops and
/// traffic into `counters`.
pub trait LinearOperator {
    fn apply(&mut self, input: &ElementField, output: &mut ElementField, counters: &TrafficCounters) -> Result<()>;
}

/// Block length of the canonical reduction: dot products are summed block
/// by block, then the block partials in order. Any backend that honours it
/// produces bit-identical results regardless of thread count.
pub const REDUCTION_BLOCK: usize = 4096;

/// Vector kernels used by the solver.
pub trait VectorOps {
    /// `sum u[i] v[i] weight[i]` in the canonical block order.
    fn weighted_dot(&self, u: &[f64], v: &[f64], weight: &[f64]) -> f64;
    /// `y <- y + alpha x`
    fn axpy(&self, y: &mut [f64], alpha: f64, x: &[f64]);
    /// `y <- x + beta y`
    fn xpay(&self, y: &mut [f64], beta: f64, x: &[f64]);
}

/// One block of the canonical reduction.
#[inline]
pub fn block_weighted_dot(u: &[f64], v: &[f64], weight: &[f64]) -> f64 {
    let mut sum = 0.0;
    for ((a, b), c) in u.iter().zip(v).zip(weight) {
        sum += a * b * c;
    }
    sum
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SerialOps;

impl VectorOps for SerialOps {
    fn weighted_dot(&self, u: &[f64], v: &[f64], weight: &[f64]) -> f64 {
        u.chunks(REDUCTION_BLOCK)
            .zip(v.chunks(REDUCTION_BLOCK))
            .zip(weight.chunks(REDUCTION_BLOCK))
            .map(|((a, b), c)| block_weighted_dot(a, b, c))
            .fold(0.0, |acc, s| acc + s)
    }

    fn axpy(&self, y: &mut [f64], alpha: f64, x: &[f64]) {
        for (y, x) in y.iter_mut().zip(x) {
            *y += alpha * x;
        }
    }

    fn xpay(&self, y: &mut [f64], beta: f64, x: &[f64]) {
        for (y, x) in y.iter_mut().zip(x) {
            *y = x + beta * *y;
        }
    }
}

/// Multiplicity-weighted inner product `sum u v / multiplicity`.
pub fn weighted_dot(u: &ElementField, v: &ElementField, topo: &Topology) -> Result<f64> {
    if !topo.conforms(u) || !topo.conforms(v) {
        return Err(Error::ShapeMismatch("field does not conform to topology"));
    }
    Ok(SerialOps.weighted_dot(u.values(), v.values(), topo.inv_multiplicity()))
}

/// Flops per local point of one CG iteration outside the operator:
/// two weighted dots at 3 (two multiplies, one add) and three axpy-form
/// updates at 2.
pub const VECTOR_FLOPS_PER_POINT: u64 = 12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgConfig {
    pub max_iterations: usize,
    /// Early exit once the weighted residual norm drops below this; 0 runs
    /// exactly `max_iterations` iterations.
    pub tolerance: f64,
}

impl Default for CgConfig {
    fn default() -> Self {
        Self {
            max_iterations: 100,
            tolerance: 0.0,
        }
    }
}

impl CgConfig {
    pub fn new(max_iterations: usize, tolerance: f64) -> Result<Self> {
        if max_iterations == 0 {
            return Err(Error::InvalidArgument("max_iterations must be at least 1"));
        }
        if !(tolerance >= 0.0) {
            return Err(Error::InvalidArgument("tolerance must be non-negative"));
        }
        Ok(Self {
            max_iterations,
            tolerance,
        })
    }

    /// Fixed-work mode: `iterations` iterations, no early exit.
    pub fn fixed(iterations: usize) -> Result<Self> {
        Self::new(iterations, 0.0)
    }
}

#[derive(Debug, Clone)]
pub struct CgResult {
    pub solution: ElementField,
    /// `sqrt(<r, r>_c)` after each iteration.
    pub residual_history: Vec<f64>,
    pub iterations_run: usize,
    /// Totals over the whole solve, setup included.
    pub counters: TrafficSnapshot,
    /// Counter increments of each iteration.
    pub iteration_counters: Vec<TrafficSnapshot>,
}

/// State handed to an observer after every iteration.
#[derive(Debug)]
pub struct IterationState<'a> {
    /// 1-based.
    pub iteration: usize,
    pub solution: &'a ElementField,
    pub residual: &'a ElementField,
    pub residual_norm: f64,
}

/// Serial solve with fresh counters.
pub fn cg_solve<A: LinearOperator + ?Sized>(
    f: &ElementField,
    operator: &mut A,
    topo: &Topology,
    cfg: &CgConfig,
) -> Result<CgResult> {
    cg_solve_with(f, operator, topo, cfg, &SerialOps, &TrafficCounters::new(), |_| {})
}

/// Full-control solve: vector backend, shared counters and a per-iteration
/// observer.
///
/// `r0 = mask(f)`, `p0 = r0`; then per iteration `w = A p`,
/// `alpha = <r,r>/<p,w>`, `x += alpha p`, `r -= alpha w`,
/// `beta = <r',r'>/<r,r>`, `p = r + beta p`.
pub fn cg_solve_with<A, V, O>(
    f: &ElementField,
    operator: &mut A,
    topo: &Topology,
    cfg: &CgConfig,
    ops: &V,
    counters: &TrafficCounters,
    mut observer: O,
) -> Result<CgResult>
where
    A: LinearOperator + ?Sized,
    V: VectorOps + ?Sized,
    O: FnMut(&IterationState<'_>),
{
    if !topo.conforms(f) {
        return Err(Error::ShapeMismatch("right-hand side does not conform to topology"));
    }
    if cfg.max_iterations == 0 {
        return Err(Error::InvalidArgument("max_iterations must be at least 1"));
    }
    let start = counters.snapshot();
    let dofs = f.len() as u64;
    let weight = topo.inv_multiplicity();

    let dot = |u: &[f64], v: &[f64], arrays: u64| {
        counters.add(TrafficSnapshot {
            main_memory_reads: arrays * dofs,
            main_memory_writes: 0,
            flops: 3 * dofs,
        });
        ops.weighted_dot(u, v, weight)
    };
    let update = TrafficSnapshot {
        main_memory_reads: 2 * dofs,
        main_memory_writes: dofs,
        flops: 2 * dofs,
    };

    let mut x = ElementField::zeros(f.n(), f.num_elements());
    let mut r = f.clone();
    assembly::mask_in_place(&mut r, topo)?;
    let mut p = r.clone();
    let mut w = ElementField::zeros(f.n(), f.num_elements());
    let mut rr = dot(r.values(), r.values(), 2);

    let mut residual_history = Vec::with_capacity(cfg.max_iterations);
    let mut iteration_counters = Vec::with_capacity(cfg.max_iterations);

    for iteration in 1..=cfg.max_iterations {
        let before = counters.snapshot();
        operator.apply(&p, &mut w, counters)?;
        let pap = dot(p.values(), w.values(), 3);

        if rr == 0.0 {
            residual_history.push(0.0);
            iteration_counters.push(counters.snapshot() - before);
            observer(&IterationState {
                iteration,
                solution: &x,
                residual: &r,
                residual_norm: 0.0,
            });
            break;
        }
        if !(pap > 0.0) {
            return Err(Error::Breakdown {
                iteration,
                curvature: pap,
            });
        }

        let alpha = rr / pap;
        ops.axpy(x.values_mut(), alpha, p.values());
        counters.add(update);
        ops.axpy(r.values_mut(), -alpha, w.values());
        counters.add(update);
        let rr_new = dot(r.values(), r.values(), 2);
        let norm = libm::sqrt(rr_new);
        residual_history.push(norm);

        let converged = rr_new == 0.0 || norm < cfg.tolerance;
        if !converged {
            ops.xpay(p.values_mut(), rr_new / rr, r.values());
            counters.add(update);
        }
        rr = rr_new;
        iteration_counters.push(counters.snapshot() - before);
        observer(&IterationState {
            iteration,
            solution: &x,
            residual: &r,
            residual_norm: norm,
        });
        if converged {
            break;
        }
    }

    Ok(CgResult {
        solution: x,
        iterations_run: residual_history.len(),
        residual_history,
        counters: counters.snapshot() - start,
        iteration_counters,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{build_basis, build_geom, build_mesh, GlobalOperator, KernelVariant};

    #[test]
    fn weighted_dot_examples() {
        let mesh = build_mesh(1, 1, 1, 3, 1.0).unwrap();
        let topo = Topology::new(&mesh);
        let u = ElementField::from_fn(3, 1, |i, j, k, _| (i + j + k) as f64);
        let plain: f64 = u.values().iter().map(|v| v * v).sum();
        assert_eq!(weighted_dot(&u, &u, &topo).unwrap(), plain);

        let mesh = build_mesh(2, 1, 1, 2, 1.0).unwrap();
        let topo = Topology::new(&mesh);
        let ones = ElementField::constant(2, 2, 1.0);
        assert_eq!(weighted_dot(&ones, &ones, &topo).unwrap(), 12.0);
        assert!(weighted_dot(&ones, &ElementField::zeros(2, 3), &topo).is_err());
    }

    #[test]
    fn zero_rhs_stops_after_one_iteration() {
        let mesh = build_mesh(2, 2, 2, 3, 0.5).unwrap();
        let basis = build_basis(3).unwrap();
        let geom = build_geom(&mesh, &basis).unwrap();
        let topo = Topology::new(&mesh);
        let mut op = GlobalOperator::new(&basis, &geom, &topo, KernelVariant::Layered).unwrap();
        let f = ElementField::zeros(3, 8);
        let res = cg_solve(&f, &mut op, &topo, &CgConfig::default()).unwrap();
        assert_eq!(res.iterations_run, 1);
        assert_eq!(res.residual_history, alloc::vec![0.0]);
        assert_eq!(res.solution.max_abs(), 0.0);
    }

    #[test]
    fn config_validation() {
        assert!(CgConfig::new(0, 0.0).is_err());
        assert!(CgConfig::new(1, -1.0).is_err());
        assert!(CgConfig::new(1, f64::NAN).is_err());
        assert_eq!(CgConfig::default(), CgConfig::fixed(100).unwrap());
    }

    struct Negated;
    impl LinearOperator for Negated {
        fn apply(&mut self, input: &ElementField, output: &mut ElementField, _: &TrafficCounters) -> Result<()> {
            output.copy_from(input)?;
            output.scale(-1.0);
            Ok(())
        }
    }

    #[test]
    fn negative_definite_operator_breaks_down() {
        let mesh = build_mesh(1, 1, 1, 4, 1.0).unwrap();
        let topo = Topology::new(&mesh);
        let f = ElementField::constant(4, 1, 1.0);
        let err = cg_solve(&f, &mut Negated, &topo, &CgConfig::default()).unwrap_err();
        assert!(matches!(err, Error::Breakdown { iteration: 1, .. }));
    }

    #[test]
    fn serial_reduction_is_blockwise() {
        let n = 3 * REDUCTION_BLOCK + 17;
        let u: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let w = alloc::vec![0.5; n];
        let expect = u
            .chunks(REDUCTION_BLOCK)
            .zip(w.chunks(REDUCTION_BLOCK))
            .map(|(a, c)| block_weighted_dot(a, a, c))
            .fold(0.0, |acc, s| acc + s);
        assert_eq!(SerialOps.weighted_dot(&u, &u, &w).to_bits(), expect.to_bits());
    }
}
