//! The invariant suite behind `sembench verify`.
//!
//! Every property is a named check `group.name`; `--filter` selects by
//! prefix, so `--filter ax` runs the kernel group only.

use std::io::Write;
use std::time::Instant;

use sem_core::ax::{reference, scratch::SCRATCH_MAX_POINTS};
use sem_core::cg::{cg_solve_with, IterationState, VECTOR_FLOPS_PER_POINT};
use sem_core::perf_model::{self, CostModel};
use sem_core::rng::{random_masked_field, Xorshift64Star};
use sem_core::{
    apply_ax, build_basis, build_geom, build_mesh, cg_solve, dssum, flops_per_apply, mask, weighted_dot, CgConfig,
    ElementField, Error, GeomFactors, GlobalOperator, KernelVariant, LinearOperator, PolynomialBasis, SerialOps,
    Topology, TrafficCounters,
};

use crate::error::{BenchError, Result};
use crate::oracle::{dense_apply, naive_dssum, rel_diff};
use crate::parallel::{Executor, ParallelOps, TimedOperator};

/// Relative tolerance for operator comparisons.
pub const OPERATOR_RTOL: f64 = 1e-12;
/// Relative error bound of the manufactured-solution solve.
pub const CG_RTOL: f64 = 1e-8;

type CheckResult = std::result::Result<(), String>;
type Check = fn() -> CheckResult;

pub struct Property {
    pub name: &'static str,
    pub check: Check,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, Default)]
pub struct Summary {
    pub outcomes: Vec<Outcome>,
}

impl Summary {
    pub fn failed(&self) -> usize {
        self.outcomes.iter().filter(|o| !o.passed).count()
    }

    pub fn total(&self) -> usize {
        self.outcomes.len()
    }

    pub fn into_result(self) -> Result<()> {
        match self.failed() {
            0 => Ok(()),
            f => Err(BenchError::Verification(f, self.total())),
        }
    }
}

pub fn properties() -> Vec<Property> {
    macro_rules! props {
        ($($name:literal => $f:path),* $(,)?) => { vec![$(Property { name: $name, check: $f }),*] };
    }
    props![
        "basis.small_rules" => basis_small_rules,
        "basis.quadrature" => basis_quadrature,
        "basis.differentiation" => basis_differentiation,
        "geom.affine_box" => geom_affine_box,
        "ax.dense_oracle" => ax_dense_oracle,
        "ax.cross_variant" => ax_cross_variant,
        "ax.null_space" => ax_null_space,
        "ax.local_symmetry" => ax_local_symmetry,
        "ax.counters" => ax_counters,
        "ax.scratch_capacity" => ax_scratch_capacity,
        "assembly.dssum_oracle" => assembly_dssum_oracle,
        "assembly.global_symmetry" => assembly_global_symmetry,
        "assembly.positivity" => assembly_positivity,
        "assembly.mask" => assembly_mask,
        "cg.manufactured" => cg_manufactured,
        "cg.energy_monotone" => cg_energy_monotone,
        "cg.counter_identity" => cg_counter_identity,
        "model.flops" => model_flops,
        "model.bytes" => model_bytes,
        "model.roofline_anchors" => model_roofline_anchors,
        "parallel.determinism" => parallel_determinism,
    ]
}

/// Runs every property whose name starts with `filter` and prints one
/// `[PASS]`/`[FAIL]` line each.
pub fn run(filter: Option<&str>, out: &mut dyn Write) -> Result<Summary> {
    let selected: Vec<Property> = properties()
        .into_iter()
        .filter(|p| filter.is_none_or(|f| p.name.starts_with(f)))
        .collect();
    if selected.is_empty() {
        return Err(BenchError::Config(format!(
            "filter `{}` matches no property",
            filter.unwrap_or_default()
        )));
    }
    let mut summary = Summary::default();
    for p in selected {
        let start = Instant::now();
        let result = (p.check)();
        let seconds = start.elapsed().as_secs_f64();
        let passed = result.is_ok();
        let detail = result.err().unwrap_or_default();
        if passed {
            writeln!(out, "[PASS] {} ({seconds:.2}s)", p.name)?;
        } else {
            writeln!(out, "[FAIL] {}: {detail}", p.name)?;
        }
        summary.outcomes.push(Outcome {
            name: p.name,
            passed,
            detail,
            seconds,
        });
    }
    writeln!(
        out,
        "{} of {} properties passed",
        summary.total() - summary.failed(),
        summary.total()
    )?;
    Ok(summary)
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> CheckResult {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn core<T>(r: sem_core::Result<T>) -> std::result::Result<T, String> {
    r.map_err(|e| e.to_string())
}

struct Case {
    basis: PolynomialBasis,
    geom: GeomFactors,
    topo: Topology,
}

fn case(ex: usize, ey: usize, ez: usize, n: usize, h: f64) -> std::result::Result<Case, String> {
    let mesh = core(build_mesh(ex, ey, ez, n, h))?;
    let basis = core(build_basis(n))?;
    let geom = core(build_geom(&mesh, &basis))?;
    let topo = Topology::new(&mesh);
    Ok(Case { basis, geom, topo })
}

fn random_local(n: usize, e: usize, seed: u64) -> ElementField {
    let mut rng = Xorshift64Star::new(seed);
    ElementField::from_fn(n, e, |_, _, _, _| rng.next_signed())
}

fn plain_dot(a: &ElementField, b: &ElementField) -> f64 {
    a.values().iter().zip(b.values()).map(|(x, y)| x * y).sum()
}

fn basis_small_rules() -> CheckResult {
    let s5 = 1.0 / 5f64.sqrt();
    let rules: [(usize, &[f64], &[f64]); 3] = [
        (2, &[-1.0, 1.0], &[1.0, 1.0]),
        (3, &[-1.0, 0.0, 1.0], &[1.0 / 3.0, 4.0 / 3.0, 1.0 / 3.0]),
        (4, &[-1.0, -s5, s5, 1.0], &[1.0 / 6.0, 5.0 / 6.0, 5.0 / 6.0, 1.0 / 6.0]),
    ];
    for (n, x, w) in rules {
        let b = core(build_basis(n))?;
        for i in 0..n {
            ensure(
                (b.nodes()[i] - x[i]).abs() < 1e-15 && (b.weights()[i] - w[i]).abs() < 1e-15,
                || format!("n={n} point {i}: ({}, {})", b.nodes()[i], b.weights()[i]),
            )?;
        }
    }
    Ok(())
}

fn basis_quadrature() -> CheckResult {
    for n in 2..=sem_core::basis::MAX_POINTS {
        let b = core(build_basis(n))?;
        ensure((b.weights().iter().sum::<f64>() - 2.0).abs() < 1e-13, || {
            format!("n={n}: weights do not sum to 2")
        })?;
        for k in 0..=2 * n - 3 {
            let q: f64 = b
                .nodes()
                .iter()
                .zip(b.weights())
                .map(|(x, w)| w * x.powi(k as i32))
                .sum();
            let exact = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
            ensure((q - exact).abs() < 1e-12, || {
                format!("n={n}: x^{k} integrates to {q}, expected {exact}")
            })?;
        }
    }
    Ok(())
}

fn basis_differentiation() -> CheckResult {
    for n in 2..=sem_core::basis::MAX_POINTS {
        let b = core(build_basis(n))?;
        for k in 0..n {
            for i in 0..n {
                let got: f64 = (0..n).map(|l| b.diff(i, l) * b.nodes()[l].powi(k as i32)).sum();
                let x = b.nodes()[i];
                let exact = if k == 0 { 0.0 } else { k as f64 * x.powi(k as i32 - 1) };
                let scale = (k as f64).max(1.0) * (n * n) as f64;
                ensure((got - exact).abs() < 1e-13 * scale, || {
                    format!("n={n}: d/dx x^{k} at node {i} is {got}, expected {exact}")
                })?;
            }
        }
    }
    Ok(())
}

fn geom_affine_box() -> CheckResult {
    let h = 0.4;
    let c = case(2, 1, 1, 5, h)?;
    let w = c.basis.weights();
    for e in 0..2 {
        for k in 0..5 {
            for j in 0..5 {
                for i in 0..5 {
                    let diag = w[i] * w[j] * w[k] * h / 2.0;
                    for (m, expect) in [diag, 0.0, 0.0, diag, 0.0, diag].into_iter().enumerate() {
                        let got = c.geom.get(i, j, k, m, e);
                        ensure((got - expect).abs() <= 1e-15 * diag, || {
                            format!("G{} at ({i},{j},{k},{e}) = {got}, expected {expect}", m + 1)
                        })?;
                    }
                }
            }
        }
    }
    Ok(())
}

/// Compares `apply` against the dense oracle for `n` in 2..=5 and 1 or 8
/// elements, for every variant.
pub fn dense_oracle_check<F>(mut apply: F) -> CheckResult
where
    F: FnMut(&ElementField, &GeomFactors, &PolynomialBasis, KernelVariant) -> sem_core::Result<ElementField>,
{
    for n in 2..=5 {
        for (ex, ey, ez) in [(1, 1, 1), (2, 2, 2)] {
            let c = case(ex, ey, ez, n, 0.5)?;
            let u = random_local(n, ex * ey * ez, 31 * n as u64);
            let dense = core(dense_apply(&c.basis, &c.geom, &u))?;
            for v in KernelVariant::ALL {
                let w = core(apply(&u, &c.geom, &c.basis, v))?;
                let d = rel_diff(&w, &dense);
                ensure(d <= OPERATOR_RTOL, || {
                    format!("{v} n={n} E={}: relative difference {d:e}", ex * ey * ez)
                })?;
            }
        }
    }
    Ok(())
}

fn ax_dense_oracle() -> CheckResult {
    dense_oracle_check(|u, g, b, v| apply_ax(u, g, b, v, &TrafficCounters::new()))
}

fn ax_cross_variant() -> CheckResult {
    let c = case(4, 4, 4, 10, 0.25)?;
    for seed in 0..20 {
        let u = random_local(10, 64, seed);
        let outs: Vec<ElementField> = KernelVariant::ALL
            .iter()
            .map(|&v| core(apply_ax(&u, &c.geom, &c.basis, v, &TrafficCounters::new())))
            .collect::<std::result::Result<_, _>>()?;
        for a in 0..3 {
            for b in a + 1..3 {
                let d = rel_diff(&outs[a], &outs[b]);
                ensure(d <= OPERATOR_RTOL, || {
                    format!(
                        "seed {seed}: {} vs {}: {d:e}",
                        KernelVariant::ALL[a],
                        KernelVariant::ALL[b]
                    )
                })?;
            }
        }
    }
    Ok(())
}

fn ax_null_space() -> CheckResult {
    for n in [2, 4, 7, 10] {
        let c = case(2, 1, 1, n, 0.3)?;
        let dmax = c.basis.diff_matrix().iter().fold(0.0f64, |m, d| m.max(d.abs()));
        for v in KernelVariant::ALL {
            let w = core(apply_ax(
                &ElementField::constant(n, 2, 3.5),
                &c.geom,
                &c.basis,
                v,
                &TrafficCounters::new(),
            ))?;
            ensure(w.max_abs() <= OPERATOR_RTOL * 3.5 * dmax * dmax, || {
                format!("{v} n={n}: |A 1| = {:e}", w.max_abs())
            })?;
        }
    }
    Ok(())
}

fn ax_local_symmetry() -> CheckResult {
    let c = case(2, 2, 1, 6, 0.5)?;
    let u = random_local(6, 4, 5);
    let v = random_local(6, 4, 6);
    for var in KernelVariant::ALL {
        let au = core(apply_ax(&u, &c.geom, &c.basis, var, &TrafficCounters::new()))?;
        let av = core(apply_ax(&v, &c.geom, &c.basis, var, &TrafficCounters::new()))?;
        let (a, b) = (plain_dot(&v, &au), plain_dot(&u, &av));
        ensure((a - b).abs() <= OPERATOR_RTOL * a.abs().max(b.abs()), || {
            format!("{var}: {a} vs {b}")
        })?;
    }
    Ok(())
}

fn ax_counters() -> CheckResult {
    let c = case(2, 2, 2, 10, 0.5)?;
    let u = random_local(10, 8, 1);
    let d = u.len() as u64;
    let mut snaps = Vec::new();
    for v in KernelVariant::ALL {
        let counters = TrafficCounters::new();
        core(apply_ax(&u, &c.geom, &c.basis, v, &counters))?;
        let s = counters.snapshot();
        ensure(s.flops == flops_per_apply(d, 10), || format!("{v}: {} flops", s.flops))?;
        snaps.push(s);
    }
    let (r, s, l) = (snaps[0], snaps[1], snaps[2]);
    ensure(r.main_memory_reads == s.main_memory_reads + 6 * d, || {
        format!(
            "read difference {} != 6D",
            r.main_memory_reads as i64 - s.main_memory_reads as i64
        )
    })?;
    ensure(r.main_memory_writes == s.main_memory_writes + 6 * d, || {
        format!(
            "write difference {} != 6D",
            r.main_memory_writes as i64 - s.main_memory_writes as i64
        )
    })?;
    ensure(l == s, || format!("layered {l:?} differs from scratch {s:?}"))
}

fn ax_scratch_capacity() -> CheckResult {
    let n = SCRATCH_MAX_POINTS + 1;
    let c = case(1, 1, 1, n, 1.0)?;
    let r = apply_ax(
        &ElementField::zeros(n, 1),
        &c.geom,
        &c.basis,
        KernelVariant::Scratch,
        &TrafficCounters::new(),
    );
    ensure(matches!(r, Err(Error::ScratchCapacity { .. })), || {
        format!("n={n} was not refused: {r:?}")
    })
}

fn assembly_dssum_oracle() -> CheckResult {
    for n in 2..=4 {
        for ex in 1..=3 {
            for ey in 1..=3 {
                for ez in 1..=3 {
                    let c = case(ex, ey, ez, n, 1.0)?;
                    let mut rng = Xorshift64Star::new((ex * 100 + ey * 10 + ez) as u64);
                    let f =
                        ElementField::from_fn(n, ex * ey * ez, |_, _, _, _| (rng.next_u64() % 2001) as f64 - 1000.0);
                    let got = core(dssum(&f, &c.topo))?;
                    let expect = core(naive_dssum(&f, &c.topo))?;
                    ensure(got == expect, || {
                        format!("{ex}x{ey}x{ez} n={n}: dssum differs from oracle")
                    })?;
                }
            }
        }
    }
    Ok(())
}

fn global_apply(c: &Case, u: &ElementField, v: KernelVariant) -> std::result::Result<ElementField, String> {
    let mut op = core(GlobalOperator::new(&c.basis, &c.geom, &c.topo, v))?;
    let mut w = ElementField::zeros(u.n(), u.num_elements());
    core(op.apply(u, &mut w, &TrafficCounters::new()))?;
    Ok(w)
}

fn assembly_global_symmetry() -> CheckResult {
    let c = case(3, 2, 2, 5, 0.5)?;
    let u = random_masked_field(&c.topo, 11);
    let v = random_masked_field(&c.topo, 12);
    for var in KernelVariant::ALL {
        let au = global_apply(&c, &u, var)?;
        let av = global_apply(&c, &v, var)?;
        let a = core(weighted_dot(&v, &au, &c.topo))?;
        let b = core(weighted_dot(&u, &av, &c.topo))?;
        ensure((a - b).abs() <= OPERATOR_RTOL * a.abs().max(b.abs()), || {
            format!("{var}: {a} vs {b}")
        })?;
    }
    Ok(())
}

fn assembly_positivity() -> CheckResult {
    let c = case(2, 2, 2, 4, 0.5)?;
    for seed in 0..10 {
        let u = random_masked_field(&c.topo, seed);
        for var in KernelVariant::ALL {
            let au = global_apply(&c, &u, var)?;
            let e = core(weighted_dot(&u, &au, &c.topo))?;
            ensure(e > 0.0, || format!("{var} seed {seed}: <u, Au> = {e}"))?;
        }
    }
    Ok(())
}

fn assembly_mask() -> CheckResult {
    let c = case(2, 3, 2, 3, 1.0)?;
    let f = random_local(3, 12, 3);
    let once = core(mask(&f, &c.topo))?;
    let twice = core(mask(&once, &c.topo))?;
    ensure(once == twice, || "mask is not idempotent".into())?;
    let interior = (2 * 2 - 1) * (3 * 2 - 1) * (2 * 2 - 1);
    ensure(c.topo.num_free() == interior, || {
        format!("{} free ids, expected {interior}", c.topo.num_free())
    })
}

fn manufactured(c: &Case, v: KernelVariant, seed: u64) -> std::result::Result<(ElementField, ElementField), String> {
    let exact = random_masked_field(&c.topo, seed);
    let f = global_apply(c, &exact, v)?;
    Ok((exact, f))
}

fn wnorm(u: &ElementField, topo: &Topology) -> std::result::Result<f64, String> {
    Ok(core(weighted_dot(u, u, topo))?.sqrt())
}

fn cg_manufactured() -> CheckResult {
    let c = case(4, 4, 4, 4, 0.25)?;
    let free = c.topo.num_free();
    for v in KernelVariant::ALL {
        let (exact, f) = manufactured(&c, v, 2024)?;
        let mut op = core(GlobalOperator::new(&c.basis, &c.geom, &c.topo, v))?;
        let cfg = core(CgConfig::new(free, 1e-13 * wnorm(&f, &c.topo)?))?;
        let res = core(cg_solve(&f, &mut op, &c.topo, &cfg))?;
        let mut err = res.solution.clone();
        core(err.axpy(-1.0, &exact))?;
        let rel = wnorm(&err, &c.topo)? / wnorm(&exact, &c.topo)?;
        ensure(rel <= CG_RTOL, || {
            format!("{v}: relative error {rel:e} after {} iterations", res.iterations_run)
        })?;
    }
    Ok(())
}

fn cg_energy_monotone() -> CheckResult {
    let c = case(4, 4, 4, 4, 0.25)?;
    let (exact, f) = manufactured(&c, KernelVariant::Layered, 7)?;
    let mut op = core(GlobalOperator::new(&c.basis, &c.geom, &c.topo, KernelVariant::Layered))?;
    let mut probe = core(GlobalOperator::new(&c.basis, &c.geom, &c.topo, KernelVariant::Layered))?;
    let energy0 = core(weighted_dot(&exact, &f, &c.topo))?.sqrt();
    let mut ae = ElementField::zeros(4, 64);
    let mut energies = Vec::new();
    let mut failure = None;
    core(cg_solve_with(
        &f,
        &mut op,
        &c.topo,
        &core(CgConfig::fixed(60))?,
        &SerialOps,
        &TrafficCounters::new(),
        |s: &IterationState<'_>| {
            let mut e = s.solution.clone();
            let step = e
                .axpy(-1.0, &exact)
                .and_then(|_| probe.apply(&e, &mut ae, &TrafficCounters::new()))
                .and_then(|_| weighted_dot(&e, &ae, &c.topo));
            match step {
                Ok(en) => energies.push(en.max(0.0).sqrt()),
                Err(err) => failure = Some(err.to_string()),
            }
        },
    ))?;
    if let Some(f) = failure {
        return Err(f);
    }
    let mut prev = energy0;
    for (i, &e) in energies.iter().enumerate() {
        ensure(e <= prev + 1e-12 * energy0, || {
            format!("iteration {}: {prev:e} -> {e:e}", i + 1)
        })?;
        prev = e;
    }
    Ok(())
}

fn cg_counter_identity() -> CheckResult {
    let c = case(3, 2, 2, 6, 0.3)?;
    let d = c.topo.dofs() as u64;
    for v in KernelVariant::ALL {
        let f = random_masked_field(&c.topo, 99);
        let mut op = core(GlobalOperator::new(&c.basis, &c.geom, &c.topo, v))?;
        let res = core(cg_solve(&f, &mut op, &c.topo, &CgConfig::default()))?;
        ensure(res.iterations_run == 100, || {
            format!("{v}: {} iterations", res.iterations_run)
        })?;
        let per = flops_per_apply(d, 6) + VECTOR_FLOPS_PER_POINT * d;
        ensure(res.iteration_counters.iter().all(|s| s.flops == per), || {
            format!("{v}: per-iteration flops")
        })?;
        ensure(res.counters.flops == 100 * per + 3 * d, || {
            format!("{v}: total flops {}", res.counters.flops)
        })?;
    }
    Ok(())
}

fn model_flops() -> CheckResult {
    ensure(CostModel::unchecked(1, 10).flops_per_iteration() == 154, || {
        "D=1 n=10".into()
    })?;
    for e in crate::config::DEFAULT_SWEEP {
        let d = (e * 1000) as u64;
        let m = core(CostModel::new(d, 10))?;
        ensure(perf_model::model_flops_per_iteration(&m) == 154 * d, || {
            format!("D={d}")
        })?;
    }
    Ok(())
}

fn model_bytes() -> CheckResult {
    for d in [1u64, 64_000, 4_096_000] {
        let m = core(CostModel::new(d, 10))?;
        ensure(
            m.bytes_per_iteration() == 240 * d
                && m.read_bytes_per_iteration() == 192 * d
                && m.write_bytes_per_iteration() == 48 * d,
            || format!("D={d}"),
        )?;
    }
    Ok(())
}

fn model_roofline_anchors() -> CheckResult {
    ensure(perf_model::intensity(10) == 154.0 / 240.0, || "intensity(10)".into())?;
    ensure(perf_model::roofline_peak(720e9, 10) == 462.0e9, || "720 GB/s".into())?;
    ensure(perf_model::roofline_peak(900e9, 10) == 577.5e9, || "900 GB/s".into())
}

fn parallel_determinism() -> CheckResult {
    let c = case(4, 2, 2, 8, 0.5)?;
    let f = random_masked_field(&c.topo, 17);
    let mut runs = Vec::new();
    for workers in [1, 3] {
        let exec = Executor::new(workers).map_err(|e| e.to_string())?;
        for v in KernelVariant::ALL {
            let res = exec.install(|| -> sem_core::Result<_> {
                let mut op = TimedOperator::new(&c.basis, &c.geom, &c.topo, v)?;
                cg_solve_with(
                    &f,
                    &mut op,
                    &c.topo,
                    &CgConfig::fixed(20)?,
                    &ParallelOps,
                    &TrafficCounters::new(),
                    |_| {},
                )
            });
            let res = core(res)?;
            runs.push((workers, v, res.residual_history, res.solution, res.counters));
        }
    }
    let serial = {
        let mut op = core(GlobalOperator::new(&c.basis, &c.geom, &c.topo, KernelVariant::Layered))?;
        core(cg_solve(&f, &mut op, &c.topo, &core(CgConfig::fixed(20))?))?
    };
    for (workers, v, hist, sol, counters) in &runs {
        let base = runs.iter().find(|r| r.1 == *v).expect("first run of each variant");
        ensure(hist == &base.2 && sol == &base.3 && counters == &base.4, || {
            format!("{v}: {workers} workers differ from 1 worker")
        })?;
        if *v == KernelVariant::Layered {
            ensure(*hist == serial.residual_history && *sol == serial.solution, || {
                format!("{v}: {workers} workers differ from the serial solve")
            })?;
        }
    }
    Ok(())
}

/// Local operator with a sign error in the `t` term of the divergence phase.
/// Used to show that the dense-oracle property detects phase-2 faults.
pub fn phase_two_sign_mutant(
    u: &ElementField,
    geom: &GeomFactors,
    basis: &PolynomialBasis,
) -> sem_core::Result<ElementField> {
    sem_core::ax::check_shapes(u, geom, basis)?;
    let n3 = u.points_per_element();
    let counters = TrafficCounters::new();
    let mut out = ElementField::zeros(u.n(), u.num_elements());
    let mut tmp = vec![vec![0.0; n3]; 6];
    for e in 0..u.num_elements() {
        let [wr, ws, wt, ur, us, ut] = &mut tmp[..] else {
            unreachable!()
        };
        reference::gradient_pass(basis, u.element(e), wr, ws, wt, &counters);
        reference::metric_pass(basis.n(), geom.element(e), wr, ws, wt, ur, us, ut, &counters);
        for v in ut.iter_mut() {
            *v = -*v;
        }
        reference::divergence_pass(basis, ur, us, ut, out.element_mut(e), &counters);
    }
    Ok(out)
}
