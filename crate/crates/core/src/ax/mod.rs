//! Element-local Poisson operator `w = A_local u`.
//!
//! For every element and point `(i, j, k)` the operator computes
//!
//! ```text
//! wr = sum_l D(i,l) u(l,j,k)   ws = sum_l D(j,l) u(i,l,k)   wt = sum_l D(k,l) u(i,j,l)
//! ur = g1 wr + g2 ws + g3 wt   us = g2 wr + g4 ws + g5 wt   ut = g3 wr + g5 ws + g6 wt
//! w(i,j,k) = sum_l Dt(i,l) ur(l,j,k) + Dt(j,l) us(i,l,k) + Dt(k,l) ut(i,j,l)
//! ```
//!
//! Three variants compute this with different intermediate storage:
//!
//! * [`KernelVariant::Reference`] keeps every intermediate in full-size
//!   arrays and sweeps the whole mesh once per stage ([`reference`]).
//! * [`KernelVariant::Scratch`] stages one element at a time in a small
//!   scratch buffer and only touches main memory for `u`, the geometric
//!   factors and `w` ([`scratch`]). Refuses more than ten points per
//!   direction.
//! * [`KernelVariant::Layered`] walks each element one `k` layer at a time
//!   with an `n x n` working set and per-column accumulators ([`layered`]).
//!
//! The element-range entry points in the submodules take contiguous slices
//! covering whole elements, so a caller can split a mesh across threads.

pub mod layered;
pub mod reference;
pub mod scratch;

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::{ElementField, Error, GeomFactors, PolynomialBasis, Result, TrafficCounters};

pub use layered::LayeredScratch;
pub use scratch::ScratchBuffer;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum KernelVariant {
    Reference,
    Scratch,
    Layered,
}

impl KernelVariant {
    pub const ALL: [KernelVariant; 3] = [Self::Reference, Self::Scratch, Self::Layered];

    pub fn name(self) -> &'static str {
        match self {
            Self::Reference => "reference",
            Self::Scratch => "scratch",
            Self::Layered => "layered",
        }
    }
}

impl fmt::Display for KernelVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for KernelVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "reference" => Ok(Self::Reference),
            "scratch" => Ok(Self::Scratch),
            "layered" => Ok(Self::Layered),
            _ => Err(Error::InvalidArgument("unknown kernel variant")),
        }
    }
}

/// Flops of one operator application on `dofs` local points:
/// `6n` per point for the three gradient contractions, 15 for the metric
/// combination and `6n` for the transposed contractions.
pub const fn flops_per_apply(dofs: u64, n: u64) -> u64 {
    dofs * (12 * n + 15)
}

/// Flops per local point, `12n + 15`.
pub(crate) const fn flops_per_point(n: usize) -> u64 {
    12 * n as u64 + 15
}

/// Reusable storage for repeated applications.
///
/// Holds the six full-size intermediates of the reference variant (allocated
/// on first use) and one scratch buffer per staged variant.
#[derive(Debug, Default)]
pub struct AxWorkspace {
    intermediates: Vec<f64>,
    scratch: Option<ScratchBuffer>,
    layered: Option<LayeredScratch>,
}

impl AxWorkspace {
    pub fn new() -> Self {
        Self::default()
    }

    /// Six zeroed full-size arrays `wr, ws, wt, ur, us, ut` of `dofs` words each.
    pub fn intermediates(&mut self, dofs: usize) -> [&mut [f64]; 6] {
        if self.intermediates.len() != 6 * dofs {
            self.intermediates = alloc::vec![0.0; 6 * dofs];
        }
        reference::split_intermediates(&mut self.intermediates, dofs)
    }

    fn scratch(&mut self, n: usize) -> Result<&mut ScratchBuffer> {
        if self.scratch.as_ref().map(|s| s.n()) != Some(n) {
            self.scratch = Some(ScratchBuffer::new(n)?);
        }
        Ok(self.scratch.as_mut().unwrap())
    }

    fn layered(&mut self, basis: &PolynomialBasis) -> &mut LayeredScratch {
        if self.layered.as_ref().map(|s| s.n()) != Some(basis.n()) {
            self.layered = Some(LayeredScratch::new(basis));
        }
        self.layered.as_mut().unwrap()
    }
}

/// Checks that field, geometry and basis describe the same `E` and `n`.
pub fn check_shapes(u: &ElementField, geom: &GeomFactors, basis: &PolynomialBasis) -> Result<()> {
    if u.n() != basis.n() || geom.n() != basis.n() {
        return Err(Error::ShapeMismatch("field, geometry and basis disagree on n"));
    }
    if u.num_elements() != geom.num_elements() {
        return Err(Error::ShapeMismatch("field and geometry disagree on element count"));
    }
    Ok(())
}

/// Applies the local operator into `w`, reusing `workspace`.
pub fn apply_ax_into(
    u: &ElementField,
    geom: &GeomFactors,
    basis: &PolynomialBasis,
    variant: KernelVariant,
    w: &mut ElementField,
    workspace: &mut AxWorkspace,
    counters: &TrafficCounters,
) -> Result<()> {
    check_shapes(u, geom, basis)?;
    if !u.same_shape(w) {
        return Err(Error::ShapeMismatch("output field differs in shape"));
    }
    match variant {
        KernelVariant::Reference => {
            let [wr, ws, wt, ur, us, ut] = workspace.intermediates(u.len());
            reference::gradient_pass(basis, u.values(), wr, ws, wt, counters);
            reference::metric_pass(basis.n(), geom.values(), wr, ws, wt, ur, us, ut, counters);
            reference::divergence_pass(basis, ur, us, ut, w.values_mut(), counters);
        }
        KernelVariant::Scratch => {
            let scratch = workspace.scratch(basis.n())?;
            scratch.apply_elements(basis, geom.values(), u.values(), w.values_mut(), counters)?;
        }
        KernelVariant::Layered => {
            let layered = workspace.layered(basis);
            layered.apply_elements(geom.values(), u.values(), w.values_mut(), counters);
        }
    }
    Ok(())
}

/// `w = A_local u` with freshly allocated storage.
pub fn apply_ax(
    u: &ElementField,
    geom: &GeomFactors,
    basis: &PolynomialBasis,
    variant: KernelVariant,
    counters: &TrafficCounters,
) -> Result<ElementField> {
    let mut w = ElementField::zeros(u.n(), u.num_elements());
    apply_ax_into(u, geom, basis, variant, &mut w, &mut AxWorkspace::new(), counters)?;
    Ok(w)
}

/// Gradient contractions at point `(i, j, k)` of one element block.
#[inline(always)]
pub(crate) fn local_gradient(d: &[f64], ue: &[f64], n: usize, i: usize, j: usize, k: usize) -> (f64, f64, f64) {
    let (mut wr, mut ws, mut wt) = (0.0, 0.0, 0.0);
    for l in 0..n {
        wr += d[i * n + l] * ue[l + n * (j + n * k)];
        ws += d[j * n + l] * ue[i + n * (l + n * k)];
        wt += d[k * n + l] * ue[i + n * (j + n * l)];
    }
    (wr, ws, wt)
}

/// Symmetric metric times the reference gradient.
#[inline(always)]
pub(crate) fn metric(g: [f64; 6], wr: f64, ws: f64, wt: f64) -> (f64, f64, f64) {
    (
        g[0] * wr + g[1] * ws + g[2] * wt,
        g[1] * wr + g[3] * ws + g[4] * wt,
        g[2] * wr + g[4] * ws + g[5] * wt,
    )
}

/// Transposed contractions at point `(i, j, k)`. Each `l` adds its three
/// terms to the running value; every variant sums in this order.
#[inline(always)]
#[allow(clippy::too_many_arguments)]
pub(crate) fn local_divergence(
    dt: &[f64],
    ur: &[f64],
    us: &[f64],
    ut: &[f64],
    n: usize,
    i: usize,
    j: usize,
    k: usize,
) -> f64 {
    let mut w = 0.0;
    for l in 0..n {
        w = w
            + dt[i * n + l] * ur[l + n * (j + n * k)]
            + dt[j * n + l] * us[i + n * (l + n * k)]
            + dt[k * n + l] * ut[i + n * (j + n * l)];
    }
    w
}

#[inline(always)]
pub(crate) fn geom_at(ge: &[f64], n3: usize, p: usize) -> [f64; 6] {
    [
        ge[p],
        ge[n3 + p],
        ge[2 * n3 + p],
        ge[3 * n3 + p],
        ge[4 * n3 + p],
        ge[5 * n3 + p],
    ]
}
