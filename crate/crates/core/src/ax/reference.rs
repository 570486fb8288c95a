//! Full-size intermediates, one sweep over the mesh per stage.
//!
//! Stage 1 writes the reference gradient `wr, ws, wt` to full-size arrays,
//! stage 2 combines it with the geometric factors into `ur, us, ut`, stage 3
//! reads those back for the transposed contractions. Every intermediate makes
//! a round trip through main memory, which costs `6D` extra word reads and
//! `6D` extra word writes compared with the staged variants.

use crate::counters::TrafficSnapshot;
use crate::{PolynomialBasis, TrafficCounters};

use super::{geom_at, local_divergence, local_gradient, metric};

/// Splits a `6 * dofs` buffer into `[wr, ws, wt, ur, us, ut]`.
pub(crate) fn split_intermediates(buf: &mut [f64], dofs: usize) -> [&mut [f64]; 6] {
    let (wr, rest) = buf.split_at_mut(dofs);
    let (ws, rest) = rest.split_at_mut(dofs);
    let (wt, rest) = rest.split_at_mut(dofs);
    let (ur, rest) = rest.split_at_mut(dofs);
    let (us, ut) = rest.split_at_mut(dofs);
    [wr, ws, wt, ur, us, ut]
}

/// `wr, ws, wt` for every point of the elements covered by `u`.
pub fn gradient_pass(
    basis: &PolynomialBasis,
    u: &[f64],
    wr: &mut [f64],
    ws: &mut [f64],
    wt: &mut [f64],
    counters: &TrafficCounters,
) {
    let n = basis.n();
    let n3 = n * n * n;
    let d = basis.diff_matrix();
    for (e, ue) in u.chunks_exact(n3).enumerate() {
        let base = e * n3;
        for k in 0..n {
            for j in 0..n {
                for i in 0..n {
                    let p = i + n * (j + n * k);
                    let (r, s, t) = local_gradient(d, ue, n, i, j, k);
                    wr[base + p] = r;
                    ws[base + p] = s;
                    wt[base + p] = t;
                }
            }
        }
    }
    let points = u.len() as u64;
    counters.add(TrafficSnapshot {
        main_memory_reads: points,
        main_memory_writes: 3 * points,
        flops: 6 * n as u64 * points,
    });
}

/// `ur, us, ut` from the gradient arrays and the geometric factors.
#[allow(clippy::too_many_arguments)]
pub fn metric_pass(
    n: usize,
    geom: &[f64],
    wr: &[f64],
    ws: &[f64],
    wt: &[f64],
    ur: &mut [f64],
    us: &mut [f64],
    ut: &mut [f64],
    counters: &TrafficCounters,
) {
    let n3 = n * n * n;
    for (e, ge) in geom.chunks_exact(6 * n3).enumerate() {
        let base = e * n3;
        for p in 0..n3 {
            let q = base + p;
            let (r, s, t) = metric(geom_at(ge, n3, p), wr[q], ws[q], wt[q]);
            ur[q] = r;
            us[q] = s;
            ut[q] = t;
        }
    }
    let points = wr.len() as u64;
    counters.add(TrafficSnapshot {
        main_memory_reads: 9 * points,
        main_memory_writes: 3 * points,
        flops: 15 * points,
    });
}

/// `w` from the full-size `ur, us, ut` arrays.
pub fn divergence_pass(
    basis: &PolynomialBasis,
    ur: &[f64],
    us: &[f64],
    ut: &[f64],
    w: &mut [f64],
    counters: &TrafficCounters,
) {
    let n = basis.n();
    let n3 = n * n * n;
    let dt = basis.diff_t_matrix();
    for (e, we) in w.chunks_exact_mut(n3).enumerate() {
        let block = e * n3..(e + 1) * n3;
        let (re, se, te) = (&ur[block.clone()], &us[block.clone()], &ut[block]);
        for k in 0..n {
            for j in 0..n {
                for i in 0..n {
                    we[i + n * (j + n * k)] = local_divergence(dt, re, se, te, n, i, j, k);
                }
            }
        }
    }
    let points = w.len() as u64;
    counters.add(TrafficSnapshot {
        main_memory_reads: 3 * points,
        main_memory_writes: points,
        flops: 6 * n as u64 * points,
    });
}
