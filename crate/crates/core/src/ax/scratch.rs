//! One element at a time through a fixed-capacity scratch buffer.
//!
//! Per element the `u` block and the differentiation matrix are staged in
//! scratch, both stages run there, and only `w` goes back to main memory.
//! Capacity is sized for a ten-point element; larger elements are refused.

use alloc::vec::Vec;

use crate::counters::TrafficSnapshot;
use crate::{Error, PolynomialBasis, Result, TrafficCounters};

use super::{flops_per_point, geom_at, local_gradient, metric};

/// Largest element edge (in points) the scratch variant accepts.
pub const SCRATCH_MAX_POINTS: usize = 10;

/// Words needed for an `n`-point element: the `u` block (reused for `w`),
/// `ur, us, ut` and the `n x n` differentiation matrix.
pub const fn scratch_words(n: usize) -> usize {
    4 * n * n * n + n * n
}

pub const SCRATCH_CAPACITY_WORDS: usize = scratch_words(SCRATCH_MAX_POINTS);

#[derive(Debug, Clone)]
pub struct ScratchBuffer {
    n: usize,
    buf: Vec<f64>,
}

impl ScratchBuffer {
    pub fn new(n: usize) -> Result<Self> {
        let required = scratch_words(n);
        if required > SCRATCH_CAPACITY_WORDS {
            return Err(Error::ScratchCapacity {
                n,
                required,
                capacity: SCRATCH_CAPACITY_WORDS,
            });
        }
        Ok(Self {
            n,
            buf: alloc::vec![0.0; SCRATCH_CAPACITY_WORDS],
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Applies the operator to every element covered by `u`, writing `w`.
    /// `geom` must hold the matching `6 n^3`-word blocks.
    pub fn apply_elements(
        &mut self,
        basis: &PolynomialBasis,
        geom: &[f64],
        u: &[f64],
        w: &mut [f64],
        counters: &TrafficCounters,
    ) -> Result<()> {
        let n = self.n;
        if basis.n() != n {
            return Err(Error::ShapeMismatch("scratch buffer built for another n"));
        }
        let n3 = n * n * n;
        let required = scratch_words(n);
        assert!(required <= self.buf.len(), "scratch overflow: {required} words");

        let (ue, rest) = self.buf[..required].split_at_mut(n3);
        let (ur, rest) = rest.split_at_mut(n3);
        let (us, rest) = rest.split_at_mut(n3);
        let (ut, d) = rest.split_at_mut(n3);
        d.copy_from_slice(basis.diff_matrix());

        for ((src, dst), ge) in u
            .chunks_exact(n3)
            .zip(w.chunks_exact_mut(n3))
            .zip(geom.chunks_exact(6 * n3))
        {
            ue.copy_from_slice(src);
            for k in 0..n {
                for j in 0..n {
                    for i in 0..n {
                        let p = i + n * (j + n * k);
                        let (wr, ws, wt) = local_gradient(d, ue, n, i, j, k);
                        let (r, s, t) = metric(geom_at(ge, n3, p), wr, ws, wt);
                        ur[p] = r;
                        us[p] = s;
                        ut[p] = t;
                    }
                }
            }
            // transposed contraction reads D(l, i) straight from the staged matrix
            for k in 0..n {
                for j in 0..n {
                    for i in 0..n {
                        ue[i + n * (j + n * k)] = transposed_point(d, ur, us, ut, n, i, j, k);
                    }
                }
            }
            dst.copy_from_slice(ue);
        }

        let points = u.len() as u64;
        counters.add(TrafficSnapshot {
            main_memory_reads: 7 * points,
            main_memory_writes: points,
            flops: flops_per_point(n) * points,
        });
        Ok(())
    }
}

#[inline(always)]
#[allow(clippy::too_many_arguments)]
fn transposed_point(d: &[f64], ur: &[f64], us: &[f64], ut: &[f64], n: usize, i: usize, j: usize, k: usize) -> f64 {
    let mut w = 0.0;
    for l in 0..n {
        w = w
            + d[l * n + i] * ur[l + n * (j + n * k)]
            + d[l * n + j] * us[i + n * (l + n * k)]
            + d[l * n + k] * ut[i + n * (j + n * l)];
    }
    w
}
