//! Layer-by-layer sweep with an `n x n` working set.
//!
//! Each element is traversed one `k` layer at a time. Per `(i, j)` column the
//! kernel keeps the `u` column and a `w` accumulator of length `n` (the
//! per-thread registers of a 2D thread block); the current layer of `u`,
//! `ur` and `us` lives in `n x n` layer buffers. Every layer runs two
//! sub-passes, mirroring the two block synchronizations:
//!
//! 1. gradient and metric for the whole layer; `ur, us` go to the layer
//!    buffers, `ut` is scattered into the column accumulators right away,
//! 2. the `r` and `s` transposed contractions of the layer are added to the
//!    accumulators at height `k`.
//!
//! Main-memory traffic equals the scratch variant: `u` and the geometric
//! factors in, `w` out. Ten-point elements run a const-generic path whose
//! fixed-length inner loops the compiler unrolls; other sizes take the
//! runtime-`n` path.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;

use crate::counters::TrafficSnapshot;
use crate::{PolynomialBasis, TrafficCounters};

use super::{flops_per_point, geom_at, metric};

/// Points per direction of the compile-time specialized path.
pub const SPECIALIZED_POINTS: usize = 10;

#[derive(Debug, Clone)]
pub enum LayeredScratch {
    Specialized(Box<Fixed<SPECIALIZED_POINTS>>),
    Generic(Generic),
}

impl LayeredScratch {
    pub fn new(basis: &PolynomialBasis) -> Self {
        if basis.n() == SPECIALIZED_POINTS {
            Self::Specialized(Fixed::boxed(basis))
        } else {
            Self::Generic(Generic::new(basis))
        }
    }

    /// Forces the runtime-`n` path even for ten-point elements.
    pub fn generic(basis: &PolynomialBasis) -> Self {
        Self::Generic(Generic::new(basis))
    }

    pub fn n(&self) -> usize {
        match self {
            Self::Specialized(_) => SPECIALIZED_POINTS,
            Self::Generic(g) => g.n,
        }
    }

    pub fn is_specialized(&self) -> bool {
        matches!(self, Self::Specialized(_))
    }

    /// Applies the operator to every element covered by `u`, writing `w`.
    pub fn apply_elements(&mut self, geom: &[f64], u: &[f64], w: &mut [f64], counters: &TrafficCounters) {
        let n = self.n();
        let n3 = n * n * n;
        for ((ue, we), ge) in u
            .chunks_exact(n3)
            .zip(w.chunks_exact_mut(n3))
            .zip(geom.chunks_exact(6 * n3))
        {
            match self {
                Self::Specialized(f) => f.element(ge, ue, we),
                Self::Generic(g) => g.element(ge, ue, we),
            }
        }
        let points = u.len() as u64;
        counters.add(TrafficSnapshot {
            main_memory_reads: 7 * points,
            main_memory_writes: points,
            flops: flops_per_point(n) * points,
        });
    }
}

/// Fixed-size working set; indices are `[j][i]` for layers and `[j][i][k]`
/// for columns.
#[derive(Debug, Clone)]
pub struct Fixed<const N: usize> {
    d: [[f64; N]; N],
    u_col: [[[f64; N]; N]; N],
    w_col: [[[f64; N]; N]; N],
    u_layer: [[f64; N]; N],
    ur_layer: [[f64; N]; N],
    us_layer: [[f64; N]; N],
}

impl<const N: usize> Fixed<N> {
    fn boxed(basis: &PolynomialBasis) -> Box<Self> {
        assert_eq!(basis.n(), N);
        let mut f = Box::new(Self {
            d: [[0.0; N]; N],
            u_col: [[[0.0; N]; N]; N],
            w_col: [[[0.0; N]; N]; N],
            u_layer: [[0.0; N]; N],
            ur_layer: [[0.0; N]; N],
            us_layer: [[0.0; N]; N],
        });
        for i in 0..N {
            for l in 0..N {
                f.d[i][l] = basis.diff(i, l);
            }
        }
        f
    }

    fn element(&mut self, ge: &[f64], ue: &[f64], we: &mut [f64]) {
        let n3 = N * N * N;
        let d = &self.d;
        for k in 0..N {
            for j in 0..N {
                for i in 0..N {
                    self.u_col[j][i][k] = ue[i + N * (j + N * k)];
                    self.w_col[j][i][k] = 0.0;
                }
            }
        }

        for k in 0..N {
            for j in 0..N {
                for i in 0..N {
                    self.u_layer[j][i] = self.u_col[j][i][k];
                }
            }

            for j in 0..N {
                for i in 0..N {
                    let (mut wr, mut ws, mut wt) = (0.0, 0.0, 0.0);
                    for l in 0..N {
                        wr += d[i][l] * self.u_layer[j][l];
                        ws += d[j][l] * self.u_layer[l][i];
                        wt += d[k][l] * self.u_col[j][i][l];
                    }
                    let (r, s, t) = metric(geom_at(ge, n3, i + N * (j + N * k)), wr, ws, wt);
                    self.ur_layer[j][i] = r;
                    self.us_layer[j][i] = s;
                    let col = &mut self.w_col[j][i];
                    for m in 0..N {
                        col[m] += d[k][m] * t;
                    }
                }
            }

            for j in 0..N {
                for i in 0..N {
                    let mut acc = self.w_col[j][i][k];
                    for l in 0..N {
                        acc += d[l][i] * self.ur_layer[j][l] + d[l][j] * self.us_layer[l][i];
                    }
                    self.w_col[j][i][k] = acc;
                }
            }
        }

        for k in 0..N {
            for j in 0..N {
                for i in 0..N {
                    we[i + N * (j + N * k)] = self.w_col[j][i][k];
                }
            }
        }
    }
}

/// Runtime-`n` working set with the same layout as [`Fixed`], flattened.
#[derive(Debug, Clone)]
pub struct Generic {
    n: usize,
    d: Vec<f64>,
    u_col: Vec<f64>,
    w_col: Vec<f64>,
    u_layer: Vec<f64>,
    ur_layer: Vec<f64>,
    us_layer: Vec<f64>,
}

impl Generic {
    fn new(basis: &PolynomialBasis) -> Self {
        let n = basis.n();
        Self {
            n,
            d: basis.diff_matrix().to_vec(),
            u_col: vec![0.0; n * n * n],
            w_col: vec![0.0; n * n * n],
            u_layer: vec![0.0; n * n],
            ur_layer: vec![0.0; n * n],
            us_layer: vec![0.0; n * n],
        }
    }

    fn element(&mut self, ge: &[f64], ue: &[f64], we: &mut [f64]) {
        let n = self.n;
        let n3 = n * n * n;
        let d = &self.d;
        // column (i, j) starts at (j n + i) n
        for k in 0..n {
            for j in 0..n {
                for i in 0..n {
                    self.u_col[(j * n + i) * n + k] = ue[i + n * (j + n * k)];
                }
            }
        }
        self.w_col.fill(0.0);

        for k in 0..n {
            for p in 0..n * n {
                self.u_layer[p] = self.u_col[p * n + k];
            }

            for j in 0..n {
                for i in 0..n {
                    let col = (j * n + i) * n;
                    let (mut wr, mut ws, mut wt) = (0.0, 0.0, 0.0);
                    for l in 0..n {
                        wr += d[i * n + l] * self.u_layer[j * n + l];
                        ws += d[j * n + l] * self.u_layer[l * n + i];
                        wt += d[k * n + l] * self.u_col[col + l];
                    }
                    let (r, s, t) = metric(geom_at(ge, n3, i + n * (j + n * k)), wr, ws, wt);
                    self.ur_layer[j * n + i] = r;
                    self.us_layer[j * n + i] = s;
                    for m in 0..n {
                        self.w_col[col + m] += d[k * n + m] * t;
                    }
                }
            }

            for j in 0..n {
                for i in 0..n {
                    let at = (j * n + i) * n + k;
                    let mut acc = self.w_col[at];
                    for l in 0..n {
                        acc += d[l * n + i] * self.ur_layer[j * n + l] + d[l * n + j] * self.us_layer[l * n + i];
                    }
                    self.w_col[at] = acc;
                }
            }
        }

        for k in 0..n {
            for j in 0..n {
                for i in 0..n {
                    we[i + n * (j + n * k)] = self.w_col[(j * n + i) * n + k];
                }
            }
        }
    }
}
