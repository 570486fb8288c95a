//! Gauss-Lobatto-Legendre nodal basis.

use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Smallest supported number of GLL points per direction.
pub const MIN_POINTS: usize = 2;
/// Largest supported number of GLL points per direction.
pub const MAX_POINTS: usize = 16;

const NEWTON_TOLERANCE: f64 = 1e-15;
const NEWTON_MAX_ITERATIONS: usize = 100;

/// GLL nodes, quadrature weights and the nodal differentiation matrix for
/// `n` points per direction (polynomial degree `n - 1`).
///
/// `diff` is stored row-major: `diff[i * n + l]` is the derivative of the
/// `l`-th Lagrange polynomial at node `i`. `diff_t` is its transpose.
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialBasis {
    n: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    diff: Vec<f64>,
    diff_t: Vec<f64>,
}

impl PolynomialBasis {
    pub fn new(n: usize) -> Result<Self> {
        if !(MIN_POINTS..=MAX_POINTS).contains(&n) {
            return Err(Error::UnsupportedPoints(n));
        }
        let degree = n - 1;
        let nodes = gll_nodes(n)?;

        let norm = (n * (n - 1)) as f64;
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let (p, _) = legendre(degree, nodes[i]);
            let w = 2.0 / (norm * p * p);
            weights[i] = w;
            weights[n - 1 - i] = w;
        }

        let p_at: Vec<f64> = nodes.iter().map(|&x| legendre(degree, x).0).collect();
        let mut diff = vec![0.0; n * n];
        for i in 0..n {
            let mut row_sum = 0.0;
            for l in 0..n {
                if l != i {
                    let d = p_at[i] / (p_at[l] * (nodes[i] - nodes[l]));
                    diff[i * n + l] = d;
                    row_sum += d;
                }
            }
            // negative-sum diagonal keeps rows exactly annihilating constants
            diff[i * n + i] = -row_sum;
        }

        let mut diff_t = vec![0.0; n * n];
        for i in 0..n {
            for l in 0..n {
                diff_t[l * n + i] = diff[i * n + l];
            }
        }

        Ok(Self {
            n,
            nodes,
            weights,
            diff,
            diff_t,
        })
    }

    /// Points per direction.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> usize {
        self.n - 1
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Row-major `n x n` differentiation matrix (`dxm1`).
    pub fn diff_matrix(&self) -> &[f64] {
        &self.diff
    }

    /// Row-major transpose of [`Self::diff_matrix`] (`dxtm1`).
    pub fn diff_t_matrix(&self) -> &[f64] {
        &self.diff_t
    }

    #[inline]
    pub fn diff(&self, i: usize, l: usize) -> f64 {
        self.diff[i * self.n + l]
    }

    #[inline]
    pub fn diff_t(&self, i: usize, l: usize) -> f64 {
        self.diff_t[i * self.n + l]
    }
}

pub fn build_basis(n: usize) -> Result<PolynomialBasis> {
    PolynomialBasis::new(n)
}

/// Legendre polynomial `P_degree(x)` and its derivative by the three-term
/// recurrence.
pub(crate) fn legendre(degree: usize, x: f64) -> (f64, f64) {
    if degree == 0 {
        return (1.0, 0.0);
    }
    let (mut p_prev, mut p) = (1.0, x);
    let (mut dp_prev, mut dp) = (0.0, 1.0);
    for k in 1..degree {
        let kf = k as f64;
        let p_next = ((2.0 * kf + 1.0) * x * p - kf * p_prev) / (kf + 1.0);
        // P'_{k+1} = P'_{k-1} + (2k + 1) P_k
        let dp_next = dp_prev + (2.0 * kf + 1.0) * p;
        p_prev = p;
        p = p_next;
        dp_prev = dp;
        dp = dp_next;
    }
    (p, dp)
}

/// Roots of `(1 - x^2) P'_{n-1}(x)` in ascending order.
///
/// Newton on `q(x) = (1 - x^2) P'_N(x)`; the Legendre equation gives
/// `q'(x) = -N (N + 1) P_N(x)`. Only the lower half is solved, the upper half
/// is mirrored so the node set is exactly antisymmetric.
fn gll_nodes(n: usize) -> Result<Vec<f64>> {
    let degree = n - 1;
    let nn1 = (degree * (degree + 1)) as f64;
    let mut nodes = vec![0.0; n];
    nodes[0] = -1.0;
    nodes[n - 1] = 1.0;

    for i in 1..n / 2 {
        let mut x = -libm::cos(core::f64::consts::PI * i as f64 / degree as f64);
        let mut converged = false;
        for _ in 0..NEWTON_MAX_ITERATIONS {
            let (p, dp) = legendre(degree, x);
            let dx = (1.0 - x * x) * dp / (nn1 * p);
            x += dx;
            if dx.abs() <= NEWTON_TOLERANCE {
                converged = true;
                break;
            }
        }
        if !converged || !x.is_finite() {
            return Err(Error::NewtonNotConverged { index: i });
        }
        nodes[i] = x;
        nodes[n - 1 - i] = -x;
    }
    // odd n keeps the exact zero in the middle from the initialization
    Ok(nodes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn two_points_is_linear_basis() {
        let b = build_basis(2).unwrap();
        assert_eq!(b.nodes(), &[-1.0, 1.0]);
        assert_eq!(b.weights(), &[1.0, 1.0]);
        assert_eq!(b.diff_matrix(), &[-0.5, 0.5, -0.5, 0.5]);
    }

    #[test]
    fn three_points() {
        let b = build_basis(3).unwrap();
        assert_eq!(b.nodes(), &[-1.0, 0.0, 1.0]);
        let expected = [1.0 / 3.0, 4.0 / 3.0, 1.0 / 3.0];
        for (w, e) in b.weights().iter().zip(expected) {
            assert!(close(*w, e, 1e-15), "{w} vs {e}");
        }
        assert!(close(b.weights().iter().sum::<f64>(), 2.0, 1e-14));
    }

    #[test]
    fn four_points_interior_nodes() {
        // roots of P'_3(x) = (15 x^2 - 3) / 2
        let b = build_basis(4).unwrap();
        let r = 1.0 / 5.0f64.sqrt();
        assert!(close(b.nodes()[1], -r, 1e-15));
        assert!(close(b.nodes()[2], r, 1e-15));
        assert!(close(b.nodes()[2], 0.447_213_595_5, 1e-10));
        assert!(close(b.weights()[0], 1.0 / 6.0, 1e-15));
        assert!(close(b.weights()[1], 5.0 / 6.0, 1e-15));
    }

    #[test]
    fn rejects_out_of_range() {
        assert_eq!(build_basis(1), Err(Error::UnsupportedPoints(1)));
        assert_eq!(build_basis(17), Err(Error::UnsupportedPoints(17)));
        assert_eq!(build_basis(0), Err(Error::UnsupportedPoints(0)));
    }

    #[test]
    fn invariants_for_all_supported_n() {
        for n in MIN_POINTS..=MAX_POINTS {
            let b = build_basis(n).unwrap();
            let x = b.nodes();
            assert_eq!(x[0], -1.0);
            assert_eq!(x[n - 1], 1.0);
            for i in 0..n {
                assert!(close(x[i], -x[n - 1 - i], 1e-14));
                if i > 0 {
                    assert!(x[i] > x[i - 1]);
                }
            }
            assert!(b.weights().iter().all(|&w| w > 0.0));
            assert!(close(b.weights().iter().sum::<f64>(), 2.0, 1e-13), "n={n}");

            for i in 0..n {
                let row: f64 = (0..n).map(|l| b.diff(i, l)).sum();
                assert!(row.abs() <= 1e-12, "n={n} row {i} sums to {row}");
                for l in 0..n {
                    assert_eq!(b.diff_t(l, i).to_bits(), b.diff(i, l).to_bits());
                }
            }

            // monomials of degree < n are differentiated exactly
            for p in 1..n as i32 {
                for i in 0..n {
                    let d: f64 = (0..n).map(|l| b.diff(i, l) * x[l].powi(p)).sum();
                    let exact = p as f64 * x[i].powi(p - 1);
                    assert!(close(d, exact, 1e-11), "n={n} p={p} i={i}: {d} vs {exact}");
                }
            }

            // GLL quadrature is exact up to degree 2n - 3
            for p in 0..=(2 * n - 3) as i32 {
                let q: f64 = x.iter().zip(b.weights()).map(|(x, w)| w * x.powi(p)).sum();
                let exact = if p % 2 == 1 { 0.0 } else { 2.0 / (p as f64 + 1.0) };
                assert!(close(q, exact, 1e-12), "n={n} p={p}: {q} vs {exact}");
            }
        }
    }

    #[test]
    fn endpoint_diagonal_matches_closed_form() {
        for n in 2..=12 {
            let b = build_basis(n).unwrap();
            let nd = (n - 1) as f64;
            let d00 = -nd * (nd + 1.0) / 4.0;
            assert!(close(b.diff(0, 0), d00, 1e-10 * d00.abs()));
            assert!(close(b.diff(n - 1, n - 1), -d00, 1e-10 * d00.abs()));
        }
    }
}
