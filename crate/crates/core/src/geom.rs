//! Geometric factors of the affine box mapping.

use alloc::vec::Vec;

use crate::{BoxMesh, Error, PolynomialBasis, Result};

/// Number of independent entries of the symmetric metric tensor.
pub const GEOM_COMPONENTS: usize = 6;

/// Per element and nodal point, the six entries `g1..g6` of the symmetric
/// tensor `(g1 g2 g3; g2 g4 g5; g3 g5 g6)` scaled by quadrature weight and
/// Jacobian.
///
/// Layout follows `gxyz(i, j, k, m, e)`: for element `e`, component `m`
/// (0-based) is a contiguous `n^3` block starting at `(e * 6 + m) * n^3`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeomFactors {
    n: usize,
    num_elements: usize,
    values: Vec<f64>,
}

impl GeomFactors {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_elements(&self) -> usize {
        self.num_elements
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// The `6 n^3` factors of element `e`.
    pub fn element(&self, e: usize) -> &[f64] {
        let m = GEOM_COMPONENTS * self.n * self.n * self.n;
        &self.values[e * m..(e + 1) * m]
    }

    /// `gxyz(i, j, k, component + 1, e)`, component in `0..6`.
    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize, component: usize, e: usize) -> f64 {
        let n3 = self.n * self.n * self.n;
        self.values[(e * GEOM_COMPONENTS + component) * n3 + i + self.n * (j + self.n * k)]
    }
}

/// Metric terms for uniform cubical elements of extent `h`.
///
/// The reference-to-physical map is `x = x0 + (h/2) r` per axis, so the
/// Jacobian is `(h/2)^3` and the inverse metric `(2/h)^2 I`: the diagonal
/// terms reduce to `w_i w_j w_k (h/2)` and the off-diagonal terms vanish.
pub fn build_geom(mesh: &BoxMesh, basis: &PolynomialBasis) -> Result<GeomFactors> {
    if mesh.n != basis.n() {
        return Err(Error::ShapeMismatch("mesh and basis disagree on n"));
    }
    let n = mesh.n;
    let n3 = n * n * n;
    let num_elements = mesh.num_elements();
    let half_extent = 0.5 * mesh.element_extent;
    let w = basis.weights();

    let mut block = alloc::vec![0.0; GEOM_COMPONENTS * n3];
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                let g = w[i] * w[j] * w[k] * half_extent;
                let p = i + n * (j + n * k);
                block[p] = g;
                block[3 * n3 + p] = g;
                block[5 * n3 + p] = g;
            }
        }
    }

    let mut values = Vec::with_capacity(block.len() * num_elements);
    for _ in 0..num_elements {
        values.extend_from_slice(&block);
    }
    Ok(GeomFactors {
        n,
        num_elements,
        values,
    })
}
