use alloc::vec;
use alloc::vec::Vec;

use crate::{BoxMesh, Error, Result};

/// Scalar field stored element by element, `n^3` values per element with
/// `i` fastest: value `(i, j, k, e)` lives at `i + n (j + n (k + n e))`.
/// Interface nodes are duplicated in every element that touches them.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementField {
    n: usize,
    num_elements: usize,
    values: Vec<f64>,
}

impl ElementField {
    pub fn zeros(n: usize, num_elements: usize) -> Self {
        Self {
            n,
            num_elements,
            values: vec![0.0; n * n * n * num_elements],
        }
    }

    pub fn zeros_like_mesh(mesh: &BoxMesh) -> Self {
        Self::zeros(mesh.n, mesh.num_elements())
    }

    pub fn constant(n: usize, num_elements: usize, value: f64) -> Self {
        Self {
            n,
            num_elements,
            values: vec![value; n * n * n * num_elements],
        }
    }

    /// Wraps `values`, which must hold exactly `E n^3` finite numbers.
    pub fn from_values(n: usize, num_elements: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n * n * n * num_elements {
            return Err(Error::ShapeMismatch("field length is not E * n^3"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self {
            n,
            num_elements,
            values,
        })
    }

    /// Builds a field by evaluating `f(i, j, k, e)` at every local point.
    pub fn from_fn(n: usize, num_elements: usize, mut f: impl FnMut(usize, usize, usize, usize) -> f64) -> Self {
        let mut values = Vec::with_capacity(n * n * n * num_elements);
        for e in 0..num_elements {
            for k in 0..n {
                for j in 0..n {
                    for i in 0..n {
                        values.push(f(i, j, k, e));
                    }
                }
            }
        }
        Self {
            n,
            num_elements,
            values,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_elements(&self) -> usize {
        self.num_elements
    }

    pub fn points_per_element(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize, e: usize) -> usize {
        i + self.n * (j + self.n * (k + self.n * e))
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize, e: usize) -> f64 {
        self.values[self.index(i, j, k, e)]
    }

    pub fn element(&self, e: usize) -> &[f64] {
        let m = self.points_per_element();
        &self.values[e * m..(e + 1) * m]
    }

    pub fn element_mut(&mut self, e: usize) -> &mut [f64] {
        let m = self.points_per_element();
        &mut self.values[e * m..(e + 1) * m]
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.n == other.n && self.num_elements == other.num_elements
    }

    pub fn fill(&mut self, value: f64) {
        self.values.fill(value);
    }

    pub fn copy_from(&mut self, other: &Self) -> Result<()> {
        if !self.same_shape(other) {
            return Err(Error::ShapeMismatch("fields differ in shape"));
        }
        self.values.copy_from_slice(&other.values);
        Ok(())
    }

    /// Largest absolute value, zero for an empty field.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `self <- self * alpha`
    pub fn scale(&mut self, alpha: f64) {
        self.values.iter_mut().for_each(|v| *v *= alpha);
    }

    /// `self <- self + alpha * other`
    pub fn axpy(&mut self, alpha: f64, other: &Self) -> Result<()> {
        if !self.same_shape(other) {
            return Err(Error::ShapeMismatch("fields differ in shape"));
        }
        for (y, x) in self.values.iter_mut().zip(&other.values) {
            *y += alpha * x;
        }
        Ok(())
    }
}
