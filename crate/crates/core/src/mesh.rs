//! Lattice of axis-aligned cubical hexahedra.

use crate::{Error, Result};

/// `ex x ey x ez` box of cubical elements of edge length `element_extent`,
/// each carrying `n^3` GLL points.
///
/// Elements are numbered x-fastest: `e = a + ex * (b + ey * c)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxMesh {
    pub ex: usize,
    pub ey: usize,
    pub ez: usize,
    pub n: usize,
    pub element_extent: f64,
}

impl BoxMesh {
    pub fn new(ex: usize, ey: usize, ez: usize, n: usize, element_extent: f64) -> Result<Self> {
        if ex == 0 || ey == 0 || ez == 0 {
            return Err(Error::InvalidMesh("element counts must be positive"));
        }
        if n < 2 {
            return Err(Error::InvalidMesh("need at least two points per direction"));
        }
        if !(element_extent > 0.0) || !element_extent.is_finite() {
            return Err(Error::InvalidMesh("element extent must be positive and finite"));
        }
        ex.checked_mul(ey)
            .and_then(|e| e.checked_mul(ez))
            .and_then(|e| e.checked_mul(n * n * n))
            .ok_or(Error::InvalidMesh("mesh too large"))?;
        Ok(Self {
            ex,
            ey,
            ez,
            n,
            element_extent,
        })
    }

    /// Number of elements `E`.
    pub fn num_elements(&self) -> usize {
        self.ex * self.ey * self.ez
    }

    pub fn points_per_element(&self) -> usize {
        self.n * self.n * self.n
    }

    /// Element-local degrees of freedom `D = E n^3`, interface nodes counted
    /// once per element.
    pub fn dofs(&self) -> usize {
        self.num_elements() * self.points_per_element()
    }

    /// Lattice coordinates `(a, b, c)` of element `e`.
    pub fn element_coords(&self, e: usize) -> (usize, usize, usize) {
        (e % self.ex, (e / self.ex) % self.ey, e / (self.ex * self.ey))
    }

    /// Points of the global (deduplicated) grid per axis.
    pub fn global_grid(&self) -> (usize, usize, usize) {
        let m = self.n - 1;
        (self.ex * m + 1, self.ey * m + 1, self.ez * m + 1)
    }
}

pub fn build_mesh(ex: usize, ey: usize, ez: usize, n: usize, element_extent: f64) -> Result<BoxMesh> {
    BoxMesh::new(ex, ey, ez, n, element_extent)
}
