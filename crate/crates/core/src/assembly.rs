//! Direct stiffness summation and Dirichlet masking.

use alloc::vec;
use alloc::vec::Vec;

use crate::ax::{apply_ax_into, AxWorkspace};
use crate::cg::LinearOperator;
use crate::{BoxMesh, ElementField, Error, GeomFactors, KernelVariant, PolynomialBasis, Result, TrafficCounters};

/// Connectivity of the element-local storage.
///
/// Global ids are positions on the integer lattice of the deduplicated grid,
/// `gx * (gy * z + y) + x`, so coincident points of neighbouring elements
/// share an id without any floating-point matching. The inverse map is kept
/// in compressed form: the local copies of id `g` are
/// `members[offsets[g]..offsets[g + 1]]`, ascending.
#[derive(Debug, Clone)]
pub struct Topology {
    mesh: BoxMesh,
    global_id: Vec<usize>,
    multiplicity: Vec<u8>,
    inv_multiplicity: Vec<f64>,
    mask: Vec<f64>,
    offsets: Vec<usize>,
    members: Vec<usize>,
}

impl Topology {
    pub fn new(mesh: &BoxMesh) -> Self {
        let n = mesh.n;
        let m = n - 1;
        let (gx, gy, gz) = mesh.global_grid();
        let num_global = gx * gy * gz;
        let dofs = mesh.dofs();

        let mut global_id = Vec::with_capacity(dofs);
        let mut mask = Vec::with_capacity(dofs);
        for e in 0..mesh.num_elements() {
            let (a, b, c) = mesh.element_coords(e);
            for k in 0..n {
                let z = c * m + k;
                for j in 0..n {
                    let y = b * m + j;
                    for i in 0..n {
                        let x = a * m + i;
                        global_id.push(x + gx * (y + gy * z));
                        let boundary = x == 0 || y == 0 || z == 0 || x == gx - 1 || y == gy - 1 || z == gz - 1;
                        mask.push(if boundary { 0.0 } else { 1.0 });
                    }
                }
            }
        }

        let mut counts = vec![0usize; num_global];
        for &g in &global_id {
            counts[g] += 1;
        }
        let mut offsets = Vec::with_capacity(num_global + 1);
        offsets.push(0);
        for &c in &counts {
            offsets.push(offsets.last().unwrap() + c);
        }
        let mut cursor = offsets[..num_global].to_vec();
        let mut members = vec![0; dofs];
        for (local, &g) in global_id.iter().enumerate() {
            members[cursor[g]] = local;
            cursor[g] += 1;
        }

        let multiplicity: Vec<u8> = global_id.iter().map(|&g| counts[g] as u8).collect();
        let inv_multiplicity = multiplicity.iter().map(|&c| 1.0 / c as f64).collect();

        Self {
            mesh: *mesh,
            global_id,
            multiplicity,
            inv_multiplicity,
            mask,
            offsets,
            members,
        }
    }

    pub fn mesh(&self) -> &BoxMesh {
        &self.mesh
    }

    pub fn dofs(&self) -> usize {
        self.global_id.len()
    }

    /// Number of distinct global ids.
    pub fn num_global(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn global_ids(&self) -> &[usize] {
        &self.global_id
    }

    pub fn multiplicity(&self) -> &[u8] {
        &self.multiplicity
    }

    /// `1 / multiplicity` per local index, the inner-product weight.
    pub fn inv_multiplicity(&self) -> &[f64] {
        &self.inv_multiplicity
    }

    /// 0.0 on the outer faces of the box, 1.0 elsewhere.
    pub fn mask_values(&self) -> &[f64] {
        &self.mask
    }

    /// Local indices sharing global id `g`, ascending.
    pub fn members(&self, g: usize) -> &[usize] {
        &self.members[self.offsets[g]..self.offsets[g + 1]]
    }

    /// Number of free (unmasked) global ids.
    pub fn num_free(&self) -> usize {
        (0..self.num_global())
            .filter(|&g| self.mask[self.members(g)[0]] != 0.0)
            .count()
    }

    /// Sum of the local copies of `g`, accumulated in ascending local index.
    /// Starting from the first copy keeps single copies bit-identical.
    #[inline]
    pub fn class_sum(&self, g: usize, values: &[f64]) -> f64 {
        let members = self.members(g);
        let mut sum = values[members[0]];
        for &local in &members[1..] {
            sum += values[local];
        }
        sum
    }

    pub fn conforms(&self, f: &ElementField) -> bool {
        f.n() == self.mesh.n && f.num_elements() == self.mesh.num_elements()
    }

    fn check(&self, f: &ElementField) -> Result<()> {
        if self.conforms(f) {
            Ok(())
        } else {
            Err(Error::ShapeMismatch("field does not conform to topology"))
        }
    }

    /// Scatters one value per global id to every local copy.
    pub fn scatter(&self, global: &[f64], out: &mut ElementField) -> Result<()> {
        self.check(out)?;
        if global.len() != self.num_global() {
            return Err(Error::ShapeMismatch("global vector length"));
        }
        for (v, &g) in out.values_mut().iter_mut().zip(&self.global_id) {
            *v = global[g];
        }
        Ok(())
    }
}

/// In-place gather-scatter: every local copy of a global id receives the sum
/// of all copies. Ids are reduced in ascending order, each over its copies in
/// ascending local index, so the result is deterministic.
pub fn dssum_in_place(f: &mut ElementField, topo: &Topology) -> Result<()> {
    topo.check(f)?;
    let sums: Vec<f64> = (0..topo.num_global()).map(|g| topo.class_sum(g, f.values())).collect();
    for (v, &g) in f.values_mut().iter_mut().zip(&topo.global_id) {
        *v = sums[g];
    }
    Ok(())
}

pub fn dssum(f: &ElementField, topo: &Topology) -> Result<ElementField> {
    let mut out = f.clone();
    dssum_in_place(&mut out, topo)?;
    Ok(out)
}

/// Zeroes boundary nodes. Implemented as a select, so free values pass
/// through untouched.
pub fn mask_in_place(f: &mut ElementField, topo: &Topology) -> Result<()> {
    topo.check(f)?;
    for (v, &m) in f.values_mut().iter_mut().zip(&topo.mask) {
        if m == 0.0 {
            *v = 0.0;
        }
    }
    Ok(())
}

pub fn mask(f: &ElementField, topo: &Topology) -> Result<ElementField> {
    let mut out = f.clone();
    mask_in_place(&mut out, topo)?;
    Ok(out)
}

/// The global masked operator `mask(dssum(A_local(mask(u))))`.
#[derive(Debug)]
pub struct GlobalOperator<'a> {
    basis: &'a PolynomialBasis,
    geom: &'a GeomFactors,
    topo: &'a Topology,
    variant: KernelVariant,
    workspace: AxWorkspace,
    masked: ElementField,
}

impl<'a> GlobalOperator<'a> {
    pub fn new(
        basis: &'a PolynomialBasis,
        geom: &'a GeomFactors,
        topo: &'a Topology,
        variant: KernelVariant,
    ) -> Result<Self> {
        let masked = ElementField::zeros_like_mesh(topo.mesh());
        crate::ax::check_shapes(&masked, geom, basis)?;
        Ok(Self {
            basis,
            geom,
            topo,
            variant,
            workspace: AxWorkspace::new(),
            masked,
        })
    }
}

impl LinearOperator for GlobalOperator<'_> {
    fn apply(&mut self, input: &ElementField, output: &mut ElementField, counters: &TrafficCounters) -> Result<()> {
        self.masked.copy_from(input)?;
        mask_in_place(&mut self.masked, self.topo)?;
        apply_ax_into(
            &self.masked,
            self.geom,
            self.basis,
            self.variant,
            output,
            &mut self.workspace,
            counters,
        )?;
        dssum_in_place(output, self.topo)?;
        mask_in_place(output, self.topo)
    }
}

pub fn apply_global(
    u: &ElementField,
    basis: &PolynomialBasis,
    geom: &GeomFactors,
    topo: &Topology,
    variant: KernelVariant,
    counters: &TrafficCounters,
) -> Result<ElementField> {
    let mut out = ElementField::zeros(u.n(), u.num_elements());
    GlobalOperator::new(basis, geom, topo, variant)?.apply(u, &mut out, counters)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::build_mesh;

    fn topo(ex: usize, ey: usize, ez: usize, n: usize) -> Topology {
        Topology::new(&build_mesh(ex, ey, ez, n, 1.0).unwrap())
    }

    #[test]
    fn single_element_has_unit_multiplicity() {
        let t = topo(1, 1, 1, 3);
        assert!(t.multiplicity().iter().all(|&m| m == 1));
        let f = ElementField::from_fn(3, 1, |i, j, k, _| (i * 9 + j * 3 + k) as f64 - 4.5);
        assert_eq!(dssum(&f, &t).unwrap(), f);
    }

    #[test]
    fn two_elements_share_a_face() {
        let t = topo(2, 1, 1, 2);
        assert_eq!(t.num_global(), 12);
        let f = ElementField::from_fn(2, 2, |i, j, k, e| (1 + i + 2 * j + 4 * k + 8 * e) as f64);
        let s = dssum(&f, &t).unwrap();
        for k in 0..2 {
            for j in 0..2 {
                // i = 1 of element 0 coincides with i = 0 of element 1
                let sum = f.get(1, j, k, 0) + f.get(0, j, k, 1);
                assert_eq!(s.get(1, j, k, 0), sum);
                assert_eq!(s.get(0, j, k, 1), sum);
                assert_eq!(s.get(0, j, k, 0), f.get(0, j, k, 0));
                assert_eq!(s.get(1, j, k, 1), f.get(1, j, k, 1));
            }
        }
    }

    #[test]
    fn multiplicities_on_a_box() {
        let t = topo(3, 2, 2, 3);
        let mut seen = [false; 9];
        for &m in t.multiplicity() {
            assert!(matches!(m, 1 | 2 | 4 | 8));
            seen[m as usize] = true;
        }
        assert!(seen[1] && seen[2] && seen[4] && seen[8]);
        let distinct: f64 = t.inv_multiplicity().iter().sum();
        assert!((distinct - t.num_global() as f64).abs() < 1e-9);
        for g in 0..t.num_global() {
            let ms = t.members(g);
            assert_eq!(ms.len(), t.multiplicity()[ms[0]] as usize);
            assert!(ms.iter().all(|&l| t.mask_values()[l] == t.mask_values()[ms[0]]));
            assert!(ms.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn mask_of_a_lone_element() {
        let t = topo(1, 1, 1, 3);
        let m = mask(&ElementField::constant(3, 1, 1.0), &t).unwrap();
        let nonzero: Vec<usize> = (0..27).filter(|&i| m.values()[i] != 0.0).collect();
        assert_eq!(nonzero, vec![13]);
        assert_eq!(m.values()[13], 1.0);
        assert_eq!(mask(&m, &t).unwrap(), m);
        let z = ElementField::zeros(3, 1);
        assert_eq!(mask(&z, &t).unwrap(), z);
        assert_eq!(t.num_free(), 1);
    }

    #[test]
    fn shape_checks() {
        let t = topo(2, 1, 1, 3);
        let mut f = ElementField::zeros(3, 3);
        assert!(dssum_in_place(&mut f, &t).is_err());
        assert!(mask_in_place(&mut f, &t).is_err());
        assert!(t.scatter(&[0.0; 3], &mut ElementField::zeros(3, 2)).is_err());
    }
}
