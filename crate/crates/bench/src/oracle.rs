//! Brute-force references that share no code path with the tensor kernels.

use std::collections::BTreeMap;

use sem_core::{ElementField, GeomFactors, PolynomialBasis, Result, Topology};

/// Lagrange derivative matrix `d[i][l] = l_l'(x_i)` from the product formula.
pub fn lagrange_derivative_matrix(x: &[f64]) -> Vec<Vec<f64>> {
    let n = x.len();
    let mut d = vec![vec![0.0; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        for (l, entry) in row.iter_mut().enumerate() {
            for m in (0..n).filter(|&m| m != l) {
                let mut prod = 1.0 / (x[l] - x[m]);
                for p in (0..n).filter(|&p| p != l && p != m) {
                    prod *= (x[i] - x[p]) / (x[l] - x[p]);
                }
                *entry += prod;
            }
        }
    }
    d
}

/// Assembled `n^3 x n^3` stiffness matrix of element `e`, row-major.
pub fn dense_element_matrix(basis: &PolynomialBasis, geom: &GeomFactors, e: usize) -> Vec<f64> {
    let n = basis.n();
    let n3 = n * n * n;
    let d = lagrange_derivative_matrix(basis.nodes());
    let split = |p: usize| (p % n, (p / n) % n, p / (n * n));
    let grad = |a: usize, q: usize| {
        let (ai, aj, ak) = split(a);
        let (qi, qj, qk) = split(q);
        [
            if aj == qj && ak == qk { d[qi][ai] } else { 0.0 },
            if ai == qi && ak == qk { d[qj][aj] } else { 0.0 },
            if ai == qi && aj == qj { d[qk][ak] } else { 0.0 },
        ]
    };

    let mut k = vec![0.0; n3 * n3];
    for q in 0..n3 {
        let (qi, qj, qk) = split(q);
        let g = |c| geom.get(qi, qj, qk, c, e);
        let gm = [[g(0), g(1), g(2)], [g(1), g(3), g(4)], [g(2), g(4), g(5)]];
        // only points on the three lines through q have a nonzero gradient there
        let support: Vec<(usize, [f64; 3])> = (0..n3)
            .map(|a| (a, grad(a, q)))
            .filter(|(_, ga)| *ga != [0.0; 3])
            .collect();
        for &(a, ga) in &support {
            for &(b, gb) in &support {
                let mut s = 0.0;
                for r in 0..3 {
                    for c in 0..3 {
                        s += ga[r] * gm[r][c] * gb[c];
                    }
                }
                k[a * n3 + b] += s;
            }
        }
    }
    k
}

/// `w = K u` element by element with the dense matrices.
pub fn dense_apply(basis: &PolynomialBasis, geom: &GeomFactors, u: &ElementField) -> Result<ElementField> {
    let n3 = u.points_per_element();
    let mut out = Vec::with_capacity(u.len());
    for e in 0..u.num_elements() {
        let k = dense_element_matrix(basis, geom, e);
        let ue = u.element(e);
        for row in k.chunks(n3) {
            out.push(row.iter().zip(ue).map(|(a, b)| a * b).sum());
        }
    }
    ElementField::from_values(u.n(), u.num_elements(), out)
}

/// Gather-scatter by grouping local values on their global id in a map.
pub fn naive_dssum(f: &ElementField, topo: &Topology) -> Result<ElementField> {
    let mut groups: BTreeMap<usize, f64> = BTreeMap::new();
    for (v, &g) in f.values().iter().zip(topo.global_ids()) {
        *groups.entry(g).or_insert(0.0) += v;
    }
    let values = topo.global_ids().iter().map(|g| groups[g]).collect();
    ElementField::from_values(f.n(), f.num_elements(), values)
}

pub fn max_abs_diff(a: &ElementField, b: &ElementField) -> f64 {
    a.values()
        .iter()
        .zip(b.values())
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

/// Max-norm difference relative to the larger operand.
pub fn rel_diff(a: &ElementField, b: &ElementField) -> f64 {
    max_abs_diff(a, b) / a.max_abs().max(b.max_abs()).max(f64::MIN_POSITIVE)
}

#[cfg(test)]
mod tests {
    use super::*;
    use sem_core::{build_basis, build_geom, build_mesh};

    #[test]
    fn derivative_matrix_matches_basis() {
        for n in 2..8 {
            let basis = build_basis(n).unwrap();
            let d = lagrange_derivative_matrix(basis.nodes());
            for (i, row) in d.iter().enumerate() {
                for (l, v) in row.iter().enumerate() {
                    assert!((v - basis.diff(i, l)).abs() < 1e-11, "n={n} ({i},{l})");
                }
            }
        }
    }

    #[test]
    fn dense_matrix_is_symmetric_with_constant_null_space() {
        let mesh = build_mesh(1, 1, 1, 3, 0.7).unwrap();
        let basis = build_basis(3).unwrap();
        let geom = build_geom(&mesh, &basis).unwrap();
        let k = dense_element_matrix(&basis, &geom, 0);
        for a in 0..27 {
            assert!(k[a * 27..(a + 1) * 27].iter().sum::<f64>().abs() < 1e-13);
            for b in 0..27 {
                assert_eq!(k[a * 27 + b], k[b * 27 + a]);
            }
        }
    }
}
