#![allow(dead_code, clippy::needless_range_loop)]

use std::collections::BTreeMap;

use sem_core::rng::Xorshift64Star;
use sem_core::{build_basis, build_geom, build_mesh, BoxMesh, ElementField, GeomFactors, PolynomialBasis, Topology};

pub struct Setup {
    pub mesh: BoxMesh,
    pub basis: PolynomialBasis,
    pub geom: GeomFactors,
    pub topo: Topology,
}

pub fn setup(ex: usize, ey: usize, ez: usize, n: usize, h: f64) -> Setup {
    let mesh = build_mesh(ex, ey, ez, n, h).unwrap();
    let basis = build_basis(n).unwrap();
    let geom = build_geom(&mesh, &basis).unwrap();
    let topo = Topology::new(&mesh);
    Setup {
        mesh,
        basis,
        geom,
        topo,
    }
}

pub fn random_local(n: usize, e: usize, seed: u64) -> ElementField {
    let mut rng = Xorshift64Star::new(seed);
    ElementField::from_fn(n, e, |_, _, _, _| rng.next_signed())
}

/// Random continuous field (one value per global id), boundary zeroed.
pub fn random_masked(topo: &Topology, seed: u64) -> ElementField {
    let mut rng = Xorshift64Star::new(seed);
    let global: Vec<f64> = (0..topo.num_global()).map(|_| rng.next_signed()).collect();
    let mesh = topo.mesh();
    let mut f = ElementField::zeros(mesh.n, mesh.num_elements());
    topo.scatter(&global, &mut f).unwrap();
    sem_core::mask(&f, topo).unwrap()
}

/// Derivative of the `l`-th Lagrange polynomial at node `i`, straight from
/// the product formula.
pub fn lagrange_derivative_matrix(x: &[f64]) -> Vec<Vec<f64>> {
    let n = x.len();
    let mut d = vec![vec![0.0; n]; n];
    for i in 0..n {
        for l in 0..n {
            let mut sum = 0.0;
            for m in 0..n {
                if m == l {
                    continue;
                }
                let mut prod = 1.0 / (x[l] - x[m]);
                for p in 0..n {
                    if p != l && p != m {
                        prod *= (x[i] - x[p]) / (x[l] - x[p]);
                    }
                }
                sum += prod;
            }
            d[i][l] = sum;
        }
    }
    d
}

/// Dense `n^3 x n^3` stiffness matrix of element `e`:
/// `K[a][b] = sum_q grad(phi_a)(q)^T G(q) grad(phi_b)(q)`.
pub fn dense_element_matrix(basis: &PolynomialBasis, geom: &GeomFactors, e: usize) -> Vec<Vec<f64>> {
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
    let mut k = vec![vec![0.0; n3]; n3];
    for q in 0..n3 {
        let (qi, qj, qk) = split(q);
        let g = |c| geom.get(qi, qj, qk, c, e);
        let gm = [[g(0), g(1), g(2)], [g(1), g(3), g(4)], [g(2), g(4), g(5)]];
        for a in 0..n3 {
            let ga = grad(a, q);
            if ga == [0.0; 3] {
                continue;
            }
            for b in 0..n3 {
                let gb = grad(b, q);
                let mut s = 0.0;
                for r in 0..3 {
                    for c in 0..3 {
                        s += ga[r] * gm[r][c] * gb[c];
                    }
                }
                k[a][b] += s;
            }
        }
    }
    k
}

pub fn dense_apply(basis: &PolynomialBasis, geom: &GeomFactors, u: &ElementField) -> ElementField {
    let n3 = u.points_per_element();
    let mut out = Vec::with_capacity(u.len());
    for e in 0..u.num_elements() {
        let k = dense_element_matrix(basis, geom, e);
        let ue = u.element(e);
        for a in 0..n3 {
            out.push((0..n3).map(|b| k[a][b] * ue[b]).sum());
        }
    }
    ElementField::from_values(u.n(), u.num_elements(), out).unwrap()
}

/// Group local indices by global id through a map and sum each group.
pub fn naive_dssum(f: &ElementField, topo: &Topology) -> ElementField {
    let mut groups: BTreeMap<usize, f64> = BTreeMap::new();
    for (v, &g) in f.values().iter().zip(topo.global_ids()) {
        *groups.entry(g).or_insert(0.0) += v;
    }
    let values = topo.global_ids().iter().map(|g| groups[g]).collect();
    ElementField::from_values(f.n(), f.num_elements(), values).unwrap()
}

pub fn max_abs_diff(a: &ElementField, b: &ElementField) -> f64 {
    a.values()
        .iter()
        .zip(b.values())
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

pub fn rel_diff(a: &ElementField, b: &ElementField) -> f64 {
    max_abs_diff(a, b) / a.max_abs().max(b.max_abs()).max(f64::MIN_POSITIVE)
}

pub fn plain_dot(a: &ElementField, b: &ElementField) -> f64 {
    a.values().iter().zip(b.values()).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &ElementField) -> f64 {
    plain_dot(a, a).sqrt()
}
