mod common;

use common::*;
use proptest::prelude::*;
use sem_core::{apply_ax, ElementField, KernelVariant, TrafficCounters};

fn apply(s: &Setup, u: &ElementField, v: KernelVariant) -> ElementField {
    apply_ax(u, &s.geom, &s.basis, v, &TrafficCounters::new()).unwrap()
}

#[test]
fn lone_linear_element_matches_dense_matrix() {
    let s = setup(1, 1, 1, 2, 2.0);
    let u = random_local(2, 1, 5);
    let dense = dense_apply(&s.basis, &s.geom, &u);
    for v in KernelVariant::ALL {
        assert!(max_abs_diff(&apply(&s, &u, v), &dense) <= 1e-13, "{v}");
    }
}

#[test]
fn dense_oracle_equivalence() {
    for n in 2..=5 {
        for (ex, ey, ez) in [(1, 1, 1), (2, 2, 2)] {
            let s = setup(ex, ey, ez, n, 0.7);
            let e = ex * ey * ez;
            for seed in 0..2 {
                let u = random_local(n, e, 100 * n as u64 + seed);
                let dense = dense_apply(&s.basis, &s.geom, &u);
                for v in KernelVariant::ALL {
                    let got = apply(&s, &u, v);
                    assert!(
                        rel_diff(&got, &dense) <= 1e-12,
                        "n={n} E={e} {v}: {}",
                        rel_diff(&got, &dense)
                    );
                }
            }
        }
    }
}

#[test]
fn local_operator_is_symmetric_and_semidefinite() {
    for (n, ex) in [(3, 2), (6, 2), (10, 2)] {
        let s = setup(ex, ex, 1, n, 0.5);
        let e = ex * ex;
        for seed in 0..3 {
            let u = random_local(n, e, seed);
            let w = random_local(n, e, seed + 50);
            for v in KernelVariant::ALL {
                let au = apply(&s, &u, v);
                let aw = apply(&s, &w, v);
                let scale = norm(&au) / norm(&u);
                let asym = (plain_dot(&w, &au) - plain_dot(&u, &aw)).abs();
                assert!(asym <= 1e-12 * norm(&u) * norm(&w) * scale, "{v} n={n}: {asym}");
                assert!(plain_dot(&u, &au) >= -1e-12 * plain_dot(&u, &u));
            }
        }
    }
}

#[test]
fn twenty_seed_cross_variant_agreement() {
    let s = setup(4, 4, 4, 10, 0.25);
    for seed in 0..20 {
        let u = random_local(10, 64, seed);
        let r = apply(&s, &u, KernelVariant::Reference);
        let sc = apply(&s, &u, KernelVariant::Scratch);
        let l = apply(&s, &u, KernelVariant::Layered);
        assert!(rel_diff(&r, &sc) <= 1e-12);
        assert!(rel_diff(&r, &l) <= 1e-12);
        assert!(rel_diff(&sc, &l) <= 1e-12);
    }
}

fn variant() -> impl Strategy<Value = KernelVariant> {
    prop_oneof![
        Just(KernelVariant::Reference),
        Just(KernelVariant::Scratch),
        Just(KernelVariant::Layered)
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn linearity(n in 2usize..=8, ex in 1usize..=2, a in -3.0f64..3.0, b in -3.0f64..3.0, seed in any::<u64>(), v in variant()) {
        let s = setup(ex, 1, 2, n, 0.9);
        let e = 2 * ex;
        let u = random_local(n, e, seed);
        let w = random_local(n, e, seed ^ 0xABCD);
        let mut combo = u.clone();
        combo.scale(a);
        combo.axpy(b, &w).unwrap();
        let lhs = apply(&s, &combo, v);
        let mut rhs = apply(&s, &u, v);
        rhs.scale(a);
        rhs.axpy(b, &apply(&s, &w, v)).unwrap();
        prop_assert!(rel_diff(&lhs, &rhs) <= 1e-12);
    }

    #[test]
    fn constants_in_null_space(n in 2usize..=12, c in -100.0f64..100.0, v in variant()) {
        prop_assume!(!(v == KernelVariant::Scratch && n > 10));
        let s = setup(2, 1, 1, n, 0.3);
        let w = apply(&s, &ElementField::constant(n, 2, c), v);
        let dmax = s.basis.diff_matrix().iter().fold(0.0f64, |m, d| m.max(d.abs()));
        prop_assert!(w.max_abs() <= 1e-12 * c.abs().max(1.0) * dmax * dmax);
    }
}
