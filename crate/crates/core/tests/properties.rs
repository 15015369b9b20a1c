use nalgebra::DMatrix;
use proptest::prelude::*;

use rfw_core::clifford::{check_product_identity, clifford_residual, make_rep, spin_projector, Variant, C64};
use rfw_core::field::{FieldProfile, FieldSlice};
use rfw_core::fw::{
    free_dirac_hamiltonian, free_fw, free_fw_hamiltonian, free_fw_spatial, transform_hamiltonian,
};
use rfw_core::propagator::diagonal_propagator;
use rfw_core::ritus::{
    bar_momentum, completeness_sequence, verify_eigen_relation, verify_gp_ep, BarMomentum, SliceSolution,
};
use rfw_core::spectral::GridConfig;

fn uniform_solution(eb: f64, p_y: f64, variant: Variant, n_max: usize) -> SliceSolution {
    let slice = FieldSlice::new(FieldProfile::uniform(eb), 1.0, p_y);
    SliceSolution::solve(&slice, &make_rep(variant), n_max, &GridConfig::default()).unwrap()
}

#[test]
fn clifford_algebra_is_exact() {
    for v in [Variant::First, Variant::Second] {
        let r = make_rep(v);
        assert_eq!(clifford_residual(&r), 0.0);
        assert_eq!(check_product_identity(&r).max_residual, 0.0);
    }
    assert_eq!(check_product_identity(&make_rep(Variant::First)).sign, -1);
    assert_eq!(check_product_identity(&make_rep(Variant::Second)).sign, 1);
}

#[test]
fn representation_independent_scalars() {
    let a = uniform_solution(1.0, 0.0, Variant::First, 6);
    let b = a.with_rep(&make_rep(Variant::Second));
    let (da, db) = (a.dirac().unwrap(), b.dirac().unwrap());
    for (la, lb) in a.on_shell_levels(1.0).unwrap().iter().zip(b.on_shell_levels(1.0).unwrap()) {
        assert_eq!(la.k, lb.k);
        assert_eq!(la.pbar, lb.pbar);
        let (ra, rb) = (verify_eigen_relation(la, &da).unwrap(), verify_eigen_relation(&lb, &db).unwrap());
        assert!((ra - rb).abs() < 1e-12);
    }
}

#[test]
fn eigen_relation_bounded_by_intertwining() {
    let sol = uniform_solution(1.0, 0.0, Variant::First, 8);
    let d = sol.dirac().unwrap();
    for l in sol.on_shell_levels(1.0).unwrap() {
        let e = verify_eigen_relation(&l, &d).unwrap();
        let g = verify_gp_ep(&l, &d).unwrap();
        let bound = 2.0 * (l.p0.abs() + l.k.sqrt()) + 2.0 * l.k.sqrt();
        assert!(e <= bound * g + 1e-12, "n={} eigen {e} gp {g}", l.n);
    }
}

#[test]
fn gaussian_completeness() {
    let sol = uniform_solution(1.0, 0.0, Variant::First, 20);
    let levels = sol.levels_at(0.3).unwrap();
    let n = sol.grid.n;
    let mut test = vec![C64::new(0.0, 0.0); 2 * n];
    for i in 0..n {
        let x = sol.grid.x(i);
        test[i] = C64::from((-(x - 0.3).powi(2) / 1.5).exp());
        test[n + i] = C64::new(0.0, 0.5 * (-(x + 0.2).powi(2)).exp());
    }
    let seq = completeness_sequence(&levels, &test).unwrap();
    assert!(*seq.last().unwrap() < 1e-3, "{:?}", seq.last());
    for w in seq.windows(2) {
        assert!(w[1] <= w[0] + 1e-3);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn gauge_shift_translates_levels(delta in -3.0f64..3.0) {
        let a = uniform_solution(1.0, 0.0, Variant::First, 4);
        let b = uniform_solution(1.0, delta, Variant::First, 4);
        prop_assert!((b.grid.x_min - a.grid.x_min - delta).abs() < 1e-9);
        prop_assert_eq!(a.grid.n, b.grid.n);
        let (da, db) = (a.dirac().unwrap(), b.dirac().unwrap());
        for (la, lb) in a.on_shell_levels(1.0).unwrap().iter().zip(b.on_shell_levels(1.0).unwrap()) {
            prop_assert!((la.k - lb.k).abs() < 1e-8);
            prop_assert!((la.pbar[2] - lb.pbar[2]).abs() < 1e-8);
            let col = (&la.ep - &lb.ep).camax();
            prop_assert!(col < 1e-8, "n={} column shift mismatch {}", la.n, col);
            let (ea, eb) = (verify_gp_ep(la, &da).unwrap(), verify_gp_ep(&lb, &db).unwrap());
            prop_assert!((ea - eb).abs() < 1e-8);
        }
    }

    #[test]
    fn spectrum_scales_with_field(eb in 0.3f64..3.0) {
        let sol = uniform_solution(eb, 0.0, Variant::First, 3);
        for (n, k) in sol.plus.eigenvalues.iter().enumerate() {
            prop_assert!((k - 2.0 * n as f64 * eb).abs() < 1e-6 * (1.0 + eb));
        }
    }
}

proptest! {
    #[test]
    fn free_fw_is_unitary(p1 in -10.0f64..10.0, p2 in -10.0f64..10.0, m in 0.05f64..10.0) {
        for v in [Variant::First, Variant::Second] {
            let rep = make_rep(v);
            let fw = free_fw_spatial(p1, p2, m, &rep).unwrap();
            prop_assert!(fw.unitarity_defect().unwrap() < 1e-14);
            let r = transform_hamiltonian(&fw, &free_dirac_hamiltonian(p1, p2, m, &rep)).unwrap();
            let e = (p1 * p1 + p2 * p2 + m * m).sqrt();
            prop_assert!(r.odd_part_norm < 1e-13 * e);
        }
    }

    #[test]
    fn free_hamiltonian_matches_conjugation(k in 0.0f64..50.0, m in 0.1f64..5.0) {
        let rep = make_rep(Variant::First);
        let pbar = bar_momentum(k, m, 1).unwrap();
        let fw = free_fw(&pbar, m, &rep).unwrap();
        let conj = transform_hamiltonian(&fw, &free_dirac_hamiltonian(0.0, pbar.p2, m, &rep)).unwrap();
        let target = free_fw_hamiltonian(&pbar, m, &rep).unwrap();
        prop_assert!((conj.transformed - target).norm() < 1e-12 * (1.0 + k.sqrt() + m));
    }

    #[test]
    fn conjugation_preserves_spectrum(seed in any::<u64>(), p in 0.0f64..4.0, m in 0.2f64..4.0) {
        let rep = make_rep(Variant::Second);
        let fw = free_fw_spatial(0.0, p, m, &rep).unwrap();
        let mut s = seed;
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let a = DMatrix::from_fn(2, 2, |_, _| C64::new(next(), next()));
        let h = &a + a.adjoint();
        let r = transform_hamiltonian(&fw.identity_like(), &h).unwrap();
        let t = transform_hamiltonian(&fw, &h).unwrap();
        for (x, y) in r.eigenvalues.iter().zip(&t.eigenvalues) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn off_shell_propagator_inverts(p0 in -5.0f64..5.0, k in 0.0f64..20.0, m in 0.2f64..3.0) {
        let pbar = BarMomentum::off_shell(p0, k, m).unwrap();
        prop_assume!((pbar.square() - m * m).abs() > 1e-3);
        for v in [Variant::First, Variant::Second] {
            let d = diagonal_propagator(&pbar, m, &make_rep(v)).unwrap();
            prop_assert!(d.inverse_residual < 1e-12 * d.condition.max(1.0));
        }
    }

    #[test]
    fn projector_invariants(n in 0i64..50, positive in any::<bool>()) {
        let p = spin_projector(n, if positive { 1.0 } else { -1.0 }).unwrap();
        let m = p.matrix();
        prop_assert_eq!(m * m, m);
        prop_assert_eq!(m.adjoint(), m);
        let g0 = make_rep(Variant::First).gamma[0];
        prop_assert_eq!(m * g0, g0 * m);
        prop_assert_eq!(p.trace(), if n == 0 { 1.0 } else { 2.0 });
    }
}
