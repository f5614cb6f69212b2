use proptest::prelude::*;
use qspace_core::algebra::{self, contract, jacobi_defect, uncontract, ContractionParams};
use qspace_core::coherent::{overlap_analytic, CoherentLabel, Displacer};
use qspace_core::coset::group_law_defect;
use qspace_core::exec::Execution;
use qspace_core::fock::{build_hamiltonian, build_xp, commutator_defect, HamiltonianKind};
use qspace_core::EXACT_TOL;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn contraction_is_a_change_of_basis(k in 1.0f64..1e4) {
        let params = ContractionParams::new(k).unwrap();
        for tbl in [algebra::galilei_s(), algebra::heisenberg_rotations()] {
            let c = contract(&tbl, &params).unwrap();
            prop_assert!(jacobi_defect(&c) <= EXACT_TOL);
            prop_assert!(c.antisymmetry_defect() == 0.0);
            let back = uncontract(&c, &params).unwrap();
            prop_assert!(back.max_difference(&tbl).unwrap() <= EXACT_TOL);
        }
    }

    #[test]
    fn hbar_is_inverse_square_of_k(hbar in 1e-8f64..1.0) {
        let p = ContractionParams::from_hbar(hbar).unwrap();
        prop_assert!(((p.hbar() - hbar) / hbar).abs() <= 1e-14);
    }

    #[test]
    fn group_law_for_any_seed(seed in any::<u64>()) {
        prop_assert!(group_law_defect(50, 10.0, seed, Execution::Sequential) <= 1e-12);
    }

    #[test]
    fn ccr_defect_confined_to_corner(n in 2usize..160, hbar in 1e-3f64..10.0) {
        let (x, p) = build_xp(n, hbar).unwrap();
        let d = commutator_defect(&x, &p).unwrap();
        prop_assert!(d.interior_max <= 1e-12 * hbar.max(1.0));
        prop_assert!((d.corner.im + hbar * n as f64).abs() <= 1e-10 * hbar * n as f64);
        prop_assert!(d.corner.re.abs() <= 1e-12);
    }

    #[test]
    fn hamiltonians_are_hermitian(n in 2usize..200, lambda in 0.0f64..2.0, hbar in 1e-3f64..2.0) {
        for kind in [HamiltonianKind::Harmonic, HamiltonianKind::Free, HamiltonianKind::Quartic(lambda)] {
            prop_assert!(build_hamiltonian(kind, n, hbar).unwrap().hermiticity_defect() <= 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn fock_overlaps_match_closed_form(p1 in -2.0f64..2.0, x1 in -2.0f64..2.0, p2 in -2.0f64..2.0, x2 in -2.0f64..2.0) {
        let d = Displacer::new(128).unwrap();
        let (l1, l2) = (CoherentLabel::new(p1, x1), CoherentLabel::new(p2, x2));
        let numeric = d.coherent_state(&l1).unwrap().inner(&d.coherent_state(&l2).unwrap()).unwrap();
        let exact = overlap_analytic(&l1, &l2, 1.0).unwrap();
        prop_assert!((numeric - exact).norm() <= 1e-8);
    }
}
