mod common;

use common::{min_gap, scaled_ginibre};
use eigenmotion_core::paths::{hatano_nelson, random_orthogonal, HatanoNelsonParams};
use eigenmotion_core::spectral::{decompose, eigenvalues};
use eigenmotion_core::{c64, Error, RealSquareMatrix};
use proptest::prelude::*;

#[test]
fn hatano_nelson_partner_of_top_mode() {
    let h = hatano_nelson(HatanoNelsonParams::new(4, 0.5).unwrap()).unwrap();
    let sys = decompose(&h, None).unwrap();
    let top = c64::new(0.0, 2.0 * 0.5f64.sinh());
    let i = (0..4)
        .min_by(|&a, &b| (sys.eigenvalue(a) - top).norm().total_cmp(&(sys.eigenvalue(b) - top).norm()))
        .unwrap();
    assert!((sys.eigenvalue(i) - top).norm() < 1e-12);
    let p = sys.conjugate_partner(i).unwrap();
    assert!((sys.eigenvalue(p) - top.conj()).norm() < 1e-12);
    assert_eq!(sys.conjugate_partner(p), Some(i));
}

#[test]
fn diagonal_has_no_partners() {
    let sys = decompose(&RealSquareMatrix::from_diagonal(&[1.0, 2.0]).unwrap(), None).unwrap();
    assert_eq!(sys.conjugate_partner(0), None);
    assert_eq!(sys.real_count(), 2);
}

#[test]
fn zero_matrix_is_degenerate() {
    let err = decompose(&RealSquareMatrix::zeros(3).unwrap(), None).unwrap_err();
    assert!(matches!(err, Error::DegenerateSpectrum { .. }));
}

#[test]
fn nearly_defective_basis_is_rejected() {
    // Two eigenvalues 1e-9 apart with almost parallel eigenvectors.
    let m = RealSquareMatrix::from_rows(&[vec![1.0, 1.0], vec![0.0, 1.0 + 1e-9]]).unwrap();
    let err = decompose(&m, None).unwrap_err();
    assert!(matches!(err, Error::IllConditionedBasis { .. }), "{err:?}");
}

#[test]
fn ordering_is_by_real_then_imaginary() {
    let m = scaled_ginibre(12, 5);
    let sys = decompose(&m, None).unwrap();
    for w in sys.eigenvalues().windows(2) {
        assert!(w[0].re < w[1].re || (w[0].re == w[1].re && w[0].im <= w[1].im));
    }
}

#[test]
fn orthogonal_matrices_are_perfectly_conditioned() {
    for seed in 0..10 {
        let q = random_orthogonal(16, seed).unwrap();
        let sys = decompose(&q, None).unwrap();
        for &k in sys.condition_numbers() {
            assert!((k - 1.0).abs() < 1e-8, "kappa = {k}");
        }
    }
}

#[test]
fn biorthogonality_at_n_128() {
    let m = scaled_ginibre(128, 11);
    let sys = decompose(&m, None).unwrap();
    assert!(min_gap(sys.eigenvalues()) > 1e-6);
    assert!(sys.biorthogonality_residual() <= 1e-10, "{}", sys.biorthogonality_residual());
}

#[test]
fn eigenvalues_only_agrees_with_decomposition() {
    let m = scaled_ginibre(9, 2);
    let a = eigenvalues(&m).unwrap();
    let sys = decompose(&m, None).unwrap();
    for (x, y) in a.iter().zip(sys.eigenvalues()) {
        assert!((x - y).norm() < 1e-13);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn decomposition_invariants(n in 2usize..24, seed in any::<u64>()) {
        let m = scaled_ginibre(n, seed);
        let sys = match decompose(&m, None) {
            Ok(s) => s,
            Err(Error::DegenerateSpectrum { .. }) | Err(Error::IllConditionedBasis { .. }) => return Ok(()),
            Err(e) => panic!("{e}"),
        };
        let norm = m.spectral_norm();
        let ulp = f64::EPSILON;

        // Residual and unit norm.
        prop_assert!(sys.eigen_residual(&m) <= 10.0 * ulp * n as f64 * norm);
        for i in 0..n {
            let v = sys.right_vector(i);
            let len: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            prop_assert!((len - 1.0).abs() < 1e-13);
        }

        // Conjugation involution and closure of the spectrum.
        for i in 0..n {
            let p = sys.pairing()[i];
            prop_assert_eq!(sys.pairing()[p], i);
            if p == i {
                prop_assert!(sys.eigenvalue(i).im.abs() <= sys.real_tolerance());
            } else {
                prop_assert!((sys.eigenvalue(p) - sys.eigenvalue(i).conj()).norm() <= sys.pair_tolerance());
            }
        }

        // κ_i = ‖u_i‖‖v_i‖/|u_i^* v_i| >= 1.
        for i in 0..n {
            let u = sys.left_vector(i);
            let v = sys.right_vector(i);
            let unorm: f64 = u.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            let vnorm: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            let dot: c64 = u.iter().zip(v.iter()).map(|(a, b)| a.conj() * b).sum();
            let kappa = unorm * vnorm / dot.norm();
            prop_assert!((kappa - sys.condition_number(i)).abs() <= 1e-12 * kappa);
            prop_assert!(sys.condition_number(i) >= 1.0 - 1e-12);
        }

        if min_gap(sys.eigenvalues()) > 1e-6 {
            prop_assert!(sys.biorthogonality_residual() <= 1e-10);
        }
    }

    #[test]
    fn decomposition_is_deterministic(n in 2usize..10, seed in any::<u64>()) {
        let m = scaled_ginibre(n, seed);
        if let (Ok(a), Ok(b)) = (decompose(&m, None), decompose(&m, None)) {
            prop_assert_eq!(a.eigenvalues(), b.eigenvalues());
            prop_assert_eq!(a.right(), b.right());
        }
    }
}
