use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use skewinfo::numerics::{self, ComplexMatrix, MatrixFn, TolerancePolicy};
use skewinfo::states::{self, DensityMatrix, RngSeed};

fn tol() -> TolerancePolicy {
    TolerancePolicy::default()
}

fn full_rank_state(dim: usize, seed: u64) -> DensityMatrix {
    states::random_density(dim, dim, &mut RngSeed::new(seed).rng()).unwrap()
}

/// `ρ^q` from nalgebra's eigen-decomposition directly, bypassing the library's spectral calculus.
fn own_power(rho: &DensityMatrix, q: f64) -> ComplexMatrix {
    let eig = rho.matrix().clone().symmetric_eigen();
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|w| Complex64::new(w.max(0.0).powf(q), 0.0)));
    &eig.eigenvectors * d * eig.eigenvectors.adjoint()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sqrt_squares_back(dim in 2usize..=4, seed in any::<u64>()) {
        let rho = full_rank_state(dim, seed);
        let s = numerics::matrix_function(rho.matrix(), MatrixFn::Sqrt, &tol()).unwrap();
        prop_assert!(numerics::max_abs_diff(&(&s * &s), rho.matrix()) < 1e-12);
        prop_assert!(numerics::hermiticity_deviation(&s) < 1e-14);
    }

    #[test]
    fn complementary_powers_multiply_to_the_matrix(dim in 2usize..=4, seed in any::<u64>(), q in 0.05f64..0.95) {
        let rho = full_rank_state(dim, seed);
        let a = numerics::matrix_function(rho.matrix(), MatrixFn::Power(q), &tol()).unwrap();
        let b = numerics::matrix_function(rho.matrix(), MatrixFn::Power(1.0 - q), &tol()).unwrap();
        prop_assert!(numerics::max_abs_diff(&(&a * &b), rho.matrix()) < 1e-12);
    }

    #[test]
    fn power_matches_exponential_of_scaled_log(dim in 2usize..=4, seed in any::<u64>(), q in -0.9f64..1.9) {
        let rho = full_rank_state(dim, seed);
        let log = numerics::matrix_function(rho.matrix(), MatrixFn::Log, &tol()).unwrap();
        // Padé exponential in nalgebra is independent of the spectral route
        let expected = (log * Complex64::new(q, 0.0)).exp();
        let power = numerics::matrix_function(rho.matrix(), MatrixFn::Power(q), &tol()).unwrap();
        let scale = expected.iter().map(|z| z.norm()).fold(1.0, f64::max);
        prop_assert!(numerics::max_abs_diff(&power, &expected) < 1e-10 * scale);
    }

    #[test]
    fn power_agrees_with_independent_eigensolver(dim in 2usize..=4, seed in any::<u64>(), q in 0.1f64..2.0) {
        let rho = full_rank_state(dim, seed);
        let power = numerics::matrix_function(rho.matrix(), MatrixFn::Power(q), &tol()).unwrap();
        prop_assert!(numerics::max_abs_diff(&power, &own_power(&rho, q)) < 1e-12);
    }

    #[test]
    fn eigenvalues_sum_to_trace(dim in 2usize..=4, seed in any::<u64>()) {
        let h = states::random_hermitian(dim, &mut RngSeed::new(seed).rng());
        let eig = numerics::hermitian_eig(&h, &tol()).unwrap();
        let sum: f64 = eig.eigenvalues.iter().sum();
        prop_assert!((sum - h.trace().re).abs() < 1e-12 * (1.0 + h.norm()));
        prop_assert!(numerics::max_abs_diff(&eig.reconstruct(), &h) < 1e-12 * (1.0 + h.norm()));
        prop_assert!(numerics::unitarity_residual(&eig.eigenvectors) < 1e-12);
    }

    #[test]
    fn hs_norm_is_sum_of_squared_singular_values(rows in 1usize..=4, cols in 1usize..=4, seed in any::<u64>()) {
        let x = states::ginibre(rows, cols, &mut RngSeed::new(seed).rng());
        let sv: f64 = x.clone().svd(false, false).singular_values.iter().map(|s| s * s).sum();
        prop_assert!((numerics::hs_norm_sq(&x) - sv).abs() < 1e-12 * (1.0 + sv));
    }

    #[test]
    fn hs_norm_is_unitarily_invariant(dim in 2usize..=4, seed in any::<u64>()) {
        let mut rng = RngSeed::new(seed).rng();
        let x = states::ginibre(dim, dim, &mut rng);
        let u = states::random_unitary(dim, &mut rng);
        let v = states::random_unitary(dim, &mut rng);
        let n = numerics::hs_norm_sq(&x);
        prop_assert!((numerics::hs_norm_sq(&(&u * &x * &v)) - n).abs() < 1e-12 * (1.0 + n));
    }

    #[test]
    fn haar_unitaries_are_unitary(dim in 1usize..=6, seed in any::<u64>()) {
        let u = states::random_unitary(dim, &mut RngSeed::new(seed).rng());
        prop_assert!(numerics::unitarity_residual(&u) < 1e-12);
    }

    #[test]
    fn random_states_have_requested_rank(dim in 2usize..=4, seed in any::<u64>(), rank_frac in 0.0f64..1.0) {
        let rank = 1 + ((dim - 1) as f64 * rank_frac).round() as usize;
        let rho = states::random_density(dim, rank, &mut RngSeed::new(seed).rng()).unwrap();
        let eig = rho.eig(&tol()).unwrap();
        let nonzero = eig.eigenvalues.iter().filter(|w| **w > 1e-10).count();
        prop_assert_eq!(nonzero, rank);
        prop_assert!((rho.matrix().trace().re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn commutator_is_antisymmetric_and_traceless(dim in 2usize..=4, seed in any::<u64>()) {
        let mut rng = RngSeed::new(seed).rng();
        let a = states::ginibre(dim, dim, &mut rng);
        let b = states::ginibre(dim, dim, &mut rng);
        let ab = numerics::commutator(&a, &b).unwrap();
        let ba = numerics::commutator(&b, &a).unwrap();
        prop_assert!(numerics::max_abs_diff(&ab, &(-ba)) < 1e-13);
        prop_assert!(ab.trace().norm() < 1e-12 * (1.0 + a.norm() * b.norm()));
    }
}

#[test]
fn substreams_are_independent_and_reproducible() {
    let seed = RngSeed::new(99);
    let a = states::ginibre(2, 2, &mut seed.substream(0).rng());
    let b = states::ginibre(2, 2, &mut seed.substream(1).rng());
    let a2 = states::ginibre(2, 2, &mut seed.substream(0).rng());
    assert_eq!(a, a2);
    assert!(numerics::max_abs_diff(&a, &b) > 1e-3);
}
