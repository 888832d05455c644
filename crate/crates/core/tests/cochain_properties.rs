use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use twisted_core::cochain_calculus::{connes_b, cyclic_lambda, cyclic_sum, hochschild_b, Cochain, MatrixAlgebra};

type CMat = DMatrix<Complex64>;

fn random_matrix(r: &mut ChaCha8Rng, d: usize) -> CMat {
    CMat::from_fn(d, d, |_, _| Complex64::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)))
}

fn random_cochain(r: &mut ChaCha8Rng, alg: &Arc<MatrixAlgebra>, n: usize) -> Cochain<MatrixAlgebra> {
    let ms: Vec<CMat> = (0..=n).map(|_| random_matrix(r, alg.dim)).collect();
    Cochain::new(alg.clone(), n, move |a| {
        let d = ms[0].nrows();
        Ok(ms.iter().zip(a).fold(CMat::identity(d, d), |p, (m, x)| p * m * x).trace())
    })
}

fn setup(seed: u64, n: usize) -> (ChaCha8Rng, Arc<MatrixAlgebra>, Cochain<MatrixAlgebra>, Vec<CMat>) {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let alg = Arc::new(MatrixAlgebra { dim: 3 });
    let psi = random_cochain(&mut r, &alg, n);
    let args = (0..n + 3).map(|_| random_matrix(&mut r, 3)).collect();
    (r, alg, psi, args)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn b_squares_to_zero(seed in any::<u64>(), n in 0usize..=3) {
        let (_, _, psi, args) = setup(seed, n);
        prop_assert!(hochschild_b(&hochschild_b(&psi)).eval(&args[..n + 3]).unwrap().norm() < 1e-9);
    }

    #[test]
    fn connes_b_squares_to_zero(seed in any::<u64>(), n in 2usize..=3) {
        let (_, _, psi, args) = setup(seed, n);
        let bb = connes_b(&connes_b(&psi).unwrap()).unwrap();
        prop_assert!(bb.eval(&args[..n - 1]).unwrap().norm() < 1e-9);
    }

    #[test]
    fn b_and_connes_b_anticommute(seed in any::<u64>(), n in 1usize..=3) {
        let (_, _, psi, args) = setup(seed, n);
        let lhs = hochschild_b(&connes_b(&psi).unwrap()).eval(&args[..n + 1]).unwrap();
        let rhs = connes_b(&hochschild_b(&psi)).unwrap().eval(&args[..n + 1]).unwrap();
        prop_assert!((lhs + rhs).norm() < 1e-9);
    }

    #[test]
    fn cyclic_sum_image_is_lambda_invariant(seed in any::<u64>(), n in 0usize..=3) {
        let (_, _, psi, args) = setup(seed, n);
        let a = cyclic_sum(&psi);
        let x = &args[..n + 1];
        prop_assert!((cyclic_lambda(&a).eval(x).unwrap() - a.eval(x).unwrap()).norm() < 1e-10);
    }

    #[test]
    fn operators_are_linear(seed in any::<u64>(), n in 1usize..=3, re in -2.0f64..2.0, im in -2.0f64..2.0) {
        let (mut r, alg, psi, args) = setup(seed, n);
        let chi = random_cochain(&mut r, &alg, n);
        let s = Complex64::new(re, im);
        let combo = psi.add(&chi.scale(s)).unwrap();
        let x = &args[..n + 2];
        let lin_b = hochschild_b(&combo).eval(x).unwrap()
            - hochschild_b(&psi).eval(x).unwrap()
            - hochschild_b(&chi).eval(x).unwrap() * s;
        prop_assert!(lin_b.norm() < 1e-9);
        let y = &args[..n];
        let lin_big = connes_b(&combo).unwrap().eval(y).unwrap()
            - connes_b(&psi).unwrap().eval(y).unwrap()
            - connes_b(&chi).unwrap().eval(y).unwrap() * s;
        prop_assert!(lin_big.norm() < 1e-9);
    }
}

#[test]
fn wrong_arity_is_rejected() {
    let (_, _, psi, args) = setup(1, 2);
    assert!(psi.eval(&args[..2]).is_err());
    assert!(psi.eval(&args[..3]).is_ok());
}
