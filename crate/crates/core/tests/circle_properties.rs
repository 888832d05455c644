use std::sync::Arc;

use num_complex::Complex64;
use proptest::prelude::*;

use twisted_core::circle_kernel::{CircleDiffeo, PeriodicFunction, DEFAULT_ALIAS_BOUND};
use twisted_core::crossed_product::{CrossedProductElement, Group, GroupConfig};
use twisted_core::operator_rep::{abs_dirac_power, dirac, represent, twisted_commutator};
use twisted_core::spectral_traces::{residue_functional, wodzicki_closed_form, HeatFitConfig};

const BAND: usize = 96;

fn coeffs(max_mode: i64) -> impl Strategy<Value = PeriodicFunction> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), (2 * max_mode + 1) as usize).prop_map(move |c| {
        let modes: Vec<(i64, Complex64)> =
            c.into_iter().enumerate().map(|(i, (re, im))| (i as i64 - max_mode, Complex64::new(re, im))).collect();
        PeriodicFunction::from_modes(&modes)
    })
}

fn diffeo() -> impl Strategy<Value = CircleDiffeo> {
    prop_oneof![
        (0.05f64..0.4).prop_map(|e| CircleDiffeo::sine(e).unwrap()),
        (0.0f64..1.0).prop_map(CircleDiffeo::rotation),
        (0.05f64..0.4, 0.0f64..1.0).prop_map(|(e, a)| {
            CircleDiffeo::sine(e).unwrap().compose(&CircleDiffeo::rotation(a), BAND, DEFAULT_ALIAS_BOUND).unwrap()
        }),
    ]
}

fn group() -> Arc<Group> {
    Group::new(
        vec![
            ("phi".into(), CircleDiffeo::sine(0.3).unwrap()),
            ("rot".into(), CircleDiffeo::rotation(0.2)),
        ],
        GroupConfig::default(),
    )
    .unwrap()
}

fn element(g: &Arc<Group>, words: &[&str], fs: Vec<PeriodicFunction>) -> CrossedProductElement {
    words.iter().zip(fs).fold(CrossedProductElement::zero(g), |acc, (w, f)| {
        acc.add(&CrossedProductElement::monomial(f, g.parse_word(w).unwrap()))
    })
}

const WORDS: [&str; 5] = ["", "phi", "phi^-1", "rot", "phi.rot"];

fn two_term() -> impl Strategy<Value = CrossedProductElement> {
    (0usize..5, 0usize..5, coeffs(2), coeffs(2))
        .prop_map(|(i, j, f, h)| element(&group(), &[WORDS[i], WORDS[j]], vec![f, h]))
}

fn sample_sup(f: &PeriodicFunction, m: usize) -> f64 {
    f.samples(m).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn parseval(f in coeffs(6), g in coeffs(6)) {
        let lhs = f.mul_exact(&g).quadrature();
        let rhs: Complex64 = (-6i64..=6).map(|k| f.coeff(k) * g.coeff(-k)).sum();
        prop_assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn composition_is_a_right_action(f in coeffs(3), phi in diffeo(), psi in diffeo()) {
        let lhs = f.compose(&phi, BAND, DEFAULT_ALIAS_BOUND).unwrap().compose(&psi, BAND, DEFAULT_ALIAS_BOUND).unwrap();
        let both = phi.compose(&psi, BAND, DEFAULT_ALIAS_BOUND).unwrap();
        let rhs = f.compose(&both, BAND, DEFAULT_ALIAS_BOUND).unwrap();
        prop_assert!(lhs.max_coeff_diff(&rhs) < 1e-10);
    }

    #[test]
    fn chain_rule(f in coeffs(3), phi in diffeo()) {
        let lhs = f.compose(&phi, BAND, DEFAULT_ALIAS_BOUND).unwrap().derivative();
        let rhs = f.derivative().compose(&phi, BAND, DEFAULT_ALIAS_BOUND).unwrap()
            .mul(phi.derivative(), BAND, DEFAULT_ALIAS_BOUND).unwrap();
        prop_assert!(sample_sup(&lhs.sub(&rhs), 512) < 1e-10 * (1.0 + sample_sup(&lhs, 512)));
    }

    #[test]
    fn change_of_variables(f in coeffs(3), phi in diffeo()) {
        let pulled = f.compose(&phi, BAND, DEFAULT_ALIAS_BOUND).unwrap()
            .mul(phi.derivative(), BAND, DEFAULT_ALIAS_BOUND).unwrap();
        prop_assert!((pulled.quadrature() - f.quadrature()).norm() < 1e-10);
    }

    #[test]
    fn inversion_round_trip(phi in diffeo()) {
        let inv = phi.invert(Default::default()).unwrap();
        prop_assert!(phi.inversion_defect(&inv, 256) < 1e-10);
    }

    #[test]
    fn crossed_product_is_associative(a in two_term(), b in two_term(), c in two_term()) {
        let lhs = a.multiply(&b).unwrap().multiply(&c).unwrap();
        let rhs = a.multiply(&b.multiply(&c).unwrap()).unwrap();
        prop_assert!(lhs.max_diff(&rhs) < 1e-10);
    }

    #[test]
    fn sigma_is_an_automorphism(a in two_term(), b in two_term()) {
        let lhs = a.multiply(&b).unwrap().sigma().unwrap();
        let rhs = a.sigma().unwrap().multiply(&b.sigma().unwrap()).unwrap();
        prop_assert!(lhs.max_diff(&rhs) < 1e-11);
    }

    #[test]
    fn sigma_unitarity(a in two_term()) {
        let lhs = a.involution().unwrap().sigma().unwrap();
        let rhs = a.sigma_inv().unwrap().involution().unwrap();
        prop_assert!(lhs.max_diff(&rhs) < 1e-11);
    }

    #[test]
    fn modular_group_law(a in two_term(), s in -1.0f64..1.0, t in -1.0f64..1.0) {
        let lhs = a.sigma_t(t).unwrap().sigma_t(s).unwrap();
        prop_assert!(lhs.max_diff(&a.sigma_t(s + t).unwrap()) < 1e-11);
    }

    #[test]
    fn state_is_a_sigma_inverse_trace(a in two_term(), b in two_term()) {
        let lhs = a.multiply(&b).unwrap().state();
        let rhs = b.multiply(&a.sigma_inv().unwrap()).unwrap().state();
        prop_assert!((lhs - rhs).norm() < 1e-10);
    }

    #[test]
    fn modular_derivation_is_a_derivation(a in two_term(), b in two_term()) {
        let lhs = a.multiply(&b).unwrap().delta().unwrap();
        let rhs = a.delta().unwrap().multiply(&b).unwrap().add(&a.multiply(&b.delta().unwrap()).unwrap());
        prop_assert!(lhs.max_diff(&rhs) < 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn twisted_leibniz_rule_on_interior_modes(i in 1usize..5, j in 0usize..5, f in coeffs(2), h in coeffs(2)) {
        let g = group();
        let a = element(&g, &[WORDS[i]], vec![f]);
        let b = element(&g, &[WORDS[j]], vec![h]);
        let n = 128;
        let d = dirac(n);
        let lhs = twisted_commutator(&d, &a.multiply(&b).unwrap()).unwrap();
        let rhs = twisted_commutator(&d, &a).unwrap().mul(&represent(&b, n).unwrap()).unwrap()
            .add(&represent(&a.sigma().unwrap(), n).unwrap().mul(&twisted_commutator(&d, &b).unwrap()).unwrap())
            .unwrap();
        let diff = lhs.restrict(n / 4).max_abs_diff(&rhs.restrict(n / 4));
        prop_assert!(diff < 1e-9 * (1.0 + lhs.max_abs()), "diff {diff}");
    }

    #[test]
    fn residue_is_linear_and_blind_to_the_zero_mode_patch(f in coeffs(3), h in coeffs(3), s in -2.0f64..2.0) {
        let g = group();
        let n = 256;
        let id = g.identity();
        let cfg = HeatFitConfig::default();
        let res = |x: &PeriodicFunction, patch: f64| {
            let p = represent(&CrossedProductElement::function(&g, x.clone()), n).unwrap()
                .mul(&abs_dirac_power(n, 1.0, patch)).unwrap();
            let cfg = HeatFitConfig { zero_mode_patch: patch, ..cfg.clone() };
            residue_functional(&p, &id, n, &cfg).unwrap().value
        };
        let combo = f.add(&h.scale(Complex64::new(s, 0.0)));
        let lin = res(&combo, 1.0) - res(&f, 1.0) - res(&h, 1.0) * s;
        prop_assert!(lin.norm() < 1e-6);
        prop_assert!((res(&f, 1.0) - res(&f, 2.0)).norm() < 1e-6);
        prop_assert!((res(&f, 1.0) - wodzicki_closed_form(&f)).norm() < 1e-6 * (1.0 + f.sup_norm(512)));
    }
}
