use proptest::prelude::*;

use kahler_lab::calculus::{build_grid, integrate_ds};
use kahler_lab::functionals::{identity_residual, Reference};
use kahler_lab::geometry::ManifoldConfig;
use kahler_lab::potential::Potential;
use kahler_lab::sampling::PotentialSampler;

fn small_poly() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-0.15f64..0.15, 2..6)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn integration_is_linear(a in -3.0f64..3.0, b in -3.0f64..3.0, k in 0u32..5) {
        let g = build_grid(256).unwrap();
        let f = g.profile(|x| x.powi(k as i32));
        let h = g.profile(|x| (2.0 * x).cos());
        let lhs = integrate_ds(&f.zip_map(&h, |u, v| a * u + b * v), &g).unwrap();
        let rhs = a * integrate_ds(&f, &g).unwrap() + b * integrate_ds(&h, &g).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
    }

    #[test]
    fn functionals_ignore_constants(coeffs in small_poly(), c in -5.0f64..5.0) {
        let m = ManifoldConfig::build(2, 256).unwrap();
        let r = Reference::background(&m).unwrap();
        let phi = Potential::monomial(&coeffs);
        let a = r.evaluate(&phi).unwrap();
        let b = r.evaluate(&phi.shift(c)).unwrap();
        prop_assert!((a.nu().unwrap() - b.nu().unwrap()).abs() < 1e-9);
        prop_assert!((a.e1().unwrap() - b.e1().unwrap()).abs() < 1e-9);
        prop_assert!((a.j().unwrap() - b.j().unwrap()).abs() < 1e-9);
    }

    #[test]
    fn residual_is_constant_near_background(coeffs in small_poly()) {
        let m = ManifoldConfig::build(1, 512).unwrap();
        let r = Reference::background(&m).unwrap();
        let c = identity_residual(&r, &Potential::monomial(&[0.0])).unwrap();
        let value = identity_residual(&r, &Potential::monomial(&coeffs)).unwrap();
        prop_assert!((value - c).abs() < 1e-6);
    }

    #[test]
    fn sampler_is_reproducible(seed in any::<u64>()) {
        let m = ManifoldConfig::build(1, 64).unwrap();
        let r = Reference::background(&m).unwrap();
        let a = PotentialSampler::new(seed).admissible(&r).unwrap();
        let b = PotentialSampler::new(seed).admissible(&r).unwrap();
        prop_assert_eq!(a, b);
    }
}
