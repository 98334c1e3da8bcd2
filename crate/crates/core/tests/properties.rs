//! Structural invariants checked on random inputs.

mod common;

use proptest::prelude::*;

use common::{random_field, rng, space};
use rcsg::energy::{EnergyContext, Potential};
use rcsg::gradients::{riemannian_gradient, Metric, MetricKind, RieszCache, RieszSettings};
use rcsg::optimizer::retract;

fn ctx(n: usize, omega: f64, kappa: f64) -> EnergyContext {
    let v = Potential::Harmonic {
        gamma_x: 2.0,
        gamma_y: 1.7,
    };
    EnergyContext::new(space(3.0, n), &v, omega, kappa)
}

fn metric_kind() -> impl Strategy<Value = MetricKind> {
    prop_oneof![Just(MetricKind::Au), Just(MetricKind::H10)]
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn energy_is_phase_invariant(seed in any::<u64>(), theta in -3.2f64..3.2, omega in 0.0f64..1.5) {
        let c = ctx(10, omega, 50.0);
        let u = random_field(c.n_dofs(), &mut rng(seed));
        let e = c.energy(&u);
        let er = c.energy(&u.rotate_phase(theta));
        prop_assert!((e - er).abs() <= 1e-12 * e.abs());
    }

    #[test]
    fn conjugation_flips_rotation(seed in any::<u64>(), omega in 0.0f64..1.5) {
        let u = random_field(ctx(10, 0.0, 0.0).n_dofs(), &mut rng(seed));
        let e = ctx(10, omega, 30.0).energy(&u);
        let ec = ctx(10, -omega, 30.0).energy(&u.conj());
        prop_assert!((e - ec).abs() <= 1e-12 * e.abs());
    }

    #[test]
    fn operators_are_symmetric(seed in any::<u64>(), omega in -1.5f64..1.5) {
        let c = ctx(8, omega, 80.0);
        let u = c.space().normalize(&random_field(c.n_dofs(), &mut rng(seed))).unwrap();
        prop_assert!(c.a0().max_asymmetry() <= 1e-13 * c.a0().max_abs());
        let au = c.au_operator(&u);
        prop_assert!(au.max_asymmetry() <= 1e-13 * au.max_abs());
        let h = c.hessian_operator(&u);
        prop_assert!(h.max_asymmetry() <= 1e-13 * h.max_abs());
    }

    #[test]
    fn hessian_operator_matches_matrix_free_action(seed in any::<u64>()) {
        let c = ctx(8, 0.9, 120.0);
        let mut r = rng(seed);
        let u = random_field(c.n_dofs(), &mut r);
        let v = random_field(c.n_dofs(), &mut r);
        let a = c.hessian_operator(&u).apply(v.as_slice());
        let b = c.eprimeprime_apply(&u, &v);
        let scale = b.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn riemannian_gradient_is_tangent(seed in any::<u64>(), kind in metric_kind()) {
        let c = ctx(12, 1.1, 100.0);
        let u = c.space().normalize(&random_field(c.n_dofs(), &mut rng(seed))).unwrap();
        let metric = Metric::at(kind, &c, &u, None);
        let settings = RieszSettings::new(1e-13, 2 * c.n_dofs());
        let g = riemannian_gradient(&c, &metric, &u, &mut RieszCache::new(), settings).unwrap();
        let t = c.space().l2_inner(&u, &g).abs();
        prop_assert!(t <= 1e-10 * c.space().l2_norm(&g));
    }

    #[test]
    fn retraction_lands_on_the_sphere(seed in any::<u64>(), tau in 0.0f64..10.0) {
        let c = ctx(8, 0.0, 0.0);
        let mut r = rng(seed);
        let u = c.space().normalize(&random_field(c.n_dofs(), &mut r)).unwrap();
        let d = random_field(c.n_dofs(), &mut r);
        let w = retract(c.space(), &u, &d, tau).unwrap();
        prop_assert!((c.space().l2_norm(&w) - 1.0).abs() <= 1e-14);
    }

    #[test]
    fn line_profile_matches_energy(seed in any::<u64>(), tau in 0.0f64..4.0) {
        let c = ctx(10, 1.3, 200.0);
        let mut r = rng(seed);
        let u = c.space().normalize(&random_field(c.n_dofs(), &mut r)).unwrap();
        let d = random_field(c.n_dofs(), &mut r);
        let profile = c.line_profile(&u, &d);
        let direct = c.energy(&retract(c.space(), &u, &d, tau).unwrap());
        prop_assert!((profile.eval(tau) - direct).abs() <= 1e-11 * direct.abs());
        prop_assert!((profile.base() + profile.delta(tau) - direct).abs() <= 1e-11 * direct.abs());
    }
}
