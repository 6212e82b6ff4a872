//! Property tests: parity symmetries, threshold identities, and dense-output
//! consistency.

use nodal_shooter::integrator::{integrate, IntegratorConfig};
use nodal_shooter::nonlin::{energy, force, force_deriv, force_ratio, potential, Params, State};
use proptest::prelude::*;

fn params(d: f64, theta: f64) -> Params {
    Params::new(d, theta).unwrap()
}

proptest! {
    #[test]
    fn force_is_odd_bitwise(s in -1e3f64..1e3, theta in 0.01f64..0.49) {
        let p = params(3.0, theta);
        prop_assert_eq!(force(-s, &p), -force(s, &p));
    }

    #[test]
    fn potential_is_even_bitwise(s in -1e3f64..1e3, theta in 0.01f64..0.49) {
        let p = params(3.0, theta);
        prop_assert_eq!(potential(-s, &p), potential(s, &p));
    }

    #[test]
    fn force_ratio_is_even_bitwise(s in 1e-6f64..1e3, theta in 0.01f64..0.49) {
        let p = params(3.0, theta);
        prop_assert_eq!(force_ratio(-s, &p).unwrap(), force_ratio(s, &p).unwrap());
        prop_assert_eq!(force_deriv(-s, &p).unwrap(), force_deriv(s, &p).unwrap());
    }

    #[test]
    fn potential_never_dips_below_the_well_bottom(
        s in -50.0f64..50.0,
        v in -10.0f64..10.0,
        theta in 0.01f64..0.49,
    ) {
        let p = params(3.0, theta);
        prop_assert!(potential(s, &p) >= p.potential_min - 1e-15);
        let e = energy(&State::new(1.0, s, v), &p);
        prop_assert!(e >= p.potential_min - 1e-15);
    }

    #[test]
    fn derived_thresholds_solve_their_identities(
        d in 1.01f64..10.0,
        theta in 0.02f64..0.48,
    ) {
        let p = params(d, theta);
        prop_assert!(p.potential_zero > 1.0);
        prop_assert!(p.force_min_loc > 0.0 && p.force_min_loc < 1.0);
        prop_assert!(potential(p.potential_zero, &p).abs() <= 1e-13);
        prop_assert!(force_deriv(p.force_min_loc, &p).unwrap().abs() <= 1e-11);
        prop_assert!((potential(1.0, &p) - p.potential_min).abs() <= 1e-15);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn dense_output_is_consistent_at_nodes_and_between(
        a in prop::sample::select(vec![0.3f64, 0.7, 1.4, 2.2]),
        pick in 0.0f64..1.0,
    ) {
        let p = params(3.0, 0.25);
        let cfg = IntegratorConfig { r_max: 8.0, ..Default::default() };
        let traj = integrate(a, &p, &cfg).unwrap();
        // strictly increasing radii
        for w in traj.states.windows(2) {
            prop_assert!(w[0].r < w[1].r);
        }
        // sampling reproduces the node exactly and interpolates in range
        let idx = 1 + ((traj.states.len() - 2) as f64 * pick) as usize;
        let node = traj.states[idx];
        let got = traj.sample(node.r).unwrap();
        prop_assert_eq!(got.u, node.u);
        let r_mid = 0.5 * (traj.states[idx - 1].r + node.r);
        let mid = traj.sample(r_mid).unwrap();
        prop_assert_eq!(mid.r, r_mid);
        let lo = traj.states[idx - 1].u.min(node.u) - 0.05;
        let hi = traj.states[idx - 1].u.max(node.u) + 0.05;
        prop_assert!(mid.u >= lo && mid.u <= hi);
    }
}
