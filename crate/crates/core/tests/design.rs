use proptest::prelude::*;
use sta_cool::design::{
    critical_distance, equilibrium_distance, normal_modes, solve_boundaries, PhysicalConstraints,
    CA40_MASS,
};
use sta_cool::units::PhysConstants;

fn reference() -> (PhysConstants, PhysicalConstraints) {
    let consts = PhysConstants::codata();
    let pc = PhysicalConstraints::reference(&consts);
    (consts, pc)
}

#[test]
fn reference_design_values() {
    let (consts, pc) = reference();
    let d = solve_boundaries(&pc, &consts).unwrap();
    assert!((d.d_c - 14.026).abs() < 1e-3);
    assert!((d.omega0 / std::f64::consts::TAU - 0.4505).abs() < 1e-4);
    assert!(d.alpha_in < 0.0 && d.alpha_out < 0.0);
    assert_eq!(d.beta_in, pc.beta_max);
}

#[test]
fn below_critical_distance_is_infeasible() {
    let (consts, pc) = reference();
    let err = pc
        .with_d_in_ratio(0.95, &consts)
        .and_then(|p| solve_boundaries(&p, &consts));
    assert_eq!(err.unwrap_err().exit_code(), 1);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn critical_distance_scales_as_inverse_fifth_root(k in 0.01f64..100.0) {
        let (consts, pc) = reference();
        let d1 = critical_distance(pc.beta_max, &consts).unwrap();
        let dk = critical_distance(k * pc.beta_max, &consts).unwrap();
        prop_assert!((dk / d1 - k.powf(-0.2)).abs() < 1e-12);
    }

    #[test]
    fn equilibrium_solves_force_balance(a in 0.0f64..5.0, b in 0.1f64..10.0) {
        let (consts, pc) = reference();
        let cc = consts.coulomb;
        let dc = critical_distance(pc.beta_max, &consts).unwrap();
        let alpha = -a * cc / dc.powi(3);
        let beta = b * pc.beta_max;
        let d = equilibrium_distance(alpha, beta, &consts).unwrap();
        // Force on the right ion: -(2αx + 4βx³) at x = d/2, plus the Coulomb push.
        let x = d / 2.0;
        let f = -(2.0 * alpha * x + 4.0 * beta * x.powi(3)) + cc / (d * d);
        prop_assert!(f.abs() < 1e-10 * cc / (d * d));
    }

    #[test]
    fn boundaries_share_centre_of_mass_frequency(r_in in 1.0f64..1.6, r0 in 3.0f64..8.0, k in 0.1f64..10.0) {
        let consts = PhysConstants::codata();
        let base = PhysicalConstraints::reference(&consts);
        let pc = PhysicalConstraints::equal_mass(k * base.beta_max, r0, r_in, CA40_MASS, &consts).unwrap();
        let d = solve_boundaries(&pc, &consts).unwrap();
        let out = normal_modes(d.alpha_out, d.beta_out, pc.m1, &consts).unwrap();
        let inn = normal_modes(d.alpha_in, d.beta_in, pc.m1, &consts).unwrap();
        prop_assert!((out.d / pc.d0 - 1.0).abs() < 1e-9);
        prop_assert!((inn.d / pc.d_in - 1.0).abs() < 1e-9);
        let wm = d.omega_minus_sq.sqrt();
        prop_assert!((out.omega_minus / wm - 1.0).abs() < 1e-9);
        prop_assert!((inn.omega_minus / wm - 1.0).abs() < 1e-9);
        prop_assert!(d.beta_out <= d.beta_in * (1.0 + 1e-12));
    }
}
