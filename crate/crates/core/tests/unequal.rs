use nalgebra::Matrix2;
use proptest::prelude::*;
use sta_cool::design::PhysicalConstraints;
use sta_cool::dynamics::total_energy;
use sta_cool::dynamics::IonState;
use sta_cool::protocol::AnsatzParams;
use sta_cool::unequal::{build_unequal_protocol, solve_boundaries_unequal, with_mass_ratio};
use sta_cool::units::PhysConstants;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    // Mode frequencies from a finite-difference Hessian of the total energy.
    #[test]
    fn modes_match_numerical_hessian(ratio in 1.0f64..10.0, frac in 0.0f64..1.0) {
        let consts = PhysConstants::codata();
        let pc = with_mass_ratio(&PhysicalConstraints::reference(&consts), ratio).unwrap();
        let design = solve_boundaries_unequal(&pc, &consts).unwrap();
        let t_f = 20.0;
        let p = build_unequal_protocol(&design, AnsatzParams::new(0.5, 0.0, t_f)).unwrap();
        let pt = p.point(frac * t_f).unwrap();
        let c = pt.coefficients();
        let (x1, x2) = pt.equilibria();
        let m = design.masses();
        let energy = |a: f64, b: f64| {
            let s = IonState { t: 0.0, x1: a, x2: b, p1: 0.0, p2: 0.0 };
            total_energy(&s, &c, m, &consts)
        };
        let h = 1e-3;
        let d11 = (energy(x1 + h, x2) - 2.0 * energy(x1, x2) + energy(x1 - h, x2)) / (h * h);
        let d22 = (energy(x1, x2 + h) - 2.0 * energy(x1, x2) + energy(x1, x2 - h)) / (h * h);
        let d12 = (energy(x1 + h, x2 + h) - energy(x1 + h, x2 - h) - energy(x1 - h, x2 + h)
            + energy(x1 - h, x2 - h))
            / (4.0 * h * h);
        let w = Matrix2::new(
            d11 / m[0],
            d12 / (m[0] * m[1]).sqrt(),
            d12 / (m[0] * m[1]).sqrt(),
            d22 / m[1],
        );
        let mut ev: Vec<f64> = w.symmetric_eigen().eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        prop_assert!((ev[0] / design.omega_minus_sq - 1.0).abs() < 1e-5);
        prop_assert!((ev[1] / pt.omega_plus_sq - 1.0).abs() < 1e-5);
    }

    #[test]
    fn heavier_coolant_ratio_flips_offset_sign(ratio in 1.1f64..10.0) {
        let consts = PhysConstants::codata();
        let base = PhysicalConstraints::reference(&consts);
        let d = solve_boundaries_unequal(&with_mass_ratio(&base, ratio).unwrap(), &consts).unwrap();
        let e = solve_boundaries_unequal(&with_mass_ratio(&base, 1.0 / ratio).unwrap(), &consts).unwrap();
        prop_assert!(d.gamma_in != 0.0);
        prop_assert!(d.gamma_in.signum() != e.gamma_in.signum());
    }
}

#[test]
fn ratio_one_reproduces_equal_masses() {
    let consts = PhysConstants::codata();
    let base = PhysicalConstraints::reference(&consts);
    let a = solve_boundaries_unequal(&with_mass_ratio(&base, 1.0).unwrap(), &consts).unwrap();
    let b = sta_cool::design::solve_boundaries(&base, &consts).unwrap();
    for (x, y) in [
        (a.alpha_out, b.alpha_out),
        (a.beta_out, b.beta_out),
        (a.omega0, b.omega0),
    ] {
        assert!((x / y - 1.0).abs() < 1e-9, "{x} vs {y}");
    }
    assert!(a.gamma_in.abs() < 1e-12);
}

#[test]
fn non_positive_ratio_is_rejected() {
    let consts = PhysConstants::codata();
    let base = PhysicalConstraints::reference(&consts);
    assert_eq!(with_mass_ratio(&base, 0.0).unwrap_err().exit_code(), 1);
}
