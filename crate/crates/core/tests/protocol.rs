use proptest::prelude::*;
use sta_cool::design::{solve_boundaries, DesignBoundary, PhysicalConstraints};
use sta_cool::protocol::{AnsatzParams, Protocol, RhoPolynomial};
use sta_cool::units::PhysConstants;

fn design() -> DesignBoundary {
    let consts = PhysConstants::codata();
    solve_boundaries(&PhysicalConstraints::reference(&consts), &consts).unwrap()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn rho_is_flat_at_both_ends(a in -50.0f64..50.0, b in -1e5f64..1e5, rho_in in 0.2f64..1.0) {
        let rho = RhoPolynomial::new(a, b, rho_in);
        let scale = 1.0 + a.abs() + b.abs();
        for s in [0.0, 1.0] {
            let v = rho.eval(s);
            prop_assert!((v[0] - 1.0).abs() < 1e-10 * scale);
            for dv in &v[1..] {
                prop_assert!(dv.abs() < 1e-9 * scale);
            }
        }
        prop_assert!((rho.eval(0.5)[0] - rho_in).abs() < 1e-14);
        prop_assert!((rho.derivative(2, 0.5) - a).abs() < 1e-12 * scale);
    }

    #[test]
    fn rho_is_symmetric_about_midpoint(a in -50.0f64..50.0, b in -1e5f64..1e5, s in 0.0f64..0.5) {
        let rho = RhoPolynomial::new(a, b, 0.5);
        let scale = 1.0 + a.abs() + b.abs();
        prop_assert!((rho.eval(s)[0] - rho.eval(1.0 - s)[0]).abs() < 1e-11 * scale);
        prop_assert!((rho.eval(s)[1] + rho.eval(1.0 - s)[1]).abs() < 1e-10 * scale);
    }

    #[test]
    fn protocol_meets_boundary_design(a in -2.0f64..2.0, t_f in 10.0f64..40.0) {
        let d = design();
        let p = Protocol::new(&d, AnsatzParams::new(a, 0.0, t_f)).unwrap();
        for t in [0.0, t_f] {
            let pt = p.point(t).unwrap();
            prop_assert!(close(pt.d, d.constraints.d0, 1e-9));
            prop_assert!(close(pt.alpha, d.alpha_out, 1e-9));
            prop_assert!(close(pt.beta, d.beta_out, 1e-9));
            prop_assert!(pt.d_dot.abs() < 1e-9);
        }
        // With a flat midpoint the stretch frequency there is the designed one.
        let flat = Protocol::new(&d, AnsatzParams::new(0.0, 0.0, t_f)).unwrap();
        let mid = flat.point(t_f / 2.0).unwrap();
        prop_assert!(close(mid.d, d.constraints.d_in, 1e-9));
        prop_assert!(close(mid.beta, d.beta_in, 1e-9));
        prop_assert!((p.point(0.3 * t_f).unwrap().d - p.point(0.7 * t_f).unwrap().d).abs() < 1e-9);
    }
}

#[test]
fn export_json_has_requested_samples() {
    let p = Protocol::new(&design(), AnsatzParams::new(5.7, 4490.0, 16.6)).unwrap();
    let v: serde_json::Value = serde_json::from_str(&p.export_json(11).unwrap()).unwrap();
    assert_eq!(v["samples"].as_array().unwrap().len(), 11);
    assert_eq!(v["samples"][0]["d"], v["samples"][10]["d"]);
}
