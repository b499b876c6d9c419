use proptest::prelude::*;
use sta_cool::design::{solve_boundaries, DesignBoundary, PhysicalConstraints};
use sta_cool::dynamics::{integrate, prepare_state_in, simulate, total_energy, SimConfig};
use sta_cool::protocol::{AnsatzParams, Coefficients, Protocol, StaticPotential};
use sta_cool::units::PhysConstants;

fn design() -> DesignBoundary {
    let consts = PhysConstants::codata();
    solve_boundaries(&PhysicalConstraints::reference(&consts), &consts).unwrap()
}

fn outer_trap(d: &DesignBoundary) -> StaticPotential {
    StaticPotential {
        coefficients: Coefficients {
            alpha: d.alpha_out,
            beta: d.beta_out,
            gamma: 0.0,
        },
        masses: d.masses(),
        consts: d.consts,
    }
}

#[test]
fn ground_state_stays_at_rest_in_static_trap() {
    let d = design();
    let pot = outer_trap(&d);
    let s0 = prepare_state_in(&pot, 0.0, 0.0, [0.0, 0.0], 0.0).unwrap();
    let out = integrate(&pot, 0.0, s0, 20.0 * d.cycle(), &SimConfig::default()).unwrap();
    assert!(out.e_ex[0].abs() < 1e-12 * d.quantum());
    assert!((out.final_state.x1 - s0.x1).abs() < 1e-9);
}

#[test]
fn slow_transport_is_adiabatic() {
    let d = design();
    let p = Protocol::new(&d, AnsatzParams::new(0.0, 0.0, 200.0)).unwrap();
    let e = simulate(&p, &SimConfig::default()).unwrap().e_ex;
    assert!(e[0] < 1e-3 * d.quantum());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn static_trap_conserves_energy(e_in in 0.5f64..20.0, phi in 0.0f64..std::f64::consts::TAU) {
        let d = design();
        let pot = outer_trap(&d);
        let cfg = SimConfig { rtol: 1e-12, atol: 1e-13, ..SimConfig::default() };
        let s0 = prepare_state_in(&pot, 0.0, 0.0, [e_in * d.quantum(), 0.0], phi).unwrap();
        let out = integrate(&pot, 0.0, s0, 30.0 * d.cycle(), &cfg).unwrap();
        let c = pot.coefficients;
        let e0 = total_energy(&s0, &c, pot.masses, &d.consts);
        let e1 = total_energy(&out.final_state, &c, pot.masses, &d.consts);
        prop_assert!(((e1 - e0) / e0).abs() < 1e-9);
        // A small excitation is close to harmonic, so the excess energy is the one put in.
        let q = d.quantum();
        prop_assert!((out.e_ex[0] + out.e_ex[1] - e_in * q).abs() < 0.05 * e_in * q);
    }

    #[test]
    fn equal_masses_mirror(a in -1.0f64..1.0, t_f in 12.0f64..30.0) {
        let d = design();
        let p = Protocol::new(&d, AnsatzParams::new(a, 0.0, t_f)).unwrap();
        let out = simulate(&p, &SimConfig { record: 5, ..SimConfig::default() }).unwrap();
        let e = out.e_ex;
        prop_assert!((e[0] - e[1]).abs() <= 1e-9 * e[0].abs().max(1e-12 * d.quantum()));
        for s in &out.trajectory {
            prop_assert!((s.state.x1 + s.state.x2).abs() < 1e-9);
            prop_assert!((s.state.p1 + s.state.p2).abs() < 1e-9);
        }
    }
}
