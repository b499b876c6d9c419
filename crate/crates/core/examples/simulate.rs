//! A hot ion and a cold ion through one transport protocol.

use sta_cool::design::{solve_boundaries, PhysicalConstraints};
use sta_cool::dynamics::{phase_resolved_energy, simulate, SimConfig};
use sta_cool::protocol::{AnsatzParams, Protocol};
use sta_cool::units::PhysConstants;

fn main() -> sta_cool::error::Result<()> {
    let consts = PhysConstants::codata();
    let design = solve_boundaries(&PhysicalConstraints::reference(&consts), &consts)?;
    let q = design.quantum();
    let protocol = Protocol::new(&design, AnsatzParams::new(5.7, 4490.0, 16.6))?;

    let cfg = SimConfig {
        e_in: [10.0 * q, 0.0],
        record: 11,
        ..SimConfig::default()
    };
    let out = simulate(&protocol, &cfg)?;
    for s in &out.trajectory {
        println!(
            "t = {:6.2} us  x1 = {:8.3}  x2 = {:8.3}  E1 = {:7.3}  E2 = {:7.3}",
            s.state.t,
            s.state.x1,
            s.state.x2,
            s.e_ex[0] / q,
            s.e_ex[1] / q
        );
    }

    let scan = phase_resolved_energy(&protocol, &cfg, 8)?;
    for (phi, e) in scan.phases.iter().zip(&scan.e_ex) {
        println!("phi = {phi:.3}: E1 = {:.4} quanta", e[0] / q);
    }
    println!("phase average: {:.4} quanta", scan.mean[0] / q);
    Ok(())
}
