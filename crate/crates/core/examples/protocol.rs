//! Samples an inverse-engineered transport protocol as CSV on stdout.

use sta_cool::design::{solve_boundaries, PhysicalConstraints};
use sta_cool::protocol::{AnsatzParams, Protocol};
use sta_cool::units::PhysConstants;

fn main() -> sta_cool::error::Result<()> {
    let consts = PhysConstants::codata();
    let design = solve_boundaries(&PhysicalConstraints::reference(&consts), &consts)?;
    let protocol = Protocol::new(&design, AnsatzParams::new(5.7, 4490.0, 16.6))?;

    let check = protocol.check(2001);
    eprintln!(
        "min gap {:.3e}, max beta/beta_max {:.6}",
        check.min_gap, check.max_beta_ratio
    );
    println!("t,d,alpha,beta,omega_plus_sq");
    for p in protocol.samples(101)? {
        println!("{},{},{},{},{}", p.t, p.d, p.alpha, p.beta, p.omega_plus_sq);
    }
    Ok(())
}
