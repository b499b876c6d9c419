//! Boundary and midpoint design of the reference trap.

use sta_cool::design::{exchange_estimate, solve_boundaries, PhysicalConstraints};
use sta_cool::units::{parse_quantity, Dimension, PhysConstants};

fn main() -> sta_cool::error::Result<()> {
    let consts = PhysConstants::codata();
    let beta_max = parse_quantity("0.85e-3 N/m^3", Dimension::Quartic, None)?;
    println!("beta_max = {beta_max:.6} amu/(um^2 us^2)");

    let design = solve_boundaries(&PhysicalConstraints::reference(&consts), &consts)?;
    println!("d_c = {:.3} um", design.d_c);
    println!(
        "omega0/2pi = {:.4} MHz",
        design.omega0 / std::f64::consts::TAU
    );
    println!("alpha: {:.5e} -> {:.5e}", design.alpha_out, design.alpha_in);
    println!("beta:  {:.5e} -> {:.5e}", design.beta_out, design.beta_in);

    let m = design.constraints.m1;
    for (label, d) in [
        ("d0", design.constraints.d0),
        ("d_in", design.constraints.d_in),
    ] {
        let (_, t_e) = exchange_estimate(m, m, design.omega0, design.omega0, d, &consts)?;
        println!(
            "exchange time at {label}: {t_e:.2} us ({:.1} cycles)",
            t_e / design.cycle()
        );
    }
    Ok(())
}
