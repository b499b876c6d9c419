//! How the design scales with the quartic confinement.

use sta_cool::design::{exchange_estimate, solve_boundaries, PhysicalConstraints, CA40_MASS};
use sta_cool::fit::linear_regression;
use sta_cool::units::PhysConstants;

fn main() -> sta_cool::error::Result<()> {
    let consts = PhysConstants::codata();
    let base = PhysicalConstraints::reference(&consts);
    let mut rows = Vec::new();
    for m in [0.1, 1.0, 10.0, 100.0] {
        let pc = PhysicalConstraints::equal_mass(base.beta_max * m, 5.0, 1.1, CA40_MASS, &consts)?;
        let d = solve_boundaries(&pc, &consts)?;
        let (rate, _) = exchange_estimate(pc.m1, pc.m2, d.omega0, d.omega0, pc.d0, &consts)?;
        println!(
            "beta x {m:<5}  d_c = {:6.3} um  omega0/2pi = {:.4} MHz  Omega/omega0 = {:.3e}",
            d.d_c,
            d.omega0 / std::f64::consts::TAU,
            rate / d.omega0
        );
        rows.push((m.ln(), d.d_c.ln(), d.omega0.ln(), d.stray_force(1.0).ln()));
    }
    let x: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let slope = |f: fn(&(f64, f64, f64, f64)) -> f64| {
        linear_regression(&x, &rows.iter().map(f).collect::<Vec<_>>()).map(|r| r.0)
    };
    println!("d_c ~ beta^{:.4}", slope(|r| r.1)?);
    println!("omega0 ~ beta^{:.4}", slope(|r| r.2)?);
    println!("stray force at fixed eta ~ beta^{:.4}", slope(|r| r.3)?);
    Ok(())
}
