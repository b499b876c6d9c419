//! Transport of two ions of different mass: design checks and one- against
//! two-parameter optimisation.

use sta_cool::design::PhysicalConstraints;
use sta_cool::optimize::NelderMeadOptions;
use sta_cool::unequal::{
    build_unequal_protocol, check_modes, normal_mode_matrix, optimize_unequal,
    solve_boundaries_unequal, symplectic_defect, with_mass_ratio,
};
use sta_cool::units::PhysConstants;

fn main() -> sta_cool::error::Result<()> {
    let ratio: f64 = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(2.0);
    let t_f: f64 = std::env::args()
        .nth(2)
        .and_then(|s| s.parse().ok())
        .unwrap_or(10.0);
    let consts = PhysConstants::codata();
    let pc = with_mass_ratio(&PhysicalConstraints::reference(&consts), ratio)?;
    let design = solve_boundaries_unequal(&pc, &consts)?;
    println!(
        "m1 = {:.2} amu, m2 = {:.2} amu, omega0/2pi = {:.4} MHz, gamma: {:.4e} -> {:.4e}",
        pc.m1,
        pc.m2,
        design.omega0 / std::f64::consts::TAU,
        design.gamma_out,
        design.gamma_in
    );
    println!(
        "normal-mode map symplectic defect: {:.1e}",
        symplectic_defect(normal_mode_matrix(design.masses()))
    );

    let nm = NelderMeadOptions::default();
    for n in [1, 2] {
        let r = optimize_unequal(&design, t_f, n, &[], &nm)?;
        let worst = check_modes(&build_unequal_protocol(&design, r.params)?, 100)?
            .iter()
            .fold(0.0f64, |m, c| {
                m.max(c.curvature_mismatch).max(c.eigenvalue_error)
            });
        println!(
            "{n} parameter(s) at {t_f} us: A = {:.4}, B = {:.1}, E_ex,1 = {:.3e} quanta, mode check {:.1e}",
            r.params.a, r.params.b, r.cost_quanta, worst
        );
    }
    Ok(())
}
