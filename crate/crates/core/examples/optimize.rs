//! Optimises one run-time with each of the four costs.

use sta_cool::design::{solve_boundaries, PhysicalConstraints};
use sta_cool::dynamics::{simulate, SimConfig};
use sta_cool::optimize::{optimize_runtime, CostKind, CostSpec, NelderMeadOptions};
use sta_cool::protocol::Protocol;
use sta_cool::units::PhysConstants;

fn main() -> sta_cool::error::Result<()> {
    let t_f: f64 = std::env::args()
        .nth(1)
        .map_or(Ok(25.0), |s| s.parse())
        .unwrap_or(25.0);
    let consts = PhysConstants::codata();
    let design = solve_boundaries(&PhysicalConstraints::reference(&consts), &consts)?;
    let nm = NelderMeadOptions::default();

    for kind in [
        CostKind::ApproxNonRobust,
        CostKind::ExactNonRobust,
        CostKind::ApproxRobust,
        CostKind::ExactRobust,
    ] {
        let r = optimize_runtime(&design, t_f, &CostSpec::new(kind), None, &nm)?;
        let ground = simulate(&Protocol::new(&design, r.params)?, &SimConfig::default())?;
        println!(
            "{:<17} A = {:8.4}  B = {:10.2}  cost = {:.3e} quanta  E_ex,1 = {:.3e} quanta  ({} evaluations)",
            kind.name(),
            r.params.a,
            r.params.b,
            r.cost_quanta,
            ground.e_ex[0] / design.quantum(),
            r.evaluations
        );
    }
    Ok(())
}
