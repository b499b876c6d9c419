//! Critical time of a robust cost from a run-time sweep and the envelope fit.
//!
//! `cargo run --release --example critical_time -- approx_robust 8 45 0.5`

use sta_cool::analysis::{envelope_from_sweep, linspace_step, runtime_sweep};
use sta_cool::design::{solve_boundaries, PhysicalConstraints};
use sta_cool::optimize::{CostKind, CostSpec, NelderMeadOptions};
use sta_cool::store::ResultStore;
use sta_cool::units::PhysConstants;

fn main() -> sta_cool::error::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let kind: CostKind = args
        .first()
        .map_or("approx_robust", String::as_str)
        .parse()?;
    let num = |i: usize, default: f64| args.get(i).and_then(|s| s.parse().ok()).unwrap_or(default);
    let grid = linspace_step(num(1, 8.0), num(2, 45.0), num(3, 0.5));

    let consts = PhysConstants::codata();
    let design = solve_boundaries(&PhysicalConstraints::reference(&consts), &consts)?;
    let store = ResultStore::from_env(std::env::temp_dir().join("sta-cool-cache"))?;
    let sweep = runtime_sweep(
        &design,
        &CostSpec::new(kind),
        &grid,
        &NelderMeadOptions::default(),
        Some(&store),
    )?;

    for p in &sweep.points {
        println!("{:6.2} us  {:.3e} quanta", p.t_f, p.e_ex[0]);
    }
    let fit = envelope_from_sweep(&sweep)?;
    println!(
        "a = {:.3e}, b = {:.4}/us, c = {:.4}/us, d = {:.3}",
        fit.a, fit.b, fit.c, fit.d
    );
    println!(
        "T_crit = {:.2} us = {:.2} cycles",
        fit.t_crit,
        fit.t_crit / design.cycle()
    );
    Ok(())
}
