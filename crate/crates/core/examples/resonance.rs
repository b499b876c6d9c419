//! Resonance width of the energy swap against a stray field.
//!
//! `cargo run --release --example resonance -- 1.05 13.4 15.4 0.2`

use sta_cool::analysis::{find_cooling_time, linspace_step, resonance, runtime_sweep};
use sta_cool::design::{solve_boundaries, PhysicalConstraints};
use sta_cool::optimize::{CostKind, CostSpec, NelderMeadOptions};
use sta_cool::store::ResultStore;
use sta_cool::units::PhysConstants;

fn main() -> sta_cool::error::Result<()> {
    let args: Vec<f64> = std::env::args()
        .skip(1)
        .filter_map(|s| s.parse().ok())
        .collect();
    let arg = |i: usize, default: f64| args.get(i).copied().unwrap_or(default);
    let consts = PhysConstants::codata();
    let ratio = arg(0, 1.05);
    let pc = PhysicalConstraints::reference(&consts).with_d_in_ratio(ratio, &consts)?;
    let design = solve_boundaries(&pc, &consts)?;
    let grid = linspace_step(arg(1, 13.4), arg(2, 15.4), arg(3, 0.2));

    let store = ResultStore::from_env(std::env::temp_dir().join("sta-cool-cache"))?;
    let spec = CostSpec::new(CostKind::ExactRobust);
    let sweep = runtime_sweep(
        &design,
        &spec,
        &grid,
        &NelderMeadOptions::default(),
        Some(&store),
    )?;
    let cooling = find_cooling_time(&sweep, 10.0, 16)?;
    let r = resonance(&sweep, &cooling, &linspace_step(-0.1, 0.1, 0.01), 16)?;
    for (eta, e) in r.eta.iter().zip(&r.e_ex) {
        println!("eta = {eta:+.3}: {e:.3} quanta");
    }
    println!(
        "k = {:.3} +- {:.3}, eta_half = {:.4}, |eta| for 10 -> 0.1 quanta: {:.5}, for 1 -> 0.1: {:.5}",
        r.fit.k, r.fit.k_std, r.fit.eta_half, r.tolerable_eta, r.tolerable_eta_one_quantum
    );
    Ok(())
}
