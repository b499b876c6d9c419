//! Cooling time of the reference design and the tolerance to the hot ion's
//! initial energy.
//!
//! `cargo run --release --example cooling -- 1.1 15.6 17.6 0.2`

use sta_cool::analysis::{find_cooling_time, initial_energy_scan, linspace_step, runtime_sweep};
use sta_cool::design::{solve_boundaries, PhysicalConstraints};
use sta_cool::optimize::{CostKind, CostSpec, NelderMeadOptions};
use sta_cool::protocol::Protocol;
use sta_cool::store::ResultStore;
use sta_cool::units::PhysConstants;

fn main() -> sta_cool::error::Result<()> {
    let args: Vec<f64> = std::env::args()
        .skip(1)
        .filter_map(|s| s.parse().ok())
        .collect();
    let arg = |i: usize, default: f64| args.get(i).copied().unwrap_or(default);
    let consts = PhysConstants::codata();
    let pc = PhysicalConstraints::reference(&consts).with_d_in_ratio(arg(0, 1.1), &consts)?;
    let design = solve_boundaries(&pc, &consts)?;
    let grid = linspace_step(arg(1, 15.6), arg(2, 17.6), arg(3, 0.2));

    let spec = CostSpec::new(CostKind::ExactRobust);
    let store = ResultStore::from_env(std::env::temp_dir().join("sta-cool-cache"))?;
    let sweep = runtime_sweep(
        &design,
        &spec,
        &grid,
        &NelderMeadOptions::default(),
        Some(&store),
    )?;
    let c = find_cooling_time(&sweep, 10.0, 16)?;
    for (t, e) in c.t_f.iter().zip(&c.e_ex) {
        println!(
            "{t:6.2} us  hot ion {:.4} quanta, cold ion {:.4} quanta",
            e[0], e[1]
        );
    }
    println!(
        "T_c = {:.3} us ({:.2} cycles), residual {:.2e} quanta, cooled: {}",
        c.t_c, c.t_c_cycles, c.e_min, c.cooled
    );

    let protocol = Protocol::new(&design, sweep.params()[c.min_index].1)?;
    for (e_in, e) in initial_energy_scan(&protocol, &[0.0, 5.0, 10.0, 20.5], 16, &spec.sim)? {
        println!("E_in = {e_in:5.1} quanta -> {:.4} quanta", e[0]);
    }
    Ok(())
}
