//! Experiments built on the optimiser: run-time sweeps, robustness grids,
//! critical times, cooling solutions, resonance widths and scaling with the
//! quartic confinement.
//!
//! Energies in results are in quanta `ħω₀` of the design they belong to.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::design::{exchange_estimate, DesignBoundary, PhysicalConstraints};
use crate::dynamics::{phase_averaged_energy, simulate, SimConfig};
use crate::error::{Error, Result};
use crate::fit::{fit_envelope, fit_lorentzian, linear_regression, EnvelopeFit, LorentzFit};
use crate::optimize::{
    optimize_chain_with, optimize_seeded, CostKind, CostSpec, NelderMeadOptions, OptResult,
};
use crate::protocol::{AnsatzParams, Protocol};
use crate::store::{cached, ResultStore};
use crate::unequal::{solve_design, with_mass_ratio};
use crate::units::PhysConstants;

/// Run-times outside this window, in motional cycles, are rejected by
/// [`runtime_sweep`]. For the reference design this is about 4.4 to 111 µs.
pub const RUNTIME_WINDOW_CYCLES: (f64, f64) = (2.0, 50.0);

/// Sweeps ending below this run-time (in cycles) first walk down to their
/// grid from here, so every chain starts where the costs are easy to minimise.
pub const CONTINUATION_START_CYCLES: f64 = 18.0;
const CONTINUATION_STEP_CYCLES: f64 = 0.5;

/// Residual energy below which a run counts as cooled or unexcited.
pub const TARGET_QUANTA: f64 = 0.1;

/// Initial energy of the hot ion in cooling runs.
pub const HOT_QUANTA: f64 = 10.0;

/// Motional phases averaged over for hot-ion runs.
pub const DEFAULT_PHASES: usize = 16;

/// Samples above this energy are left out of the resonance fit.
pub const LORENTZ_CUTOFF_QUANTA: f64 = 2.0;

/// Checks that `grid` is non-empty, finite and strictly increasing.
pub fn check_grid(name: &str, grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Config(format!("{name} grid is empty")));
    }
    if grid.iter().any(|v| !v.is_finite()) {
        return Err(Error::Config(format!("{name} grid has non-finite values")));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config(format!(
            "{name} grid is not strictly increasing"
        )));
    }
    Ok(())
}

/// `start, start + step, …` up to and including `stop` (to rounding).
pub fn linspace_step(start: f64, stop: f64, step: f64) -> Vec<f64> {
    if !(step > 0.0) || stop < start {
        return Vec::new();
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    (0..=n).map(|k| start + step * k as f64).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub t_f: f64,
    pub params: Option<AnsatzParams>,
    pub cost_quanta: f64,
    /// Ground-state excitation of each ion without stray field.
    pub e_ex: [f64; 2],
    pub max_beta_ratio: f64,
    pub evaluations: usize,
    /// Why this point has no usable result.
    pub flag: Option<String>,
}

impl SweepPoint {
    fn failed(t_f: f64, e: &Error) -> Self {
        Self {
            t_f,
            params: None,
            cost_quanta: f64::NAN,
            e_ex: [f64::NAN; 2],
            max_beta_ratio: f64::NAN,
            evaluations: 0,
            flag: Some(e.to_string()),
        }
    }
}

/// Optimised parameters and ground-state excitations over a run-time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuntimeSweep {
    pub design: DesignBoundary,
    pub spec: CostSpec,
    pub nm: NelderMeadOptions,
    pub points: Vec<SweepPoint>,
}

impl RuntimeSweep {
    /// `(t_f, params)` of every unflagged point.
    pub fn params(&self) -> Vec<(f64, AnsatzParams)> {
        self.points
            .iter()
            .filter_map(|p| p.params.map(|q| (p.t_f, q)))
            .collect()
    }

    /// `(t_f, E_ex,1)` of every unflagged point.
    pub fn ground_energies(&self) -> (Vec<f64>, Vec<f64>) {
        self.points
            .iter()
            .filter(|p| p.flag.is_none() && p.e_ex[0].is_finite())
            .map(|p| (p.t_f, p.e_ex[0]))
            .unzip()
    }

    pub fn flagged(&self) -> usize {
        self.points.iter().filter(|p| p.flag.is_some()).count()
    }
}

#[derive(Serialize)]
struct OptimizeKey<'a> {
    design: &'a DesignBoundary,
    spec: &'a CostSpec,
    nm: &'a NelderMeadOptions,
    t_f: f64,
    seeds: &'a [AnsatzParams],
}

/// Optimises each run-time of `grid`, longest first, warm-starting every point
/// from its predecessors, and evaluates the ground-state excitation.
///
/// Each optimisation is cached in `store` under its inputs, including the warm
/// starts, so a repeated sweep replays the same chain from the cache.
pub fn runtime_sweep(
    design: &DesignBoundary,
    spec: &CostSpec,
    grid: &[f64],
    nm: &NelderMeadOptions,
    store: Option<&ResultStore>,
) -> Result<RuntimeSweep> {
    check_grid("run-time", grid)?;
    let cycle = design.cycle();
    let (lo, hi) = RUNTIME_WINDOW_CYCLES;
    if grid[0] < lo * cycle || grid[grid.len() - 1] > hi * cycle {
        return Err(Error::Config(format!(
            "run-times must lie in [{:.3}, {:.3}] us ({lo} to {hi} motional cycles)",
            lo * cycle,
            hi * cycle
        )));
    }
    let top = grid[grid.len() - 1];
    let mut chain = grid.to_vec();
    let mut lead = CONTINUATION_START_CYCLES * cycle;
    while lead > top + 0.5 * CONTINUATION_STEP_CYCLES * cycle {
        chain.push(lead);
        lead -= CONTINUATION_STEP_CYCLES * cycle;
    }
    let mut results = optimize_chain_with(&chain, |t_f, seeds| {
        let key = OptimizeKey {
            design,
            spec,
            nm,
            t_f,
            seeds,
        };
        cached::<_, OptResult, _>(store, "optimize", &key, || {
            optimize_seeded(design, t_f, spec, seeds, nm)
        })
    });
    results.truncate(grid.len());
    let quantum = design.quantum();
    let ground = SimConfig {
        eta: 0.0,
        e_in: [0.0, 0.0],
        ..spec.sim
    };
    let points = grid
        .par_iter()
        .zip(results)
        .map(|(&t_f, r)| {
            let r = match r {
                Ok(r) => r,
                Err(e) => return SweepPoint::failed(t_f, &e),
            };
            let e_ex = Protocol::new(design, r.params).and_then(|p| simulate(&p, &ground));
            match e_ex {
                Ok(out) => SweepPoint {
                    t_f,
                    params: Some(r.params),
                    cost_quanta: r.cost_quanta,
                    e_ex: [out.e_ex[0] / quantum, out.e_ex[1] / quantum],
                    max_beta_ratio: r.max_beta_ratio,
                    evaluations: r.evaluations,
                    flag: r
                        .penalized
                        .then(|| "optimum lies in the penalty region".to_string()),
                },
                Err(e) => SweepPoint::failed(t_f, &e),
            }
        })
        .collect();
    Ok(RuntimeSweep {
        design: *design,
        spec: *spec,
        nm: *nm,
        points,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub t_f: f64,
    pub eta: f64,
    /// Final excitation of each ion, phase averaged for hot starts.
    pub e_ex: [f64; 2],
    pub flag: Option<String>,
}

/// Excitations on a `(t_f, η)` grid for fixed protocols.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessGrid {
    pub t_f: Vec<f64>,
    pub eta: Vec<f64>,
    /// Initial energy of each ion, in quanta.
    pub e_in: [f64; 2],
    pub n_phases: usize,
    /// Row-major in `t_f`, then `η`.
    pub cells: Vec<GridCell>,
}

impl RobustnessGrid {
    pub fn cell(&self, i_tf: usize, i_eta: usize) -> &GridCell {
        &self.cells[i_tf * self.eta.len() + i_eta]
    }

    /// Largest `|η|` around zero over which ion 1 stays below `threshold`
    /// quanta for run-time row `i_tf`: the half-width of the contour.
    pub fn tolerance_width(&self, i_tf: usize, threshold: f64) -> f64 {
        let Some(zero) = self.eta.iter().position(|&e| e == 0.0) else {
            return f64::NAN;
        };
        let below = |j: usize| {
            let c = self.cell(i_tf, j);
            c.flag.is_none() && c.e_ex[0] < threshold
        };
        if !below(zero) {
            return 0.0;
        }
        let mut up = zero;
        while up + 1 < self.eta.len() && below(up + 1) {
            up += 1;
        }
        let mut down = zero;
        while down > 0 && below(down - 1) {
            down -= 1;
        }
        self.eta[up].min(-self.eta[down])
    }
}

/// Simulates every protocol of `params` at every stray field of `eta`.
pub fn robustness_grid(
    design: &DesignBoundary,
    params: &[(f64, AnsatzParams)],
    eta: &[f64],
    e_in_quanta: [f64; 2],
    n_phases: usize,
    sim: &SimConfig,
) -> Result<RobustnessGrid> {
    check_grid("run-time", &params.iter().map(|p| p.0).collect::<Vec<_>>())?;
    check_grid("perturbation", eta)?;
    let quantum = design.quantum();
    let tasks: Vec<(f64, AnsatzParams, f64)> = params
        .iter()
        .flat_map(|&(t, p)| eta.iter().map(move |&e| (t, p, e)))
        .collect();
    let cells = tasks
        .par_iter()
        .map(|&(t_f, p, e)| {
            let cfg = SimConfig {
                eta: e,
                e_in: [e_in_quanta[0] * quantum, e_in_quanta[1] * quantum],
                record: 0,
                ..*sim
            };
            let out =
                Protocol::new(design, p).and_then(|pr| phase_averaged_energy(&pr, &cfg, n_phases));
            match out {
                Ok(v) => GridCell {
                    t_f,
                    eta: e,
                    e_ex: [v[0] / quantum, v[1] / quantum],
                    flag: None,
                },
                Err(err) => GridCell {
                    t_f,
                    eta: e,
                    e_ex: [f64::NAN; 2],
                    flag: Some(err.to_string()),
                },
            }
        })
        .collect();
    Ok(RobustnessGrid {
        t_f: params.iter().map(|p| p.0).collect(),
        eta: eta.to_vec(),
        e_in: e_in_quanta,
        n_phases,
        cells,
    })
}

/// Envelope fit of the ground-state excitations of a sweep, with the critical
/// time at [`TARGET_QUANTA`].
pub fn envelope_from_sweep(sweep: &RuntimeSweep) -> Result<EnvelopeFit> {
    let (t, e) = sweep.ground_energies();
    if t.len() < 20 {
        return Err(Error::Fit(format!(
            "{} usable sweep points, the envelope fit needs at least 20",
            t.len()
        )));
    }
    fit_envelope(&t, &e, TARGET_QUANTA)
}

/// Phase-averaged final energy of a hot ion over a run-time grid and the run-time
/// of its minimum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoolingResult {
    pub t_f: Vec<f64>,
    /// Final energy of each ion, in quanta.
    pub e_ex: Vec<[f64; 2]>,
    pub flags: Vec<Option<String>>,
    pub e_hot: f64,
    pub n_phases: usize,
    /// Index of the smallest energy of ion 1 on the grid.
    pub min_index: usize,
    /// Cooling time, refined between grid points.
    pub t_c: f64,
    pub t_c_cycles: f64,
    /// Smallest energy of ion 1 on the grid, in quanta.
    pub e_min: f64,
    pub cooled: bool,
    pub omega0: f64,
}

/// Vertex abscissa of the parabola through three points, clamped to their span.
pub fn parabolic_vertex(x: [f64; 3], y: [f64; 3]) -> f64 {
    let d1 = (y[1] - y[0]) / (x[1] - x[0]);
    let d2 = (y[2] - y[1]) / (x[2] - x[1]);
    let curv = (d2 - d1) / (x[2] - x[0]);
    if !(curv > 0.0) {
        return x[1];
    }
    // Vertex of y0 + d1(x − x0) + curv(x − x0)(x − x1).
    let v = 0.5 * (x[0] + x[1]) - d1 / (2.0 * curv);
    v.clamp(x[0], x[2])
}

/// Cooling time from a run-time sweep: the hot ion starts with `e_hot` quanta,
/// the other in its ground state, and the final energy is averaged over
/// `n_phases` initial motional phases.
pub fn find_cooling_time(
    sweep: &RuntimeSweep,
    e_hot: f64,
    n_phases: usize,
) -> Result<CoolingResult> {
    let design = &sweep.design;
    let params = sweep.params();
    if params.len() < 3 {
        return Err(Error::Fit(
            "a cooling search needs three or more optimised run-times".into(),
        ));
    }
    let quantum = design.quantum();
    let cfg = SimConfig {
        eta: 0.0,
        e_in: [e_hot * quantum, 0.0],
        record: 0,
        ..sweep.spec.sim
    };
    let runs: Vec<Result<[f64; 2]>> = params
        .par_iter()
        .map(|&(_, p)| {
            let pr = Protocol::new(design, p)?;
            let e = phase_averaged_energy(&pr, &cfg, n_phases)?;
            Ok([e[0] / quantum, e[1] / quantum])
        })
        .collect();
    let t_f: Vec<f64> = params.iter().map(|p| p.0).collect();
    let mut e_ex = Vec::with_capacity(runs.len());
    let mut flags = Vec::with_capacity(runs.len());
    for r in runs {
        match r {
            Ok(v) => {
                e_ex.push(v);
                flags.push(None);
            }
            Err(e) => {
                e_ex.push([f64::NAN; 2]);
                flags.push(Some(e.to_string()));
            }
        }
    }
    let min_index = (0..t_f.len())
        .filter(|&i| e_ex[i][0].is_finite())
        .min_by(|&i, &j| e_ex[i][0].total_cmp(&e_ex[j][0]))
        .ok_or_else(|| Error::Fit("every hot-ion run failed".into()))?;
    let e_min = e_ex[min_index][0];
    let t_c = if min_index > 0
        && min_index + 1 < t_f.len()
        && e_ex[min_index - 1][0].is_finite()
        && e_ex[min_index + 1][0].is_finite()
    {
        let k = min_index;
        parabolic_vertex(
            [t_f[k - 1], t_f[k], t_f[k + 1]],
            [e_ex[k - 1][0], e_ex[k][0], e_ex[k + 1][0]],
        )
    } else {
        t_f[min_index]
    };
    Ok(CoolingResult {
        t_c,
        t_c_cycles: t_c / design.cycle(),
        e_min,
        cooled: e_min < TARGET_QUANTA,
        min_index,
        t_f,
        e_ex,
        flags,
        e_hot,
        n_phases,
        omega0: design.omega0,
    })
}

/// Final energies of ion 1 for a fixed protocol against its initial energy.
pub fn initial_energy_scan(
    protocol: &Protocol,
    e_in_quanta: &[f64],
    n_phases: usize,
    sim: &SimConfig,
) -> Result<Vec<(f64, [f64; 2])>> {
    let quantum = protocol.design().quantum();
    e_in_quanta
        .par_iter()
        .map(|&e| {
            let cfg = SimConfig {
                e_in: [e * quantum, 0.0],
                record: 0,
                ..*sim
            };
            let v = phase_averaged_energy(protocol, &cfg, n_phases)?;
            Ok((e, [v[0] / quantum, v[1] / quantum]))
        })
        .collect()
}

/// Hot-ion energies across a stray-field cut at one protocol, and the
/// resonance fit to them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResonanceResult {
    pub d_in_ratio: f64,
    pub t_c: f64,
    pub eta: Vec<f64>,
    pub e_ex: Vec<f64>,
    pub fit: LorentzFit,
    /// Tolerable `|η|` for `e_hot → 0.1` and `1 → 0.1` quanta.
    pub tolerable_eta: f64,
    pub tolerable_eta_one_quantum: f64,
}

/// Stray-field cut through the cooling solution of `cooling` with a Lorentz fit.
pub fn resonance(
    sweep: &RuntimeSweep,
    cooling: &CoolingResult,
    eta: &[f64],
    n_phases: usize,
) -> Result<ResonanceResult> {
    check_grid("perturbation", eta)?;
    let design = &sweep.design;
    let (t_c, params) = sweep
        .points
        .iter()
        .find(|p| p.t_f == cooling.t_f[cooling.min_index])
        .and_then(|p| p.params.map(|q| (p.t_f, q)))
        .ok_or_else(|| Error::Fit("cooling solution has no optimised protocol".into()))?;
    let grid = robustness_grid(
        design,
        &[(t_c, params)],
        eta,
        [cooling.e_hot, 0.0],
        n_phases,
        &sweep.spec.sim,
    )?;
    let e_ex: Vec<f64> = grid.cells.iter().map(|c| c.e_ex[0]).collect();
    let ratio = design.constraints.d_in / design.d_c;
    let fit = fit_lorentzian(eta, &e_ex, cooling.e_hot, ratio, LORENTZ_CUTOFF_QUANTA)?;
    Ok(ResonanceResult {
        d_in_ratio: ratio,
        t_c,
        eta: eta.to_vec(),
        tolerable_eta: fit.tolerable_eta(TARGET_QUANTA, cooling.e_hot),
        tolerable_eta_one_quantum: fit.tolerable_eta(TARGET_QUANTA, 1.0),
        e_ex,
        fit,
    })
}

/// One cell of the scaling study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingCell {
    pub beta_multiplier: f64,
    pub d_in_ratio: f64,
    pub omega0: f64,
    pub d_c: f64,
    /// Stray force at unit perturbation parameter; scales like `γ½`.
    pub gamma_unit: f64,
    /// Exchange rate at `d₀` over `ω₀`.
    pub exchange_ratio: f64,
    pub cooling: Option<CoolingResult>,
    pub t_crit_cycles: Option<f64>,
    pub flag: Option<String>,
}

/// Power-law exponents regressed across the multipliers of a scaling study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingExponents {
    pub omega0: f64,
    pub d_c: f64,
    pub gamma_half: f64,
    pub exchange_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingStudy {
    pub cells: Vec<ScalingCell>,
    pub exponents: ScalingExponents,
    /// Run-time grid in motional cycles.
    pub grid_cycles: Vec<f64>,
}

/// Settings shared by the cooling-type experiments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoolingSettings {
    pub spec: CostSpec,
    pub nm: NelderMeadOptions,
    pub e_hot: f64,
    pub n_phases: usize,
}

impl CoolingSettings {
    pub fn new(spec: CostSpec) -> Self {
        Self {
            spec,
            nm: NelderMeadOptions::default(),
            e_hot: HOT_QUANTA,
            n_phases: DEFAULT_PHASES,
        }
    }
}

/// Cooling time and critical time, both in motional cycles, for every
/// `(β_max multiplier, d_in/d_c)` pair. Run-times are given in cycles so the
/// grid follows the trap frequency of each cell.
pub fn scaling_study(
    base: &PhysicalConstraints,
    consts: &PhysConstants,
    multipliers: &[f64],
    d_in_ratios: &[f64],
    grid_cycles: &[f64],
    settings: &CoolingSettings,
    store: Option<&ResultStore>,
) -> Result<ScalingStudy> {
    check_grid("beta multiplier", multipliers)?;
    check_grid("d_in ratio", d_in_ratios)?;
    check_grid("run-time (cycles)", grid_cycles)?;
    let mut cells = Vec::new();
    for &m in multipliers {
        for &r in d_in_ratios {
            cells.push(scaling_cell(
                base,
                consts,
                m,
                r,
                grid_cycles,
                settings,
                store,
            )?);
        }
    }
    let first_ratio: Vec<&ScalingCell> = cells
        .iter()
        .filter(|c| c.d_in_ratio == d_in_ratios[0])
        .collect();
    let exponents = if first_ratio.len() >= 2 {
        let x: Vec<f64> = first_ratio.iter().map(|c| c.beta_multiplier.ln()).collect();
        let slope = |f: &dyn Fn(&ScalingCell) -> f64| -> Result<f64> {
            let y: Vec<f64> = first_ratio.iter().map(|c| f(c).ln()).collect();
            Ok(linear_regression(&x, &y)?.0)
        };
        ScalingExponents {
            omega0: slope(&|c| c.omega0)?,
            d_c: slope(&|c| c.d_c)?,
            gamma_half: slope(&|c| c.gamma_unit)?,
            exchange_ratio: slope(&|c| c.exchange_ratio)?,
        }
    } else {
        ScalingExponents {
            omega0: f64::NAN,
            d_c: f64::NAN,
            gamma_half: f64::NAN,
            exchange_ratio: f64::NAN,
        }
    };
    Ok(ScalingStudy {
        cells,
        exponents,
        grid_cycles: grid_cycles.to_vec(),
    })
}

fn scaling_cell(
    base: &PhysicalConstraints,
    consts: &PhysConstants,
    multiplier: f64,
    d_in_ratio: f64,
    grid_cycles: &[f64],
    settings: &CoolingSettings,
    store: Option<&ResultStore>,
) -> Result<ScalingCell> {
    let d0_ratio = base.d0 / crate::design::critical_distance(base.beta_max, consts)?;
    let pc = PhysicalConstraints::equal_mass(
        base.beta_max * multiplier,
        d0_ratio,
        d_in_ratio,
        base.m1,
        consts,
    )?;
    let design = solve_design(&pc, consts)?;
    let w = design.omega0;
    let (rate, _) = exchange_estimate(pc.m1, pc.m2, w, w, pc.d0, consts)?;
    let grid: Vec<f64> = grid_cycles.iter().map(|c| c * design.cycle()).collect();
    let mut cell = ScalingCell {
        beta_multiplier: multiplier,
        d_in_ratio,
        omega0: w,
        d_c: design.d_c,
        gamma_unit: design.stray_force(1.0),
        exchange_ratio: rate / w,
        cooling: None,
        t_crit_cycles: None,
        flag: None,
    };
    let sweep = runtime_sweep(&design, &settings.spec, &grid, &settings.nm, store);
    match sweep.and_then(|s| {
        let fit = envelope_from_sweep(&s).ok();
        find_cooling_time(&s, settings.e_hot, settings.n_phases).map(|c| (c, fit))
    }) {
        Ok((c, fit)) => {
            cell.cooling = Some(c);
            cell.t_crit_cycles = fit.map(|f| f.t_crit / design.cycle());
        }
        Err(e) => cell.flag = Some(e.to_string()),
    }
    Ok(cell)
}

/// Cooling result for one mass ratio.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnequalCooling {
    pub ratio: f64,
    pub design: DesignBoundary,
    pub sweep: RuntimeSweep,
    pub cooling: Option<CoolingResult>,
    /// Swap-time estimate from the exchange rate at `d₀`.
    pub t_exchange_estimate: f64,
    pub flag: Option<String>,
}

/// Cooling search for each mass ratio `m₁/m₂`, keeping the hot ion's mass.
pub fn cooling_scan_unequal(
    base: &PhysicalConstraints,
    consts: &PhysConstants,
    ratios: &[f64],
    grid: &[f64],
    settings: &CoolingSettings,
    store: Option<&ResultStore>,
) -> Result<Vec<UnequalCooling>> {
    let robust = matches!(
        settings.spec.kind,
        CostKind::ApproxRobust | CostKind::ExactRobust
    );
    if robust || settings.spec.sim.eta != 0.0 {
        return Err(Error::Domain(
            "stray-field robustness is not available for unequal masses".into(),
        ));
    }
    ratios
        .iter()
        .map(|&ratio| {
            let pc = with_mass_ratio(base, ratio)?;
            let design = solve_design(&pc, consts)?;
            let w = design.omega0;
            let (_, t_e) = exchange_estimate(pc.m1, pc.m2, w, w, pc.d_in, consts)?;
            let sweep = runtime_sweep(&design, &settings.spec, grid, &settings.nm, store)?;
            let (cooling, flag) = match find_cooling_time(&sweep, settings.e_hot, settings.n_phases)
            {
                Ok(c) => (Some(c), None),
                Err(e) => (None, Some(e.to_string())),
            };
            Ok(UnequalCooling {
                ratio,
                design,
                sweep,
                cooling,
                t_exchange_estimate: t_e,
                flag,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vertex_of_exact_parabola() {
        let f = |x: f64| 3.0 * (x - 1.37).powi(2) + 0.2;
        let x = [1.0, 1.2, 1.4];
        let v = parabolic_vertex(x, [f(x[0]), f(x[1]), f(x[2])]);
        assert!((v - 1.37).abs() < 1e-12);
    }

    #[test]
    fn vertex_is_clamped_and_concave_falls_back() {
        assert_eq!(parabolic_vertex([0.0, 1.0, 2.0], [1.0, 0.0, 1.0]), 1.0);
        assert_eq!(parabolic_vertex([0.0, 1.0, 2.0], [0.0, 1.0, 0.0]), 1.0);
    }

    #[test]
    fn grids() {
        assert_eq!(linspace_step(1.0, 2.0, 0.5), vec![1.0, 1.5, 2.0]);
        assert_eq!(linspace_step(10.0, 12.0, 0.2).len(), 11);
        assert!(check_grid("x", &[1.0, 1.0]).is_err());
        assert!(check_grid("x", &[]).is_err());
        assert!(check_grid("x", &[1.0, 2.0]).is_ok());
    }

    #[test]
    fn tolerance_width_reads_the_contour() {
        let eta = vec![-0.02, -0.01, 0.0, 0.01, 0.02];
        let energies = [5.0, 0.05, 0.01, 0.05, 0.5];
        let grid = RobustnessGrid {
            t_f: vec![20.0],
            eta: eta.clone(),
            e_in: [0.0; 2],
            n_phases: 1,
            cells: eta
                .iter()
                .zip(energies)
                .map(|(&e, v)| GridCell {
                    t_f: 20.0,
                    eta: e,
                    e_ex: [v, v],
                    flag: None,
                })
                .collect(),
        };
        assert_eq!(grid.tolerance_width(0, 0.1), 0.01);
        assert_eq!(grid.tolerance_width(0, 1.0), 0.01);
        assert_eq!(grid.tolerance_width(0, 10.0), 0.02);
        assert_eq!(grid.tolerance_width(0, 0.001), 0.0);
    }
}
