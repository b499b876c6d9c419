//! Derivative-free optimisation of the free ansatz parameters.
//!
//! Each run-time is optimised on its own with a downhill simplex over `A`
//! (one-parameter costs) or `(A, B)` (two-parameter costs). `B` multiplies
//! `(s − 1/2)¹⁴`, which is at most `6e-5` on the protocol interval, so it is
//! optimised in units of [`B_UNIT`] to give both directions comparable leverage.

use serde::{Deserialize, Serialize};

use crate::auxiliary::{aux_energy, solve_q_plus};
use crate::design::DesignBoundary;
use crate::dynamics::{simulate, SimConfig};
use crate::error::{Error, Result};
use crate::protocol::{AnsatzParams, Protocol};

/// Scale of `B` inside the optimiser.
pub const B_UNIT: f64 = 1000.0;

/// Penalty for unphysical parameters, in quanta `ħω₀`.
pub const PENALTY_QUANTA: f64 = 1e6;

/// Relative overshoot of `β` above `β_max` tolerated by default.
pub const BETA_TOLERANCE: f64 = 1e-9;

/// Number of samples used to screen a protocol for feasibility.
pub const CHECK_SAMPLES: usize = 401;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostKind {
    /// Stretch-mode auxiliary energy `E_q⁽⁺⁾(t_f)`.
    ApproxNonRobust,
    /// Excess energy of both ions from the full dynamics.
    ExactNonRobust,
    /// `E_q⁽⁺⁾(t_f) + Ẽ_q⁽⁻⁾(t_f, η)`.
    ApproxRobust,
    /// `Σᵢ E_ex,i(t_f, 0) + E_ex,i(t_f, η)` from the full dynamics.
    ExactRobust,
}

impl CostKind {
    pub fn default_params(self) -> usize {
        match self {
            CostKind::ApproxNonRobust | CostKind::ExactNonRobust => 1,
            CostKind::ApproxRobust | CostKind::ExactRobust => 2,
        }
    }

    pub fn is_exact(self) -> bool {
        matches!(self, CostKind::ExactNonRobust | CostKind::ExactRobust)
    }

    pub fn name(self) -> &'static str {
        match self {
            CostKind::ApproxNonRobust => "approx_nonrobust",
            CostKind::ExactNonRobust => "exact_nonrobust",
            CostKind::ApproxRobust => "approx_robust",
            CostKind::ExactRobust => "exact_robust",
        }
    }
}

impl std::str::FromStr for CostKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "approx_nonrobust" => CostKind::ApproxNonRobust,
            "exact_nonrobust" => CostKind::ExactNonRobust,
            "approx_robust" => CostKind::ApproxRobust,
            "exact_robust" => CostKind::ExactRobust,
            other => return Err(Error::Config(format!("unknown cost kind {other:?}"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostSpec {
    pub kind: CostKind,
    /// Stray-field parameter the robust costs guard against.
    pub eta_design: f64,
    /// Number of free parameters: 1 optimises `A` with `B` fixed, 2 optimises both.
    pub n_params: usize,
    /// Integrator settings for the exact costs and the auxiliary equations.
    pub sim: SimConfig,
    /// Relative overshoot of `β` above `β_max` that is penalised; `None` only reports it.
    pub beta_tolerance: Option<f64>,
}

impl CostSpec {
    pub fn new(kind: CostKind) -> Self {
        Self {
            kind,
            eta_design: 0.015,
            n_params: kind.default_params(),
            sim: SimConfig::default(),
            beta_tolerance: Some(BETA_TOLERANCE),
        }
    }

    pub fn with_params(mut self, n: usize) -> Self {
        self.n_params = n;
        self
    }
}

/// Value of a cost function at one parameter point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostValue {
    /// Internal energy units.
    pub cost: f64,
    pub penalized: bool,
    pub max_beta_ratio: f64,
}

/// Maps a physical cost below the penalty level, monotonically and without
/// moving its minima: `c·P/(c + P)` differs from `c` by a relative `c/P`.
fn compress(cost: f64, penalty: f64) -> f64 {
    cost * penalty / (cost + penalty)
}

/// Evaluates a cost function for one choice of ansatz parameters.
pub fn evaluate_cost(
    spec: &CostSpec,
    params: AnsatzParams,
    design: &DesignBoundary,
) -> Result<CostValue> {
    if !(params.a.abs() <= 1e7 && params.b.abs() <= 1e7 * B_UNIT) {
        return Err(Error::Domain(format!(
            "ansatz parameters out of range: A = {}, B = {}",
            params.a, params.b
        )));
    }
    let penalty = PENALTY_QUANTA * design.quantum();
    let protocol = Protocol::new(design, params)?;
    let check = protocol.check(CHECK_SAMPLES);
    let penalized = |max_beta_ratio| CostValue {
        cost: penalty,
        penalized: true,
        max_beta_ratio,
    };
    if !check.is_physical() {
        return Ok(penalized(check.max_beta_ratio));
    }
    if let Some(tol) = spec.beta_tolerance {
        if !check.respects_beta_max(tol) {
            return Ok(penalized(check.max_beta_ratio));
        }
    }
    let raw = match spec.kind {
        CostKind::ApproxNonRobust => {
            solve_q_plus(&protocol, &spec.sim.ode_options()).map(|s| s.energy)
        }
        CostKind::ApproxRobust => aux_energy(&protocol, spec.eta_design, &spec.sim.ode_options()),
        CostKind::ExactNonRobust => exact_energy(&protocol, &spec.sim, 0.0),
        CostKind::ExactRobust => exact_energy(&protocol, &spec.sim, 0.0)
            .and_then(|e0| Ok(e0 + exact_energy(&protocol, &spec.sim, spec.eta_design)?)),
    };
    match raw {
        Ok(c) if c.is_finite() => Ok(CostValue {
            cost: compress(c.max(0.0), penalty),
            penalized: false,
            max_beta_ratio: check.max_beta_ratio,
        }),
        Ok(_) => Ok(penalized(check.max_beta_ratio)),
        Err(e) if e.is_unphysical() || matches!(e, Error::Ode(_) | Error::Equilibrium(_)) => {
            Ok(penalized(check.max_beta_ratio))
        }
        Err(e) => Err(e),
    }
}

/// `E_ex,1 + E_ex,2` for ground-state ions under stray-field parameter `eta`.
fn exact_energy(protocol: &Protocol, sim: &SimConfig, eta: f64) -> Result<f64> {
    let cfg = SimConfig {
        eta,
        e_in: [0.0, 0.0],
        phi: 0.0,
        record: 0,
        ..*sim
    };
    let out = simulate(protocol, &cfg)?;
    Ok(out.e_ex[0] + out.e_ex[1])
}

/// Settings of the downhill simplex.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NelderMeadOptions {
    /// Spread of the simplex costs below which it has converged.
    pub f_tol: f64,
    /// Largest vertex distance (per coordinate) below which it has converged.
    pub x_tol: f64,
    pub max_eval: usize,
    pub reflection: f64,
    pub expansion: f64,
    pub contraction: f64,
    pub shrink: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            f_tol: 1e-10,
            x_tol: 1e-8,
            max_eval: 2000,
            reflection: 1.0,
            expansion: 2.0,
            contraction: 0.5,
            shrink: 0.5,
        }
    }
}

/// Best cost after each simplex iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub evaluations: usize,
    pub best: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub evaluations: usize,
    pub converged: bool,
    pub trace: Vec<TraceRow>,
}

/// Initial simplex step: 10% of the magnitude, or 1 for a zero coordinate.
pub fn simplex_scale(x0: &[f64]) -> Vec<f64> {
    x0.iter()
        .map(|&x| if x == 0.0 { 1.0 } else { 0.1 * x.abs() })
        .collect()
}

/// Downhill-simplex minimisation of `f` from `x0`.
pub fn nelder_mead<F>(mut f: F, x0: &[f64], scale: &[f64], opts: &NelderMeadOptions) -> Minimum
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    assert!(n > 0 && scale.len() == n, "dimension mismatch");
    let mut evaluations = 0;
    let mut eval = |x: &[f64], count: &mut usize| {
        *count += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(x0.to_vec());
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += scale[i];
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| eval(v, &mut evaluations)).collect();
    let mut trace = Vec::new();
    let mut iteration = 0;
    let mut converged = false;

    loop {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();
        trace.push(TraceRow {
            iteration,
            evaluations,
            best: values[0],
        });

        let f_spread = values[n] - values[0];
        let x_spread = simplex[1..]
            .iter()
            .flat_map(|v| v.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if f_spread <= opts.f_tol && x_spread <= opts.x_tol {
            converged = true;
            break;
        }
        if evaluations >= opts.max_eval {
            break;
        }
        iteration += 1;

        let centroid: Vec<f64> = (0..n)
            .map(|k| simplex[..n].iter().map(|v| v[k]).sum::<f64>() / n as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[n])
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };
        let xr = along(opts.reflection);
        let fr = eval(&xr, &mut evaluations);
        if fr < values[0] {
            let xe = along(opts.reflection * opts.expansion);
            let fe = eval(&xe, &mut evaluations);
            if fe < fr {
                simplex[n] = xe;
                values[n] = fe;
            } else {
                simplex[n] = xr;
                values[n] = fr;
            }
            continue;
        }
        if fr < values[n - 1] {
            simplex[n] = xr;
            values[n] = fr;
            continue;
        }
        let (xc, fc) = if fr < values[n] {
            let xc = along(opts.reflection * opts.contraction);
            let fc = eval(&xc, &mut evaluations);
            (xc, fc)
        } else {
            let xc = along(-opts.contraction);
            let fc = eval(&xc, &mut evaluations);
            (xc, fc)
        };
        if fc < values[n].min(fr) {
            simplex[n] = xc;
            values[n] = fc;
            continue;
        }
        for i in 1..=n {
            let v: Vec<f64> = simplex[0]
                .iter()
                .zip(&simplex[i])
                .map(|(b, x)| b + opts.shrink * (x - b))
                .collect();
            values[i] = eval(&v, &mut evaluations);
            simplex[i] = v;
        }
    }
    Minimum {
        x: simplex[0].clone(),
        f: values[0],
        evaluations,
        converged,
        trace,
    }
}

/// Golden-section search for a minimum of `f` on `[a, b]`.
pub fn golden_section<F>(mut f: F, mut a: f64, mut b: f64, x_tol: f64) -> (f64, f64, usize)
where
    F: FnMut(f64) -> f64,
{
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    let mut evals = 2;
    while (b - a).abs() > x_tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
        evals += 1;
    }
    if fc < fd {
        (c, fc, evals)
    } else {
        (d, fd, evals)
    }
}

/// Outcome of optimising one run-time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptResult {
    pub params: AnsatzParams,
    /// Internal energy units.
    pub cost: f64,
    pub cost_quanta: f64,
    pub evaluations: usize,
    pub converged: bool,
    pub penalized: bool,
    pub max_beta_ratio: f64,
    pub trace: Vec<TraceRow>,
}

/// Multi-start threshold, in quanta. The simplex works on costs in quanta, so
/// its tolerances are independent of the trap scale.
pub const RESTART_QUANTA: f64 = 1e-3;

/// Half-width (in steps) and step of the fallback line scan in `A`.
const SCAN_POINTS: i32 = 80;
const SCAN_STEP: f64 = 0.1;

fn to_params(x: &[f64], fixed_b: f64, t_f: f64) -> AnsatzParams {
    match x {
        [a] => AnsatzParams::new(*a, fixed_b, t_f),
        [a, b, ..] => AnsatzParams::new(*a, b * B_UNIT, t_f),
        [] => AnsatzParams::new(0.0, fixed_b, t_f),
    }
}

/// Optimises the ansatz for run-time `t_f`, starting from `warm_start` if given.
///
/// Without a warm start, one-parameter costs start from `A = B = 0` and
/// two-parameter costs from the one-parameter optimum of the same cost.
/// See [`optimize_seeded`] for the restart rules.
pub fn optimize_runtime(
    design: &DesignBoundary,
    t_f: f64,
    spec: &CostSpec,
    warm_start: Option<AnsatzParams>,
    nm: &NelderMeadOptions,
) -> Result<OptResult> {
    optimize_seeded(design, t_f, spec, warm_start.as_slice(), nm)
}

/// Optimises the ansatz for run-time `t_f` from the first of `seeds`.
///
/// If the result is worse than [`RESTART_QUANTA`], the simplex is restarted from
/// the best point and from the best point shifted by plus and minus the initial
/// simplex step. If that still fails, the remaining seeds are tried in turn,
/// followed by the cold start (two-parameter costs) or a coarse scan along `A`
/// (one-parameter costs). The best of all runs is kept.
pub fn optimize_seeded(
    design: &DesignBoundary,
    t_f: f64,
    spec: &CostSpec,
    seeds: &[AnsatzParams],
    nm: &NelderMeadOptions,
) -> Result<OptResult> {
    if !(spec.n_params == 1 || spec.n_params == 2) {
        return Err(Error::Config(format!(
            "a cost needs one or two free parameters, got {}",
            spec.n_params
        )));
    }
    if spec.eta_design < 0.0 {
        return Err(Error::Config(
            "the design perturbation must be non-negative".into(),
        ));
    }
    let cold = || -> Result<AnsatzParams> {
        if spec.n_params == 2 {
            Ok(optimize_seeded(design, t_f, &spec.with_params(1), &[], nm)?.params)
        } else {
            Ok(AnsatzParams::new(0.0, 0.0, t_f))
        }
    };
    let seed = match seeds.first() {
        Some(p) => *p,
        None => cold()?,
    };
    let fixed_b = if spec.n_params == 1 { seed.b } else { 0.0 };
    let encode = |p: &AnsatzParams| -> Vec<f64> {
        if spec.n_params == 1 {
            vec![p.a]
        } else {
            vec![p.a, p.b / B_UNIT]
        }
    };
    let quantum = design.quantum();
    let mut failure = None;
    let mut objective = |x: &[f64]| match evaluate_cost(spec, to_params(x, fixed_b, t_f), design) {
        Ok(v) => v.cost / quantum,
        Err(e) => {
            failure.get_or_insert(e);
            f64::INFINITY
        }
    };
    let x0 = encode(&seed);
    let scale = simplex_scale(&x0);
    let mut best = nelder_mead(&mut objective, &x0, &scale, nm);
    let mut evaluations = best.evaluations;
    let run_from = |start: &[f64],
                    step: &[f64],
                    best: &mut Minimum,
                    evaluations: &mut usize,
                    f: &mut dyn FnMut(&[f64]) -> f64| {
        let run = nelder_mead(f, start, step, nm);
        *evaluations += run.evaluations;
        if run.f < best.f {
            *best = run;
        }
    };
    if best.f > RESTART_QUANTA {
        let center = best.x.clone();
        let starts = [
            center.clone(),
            center
                .iter()
                .zip(&scale)
                .map(|(c, s)| c + s)
                .collect::<Vec<_>>(),
            center
                .iter()
                .zip(&scale)
                .map(|(c, s)| c - s)
                .collect::<Vec<_>>(),
        ];
        for start in starts {
            run_from(
                &start,
                &simplex_scale(&start),
                &mut best,
                &mut evaluations,
                &mut objective,
            );
            if best.f <= RESTART_QUANTA {
                break;
            }
        }
    }
    if best.f > RESTART_QUANTA {
        let mut extra: Vec<Vec<f64>> = seeds.iter().skip(1).map(encode).collect();
        if spec.n_params == 2 && !seeds.is_empty() {
            extra.push(encode(&cold()?));
        }
        for start in extra {
            run_from(
                &start,
                &simplex_scale(&start),
                &mut best,
                &mut evaluations,
                &mut objective,
            );
            if best.f <= RESTART_QUANTA {
                break;
            }
        }
    }
    if best.f > RESTART_QUANTA && spec.n_params == 1 {
        // The one-parameter cost oscillates in A: look for other basins on a
        // coarse line through the best point and polish the three deepest.
        let center = best.x[0];
        let line: Vec<(f64, f64)> = (-SCAN_POINTS..=SCAN_POINTS)
            .map(|k| {
                let a = center + SCAN_STEP * k as f64;
                (a, objective(&[a]))
            })
            .collect();
        evaluations += line.len();
        let mut minima: Vec<(f64, f64)> = line
            .windows(3)
            .filter(|w| w[1].1 <= w[0].1 && w[1].1 <= w[2].1 && w[1].1.is_finite())
            .map(|w| w[1])
            .collect();
        minima.sort_by(|a, b| a.1.total_cmp(&b.1));
        for &(a, _) in minima.iter().take(3) {
            run_from(
                &[a],
                &[SCAN_STEP],
                &mut best,
                &mut evaluations,
                &mut objective,
            );
            if best.f <= RESTART_QUANTA {
                break;
            }
        }
    }
    if let Some(e) = failure {
        return Err(e);
    }
    let params = to_params(&best.x, fixed_b, t_f);
    let value = evaluate_cost(spec, params, design)?;
    Ok(OptResult {
        params,
        cost: value.cost,
        cost_quanta: value.cost / quantum,
        evaluations,
        converged: best.converged,
        penalized: value.penalized,
        max_beta_ratio: value.max_beta_ratio,
        trace: best.trace,
    })
}

/// Number of earlier chain results offered as fallback seeds.
pub const CHAIN_MEMORY: usize = 4;

/// Optimises every run-time in `grid`, walking from the longest to the shortest.
///
/// Each optimisation starts from its longer neighbour and falls back on the
/// [`CHAIN_MEMORY`] results before that.
pub fn optimize_chain(
    design: &DesignBoundary,
    grid: &[f64],
    spec: &CostSpec,
    nm: &NelderMeadOptions,
) -> Vec<Result<OptResult>> {
    optimize_chain_with(grid, |t_f, seeds| {
        optimize_seeded(design, t_f, spec, seeds, nm)
    })
}

/// [`optimize_chain`] with a caller-supplied per-point optimiser, e.g. one that
/// consults a result cache.
pub fn optimize_chain_with<F>(grid: &[f64], mut optimize: F) -> Vec<Result<OptResult>>
where
    F: FnMut(f64, &[AnsatzParams]) -> Result<OptResult>,
{
    let mut order: Vec<usize> = (0..grid.len()).collect();
    order.sort_by(|&i, &j| grid[j].total_cmp(&grid[i]));
    let mut results: Vec<Option<Result<OptResult>>> = (0..grid.len()).map(|_| None).collect();
    let mut history: Vec<AnsatzParams> = Vec::new();
    for i in order {
        let seeds: Vec<AnsatzParams> = history
            .iter()
            .rev()
            .take(CHAIN_MEMORY + 1)
            .map(|p| AnsatzParams { t_f: grid[i], ..*p })
            .collect();
        let r = optimize(grid[i], &seeds);
        if let Ok(res) = &r {
            if !res.penalized {
                history.push(res.params);
            }
        }
        results[i] = Some(r);
    }
    results
        .into_iter()
        .map(|r| r.expect("every grid point is visited"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_1d() {
        let m = nelder_mead(
            |x| (x[0] - 3.0).powi(2),
            &[0.0],
            &[1.0],
            &NelderMeadOptions::default(),
        );
        assert!(m.converged);
        assert!((m.x[0] - 3.0).abs() < 1e-6);
    }

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64]| 100.0 * (x[1] - x[0] * x[0]).powi(2) + (1.0 - x[0]).powi(2);
        let opts = NelderMeadOptions {
            max_eval: 5000,
            ..NelderMeadOptions::default()
        };
        let m = nelder_mead(f, &[-1.2, 1.0], &simplex_scale(&[-1.2, 1.0]), &opts);
        assert!(
            (m.x[0] - 1.0).abs() < 1e-4 && (m.x[1] - 1.0).abs() < 1e-4,
            "{:?}",
            m.x
        );
    }

    #[test]
    fn deterministic() {
        let f = |x: &[f64]| (x[0] - 1.0).powi(2) + 3.0 * (x[1] + 2.0).powi(4) + x[0] * x[1];
        let a = nelder_mead(f, &[0.3, 0.1], &[0.1, 0.1], &NelderMeadOptions::default());
        let b = nelder_mead(f, &[0.3, 0.1], &[0.1, 0.1], &NelderMeadOptions::default());
        assert_eq!(a, b);
    }

    #[test]
    fn evaluation_budget() {
        let opts = NelderMeadOptions {
            max_eval: 20,
            ..NelderMeadOptions::default()
        };
        let m = nelder_mead(|x| (x[0] - 1e3).powi(2), &[0.0], &[1e-3], &opts);
        assert!(!m.converged);
        assert!(m.evaluations <= 22);
    }

    #[test]
    fn golden_section_quadratic() {
        // A smooth minimum is only resolved to about sqrt(eps).
        let (x, _, _) = golden_section(|x| (x - 0.7).powi(2) + 1.0, -2.0, 3.0, 1e-9);
        assert!((x - 0.7).abs() < 1e-7);
        let (x, _, _) = golden_section(|x| (x - 0.7).abs(), -2.0, 3.0, 1e-9);
        assert!((x - 0.7).abs() < 2e-9);
    }

    #[test]
    fn simplex_scale_rule() {
        assert_eq!(simplex_scale(&[0.0, 5.0, -2.0]), vec![1.0, 0.5, 0.2]);
    }

    #[test]
    fn compression_preserves_order() {
        let p = 1e6;
        let xs = [0.0, 1e-6, 1.0, 1e3, 1e7, 1e12];
        for w in xs.windows(2) {
            assert!(compress(w[0], p) < compress(w[1], p));
        }
        assert!(compress(1e300, p) <= p);
        // Relative distortion c/P.
        assert!((compress(1e-3, p) / 1e-3 - 1.0).abs() <= 1.01e-9);
    }

    #[test]
    fn cost_kind_names() {
        for k in [
            CostKind::ApproxNonRobust,
            CostKind::ExactNonRobust,
            CostKind::ApproxRobust,
            CostKind::ExactRobust,
        ] {
            assert_eq!(k.name().parse::<CostKind>().unwrap(), k);
        }
        assert!("bogus".parse::<CostKind>().is_err());
    }
}
