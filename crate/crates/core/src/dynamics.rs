//! Classical two-ion dynamics in a time-dependent quartic double well.
//!
//! `H = Σ pᵢ²/2mᵢ + Σ V(xᵢ, t) + C/(x₂ − x₁)` with `V = (γ + γ_s)x + αx² + βx⁴`,
//! where `γ_s` is a constant stray force. The excess energy of each ion at the end
//! of a protocol is measured against the equilibrium of the final potential, with
//! the Coulomb term linearised about that equilibrium so that the energy can be
//! attributed to the individual ions.

use serde::{Deserialize, Serialize};

use crate::design::equilibrium_distance;
use crate::error::{Error, Result};
use crate::ode::{Dop853, OdeError, OdeOptions};
use crate::protocol::{Coefficients, Protocol, TrapPotential};
use crate::units::PhysConstants;

/// Phase-space point of the two ions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IonState {
    pub t: f64,
    pub x1: f64,
    pub x2: f64,
    pub p1: f64,
    pub p2: f64,
}

impl IonState {
    fn to_array(self) -> [f64; 4] {
        [self.x1, self.x2, self.p1, self.p2]
    }

    fn from_array(t: f64, y: &[f64; 4]) -> Self {
        Self {
            t,
            x1: y[0],
            x2: y[1],
            p1: y[2],
            p2: y[3],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub rtol: f64,
    pub atol: f64,
    pub max_step: f64,
    /// Stray-field parameter; constant over the protocol.
    pub eta: f64,
    /// Initial motional energy of each ion.
    pub e_in: [f64; 2],
    /// Motional phase: 0 puts all initial energy into momentum.
    pub phi: f64,
    /// Number of evenly spaced trajectory samples to record (0 for none).
    pub record: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
            max_step: f64::INFINITY,
            eta: 0.0,
            e_in: [0.0, 0.0],
            phi: 0.0,
            record: 0,
        }
    }
}

impl SimConfig {
    pub fn ode_options(&self) -> OdeOptions {
        OdeOptions {
            rtol: self.rtol,
            atol: self.atol,
            max_step: self.max_step,
            ..OdeOptions::default()
        }
    }
}

/// One row of a recorded trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub state: IonState,
    pub e_ex: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimOutcome {
    /// Excess energies of ion 1 and ion 2 at the final time.
    pub e_ex: [f64; 2],
    pub final_state: IonState,
    pub trajectory: Vec<TrajectorySample>,
    pub evaluations: usize,
}

fn total_coefficients(c: Coefficients, stray: f64) -> Coefficients {
    Coefficients {
        gamma: c.gamma + stray,
        ..c
    }
}

fn gradient(c: &Coefficients, cc: f64, x1: f64, x2: f64) -> [f64; 2] {
    let r = x2 - x1;
    let coul = cc / (r * r);
    [-c.force(x1) + coul, -c.force(x2) - coul]
}

/// Equilibrium positions of two ions in `c`, by Newton iteration from `seed`.
pub fn exact_equilibria_from(
    c: &Coefficients,
    consts: &PhysConstants,
    seed: (f64, f64),
) -> Result<(f64, f64)> {
    let cc = consts.coulomb;
    let (mut x1, mut x2) = seed;
    let mut g = gradient(c, cc, x1, x2);
    let norm = |g: &[f64; 2]| g[0].hypot(g[1]);
    for _ in 0..100 {
        if norm(&g) < 1e-12 {
            return Ok((x1, x2));
        }
        let r = x2 - x1;
        let k = 2.0 * cc / r.powi(3);
        let (h11, h22, h12) = (c.curvature(x1) + k, c.curvature(x2) + k, -k);
        let det = h11 * h22 - h12 * h12;
        if !(det > 0.0) {
            return Err(Error::Equilibrium(format!(
                "Hessian is not positive definite at ({x1}, {x2})"
            )));
        }
        let dx1 = (h22 * g[0] - h12 * g[1]) / det;
        let dx2 = (h11 * g[1] - h12 * g[0]) / det;
        // Backtrack if the full step does not reduce the gradient or reorders the ions.
        let mut lambda = 1.0;
        loop {
            let (n1, n2) = (x1 - lambda * dx1, x2 - lambda * dx2);
            let gn = gradient(c, cc, n1, n2);
            if n2 > n1 && norm(&gn) < norm(&g) {
                x1 = n1;
                x2 = n2;
                g = gn;
                break;
            }
            lambda *= 0.5;
            if lambda < 1e-6 {
                // No further progress is possible in floating point.
                if norm(&g) < 1e-9 * (cc / (r * r)) {
                    return Ok((x1, x2));
                }
                return Err(Error::Equilibrium(format!(
                    "Newton iteration stalled with gradient norm {}",
                    norm(&g)
                )));
            }
        }
    }
    if norm(&g) < 1e-9 * cc / (x2 - x1).powi(2) {
        return Ok((x1, x2));
    }
    Err(Error::Equilibrium(
        "Newton iteration did not converge".into(),
    ))
}

/// Equilibrium positions of two ions in `c`, seeded from the symmetric solution
/// shifted by the first-order response to `γ`.
pub fn exact_equilibria(c: &Coefficients, consts: &PhysConstants) -> Result<(f64, f64)> {
    let d = equilibrium_distance(c.alpha, c.beta, consts)?;
    let shift = -c.gamma / (2.0 * c.alpha + 3.0 * c.beta * d * d);
    exact_equilibria_from(c, consts, (shift - d / 2.0, shift + d / 2.0))
}

/// Local curvatures `mᵢω̃ᵢ²` of each ion at the equilibrium `(x1, x2)`.
pub fn local_stiffness(c: &Coefficients, consts: &PhysConstants, x1: f64, x2: f64) -> [f64; 2] {
    let k = 2.0 * consts.coulomb / (x2 - x1).powi(3);
    [c.curvature(x1) + k, c.curvature(x2) + k]
}

/// Total energy of the two-ion system.
pub fn total_energy(
    state: &IonState,
    c: &Coefficients,
    masses: [f64; 2],
    consts: &PhysConstants,
) -> f64 {
    state.p1 * state.p1 / (2.0 * masses[0])
        + state.p2 * state.p2 / (2.0 * masses[1])
        + c.energy(state.x1)
        + c.energy(state.x2)
        + consts.coulomb / (state.x2 - state.x1)
}

/// Excess energy of ion `ion` (0 or 1) with respect to the equilibrium
/// `(x1⁰, x2⁰)` of `c`, with the Coulomb interaction linearised about it.
pub fn excess_energy(
    state: &IonState,
    c: &Coefficients,
    equilibria: (f64, f64),
    masses: [f64; 2],
    consts: &PhysConstants,
    ion: usize,
) -> f64 {
    let (x0, x, p, sign) = match ion {
        0 => (equilibria.0, state.x1, state.p1, -1.0),
        _ => (equilibria.1, state.x2, state.p2, 1.0),
    };
    let d = equilibria.1 - equilibria.0;
    let delta = x - x0;
    // V(x) − V(x⁰) expanded exactly about x⁰ to avoid cancelling large terms.
    let linear = -c.force(x0) - sign * consts.coulomb / (d * d);
    let quad =
        delta * delta * (c.alpha + c.beta * (6.0 * x0 * x0 + 4.0 * x0 * delta + delta * delta));
    p * p / (2.0 * masses[ion.min(1)]) + linear * delta + quad
}

/// Places the ions at the exact equilibrium of the potential at `t` (including
/// the stray force) and adds the requested motional energy to each.
pub fn prepare_state_in<P: TrapPotential + ?Sized>(
    potential: &P,
    stray: f64,
    t: f64,
    e_in: [f64; 2],
    phi: f64,
) -> Result<IonState> {
    if e_in.iter().any(|e| !(*e >= 0.0)) {
        return Err(Error::Domain(
            "initial energies must be non-negative".into(),
        ));
    }
    let consts = potential.consts();
    let masses = potential.masses();
    let c = total_coefficients(potential.coefficients(t), stray);
    let (x1, x2) = exact_equilibria(&c, consts)?;
    let stiffness = local_stiffness(&c, consts, x1, x2);
    let mut state = IonState {
        t,
        x1,
        x2,
        p1: 0.0,
        p2: 0.0,
    };
    let (s, co) = phi.sin_cos();
    for ion in 0..2 {
        let e = e_in[ion];
        if e == 0.0 {
            continue;
        }
        let dx = (2.0 * e / stiffness[ion]).sqrt() * s;
        let p = (2.0 * masses[ion] * e).sqrt() * co;
        if ion == 0 {
            state.x1 += dx;
            state.p1 = p;
        } else {
            state.x2 += dx;
            state.p2 = p;
        }
    }
    Ok(state)
}

/// Initial state for `protocol` under stray-field parameter `eta`.
pub fn prepare_state(protocol: &Protocol, eta: f64, e_in: [f64; 2], phi: f64) -> Result<IonState> {
    prepare_state_in(protocol, stray_force(protocol, eta)?, 0.0, e_in, phi)
}

/// Stray force `γ_s = η·m·Ω₋²·d_in`.
pub fn stray_force(protocol: &Protocol, eta: f64) -> Result<f64> {
    if eta == 0.0 {
        return Ok(0.0);
    }
    if !protocol.design().is_equal_mass() {
        return Err(Error::Domain(
            "stray-field perturbations are only defined for equal masses".into(),
        ));
    }
    Ok(protocol.design().stray_force(eta))
}

/// Integrates the equations of motion from `state0` to `t_end`.
pub fn integrate<P: TrapPotential + ?Sized>(
    potential: &P,
    stray: f64,
    state0: IonState,
    t_end: f64,
    cfg: &SimConfig,
) -> Result<SimOutcome> {
    let consts = *potential.consts();
    let cc = consts.coulomb;
    let masses = potential.masses();
    let rhs = |t: f64, y: &[f64; 4]| {
        let c = potential.coefficients(t);
        let r = y[1] - y[0];
        let coul = cc / (r * r);
        let g = c.gamma + stray;
        let f1 = -(g + 2.0 * c.alpha * y[0] + 4.0 * c.beta * y[0] * y[0] * y[0]) - coul;
        let f2 = -(g + 2.0 * c.alpha * y[1] + 4.0 * c.beta * y[1] * y[1] * y[1]) + coul;
        [y[2] / masses[0], y[3] / masses[1], f1, f2]
    };
    let mut stepper = Dop853::new(rhs, state0.t, state0.to_array(), cfg.ode_options())?;
    let order_check = |t: f64, y: &[f64; 4]| {
        if y[1] > y[0] {
            Ok(())
        } else {
            Err(OdeError::NonFinite { t })
        }
    };
    let map_err = |e: OdeError, y: &[f64; 4]| match e {
        OdeError::NonFinite { t } if !(y[1] > y[0]) => Error::IonOrder {
            t,
            x1: y[0],
            x2: y[1],
        },
        e => Error::Ode(e),
    };

    let mut trajectory = Vec::new();
    let sample_energy = |s: &IonState, seed: &mut Option<(f64, f64)>| -> Result<[f64; 2]> {
        let c = total_coefficients(potential.coefficients(s.t), stray);
        let eq = match *seed {
            Some(prev) => exact_equilibria_from(&c, &consts, prev)
                .or_else(|_| exact_equilibria(&c, &consts))?,
            None => exact_equilibria(&c, &consts)?,
        };
        *seed = Some(eq);
        Ok([
            excess_energy(s, &c, eq, masses, &consts, 0),
            excess_energy(s, &c, eq, masses, &consts, 1),
        ])
    };
    let mut seed = None;
    if cfg.record >= 2 {
        let n = cfg.record;
        trajectory.reserve(n);
        trajectory.push(TrajectorySample {
            state: state0,
            e_ex: sample_energy(&state0, &mut seed)?,
        });
        for k in 1..n {
            let t = state0.t + (t_end - state0.t) * k as f64 / (n - 1) as f64;
            if let Err(e) = stepper.advance_with(t, order_check) {
                return Err(map_err(e, stepper.y()));
            }
            let s = IonState::from_array(stepper.t(), stepper.y());
            trajectory.push(TrajectorySample {
                state: s,
                e_ex: sample_energy(&s, &mut seed)?,
            });
        }
    } else if let Err(e) = stepper.advance_with(t_end, order_check) {
        return Err(map_err(e, stepper.y()));
    }
    let final_state = IonState::from_array(stepper.t(), stepper.y());
    let e_ex = match trajectory.last() {
        Some(last) => last.e_ex,
        None => sample_energy(&final_state, &mut seed)?,
    };
    Ok(SimOutcome {
        e_ex,
        final_state,
        trajectory,
        evaluations: stepper.stats().evaluations,
    })
}

/// Position of the barrier between the two wells of `γx + αx² + βx⁴`, if the
/// single-ion potential has two wells.
pub fn barrier_position(c: &Coefficients) -> Option<f64> {
    if !(c.alpha < 0.0 && c.beta > 0.0) {
        return None;
    }
    let xc = (-c.alpha / (6.0 * c.beta)).sqrt();
    let slope = |x: f64| 4.0 * c.beta * x * x * x + 2.0 * c.alpha * x + c.gamma;
    if !(slope(-xc) > 0.0 && slope(xc) < 0.0) {
        return None;
    }
    // The slope falls monotonically between its turning points.
    let (mut lo, mut hi) = (-xc, xc);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if slope(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Prepares the initial state and runs the whole protocol.
///
/// A run that ends with both ions on the same side of the barrier is a well
/// collapse; excess energies about the target wells mean nothing there.
pub fn simulate(protocol: &Protocol, cfg: &SimConfig) -> Result<SimOutcome> {
    let stray = stray_force(protocol, cfg.eta)?;
    let state0 = prepare_state_in(protocol, stray, 0.0, cfg.e_in, cfg.phi)?;
    let out = integrate(protocol, stray, state0, protocol.t_f(), cfg)?;
    let c = total_coefficients(protocol.coefficients(protocol.t_f()), stray);
    if let Some(b) = barrier_position(&c) {
        let s = &out.final_state;
        if !(s.x1 < b && b < s.x2) {
            return Err(Error::WellCollapse(format!(
                "ions end at x1 = {:.3} um, x2 = {:.3} um with the barrier at {b:.3} um",
                s.x1, s.x2
            )));
        }
    }
    Ok(out)
}

/// Excess energies averaged over `n_phases` evenly spaced initial motional phases.
pub fn phase_averaged_energy(
    protocol: &Protocol,
    cfg: &SimConfig,
    n_phases: usize,
) -> Result<[f64; 2]> {
    Ok(phase_resolved_energy(protocol, cfg, n_phases)?.mean)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseScan {
    pub phases: Vec<f64>,
    pub e_ex: Vec<[f64; 2]>,
    pub mean: [f64; 2],
}

/// Excess energies for each of `n_phases` initial motional phases and their mean.
pub fn phase_resolved_energy(
    protocol: &Protocol,
    cfg: &SimConfig,
    n_phases: usize,
) -> Result<PhaseScan> {
    if n_phases == 0 {
        return Err(Error::Domain(
            "at least one motional phase is needed".into(),
        ));
    }
    // Without initial energy the phase has no effect.
    let n = if cfg.e_in == [0.0, 0.0] { 1 } else { n_phases };
    let mut phases = Vec::with_capacity(n);
    let mut e_ex = Vec::with_capacity(n);
    let mut sum = [0.0; 2];
    for k in 0..n {
        let phi = 2.0 * std::f64::consts::PI * k as f64 / n_phases as f64;
        let out = simulate(
            protocol,
            &SimConfig {
                phi,
                record: 0,
                ..*cfg
            },
        )?;
        sum[0] += out.e_ex[0];
        sum[1] += out.e_ex[1];
        phases.push(phi);
        e_ex.push(out.e_ex);
    }
    Ok(PhaseScan {
        phases,
        e_ex,
        mean: [sum[0] / n as f64, sum[1] / n as f64],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::{solve_boundaries, DesignBoundary, PhysicalConstraints};
    use crate::protocol::{AnsatzParams, StaticPotential};

    fn design() -> DesignBoundary {
        let c = PhysConstants::codata();
        solve_boundaries(&PhysicalConstraints::reference(&c), &c).unwrap()
    }

    fn outer(d: &DesignBoundary) -> StaticPotential {
        StaticPotential {
            coefficients: Coefficients {
                alpha: d.alpha_out,
                beta: d.beta_out,
                gamma: 0.0,
            },
            masses: d.masses(),
            consts: d.consts,
        }
    }

    #[test]
    fn barrier_sits_between_wells() {
        let d = design();
        let mut c = outer(&d).coefficients;
        assert!(barrier_position(&c).unwrap().abs() < 1e-12);
        c.gamma = 0.1 * d.alpha_out.abs() * d.constraints.d0;
        let b = barrier_position(&c).unwrap();
        assert!((4.0 * c.beta * b.powi(3) + 2.0 * c.alpha * b + c.gamma).abs() < 1e-9 * c.gamma);
        assert!(b > 0.0);
        c.alpha = 1.0;
        assert_eq!(barrier_position(&c), None);
    }

    #[test]
    fn violent_unequal_transport_collapses() {
        let c = PhysConstants::codata();
        let pc = crate::unequal::with_mass_ratio(&PhysicalConstraints::reference(&c), 2.0).unwrap();
        let d = crate::unequal::solve_boundaries_unequal(&pc, &c).unwrap();
        let p = Protocol::new(&d, AnsatzParams::new(4.3368, 0.0, 6.0)).unwrap();
        let err = simulate(&p, &SimConfig::default()).unwrap_err();
        assert!(matches!(err, Error::WellCollapse(_)), "{err}");
    }

    #[test]
    fn symmetric_equilibria() {
        let d = design();
        let pot = outer(&d);
        let (x1, x2) = exact_equilibria(&pot.coefficients, &d.consts).unwrap();
        assert!((x1 + x2).abs() < 1e-12);
        assert!((x2 - x1 - d.constraints.d0).abs() < 1e-10 * d.constraints.d0);
        let g = gradient(&pot.coefficients, d.consts.coulomb, x1, x2);
        assert!(g[0].abs() < 1e-12 && g[1].abs() < 1e-12, "{g:?}");
    }

    #[test]
    fn stray_field_shift() {
        let d = design();
        let mut c = outer(&d).coefficients;
        for eta in [0.005, 0.01, 0.02] {
            c.gamma = d.stray_force(eta);
            let (x1, x2) = exact_equilibria(&c, &d.consts).unwrap();
            let expected = -c.gamma / (d.constraints.m1 * d.omega_minus_sq);
            let mid = 0.5 * (x1 + x2);
            assert!(
                (mid - expected).abs() < 0.05 * expected.abs(),
                "{mid} vs {expected}"
            );
        }
    }

    #[test]
    fn at_rest_in_equilibrium_has_no_excess() {
        let d = design();
        let pot = outer(&d);
        let s = prepare_state_in(&pot, 0.0, 0.0, [0.0, 0.0], 0.0).unwrap();
        let eq = (s.x1, s.x2);
        for ion in 0..2 {
            assert_eq!(
                excess_energy(&s, &pot.coefficients, eq, pot.masses, &d.consts, ion),
                0.0
            );
        }
        let kicked = IonState { p1: 0.3, ..s };
        let e = excess_energy(&kicked, &pot.coefficients, eq, pot.masses, &d.consts, 0);
        assert!((e - 0.09 / (2.0 * d.constraints.m1)).abs() < 1e-15);
    }

    #[test]
    fn kinetic_start() {
        let d = design();
        let pot = outer(&d);
        let e = 10.0 * d.quantum();
        let s = prepare_state_in(&pot, 0.0, 0.0, [e, 0.0], 0.0).unwrap();
        let eq = exact_equilibria(&pot.coefficients, &d.consts).unwrap();
        assert_eq!(s.x1, eq.0);
        assert!((s.p1 * s.p1 / (2.0 * d.constraints.m1) - e).abs() < 1e-12 * e);
    }

    #[test]
    fn potential_start_matches_energy() {
        let d = design();
        let pot = outer(&d);
        let e = 10.0 * d.quantum();
        let s = prepare_state_in(&pot, 0.0, 0.0, [e, 0.0], std::f64::consts::FRAC_PI_2).unwrap();
        assert!(s.p1.abs() < 1e-12);
        let eq = exact_equilibria(&pot.coefficients, &d.consts).unwrap();
        let rest = IonState {
            x1: eq.0,
            x2: eq.1,
            ..s
        };
        let de = total_energy(&s, &pot.coefficients, pot.masses, &d.consts)
            - total_energy(&rest, &pot.coefficients, pot.masses, &d.consts);
        assert!((de - e).abs() < 0.02 * e, "{de} vs {e}");
    }

    #[test]
    fn static_potential_stays_at_rest() {
        let d = design();
        let pot = outer(&d);
        let s = prepare_state_in(&pot, 0.0, 0.0, [0.0, 0.0], 0.0).unwrap();
        let out = integrate(&pot, 0.0, s, 200.0 * d.cycle(), &SimConfig::default()).unwrap();
        for e in out.e_ex {
            assert!(e.abs() < 1e-10 * d.quantum(), "{e}");
        }
    }

    #[test]
    fn static_potential_conserves_energy() {
        let d = design();
        let pot = outer(&d);
        let s = prepare_state_in(&pot, 0.0, 0.0, [10.0 * d.quantum(), 0.0], 0.3).unwrap();
        let cfg = SimConfig {
            rtol: 1e-12,
            atol: 1e-13,
            ..SimConfig::default()
        };
        let out = integrate(&pot, 0.0, s, 200.0 * d.cycle(), &cfg).unwrap();
        let e0 = total_energy(&s, &pot.coefficients, pot.masses, &d.consts);
        let e1 = total_energy(&out.final_state, &pot.coefficients, pot.masses, &d.consts);
        assert!(((e1 - e0) / e0).abs() < 1e-9, "{e0} -> {e1}");
    }

    #[test]
    fn symmetric_protocol_symmetric_ions() {
        let d = design();
        let p = Protocol::new(&d, AnsatzParams::new(0.3, 0.0, 20.0)).unwrap();
        let cfg = SimConfig {
            record: 51,
            ..SimConfig::default()
        };
        let out = simulate(&p, &cfg).unwrap();
        assert!(
            (out.e_ex[0] - out.e_ex[1]).abs() <= 1e-9 * out.e_ex[0].abs().max(1e-12 * d.quantum())
        );
        for row in &out.trajectory {
            assert!((row.state.x1 + row.state.x2).abs() < 1e-9);
        }
    }

    #[test]
    fn ground_state_is_phase_independent() {
        let d = design();
        let p = Protocol::new(&d, AnsatzParams::new(0.3, 0.0, 20.0)).unwrap();
        let cfg = SimConfig::default();
        let single = simulate(&p, &cfg).unwrap().e_ex;
        assert_eq!(phase_averaged_energy(&p, &cfg, 25).unwrap(), single);
    }
}
