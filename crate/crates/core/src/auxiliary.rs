//! Auxiliary oscillators of the invariant construction and the mode-energy
//! terms they contribute at the end of a protocol.
//!
//! Stretch mode: `q̈₊ + Ω₊²q₊ = −√(m/2)·d̈`. Under a homogeneous stray field the
//! centre-of-mass mode picks up a drive proportional to
//! `Δ = 3βd⁴s̃/C`, with `s̃ = −η·d_in`: `q̈₋ + Ω₋²q₋ = −√(m/2)·d̈·Δ`.
//! Both start from rest; their energy at `t_f` is the part of the final mode
//! energy that the protocol fails to return to the ground state.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::{self, OdeOptions};
use crate::protocol::Protocol;

/// Final state of an auxiliary oscillator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuxiliarySolution {
    pub q: f64,
    pub q_dot: f64,
    /// `½q̇² + ½Ω²(q + drive/Ω²)²` at `t_f`.
    pub energy: f64,
}

/// Largest accepted stray-field parameter for the first-order treatment.
pub const ETA_LIMIT: f64 = 0.2;

fn equal_mass(protocol: &Protocol) -> Result<f64> {
    let [m1, m2] = protocol.design().masses();
    if m1 != m2 {
        return Err(Error::Domain(
            "the auxiliary-function costs are defined for equal masses".into(),
        ));
    }
    Ok(m1)
}

/// Integrates the stretch-mode auxiliary equation over the whole protocol.
pub fn solve_q_plus(protocol: &Protocol, opts: &OdeOptions) -> Result<AuxiliarySolution> {
    let m = equal_mass(protocol)?;
    let k = (m / 2.0).sqrt();
    let rhs = |t: f64, y: &[f64; 2]| {
        [
            y[1],
            -protocol.omega_plus_sq(t) * y[0] - k * protocol.d_ddot(t),
        ]
    };
    let (y, _) = ode::solve(rhs, 0.0, [0.0, 0.0], protocol.t_f(), *opts)?;
    let tf = protocol.t_f();
    let w2 = protocol.omega_plus_sq(tf);
    let shifted = y[0] + k * protocol.d_ddot(tf) / w2;
    Ok(AuxiliarySolution {
        q: y[0],
        q_dot: y[1],
        energy: 0.5 * y[1] * y[1] + 0.5 * w2 * shifted * shifted,
    })
}

/// Equilibrium shift `s̃ = −η·d_in` of the centre of mass under a stray field.
pub fn stray_shift(protocol: &Protocol, eta: f64) -> f64 {
    -eta * protocol.design().constraints.d_in
}

fn check_eta(eta: f64) -> Result<()> {
    if !eta.is_finite() || eta.abs() > ETA_LIMIT {
        return Err(Error::Domain(format!(
            "perturbation parameter {eta} is outside the first-order range |eta| <= {ETA_LIMIT}"
        )));
    }
    if eta.abs() > 0.1 {
        log::warn!("perturbation parameter {eta} is large for a first-order treatment");
    }
    Ok(())
}

/// Integrates the perturbed centre-of-mass auxiliary equation.
pub fn perturbed_aux(
    protocol: &Protocol,
    eta: f64,
    opts: &OdeOptions,
) -> Result<AuxiliarySolution> {
    check_eta(eta)?;
    let m = equal_mass(protocol)?;
    if eta == 0.0 {
        return Ok(AuxiliarySolution {
            q: 0.0,
            q_dot: 0.0,
            energy: 0.0,
        });
    }
    let k = (m / 2.0).sqrt();
    let shift = stray_shift(protocol, eta);
    let cc = protocol.design().consts.coulomb;
    let w2 = protocol.omega_minus_sq();
    let mut failure = None;
    let rhs = |t: f64, y: &[f64; 2]| {
        let drive = match protocol.point(t) {
            Ok(p) => k * p.d_ddot * 3.0 * p.beta * p.d.powi(4) * shift / cc,
            Err(e) => {
                failure.get_or_insert(e);
                f64::NAN
            }
        };
        [y[1], -w2 * y[0] - drive]
    };
    let result = ode::solve(rhs, 0.0, [0.0, 0.0], protocol.t_f(), *opts);
    if let Some(e) = failure {
        return Err(e);
    }
    let (y, _) = result?;
    // d̈(t_f) = 0, so the drive term drops out of the final energy.
    Ok(AuxiliarySolution {
        q: y[0],
        q_dot: y[1],
        energy: 0.5 * y[1] * y[1] + 0.5 * w2 * y[0] * y[0],
    })
}

/// First-order curvature mismatch `δω = ω̃₂ − ω̃₁ = 12βds̃/(mω_i)` at time `t`.
pub fn frequency_mismatch(protocol: &Protocol, eta: f64, t: f64) -> Result<f64> {
    let m = equal_mass(protocol)?;
    let p = protocol.point(t)?;
    let cc = protocol.design().consts.coulomb;
    let omega_i = ((2.0 * p.beta * p.d * p.d + 4.0 * cc / p.d.powi(3)) / m).sqrt();
    Ok(12.0 * p.beta * p.d * stray_shift(protocol, eta) / (m * omega_i))
}

/// `E_q⁽⁺⁾(t_f) + Ẽ_q⁽⁻⁾(t_f, η)`.
pub fn aux_energy(protocol: &Protocol, eta: f64, opts: &OdeOptions) -> Result<f64> {
    let plus = solve_q_plus(protocol, opts)?.energy;
    let minus = if eta == 0.0 {
        0.0
    } else {
        perturbed_aux(protocol, eta, opts)?.energy
    };
    Ok(plus + minus)
}
