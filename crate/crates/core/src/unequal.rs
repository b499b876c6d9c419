//! Protocols for two ions of different mass.
//!
//! A linear term `γ(t)x` shifts the pair off centre so that both ions see the
//! same local frequency. With `μ = √(m₁m₂)`, `M = m₁ + m₂`, `W = Ω₊² − Ω₋²` and
//! `Σ = Ω₊² + Ω₋²` the potential follows from the mode frequencies as
//!
//! ```text
//! d = ∛(4C/(μW))            β = MΣ/(8d²) − 2C/d⁵
//! s = (m₂ − m₁)Σ/(48βd)     α = C/d³ − βd²/2 − 6βs²
//! γ = −2αs − 2β(3d²s/2 + 2s³)
//! ```
//!
//! [`Protocol`] evaluates these for any masses; this module supplies the design
//! and the checks specific to the asymmetric case.

use serde::{Deserialize, Serialize};

use crate::design::{check_constraints, solve_boundaries, DesignBoundary, PhysicalConstraints};
use crate::error::{Error, Result};
use crate::optimize::{optimize_seeded, CostKind, CostSpec, NelderMeadOptions, OptResult};
use crate::protocol::{AnsatzParams, Coefficients, Protocol};
use crate::units::PhysConstants;

/// `(α, β, γ, s)` for separation `d` and mode frequencies `Ω±²`.
fn potential_from_modes(
    d: f64,
    sum: f64,
    masses: [f64; 2],
    consts: &PhysConstants,
) -> (Coefficients, f64) {
    let cc = consts.coulomb;
    let [m1, m2] = masses;
    let beta = (m1 + m2) * sum / (8.0 * d * d) - 2.0 * cc / d.powi(5);
    let s = if m1 == m2 {
        0.0
    } else {
        (m2 - m1) * sum / (48.0 * beta * d)
    };
    let alpha = cc / d.powi(3) - beta * d * d / 2.0 - 6.0 * beta * s * s;
    let gamma = -2.0 * alpha * s - 2.0 * beta * (1.5 * d * d * s + 2.0 * s.powi(3));
    (Coefficients { alpha, beta, gamma }, s)
}

/// Boundary and midpoint design for arbitrary masses.
///
/// At the midpoint the separation is `d_in` and the quartic coefficient is
/// `β_max`, which fixes both mode frequencies there. The centre-of-mass
/// frequency is kept, and the outer stretch frequency follows from `d₀`.
pub fn solve_boundaries_unequal(
    constraints: &PhysicalConstraints,
    consts: &PhysConstants,
) -> Result<DesignBoundary> {
    let d_c = check_constraints(constraints, consts)?;
    let cc = consts.coulomb;
    let masses = [constraints.m1, constraints.m2];
    let mu = (constraints.m1 * constraints.m2).sqrt();
    let big_m = constraints.m1 + constraints.m2;
    let (d0, d_in) = (constraints.d0, constraints.d_in);

    let sum_in = 8.0 * d_in * d_in * (constraints.beta_max + 2.0 * cc / d_in.powi(5)) / big_m;
    let gap_in = 4.0 * cc / (mu * d_in.powi(3));
    let omega_minus_sq = (sum_in - gap_in) / 2.0;
    let omega_in_plus_sq = (sum_in + gap_in) / 2.0;
    if !(omega_minus_sq > 0.0) {
        return Err(Error::WellCollapse(format!(
            "centre-of-mass frequency squared {omega_minus_sq} at the midpoint"
        )));
    }
    let omega0_plus_sq = omega_minus_sq + 4.0 * cc / (mu * d0.powi(3));

    let (inner, _) = potential_from_modes(d_in, sum_in, masses, consts);
    let (outer, _) = potential_from_modes(d0, omega0_plus_sq + omega_minus_sq, masses, consts);
    if !(outer.beta > 0.0) || (!(outer.alpha < 0.0) && d0 > d_in) {
        return Err(Error::Infeasible(format!(
            "outer potential is not a double well (alpha_out = {}, beta_out = {})",
            outer.alpha, outer.beta
        )));
    }
    Ok(DesignBoundary {
        constraints: *constraints,
        consts: *consts,
        d_c,
        alpha_out: outer.alpha,
        beta_out: outer.beta,
        gamma_out: outer.gamma,
        alpha_in: inner.alpha,
        beta_in: inner.beta,
        gamma_in: inner.gamma,
        omega_minus_sq,
        omega0_plus_sq,
        omega_in_plus_sq,
        // Equal local frequencies: the common diagonal of the mass-weighted Hessian.
        omega0: ((omega0_plus_sq + omega_minus_sq) / 2.0).sqrt(),
        rho_in_plus: (omega0_plus_sq / omega_in_plus_sq).powf(0.25),
    })
}

/// Design for any masses: the symmetric construction for equal masses, the
/// asymmetric one otherwise.
pub fn solve_design(
    constraints: &PhysicalConstraints,
    consts: &PhysConstants,
) -> Result<DesignBoundary> {
    if constraints.is_equal_mass() {
        solve_boundaries(constraints, consts)
    } else {
        solve_boundaries_unequal(constraints, consts)
    }
}

/// Protocol for a design of any masses.
pub fn build_unequal_protocol(design: &DesignBoundary, params: AnsatzParams) -> Result<Protocol> {
    Protocol::new(design, params)
}

/// Mass-weighted Hessian of the potential at the equilibrium `(x₁, x₂)`.
pub fn mass_weighted_hessian(
    c: &Coefficients,
    masses: [f64; 2],
    consts: &PhysConstants,
    x: [f64; 2],
) -> [[f64; 2]; 2] {
    let d = x[1] - x[0];
    let coupling = 2.0 * consts.coulomb / d.powi(3);
    let k = |xi: f64| 2.0 * c.alpha + 12.0 * c.beta * xi * xi + coupling;
    let off = -coupling / (masses[0] * masses[1]).sqrt();
    [[k(x[0]) / masses[0], off], [off, k(x[1]) / masses[1]]]
}

/// Eigenvalues of a symmetric 2×2 matrix, ascending.
pub fn symmetric_eigenvalues(m: [[f64; 2]; 2]) -> [f64; 2] {
    let mean = 0.5 * (m[0][0] + m[1][1]);
    let half_diff = 0.5 * (m[0][0] - m[1][1]);
    let r = half_diff.hypot(m[0][1]);
    [mean - r, mean + r]
}

/// Position part `A` of the normal-mode change of variables.
pub fn normal_mode_matrix(masses: [f64; 2]) -> [[f64; 2]; 2] {
    let (a, b) = (masses[0].sqrt(), masses[1].sqrt());
    let k = std::f64::consts::FRAC_1_SQRT_2;
    [[k * a, k * b], [-k * a, k * b]]
}

/// Largest entry of `MᵀJM − J` for `M = diag(A, A⁻ᵀ)`, the map taking
/// `(x, p)` to normal-mode coordinates. Zero for a canonical transformation.
pub fn symplectic_defect(a: [[f64; 2]; 2]) -> f64 {
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    // A⁻ᵀ
    let inv_t = [
        [a[1][1] / det, -a[1][0] / det],
        [-a[0][1] / det, a[0][0] / det],
    ];
    let mut m = [[0.0; 4]; 4];
    for i in 0..2 {
        for j in 0..2 {
            m[i][j] = a[i][j];
            m[i + 2][j + 2] = inv_t[i][j];
        }
    }
    let mut jm = [[0.0; 4]; 4];
    for i in 0..2 {
        for k in 0..4 {
            jm[i][k] = m[i + 2][k];
            jm[i + 2][k] = -m[i][k];
        }
    }
    let mut worst: f64 = 0.0;
    #[allow(clippy::needless_range_loop)]
    for i in 0..4 {
        for k in 0..4 {
            let mtjm: f64 = (0..4).map(|l| m[l][i] * jm[l][k]).sum();
            let j = match (i, k) {
                (0, 2) | (1, 3) => 1.0,
                (2, 0) | (3, 1) => -1.0,
                _ => 0.0,
            };
            worst = worst.max((mtjm - j).abs());
        }
    }
    worst
}

/// Checks of one sampled instant of an asymmetric protocol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeCheck {
    pub t: f64,
    /// `|K₁₁ − K₂₂|/K₁₁`.
    pub curvature_mismatch: f64,
    /// Largest relative deviation of the Hessian eigenvalues from `Ω±²`.
    pub eigenvalue_error: f64,
    /// Largest force on an ion at the built equilibrium, relative to `C/d²`.
    pub stationarity: f64,
}

/// Evaluates [`ModeCheck`] at `n` evenly spaced times.
pub fn check_modes(protocol: &Protocol, n: usize) -> Result<Vec<ModeCheck>> {
    let design = protocol.design();
    let masses = design.masses();
    let consts = &design.consts;
    let n = n.max(2);
    (0..n)
        .map(|k| {
            let t = protocol.t_f() * k as f64 / (n - 1) as f64;
            let p = protocol.point(t)?;
            let c = p.coefficients();
            let x = [p.s - p.d / 2.0, p.s + p.d / 2.0];
            let h = mass_weighted_hessian(&c, masses, consts, x);
            let ev = symmetric_eigenvalues(h);
            let wm = design.omega_minus_sq;
            let coulomb = consts.coulomb / (p.d * p.d);
            let f1 = c.force(x[0]) - coulomb;
            let f2 = c.force(x[1]) + coulomb;
            Ok(ModeCheck {
                t,
                curvature_mismatch: ((h[0][0] - h[1][1]) / h[0][0]).abs(),
                eigenvalue_error: ((ev[0] - wm) / wm)
                    .abs()
                    .max(((ev[1] - p.omega_plus_sq) / p.omega_plus_sq).abs()),
                stationarity: f1.abs().max(f2.abs()) / coulomb,
            })
        })
        .collect()
}

/// Exact-cost optimisation of an asymmetric protocol with one (`A`) or two
/// (`A`, `B`) free parameters.
pub fn optimize_unequal(
    design: &DesignBoundary,
    t_f: f64,
    n_params: usize,
    seeds: &[AnsatzParams],
    nm: &NelderMeadOptions,
) -> Result<OptResult> {
    let spec = CostSpec::new(CostKind::ExactNonRobust).with_params(n_params);
    optimize_seeded(design, t_f, &spec, seeds, nm)
}

/// Constraints for a given mass ratio `m₁/m₂`, keeping `m₁`.
pub fn with_mass_ratio(
    constraints: &PhysicalConstraints,
    ratio: f64,
) -> Result<PhysicalConstraints> {
    if !(ratio > 0.0 && ratio.is_finite()) {
        return Err(Error::Domain(format!(
            "mass ratio must be positive, got {ratio}"
        )));
    }
    Ok(PhysicalConstraints {
        m2: constraints.m1 / ratio,
        ..*constraints
    })
}
