//! Invariant-engineered transport protocols.
//!
//! The stretch-mode scaling function is a polynomial of order 14 in `s = t/t_f`,
//! even about `s = 1/2`, with `ρ₊ = 1` and vanishing derivatives of orders 1–4 at
//! both ends, `ρ₊(1/2) = ρ_in+` and two free parameters: the midpoint curvature `A`
//! and the leading coefficient `B`. The centre-of-mass scaling function is `ρ₋ = 1`.
//!
//! From `ρ₊` the stretch frequency follows as `Ω₊² = Ω₀₊²/ρ₊⁴ − ρ̈₊/ρ₊`, and the
//! separation and the potential coefficients follow by inverting the static
//! normal-mode relations at each instant. The same reconstruction covers unequal
//! masses, where an equilibrium shift `s(t)` and a linear term `γ(t)` keep the
//! local curvatures of both ions equal.

use serde::{Deserialize, Serialize};

use crate::design::DesignBoundary;
use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::units::{PhysConstants, UNIT_SYSTEM};

/// Free parameters of the ansatz and the run-time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnsatzParams {
    pub a: f64,
    pub b: f64,
    pub t_f: f64,
}

impl AnsatzParams {
    pub fn new(a: f64, b: f64, t_f: f64) -> Self {
        Self { a, b, t_f }
    }
}

/// `ρ₊(s)` as a dense polynomial in `u = s − 1/2`, with its first four derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct RhoPolynomial {
    coeffs: [[f64; 15]; 5],
}

impl RhoPolynomial {
    pub fn new(a: f64, b: f64, rho_in: f64) -> Self {
        let r1 = rho_in - 1.0;
        let mut c = [0.0; 15];
        c[0] = rho_in;
        c[2] = a / 2.0;
        c[4] = -(10240.0 * a + b + 245760.0 * r1) / 1024.0;
        c[6] = 5.0 * (4096.0 * a + b + 131072.0 * r1) / 256.0;
        c[8] = -5.0 * (2048.0 * a + b + 73728.0 * r1) / 32.0;
        c[10] = (5120.0 * a + 5.0 * b + 196608.0 * r1) / 8.0;
        c[12] = -(2048.0 * a + 5.0 * b + 81920.0 * r1) / 4.0;
        c[14] = b;
        let mut coeffs = [[0.0; 15]; 5];
        coeffs[0] = c;
        for k in 1..5 {
            for n in 1..15 {
                coeffs[k][n - 1] = n as f64 * coeffs[k - 1][n];
            }
        }
        Self { coeffs }
    }

    /// Coefficients of `u⁰, u², …, u¹⁴`.
    pub fn even_coefficients(&self) -> [f64; 8] {
        std::array::from_fn(|k| self.coeffs[0][2 * k])
    }

    fn horner(c: &[f64; 15], u: f64) -> f64 {
        c.iter().rev().fold(0.0, |acc, &ck| acc * u + ck)
    }

    /// `k`-th derivative with respect to `s`.
    pub fn derivative(&self, k: usize, s: f64) -> f64 {
        Self::horner(&self.coeffs[k], s - 0.5)
    }

    /// Value and derivatives of orders 1–4 with respect to `s`.
    pub fn eval(&self, s: f64) -> [f64; 5] {
        let u = s - 0.5;
        std::array::from_fn(|k| Self::horner(&self.coeffs[k], u))
    }
}

/// Coefficients of `V(x) = γx + αx² + βx⁴`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coefficients {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl Coefficients {
    pub fn force(&self, x: f64) -> f64 {
        -(self.gamma + 2.0 * self.alpha * x + 4.0 * self.beta * x * x * x)
    }

    pub fn energy(&self, x: f64) -> f64 {
        let x2 = x * x;
        self.gamma * x + self.alpha * x2 + self.beta * x2 * x2
    }

    pub fn curvature(&self, x: f64) -> f64 {
        2.0 * self.alpha + 12.0 * self.beta * x * x
    }
}

/// A time-dependent external potential acting on two ions.
pub trait TrapPotential: Sync {
    fn coefficients(&self, t: f64) -> Coefficients;
    fn masses(&self) -> [f64; 2];
    fn consts(&self) -> &PhysConstants;
}

/// A potential frozen in time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StaticPotential {
    pub coefficients: Coefficients,
    pub masses: [f64; 2],
    pub consts: PhysConstants,
}

impl TrapPotential for StaticPotential {
    fn coefficients(&self, _t: f64) -> Coefficients {
        self.coefficients
    }

    fn masses(&self) -> [f64; 2] {
        self.masses
    }

    fn consts(&self) -> &PhysConstants {
        &self.consts
    }
}

/// Everything the reconstruction yields at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolPoint {
    pub t: f64,
    pub omega_plus_sq: f64,
    pub d: f64,
    pub d_dot: f64,
    pub d_ddot: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub s: f64,
    pub s_dot: f64,
    pub s_ddot: f64,
}

impl ProtocolPoint {
    pub fn coefficients(&self) -> Coefficients {
        Coefficients {
            alpha: self.alpha,
            beta: self.beta,
            gamma: self.gamma,
        }
    }

    /// Equilibrium positions `(s − d/2, s + d/2)`.
    pub fn equilibria(&self) -> (f64, f64) {
        (self.s - self.d / 2.0, self.s + self.d / 2.0)
    }
}

/// Sampled feasibility of a protocol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolCheck {
    /// Smallest `(Ω₊² − Ω₋²)/Ω₋²`; must stay positive.
    pub min_gap: f64,
    pub min_beta: f64,
    /// Largest `β/β_max`.
    pub max_beta_ratio: f64,
    pub t_worst_beta: f64,
}

impl ProtocolCheck {
    pub fn is_physical(&self) -> bool {
        self.min_gap > 0.0 && self.min_beta > 0.0
    }

    /// `β ≤ β_max` up to relative tolerance `tol`.
    pub fn respects_beta_max(&self, tol: f64) -> bool {
        self.max_beta_ratio <= 1.0 + tol
    }
}

/// An evaluable transport protocol.
#[derive(Debug, Clone)]
pub struct Protocol {
    design: DesignBoundary,
    params: AnsatzParams,
    rho: RhoPolynomial,
    mode_mass: f64,
    mass_sum: f64,
    mass_diff: f64,
}

impl Protocol {
    pub fn new(design: &DesignBoundary, params: AnsatzParams) -> Result<Self> {
        if !(params.t_f > 0.0 && params.t_f.is_finite()) {
            return Err(Error::Domain(format!(
                "run-time must be positive, got {}",
                params.t_f
            )));
        }
        if !(params.a.is_finite() && params.b.is_finite()) {
            return Err(Error::Domain("ansatz parameters must be finite".into()));
        }
        let [m1, m2] = design.masses();
        Ok(Self {
            design: *design,
            params,
            rho: RhoPolynomial::new(params.a, params.b, design.rho_in_plus),
            mode_mass: (m1 * m2).sqrt(),
            mass_sum: m1 + m2,
            mass_diff: m2 - m1,
        })
    }

    pub fn design(&self) -> &DesignBoundary {
        &self.design
    }

    pub fn params(&self) -> AnsatzParams {
        self.params
    }

    pub fn t_f(&self) -> f64 {
        self.params.t_f
    }

    pub fn rho(&self) -> &RhoPolynomial {
        &self.rho
    }

    /// `ρ₊` and its time derivatives of orders 1–4.
    pub fn rho_plus(&self, t: f64) -> [f64; 5] {
        let tf = self.params.t_f;
        let ds = self.rho.eval(t / tf);
        let mut scale = 1.0;
        std::array::from_fn(|k| {
            let v = ds[k] / scale;
            scale *= tf;
            v
        })
    }

    /// The centre-of-mass scaling function is identically one.
    pub fn rho_minus(&self) -> f64 {
        1.0
    }

    pub fn omega_minus_sq(&self) -> f64 {
        self.design.omega_minus_sq
    }

    pub fn omega_plus_sq(&self, t: f64) -> f64 {
        let tf = self.params.t_f;
        let s = t / tf;
        let rho = self.rho.derivative(0, s);
        let rho_dd = self.rho.derivative(2, s) / (tf * tf);
        self.design.omega0_plus_sq / rho.powi(4) - rho_dd / rho
    }

    /// `(d, β, s)` from `Ω₊²`, values only.
    fn reconstruct(&self, omega_plus_sq: f64) -> (f64, f64, f64) {
        let cc = self.design.consts.coulomb;
        let wm = self.design.omega_minus_sq;
        let d = (4.0 * cc / (self.mode_mass * (omega_plus_sq - wm))).cbrt();
        let d2 = d * d;
        let sum = omega_plus_sq + wm;
        let beta = self.mass_sum * sum / (8.0 * d2) - 2.0 * cc / (d2 * d2 * d);
        let s = if self.mass_diff == 0.0 {
            0.0
        } else {
            self.mass_diff * sum / (48.0 * beta * d)
        };
        (d, beta, s)
    }

    fn coefficients_from(&self, d: f64, beta: f64, s: f64) -> Coefficients {
        let cc = self.design.consts.coulomb;
        let alpha = cc / d.powi(3) - beta * d * d / 2.0 - 6.0 * beta * s * s;
        let gamma = -2.0 * alpha * s - 2.0 * beta * (1.5 * d * d * s + 2.0 * s * s * s);
        Coefficients { alpha, beta, gamma }
    }

    /// Full reconstruction with first and second time derivatives of `d` and `s`.
    pub fn point(&self, t: f64) -> Result<ProtocolPoint> {
        let r = self.rho_plus(t);
        let cc = self.design.consts.coulomb;
        let wm = self.design.omega_minus_sq;
        let rho = Jet::new(r[0], r[1], r[2]);
        let rho_dd = Jet::new(r[2], r[3], r[4]);
        let wp = rho.powi(-4).scale(self.design.omega0_plus_sq) - rho_dd / rho;
        if !(wp.v > wm) {
            return Err(Error::Unphysical {
                t,
                reason: format!(
                    "stretch frequency squared {} does not exceed the centre-of-mass value {}",
                    wp.v, wm
                ),
            });
        }
        let d = ((wp - wm).recip() * (4.0 * cc / self.mode_mass)).cbrt();
        let sum = wp + wm;
        let beta = sum * d.powi(-2) * (self.mass_sum / 8.0) - d.powi(-5) * (2.0 * cc);
        if !(beta.v > 0.0) {
            return Err(Error::Unphysical {
                t,
                reason: format!("quartic coefficient {} is not positive", beta.v),
            });
        }
        let s = if self.mass_diff == 0.0 {
            Jet::constant(0.0)
        } else {
            sum / (beta * d) * (self.mass_diff / 48.0)
        };
        let c = self.coefficients_from(d.v, beta.v, s.v);
        Ok(ProtocolPoint {
            t,
            omega_plus_sq: wp.v,
            d: d.v,
            d_dot: d.d1,
            d_ddot: d.d2,
            alpha: c.alpha,
            beta: c.beta,
            gamma: c.gamma,
            s: s.v,
            s_dot: s.d1,
            s_ddot: s.d2,
        })
    }

    /// Separation and its first two time derivatives.
    pub fn distance(&self, t: f64) -> Result<(f64, f64, f64)> {
        self.point(t).map(|p| (p.d, p.d_dot, p.d_ddot))
    }

    /// Second time derivative of the separation (cheaper than a full `point`).
    pub fn d_ddot(&self, t: f64) -> f64 {
        let r = self.rho_plus(t);
        let rho = Jet::new(r[0], r[1], r[2]);
        let rho_dd = Jet::new(r[2], r[3], r[4]);
        let wp = rho.powi(-4).scale(self.design.omega0_plus_sq) - rho_dd / rho;
        let d = ((wp - self.design.omega_minus_sq).recip()
            * (4.0 * self.design.consts.coulomb / self.mode_mass))
            .cbrt();
        d.d2
    }

    /// Samples the protocol on `n` points (including both ends) and records how
    /// close it comes to the feasibility limits.
    pub fn check(&self, n: usize) -> ProtocolCheck {
        let n = n.max(2);
        let wm = self.design.omega_minus_sq;
        let beta_max = self.design.constraints.beta_max;
        let mut out = ProtocolCheck {
            min_gap: f64::INFINITY,
            min_beta: f64::INFINITY,
            max_beta_ratio: f64::NEG_INFINITY,
            t_worst_beta: 0.0,
        };
        for k in 0..n {
            let t = self.params.t_f * k as f64 / (n - 1) as f64;
            let wp = self.omega_plus_sq(t);
            let gap = (wp - wm) / wm;
            out.min_gap = out
                .min_gap
                .min(if gap.is_nan() { f64::NEG_INFINITY } else { gap });
            if gap > 0.0 {
                let (_, beta, _) = self.reconstruct(wp);
                out.min_beta = out.min_beta.min(beta);
                if beta / beta_max > out.max_beta_ratio {
                    out.max_beta_ratio = beta / beta_max;
                    out.t_worst_beta = t;
                }
            }
        }
        out
    }

    /// Potential frozen at time `t`.
    pub fn frozen(&self, t: f64) -> StaticPotential {
        StaticPotential {
            coefficients: self.coefficients(t),
            masses: self.design.masses(),
            consts: self.design.consts,
        }
    }

    /// Dense samples of `(t, α, β, γ, d)`.
    pub fn samples(&self, n: usize) -> Result<Vec<ProtocolPoint>> {
        let n = n.max(2);
        (0..n)
            .map(|k| self.point(self.params.t_f * k as f64 / (n - 1) as f64))
            .collect()
    }

    /// JSON document with the design, the parameters and `n` dense samples.
    pub fn export_json(&self, n: usize) -> Result<String> {
        let samples = self
            .samples(n)?
            .into_iter()
            .map(|p| ProtocolSample {
                t: p.t,
                alpha: p.alpha,
                beta: p.beta,
                gamma: p.gamma,
                d: p.d,
            })
            .collect();
        let doc = ProtocolExport {
            units: UNIT_SYSTEM,
            tool_version: env!("CARGO_PKG_VERSION"),
            constraints: self.design.constraints,
            params: self.params,
            design: self.design,
            samples,
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }
}

impl TrapPotential for Protocol {
    fn coefficients(&self, t: f64) -> Coefficients {
        let (d, beta, s) = self.reconstruct(self.omega_plus_sq(t));
        self.coefficients_from(d, beta, s)
    }

    fn masses(&self) -> [f64; 2] {
        self.design.masses()
    }

    fn consts(&self) -> &PhysConstants {
        &self.design.consts
    }
}

/// Default number of samples in exported protocols.
pub const DEFAULT_SAMPLES: usize = 2001;

#[derive(Serialize)]
struct ProtocolSample {
    t: f64,
    alpha: f64,
    beta: f64,
    gamma: f64,
    d: f64,
}

#[derive(Serialize)]
struct ProtocolExport {
    units: &'static str,
    tool_version: &'static str,
    constraints: crate::design::PhysicalConstraints,
    params: AnsatzParams,
    design: DesignBoundary,
    samples: Vec<ProtocolSample>,
}
