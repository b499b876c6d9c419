//! Adaptive Dormand–Prince 8(5,3) integrator for small fixed-size systems.
//!
//! The stepper follows Hairer's DOP853 error estimator and step-size control.
//! States are plain arrays, so the same code serves the 2-dimensional auxiliary
//! oscillators and the 4-dimensional two-ion phase space without allocation.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OdeError {
    #[error("step size collapsed to {h:e} at t = {t}")]
    StepSizeCollapse { t: f64, h: f64 },
    #[error("step limit of {limit} reached at t = {t}")]
    TooManySteps { t: f64, limit: usize },
    #[error("non-finite state at t = {t}")]
    NonFinite { t: f64 },
    #[error("invalid integrator settings: {0}")]
    Settings(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_step: f64,
    pub first_step: Option<f64>,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
            max_step: f64::INFINITY,
            first_step: None,
            max_steps: 2_000_000,
        }
    }
}

impl OdeOptions {
    pub fn with_tolerances(rtol: f64, atol: f64) -> Self {
        Self {
            rtol,
            atol,
            ..Self::default()
        }
    }

    fn check(&self) -> Result<(), OdeError> {
        if !(self.rtol > 0.0 && self.atol > 0.0) {
            return Err(OdeError::Settings(format!(
                "tolerances must be positive (rtol = {}, atol = {})",
                self.rtol, self.atol
            )));
        }
        if !(self.max_step > 0.0) {
            return Err(OdeError::Settings("max_step must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OdeStats {
    pub evaluations: usize,
    pub accepted: usize,
    pub rejected: usize,
}

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 10.0;
const ERROR_EXPONENT: f64 = -1.0 / 8.0;

// Coefficients of the Dormand–Prince 8(5,3) pair (Hairer, Nørsett & Wanner).
const C: [f64; 12] = [
    0.0,
    0.05260015195876773,
    0.0789002279381516,
    0.1183503419072274,
    0.2816496580927726,
    0.3333333333333333,
    0.25,
    0.3076923076923077,
    0.6512820512820513,
    0.6,
    0.8571428571428571,
    1.0,
];
const A: [[f64; 12]; 12] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [
        0.05260015195876773,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
    ],
    [
        0.0197250569845379,
        0.0591751709536137,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
    ],
    [
        0.02958758547680685,
        0.0,
        0.08876275643042054,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
    ],
    [
        0.2413651341592667,
        0.0,
        -0.8845494793282861,
        0.924834003261792,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
    ],
    [
        0.037037037037037035,
        0.0,
        0.0,
        0.17082860872947386,
        0.12546768756682242,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
    ],
    [
        0.037109375,
        0.0,
        0.0,
        0.17025221101954405,
        0.06021653898045596,
        -0.017578125,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
    ],
    [
        0.03709200011850479,
        0.0,
        0.0,
        0.17038392571223998,
        0.10726203044637328,
        -0.015319437748624402,
        0.008273789163814023,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
    ],
    [
        0.6241109587160757,
        0.0,
        0.0,
        -3.3608926294469414,
        -0.868219346841726,
        27.59209969944671,
        20.154067550477894,
        -43.48988418106996,
        0.0,
        0.0,
        0.0,
        0.0,
    ],
    [
        0.47766253643826434,
        0.0,
        0.0,
        -2.4881146199716677,
        -0.590290826836843,
        21.230051448181193,
        15.279233632882423,
        -33.28821096898486,
        -0.020331201708508627,
        0.0,
        0.0,
        0.0,
    ],
    [
        -0.9371424300859873,
        0.0,
        0.0,
        5.186372428844064,
        1.0914373489967295,
        -8.149787010746927,
        -18.52006565999696,
        22.739487099350505,
        2.4936055526796523,
        -3.0467644718982196,
        0.0,
        0.0,
    ],
    [
        2.273310147516538,
        0.0,
        0.0,
        -10.53449546673725,
        -2.0008720582248625,
        -17.9589318631188,
        27.94888452941996,
        -2.8589982771350235,
        -8.87285693353063,
        12.360567175794303,
        0.6433927460157636,
        0.0,
    ],
];
const B: [f64; 12] = [
    0.054293734116568765,
    0.0,
    0.0,
    0.0,
    0.0,
    4.450312892752409,
    1.8915178993145003,
    -5.801203960010585,
    0.3111643669578199,
    -0.1521609496625161,
    0.20136540080403034,
    0.04471061572777259,
];
const E3: [f64; 13] = [
    -0.18980075407240762,
    0.0,
    0.0,
    0.0,
    0.0,
    4.450312892752409,
    1.8915178993145003,
    -5.801203960010585,
    -0.4226823213237919,
    -0.1521609496625161,
    0.20136540080403034,
    0.02265179219836082,
    0.0,
];
const E5: [f64; 13] = [
    0.01312004499419488,
    0.0,
    0.0,
    0.0,
    0.0,
    -1.2251564463762044,
    -0.4957589496572502,
    1.6643771824549864,
    -0.35032884874997366,
    0.3341791187130175,
    0.08192320648511571,
    -0.022355307863886294,
    0.0,
];

/// DOP853 stepper over an `N`-dimensional state.
pub struct Dop853<F, const N: usize>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    f: F,
    t: f64,
    y: [f64; N],
    dy: [f64; N],
    h: f64,
    opts: OdeOptions,
    stats: OdeStats,
    rejected: bool,
}

fn rms<const N: usize>(v: &[f64; N]) -> f64 {
    (v.iter().map(|x| x * x).sum::<f64>() / N as f64).sqrt()
}

impl<F, const N: usize> Dop853<F, N>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    pub fn new(mut f: F, t0: f64, y0: [f64; N], opts: OdeOptions) -> Result<Self, OdeError> {
        opts.check()?;
        if y0.iter().any(|v| !v.is_finite()) {
            return Err(OdeError::NonFinite { t: t0 });
        }
        let dy = f(t0, &y0);
        let mut s = Self {
            f,
            t: t0,
            y: y0,
            dy,
            h: 0.0,
            opts,
            stats: OdeStats {
                evaluations: 1,
                ..OdeStats::default()
            },
            rejected: false,
        };
        s.h = match opts.first_step {
            Some(h) if h > 0.0 => h,
            _ => s.initial_step(),
        }
        .min(opts.max_step);
        Ok(s)
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn y(&self) -> &[f64; N] {
        &self.y
    }

    /// Derivative at the current point (free: it is the last stage of the previous step).
    pub fn dy(&self) -> &[f64; N] {
        &self.dy
    }

    pub fn stats(&self) -> OdeStats {
        self.stats
    }

    fn initial_step(&mut self) -> f64 {
        let (rtol, atol) = (self.opts.rtol, self.opts.atol);
        let scale: [f64; N] = std::array::from_fn(|i| atol + self.y[i].abs() * rtol);
        let d0 = rms::<N>(&std::array::from_fn(|i| self.y[i] / scale[i]));
        let d1 = rms::<N>(&std::array::from_fn(|i| self.dy[i] / scale[i]));
        let h0 = if d0 < 1e-5 || d1 < 1e-5 {
            1e-6
        } else {
            0.01 * d0 / d1
        };
        let y1: [f64; N] = std::array::from_fn(|i| self.y[i] + h0 * self.dy[i]);
        let f1 = (self.f)(self.t + h0, &y1);
        self.stats.evaluations += 1;
        let d2 = rms::<N>(&std::array::from_fn(|i| (f1[i] - self.dy[i]) / scale[i])) / h0;
        let h1 = if d1 <= 1e-15 && d2 <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(-ERROR_EXPONENT)
        };
        (100.0 * h0).min(h1)
    }

    /// One attempted step of size `h`; returns the new state, its derivative and the error norm.
    fn attempt(&mut self, h: f64) -> ([f64; N], [f64; N], f64) {
        let mut k = [[0.0; N]; 13];
        k[0] = self.dy;
        for s in 1..12 {
            let mut ys = self.y;
            for (j, kj) in k.iter().enumerate().take(s) {
                let a = A[s][j];
                if a != 0.0 {
                    for i in 0..N {
                        ys[i] += h * a * kj[i];
                    }
                }
            }
            k[s] = (self.f)(self.t + C[s] * h, &ys);
        }
        let mut y_new = self.y;
        for (s, ks) in k.iter().enumerate().take(12) {
            if B[s] != 0.0 {
                for i in 0..N {
                    y_new[i] += h * B[s] * ks[i];
                }
            }
        }
        k[12] = (self.f)(self.t + h, &y_new);
        self.stats.evaluations += 12;

        let (rtol, atol) = (self.opts.rtol, self.opts.atol);
        let (mut e5, mut e3) = (0.0, 0.0);
        for i in 0..N {
            let scale = atol + self.y[i].abs().max(y_new[i].abs()) * rtol;
            let (mut s5, mut s3) = (0.0, 0.0);
            for s in 0..13 {
                s5 += E5[s] * k[s][i];
                s3 += E3[s] * k[s][i];
            }
            e5 += (s5 / scale).powi(2);
            e3 += (s3 / scale).powi(2);
        }
        let norm = if e5 == 0.0 && e3 == 0.0 {
            0.0
        } else {
            h.abs() * e5 / ((e5 + 0.01 * e3) * N as f64).sqrt()
        };
        (y_new, k[12], norm)
    }

    /// Takes one accepted step no longer than `limit`, returning its size.
    fn step_within(&mut self, limit: f64) -> Result<f64, OdeError> {
        loop {
            let h_proposed = self.h.min(self.opts.max_step);
            let h = h_proposed.min(limit);
            let min_h = 10.0 * f64::EPSILON * self.t.abs().max(h.abs());
            if h < min_h && h < limit {
                return Err(OdeError::StepSizeCollapse { t: self.t, h });
            }
            let (y_new, dy_new, norm) = self.attempt(h);
            if !norm.is_finite() || y_new.iter().any(|v| !v.is_finite()) {
                self.stats.rejected += 1;
                self.rejected = true;
                self.h = h * MIN_FACTOR;
                if self.h < min_h {
                    return Err(OdeError::NonFinite { t: self.t });
                }
                continue;
            }
            if norm < 1.0 {
                let mut factor = if norm == 0.0 {
                    MAX_FACTOR
                } else {
                    MAX_FACTOR.min(SAFETY * norm.powf(ERROR_EXPONENT))
                };
                if self.rejected {
                    factor = factor.min(1.0);
                }
                // A step shortened to land on `limit` must not shrink the next proposal.
                self.h = if h < h_proposed {
                    h_proposed.max(h * factor)
                } else {
                    h * factor
                };
                self.rejected = false;
                self.t += h;
                self.y = y_new;
                self.dy = dy_new;
                self.stats.accepted += 1;
                return Ok(h);
            }
            self.stats.rejected += 1;
            self.h = h * MIN_FACTOR.max(SAFETY * norm.powf(ERROR_EXPONENT));
            self.rejected = true;
        }
    }

    /// Integrates up to exactly `t_end`, calling `observe` after every accepted step.
    pub fn advance_with<O>(&mut self, t_end: f64, mut observe: O) -> Result<(), OdeError>
    where
        O: FnMut(f64, &[f64; N]) -> Result<(), OdeError>,
    {
        while self.t < t_end {
            if self.stats.accepted + self.stats.rejected >= self.opts.max_steps {
                return Err(OdeError::TooManySteps {
                    t: self.t,
                    limit: self.opts.max_steps,
                });
            }
            let remaining = t_end - self.t;
            self.step_within(remaining)?;
            if t_end - self.t <= 4.0 * f64::EPSILON * t_end.abs() {
                self.t = t_end;
            }
            observe(self.t, &self.y)?;
        }
        Ok(())
    }

    pub fn advance_to(&mut self, t_end: f64) -> Result<(), OdeError> {
        self.advance_with(t_end, |_, _| Ok(()))
    }
}

/// Integrates `f` from `t0` to `t1` and returns the final state.
pub fn solve<F, const N: usize>(
    f: F,
    t0: f64,
    y0: [f64; N],
    t1: f64,
    opts: OdeOptions,
) -> Result<([f64; N], OdeStats), OdeError>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    let mut stepper = Dop853::new(f, t0, y0, opts)?;
    stepper.advance_to(t1)?;
    Ok((*stepper.y(), stepper.stats()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tableau_rows_sum_to_nodes() {
        for s in 1..12 {
            let row: f64 = A[s].iter().sum();
            assert!((row - C[s]).abs() < 1e-14, "stage {s}");
        }
        assert!((B.iter().sum::<f64>() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn exponential_decay() {
        let (y, _) = solve(
            |_, y: &[f64; 1]| [-y[0]],
            0.0,
            [1.0],
            5.0,
            OdeOptions::default(),
        )
        .unwrap();
        assert!((y[0] - (-5f64).exp()).abs() < 1e-11);
    }

    #[test]
    fn harmonic_oscillator_many_periods() {
        let w = 2.7;
        let t1 = 200.0 * 2.0 * std::f64::consts::PI / w;
        let (y, stats) = solve(
            |_, y: &[f64; 2]| [y[1], -w * w * y[0]],
            0.0,
            [1.0, 0.0],
            t1,
            OdeOptions::default(),
        )
        .unwrap();
        assert!((y[0] - 1.0).abs() < 1e-7, "{y:?}");
        assert!(y[1].abs() < 1e-7 * w);
        assert!(stats.accepted > 0);
    }

    #[test]
    fn eighth_order_convergence() {
        // Fixed-size steps through `first_step` with huge tolerance: error ∝ h⁸.
        let run = |n: usize| {
            let mut opts = OdeOptions::with_tolerances(1e3, 1e3);
            opts.first_step = Some(1.0 / n as f64);
            opts.max_step = 1.0 / n as f64;
            let (y, _) = solve(|t, y: &[f64; 1]| [y[0] * t.cos()], 0.0, [1.0], 1.0, opts).unwrap();
            (y[0] - 1f64.sin().exp()).abs()
        };
        let (e1, e2) = (run(4), run(8));
        let order = (e1 / e2).log2();
        assert!(order > 7.0, "observed order {order}");
    }

    #[test]
    fn lands_on_requested_times() {
        let mut s =
            Dop853::new(|_, y: &[f64; 1]| [y[0]], 0.0, [1.0], OdeOptions::default()).unwrap();
        for k in 1..=10 {
            s.advance_to(0.1 * k as f64).unwrap();
            assert_eq!(s.t(), 0.1 * k as f64);
        }
        assert!((s.y()[0] - 1f64.exp()).abs() < 1e-10);
    }

    #[test]
    fn observer_can_abort() {
        let mut s =
            Dop853::new(|_, _: &[f64; 1]| [1.0], 0.0, [0.0], OdeOptions::default()).unwrap();
        let err = s
            .advance_with(10.0, |t, y| {
                if y[0] > 1.0 {
                    Err(OdeError::NonFinite { t })
                } else {
                    Ok(())
                }
            })
            .unwrap_err();
        assert!(matches!(err, OdeError::NonFinite { .. }));
    }

    #[test]
    fn rejects_bad_settings() {
        let opts = OdeOptions::with_tolerances(0.0, 1e-12);
        assert!(Dop853::new(|_, y: &[f64; 1]| *y, 0.0, [1.0], opts).is_err());
    }

    #[test]
    fn step_limit() {
        let opts = OdeOptions {
            max_steps: 5,
            max_step: 1e-3,
            ..OdeOptions::default()
        };
        let err = solve(|_, y: &[f64; 1]| *y, 0.0, [1.0], 1.0, opts).unwrap_err();
        assert!(matches!(err, OdeError::TooManySteps { .. }));
    }
}
