//! Model fits: the excitation envelope of optimised protocols and the
//! Lorentzian resonance of the energy swap.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Outcome of a Levenberg-Marquardt run.
#[derive(Debug, Clone, PartialEq)]
pub struct LeastSquares {
    pub params: Vec<f64>,
    /// Sum of squared residuals.
    pub ssr: f64,
    /// `σ²(JᵀJ)⁻¹` at the optimum, row-major; empty if singular.
    pub covariance: Vec<f64>,
    pub iterations: usize,
}

/// Minimises `Σ rᵢ(p)²` by Levenberg-Marquardt with a forward-difference Jacobian.
pub fn levenberg_marquardt<F>(mut residuals: F, p0: &[f64], max_iter: usize) -> Result<LeastSquares>
where
    F: FnMut(&[f64]) -> Vec<f64>,
{
    let n = p0.len();
    let mut p = DVector::from_column_slice(p0);
    let mut r = DVector::from_vec(residuals(p.as_slice()));
    let m = r.len();
    if m < n {
        return Err(Error::Fit(format!(
            "{m} residuals cannot determine {n} parameters"
        )));
    }
    if r.iter().any(|v| !v.is_finite()) {
        return Err(Error::Fit(
            "residuals are not finite at the starting point".into(),
        ));
    }
    let jacobian = |p: &DVector<f64>, r: &DVector<f64>, f: &mut F| {
        let mut j = DMatrix::zeros(m, n);
        for k in 0..n {
            let h = 1e-7 * p[k].abs().max(1e-3);
            let mut q = p.clone();
            q[k] += h;
            let rq = f(q.as_slice());
            for i in 0..m {
                j[(i, k)] = (rq[i] - r[i]) / h;
            }
        }
        j
    };
    let mut ssr = r.norm_squared();
    let mut lambda = 1e-3;
    let mut iterations = 0;
    let mut j = jacobian(&p, &r, &mut residuals);
    while iterations < max_iter {
        iterations += 1;
        let jtj = j.transpose() * &j;
        let g = j.transpose() * &r;
        let mut improved = false;
        while lambda < 1e12 {
            let mut a = jtj.clone();
            for k in 0..n {
                a[(k, k)] += lambda * jtj[(k, k)].max(1e-12);
            }
            let Some(step) = a.lu().solve(&(-&g)) else {
                lambda *= 10.0;
                continue;
            };
            let trial = &p + &step;
            let rt = DVector::from_vec(residuals(trial.as_slice()));
            let st = rt.norm_squared();
            if st.is_finite() && st < ssr {
                let gain = (ssr - st) / ssr.max(f64::MIN_POSITIVE);
                let small_step = step.norm() <= 1e-12 * (p.norm() + 1e-12);
                p = trial;
                r = rt;
                ssr = st;
                lambda = (lambda / 10.0).max(1e-15);
                improved = !(gain < 1e-14 || small_step);
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
        j = jacobian(&p, &r, &mut residuals);
    }
    let dof = (m - n).max(1) as f64;
    let covariance = (j.transpose() * &j)
        .try_inverse()
        .map(|inv| (inv * (ssr / dof)).as_slice().to_vec())
        .unwrap_or_default();
    Ok(LeastSquares {
        params: p.as_slice().to_vec(),
        ssr,
        covariance,
        iterations,
    })
}

/// `f(t) = a·exp(−bt)·sin²(ct + d)` fitted to excitation data, and the
/// run-time where the envelope `a·exp(−bt)` crosses `threshold`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeFit {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub threshold: f64,
    pub t_crit: f64,
    /// Covariance of `(ln a, b, c, d)`, row-major.
    pub covariance: Vec<f64>,
    /// Root mean square of the log residuals.
    pub rms_log_residual: f64,
    /// Median relative residual at the local maxima of the data.
    pub peak_residual: f64,
    pub points: usize,
}

impl EnvelopeFit {
    pub fn model(&self, t: f64) -> f64 {
        self.envelope(t) * (self.c * t + self.d).sin().powi(2)
    }

    pub fn envelope(&self, t: f64) -> f64 {
        self.a * (-self.b * t).exp()
    }
}

fn log_model(p: &[f64], t: f64) -> f64 {
    let s = (p[2] * t + p[3]).sin();
    p[0] - p[1] * t + (s * s).max(1e-300).ln()
}

/// Fits the envelope model in log space, restarting over a grid of `(c, d)`.
///
/// Non-positive samples carry no information in log space and are skipped.
pub fn fit_envelope(t: &[f64], y: &[f64], threshold: f64) -> Result<EnvelopeFit> {
    if t.len() != y.len() {
        return Err(Error::Fit("time and value arrays differ in length".into()));
    }
    let data: Vec<(f64, f64)> = t
        .iter()
        .zip(y)
        .filter(|(_, v)| **v > 0.0 && v.is_finite())
        .map(|(a, b)| (*a, b.ln()))
        .collect();
    if data.len() < 6 {
        return Err(Error::Fit(format!("only {} usable points", data.len())));
    }
    if !(threshold > 0.0) {
        return Err(Error::Fit("threshold must be positive".into()));
    }
    let n = data.len() as f64;
    let t_min = data.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let t_max = data.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let mut steps: Vec<f64> = data.windows(2).map(|w| (w[1].0 - w[0].0).abs()).collect();
    steps.sort_by(f64::total_cmp);
    let step = steps[steps.len() / 2].max(1e-12);
    let c_lo = std::f64::consts::PI / (t_max - t_min);
    let c_hi = std::f64::consts::PI / (2.0 * step);

    let residuals =
        |p: &[f64]| -> Vec<f64> { data.iter().map(|&(t, ly)| log_model(p, t) - ly).collect() };
    // For fixed (c, d) the log model is linear in (ln a, b): scan (c, d) with
    // the exact linear solution, then polish the best few with all four free.
    let ts: Vec<f64> = data.iter().map(|p| p.0).collect();
    let mut seeds: Vec<(f64, [f64; 4])> = Vec::new();
    let c_step = c_lo / 4.0;
    let n_c = ((c_hi - c_lo) / c_step).ceil() as usize + 1;
    const D_STARTS: usize = 16;
    for i in 0..n_c {
        let c = c_lo + c_step * i as f64;
        for k in 0..D_STARTS {
            let d = std::f64::consts::PI * k as f64 / D_STARTS as f64;
            let z: Vec<f64> = data
                .iter()
                .map(|&(t, ly)| ly - ((c * t + d).sin().powi(2)).max(1e-300).ln())
                .collect();
            let Ok((slope, icpt)) = linear_regression(&ts, &z) else {
                continue;
            };
            let p = [icpt, -slope, c, d];
            let ssr: f64 = residuals(&p).iter().map(|r| r * r).sum();
            if ssr.is_finite() {
                seeds.push((ssr, p));
            }
        }
    }
    seeds.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut best: Option<LeastSquares> = None;
    for (_, p) in seeds.iter().take(8) {
        let Ok(fit) = levenberg_marquardt(residuals, p, 200) else {
            continue;
        };
        if best.as_ref().is_none_or(|b| fit.ssr < b.ssr) {
            best = Some(fit);
        }
    }
    let best = best.ok_or_else(|| Error::Fit("no start converged".into()))?;
    let [ln_a, b, c, d] = [
        best.params[0],
        best.params[1],
        best.params[2],
        best.params[3],
    ];
    if !(b > 0.0) {
        return Err(Error::Fit(format!("envelope does not decay (b = {b})")));
    }
    // sin² is invariant under c → −c, d → −d and d → d + π.
    let (c, d) = if c < 0.0 { (-c, -d) } else { (c, d) };
    let d = d.rem_euclid(std::f64::consts::PI);
    let a = ln_a.exp();
    let mut fit = EnvelopeFit {
        a,
        b,
        c,
        d,
        threshold,
        t_crit: (a / threshold).ln() / b,
        covariance: best.covariance,
        rms_log_residual: (best.ssr / n).sqrt(),
        peak_residual: f64::NAN,
        points: data.len(),
    };
    let peaks: Vec<f64> = y
        .windows(3)
        .zip(&t[1..])
        .filter(|(w, _)| w[1] > w[0] && w[1] > w[2])
        .map(|(w, &tp)| ((fit.model(tp) - w[1]) / w[1]).abs())
        .collect();
    fit.peak_residual = median(peaks);
    Ok(fit)
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let k = v.len() / 2;
    if v.len() % 2 == 1 {
        v[k]
    } else {
        0.5 * (v[k - 1] + v[k])
    }
}

/// Half-width `η½ = 1/(24k(d_in/d_c)⁵)` of the swap resonance in the stray-field parameter.
pub fn eta_half(k: f64, d_in_ratio: f64) -> f64 {
    1.0 / (24.0 * k * d_in_ratio.powi(5))
}

/// Final energy of the hot ion for a Lorentzian resonance of half-width `eta_half`.
pub fn lorentz_model(eta: f64, eta_half: f64, e_in: f64) -> f64 {
    let x = eta / eta_half;
    e_in * (1.0 - 1.0 / (1.0 + x * x))
}

/// Largest `|η|` that still leaves at most `e_ex` of an initial `e_in`.
pub fn tolerable_eta(eta_half: f64, e_ex: f64, e_in: f64) -> f64 {
    let r = e_ex / e_in;
    eta_half * (r / (1.0 - r)).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LorentzFit {
    pub k: f64,
    pub k_std: f64,
    pub eta_half: f64,
    pub d_in_ratio: f64,
    pub e_in: f64,
    /// Only samples below this energy enter the fit.
    pub cutoff: f64,
    pub points: usize,
    pub rms: f64,
}

impl LorentzFit {
    pub fn tolerable_eta(&self, e_ex: f64, e_in: f64) -> f64 {
        tolerable_eta(self.eta_half, e_ex, e_in)
    }
}

/// Fits `k` of the resonance model to the samples of `e_ex` below `cutoff`.
///
/// Energies are in any common unit, typically quanta.
pub fn fit_lorentzian(
    eta: &[f64],
    e_ex: &[f64],
    e_in: f64,
    d_in_ratio: f64,
    cutoff: f64,
) -> Result<LorentzFit> {
    if eta.len() != e_ex.len() {
        return Err(Error::Fit(
            "perturbation and energy arrays differ in length".into(),
        ));
    }
    let data: Vec<(f64, f64)> = eta
        .iter()
        .zip(e_ex)
        .filter(|(_, e)| **e < cutoff && e.is_finite())
        .map(|(a, b)| (*a, *b))
        .collect();
    let nonzero = data.iter().filter(|(x, _)| *x != 0.0).count();
    if nonzero < 2 {
        return Err(Error::Fit(format!(
            "{} samples below {cutoff}, too few for the resonance fit",
            data.len()
        )));
    }
    let residuals = |p: &[f64]| -> Vec<f64> {
        let h = eta_half(p[0], d_in_ratio);
        data.iter()
            .map(|&(x, e)| lorentz_model(x, h, e_in) - e)
            .collect()
    };
    // Moment estimate from the small-η expansion E ≈ E_in(η/η½)².
    let (num, den) = data
        .iter()
        .fold((0.0, 0.0), |(n, d), &(x, e)| (n + e * x * x, d + x.powi(4)));
    let q = (num / (den * e_in)).max(1e-12).sqrt();
    let k0 = q / (24.0 * d_in_ratio.powi(5));
    let fit = levenberg_marquardt(residuals, &[k0], 200)?;
    let k = fit.params[0];
    if !(k > 0.0) {
        return Err(Error::Fit(format!(
            "non-positive resonance constant k = {k}"
        )));
    }
    Ok(LorentzFit {
        k,
        k_std: fit.covariance.first().map_or(f64::NAN, |v| v.sqrt()),
        eta_half: eta_half(k, d_in_ratio),
        d_in_ratio,
        e_in,
        cutoff,
        points: data.len(),
        rms: (fit.ssr / data.len() as f64).sqrt(),
    })
}

/// Least-squares slope and intercept of `y` against `x`.
pub fn linear_regression(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::Fit(
            "regression needs two or more paired points".into(),
        ));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx == 0.0 {
        return Err(Error::Fit("regression abscissae are all equal".into()));
    }
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synthetic_envelope_is_recovered() {
        let (a, b, c, d) = (40.0, 0.3, 1.3, 0.4);
        let t: Vec<f64> = (0..=64).map(|k| 8.0 + 0.5 * k as f64).collect();
        let y: Vec<f64> = t
            .iter()
            .map(|&t| a * (-b * t).exp() * (c * t + d).sin().powi(2))
            .collect();
        let fit = fit_envelope(&t, &y, 0.1).unwrap();
        assert!((fit.a / a - 1.0).abs() < 0.01, "{fit:?}");
        assert!((fit.b / b - 1.0).abs() < 0.01, "{fit:?}");
        assert!((fit.t_crit - (a / 0.1f64).ln() / b).abs() < 0.05);
        assert!(fit.peak_residual < 1e-3);
    }

    #[test]
    fn noisy_envelope() {
        let (a, b, c, d) = (5.0, 0.25, 0.9, 1.1);
        let t: Vec<f64> = (0..=60).map(|k| 10.0 + 0.5 * k as f64).collect();
        // Deterministic multiplicative noise of up to ±20%.
        let y: Vec<f64> = t
            .iter()
            .enumerate()
            .map(|(i, &t)| {
                let noise = 1.0 + 0.2 * ((i as f64 * 2.399).sin());
                noise * a * (-b * t).exp() * (c * t + d).sin().powi(2)
            })
            .collect();
        let fit = fit_envelope(&t, &y, 0.1).unwrap();
        assert!((fit.b / b - 1.0).abs() < 0.05, "{fit:?}");
        assert!((fit.c - c).abs() < 0.02, "{fit:?}");
    }

    #[test]
    fn envelope_rejects_growth() {
        let t: Vec<f64> = (0..30).map(|k| k as f64).collect();
        let y: Vec<f64> = t
            .iter()
            .map(|&t| (0.2 * t).exp() * (t + 0.3).sin().powi(2))
            .collect();
        assert!(fit_envelope(&t, &y, 0.1).is_err());
    }

    #[test]
    fn lorentzian_recovers_k() {
        let ratio = 1.05;
        let k = 0.678;
        let h = eta_half(k, ratio);
        let eta: Vec<f64> = (-20..=20).map(|i| 0.005 * i as f64).collect();
        let e: Vec<f64> = eta.iter().map(|&x| lorentz_model(x, h, 10.0)).collect();
        let fit = fit_lorentzian(&eta, &e, 10.0, ratio, 2.0).unwrap();
        assert!((fit.k - k).abs() < 1e-6, "{fit:?}");
        assert!(fit.points < eta.len());
    }

    #[test]
    fn half_width_numbers() {
        assert!((eta_half(0.678, 1.05) - 0.048).abs() < 5e-4);
        assert!((eta_half(0.679, 1.10) - 0.038).abs() < 5e-4);
        let ten = tolerable_eta(0.048, 0.1, 10.0);
        let one = tolerable_eta(0.048, 0.1, 1.0);
        assert!((ten - 0.0048).abs() < 1e-4);
        assert!((one / ten - 3.3).abs() < 0.05);
    }

    #[test]
    fn tolerable_eta_inverts_the_model() {
        let h = 0.04;
        let x = tolerable_eta(h, 0.3, 10.0);
        assert!((lorentz_model(x, h, 10.0) - 0.3).abs() < 1e-12);
    }

    #[test]
    fn lm_fits_exponential() {
        let t: Vec<f64> = (0..20).map(|k| 0.1 * k as f64).collect();
        let y: Vec<f64> = t.iter().map(|&t| 2.0 * (-1.5 * t).exp()).collect();
        let fit = levenberg_marquardt(
            |p| {
                t.iter()
                    .zip(&y)
                    .map(|(t, y)| p[0] * (-p[1] * t).exp() - y)
                    .collect()
            },
            &[1.0, 1.0],
            200,
        )
        .unwrap();
        assert!((fit.params[0] - 2.0).abs() < 1e-8 && (fit.params[1] - 1.5).abs() < 1e-8);
    }

    #[test]
    fn regression_slope() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 0.3 * v - 2.0).collect();
        let (s, i) = linear_regression(&x, &y).unwrap();
        assert!((s - 0.3).abs() < 1e-14 && (i + 2.0).abs() < 1e-14);
    }
}
