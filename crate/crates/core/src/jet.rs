//! Second-order forward-mode differentiation in time.
//!
//! A `Jet` carries a value with its first and second time derivatives; the
//! arithmetic below propagates them exactly through the closed-form protocol
//! reconstruction.

use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub v: f64,
    pub d1: f64,
    pub d2: f64,
}

impl Jet {
    pub const fn new(v: f64, d1: f64, d2: f64) -> Self {
        Self { v, d1, d2 }
    }

    pub const fn constant(v: f64) -> Self {
        Self {
            v,
            d1: 0.0,
            d2: 0.0,
        }
    }

    /// Applies a scalar function given its value and first two derivatives at `self.v`.
    fn chain(self, g: f64, g1: f64, g2: f64) -> Self {
        Self {
            v: g,
            d1: g1 * self.d1,
            d2: g1 * self.d2 + g2 * self.d1 * self.d1,
        }
    }

    pub fn powf(self, n: f64) -> Self {
        let x = self.v;
        let g = x.powf(n);
        self.chain(g, n * g / x, n * (n - 1.0) * g / (x * x))
    }

    pub fn powi(self, n: i32) -> Self {
        let x = self.v;
        let g = x.powi(n);
        let nf = n as f64;
        self.chain(g, nf * x.powi(n - 1), nf * (nf - 1.0) * x.powi(n - 2))
    }

    pub fn cbrt(self) -> Self {
        let g = self.v.cbrt();
        let x = self.v;
        self.chain(g, g / (3.0 * x), -2.0 * g / (9.0 * x * x))
    }

    pub fn recip(self) -> Self {
        let x = self.v;
        let g = 1.0 / x;
        self.chain(g, -g * g, 2.0 * g * g * g)
    }

    pub fn scale(self, k: f64) -> Self {
        Self::new(k * self.v, k * self.d1, k * self.d2)
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        Jet::new(self.v + o.v, self.d1 + o.d1, self.d2 + o.d2)
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        Jet::new(self.v - o.v, self.d1 - o.d1, self.d2 - o.d2)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        Jet::new(-self.v, -self.d1, -self.d2)
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        Jet::new(
            self.v * o.v,
            self.d1 * o.v + self.v * o.d1,
            self.d2 * o.v + 2.0 * self.d1 * o.d1 + self.v * o.d2,
        )
    }
}

impl Div for Jet {
    type Output = Jet;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, o: Jet) -> Jet {
        self * o.recip()
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(self, k: f64) -> Jet {
        Jet::new(self.v + k, self.d1, self.d2)
    }
}

impl Sub<f64> for Jet {
    type Output = Jet;
    fn sub(self, k: f64) -> Jet {
        Jet::new(self.v - k, self.d1, self.d2)
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, k: f64) -> Jet {
        self.scale(k)
    }
}

impl Mul<Jet> for f64 {
    type Output = Jet;
    fn mul(self, j: Jet) -> Jet {
        j.scale(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t_jet(t: f64) -> Jet {
        Jet::new(t, 1.0, 0.0)
    }

    fn close(a: Jet, b: [f64; 3]) {
        for (x, y) in [a.v, a.d1, a.d2].iter().zip(b) {
            assert!((x - y).abs() <= 1e-12 * y.abs().max(1.0), "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn polynomial_and_quotient() {
        let t = 1.3;
        let x = t_jet(t);
        close(x * x * x, [t.powi(3), 3.0 * t * t, 6.0 * t]);
        close(
            (x + 1.0) / x,
            [1.0 + 1.0 / t, -1.0 / (t * t), 2.0 / t.powi(3)],
        );
    }

    #[test]
    fn powers_and_roots() {
        let t: f64 = 2.1;
        let x = t_jet(t);
        close(
            x.cbrt(),
            [
                t.cbrt(),
                t.powf(-2.0 / 3.0) / 3.0,
                -2.0 / 9.0 * t.powf(-5.0 / 3.0),
            ],
        );
        close(
            x.powi(-4),
            [t.powi(-4), -4.0 * t.powi(-5), 20.0 * t.powi(-6)],
        );
        close(
            x.powf(2.5),
            [t.powf(2.5), 2.5 * t.powf(1.5), 3.75 * t.powf(0.5)],
        );
    }

    #[test]
    fn nested_chain() {
        // sin is not provided; check a composite rational map against hand derivatives.
        let t = 0.7;
        let x = Jet::new(t * t, 2.0 * t, 2.0); // x = t²
        let y = (x + 1.0).recip(); // 1/(1+t²)
        let d1 = -2.0 * t / (1.0 + t * t).powi(2);
        let d2 = (6.0 * t * t - 2.0) / (1.0 + t * t).powi(3);
        close(y, [1.0 / (1.0 + t * t), d1, d2]);
    }
}
