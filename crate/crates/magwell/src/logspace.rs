//! Complex numbers stored as (ln|z|, arg z), for quantities like e^{-S/h}
//! that leave the f64 range long before the computation becomes meaningless.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogComplex {
    pub ln_abs: f64,
    pub arg: f64,
}

impl std::ops::Mul for LogComplex {
    type Output = LogComplex;

    fn mul(self, other: LogComplex) -> LogComplex {
        LogComplex { ln_abs: self.ln_abs + other.ln_abs, arg: wrap_angle(self.arg + other.arg) }
    }
}

impl std::ops::Div for LogComplex {
    type Output = LogComplex;

    fn div(self, other: LogComplex) -> LogComplex {
        LogComplex { ln_abs: self.ln_abs - other.ln_abs, arg: wrap_angle(self.arg - other.arg) }
    }
}

impl LogComplex {
    pub const ZERO: LogComplex = LogComplex { ln_abs: f64::NEG_INFINITY, arg: 0.0 };

    /// The number e^{z}.
    pub fn exp_of(z: Complex64) -> Self {
        LogComplex { ln_abs: z.re, arg: wrap_angle(z.im) }
    }

    pub fn from_complex(w: Complex64) -> Self {
        if w.re == 0.0 && w.im == 0.0 {
            return Self::ZERO;
        }
        LogComplex { ln_abs: w.norm().ln(), arg: w.arg() }
    }

    pub fn from_real(x: f64) -> Self {
        Self::from_complex(Complex64::new(x, 0.0))
    }

    pub fn is_zero(&self) -> bool {
        self.ln_abs == f64::NEG_INFINITY
    }

    pub fn log10_abs(&self) -> f64 {
        self.ln_abs / std::f64::consts::LN_10
    }

    /// The principal logarithm ln|z| + i arg z.
    pub fn ln(&self) -> Complex64 {
        Complex64::new(self.ln_abs, self.arg)
    }

    /// Multiply by the positive real e^{s}.
    pub fn scale_ln(self, s: f64) -> LogComplex {
        LogComplex { ln_abs: self.ln_abs + s, arg: self.arg }
    }

    /// z · e^{-reference}, as an ordinary complex number.
    pub fn to_complex_scaled(&self, reference: f64) -> Complex64 {
        if self.is_zero() {
            return Complex64::new(0.0, 0.0);
        }
        Complex64::from_polar((self.ln_abs - reference).exp(), self.arg)
    }

    pub fn to_complex(&self) -> Complex64 {
        self.to_complex_scaled(0.0)
    }

    /// Real part carried in log form: (ln|Re z|, sign of Re z).
    pub fn real_part(&self) -> (f64, f64) {
        let c = self.arg.cos();
        if c == 0.0 || self.is_zero() {
            return (f64::NEG_INFINITY, 0.0);
        }
        (self.ln_abs + c.abs().ln(), c.signum())
    }

    /// Relative distance |z/w - 1|.
    pub fn relative_difference(&self, other: &LogComplex) -> f64 {
        let ratio = *self / *other;
        (ratio.to_complex() - 1.0).norm()
    }
}

fn wrap_angle(a: f64) -> f64 {
    let two_pi = std::f64::consts::TAU;
    let mut r = a % two_pi;
    if r > std::f64::consts::PI {
        r -= two_pi;
    } else if r <= -std::f64::consts::PI {
        r += two_pi;
    }
    r
}

/// Accumulates Σ w_k e^{z_k} without overflow: terms are rescaled by the
/// running maximum of Re z_k and summed with Neumaier compensation.
#[derive(Debug, Clone)]
pub struct LogSum {
    reference: f64,
    sum: Compensated,
}

impl Default for LogSum {
    fn default() -> Self {
        LogSum { reference: f64::NEG_INFINITY, sum: Compensated::default() }
    }
}

impl LogSum {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds weight · e^{log_term}.
    pub fn add(&mut self, log_term: Complex64, weight: f64) {
        if weight == 0.0 || log_term.re == f64::NEG_INFINITY {
            return;
        }
        if log_term.re > self.reference {
            if self.reference.is_finite() {
                let shrink = (self.reference - log_term.re).exp();
                self.sum.scale(shrink);
            }
            self.reference = log_term.re;
        }
        let z = Complex64::from_polar((log_term.re - self.reference).exp(), log_term.im) * weight;
        self.sum.add(z);
    }

    pub fn add_log(&mut self, term: LogComplex, weight: f64) {
        if term.is_zero() {
            return;
        }
        self.add(term.ln(), weight);
    }

    pub fn total(&self) -> LogComplex {
        if !self.reference.is_finite() {
            return LogComplex::ZERO;
        }
        LogComplex::from_complex(self.sum.value()).scale_ln(self.reference)
    }

    /// Largest ln|term| seen so far.
    pub fn reference(&self) -> f64 {
        self.reference
    }
}

#[derive(Debug, Clone, Default)]
struct Compensated {
    re: f64,
    re_c: f64,
    im: f64,
    im_c: f64,
}

impl Compensated {
    fn add(&mut self, z: Complex64) {
        neumaier(&mut self.re, &mut self.re_c, z.re);
        neumaier(&mut self.im, &mut self.im_c, z.im);
    }

    fn scale(&mut self, s: f64) {
        self.re *= s;
        self.re_c *= s;
        self.im *= s;
        self.im_c *= s;
    }

    fn value(&self) -> Complex64 {
        Complex64::new(self.re + self.re_c, self.im + self.im_c)
    }
}

fn neumaier(sum: &mut f64, comp: &mut f64, x: f64) {
    let t = *sum + x;
    if sum.abs() >= x.abs() {
        *comp += (*sum - t) + x;
    } else {
        *comp += (x - t) + *sum;
    }
    *sum = t;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sum_of_tiny_terms() {
        let mut s = LogSum::new();
        for k in 0..10 {
            s.add(Complex64::new(-2000.0 + k as f64, 0.5), 1.0);
        }
        let t = s.total();
        let expected = -2000.0 + ((1..=10).map(|k| ((k - 1) as f64).exp()).sum::<f64>()).ln();
        assert!((t.ln_abs - expected).abs() < 1e-13);
        assert!((t.arg - 0.5).abs() < 1e-13);
    }

    #[test]
    fn cancellation_is_compensated() {
        let mut s = LogSum::new();
        s.add(Complex64::new(0.0, 0.0), 1.0);
        s.add(Complex64::new(-40.0, 0.0), 1.0);
        s.add(Complex64::new(0.0, 0.0), -1.0);
        let t = s.total();
        assert!((t.ln_abs + 40.0).abs() < 1e-12);
    }

    #[test]
    fn relative_difference_of_equal_numbers_is_zero() {
        let z = LogComplex { ln_abs: -900.0, arg: 2.0 };
        assert_eq!(z.relative_difference(&z), 0.0);
    }

    #[test]
    fn real_part_sign() {
        let z = LogComplex::from_complex(Complex64::new(-3.0, 4.0));
        let (ln_re, sign) = z.real_part();
        assert_eq!(sign, -1.0);
        assert!((ln_re - 3.0f64.ln()).abs() < 1e-14);
    }
}
