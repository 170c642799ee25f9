//! Closed-form objects of the splitting asymptotics: the complex phase ψ,
//! its critical point i z₋(s), the reduced phase F(s), and the constants
//! I, c0, c entering the leading-order gap.
//!
//! Notation: s = (s1, s2) ∈ ℝ₊², c(s) = 1 + s1 + s2, and
//! ψ(s, y) = (b1L²/8) c(s)(1 + y²) + i(b1L²/4) y − 2|M| ln(1 + iy).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma, ln_gamma};

use crate::error::{Error, Result};
use crate::logspace::LogComplex;
use crate::profile::{FluxData, MagneticProfile, WellGeometry};
use crate::quad::{self, Tolerance};
use crate::wkb;

/// Geometry and flux data needed by the phase functions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseData {
    pub b0: f64,
    pub b1: f64,
    pub l: f64,
    /// |M|.
    pub m_abs: f64,
    pub n: f64,
    pub delta0: f64,
}

impl PhaseData {
    pub fn new(profile: &MagneticProfile, geometry: &WellGeometry) -> Result<Self> {
        let flux = FluxData::new(profile, geometry)?;
        Ok(PhaseData {
            b0: profile.b0(),
            b1: profile.b1(),
            l: geometry.l,
            m_abs: flux.m.abs(),
            n: flux.n,
            delta0: flux.delta0,
        })
    }

    /// b1 L²/8.
    pub fn scale(&self) -> f64 {
        self.b1 * self.l * self.l / 8.0
    }

    pub fn c(&self, s: [f64; 2]) -> f64 {
        1.0 + s[0] + s[1]
    }

    /// The smaller root z₋(s) of z² − ((c−1)/c) z + (N−1)/c.
    pub fn z_minus(&self, s: [f64; 2]) -> f64 {
        let c = self.c(s);
        let p = (c - 1.0) / c;
        0.5 * p - 0.5 * (p * p + 4.0 * (1.0 - self.n) / c).sqrt()
    }

    /// ∂z₋/∂s_j (the same for j = 1, 2), by implicit differentiation.
    pub fn dz_minus(&self, s: [f64; 2]) -> f64 {
        let c = self.c(s);
        let z = self.z_minus(s);
        (z + self.n - 1.0) / (c * c * (2.0 * z - (c - 1.0) / c))
    }

    pub fn psi(&self, s: [f64; 2], y: Complex64) -> Result<Complex64> {
        let w = Complex64::new(1.0, 0.0) + Complex64::i() * y;
        if w.im == 0.0 && w.re <= 0.0 {
            return Err(Error::domain(format!("ψ evaluated on the branch cut at y = {y}")));
        }
        let e = self.scale();
        Ok(e * self.c(s) * (1.0 + y * y) + Complex64::i() * (2.0 * e) * y - 2.0 * self.m_abs * w.ln())
    }

    /// ψ(s, y + i z₋(s)) − ψ(s, i z₋(s)) for real y, computed without
    /// cancellation.
    pub fn psi_shifted(&self, s: [f64; 2], y: f64) -> Complex64 {
        let e = self.scale();
        let z = self.z_minus(s);
        let c = self.c(s);
        let quad = Complex64::new(y * y, 2.0 * y * z) * (e * c);
        let lin = Complex64::new(0.0, 2.0 * e * y);
        let log = ln_1p(Complex64::new(0.0, y / (1.0 - z)));
        quad + lin - 2.0 * self.m_abs * log
    }

    /// ψ(s, i z₋(s)), which is real.
    pub fn psi_at_critical(&self, s: [f64; 2]) -> f64 {
        let e = self.scale();
        let z = self.z_minus(s);
        e * self.c(s) * (1.0 - z * z) - 2.0 * e * z - 2.0 * self.m_abs * (1.0 - z).ln()
    }

    pub fn d_psi(&self, s: [f64; 2], y: Complex64) -> Complex64 {
        let e = self.scale();
        let w = Complex64::new(1.0, 0.0) + Complex64::i() * y;
        2.0 * e * self.c(s) * y + Complex64::new(0.0, 2.0 * e) - Complex64::i() * (2.0 * self.m_abs) / w
    }

    /// ∂²_y ψ = (b1L²/4)(c − N/(1 + iy)²).
    pub fn d2_psi(&self, s: [f64; 2], y: Complex64) -> Complex64 {
        let e = self.scale();
        let w = Complex64::new(1.0, 0.0) + Complex64::i() * y;
        2.0 * e * self.c(s) - 2.0 * self.m_abs / (w * w)
    }

    /// ω(s, y) = (N/(1 + y²) − 1)(1 − iy) − 2 s1.
    pub fn omega(&self, s: [f64; 2], y: Complex64) -> Result<Complex64> {
        let q = 1.0 + y * y;
        if q.norm() < 1e-300 {
            return Err(Error::domain(format!("ω has a pole at y = {y}")));
        }
        Ok((self.n / q - 1.0) * (Complex64::new(1.0, 0.0) - Complex64::i() * y) - 2.0 * s[0])
    }

    /// ω(s, i z₋(s)) = (N/(1 − z²) − 1)(1 + z) − 2 s1.
    pub fn omega_at_critical(&self, s: [f64; 2]) -> f64 {
        let z = self.z_minus(s);
        (self.n / (1.0 - z * z) - 1.0) * (1.0 + z) - 2.0 * s[0]
    }

    /// F(s) = ψ(s, i z₋(s)) − |M| ln((1+s1)(1+s2)) via the complex phase;
    /// errors if the discarded imaginary part is not negligible.
    pub fn f(&self, s: [f64; 2]) -> Result<f64> {
        let z = self.z_minus(s);
        let v = self.psi(s, Complex64::new(0.0, z))?;
        if v.im.abs() > 1e-13 * v.re.abs().max(1.0) {
            return Err(Error::internal(format!("F(s) has imaginary part {}", v.im)));
        }
        Ok(v.re - self.m_abs * ((1.0 + s[0]) * (1.0 + s[1])).ln())
    }

    /// The same value from the real closed form
    /// (b1L²/4)(c(1−z²)/2 − z − N ln(1−z)) − |M| ln((1+s1)(1+s2)).
    pub fn f_closed(&self, s: [f64; 2]) -> f64 {
        let z = self.z_minus(s);
        let c = self.c(s);
        2.0 * self.scale() * (0.5 * c * (1.0 - z * z) - z - self.n * (1.0 - z).ln())
            - self.m_abs * ((1.0 + s[0]) * (1.0 + s[1])).ln()
    }

    pub fn grad_f(&self, s: [f64; 2]) -> [f64; 2] {
        let z = self.z_minus(s);
        let common = self.scale() * (1.0 - z * z);
        [common - self.m_abs / (1.0 + s[0]), common - self.m_abs / (1.0 + s[1])]
    }

    pub fn hess_f(&self, s: [f64; 2]) -> [[f64; 2]; 2] {
        let z = self.z_minus(s);
        let off = -2.0 * self.scale() * z * self.dz_minus(s);
        [[off + self.m_abs / (1.0 + s[0]).powi(2), off], [off, off + self.m_abs / (1.0 + s[1]).powi(2)]]
    }
}

/// ln(1 + w), accurate for small |w|.
fn ln_1p(w: Complex64) -> Complex64 {
    if w.norm() < 1e-4 {
        // Σ (−1)^{k+1} w^k / k, enough terms for |w| < 1e-4.
        let mut term = w;
        let mut sum = w;
        for k in 2..8 {
            term = -term * w;
            sum += term / k as f64;
        }
        sum
    } else {
        (Complex64::new(1.0, 0.0) + w).ln()
    }
}

pub fn z_minus(s: [f64; 2], n: f64) -> Result<f64> {
    check_n(n)?;
    let data = PhaseData { b0: 1.0, b1: 1.0, l: 1.0, m_abs: 0.0, n, delta0: 0.0 };
    Ok(data.z_minus(s))
}

/// ∂_{s_j} z₋(0) = (1 + √(1−N))/2.
pub fn dz_minus_at_zero(n: f64) -> Result<f64> {
    check_n(n)?;
    Ok(0.5 * (1.0 + (1.0 - n).sqrt()))
}

fn check_n(n: f64) -> Result<()> {
    if !(n > 0.0 && n < 1.0) {
        return Err(Error::domain(format!("relative flux N must lie in (0, 1), got {n}")));
    }
    Ok(())
}

/// I = (b1L²/4)((N−1)/2 + √(1−N) − N ln(1+√(1−N))).
pub fn constant_i_closed(data: &PhaseData) -> f64 {
    let q = (1.0 - data.n).sqrt();
    2.0 * data.scale() * (0.5 * (data.n - 1.0) + q - data.n * (1.0 + q).ln())
}

/// I as an Agmon-type integral:
/// ∫_{L²/8}^{(L²/8)(1+√(1−N))²} α(v)/v dv − 2α at v = L²/8.
pub fn constant_i_integral(profile: &MagneticProfile, geometry: &WellGeometry, n: f64) -> Result<f64> {
    let lo = geometry.l * geometry.l / 8.0;
    let hi = lo * (1.0 + (1.0 - n).sqrt()).powi(2);
    let tail = quad::integrate(|v| profile.cumulative_flux(v) / v, lo, hi, Tolerance::new(1e-14, 1e-14))?;
    Ok(tail - 2.0 * profile.cumulative_flux(lo))
}

/// I in closed form, cross-checked against the integral form to 1e-9.
pub fn constant_i(profile: &MagneticProfile, geometry: &WellGeometry, data: &PhaseData) -> Result<f64> {
    let closed = constant_i_closed(data);
    let integral = constant_i_integral(profile, geometry, data.n)?;
    if (closed - integral).abs() > 1e-9 * closed.abs().max(1e-300) {
        return Err(Error::internal(format!("closed and integral forms of I disagree: {closed} vs {integral}")));
    }
    Ok(closed)
}

/// c0 = −(8πΓ(δ0)/(b1L²))(1−N)^{−1/4}(b1L²/8)^{−δ0}(1+√(1−N))^{1−2δ0}, the
/// value of −√(2π/∂²_yψ)·∫(s1s2)^{δ0−1}(√(1−N)(s1+s2) + 2s1)e^{−½Hess F(0)(s,s)} ds.
pub fn constant_c0(data: &PhaseData) -> f64 {
    let q = (1.0 - data.n).sqrt();
    let d = data.delta0;
    -(8.0 * std::f64::consts::PI * gamma(d) / (data.b1 * data.l * data.l))
        * (1.0 - data.n).powf(-0.25)
        * data.scale().powf(-d)
        * (1.0 + q).powf(1.0 - 2.0 * d)
}

/// c = 2 × |prefactor of w_h|, assuming 2π a0(midpoint)² = 1:
/// (2/Γ(δ0))(b1L²/8)^{δ0}((1−N)/(1+√(1−N)))^{2δ0}(1−N)^{−1/4}(1+√(1−N)).
pub fn constant_c(data: &PhaseData) -> f64 {
    let q = (1.0 - data.n).sqrt();
    let d = data.delta0;
    2.0 / gamma(d)
        * data.scale().powf(d)
        * ((1.0 - data.n) / (1.0 + q)).powf(2.0 * d)
        * (1.0 - data.n).powf(-0.25)
        * (1.0 + q)
}

/// Everything needed for the closed-form gap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictionConstants {
    pub b0: f64,
    pub b1: f64,
    pub m: f64,
    pub n: f64,
    pub delta0: f64,
    pub phi0: f64,
    pub s0: f64,
    pub s: f64,
    pub i: f64,
    pub f0: f64,
    pub c0: f64,
    pub c: f64,
}

impl PredictionConstants {
    pub fn compute(profile: &MagneticProfile, geometry: &WellGeometry) -> Result<Self> {
        let data = PhaseData::new(profile, geometry)?;
        let i = constant_i(profile, geometry, &data)?;
        let exponent = wkb::exponent_s(profile, geometry, i)?;
        let s0 = wkb::agmon_s0(profile, geometry)?;
        let f0 = data.f([0.0, 0.0])?;
        if (f0 - (i + data.scale())).abs() > 1e-10 * f0 {
            return Err(Error::internal(format!("F(0) = {f0} differs from I + b1L²/8")));
        }
        let exponent_gap = 1.0 - data.delta0;
        let exponent_theorem = 0.5 + data.b0 / (2.0 * data.b1);
        if (exponent_gap - exponent_theorem).abs() > 4.0 * f64::EPSILON {
            return Err(Error::internal("power-of-h identity 1 − δ0 = 1/2 + b0/(2b1) fails"));
        }
        Ok(PredictionConstants {
            b0: data.b0,
            b1: data.b1,
            m: profile.flux_deficit(),
            n: data.n,
            delta0: data.delta0,
            phi0: exponent.phi0,
            s0,
            s: exponent.s,
            i,
            f0,
            c0: constant_c0(&data),
            c: constant_c(&data),
        })
    }

    /// ln of c e^{−S/h} h^{1/2 + b0/(2b1)}.
    pub fn log_gap(&self, h: f64) -> f64 {
        self.c.ln() - self.s / h + (0.5 + self.b0 / (2.0 * self.b1)) * h.ln()
    }

    pub fn gap_prediction(&self, h: f64) -> LogComplex {
        LogComplex { ln_abs: self.log_gap(h), arg: 0.0 }
    }

    /// −(c/2) e^{−S/h} h^{1−δ0}.
    pub fn wh_prediction(&self, h: f64) -> LogComplex {
        LogComplex {
            ln_abs: (0.5 * self.c).ln() - self.s / h + (1.0 - self.delta0) * h.ln(),
            arg: std::f64::consts::PI,
        }
    }

    /// 2S0 > S.
    pub fn separation_holds(&self) -> bool {
        2.0 * self.s0 > self.s
    }
}

/// ln Γ(x) for x > 0.
pub fn ln_gamma_fn(x: f64) -> f64 {
    ln_gamma(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data() -> PhaseData {
        let p = MagneticProfile::builtin(1.0, 2.0, 1.0, 1.0).unwrap();
        let g = WellGeometry::new(5.0, &p).unwrap();
        PhaseData::new(&p, &g).unwrap()
    }

    #[test]
    fn critical_point_at_origin() {
        let d = data();
        assert!((d.z_minus([0.0, 0.0]) + (1.0 - d.n).sqrt()).abs() < 1e-15);
        assert!((dz_minus_at_zero(0.36).unwrap() - 0.9).abs() < 1e-15);
        assert!(z_minus([0.0, 0.0], 1.0).is_err());
    }

    #[test]
    fn critical_point_solves_quadratic() {
        let z = z_minus([1.0, 1.0], 0.2).unwrap();
        assert!((z * z - (2.0 / 3.0) * z - 0.8 / 3.0).abs() < 1e-15);
        assert!(z < 0.0 && z > -1.0 / 3.0);
    }

    #[test]
    fn derivative_of_critical_point() {
        let d = data();
        for s in [[0.3, 1.2], [2.0, 0.5], [1e-3, 0.0]] {
            let eps = 1e-6;
            let fd = (d.z_minus([s[0] + eps, s[1]]) - d.z_minus([s[0] - eps, s[1]])) / (2.0 * eps);
            assert!((fd - d.dz_minus(s)).abs() < 1e-8, "{s:?}: {fd} vs {}", d.dz_minus(s));
            assert!(d.dz_minus(s) > 0.0);
        }
        assert!((d.dz_minus([0.0, 0.0]) - dz_minus_at_zero(d.n).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn psi_is_stationary_at_critical_point() {
        let d = data();
        for s in [[0.0, 0.0], [1.0, 0.5], [3.0, 2.0]] {
            let y = Complex64::new(0.0, d.z_minus(s));
            assert!(d.d_psi(s, y).norm() < 1e-12);
            assert!(d.d2_psi(s, y).im.abs() < 1e-12);
            let v = d.psi(s, y).unwrap();
            assert!((v.re - d.psi_at_critical(s)).abs() < 1e-12);
        }
    }

    #[test]
    fn shifted_phase_matches_direct_difference() {
        let d = data();
        let s = [0.4, 0.7];
        let z = d.z_minus(s);
        for y in [1e-6, 0.01, 0.5, 3.0] {
            let direct = d.psi(s, Complex64::new(y, z)).unwrap() - d.psi(s, Complex64::new(0.0, z)).unwrap();
            assert!((direct - d.psi_shifted(s, y)).norm() < 1e-12 * (1.0 + direct.norm()));
        }
    }

    #[test]
    fn omega_vanishes_at_origin_critical_point() {
        let d = data();
        let z = d.z_minus([0.0, 0.0]);
        assert!(d.omega([0.0, 0.0], Complex64::new(0.0, z)).unwrap().norm() < 1e-15);
        assert!(d.omega_at_critical([0.0, 0.0]).abs() < 1e-15);
        assert!(d.omega([0.0, 0.0], Complex64::new(0.0, 1.0)).is_err());
    }

    #[test]
    fn omega_linearisation() {
        let d = data();
        let q = (1.0 - d.n).sqrt();
        let eps = 1e-6;
        for dir in [[1.0, 0.0], [0.0, 1.0], [0.6, 0.8]] {
            let s = [eps * dir[0], eps * dir[1]];
            let lin = -q * (s[0] + s[1]) - 2.0 * s[0];
            assert!((d.omega_at_critical(s) - lin).abs() < 1e-10);
        }
    }

    #[test]
    fn reduced_phase_forms_agree() {
        let d = data();
        for s in [[0.0, 0.0], [0.5, 0.1], [2.0, 3.0]] {
            assert!((d.f(s).unwrap() - d.f_closed(s)).abs() < 1e-12);
        }
        assert!((d.f_closed([0.0, 0.0]) - 12.221_852_000_699_084).abs() < 1e-12);
        let g = d.grad_f([0.0, 0.0]);
        assert!(g[0].abs() < 1e-13 && g[1].abs() < 1e-13);
    }

    #[test]
    fn hessian_matches_finite_differences() {
        let d = data();
        let s = [0.3, 0.6];
        let h = d.hess_f(s);
        let eps = 1e-5;
        for j in 0..2 {
            let mut sp = s;
            let mut sm = s;
            sp[j] += eps;
            sm[j] -= eps;
            let gp = d.grad_f(sp);
            let gm = d.grad_f(sm);
            for i in 0..2 {
                let fd = (gp[i] - gm[i]) / (2.0 * eps);
                assert!((fd - h[i][j]).abs() < 1e-7, "H[{i}][{j}]");
            }
        }
        assert!((h[0][1] - (h[0][0] - d.m_abs / 1.3f64.powi(2))).abs() < 1e-12);
    }

    #[test]
    fn i_constant_limits() {
        let mut d = data();
        let base = constant_i_closed(&d);
        assert!((base - 5.971_852_000_699_084).abs() < 1e-12);
        d.n = 1.0 - 1e-16;
        assert!(constant_i_closed(&d).abs() < 1e-6);
        d.n = 1e-16;
        assert!((constant_i_closed(&d) - d.scale()).abs() < 1e-12);
    }

    #[test]
    fn constants_for_reference_configuration() {
        let p = MagneticProfile::builtin(1.0, 2.0, 1.0, 1.0).unwrap();
        let g = WellGeometry::new(5.0, &p).unwrap();
        let k = PredictionConstants::compute(&p, &g).unwrap();
        assert!((k.c0 + 1.636_760_764_743_364_5).abs() < 1e-12);
        assert!((k.c - 1.218_415_241_641_879_6).abs() < 1e-12);
        assert!((k.s - 11.501_456_902_108_742).abs() < 1e-11);
        assert!(k.separation_holds());
        assert!((k.log_gap(0.05) / std::f64::consts::LN_10 + 100.790_362_502_301_17).abs() < 1e-10);
        let w = k.wh_prediction(0.05);
        assert!((w.ln_abs + std::f64::consts::LN_2 - k.log_gap(0.05)).abs() < 1e-12);
    }
}
