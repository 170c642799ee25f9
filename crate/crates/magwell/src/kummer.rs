//! Exact one-well eigenfunction outside the well as a Kummer-type integral,
//! φ(r) = C(h) r^γ ∫₀^∞ e^{−(b1/4h)(1+2t)r²} t^{δ−1}(1+t)^{γ−δ} dt,
//! and the normalization constant C(h).
//!
//! Everything is kept in logarithms: r^γ and e^{−b1r²/4h} over- and
//! underflow separately long before φ does.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::asymptotics::PhaseData;
use crate::error::{Error, Result};
use crate::profile::{MagneticProfile, WellGeometry};
use crate::quad::{self, Tolerance};
use crate::radial::RadialGroundState;

/// Drop the tail once the integrand is this far (in ln) below its peak.
const LN_CUTOFF: f64 = 45.0;

const TOL: Tolerance = Tolerance { abs: 1e-15, rel: 1e-14, max_intervals: 4000 };

/// γ = |M|/h and δ = (b1h − μ)/(2hb1) for eigenvalue μ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KummerParams {
    pub gamma: f64,
    pub delta: f64,
    pub h: f64,
    pub b1: f64,
}

impl KummerParams {
    pub fn new(h: f64, mu: f64, profile: &MagneticProfile) -> Result<Self> {
        if !(h > 0.0) {
            return Err(Error::domain(format!("h must be positive, got {h}")));
        }
        let b1 = profile.b1();
        let delta = (b1 * h - mu) / (2.0 * h * b1);
        if !(delta > 0.0) {
            return Err(Error::domain(format!("eigenvalue {mu} is not below the exterior level b1 h = {}", b1 * h)));
        }
        Ok(KummerParams { gamma: profile.flux_deficit().abs() / h, delta, h, b1 })
    }

    pub fn from_state(state: &RadialGroundState, profile: &MagneticProfile) -> Result<Self> {
        Self::new(state.h, state.mu, profile)
    }

    /// ρ = b1 r²/(2h).
    pub fn rho(&self, r: f64) -> f64 {
        self.b1 * r * r / (2.0 * self.h)
    }

    /// ln K_j(ρ) with K_j = ∫₀^∞ e^{−ρt} t^{δ+j−1}(1+t)^{γ−δ} dt, the j-th
    /// moment of the base integral.
    pub fn log_moment(&self, j: u32, rho: f64) -> Result<f64> {
        log_kummer_integral(self.gamma + j as f64, self.delta + j as f64, rho)
    }
}

/// ln ∫₀^∞ e^{−ρt} t^{δ−1}(1+t)^{γ−δ} dt, which equals ln(Γ(δ) U(δ, γ+1, ρ)).
///
/// With t = u/ρ the integrand becomes ρ^{−δ} u^{δ−1} exp(−u + (γ−δ) ln(1 + u/ρ)),
/// whose exponential factor peaks at u = max(0, γ − δ − ρ); near u = 0 the
/// further substitution u = v^{1/δ} removes the power singularity.
pub fn log_kummer_integral(gamma: f64, delta: f64, rho: f64) -> Result<f64> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::domain(format!("Kummer integral needs ρ > 0, got {rho}")));
    }
    if !(delta > 0.0 && gamma.is_finite() && delta.is_finite()) {
        return Err(Error::domain(format!("Kummer integral needs δ > 0, got γ = {gamma}, δ = {delta}")));
    }
    let c = gamma - delta;
    let u_peak = (c - rho).max(0.0);
    let g_peak = -u_peak + c * (u_peak / rho).ln_1p();
    // g(u) − g(u_peak), written in the offset w = u − u_peak so that it stays
    // accurate near a peak at large u.
    let g = |u: f64| {
        let w = u - u_peak;
        -w + c * (w / (rho + u_peak)).ln_1p()
    };

    let mut u_hi = u_peak + 1.0;
    while g(u_hi) > -LN_CUTOFF {
        u_hi = u_peak + 2.0 * (u_hi - u_peak);
        if !u_hi.is_finite() {
            return Err(Error::Quadrature("Kummer integrand does not decay".into()));
        }
    }
    let wrap = |e: Error| Error::Quadrature(format!("Kummer integral (γ = {gamma}, δ = {delta}, ρ = {rho}): {e}"));

    // v-variable on u ∈ [0, 1], where it removes the endpoint singularity;
    // u itself beyond, where the peak may be narrow compared to its position.
    let inv = 1.0 / delta;
    let u_split = u_hi.min(1.0);
    let mut breaks = vec![0.0];
    if u_peak > 0.0 && u_peak < u_split {
        breaks.push(u_peak.powf(delta));
    }
    breaks.push(u_split.powf(delta));
    let mut total = quad::adaptive_with_breaks(|v: f64| g(v.powf(inv)).exp(), &breaks, TOL).map_err(wrap)?;
    if u_hi > u_split {
        let width = c.max(1.0).sqrt();
        let mut breaks = vec![u_split];
        for k in [-4.0, 0.0, 4.0] {
            let u = u_peak + k * width;
            if u > u_split && u < u_hi {
                breaks.push(u);
            }
        }
        breaks.push(u_hi);
        let outer = quad::adaptive_with_breaks(|u: f64| delta * u.powf(delta - 1.0) * g(u).exp(), &breaks, TOL)
            .map_err(wrap)?;
        total.value += outer.value;
    }
    Ok(g_peak + total.value.ln() - delta * rho.ln() - delta.ln())
}

/// The exterior representation with its normalization fixed at r = L/2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExteriorSolution {
    pub params: KummerParams,
    /// ln C(h).
    pub log_c: f64,
    /// Flux deficit M, needed for α(r) = M + b1r²/2.
    pub m: f64,
    /// The representation holds for r ≥ a.
    pub a: f64,
}

/// ln φ and φ′/φ at one radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExteriorValue {
    pub ln_phi: f64,
    pub log_derivative: f64,
}

impl ExteriorValue {
    /// (φ, φ′); may underflow to zero for small h.
    pub fn value(&self) -> (f64, f64) {
        let v = self.ln_phi.exp();
        (v, v * self.log_derivative)
    }
}

/// ln C(h) = ln φ(L/2) − γ ln(L/2) + ρ/2 − ln K₀(ρ) at ρ = b1L²/(8h).
pub fn normalization_c(params: &KummerParams, geometry: &WellGeometry, ln_phi_mid: f64) -> Result<f64> {
    let half = 0.5 * geometry.l;
    let rho = params.rho(half);
    Ok(ln_phi_mid - params.gamma * half.ln() + 0.5 * rho - params.log_moment(0, rho)?)
}

impl ExteriorSolution {
    pub fn new(
        params: KummerParams,
        profile: &MagneticProfile,
        geometry: &WellGeometry,
        ln_phi_mid: f64,
    ) -> Result<Self> {
        Ok(ExteriorSolution {
            params,
            log_c: normalization_c(&params, geometry, ln_phi_mid)?,
            m: profile.flux_deficit(),
            a: profile.a(),
        })
    }

    /// Normalized against a radial ground state at the midpoint r = L/2.
    pub fn from_state(state: &RadialGroundState, profile: &MagneticProfile, geometry: &WellGeometry) -> Result<Self> {
        let params = KummerParams::from_state(state, profile)?;
        let (ln_phi_mid, _) = state.log_value(0.5 * geometry.l)?;
        Self::new(params, profile, geometry, ln_phi_mid)
    }

    fn check_radius(&self, r: f64) -> Result<()> {
        if !(r >= self.a) || !r.is_finite() {
            return Err(Error::domain(format!("exterior representation needs r ≥ a = {}, got {r}", self.a)));
        }
        Ok(())
    }

    /// φ(r) = C r^γ e^{−ρ/2} K₀(ρ) and φ′/φ = γ/r − (b1r/2h)(1 + 2K₁/K₀).
    pub fn exterior_value(&self, r: f64) -> Result<ExteriorValue> {
        self.check_radius(r)?;
        let p = &self.params;
        let rho = p.rho(r);
        let k0 = p.log_moment(0, rho)?;
        let k1 = p.log_moment(1, rho)?;
        let ln_phi = self.log_c + p.gamma * r.ln() - 0.5 * rho + k0;
        let log_derivative = p.gamma / r - p.b1 * r / (2.0 * p.h) * (1.0 + 2.0 * (k1 - k0).exp());
        Ok(ExteriorValue { ln_phi, log_derivative })
    }

    /// Relative residual of −h²(φ″ + φ′/r) + (α/r)²φ − μφ, divided by φ and
    /// by the size of the potential term (α/r)².
    pub fn ode_residual(&self, r: f64) -> Result<f64> {
        self.check_radius(r)?;
        let p = &self.params;
        let rho = p.rho(r);
        let k0 = p.log_moment(0, rho)?;
        let q1 = (p.log_moment(1, rho)? - k0).exp();
        let q2 = (p.log_moment(2, rho)? - k0).exp();
        let s = p.b1 / p.h;
        let g1 = p.gamma / r - 0.5 * s * r - s * r * q1;
        // d(K₁/K₀)/dr = (dρ/dr)(−K₂/K₀ + (K₁/K₀)²), dρ/dr = b1r/h.
        let dq = s * r * (q1 * q1 - q2);
        let g2 = -p.gamma / (r * r) - 0.5 * s - s * q1 - s * r * dq;
        let alpha = self.m + 0.5 * p.b1 * r * r;
        let potential = (alpha / r).powi(2);
        let mu = p.b1 * p.h * (1.0 - 2.0 * p.delta);
        let lhs = -p.h * p.h * (g2 + g1 * g1 + g1 / r) + potential - mu;
        Ok(lhs.abs() / potential.max(mu))
    }
}

/// Leading-order ln C(h):
/// −½ln h + ln a0 − Φℓ(L/2)/h + b1L²/(16h) − ln Γ(δ0) − δ0 ln h
/// − (|M|/h) ln(L/2) + δ0 ln(b1L²/8 − |M|).
pub fn c_asymptotic(h: f64, a0_mid: f64, data: &PhaseData, phi0: f64) -> Result<f64> {
    let gap = data.scale() - data.m_abs;
    if !(gap > 0.0) {
        return Err(Error::domain("b1L²/8 − |M| must be positive"));
    }
    if !(a0_mid > 0.0) {
        return Err(Error::domain(format!("midpoint amplitude must be positive, got {a0_mid}")));
    }
    let d = data.delta0;
    Ok(-0.5 * h.ln() + a0_mid.ln() - phi0 / h + data.b1 * data.l * data.l / (16.0 * h)
        - ln_gamma(d)
        - d * h.ln()
        - data.m_abs / h * (0.5 * data.l).ln()
        + d * gap.ln())
}
