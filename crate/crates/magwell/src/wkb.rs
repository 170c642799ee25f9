//! WKB phase Φℓ, the Agmon-type exponents S0 and S, and the numerically
//! extracted leading WKB amplitude at the midpoint between the wells.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profile::{MagneticProfile, WellGeometry};
use crate::quad::{self, Tolerance};
use crate::radial::RadialGroundState;

const TOL: Tolerance = Tolerance { abs: 1e-14, rel: 1e-14, max_intervals: 4000 };

/// Evaluates v ↦ ∫₀^v α(w)/w dw, with α(w) = ∫₀^w β: the part inside the
/// well by quadrature once, the affine exterior part in closed form.
#[derive(Debug, Clone)]
pub struct Agmon<'a> {
    profile: &'a MagneticProfile,
    well_part: f64,
}

impl<'a> Agmon<'a> {
    pub fn new(profile: &'a MagneticProfile) -> Result<Self> {
        let ua = profile.edge();
        let well_part = quad::integrate(|v| profile.cumulative_flux(v) / v, 0.0, ua, TOL)?;
        Ok(Agmon { profile, well_part })
    }

    /// ∫₀^upper α(v)/v dv.
    pub fn log_integral(&self, upper: f64) -> Result<f64> {
        let ua = self.profile.edge();
        if upper <= ua {
            return quad::integrate(|v| self.profile.cumulative_flux(v) / v, 0.0, upper, TOL);
        }
        let b1 = self.profile.b1();
        let m = self.profile.flux_deficit();
        Ok(self.well_part + b1 * (upper - ua) + m * (upper / ua).ln())
    }

    /// Φℓ(r) = ½∫₀^{r²/2} α(v)/v dv.
    pub fn phi(&self, r: f64) -> Result<f64> {
        if !(r >= 0.0) {
            return Err(Error::domain(format!("radius must be non-negative, got {r}")));
        }
        Ok(0.5 * self.log_integral(0.5 * r * r)?)
    }
}

pub fn phi_ell(profile: &MagneticProfile, r: f64) -> Result<f64> {
    Agmon::new(profile)?.phi(r)
}

/// S0 = ½∫₀^{(L−a)²/2} α(v)/v dv, the decay exponent of the one-well state
/// at the edge of the other well.
pub fn agmon_s0(profile: &MagneticProfile, geometry: &WellGeometry) -> Result<f64> {
    let d = geometry.l - profile.a();
    Ok(0.5 * Agmon::new(profile)?.log_integral(0.5 * d * d)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Exponent {
    /// Φℓ at the midpoint, r = L/2.
    pub phi0: f64,
    /// S = 2Φℓ(L/2) + I.
    pub s: f64,
    /// S computed from the averaged-flux form ∫₀^{L/2} 2α(r)/r dr + I.
    pub s_disc_form: f64,
}

/// The splitting exponent S from I, in two forms that must agree to 1e-9.
pub fn exponent_s(profile: &MagneticProfile, geometry: &WellGeometry, i: f64) -> Result<Exponent> {
    let half = 0.5 * geometry.l;
    let phi0 = Agmon::new(profile)?.phi(half)?;
    // (πr²)⁻¹∫_{D(x_ℓ,r)} B · r = 2α(r)/r, integrated directly in r.
    let breaks = [0.0, profile.a().min(half), half];
    let disc = quad::adaptive_with_breaks(|r| 2.0 * profile.alpha(r) / r, &breaks, TOL)?.value;
    let s = 2.0 * phi0 + i;
    let s_disc_form = disc + i;
    if (s - s_disc_form).abs() > 1e-9 * s.abs() {
        return Err(Error::internal(format!("two forms of S disagree: {s} vs {s_disc_form}")));
    }
    Ok(Exponent { phi0, s, s_disc_form })
}

/// −2∫₀^{L/2} β(r²/2) ln(2r/L) r dr, an integration-by-parts form of 2Φℓ(L/2).
pub fn log_weighted_flux(profile: &MagneticProfile, geometry: &WellGeometry) -> Result<f64> {
    let half = 0.5 * geometry.l;
    let breaks = [0.0, profile.a().min(half), half];
    let v = quad::adaptive_with_breaks(|r| profile.field(0.5 * r * r) * (r / half).ln() * r, &breaks, TOL)?.value;
    Ok(-2.0 * v)
}

/// Both sides of the sufficient condition for 2S0 > S:
/// ∫_{(L−a)²/2}^{(L²/8)(1+√(1−N))²} α(v)/v dv < 2α at v = L²/8.
pub fn separation_inequality(profile: &MagneticProfile, geometry: &WellGeometry, n: f64) -> Result<(f64, f64)> {
    let agmon = Agmon::new(profile)?;
    let l = geometry.l;
    let lower = 0.5 * (l - profile.a()).powi(2);
    let upper = l * l / 8.0 * (1.0 + (1.0 - n).sqrt()).powi(2);
    let lhs = agmon.log_integral(upper)? - agmon.log_integral(lower)?;
    let rhs = 2.0 * profile.cumulative_flux(l * l / 8.0);
    Ok((lhs, rhs))
}

/// Per-h estimates √h φ(L/2) e^{Φℓ(L/2)/h} of the leading WKB amplitude at the
/// midpoint, and their polynomial extrapolation to h = 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeEstimate {
    pub h: Vec<f64>,
    pub a0: Vec<f64>,
    pub extrapolated: f64,
    /// The per-h sequence is monotone in h.
    pub monotone: bool,
}

impl AmplitudeEstimate {
    /// 2π a0², which equals 1 exactly when the closed-form splitting constant
    /// needs no amplitude correction.
    pub fn two_pi_a0_squared(&self) -> f64 {
        std::f64::consts::TAU * self.extrapolated * self.extrapolated
    }
}

pub fn extract_a0(
    profile: &MagneticProfile,
    geometry: &WellGeometry,
    states: &[RadialGroundState],
) -> Result<AmplitudeEstimate> {
    if states.len() < 3 {
        return Err(Error::domain("amplitude extraction needs at least three states"));
    }
    let phi0 = Agmon::new(profile)?.phi(0.5 * geometry.l)?;
    let mut pairs = Vec::with_capacity(states.len());
    for s in states {
        let (ln_phi, _) = s.log_value(0.5 * geometry.l)?;
        pairs.push((s.h, (0.5 * s.h.ln() + ln_phi + phi0 / s.h).exp()));
    }
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    let h: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let a0: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let inc = a0.windows(2).all(|w| w[1] >= w[0]);
    let dec = a0.windows(2).all(|w| w[1] <= w[0]);
    let extrapolated = neville_at_zero(&h, &a0);
    Ok(AmplitudeEstimate { h, a0, extrapolated, monotone: inc || dec })
}

/// Value at x = 0 of the interpolating polynomial through (x_i, y_i).
pub fn neville_at_zero(x: &[f64], y: &[f64]) -> f64 {
    let mut p = y.to_vec();
    let n = x.len();
    for k in 1..n {
        for i in 0..n - k {
            p[i] = (x[i] * p[i + 1] - x[i + k] * p[i]) / (x[i] - x[i + k]);
        }
    }
    p[0]
}
