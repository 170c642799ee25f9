//! The interaction coefficient w_h, whose modulus is half the tunnelling gap.
//!
//! On the symmetry axis
//! w_h = h² ∫ (2 ∂₁φ_ℓ φ_ℓ + i (k/h) φ_ℓ²) e^{−iθ/h} dx2,
//! and the integrand is of size e^{−2Φℓ(L/2)/h} while w_h itself is of size
//! e^{−S/h}. The cancellation factor e^{−I/h} rules out real-axis
//! quadrature in f64 once h is small, so [`wh_direct`] integrates the same
//! analytic integrand on the line x2 = (L/2)(y + i z0), z0 = −√(1−N), through
//! the saddle. φ_ℓ is continued there by integrating the exterior radial
//! equation in the complex variable ρ = r², starting from the radial ground
//! state at r = L/2.
//!
//! [`rescaled_integral`] evaluates the equivalent three-dimensional integral
//! W_h over (s1, s2, y) built from the Kummer representation, and
//! [`wh_from_integral`] converts it back to w_h.

use num_complex::Complex64;
use rug::Float;
use serde::{Deserialize, Serialize};

use crate::asymptotics::{PhaseData, PredictionConstants};
use crate::error::{Error, Result};
use crate::kummer::{self, KummerParams};
use crate::logspace::{LogComplex, LogSum};
use crate::profile::{AxisGauge, MagneticProfile, WellGeometry};
use crate::quad::{self, GaussLegendre, Tolerance};
use crate::radial::{self, RadialGroundState, RadialSolverConfig};
use crate::wkb::{self, AmplitudeEstimate};

/// Quadrature and continuation settings shared by the w_h pipelines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    /// Gauss–Legendre points per panel.
    pub panel_order: usize,
    /// Lower bound on points per local oscillation period.
    pub osc_points_per_period: f64,
    /// Relative tolerance of the complex continuation of φ.
    pub ode_tol: f64,
    /// Integrands are truncated once they fall e^{ln_cutoff} below their peak.
    pub ln_cutoff: f64,
    /// Relative tolerance of the inner y-integrals of W_h.
    pub y_tol: f64,
    /// Relative tolerance of the s-integrals of W_h.
    pub s_tol: f64,
    /// Axis half-width for the real-axis integral; derived from Φℓ when absent.
    pub x2_halfwidth: Option<f64>,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            panel_order: 20,
            osc_points_per_period: 12.0,
            ode_tol: 1e-13,
            ln_cutoff: 40.0,
            y_tol: 1e-11,
            s_tol: 1e-8,
            x2_halfwidth: None,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if self.panel_order < 8 {
            return Err(Error::Config(format!("panel_order must be at least 8, got {}", self.panel_order)));
        }
        if !(self.osc_points_per_period >= 12.0) {
            return Err(Error::Config("osc_points_per_period must be at least 12".into()));
        }
        for (name, v) in [("ode_tol", self.ode_tol), ("y_tol", self.y_tol), ("s_tol", self.s_tol)] {
            if !(v > 0.0 && v < 1e-3) {
                return Err(Error::Config(format!("{name} must lie in (0, 1e-3), got {v}")));
            }
        }
        if !(self.ln_cutoff >= 20.0) {
            return Err(Error::Config("ln_cutoff must be at least 20".into()));
        }
        if let Some(x) = self.x2_halfwidth {
            if !(x > 0.0) {
                return Err(Error::Config(format!("x2_halfwidth must be positive, got {x}")));
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Complex continuation of the exterior radial equation.

/// Exterior radial equation in ρ = r²: f′ = D/ρ, D′ = Q(ρ) f with
/// Q = ((M + b1ρ/2)²/ρ − μ)/(4h²); D = ρ df/dρ = r φ′/2.
#[derive(Debug, Clone, Copy)]
struct Exterior {
    h: f64,
    mu: f64,
    m: f64,
    b1: f64,
}

impl Exterior {
    fn q(&self, rho: Complex64) -> Complex64 {
        let alpha = self.m + 0.5 * self.b1 * rho;
        (alpha * alpha / rho - self.mu) / (4.0 * self.h * self.h)
    }
}

/// Solution (f, D) carried as e^{ln_scale}·(f, D) with max(|f|, |D|/s) ≈ 1.
#[derive(Debug, Clone, Copy)]
struct OdeState {
    t: f64,
    y: [Complex64; 2],
    ln_scale: f64,
    step: f64,
}

/// A straight path ρ(t) = p0 + p1 t + p2 t² in the complex ρ-plane.
#[derive(Debug, Clone, Copy)]
struct Path {
    p0: Complex64,
    p1: Complex64,
    p2: Complex64,
}

impl Path {
    fn rho(&self, t: f64) -> Complex64 {
        self.p0 + self.p1 * t + self.p2 * (t * t)
    }
    fn drho(&self, t: f64) -> Complex64 {
        self.p1 + self.p2 * (2.0 * t)
    }
}

const DP_C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const DP_A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const DP_E: [f64; 7] = [
    35.0 / 384.0 - 5179.0 / 57600.0,
    0.0,
    500.0 / 1113.0 - 7571.0 / 16695.0,
    125.0 / 192.0 - 393.0 / 640.0,
    -2187.0 / 6784.0 + 92097.0 / 339200.0,
    11.0 / 84.0 - 187.0 / 2100.0,
    -1.0 / 40.0,
];

const MAX_ODE_STEPS: usize = 20_000_000;

impl Exterior {
    fn rhs(&self, path: &Path, t: f64, y: &[Complex64; 2]) -> [Complex64; 2] {
        let rho = path.rho(t);
        let d = path.drho(t);
        [y[1] / rho * d, self.q(rho) * y[0] * d]
    }

    /// Size of D relative to f for a WKB-like solution: |ρ|·√|Q|.
    fn d_scale(&self, path: &Path, t: f64) -> f64 {
        let rho = path.rho(t);
        (rho.norm() * self.q(rho).norm().sqrt()).max(1e-8)
    }

    /// Adaptive Dormand–Prince 5(4) from state.t to t_end.
    fn advance(&self, path: &Path, state: &mut OdeState, t_end: f64, tol: f64) -> Result<()> {
        let mut steps = 0usize;
        while state.t != t_end {
            let dir = (t_end - state.t).signum();
            let remaining = (t_end - state.t).abs();
            let mut dt = state.step.min(remaining);
            let last = dt >= remaining;
            if last {
                dt = remaining;
            }
            let t = state.t;
            let s = self.d_scale(path, t);
            let mut k = [[Complex64::new(0.0, 0.0); 2]; 7];
            k[0] = self.rhs(path, t, &state.y);
            for i in 1..7 {
                let mut y = state.y;
                for (j, kj) in k.iter().enumerate().take(i) {
                    let a = DP_A[i][j] * dt * dir;
                    if a != 0.0 {
                        y[0] += kj[0] * a;
                        y[1] += kj[1] * a;
                    }
                }
                k[i] = self.rhs(path, t + DP_C[i] * dt * dir, &y);
            }
            let mut y_new = state.y;
            let mut err = [Complex64::new(0.0, 0.0); 2];
            for i in 0..7 {
                let b = DP_A[6][i.min(5)] * dt * dir;
                if i < 6 && b != 0.0 {
                    y_new[0] += k[i][0] * b;
                    y_new[1] += k[i][1] * b;
                }
                let e = DP_E[i] * dt * dir;
                err[0] += k[i][0] * e;
                err[1] += k[i][1] * e;
            }
            let size = state.y[0].norm().max(state.y[1].norm() / s).max(y_new[0].norm().max(y_new[1].norm() / s));
            let ratio = err[0].norm().max(err[1].norm() / s) / (tol * size);
            if !ratio.is_finite() {
                return Err(Error::Quadrature("continuation of φ produced non-finite values".into()));
            }
            if ratio <= 1.0 {
                state.t = if last { t_end } else { t + dt * dir };
                state.y = y_new;
                let norm = y_new[0].norm().max(y_new[1].norm() / s);
                if !(1e-30..=1e30).contains(&norm) {
                    state.y = [y_new[0] / norm, y_new[1] / norm];
                    state.ln_scale += norm.ln();
                }
            }
            let grow = if ratio == 0.0 { 5.0 } else { (0.9 * ratio.powf(-0.2)).clamp(0.2, 5.0) };
            state.step = dt * grow;
            steps += 1;
            if steps > MAX_ODE_STEPS {
                return Err(Error::Quadrature("continuation of φ needs too many steps".into()));
            }
        }
        Ok(())
    }
}

/// The axis integrand on the shifted line x2 = (L/2)(y + i z0).
struct ShiftedAxis {
    ext: Exterior,
    gauge: AxisGauge,
    half: f64,
    z0: f64,
    line: Path,
    h: f64,
}

impl ShiftedAxis {
    fn new(
        state: &RadialGroundState,
        profile: &MagneticProfile,
        geometry: &WellGeometry,
        tol: f64,
    ) -> Result<(Self, OdeState)> {
        let flux = crate::profile::FluxData::new(profile, geometry)?;
        let half = 0.5 * geometry.l;
        let rho0 = half * half;
        let ext = Exterior { h: state.h, mu: state.mu, m: flux.m, b1: profile.b1() };
        let z0 = -(1.0 - flux.n).sqrt();
        let (ln_phi, slope) = state.log_value(half)?;
        // Along the real ρ-axis from L²/4 down to N L²/4, where the line
        // through the saddle crosses it.
        let down = Path { p0: Complex64::new(0.0, 0.0), p1: Complex64::new(1.0, 0.0), p2: Complex64::new(0.0, 0.0) };
        let s = ext.d_scale(&down, rho0);
        let d0 = 0.5 * half * slope;
        let norm = 1f64.max(d0.abs() / s);
        let mut st = OdeState {
            t: rho0,
            y: [Complex64::new(1.0 / norm, 0.0), Complex64::new(d0 / norm, 0.0)],
            ln_scale: ln_phi + norm.ln(),
            step: 1e-3 * state.h,
        };
        let rho_n = rho0 * flux.n;
        ext.advance(&down, &mut st, rho_n, tol)?;
        // ρ(y) = ρ0(1 + (y + i z0)²).
        let iz = Complex64::new(0.0, z0);
        let line = Path { p0: rho0 * (1.0 + iz * iz), p1: 2.0 * rho0 * iz, p2: Complex64::new(rho0, 0.0) };
        st.t = 0.0;
        Ok((ShiftedAxis { ext, gauge: AxisGauge::new(profile, geometry), half, z0, line, h: state.h }, st))
    }

    fn x2(&self, y: f64) -> Complex64 {
        Complex64::new(self.half * y, self.half * self.z0)
    }

    /// ln of the integrand h²(2L D f/ρ + i k f²/h) e^{−iθ/h} at the state's y.
    fn log_integrand(&self, st: &OdeState, shift: Complex64) -> Complex64 {
        let y = st.t;
        let rho = self.line.rho(y);
        let x2 = self.x2(y);
        let [f, d] = st.y;
        let l = 2.0 * self.half;
        let pre =
            (2.0 * l * d * f / rho + Complex64::i() * self.gauge.k_complex(x2) * f * f / self.h) * (self.h * self.h);
        let theta = self.gauge.theta_complex(x2);
        pre.ln() + 2.0 * (st.ln_scale + shift) - Complex64::i() * theta / self.h
    }

    /// |d/dy ln(integrand)|, ignoring the slowly varying prefactor; sizes
    /// the quadrature panels.
    fn rate(&self, st: &OdeState) -> f64 {
        let y = st.t;
        let rho = self.line.rho(y);
        let [f, d] = st.y;
        let u = self.x2(y) * (2.0 / self.gauge.l);
        let dtheta = self.gauge.b1 * self.gauge.l * 0.5 + 2.0 * self.gauge.m * (2.0 / self.gauge.l) / (1.0 + u * u);
        let growth = if f.norm() > 0.0 { 2.0 * d / (rho * f) * self.line.drho(y) } else { Complex64::new(0.0, 0.0) };
        (growth - Complex64::i() * dtheta * (self.half / self.h)).norm()
    }

    /// Width in y of the Gaussian-like peak at the saddle.
    fn saddle_width(&self) -> f64 {
        let e8 = self.ext.b1 * self.half * self.half * 0.5;
        let q = -self.z0;
        let n = 1.0 - q * q;
        (self.h / (2.0 * e8 * (1.0 - n / ((1.0 + q) * (1.0 + q))))).sqrt()
    }
}

/// Result of the direct axis quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirectIntegral {
    pub w: LogComplex,
    /// Truncation point in the shifted variable y.
    pub y_max: f64,
    pub panels: usize,
    /// Relative mismatch of φ′/φ between the outward continuation from the
    /// saddle and the inward continuation from the far end, at the point of
    /// largest |φ| on the line where the two are joined.
    pub matching_defect: f64,
}

/// w_h from the axis integral on the line through the saddle, folded onto
/// y ≥ 0 with the conjugation symmetry integrand(−y) = conj(integrand(y)).
pub fn wh_direct(
    state: &RadialGroundState,
    profile: &MagneticProfile,
    geometry: &WellGeometry,
    qcfg: &QuadratureConfig,
) -> Result<DirectIntegral> {
    qcfg.validate()?;
    let (axis, start) = ShiftedAxis::new(state, profile, geometry, qcfg.ode_tol)?;
    let half_line = shifted_half_line(&axis, start, 1.0, qcfg)?;
    let total = half_line.sum.total().scale_ln(axis.half.ln());
    let (ln_re, sign) = total.real_part();
    let w =
        LogComplex { ln_abs: ln_re + std::f64::consts::LN_2, arg: if sign < 0.0 { std::f64::consts::PI } else { 0.0 } };
    Ok(DirectIntegral {
        w,
        y_max: half_line.y_max,
        panels: half_line.panels,
        matching_defect: half_line.matching_defect,
    })
}

/// As [`wh_direct`] but integrating both half-lines separately; the
/// imaginary part of the result measures the symmetry defect.
pub fn wh_direct_unfolded(
    state: &RadialGroundState,
    profile: &MagneticProfile,
    geometry: &WellGeometry,
    qcfg: &QuadratureConfig,
) -> Result<DirectIntegral> {
    qcfg.validate()?;
    let (axis, start) = ShiftedAxis::new(state, profile, geometry, qcfg.ode_tol)?;
    let mut right = shifted_half_line(&axis, start, 1.0, qcfg)?;
    let left = shifted_half_line(&axis, start, -1.0, qcfg)?;
    right.sum.add_log(left.sum.total(), 1.0);
    Ok(DirectIntegral {
        w: right.sum.total().scale_ln(axis.half.ln()),
        y_max: right.y_max.max(left.y_max),
        panels: right.panels + left.panels,
        matching_defect: right.matching_defect.max(left.matching_defect),
    })
}

/// Integral over one half of the saddle line, dir = ±1.
///
/// Integrating the radial equation outward along the line would amplify the
/// solution that grows there, so the continuation runs inward from a far
/// point with a WKB start (any error in it is damped on the way in) and is
/// scaled to the value reached along the real ρ-axis at y = 0.
fn shifted_half_line(axis: &ShiftedAxis, start: OdeState, dir: f64, qcfg: &QuadratureConfig) -> Result<HalfLine> {
    let rule = GaussLegendre::new(qcfg.panel_order);
    let sigma = axis.saddle_width();
    let width = 0.25 * sigma;
    // Allowed |Δ ln integrand| per Gauss–Legendre panel, also bounded by the
    // points-per-period requirement.
    let max_phase = 6f64.min(std::f64::consts::TAU * qcfg.panel_order as f64 / qcfg.osc_points_per_period);
    let mut y_far = sigma * (2.0 * (qcfg.ln_cutoff + 20.0)).sqrt();
    loop {
        let count = (y_far / width).ceil() as usize;
        let far = dir * count as f64 * width;
        let rho = axis.line.rho(far);
        let mut sq = axis.ext.q(rho).sqrt();
        if (sq * axis.line.drho(far) * dir).re < 0.0 {
            sq = -sq;
        }
        let mut st = OdeState { t: far, y: [Complex64::new(1.0, 0.0), -rho * sq], ln_scale: 0.0, step: 1e-3 * width };
        let s = axis.ext.d_scale(&axis.line, far);
        let norm = 1f64.max(st.y[1].norm() / s);
        st.y = [st.y[0] / norm, st.y[1] / norm];
        let mut checkpoints = vec![st; count + 1];
        for k in (0..count).rev() {
            axis.ext.advance(&axis.line, &mut st, dir * k as f64 * width, qcfg.ode_tol)?;
            checkpoints[k] = st;
        }
        // Inward from the far end the decaying solution dominates only down to
        // the maximum of |φ| on the line; closer to the saddle it is the
        // forward continuation that is stable. Match the two there.
        let k_match = (0..=count)
            .max_by(|&i, &j| {
                let g = |c: &OdeState| c.y[0].norm().ln() + c.ln_scale;
                g(&checkpoints[i]).total_cmp(&g(&checkpoints[j]))
            })
            .unwrap_or(0);
        let mut fwd = start;
        fwd.step = 1e-3 * width;
        let mut forward = Vec::with_capacity(k_match + 1);
        forward.push(fwd);
        for k in 1..=k_match {
            axis.ext.advance(&axis.line, &mut fwd, dir * k as f64 * width, qcfg.ode_tol)?;
            forward.push(fwd);
        }
        let back = checkpoints[k_match];
        let shift = fwd.y[0].ln() + fwd.ln_scale - back.y[0].ln() - back.ln_scale;
        let matching_defect = ((back.y[1] / back.y[0]) / (fwd.y[1] / fwd.y[0]) - 1.0).norm();
        let rot = Complex64::from_polar(1.0, shift.im);
        for c in checkpoints.iter_mut().skip(k_match) {
            c.y = [c.y[0] * rot, c.y[1] * rot];
            c.ln_scale += shift.re;
        }
        checkpoints[..=k_match].copy_from_slice(&forward);
        let shift = Complex64::new(0.0, 0.0);

        let mut sum = LogSum::new();
        let mut peak = f64::NEG_INFINITY;
        let mut panel_peaks = Vec::with_capacity(count);
        let mut panels = 0usize;
        for k in 0..count {
            let (lo, hi) = (k as f64 * width, (k + 1) as f64 * width);
            let rate = axis.rate(&checkpoints[k]).max(axis.rate(&checkpoints[k + 1]));
            let pieces = ((rate * width / max_phase).ceil() as usize).max(1);
            let mut nodes: Vec<(f64, f64)> = Vec::with_capacity(pieces * rule.len());
            for p in 0..pieces {
                let a = lo + (hi - lo) * p as f64 / pieces as f64;
                let b = lo + (hi - lo) * (p + 1) as f64 / pieces as f64;
                nodes.extend(rule.mapped(a, b).map(|(y, w)| (dir * y, w)));
            }
            // Integrate each panel in the stable direction of its side.
            let mut st = if k < k_match {
                nodes.sort_by(|u, v| u.0.abs().total_cmp(&v.0.abs()));
                checkpoints[k]
            } else {
                nodes.sort_by(|u, v| v.0.abs().total_cmp(&u.0.abs()));
                checkpoints[k + 1]
            };
            let mut panel_peak = f64::NEG_INFINITY;
            for (y, w) in nodes {
                axis.ext.advance(&axis.line, &mut st, y, qcfg.ode_tol)?;
                let z = axis.log_integrand(&st, shift);
                panel_peak = panel_peak.max(z.re);
                sum.add(z, w);
            }
            panels += pieces;
            peak = peak.max(panel_peak);
            panel_peaks.push(panel_peak);
        }
        let tail = panel_peaks.last().copied().unwrap_or(f64::NEG_INFINITY);
        if tail < peak - qcfg.ln_cutoff {
            return Ok(HalfLine { sum, y_max: count as f64 * width, panels, matching_defect });
        }
        y_far *= 1.5;
        if y_far > 1e3 * sigma {
            return Err(Error::Quadrature("axis integral did not decay".into()));
        }
    }
}

struct HalfLine {
    sum: LogSum,
    y_max: f64,
    panels: usize,
    matching_defect: f64,
}

/// w_h by literal quadrature on the real axis using the interpolated radial
/// ground state. Only meaningful where e^{−I/h} is far above f64 rounding,
/// i.e. for h of order one.
pub fn wh_direct_real_axis(
    state: &RadialGroundState,
    profile: &MagneticProfile,
    geometry: &WellGeometry,
    qcfg: &QuadratureConfig,
) -> Result<LogComplex> {
    qcfg.validate()?;
    let h = state.h;
    let half = 0.5 * geometry.l;
    let x_max = match qcfg.x2_halfwidth {
        Some(x) => x,
        None => axis_truncation(profile, geometry, h, 25.0)?,
    };
    let r_end = half.hypot(x_max);
    if r_end > state.r_max() {
        return Err(Error::OutOfRange { what: "axis truncation radius", value: r_end, lo: 0.0, hi: state.r_max() });
    }
    let gauge = AxisGauge::new(profile, geometry);
    let rule = GaussLegendre::new(qcfg.panel_order);
    let period = 4.0 * std::f64::consts::PI * h / (profile.b1() * geometry.l);
    let width = period * qcfg.panel_order as f64 / qcfg.osc_points_per_period;
    let panels = (x_max / width).ceil().max(1.0) as usize;
    let step = x_max / panels as f64;
    let mut sum = LogSum::new();
    for p in 0..panels {
        for (x2, w) in rule.mapped(p as f64 * step, (p + 1) as f64 * step) {
            let (v, d1) = radial::evaluate_on_axis(state, geometry, x2)?;
            let pre = 2.0 * d1 * v + Complex64::i() * gauge.k(x2) * v * v / h;
            let z = Complex64::from_polar(h * h, -gauge.theta(x2) / h) * pre;
            if z.norm() > 0.0 {
                sum.add(z.ln(), w);
            }
        }
    }
    let (ln_re, sign) = sum.total().real_part();
    Ok(LogComplex { ln_abs: ln_re + std::f64::consts::LN_2, arg: if sign < 0.0 { std::f64::consts::PI } else { 0.0 } })
}

/// X with Φℓ(√(L²/4 + X²)) − Φℓ(L/2) = margin·h.
pub fn axis_truncation(profile: &MagneticProfile, geometry: &WellGeometry, h: f64, margin: f64) -> Result<f64> {
    let agmon = wkb::Agmon::new(profile)?;
    let half = 0.5 * geometry.l;
    let base = agmon.phi(half)?;
    let excess = |x: f64| -> Result<f64> { Ok(agmon.phi(half.hypot(x))? - base - margin * h) };
    let mut hi = 1.0;
    while excess(hi)? < 0.0 {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::internal("axis truncation search diverged"));
        }
    }
    let mut lo = 0.0;
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if excess(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

// ---------------------------------------------------------------------------
// The rescaled integral W_h.

/// J(s) = ∫_ℝ ω(s, y + i z₋(s)) e^{−(ψ(s, y + i z₋) − ψ(s, i z₋))/h} dy, which
/// is real by the conjugation symmetry in y.
pub fn shifted_y_integral(s: [f64; 2], h: f64, data: &PhaseData, tol: f64) -> Result<f64> {
    shifted_y_quadrature(s, h, data, tol, false)
}

/// ∫_ℝ |ω e^{−(ψ − ψ(s, i z₋))/h}| dy on the same line, the natural scale of
/// J(s) when J itself cancels to zero (it does at s = 0).
pub fn shifted_y_l1(s: [f64; 2], h: f64, data: &PhaseData, tol: f64) -> Result<f64> {
    shifted_y_quadrature(s, h, data, tol, true)
}

fn shifted_y_quadrature(s: [f64; 2], h: f64, data: &PhaseData, tol: f64, modulus: bool) -> Result<f64> {
    let z = data.z_minus(s);
    let curv = data.d2_psi(s, Complex64::new(0.0, z)).re;
    let width = (h / curv).sqrt();
    let cutoff = 46.0;
    let mut y_max = 6.0 * width;
    while data.psi_shifted(s, y_max).re / h < cutoff {
        y_max *= 1.5;
    }
    let integrand = |y: f64| -> f64 {
        let w = match data.omega(s, Complex64::new(y, z)) {
            Ok(w) => w,
            Err(_) => return f64::NAN,
        };
        let v = w * (-data.psi_shifted(s, y) / h).exp();
        if modulus {
            v.norm()
        } else {
            v.re
        }
    };
    let breaks: Vec<f64> = (0..=8).map(|k| y_max * k as f64 / 8.0).collect();
    let scale = (2.0 * std::f64::consts::PI * h / curv).sqrt() * (data.omega_at_critical(s).abs() + h);
    let res = quad::adaptive_with_breaks(
        integrand,
        &breaks,
        Tolerance { abs: 1e-3 * tol * scale, rel: tol, max_intervals: 4000 },
    )?;
    Ok(2.0 * res.value)
}

/// Leading Laplace term √(2πh/Re ∂²ψ(s, i z₋)) · ω(s, i z₋) of J(s).
pub fn laplace_y(s: [f64; 2], h: f64, data: &PhaseData) -> f64 {
    let z = data.z_minus(s);
    let curv = data.d2_psi(s, Complex64::new(0.0, z)).re;
    (2.0 * std::f64::consts::PI * h / curv).sqrt() * data.omega_at_critical(s)
}

/// Extent in s of the region where e^{−(F(s) − F(0))/h} exceeds e^{−level}.
fn s_extent(data: &PhaseData, h: f64, level: f64) -> f64 {
    let f0 = data.f_closed([0.0, 0.0]);
    let mut extent: f64 = 0.0;
    for k in 0..=8 {
        let ang = std::f64::consts::FRAC_PI_2 * k as f64 / 8.0;
        let (c, s) = (ang.cos(), ang.sin());
        let g = |t: f64| (data.f_closed([t * c, t * s]) - f0) / h - level;
        let mut hi = 1e-3;
        while g(hi) < 0.0 {
            hi *= 2.0;
        }
        let mut lo = 0.0;
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if g(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        extent = extent.max(hi * c.max(s));
    }
    extent
}

/// W_h = ∭ ω(s, y) m(s1) m(s2) e^{−ψ(s, y)/h} ds dy with
/// m(t) = t^{δ−1}(1+t)^{γ−δ}, γ = |M|/h.
///
/// Each y-integral is taken on its saddle line y + i z₋(s), and the
/// s-integrals use s_j = σ_j^{1/δ}, turning s^{δ−1} ds into δ⁻¹ dσ.
pub fn rescaled_integral(
    h: f64,
    params: &KummerParams,
    data: &PhaseData,
    qcfg: &QuadratureConfig,
) -> Result<LogComplex> {
    qcfg.validate()?;
    if (params.h - h).abs() > 1e-15 * h {
        return Err(Error::domain("Kummer parameters belong to a different h"));
    }
    let delta = params.delta;
    let gamma_excess = params.gamma - data.m_abs / h;
    let f0 = data.f_closed([0.0, 0.0]);
    let sigma_max = s_extent(data, h, qcfg.ln_cutoff + 8.0).powf(delta);
    let inv = 1.0 / delta;
    let integrand = |s1: f64, s2: f64| -> f64 {
        let s = [s1, s2];
        let log_weight = -(data.f_closed(s) - f0) / h + (gamma_excess - delta) * ((1.0 + s1) * (1.0 + s2)).ln();
        match shifted_y_integral(s, h, data, qcfg.y_tol) {
            Ok(j) => log_weight.exp() * j,
            Err(_) => f64::NAN,
        }
    };
    // Rough value to set an absolute tolerance for the nested rules.
    let coarse = GaussLegendre::new(12);
    let mut rough = 0.0;
    for (a, wa) in coarse.mapped(0.0, sigma_max) {
        for (b, wb) in coarse.mapped(0.0, sigma_max) {
            rough += wa * wb * integrand(a.powf(inv), b.powf(inv)).abs();
        }
    }
    if !rough.is_finite() || rough == 0.0 {
        return Err(Error::Quadrature("rescaled integrand vanishes or is not finite".into()));
    }
    let abs = 1e-3 * qcfg.s_tol * rough;
    let inner_tol = Tolerance { abs: abs / sigma_max, rel: 0.1 * qcfg.s_tol, max_intervals: 2000 };
    let outer_tol = Tolerance { abs, rel: qcfg.s_tol, max_intervals: 2000 };
    let breaks: Vec<f64> = (0..=4).map(|k| sigma_max * k as f64 / 4.0).collect();
    let outer = quad::adaptive_with_breaks(
        |a: f64| {
            let s1 = a.powf(inv);
            match quad::adaptive_with_breaks(|b: f64| integrand(s1, b.powf(inv)), &breaks, inner_tol) {
                Ok(r) => r.value,
                Err(_) => f64::NAN,
            }
        },
        &breaks,
        outer_tol,
    )?;
    let value = outer.value * inv * inv;
    let exponent = -f0 / h;
    let mut w = LogComplex::from_real(value);
    w.ln_abs += exponent;
    Ok(w)
}

/// Leading-order W_h = c0 h^{1+δ0} e^{−F(0)/h}.
pub fn rescaled_integral_laplace(h: f64, constants: &PredictionConstants) -> LogComplex {
    LogComplex {
        ln_abs: constants.c0.abs().ln() + (1.0 + constants.delta0) * h.ln() - constants.f0 / h,
        arg: if constants.c0 < 0.0 { std::f64::consts::PI } else { 0.0 },
    }
}

/// w_h = h C(h)² (L/2)^{2γ} (b1L²/4) W_h.
pub fn wh_from_integral(
    h: f64,
    log_c: f64,
    params: &KummerParams,
    data: &PhaseData,
    w_integral: LogComplex,
) -> LogComplex {
    let half = 0.5 * data.l;
    w_integral.scale_ln(h.ln() + 2.0 * log_c + 2.0 * params.gamma * half.ln() + (data.b1 * data.l * data.l / 4.0).ln())
}

// ---------------------------------------------------------------------------
// Contour identity check in multiple precision.

/// Both sides of ∫_ℝ ω e^{−ψ/h} dy = ∫_{ℝ + i z₋(s)} ω e^{−ψ/h} dy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContourCheck {
    pub real_line: LogComplex,
    pub shifted: LogComplex,
    pub relative_difference: f64,
    /// |real_line − shifted| divided by the L¹ norm of the integrand on the
    /// shifted line. Meaningful also where both sides vanish, as at s = 0.
    pub normalized_difference: f64,
    /// Relative change of the real-line value when its spacing is halved.
    pub refinement_change: f64,
    pub spacing: f64,
}

/// Bits of working precision for the real-line integral.
pub const CONTOUR_PRECISION: u32 = 256;

pub fn contour_check(s: [f64; 2], h: f64, data: &PhaseData, qcfg: &QuadratureConfig) -> Result<ContourCheck> {
    qcfg.validate()?;
    if !(s[0] >= 0.0 && s[1] >= 0.0) {
        return Err(Error::domain(format!("s must be non-negative, got {s:?}")));
    }
    let j = shifted_y_integral(s, h, data, 1e-13)?;
    let mut shifted = LogComplex::from_real(j);
    shifted.ln_abs -= data.psi_at_critical(s) / h;

    // e^{−Re ψ/h} ≤ e^{−e8 c y²/h}·(1+y²)^{|M|/h}; truncate where that
    // is 10^{-80} below the value at y = 0.
    let e8c = data.scale() * data.c(s);
    let mut y_max = 1.0;
    while e8c * y_max * y_max - data.m_abs * (1.0 + y_max * y_max).ln() < 80.0 * std::f64::consts::LN_10 * h {
        y_max *= 1.25;
    }
    let spacing = 0.02f64.min(0.25 * (h / e8c).sqrt());
    let coarse = trapezoid_mp(s, h, data, spacing, y_max, false);
    let fine_mid = trapezoid_mp(s, h, data, spacing, y_max, true);
    // Halved spacing: the coarse nodes plus the midpoints.
    let fine = (coarse.clone() + fine_mid) / 2u32;
    let change = {
        let d = Float::with_val(CONTOUR_PRECISION, &fine - &coarse);
        (d / &fine).abs().to_f64()
    };
    let real_line = mp_to_log(&fine);
    let ln_l1 = shifted_y_l1(s, h, data, 1e-10)?.ln() - data.psi_at_critical(s) / h;
    let rescale = |v: LogComplex| Complex64::from_polar((v.ln_abs - ln_l1).exp(), v.arg);
    Ok(ContourCheck {
        real_line,
        shifted,
        relative_difference: real_line.relative_difference(&shifted),
        normalized_difference: (rescale(real_line) - rescale(shifted)).norm(),
        refinement_change: change,
        spacing,
    })
}

/// Trapezoid sum Δ Σ_k Re[ω e^{−ψ/h}](y_k) over the whole line, using the
/// symmetry in y. With `midpoints`, the nodes are shifted by Δ/2.
fn trapezoid_mp(s: [f64; 2], h: f64, data: &PhaseData, spacing: f64, y_max: f64, midpoints: bool) -> Float {
    let p = CONTOUR_PRECISION;
    let f = |x: f64| Float::with_val(p, x);
    let hh = f(h);
    let e8c = f(data.scale() * data.c(s));
    let two_e8 = f(2.0 * data.scale());
    let m_abs = f(data.m_abs);
    let n = f(data.n);
    let s1 = f(s[0]);
    let dy = f(spacing);
    let count = (y_max / spacing).ceil() as u64 + 1;
    let mut total = Float::with_val(p, 0);
    for k in 0..=count {
        let mut y = Float::with_val(p, &dy * k);
        if midpoints {
            y += Float::with_val(p, &dy / 2u32);
        }
        let y2 = Float::with_val(p, y.square_ref());
        let one_y2 = Float::with_val(p, &y2 + 1u32);
        // Re ψ and Im ψ on the real line.
        let re_psi = Float::with_val(p, &e8c * &one_y2) - Float::with_val(p, &m_abs * one_y2.clone().ln());
        let im_psi = Float::with_val(p, &two_e8 * &y)
            - Float::with_val(p, (Float::with_val(p, &m_abs * 2u32)) * y.clone().atan());
        let amp = Float::with_val(p, -re_psi / &hh).exp();
        let phase = Float::with_val(p, &im_psi / &hh);
        let (sin, cos) = phase.sin_cos(Float::new(p));
        let base = Float::with_val(p, &n / &one_y2) - 1u32;
        let om_re = Float::with_val(p, &base - Float::with_val(p, &s1 * 2u32));
        let om_im = Float::with_val(p, -(Float::with_val(p, &y * &base)));
        // Re[(ω_re + iω_im)(cos − i sin)] = ω_re cos + ω_im sin.
        let term = Float::with_val(p, &om_re * &cos) + Float::with_val(p, &om_im * &sin);
        let term = Float::with_val(p, &term * &amp);
        if k == 0 && !midpoints {
            total += term;
        } else {
            total += Float::with_val(p, &term * 2u32);
        }
    }
    Float::with_val(p, &total * &dy)
}

fn mp_to_log(x: &Float) -> LogComplex {
    if x.is_zero() {
        return LogComplex::ZERO;
    }
    let ln_abs = Float::with_val(x.prec(), x.abs_ref()).ln().to_f64();
    LogComplex { ln_abs, arg: if x.is_sign_negative() { std::f64::consts::PI } else { 0.0 } }
}

// ---------------------------------------------------------------------------
// Per-h report.

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplittingReport {
    pub h: f64,
    pub mu: f64,
    /// log10 |w_h| from the axis integral.
    pub log10_wh_direct: f64,
    /// arg w_h (0 or π; w_h is real).
    pub wh_direct_arg: f64,
    pub log10_wh_from_integral: f64,
    /// |w_from_integral / w_direct − 1|.
    pub integral_deviation: f64,
    pub log10_w_integral: f64,
    pub log10_w_laplace: f64,
    /// |W_numeric / W_laplace − 1|.
    pub laplace_deviation: f64,
    /// log10 of 2|w_h|.
    pub log10_gap_direct: f64,
    pub log10_gap_predicted: f64,
    /// R(h) = 2|w_h| / predicted gap.
    pub ratio: f64,
    pub log_c: f64,
    pub log_c_asymptotic: Option<f64>,
    pub theorem_hypothesis: bool,
    /// R(h) / (2π a0²) when an amplitude estimate is supplied.
    pub amplitude_corrected_ratio: Option<f64>,
}

/// Everything needed for one report row.
pub struct ReportInputs<'a> {
    pub profile: &'a MagneticProfile,
    pub geometry: &'a WellGeometry,
    pub constants: &'a PredictionConstants,
    pub radial: &'a RadialSolverConfig,
    pub quadrature: &'a QuadratureConfig,
    pub amplitude: Option<&'a AmplitudeEstimate>,
}

pub fn splitting_report(h: f64, inputs: &ReportInputs<'_>) -> Result<SplittingReport> {
    let state = radial::ground_state(h, inputs.profile, inputs.radial)?;
    splitting_report_from_state(&state, inputs)
}

pub fn splitting_report_from_state(state: &RadialGroundState, inputs: &ReportInputs<'_>) -> Result<SplittingReport> {
    let h = state.h;
    let (profile, geometry, constants) = (inputs.profile, inputs.geometry, inputs.constants);
    let data = PhaseData::new(profile, geometry)?;
    let direct = wh_direct(state, profile, geometry, inputs.quadrature)?.w;
    let params = KummerParams::from_state(state, profile)?;
    let (ln_phi_mid, _) = state.log_value(0.5 * geometry.l)?;
    let log_c = kummer::normalization_c(&params, geometry, ln_phi_mid)?;
    let w_integral = rescaled_integral(h, &params, &data, inputs.quadrature)?;
    let from_integral = wh_from_integral(h, log_c, &params, &data, w_integral);
    let w_laplace = rescaled_integral_laplace(h, constants);
    let gap_direct = direct.ln_abs + std::f64::consts::LN_2;
    let gap_pred = constants.log_gap(h);
    let ratio = (gap_direct - gap_pred).exp();
    let log_c_asymptotic = match inputs.amplitude {
        Some(a) => Some(kummer::c_asymptotic(h, a.extrapolated, &data, constants.phi0)?),
        None => None,
    };
    Ok(SplittingReport {
        h,
        mu: state.mu,
        log10_wh_direct: direct.log10_abs(),
        wh_direct_arg: direct.arg,
        log10_wh_from_integral: from_integral.log10_abs(),
        integral_deviation: from_integral.relative_difference(&direct),
        log10_w_integral: w_integral.log10_abs(),
        log10_w_laplace: w_laplace.log10_abs(),
        laplace_deviation: w_integral.relative_difference(&w_laplace),
        log10_gap_direct: gap_direct / std::f64::consts::LN_10,
        log10_gap_predicted: gap_pred / std::f64::consts::LN_10,
        ratio,
        log_c,
        log_c_asymptotic,
        theorem_hypothesis: geometry.theorem_hypothesis(profile.a()),
        amplitude_corrected_ratio: inputs.amplitude.map(|a| ratio / a.two_pi_a0_squared()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg_a() -> (MagneticProfile, WellGeometry) {
        let p = MagneticProfile::builtin(1.0, 2.0, 1.0, 1.0).unwrap();
        let g = WellGeometry::new(5.0, &p).unwrap();
        (p, g)
    }

    #[test]
    fn folded_and_unfolded_axis_integrals_agree() {
        let (p, g) = cfg_a();
        let state = radial::ground_state(0.1, &p, &RadialSolverConfig::for_geometry(&g)).unwrap();
        let q = QuadratureConfig::default();
        let folded = wh_direct(&state, &p, &g, &q).unwrap();
        let unfolded = wh_direct_unfolded(&state, &p, &g, &q).unwrap();
        assert!(folded.w.relative_difference(&unfolded.w) < 1e-12);
        assert!(folded.matching_defect < 1e-10);
        // w_h is real and negative for this configuration.
        assert!((folded.w.arg.abs() - std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn shifted_line_matches_real_axis_at_large_h() {
        let (p, g) = cfg_a();
        let cfg = RadialSolverConfig { r_max: 16.0, n: 80_000, ..RadialSolverConfig::for_geometry(&g) };
        let state = radial::ground_state(1.0, &p, &cfg).unwrap();
        let q = QuadratureConfig::default();
        let shifted = wh_direct(&state, &p, &g, &q).unwrap().w;
        let real = wh_direct_real_axis(&state, &p, &g, &q).unwrap();
        assert!(shifted.relative_difference(&real) < 1e-6);
    }

    #[test]
    fn y_integral_vanishes_at_the_origin() {
        let (p, g) = cfg_a();
        let data = PhaseData::new(&p, &g).unwrap();
        assert!(laplace_y([0.0, 0.0], 0.1, &data).abs() < 1e-15);
        let j = shifted_y_integral([0.0, 0.0], 0.1, &data, 1e-12).unwrap();
        let l1 = shifted_y_l1([0.0, 0.0], 0.1, &data, 1e-12).unwrap();
        assert!(j.abs() < 1e-12 * l1);
    }

    #[test]
    fn laplace_term_scales_as_sqrt_h() {
        let (p, g) = cfg_a();
        let data = PhaseData::new(&p, &g).unwrap();
        let s = [0.5, 0.2];
        let r = laplace_y(s, 0.04, &data) / laplace_y(s, 0.01, &data);
        assert!((r - 2.0).abs() < 1e-12);
        // The full integral approaches its Laplace term as h shrinks.
        let dev = |h: f64| (shifted_y_integral(s, h, &data, 1e-12).unwrap() / laplace_y(s, h, &data) - 1.0).abs();
        assert!(dev(0.01) < dev(0.04));
    }

    #[test]
    fn contour_shift_preserves_the_y_integral() {
        let (p, g) = cfg_a();
        let data = PhaseData::new(&p, &g).unwrap();
        let q = QuadratureConfig::default();
        let c = contour_check([1.0, 0.5], 0.1, &data, &q).unwrap();
        assert!(c.relative_difference < 1e-10);
        assert!(c.refinement_change < 1e-12);
        let c0 = contour_check([0.0, 0.0], 0.1, &data, &q).unwrap();
        assert!(c0.normalized_difference < 1e-10);
    }

    #[test]
    fn direct_and_integral_routes_agree() {
        let (p, g) = cfg_a();
        let constants = PredictionConstants::compute(&p, &g).unwrap();
        let radial_cfg = RadialSolverConfig::for_geometry(&g);
        let q = QuadratureConfig::default();
        let inputs = ReportInputs {
            profile: &p,
            geometry: &g,
            constants: &constants,
            radial: &radial_cfg,
            quadrature: &q,
            amplitude: None,
        };
        let report = splitting_report(0.1, &inputs).unwrap();
        assert!(report.integral_deviation < 1e-8);
        assert!(report.theorem_hypothesis);
        assert!(report.ratio > 0.1 && report.ratio < 0.3);
        let json = serde_json::to_string(&report).unwrap();
        let back: SplittingReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, report);
    }

    #[test]
    fn quadrature_config_rejects_bad_values() {
        let bad = QuadratureConfig { panel_order: 4, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = QuadratureConfig { ode_tol: 0.0, ..Default::default() };
        assert!(bad.validate().is_err());
        assert!(QuadratureConfig::default().validate().is_ok());
    }
}
