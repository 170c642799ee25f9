//! Numerical checks of the whole pipeline, one function per group. Each
//! returns [`Check`] rows with the measured value and the threshold, so the
//! CLI `verify` command and the acceptance suite print the same table.

use serde::{Deserialize, Serialize};

use crate::asymptotics::{self, PhaseData, PredictionConstants};
use crate::error::Result;
use crate::grid2d::{self, EigenConfig, Lattice, LatticeParams};
use crate::interaction::{self, QuadratureConfig, ReportInputs};
use crate::kummer::ExteriorSolution;
use crate::profile::{MagneticProfile, WellGeometry};
use crate::radial::{self, RadialGroundState, RadialSolverConfig};
use crate::wkb::{self, AmplitudeEstimate};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub passed: bool,
    /// Reported but not part of the pass/fail outcome.
    pub informational: bool,
    pub detail: String,
}

impl Check {
    /// Passes when value ≤ threshold.
    pub fn at_most(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Check {
            name: name.into(),
            value,
            threshold,
            passed: value <= threshold,
            informational: false,
            detail: String::new(),
        }
    }

    pub fn holds(name: impl Into<String>, ok: bool, value: f64) -> Self {
        Check { name: name.into(), value, threshold: f64::NAN, passed: ok, informational: false, detail: String::new() }
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = detail.into();
        self
    }

    pub fn informational(mut self) -> Self {
        self.informational = true;
        self
    }

    pub fn status(&self) -> &'static str {
        match (self.informational, self.passed) {
            (true, true) => "INFO yes",
            (true, false) => "INFO no",
            (false, true) => "PASS",
            (false, false) => "FAIL",
        }
    }
}

pub fn all_passed(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.informational || c.passed)
}

fn rel(a: f64, b: f64) -> f64 {
    (a / b - 1.0).abs()
}

/// Closed forms against their defining integrals, and the inequalities
/// that make the splitting formula meaningful.
pub fn identity_suite(profile: &MagneticProfile, geometry: &WellGeometry) -> Result<Vec<Check>> {
    let data = PhaseData::new(profile, geometry)?;
    let i_closed = asymptotics::constant_i_closed(&data);
    let i_int = asymptotics::constant_i_integral(profile, geometry, data.n)?;
    let k = PredictionConstants::compute(profile, geometry)?;
    let two_phi0 = wkb::log_weighted_flux(profile, geometry)?;
    let (lhs, rhs) = wkb::separation_inequality(profile, geometry, data.n)?;
    let exponent_lhs = 1.0 - profile.delta0();
    let exponent_rhs = 0.5 + profile.b0() / (2.0 * profile.b1());
    Ok(vec![
        Check::at_most("I closed form vs integral", rel(i_closed, i_int), 1e-9),
        Check::at_most("S - I vs log-weighted flux integral", rel(k.s - k.i, two_phi0), 1e-9),
        Check::holds("2 S0 > S", 2.0 * k.s0 > k.s, 2.0 * k.s0 - k.s),
        Check::holds("separation inequality", lhs < rhs, rhs - lhs).with_detail(format!("{lhs:.12} < {rhs:.12}")),
        Check::at_most("1 - delta0 = 1/2 + b0/(2 b1)", (exponent_lhs - exponent_rhs).abs(), 0.0),
    ])
}

/// Radial finite-volume ground state against the exact exterior
/// representation on [r_lo, r_hi].
pub fn kummer_oracle(
    state: &RadialGroundState,
    profile: &MagneticProfile,
    geometry: &WellGeometry,
    r_range: (f64, f64),
) -> Result<Vec<Check>> {
    let ext = ExteriorSolution::from_state(state, profile, geometry)?;
    let samples = 200;
    let mut max_value = 0.0f64;
    let mut max_residual = 0.0f64;
    for k in 0..=samples {
        let r = r_range.0 + (r_range.1 - r_range.0) * k as f64 / samples as f64;
        let (ln_phi, _) = state.log_value(r)?;
        let exact = ext.exterior_value(r)?;
        max_value = max_value.max((ln_phi - exact.ln_phi).exp_m1().abs());
        max_residual = max_residual.max(ext.ode_residual(r)?);
    }
    Ok(vec![
        Check::at_most(format!("radial vs Kummer on [{}, {}], h = {}", r_range.0, r_range.1, state.h), max_value, 1e-5),
        Check::at_most("Kummer ODE residual", max_residual, 1e-8),
    ])
}

/// (μ(h) − b0h)/h² against `target` with relative tolerance `tol`.
pub fn eigenvalue_coefficient(
    h: f64,
    profile: &MagneticProfile,
    cfg: &RadialSolverConfig,
    target: f64,
    tol: f64,
) -> Result<Check> {
    let state = radial::ground_state(h, profile, cfg)?;
    let coefficient = (state.mu - profile.b0() * h) / (h * h);
    Ok(Check::at_most(format!("(mu - b0 h)/h^2 at h = {h} vs {target}"), rel(coefficient, target), tol)
        .with_detail(format!("measured {coefficient:.6}")))
}

/// Radial grid for small h: a domain just past the midpoint L/2 is enough,
/// and spends the cells where the state lives.
pub fn refined_radial(h: f64, geometry: &WellGeometry) -> RadialSolverConfig {
    RadialSolverConfig {
        r_max: (30.0 * h.sqrt()).max(0.5 * geometry.l + 1.0),
        n: 40_000,
        eig_tol: 1e-14,
        richardson: true,
    }
}

pub struct Setup<'a> {
    pub profile: &'a MagneticProfile,
    pub geometry: &'a WellGeometry,
    pub constants: &'a PredictionConstants,
    pub radial: &'a RadialSolverConfig,
    pub quadrature: &'a QuadratureConfig,
}

impl Setup<'_> {
    fn inputs<'b>(&'b self, amplitude: Option<&'b AmplitudeEstimate>) -> ReportInputs<'b> {
        ReportInputs {
            profile: self.profile,
            geometry: self.geometry,
            constants: self.constants,
            radial: self.radial,
            quadrature: self.quadrature,
            amplitude,
        }
    }
}

/// |w_direct / w_from_integral − 1| at each h.
pub fn integral_identity(setup: &Setup<'_>, hs: &[f64], tol: f64) -> Result<Vec<Check>> {
    hs.iter()
        .map(|&h| {
            let r = interaction::splitting_report(h, &setup.inputs(None))?;
            Ok(Check::at_most(format!("w_direct vs w_from_integral at h = {h}"), r.integral_deviation, tol))
        })
        .collect()
}

/// Contour shift at the given s and the decrease of the Laplace remainder.
pub fn contour_and_laplace(setup: &Setup<'_>, contour_h: f64, s_points: &[[f64; 2]], hs: &[f64]) -> Result<Vec<Check>> {
    let data = PhaseData::new(setup.profile, setup.geometry)?;
    let mut out = Vec::new();
    for &s in s_points {
        let c = interaction::contour_check(s, contour_h, &data, setup.quadrature)?;
        // Both sides vanish identically at s = 0; compare against the size of
        // the integrand there.
        let (value, what) = if s == [0.0, 0.0] {
            (c.normalized_difference, "relative to the integrand L1 norm")
        } else {
            (c.relative_difference, "relative")
        };
        out.push(
            Check::at_most(format!("contour shift at s = ({}, {}), h = {contour_h}", s[0], s[1]), value, 1e-8)
                .with_detail(what),
        );
    }
    let mut devs = Vec::new();
    for &h in hs {
        let state = radial::ground_state(h, setup.profile, setup.radial)?;
        let params = crate::kummer::KummerParams::from_state(&state, setup.profile)?;
        let w = interaction::rescaled_integral(h, &params, &data, setup.quadrature)?;
        let lap = interaction::rescaled_integral_laplace(h, setup.constants);
        devs.push(w.relative_difference(&lap));
    }
    let decreasing = devs.windows(2).all(|w| w[1] < w[0]);
    out.push(
        Check::holds("|W/W_laplace - 1| strictly decreasing", decreasing, *devs.last().unwrap_or(&f64::NAN))
            .with_detail(format!("{:?} at h = {hs:?}", devs.iter().map(|d| format!("{d:.4e}")).collect::<Vec<_>>())),
    );
    Ok(out)
}

/// Result of the R(h) study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioTrend {
    pub h: Vec<f64>,
    pub ratio: Vec<f64>,
    pub limit: f64,
    pub amplitude: AmplitudeEstimate,
}

pub fn ratio_trend(setup: &Setup<'_>, hs: &[f64], amplitude_h: &[f64]) -> Result<RatioTrend> {
    let states = amplitude_h
        .iter()
        .map(|&h| radial::ground_state(h, setup.profile, &refined_radial(h, setup.geometry)))
        .collect::<Result<Vec<_>>>()?;
    let amplitude = wkb::extract_a0(setup.profile, setup.geometry, &states)?;
    let ratio = hs
        .iter()
        .map(|&h| Ok(interaction::splitting_report(h, &setup.inputs(None))?.ratio))
        .collect::<Result<Vec<f64>>>()?;
    let limit = wkb::neville_at_zero(hs, &ratio);
    Ok(RatioTrend { h: hs.to_vec(), ratio, limit, amplitude })
}

pub fn ratio_trend_checks(t: &RatioTrend, tol: f64) -> Vec<Check> {
    let diffs: Vec<f64> = t.ratio.windows(2).map(|w| (w[0] - w[1]).abs()).collect();
    let shrinking = diffs.windows(2).all(|w| w[1] < w[0]);
    let target = t.amplitude.two_pi_a0_squared();
    vec![
        Check::holds("|R(h) - R(h/2)| strictly decreasing", shrinking, *diffs.last().unwrap_or(&f64::NAN))
            .with_detail(format!("R = {:.6?}", t.ratio)),
        Check::at_most("lim R(h) vs 2 pi a0^2", rel(t.limit, target), tol)
            .with_detail(format!("limit {:.6}, 2 pi a0^2 = {target:.6}", t.limit)),
        Check::at_most("lim R(h) = 1 (closed-form constant confirmed)", (t.limit - 1.0).abs(), tol)
            .with_detail("otherwise the midpoint amplitude 2 pi a0^2 != 1 is what the constant misses")
            .informational(),
    ]
}

/// Least-squares slope of ln|w_h| against −1/h.
pub fn log_slope(h: &[f64], ln_abs_w: &[f64]) -> f64 {
    let x: Vec<f64> = h.iter().map(|h| -1.0 / h).collect();
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = ln_abs_w.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(ln_abs_w).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

pub fn slope_check(setup: &Setup<'_>, hs: &[f64], tol: f64) -> Result<Check> {
    let mut ln_w = Vec::with_capacity(hs.len());
    for &h in hs {
        let state = radial::ground_state(h, setup.profile, setup.radial)?;
        ln_w.push(interaction::wh_direct(&state, setup.profile, setup.geometry, setup.quadrature)?.w.ln_abs);
    }
    let slope = log_slope(hs, &ln_w);
    Ok(Check::at_most("slope of ln|w_h| vs -1/h against S", rel(slope, setup.constants.s), tol)
        .with_detail(format!("slope {slope:.6}, S = {:.6}", setup.constants.s)))
}

/// λ1 against μ(h), the two-level structure, and gauge invariance.
pub fn grid_diagnostics(
    h: f64,
    profile: &MagneticProfile,
    geometry: &WellGeometry,
    lattice: LatticeParams,
    eigen: &EigenConfig,
    radial_cfg: &RadialSolverConfig,
) -> Result<Vec<Check>> {
    let mu = radial::ground_state(h, profile, radial_cfg)?.mu;
    let op = Lattice::assemble(h, profile, geometry, lattice)?;
    let r = grid2d::lowest_eigenpairs(&op, eigen)?.result;
    let moved = op.gauge_transformed(&grid2d::random_gauge(&op, eigen.seed ^ 0x9e37_79b9))?;
    let r2 = grid2d::lowest_eigenpairs(&moved, eigen)?.result;
    let gauge = r.eigenvalues.iter().zip(&r2.eigenvalues).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let max_res = r.residuals.iter().cloned().fold(0.0, f64::max);
    Ok(vec![
        Check::at_most(format!("grid lambda1 vs radial mu at h = {h}"), rel(r.eigenvalues[0], mu), 1e-2)
            .with_detail(format!("lambda = {:.10?}, mu = {mu:.10}", r.eigenvalues)),
        Check::at_most("(lambda2 - lambda1)/(lambda3 - lambda1)", r.two_level_ratio(), 1e-3),
        Check::at_most("eigenvalue change under a random gauge", gauge, 1e-12),
        Check::at_most("residual / lambda3", max_res / r.eigenvalues[2], 1e-8),
    ])
}
