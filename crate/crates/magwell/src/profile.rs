//! The double-well magnetic field: radial profile β(u), fluxes, and the
//! explicit gauge quantities θ and k on the symmetry axis x1 = 0.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{self, GaussLegendre, Tolerance};

/// How the profile between the well centre and the well edge is given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ProfileKind {
    /// β(u) = b1 − (b1 − b0)·exp(−κu/(u_a − u)) for u < u_a = a²/2.
    BuiltIn { kappa: f64 },
    /// Samples (u_i, β_i) joined by a monotone cubic.
    Tabulated { u: Vec<f64>, beta: Vec<f64> },
}

/// Radial magnetic profile of one well. B(x) = β(|x − x_ℓ|²/2) near x_ℓ,
/// equal to b1 outside the disc of radius a.
#[derive(Debug, Clone)]
pub struct MagneticProfile {
    b0: f64,
    b1: f64,
    a: f64,
    kind: ProfileKind,
    spline: Option<MonotoneCubic>,
    breaks: Vec<f64>,
    cumulative: Vec<f64>,
    flux_deficit: f64,
}

const BUILTIN_PANELS: usize = 512;

impl MagneticProfile {
    pub fn builtin(b0: f64, b1: f64, a: f64, kappa: f64) -> Result<Self> {
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(Error::Config(format!("kappa must be positive, got {kappa}")));
        }
        Self::build(b0, b1, a, ProfileKind::BuiltIn { kappa })
    }

    pub fn tabulated(b0: f64, b1: f64, a: f64, u: Vec<f64>, beta: Vec<f64>) -> Result<Self> {
        Self::build(b0, b1, a, ProfileKind::Tabulated { u, beta })
    }

    /// Reads a two-column CSV `u,beta` (an optional header line and `#`
    /// comments are skipped).
    pub fn from_table_file(b0: f64, b1: f64, a: f64, path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| Error::Io { context: format!("reading profile table {}", path.display()), source })?;
        let mut u = Vec::new();
        let mut beta = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut cols = line.split(',').map(str::trim);
            let (Some(c0), Some(c1), None) = (cols.next(), cols.next(), cols.next()) else {
                return Err(Error::Config(format!("{}:{}: expected two columns", path.display(), lineno + 1)));
            };
            match (c0.parse::<f64>(), c1.parse::<f64>()) {
                (Ok(x), Ok(y)) => {
                    u.push(x);
                    beta.push(y);
                }
                _ if u.is_empty() => continue,
                _ => return Err(Error::Config(format!("{}:{}: cannot parse '{line}'", path.display(), lineno + 1))),
            }
        }
        Self::tabulated(b0, b1, a, u, beta)
    }

    fn build(b0: f64, b1: f64, a: f64, kind: ProfileKind) -> Result<Self> {
        if !(b0 > 0.0 && b0.is_finite()) {
            return Err(Error::Config(format!("b0 must be positive, got {b0}")));
        }
        if !(b1 > b0 && b1.is_finite()) {
            return Err(Error::Config(format!("need b0 < b1, got b0 = {b0}, b1 = {b1}")));
        }
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::Config(format!("well radius a must be positive, got {a}")));
        }
        let ua = 0.5 * a * a;
        let (spline, breaks) = match &kind {
            ProfileKind::BuiltIn { .. } => {
                let breaks = (0..=BUILTIN_PANELS).map(|k| ua * k as f64 / BUILTIN_PANELS as f64).collect();
                (None, breaks)
            }
            ProfileKind::Tabulated { u, beta } => {
                let spline = validate_table(b0, b1, ua, u, beta)?;
                let mut breaks = Vec::new();
                for w in u.windows(2) {
                    if w[0] >= ua {
                        break;
                    }
                    let hi = w[1].min(ua);
                    for j in 0..4 {
                        breaks.push(w[0] + (hi - w[0]) * j as f64 / 4.0);
                    }
                }
                breaks.push(ua);
                (Some(spline), breaks)
            }
        };
        let mut profile =
            MagneticProfile { b0, b1, a, kind, spline, breaks, cumulative: Vec::new(), flux_deficit: 0.0 };
        let mut cumulative = Vec::with_capacity(profile.breaks.len());
        let mut acc = 0.0;
        cumulative.push(0.0);
        for w in profile.breaks.windows(2) {
            acc += quad::integrate(|u| profile.field(u), w[0], w[1], Tolerance::new(1e-16, 1e-15))?;
            cumulative.push(acc);
        }
        profile.flux_deficit = acc - b1 * ua;
        profile.cumulative = cumulative;
        if let ProfileKind::Tabulated { .. } = profile.kind {
            if profile.beta_prime_at_zero() <= 0.0 {
                return Err(Error::Config("tabulated profile must have β'(0) > 0".into()));
            }
        }
        Ok(profile)
    }

    pub fn b0(&self) -> f64 {
        self.b0
    }

    pub fn b1(&self) -> f64 {
        self.b1
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn kind(&self) -> &ProfileKind {
        &self.kind
    }

    /// u_a = a²/2, where the profile reaches b1.
    pub fn edge(&self) -> f64 {
        0.5 * self.a * self.a
    }

    /// β(u); errors for negative u.
    pub fn beta(&self, u: f64) -> Result<f64> {
        if !(u >= 0.0) {
            return Err(Error::domain(format!("profile argument must be non-negative, got {u}")));
        }
        Ok(self.field(u))
    }

    /// β(u) without the domain check (u ≥ 0 assumed).
    pub(crate) fn field(&self, u: f64) -> f64 {
        let ua = self.edge();
        if u >= ua {
            return self.b1;
        }
        match (&self.kind, &self.spline) {
            (ProfileKind::BuiltIn { kappa }, _) => self.b1 - (self.b1 - self.b0) * (-kappa * u / (ua - u)).exp(),
            (_, Some(spline)) => spline.eval(u),
            _ => unreachable!("tabulated profile always carries its spline"),
        }
    }

    /// β'(0).
    pub fn beta_prime_at_zero(&self) -> f64 {
        match (&self.kind, &self.spline) {
            (ProfileKind::BuiltIn { kappa }, _) => (self.b1 - self.b0) * kappa / self.edge(),
            (_, Some(spline)) => spline.slopes[0],
            _ => unreachable!(),
        }
    }

    /// ∫₀^v β(u) du.
    pub fn cumulative_flux(&self, v: f64) -> f64 {
        let ua = self.edge();
        if v >= ua {
            return self.b1 * v + self.flux_deficit;
        }
        if v <= 0.0 {
            return 0.0;
        }
        let k = match self.breaks.binary_search_by(|b| b.total_cmp(&v)) {
            Ok(k) => return self.cumulative[k],
            Err(k) => k - 1,
        };
        let mut f = |u: f64| self.field(u);
        let (piece, _) = quad::gauss_kronrod_15(self.breaks[k], v, &mut f);
        self.cumulative[k] + piece
    }

    /// α(r) = ∫₀^{r²/2} β(u) du, the flux through the disc of radius r divided by 2π.
    pub fn alpha(&self, r: f64) -> f64 {
        self.cumulative_flux(0.5 * r * r)
    }

    /// M = ∫₀^∞ (β(u) − b1) du.
    pub fn flux_deficit(&self) -> f64 {
        self.flux_deficit
    }

    /// (1/2π)∫_{ℝ²}(B_ℓ − b1) dx evaluated as a Cartesian double integral over
    /// the disc; agrees with [`Self::flux_deficit`].
    pub fn flux_deficit_2d(&self) -> Result<f64> {
        let a = self.a;
        let tol = Tolerance::new(1e-14, 1e-13);
        let outer = quad::integrate(
            |x| {
                let half = (a * a - x * x).max(0.0).sqrt();
                quad::integrate(|y| self.field(0.5 * (x * x + y * y)) - self.b1, -half, half, tol).unwrap_or(f64::NAN)
            },
            -a,
            a,
            tol,
        )?;
        if !outer.is_finite() {
            return Err(Error::Quadrature("inner flux integral failed".into()));
        }
        Ok(outer / std::f64::consts::TAU)
    }

    /// δ0 = (b1 − b0)/(2 b1).
    pub fn delta0(&self) -> f64 {
        (self.b1 - self.b0) / (2.0 * self.b1)
    }
}

fn validate_table(b0: f64, b1: f64, ua: f64, u: &[f64], beta: &[f64]) -> Result<MonotoneCubic> {
    if u.len() != beta.len() || u.len() < 3 {
        return Err(Error::Config("profile table needs at least three (u, beta) rows".into()));
    }
    if u[0] != 0.0 {
        return Err(Error::Config(format!("profile table must start at u = 0, starts at {}", u[0])));
    }
    if (beta[0] - b0).abs() > 1e-12 * b0 {
        return Err(Error::Config(format!("profile table has beta(0) = {} but b0 = {b0}", beta[0])));
    }
    if u.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Config("profile table u column must be strictly increasing".into()));
    }
    if *u.last().unwrap() < ua {
        return Err(Error::Config(format!("profile table must reach u = a²/2 = {ua}")));
    }
    for (&x, &y) in u.iter().zip(beta) {
        if !(b0 - 1e-12 <= y && y <= b1 + 1e-12) {
            return Err(Error::Config(format!("profile table value beta({x}) = {y} outside [b0, b1]")));
        }
        if x >= ua && (y - b1).abs() > 1e-12 * b1 {
            return Err(Error::Config(format!("profile table must equal b1 for u >= a²/2, got beta({x}) = {y}")));
        }
    }
    Ok(MonotoneCubic::new(u.to_vec(), beta.to_vec()))
}

/// Fritsch–Carlson monotone cubic Hermite interpolant.
#[derive(Debug, Clone)]
struct MonotoneCubic {
    x: Vec<f64>,
    y: Vec<f64>,
    slopes: Vec<f64>,
}

impl MonotoneCubic {
    fn new(x: Vec<f64>, y: Vec<f64>) -> Self {
        let n = x.len();
        let secants: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / (x[i + 1] - x[i])).collect();
        let mut slopes = vec![0.0; n];
        slopes[0] = secants[0];
        slopes[n - 1] = secants[n - 2];
        for i in 1..n - 1 {
            slopes[i] = if secants[i - 1] * secants[i] <= 0.0 { 0.0 } else { 0.5 * (secants[i - 1] + secants[i]) };
        }
        for i in 0..n - 1 {
            if secants[i] == 0.0 {
                slopes[i] = 0.0;
                slopes[i + 1] = 0.0;
                continue;
            }
            let a = slopes[i] / secants[i];
            let b = slopes[i + 1] / secants[i];
            let s = a * a + b * b;
            if s > 9.0 {
                let t = 3.0 / s.sqrt();
                slopes[i] = t * a * secants[i];
                slopes[i + 1] = t * b * secants[i];
            }
        }
        MonotoneCubic { x, y, slopes }
    }

    fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        let i = match self.x.binary_search_by(|v| v.total_cmp(&t)) {
            Ok(i) => return self.y[i],
            Err(0) => 0,
            Err(i) if i >= n => n - 2,
            Err(i) => i - 1,
        };
        let h = self.x[i + 1] - self.x[i];
        let s = (t - self.x[i]) / h;
        let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        let h10 = s * (1.0 - s) * (1.0 - s);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);
        h00 * self.y[i] + h10 * h * self.slopes[i] + h01 * self.y[i + 1] + h11 * h * self.slopes[i + 1]
    }
}

/// Well separation L; wells centred at (∓L/2, 0).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WellGeometry {
    pub l: f64,
}

impl WellGeometry {
    pub fn new(l: f64, profile: &MagneticProfile) -> Result<Self> {
        if !(l.is_finite() && profile.a() < 0.5 * l) {
            return Err(Error::Config(format!("wells overlap: need a < L/2, got a = {}, L = {l}", profile.a())));
        }
        Ok(WellGeometry { l })
    }

    pub fn left_center(&self) -> [f64; 2] {
        [-0.5 * self.l, 0.0]
    }

    pub fn right_center(&self) -> [f64; 2] {
        [0.5 * self.l, 0.0]
    }

    /// L > (2 + √6) a, the separation condition under which the splitting
    /// asymptotics are proved.
    pub fn theorem_hypothesis(&self, a: f64) -> bool {
        self.l > (2.0 + 6f64.sqrt()) * a
    }
}

/// Flux quantities derived from a profile and a geometry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluxData {
    /// M = ∫(β − b1) du, negative.
    pub m: f64,
    /// N = 8|M|/(b1 L²), the relative flux deficit.
    pub n: f64,
    /// δ0 = (b1 − b0)/(2 b1).
    pub delta0: f64,
}

impl FluxData {
    pub fn new(profile: &MagneticProfile, geometry: &WellGeometry) -> Result<Self> {
        let m = profile.flux_deficit();
        let n = relative_flux(profile, geometry)?;
        Ok(FluxData { m, n, delta0: profile.delta0() })
    }
}

/// N = 8|M|/(b1 L²); errors unless 0 < N < a²/(L/2)².
pub fn relative_flux(profile: &MagneticProfile, geometry: &WellGeometry) -> Result<f64> {
    let n = 8.0 * profile.flux_deficit().abs() / (profile.b1() * geometry.l * geometry.l);
    let bound = (2.0 * profile.a() / geometry.l).powi(2);
    if !(n > 0.0 && n < 1.0 && n < bound) {
        return Err(Error::Invariant(format!("relative flux N = {n} outside (0, {bound})")));
    }
    Ok(n)
}

/// θ(0, x2) and k(0, x2): the gauge phase between the two one-well
/// potentials on the symmetry axis, and the x1-derivative of their sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisGauge {
    pub b1: f64,
    pub m: f64,
    pub l: f64,
}

impl AxisGauge {
    pub fn new(profile: &MagneticProfile, geometry: &WellGeometry) -> Self {
        AxisGauge { b1: profile.b1(), m: profile.flux_deficit(), l: geometry.l }
    }

    /// θ(0, x2) = b1 L x2/2 + 2M arctan(2x2/L).
    pub fn theta(&self, x2: f64) -> f64 {
        0.5 * self.b1 * self.l * x2 + 2.0 * self.m * (2.0 * x2 / self.l).atan()
    }

    /// k(0, x2) = b1 x2 + 2M x2/(L²/4 + x2²).
    pub fn k(&self, x2: f64) -> f64 {
        self.b1 * x2 + 2.0 * self.m * x2 / (0.25 * self.l * self.l + x2 * x2)
    }

    /// Analytic continuation of θ to complex x2 (principal arctan).
    pub fn theta_complex(&self, x2: Complex64) -> Complex64 {
        x2 * (0.5 * self.b1 * self.l) + (x2 * (2.0 / self.l)).atan() * (2.0 * self.m)
    }

    pub fn k_complex(&self, x2: Complex64) -> Complex64 {
        x2 * self.b1 + x2 * (2.0 * self.m) / (x2 * x2 + 0.25 * self.l * self.l)
    }
}

pub fn theta_on_axis(profile: &MagneticProfile, geometry: &WellGeometry, x2: f64) -> f64 {
    AxisGauge::new(profile, geometry).theta(x2)
}

pub fn k_on_axis(profile: &MagneticProfile, geometry: &WellGeometry, x2: f64) -> f64 {
    AxisGauge::new(profile, geometry).k(x2)
}

/// Field strength B(x) of the double well.
pub fn field_2d(profile: &MagneticProfile, geometry: &WellGeometry, x: [f64; 2]) -> f64 {
    let a2 = profile.a() * profile.a();
    for c in [geometry.left_center(), geometry.right_center()] {
        let d2 = (x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2);
        if d2 <= a2 {
            return profile.field(0.5 * d2);
        }
    }
    profile.b1()
}

/// The radial-gauge potential of the left well,
/// A_ℓ(x) = ∫₀¹ B_ℓ(x_ℓ + t(x − x_ℓ)) t (x − x_ℓ)^⊥ dt, by Gauss–Legendre in t.
pub fn left_well_potential(profile: &MagneticProfile, geometry: &WellGeometry, x: [f64; 2]) -> [f64; 2] {
    let c = geometry.left_center();
    let d = [x[0] - c[0], x[1] - c[1]];
    let d2 = d[0] * d[0] + d[1] * d[1];
    let rule = GaussLegendre::new(64);
    // Split at the well edge, where the integrand has a kink in smoothness.
    let t_edge = if d2 > 0.0 { (profile.a() / d2.sqrt()).min(1.0) } else { 1.0 };
    let mut weight = 0.0;
    for (lo, hi) in [(0.0, t_edge), (t_edge, 1.0)] {
        if hi > lo {
            weight += rule.integrate(lo, hi, |t| profile.field(0.5 * t * t * d2) * t);
        }
    }
    [-d[1] * weight, d[0] * weight]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg_a() -> (MagneticProfile, WellGeometry) {
        let p = MagneticProfile::builtin(1.0, 2.0, 1.0, 1.0).unwrap();
        let g = WellGeometry::new(5.0, &p).unwrap();
        (p, g)
    }

    const M_REF: f64 = -0.201_826_318_838_402_96;

    #[test]
    fn builtin_values() {
        let (p, _) = cfg_a();
        assert_eq!(p.beta(0.0).unwrap(), 1.0);
        assert_eq!(p.beta(0.5).unwrap(), 2.0);
        assert!((p.beta(0.25).unwrap() - 1.632_120_558_828_557_7).abs() < 1e-15);
        assert!((p.beta(0.125).unwrap() - 1.283_468_689_426_210_7).abs() < 1e-15);
        assert!(p.beta(-1e-3).is_err());
    }

    #[test]
    fn flux_deficit_matches_reference() {
        let (p, g) = cfg_a();
        assert!((p.flux_deficit() - M_REF).abs() < 1e-13);
        let n = relative_flux(&p, &g).unwrap();
        assert!((n - 8.0 * M_REF.abs() / 50.0).abs() < 1e-14);
        assert!((n - 0.032_292_211_014_144_47).abs() < 1e-14);
    }

    #[test]
    fn flux_deficit_two_dimensional_definition() {
        let (p, _) = cfg_a();
        let m2 = p.flux_deficit_2d().unwrap();
        assert!((m2 - p.flux_deficit()).abs() < 1e-10, "{m2} vs {}", p.flux_deficit());
    }

    #[test]
    fn alpha_outside_well_is_affine_in_r_squared() {
        let (p, _) = cfg_a();
        assert_eq!(p.alpha(0.0), 0.0);
        assert!((p.alpha(2.0) - 3.798_173_681_161_597).abs() < 1e-13);
        for r in [1.0, 1.3, 2.5, 7.0] {
            assert!((p.alpha(r) - (p.flux_deficit() + r * r)).abs() < 1e-12);
        }
    }

    #[test]
    fn alpha_is_continuous_across_break_points() {
        let (p, _) = cfg_a();
        let ua = p.edge();
        for k in [1usize, 17, 256, 511] {
            let v = ua * k as f64 / 512.0;
            let left = p.cumulative_flux(v * (1.0 - 1e-13));
            let right = p.cumulative_flux(v * (1.0 + 1e-13));
            assert!((left - right).abs() < 1e-12);
        }
    }

    #[test]
    fn axis_functions() {
        let (p, g) = cfg_a();
        let theta = theta_on_axis(&p, &g, 1.0);
        assert!((theta - 4.846_407_597_225_748).abs() < 1e-13);
        let k = k_on_axis(&p, &g, 1.0);
        assert!((k - 1.944_323_774_113_544).abs() < 1e-13);
        assert_eq!(theta_on_axis(&p, &g, 0.0), 0.0);
        assert_eq!(k_on_axis(&p, &g, -0.7), -k_on_axis(&p, &g, 0.7));
        assert_eq!(theta_on_axis(&p, &g, -0.7), -theta_on_axis(&p, &g, 0.7));
    }

    #[test]
    fn k_is_minus_twice_first_component_of_left_potential() {
        let (p, g) = cfg_a();
        for x2 in [-3.0, -0.4, 0.0, 0.9, 2.2] {
            let a = left_well_potential(&p, &g, [0.0, x2]);
            assert!((k_on_axis(&p, &g, x2) + 2.0 * a[0]).abs() < 1e-10);
        }
    }

    #[test]
    fn complex_axis_functions_continue_real_ones() {
        let (p, g) = cfg_a();
        let ax = AxisGauge::new(&p, &g);
        for x2 in [-1.5, 0.3, 4.0] {
            let z = Complex64::new(x2, 0.0);
            assert!((ax.theta_complex(z).re - ax.theta(x2)).abs() < 1e-14);
            assert!((ax.k_complex(z).re - ax.k(x2)).abs() < 1e-14);
        }
    }

    #[test]
    fn field_2d_pieces() {
        let (p, g) = cfg_a();
        assert_eq!(field_2d(&p, &g, [-2.5, 0.0]), 1.0);
        assert_eq!(field_2d(&p, &g, [2.5, 0.0]), 1.0);
        assert_eq!(field_2d(&p, &g, [0.0, 0.0]), 2.0);
        assert!((field_2d(&p, &g, [-2.0, 0.0]) - 1.283_468_689_426_210_7).abs() < 1e-15);
    }

    #[test]
    fn geometry_validation() {
        let (p, g) = cfg_a();
        assert!(g.theorem_hypothesis(p.a()));
        assert!(!WellGeometry::new(4.0, &p).unwrap().theorem_hypothesis(p.a()));
        assert!(WellGeometry::new(1.5, &p).is_err());
        assert!(MagneticProfile::builtin(2.0, 2.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn tabulated_profile_tracks_builtin() {
        let (p, _) = cfg_a();
        let u: Vec<f64> = (0..=400).map(|i| 0.6 * i as f64 / 400.0).collect();
        let beta: Vec<f64> = u.iter().map(|&x| p.field(x)).collect();
        let t = MagneticProfile::tabulated(1.0, 2.0, 1.0, u, beta).unwrap();
        assert!((t.flux_deficit() - p.flux_deficit()).abs() < 1e-7);
        assert!((t.beta(0.3).unwrap() - p.beta(0.3).unwrap()).abs() < 1e-6);
        assert_eq!(t.beta(0.7).unwrap(), 2.0);
    }

    #[test]
    fn tabulated_profile_rejects_bad_tables() {
        let u = vec![0.0, 0.25, 0.5];
        assert!(MagneticProfile::tabulated(1.0, 2.0, 1.0, u.clone(), vec![1.1, 1.5, 2.0]).is_err());
        assert!(MagneticProfile::tabulated(1.0, 2.0, 1.0, u.clone(), vec![1.0, 2.5, 2.0]).is_err());
        assert!(MagneticProfile::tabulated(1.0, 2.0, 1.0, u, vec![1.0, 1.5, 1.9]).is_err());
    }
}
