//! One-well radial ground state: the lowest eigenpair of
//! −h² r⁻¹∂_r r∂_r + ((α(r) − m h)/r)² on [0, r_max] with measure r dr.
//!
//! The operator is discretised by vertex-centred finite volumes, which keeps
//! the matrix symmetric in the weighted inner product, and the lowest
//! eigenpair is found by shifted inverse iteration on the tridiagonal
//! system. Solutions on n and 2n cells are Richardson-extrapolated.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profile::{MagneticProfile, WellGeometry};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialSolverConfig {
    pub r_max: f64,
    /// Number of cells of the coarse grid (the fine grid has 2n).
    pub n: usize,
    pub eig_tol: f64,
    /// Combine the n- and 2n-cell solutions to cancel the O(Δr²) error.
    pub richardson: bool,
}

impl RadialSolverConfig {
    pub fn for_geometry(geometry: &WellGeometry) -> Self {
        RadialSolverConfig { r_max: geometry.l + 3.0, n: 40_000, eig_tol: 1e-14, richardson: true }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2000 || self.n % 2 != 0 {
            return Err(Error::Config(format!("radial grid needs an even n >= 2000, got {}", self.n)));
        }
        if !(self.r_max > 0.0 && self.r_max.is_finite()) {
            return Err(Error::Config(format!("r_max must be positive, got {}", self.r_max)));
        }
        if !(self.eig_tol > 0.0 && self.eig_tol < 1e-6) {
            return Err(Error::Config(format!("eig_tol must lie in (0, 1e-6), got {}", self.eig_tol)));
        }
        Ok(())
    }
}

/// Planar-normalised radial eigenfunction, 2π∫φ² r dr = 1.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RadialGroundState {
    pub h: f64,
    pub mu: f64,
    pub angular_momentum: i32,
    pub dr: f64,
    pub r: Vec<f64>,
    pub phi: Vec<f64>,
    pub dphi: Vec<f64>,
    /// Potential ((α − m h)/r)² on the grid.
    pub potential: Vec<f64>,
    /// Relative residual of the discrete eigen-equation on the finest grid.
    pub residual: f64,
    /// |2π∫φ² r dr − 1| measured with Simpson's rule before the final rescaling.
    pub norm_defect: f64,
}

/// Lowest state in the angular-momentum-0 sector.
pub fn ground_state(h: f64, profile: &MagneticProfile, cfg: &RadialSolverConfig) -> Result<RadialGroundState> {
    lowest_state(h, profile, cfg, 0)
}

/// Lowest state of the radial operator in angular-momentum sector m.
pub fn lowest_state(h: f64, profile: &MagneticProfile, cfg: &RadialSolverConfig, m: i32) -> Result<RadialGroundState> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::domain(format!("h must be positive, got {h}")));
    }
    cfg.validate()?;
    let coarse = solve_grid(h, profile, cfg.r_max, cfg.n, m, cfg.eig_tol)?;
    let (mu, phi, residual) = if cfg.richardson {
        let fine = solve_grid(h, profile, cfg.r_max, 2 * cfg.n, m, cfg.eig_tol)?;
        let mu = (4.0 * fine.mu - coarse.mu) / 3.0;
        // Extrapolate ln φ: its O(Δr²) error term is smooth even where φ spans
        // hundreds of orders of magnitude.
        let phi: Vec<f64> = (0..=cfg.n)
            .map(|i| {
                let (f, c) = (fine.phi[2 * i], coarse.phi[i]);
                if f > 0.0 && c > 0.0 {
                    ((4.0 * f.ln() - c.ln()) / 3.0).exp()
                } else {
                    0.0
                }
            })
            .collect();
        (mu, phi, fine.residual.max(coarse.residual))
    } else {
        (coarse.mu, coarse.phi, coarse.residual)
    };
    let n = cfg.n;
    let dr = cfg.r_max / n as f64;
    let r: Vec<f64> = (0..=n).map(|i| i as f64 * dr).collect();
    let potential = coarse.potential;
    if phi[1..n].iter().any(|&v| v < 0.0) {
        return Err(Error::Eigen("ground state changes sign; grid too coarse".into()));
    }
    let norm = std::f64::consts::TAU * simpson(&phi.iter().zip(&r).map(|(p, x)| p * p * x).collect::<Vec<_>>(), dr);
    let scale = 1.0 / norm.sqrt();
    let phi: Vec<f64> = phi.iter().map(|p| p * scale).collect();
    let dphi = derivative(&phi, dr, m);
    Ok(RadialGroundState {
        h,
        mu,
        angular_momentum: m,
        dr,
        r,
        phi,
        dphi,
        potential,
        residual,
        norm_defect: (norm - 1.0).abs(),
    })
}

struct GridSolution {
    mu: f64,
    phi: Vec<f64>,
    potential: Vec<f64>,
    residual: f64,
}

const FLUSH: f64 = 1e-290;

#[allow(clippy::needless_range_loop)]
fn solve_grid(h: f64, profile: &MagneticProfile, r_max: f64, n: usize, m: i32, tol: f64) -> Result<GridSolution> {
    let dr = r_max / n as f64;
    let mh = m as f64 * h;
    let potential: Vec<f64> = (0..=n)
        .map(|i| {
            if i == 0 {
                if m == 0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            } else {
                let r = i as f64 * dr;
                ((profile.alpha(r) - mh) / r).powi(2)
            }
        })
        .collect();
    // Unknowns are nodes first..n-1; φ_n = 0 (Dirichlet), φ_0 = 0 when m ≠ 0.
    let first = usize::from(m != 0);
    let len = n - first;
    let h2 = h * h;
    let weight = |i: usize| if i == 0 { dr * dr / 8.0 } else { i as f64 * dr * dr };
    let mut diag = Vec::with_capacity(len);
    let mut off = Vec::with_capacity(len.saturating_sub(1));
    for i in first..n {
        let r_minus = if i == 0 { 0.0 } else { (i as f64 - 0.5) * dr };
        let r_plus = (i as f64 + 0.5) * dr;
        let k_ii = h2 * (r_minus + r_plus) / dr;
        diag.push(k_ii / weight(i) + potential[i]);
        if i + 1 < n {
            off.push(-h2 * r_plus / dr / (weight(i) * weight(i + 1)).sqrt());
        }
    }
    let sigma = 0.999 * profile.b0() * h;
    let factor = Ldl::new(&diag, &off, sigma)?;

    let mut x: Vec<f64> = (first..n)
        .map(|i| {
            let r = i as f64 * dr;
            weight(i).sqrt() * r.powi(m.abs()) * (-profile.b0() * r * r / (4.0 * h)).exp()
        })
        .collect();
    normalize(&mut x);
    let mut mu = f64::NAN;
    let mut converged = false;
    for _ in 0..2000 {
        let y = factor.solve(&x);
        let xy: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
        let new_mu = sigma + 1.0 / xy;
        let mut y = y;
        normalize(&mut y);
        if y.iter().sum::<f64>() < 0.0 {
            y.iter_mut().for_each(|v| *v = -*v);
        }
        for v in y.iter_mut() {
            if v.abs() < FLUSH {
                *v = 0.0;
            }
        }
        // Componentwise relative change: the far tail converges much more
        // slowly than the bulk, and it is the tail that w_h samples.
        let change = x
            .iter()
            .zip(&y)
            .filter(|(a, b)| **a != 0.0 && **b != 0.0)
            .map(|(a, b)| (b / a - 1.0).abs())
            .fold(0.0, f64::max);
        let mu_change = (new_mu - mu).abs();
        x = y;
        mu = new_mu;
        if mu_change <= tol * mu.abs() && change <= 1e-12 {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Eigen(format!("inverse iteration stalled at h = {h}, n = {n}")));
    }
    let mut res2 = 0.0;
    for k in 0..len {
        let mut v = (diag[k] - mu) * x[k];
        if k > 0 {
            v += off[k - 1] * x[k - 1];
        }
        if k + 1 < len {
            v += off[k] * x[k + 1];
        }
        res2 += v * v;
    }
    let residual = res2.sqrt() / mu.abs();
    let inv = 1.0 / std::f64::consts::TAU.sqrt();
    let mut phi = vec![0.0; n + 1];
    for (k, i) in (first..n).enumerate() {
        phi[i] = x[k] / weight(i).sqrt() * inv;
    }
    Ok(GridSolution { mu, phi, potential, residual })
}

fn normalize(x: &mut [f64]) {
    let s = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    x.iter_mut().for_each(|v| *v /= s);
}

/// LDLᵀ factorisation of the symmetric tridiagonal T − σI.
struct Ldl {
    d: Vec<f64>,
    l: Vec<f64>,
}

impl Ldl {
    fn new(diag: &[f64], off: &[f64], sigma: f64) -> Result<Self> {
        let n = diag.len();
        let mut d = vec![0.0; n];
        let mut l = vec![0.0; n.saturating_sub(1)];
        d[0] = diag[0] - sigma;
        for i in 1..n {
            l[i - 1] = off[i - 1] / d[i - 1];
            d[i] = diag[i] - sigma - l[i - 1] * off[i - 1];
        }
        if d.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::Eigen(
                "shifted radial matrix is not positive definite (assembly or shift error)".into(),
            ));
        }
        Ok(Ldl { d, l })
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = b.len();
        let mut z = b.to_vec();
        for i in 1..n {
            z[i] -= self.l[i - 1] * z[i - 1];
        }
        for (zi, di) in z.iter_mut().zip(&self.d) {
            *zi /= di;
        }
        for i in (0..n - 1).rev() {
            z[i] -= self.l[i] * z[i + 1];
        }
        z
    }
}

fn simpson(f: &[f64], dx: f64) -> f64 {
    let n = f.len() - 1;
    debug_assert!(n % 2 == 0);
    let mut s = f[0] + f[n];
    for (i, v) in f.iter().enumerate().take(n).skip(1) {
        s += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    s * dx / 3.0
}

/// Fourth-order centred differences; near r = 0 the function is continued
/// with parity (−1)^m, near r_max the order drops to two.
fn derivative(phi: &[f64], dr: f64, m: i32) -> Vec<f64> {
    let n = phi.len() - 1;
    let parity = if m % 2 == 0 { 1.0 } else { -1.0 };
    let at = |i: isize| -> f64 {
        if i < 0 {
            parity * phi[(-i) as usize]
        } else {
            phi[i as usize]
        }
    };
    let mut d = vec![0.0; n + 1];
    for i in 0..=n {
        let ii = i as isize;
        d[i] = if i + 2 <= n {
            (at(ii - 2) - 8.0 * at(ii - 1) + 8.0 * at(ii + 1) - at(ii + 2)) / (12.0 * dr)
        } else if i < n {
            (phi[i + 1] - phi[i - 1]) / (2.0 * dr)
        } else {
            (phi[n] - phi[n - 1]) / dr
        };
    }
    d
}

impl RadialGroundState {
    pub fn r_max(&self) -> f64 {
        *self.r.last().unwrap()
    }

    /// (ln φ(r), φ′(r)/φ(r)) by cubic Hermite interpolation of ln φ whose
    /// node slopes are φ′/φ; the slope itself is Hermite-interpolated using
    /// (φ′/φ)′ from the radial equation.
    pub fn log_value(&self, r: f64) -> Result<(f64, f64)> {
        let r_max = self.r_max();
        if !(r >= 0.0 && r <= r_max) {
            return Err(Error::OutOfRange { what: "radius", value: r, lo: 0.0, hi: r_max });
        }
        let n = self.r.len() - 1;
        let lo = ((r / self.dr) as usize).min(n - 1);
        let hi = lo + 1;
        if !(self.phi[lo] > 0.0 && self.phi[hi] > 0.0) {
            return Err(Error::domain(format!("ground state underflows at r = {r}")));
        }
        let g = |k: usize| self.dphi[k] / self.phi[k];
        let dg = |k: usize| {
            let rk = self.r[k];
            let gk = g(k);
            let tail = (self.potential[k] - self.mu) / (self.h * self.h) - gk * gk;
            if rk == 0.0 {
                0.5 * tail
            } else {
                tail - gk / rk
            }
        };
        let x0 = self.r[lo];
        let step = self.r[hi] - x0;
        let s = (r - x0) / step;
        let (h00, h10, h01, h11) = hermite(s);
        let y0 = self.phi[lo].ln();
        let y1 = self.phi[hi].ln();
        let ln_phi = h00 * y0 + h10 * step * g(lo) + h01 * y1 + h11 * step * g(hi);
        let slope = h00 * g(lo) + h10 * step * dg(lo) + h01 * g(hi) + h11 * step * dg(hi);
        Ok((ln_phi, slope))
    }

    /// (φ(r), φ′(r)).
    pub fn value(&self, r: f64) -> Result<(f64, f64)> {
        let (ln_phi, slope) = self.log_value(r)?;
        let v = ln_phi.exp();
        Ok((v, v * slope))
    }
}

fn hermite(s: f64) -> (f64, f64, f64, f64) {
    let t = 1.0 - s;
    ((1.0 + 2.0 * s) * t * t, s * t * t, s * s * (3.0 - 2.0 * s), s * s * (s - 1.0))
}

/// (φ_ℓ(0, x2), ∂₁φ_ℓ(0, x2)) on the symmetry axis; ∂₁φ_ℓ = (L/2)/r · φ′(r).
pub fn evaluate_on_axis(state: &RadialGroundState, geometry: &WellGeometry, x2: f64) -> Result<(f64, f64)> {
    let half = 0.5 * geometry.l;
    let r = half.hypot(x2);
    let (v, d) = state.value(r)?;
    Ok((v, half / r * d))
}

/// Two-term eigenvalue law of a radial well, where ½Hess B(x_ℓ) = (β′(0)/2)·Id,
/// d0 = √det H / b0 and d1 = (Tr H^{1/2})²/(2 b0).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenvalueExpansion {
    pub b0: f64,
    pub beta_prime: f64,
    pub d0: f64,
    pub d1: f64,
}

impl EigenvalueExpansion {
    /// The combination 2 n d0 + d1.
    pub fn coefficient(&self, n: u32) -> f64 {
        2.0 * n as f64 * self.d0 + self.d1
    }

    /// μ_n(h) ≈ b0 h + (2(n−1) d0 + d1) h² for the n-th eigenvalue, n ≥ 1.
    /// The ground state is n = 1, with second-order coefficient d1 = β′(0)/b0:
    /// the zero mode e^{−Φℓ/h} of the annihilation operator already gives
    /// μ₁ ≤ b0 h + d1 h² + O(h³).
    pub fn predicted(&self, n: u32, h: f64) -> f64 {
        assert!(n >= 1, "eigenvalues are numbered from 1");
        self.b0 * h + self.coefficient(n - 1) * h * h
    }
}

pub fn eigenvalue_expansion(profile: &MagneticProfile) -> EigenvalueExpansion {
    let bp = profile.beta_prime_at_zero();
    let b0 = profile.b0();
    // H = (β′(0)/2)·Id: √det H = β′(0)/2 and (Tr H^{1/2})² = 2β′(0).
    let half = 0.5 * bp;
    let d0 = half / b0;
    let d1 = (2.0 * half.sqrt()).powi(2) / (2.0 * b0);
    EigenvalueExpansion { b0, beta_prime: bp, d0, d1 }
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
    fn expansion_coefficients_for_builtin_profile() {
        let (p, _) = cfg_a();
        let e = eigenvalue_expansion(&p);
        assert!((e.beta_prime - 2.0).abs() < 1e-15);
        assert!((e.d0 - 1.0).abs() < 1e-15);
        assert!((e.d1 - 2.0).abs() < 1e-15);
        assert!((e.coefficient(1) - 4.0).abs() < 1e-15);
    }

    #[test]
    fn nearly_constant_field_gives_landau_level() {
        // b1/b0 - 1 tiny and a narrow well: the spectrum is the Landau level b h.
        let p = MagneticProfile::builtin(1.0, 1.0 + 1e-9, 0.2, 1.0).unwrap();
        let cfg = RadialSolverConfig { r_max: 6.0, n: 4000, eig_tol: 1e-14, richardson: true };
        let s = ground_state(0.3, &p, &cfg).unwrap();
        assert!((s.mu - 0.3).abs() < 1e-8, "{}", s.mu);
        // φ = (2π h)^{-1/2}... the Landau ground state e^{-b r²/4h}/√(2πh/b)
        let (v, d) = s.value(1.0).unwrap();
        let exact = (-1.0f64 / 1.2).exp() / (std::f64::consts::TAU * 0.3).sqrt();
        assert!((v / exact - 1.0).abs() < 1e-8);
        assert!((d / (exact * (-1.0 / 0.6)) - 1.0).abs() < 1e-7);
    }

    #[test]
    fn ground_state_is_positive_normalised_and_decaying() {
        let (p, g) = cfg_a();
        let cfg = RadialSolverConfig { n: 8000, ..RadialSolverConfig::for_geometry(&g) };
        let s = ground_state(0.1, &p, &cfg).unwrap();
        assert!(s.phi[..s.phi.len() - 1].iter().all(|&v| v > 0.0));
        assert!(s.norm_defect < 1e-8);
        assert!(s.residual < 1e-8);
        let peak = s.phi.iter().cloned().fold(0.0, f64::max);
        assert_eq!(peak, s.phi[0]);
        let i_a = (1.0 / s.dr) as usize;
        assert!(s.phi[i_a..s.phi.len() - 1].windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn axis_values_are_even_in_x2() {
        let (p, g) = cfg_a();
        let cfg = RadialSolverConfig { n: 8000, ..RadialSolverConfig::for_geometry(&g) };
        let s = ground_state(0.1, &p, &cfg).unwrap();
        let a = evaluate_on_axis(&s, &g, 0.8).unwrap();
        let b = evaluate_on_axis(&s, &g, -0.8).unwrap();
        assert_eq!(a, b);
        let (v0, d0) = evaluate_on_axis(&s, &g, 0.0).unwrap();
        let (v, d) = s.value(2.5).unwrap();
        assert_eq!((v0, d0), (v, d));
        assert!(s.value(s.r_max() + 0.1).is_err());
    }

    #[test]
    fn interpolation_matches_nodes() {
        let (p, g) = cfg_a();
        let cfg = RadialSolverConfig { n: 8000, ..RadialSolverConfig::for_geometry(&g) };
        let s = ground_state(0.1, &p, &cfg).unwrap();
        for i in [1usize, 10, 2000, 3000] {
            let (v, d) = s.value(s.r[i]).unwrap();
            assert!((v / s.phi[i] - 1.0).abs() < 1e-13);
            assert!((d / s.dphi[i] - 1.0).abs() < 1e-12);
        }
    }
}
