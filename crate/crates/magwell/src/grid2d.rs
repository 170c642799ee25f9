//! Diagnostic 2D lattice discretization of (−ih∇ − A)² with both wells.
//!
//! Five-point stencil with Peierls link phases and Dirichlet boundary. The
//! field enters only through the flux of each plaquette, so no global vector
//! potential is needed and gauge invariance holds exactly. Far too coarse to
//! resolve the tunneling gap; it checks λ1 ≈ μ(h) and the two-level structure.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profile::{MagneticProfile, WellGeometry};
use crate::quad::GaussLegendre;

/// Largest admissible flux phase b1Δ²/h per plaquette.
pub const MAX_PLAQUETTE_PHASE: f64 = 0.2;

/// Square box [−half_width, half_width]² with spacing dx.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeParams {
    pub half_width: f64,
    pub dx: f64,
}

impl LatticeParams {
    /// Number of cells per side.
    pub fn cells(&self) -> Result<usize> {
        if !(self.half_width > 0.0 && self.dx > 0.0 && self.half_width.is_finite()) {
            return Err(Error::Config(format!("box {} and spacing {} must be positive", self.half_width, self.dx)));
        }
        let n = 2.0 * self.half_width / self.dx;
        let k = n.round();
        if (n - k).abs() > 1e-9 * n || k < 4.0 {
            return Err(Error::Config(format!(
                "box width {} is not a multiple (≥ 4) of the spacing {}",
                2.0 * self.half_width,
                self.dx
            )));
        }
        Ok(k as usize)
    }
}

/// Assembled lattice operator. Unknowns are the interior nodes, numbered
/// row by row; `hop_x[k]` and `hop_y[k]` are the factors e^{−iθ/h} of the
/// links from node k to its right and upper neighbours.
#[derive(Debug, Clone)]
pub struct Lattice {
    pub h: f64,
    pub params: LatticeParams,
    /// Interior nodes per side.
    pub side: usize,
    hop_x: Vec<Complex64>,
    hop_y: Vec<Complex64>,
    /// Sum of all plaquette fluxes.
    pub total_flux: f64,
}

impl Lattice {
    /// Builds the operator from the flux through each cell. `flux(x, y)`
    /// gets the lower-left corner of the cell.
    pub fn from_plaquette_flux(h: f64, params: LatticeParams, flux: impl Fn(f64, f64) -> f64 + Sync) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::domain(format!("h must be positive, got {h}")));
        }
        let cells = params.cells()?;
        let x0 = -params.half_width;
        let dx = params.dx;
        // Per row of cells: the cumulative flux from the left edge is the
        // phase of the vertical link at each node (horizontal links carry 0).
        let rows: Vec<(Vec<f64>, f64)> = (0..cells)
            .into_par_iter()
            .map(|j| {
                let y = x0 + j as f64 * dx;
                let mut acc = 0.0;
                let mut col = Vec::with_capacity(cells + 1);
                col.push(0.0);
                for i in 0..cells {
                    acc += flux(x0 + i as f64 * dx, y);
                    col.push(acc);
                }
                (col, acc)
            })
            .collect();
        let total_flux = rows.iter().map(|r| r.1).sum();
        let side = cells - 1;
        let hop_x = vec![Complex64::new(1.0, 0.0); side * side];
        let mut hop_y = vec![Complex64::new(1.0, 0.0); side * side];
        for j in 0..side {
            // Interior row j sits on node row j + 1; its upward link spans cell row j + 1.
            let cumulative = &rows[j + 1].0;
            for i in 0..side {
                hop_y[j * side + i] = Complex64::from_polar(1.0, -cumulative[i + 1] / h);
            }
        }
        Ok(Lattice { h, params, side, hop_x, hop_y, total_flux })
    }

    /// The double-well field: flux b1Δ² per cell plus the well corrections,
    /// integrated by tensor Gauss–Legendre on cells that meet a well.
    pub fn assemble(h: f64, profile: &MagneticProfile, geometry: &WellGeometry, params: LatticeParams) -> Result<Self> {
        let b1 = profile.b1();
        let dx = params.dx;
        let phase = b1 * dx * dx / h;
        if phase > MAX_PLAQUETTE_PHASE {
            return Err(Error::Config(format!(
                "flux phase per plaquette {phase:.3} exceeds {MAX_PLAQUETTE_PHASE}; need dx ≤ {:.4}",
                (MAX_PLAQUETTE_PHASE * h / b1).sqrt()
            )));
        }
        let a = profile.a();
        let centers = [geometry.left_center(), geometry.right_center()];
        for c in centers {
            if c[0].abs() + a > params.half_width || c[1].abs() + a > params.half_width {
                return Err(Error::Config(format!("box half-width {} does not contain both wells", params.half_width)));
            }
        }
        let rule = GaussLegendre::new(16);
        let flux = |x: f64, y: f64| -> f64 {
            let mut f = b1 * dx * dx;
            for c in centers {
                // Distance from the well centre to the cell.
                let nx = (c[0] - (x + dx)).max(x - c[0]).max(0.0);
                let ny = (c[1] - (y + dx)).max(y - c[1]).max(0.0);
                if nx * nx + ny * ny >= a * a {
                    continue;
                }
                f += rule.integrate(x, x + dx, |s| {
                    rule.integrate(y, y + dx, |t| {
                        let u = 0.5 * ((s - c[0]).powi(2) + (t - c[1]).powi(2));
                        profile.field(u) - b1
                    })
                });
            }
            f
        };
        Self::from_plaquette_flux(h, params, flux)
    }

    pub fn unknowns(&self) -> usize {
        self.side * self.side
    }

    fn scale(&self) -> f64 {
        self.h * self.h / (self.params.dx * self.params.dx)
    }

    /// Gershgorin bound 8h²/Δ² on the spectrum.
    pub fn upper_bound(&self) -> f64 {
        8.0 * self.scale()
    }

    /// The same operator after the lattice gauge transformation
    /// ψ ↦ e^{iχ/h}ψ, with χ given at the interior nodes.
    pub fn gauge_transformed(&self, chi: &[f64]) -> Result<Self> {
        if chi.len() != self.unknowns() {
            return Err(Error::domain(format!("gauge needs {} values, got {}", self.unknowns(), chi.len())));
        }
        let n = self.side;
        let mut out = self.clone();
        for k in 0..chi.len() {
            if k % n + 1 < n {
                out.hop_x[k] *= Complex64::from_polar(1.0, (chi[k] - chi[k + 1]) / self.h);
            }
            if k + n < chi.len() {
                out.hop_y[k] *= Complex64::from_polar(1.0, (chi[k] - chi[k + n]) / self.h);
            }
        }
        Ok(out)
    }

    /// y = Hx.
    pub fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        self.apply_affine(x, y, 1.0, 0.0, 0.0);
    }

    /// y ← α(Hx − cx) − βy, the fused step of the Chebyshev recurrence.
    fn apply_affine(&self, x: &[Complex64], y: &mut [Complex64], alpha: f64, c: f64, beta: f64) {
        let n = self.side;
        let s = self.scale();
        let diag = 4.0 * s - c;
        y.par_chunks_mut(n).enumerate().for_each(|(j, row)| {
            for (i, out) in row.iter_mut().enumerate() {
                let k = j * n + i;
                let mut acc = Complex64::new(0.0, 0.0);
                if i + 1 < n {
                    acc += self.hop_x[k] * x[k + 1];
                }
                if i > 0 {
                    acc += self.hop_x[k - 1].conj() * x[k - 1];
                }
                if j + 1 < n {
                    acc += self.hop_y[k] * x[k + n];
                }
                if j > 0 {
                    acc += self.hop_y[k - n].conj() * x[k - n];
                }
                let hx = x[k] * diag - acc * s;
                *out = if beta == 0.0 { hx * alpha } else { hx * alpha - *out * beta };
            }
        });
    }

    /// Node coordinates of unknown k.
    pub fn position(&self, k: usize) -> [f64; 2] {
        let x0 = -self.params.half_width + self.params.dx;
        [x0 + (k % self.side) as f64 * self.params.dx, x0 + (k / self.side) as f64 * self.params.dx]
    }
}

/// Exact total flux of the double-well field through the box.
pub fn box_flux(profile: &MagneticProfile, params: LatticeParams) -> f64 {
    let w = 2.0 * params.half_width;
    profile.b1() * w * w + 2.0 * std::f64::consts::TAU * profile.flux_deficit()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenConfig {
    /// Number of wanted eigenpairs.
    pub count: usize,
    /// Subspace dimension (> count).
    pub block: usize,
    /// Chebyshev filter degree.
    pub degree: usize,
    /// Residual tolerance relative to the largest wanted eigenvalue.
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for EigenConfig {
    fn default() -> Self {
        EigenConfig { count: 3, block: 8, degree: 160, tol: 1e-9, max_iter: 200, seed: 0x5eed }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenResult {
    /// Lowest eigenvalues in increasing order.
    pub eigenvalues: Vec<f64>,
    /// ‖Hv − λv‖ for each returned pair.
    pub residuals: Vec<f64>,
    pub h: f64,
    pub params: LatticeParams,
    pub unknowns: usize,
    pub iterations: usize,
    pub matvecs: usize,
    pub seed: u64,
}

impl EigenResult {
    /// λ2 − λ1 relative to λ3 − λ1.
    pub fn two_level_ratio(&self) -> f64 {
        let l = &self.eigenvalues;
        (l[1] - l[0]) / (l[2] - l[0])
    }
}

/// Eigenpairs with the eigenvectors kept.
pub struct EigenPairs {
    pub result: EigenResult,
    pub vectors: Vec<Vec<Complex64>>,
}

type Block = Vec<Vec<Complex64>>;

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Modified Gram–Schmidt, applied twice.
fn orthonormalize(v: &mut Block) -> Result<()> {
    for _ in 0..2 {
        for k in 0..v.len() {
            let (done, rest) = v.split_at_mut(k);
            let col = &mut rest[0];
            for q in done.iter() {
                let c = dot(q, col);
                col.iter_mut().zip(q).for_each(|(x, y)| *x -= c * y);
            }
            let nrm = norm(col);
            if !(nrm > 0.0 && nrm.is_finite()) {
                return Err(Error::Eigen("subspace lost rank".into()));
            }
            col.iter_mut().for_each(|x| *x /= nrm);
        }
    }
    Ok(())
}

fn apply_block(op: &Lattice, v: &Block) -> Block {
    v.iter()
        .map(|x| {
            let mut y = vec![Complex64::new(0.0, 0.0); x.len()];
            op.apply(x, &mut y);
            y
        })
        .collect()
}

/// Rayleigh–Ritz on span(v); returns Ritz values and rotates v and hv.
fn rayleigh_ritz(v: &mut Block, hv: &mut Block) -> Vec<f64> {
    let m = v.len();
    let g = DMatrix::from_fn(m, m, |i, j| dot(&v[i], &hv[j]));
    let g = (&g + g.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(g);
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let rotate = |b: &Block| -> Block {
        order
            .iter()
            .map(|&c| {
                let mut out = vec![Complex64::new(0.0, 0.0); b[0].len()];
                for (r, col) in b.iter().enumerate() {
                    let w = eig.eigenvectors[(r, c)];
                    out.iter_mut().zip(col).for_each(|(o, x)| *o += w * x);
                }
                out
            })
            .collect()
    };
    *v = rotate(v);
    *hv = rotate(hv);
    order.iter().map(|&c| eig.eigenvalues[c]).collect()
}

/// Scaled Chebyshev filter damping [cut, upper] relative to `lowest`.
fn chebyshev_filter(op: &Lattice, x: &mut Block, degree: usize, lowest: f64, cut: f64, upper: f64) {
    let e = 0.5 * (upper - cut);
    let c = 0.5 * (upper + cut);
    let sigma0 = e / (lowest - c);
    let tau = 2.0 / sigma0;
    for prev in x.iter_mut() {
        let mut cur = vec![Complex64::new(0.0, 0.0); prev.len()];
        op.apply_affine(prev, &mut cur, sigma0 / e, c, 0.0);
        let mut sigma = sigma0;
        for _ in 1..degree {
            let sigma_new = 1.0 / (tau - sigma);
            // prev ← next; the old prev is only needed inside the fused step.
            op.apply_affine(&cur, prev, 2.0 * sigma_new / e, c, sigma * sigma_new);
            std::mem::swap(prev, &mut cur);
            sigma = sigma_new;
        }
        *prev = cur;
    }
}

/// Lowest eigenpairs by Chebyshev-filtered subspace iteration with a
/// deterministic random start.
pub fn lowest_eigenpairs(op: &Lattice, cfg: &EigenConfig) -> Result<EigenPairs> {
    let n = op.unknowns();
    if cfg.count == 0 || cfg.block <= cfg.count || cfg.block > n {
        return Err(Error::Config(format!("need 0 < count < block ≤ {n}, got {} and {}", cfg.count, cfg.block)));
    }
    if cfg.degree < 2 || !(cfg.tol > 0.0) {
        return Err(Error::Config("filter degree must be at least 2 and tol positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut v: Block = (0..cfg.block)
        .map(|_| (0..n).map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)).collect())
        .collect();
    run_filtered_iteration(op, cfg, &mut v)
}

/// As [`lowest_eigenpairs`] but starting from the given vectors (padded
/// with random ones up to the block size).
pub fn lowest_eigenpairs_from(op: &Lattice, cfg: &EigenConfig, start: Vec<Vec<Complex64>>) -> Result<EigenPairs> {
    let n = op.unknowns();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut v = start;
    if v.iter().any(|x| x.len() != n) {
        return Err(Error::domain("start vectors have the wrong length"));
    }
    while v.len() < cfg.block {
        v.push((0..n).map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)).collect());
    }
    run_filtered_iteration(op, cfg, &mut v)
}

fn run_filtered_iteration(op: &Lattice, cfg: &EigenConfig, v: &mut Block) -> Result<EigenPairs> {
    let upper = op.upper_bound();
    orthonormalize(v)?;
    let mut hv = apply_block(op, v);
    let mut matvecs = v.len();
    let mut theta = rayleigh_ritz(v, &mut hv);
    for iter in 1..=cfg.max_iter {
        let residuals: Vec<f64> = (0..cfg.count)
            .map(|k| {
                let r: Vec<Complex64> = hv[k].iter().zip(&v[k]).map(|(a, b)| a - theta[k] * b).collect();
                norm(&r)
            })
            .collect();
        let target = cfg.tol * theta[cfg.count - 1].abs().max(f64::MIN_POSITIVE);
        if iter > 1 && residuals.iter().all(|&r| r <= target) {
            let result = EigenResult {
                eigenvalues: theta[..cfg.count].to_vec(),
                residuals,
                h: op.h,
                params: op.params,
                unknowns: op.unknowns(),
                iterations: iter - 1,
                matvecs,
                seed: cfg.seed,
            };
            return Ok(EigenPairs { result, vectors: v[..cfg.count].to_vec() });
        }
        let cut = theta[cfg.block - 1];
        let lowest = theta[0];
        if !(cut > lowest && cut < upper) {
            return Err(Error::Eigen(format!("degenerate filter interval [{lowest}, {cut}]")));
        }
        chebyshev_filter(op, v, cfg.degree, lowest, cut, upper);
        matvecs += cfg.degree * cfg.block;
        orthonormalize(v)?;
        hv = apply_block(op, v);
        matvecs += cfg.block;
        theta = rayleigh_ritz(v, &mut hv);
    }
    Err(Error::Eigen(format!("no convergence in {} filter steps", cfg.max_iter)))
}

/// Assemble and solve for the lowest eigenvalues of the double well.
pub fn solve(
    h: f64,
    profile: &MagneticProfile,
    geometry: &WellGeometry,
    params: LatticeParams,
    cfg: &EigenConfig,
) -> Result<EigenResult> {
    let op = Lattice::assemble(h, profile, geometry, params)?;
    Ok(lowest_eigenpairs(&op, cfg)?.result)
}

/// Random lattice gauge χ at the interior nodes, uniform in [−πh, πh].
pub fn random_gauge(op: &Lattice, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let span = std::f64::consts::PI * op.h;
    (0..op.unknowns()).map(|_| rng.gen_range(-span..span)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_vector(n: usize, seed: u64) -> Vec<Complex64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)).collect()
    }

    fn constant_field(b: f64, h: f64, half_width: f64, dx: f64) -> Lattice {
        Lattice::from_plaquette_flux(h, LatticeParams { half_width, dx }, |_, _| b * dx * dx).unwrap()
    }

    #[test]
    fn operator_is_hermitian() {
        let op = constant_field(1.3, 0.4, 1.0, 0.1);
        let op = op.gauge_transformed(&random_gauge(&op, 3)).unwrap();
        let n = op.unknowns();
        let (x, y) = (random_vector(n, 1), random_vector(n, 2));
        let mut hx = vec![Complex64::new(0.0, 0.0); n];
        let mut hy = hx.clone();
        op.apply(&x, &mut hx);
        op.apply(&y, &mut hy);
        assert!((dot(&y, &hx) - dot(&hy, &x)).norm() < 1e-12 * dot(&x, &x).norm());
    }

    #[test]
    fn zero_field_gives_the_discrete_dirichlet_laplacian() {
        let (h, half, dx) = (1.0, 1.0, 0.05);
        let op = constant_field(0.0, h, half, dx);
        let cfg = EigenConfig { count: 3, block: 8, degree: 40, tol: 1e-10, ..Default::default() };
        let r = lowest_eigenpairs(&op, &cfg).unwrap().result;
        let cells = 40.0;
        let mode = |p: f64| 2.0 - 2.0 * (std::f64::consts::PI * p / cells).cos();
        let exact =
            [mode(1.0) + mode(1.0), mode(1.0) + mode(2.0), mode(2.0) + mode(1.0)].map(|v| v * h * h / (dx * dx));
        for (l, e) in r.eigenvalues.iter().zip(exact) {
            assert!((l - e).abs() < 1e-9 * e, "{l} vs {e}");
        }
    }

    #[test]
    fn constant_field_ground_state_is_the_landau_level() {
        // About fourteen nearly degenerate lowest-level states fit in the box;
        // the block has to hold all of them.
        let (b, h) = (1.0, 0.1);
        let cfg = EigenConfig { count: 1, block: 24, degree: 60, tol: 1e-8, ..Default::default() };
        let err = |dx: f64| {
            let r = lowest_eigenpairs(&constant_field(b, h, 1.5, dx), &cfg).unwrap().result;
            (r.eigenvalues[0] - b * h).abs() / (b * h)
        };
        let (coarse, fine) = (err(0.05), err(0.025));
        assert!(coarse < 5e-3);
        // Second order in the spacing.
        assert!((coarse / fine - 4.0).abs() < 0.3, "{coarse} {fine}");
    }

    #[test]
    fn eigenvalues_are_gauge_invariant() {
        let op = constant_field(2.0, 0.5, 1.5, 0.05);
        let cfg = EigenConfig { count: 3, block: 8, degree: 60, tol: 1e-10, ..Default::default() };
        let a = lowest_eigenpairs(&op, &cfg).unwrap().result;
        let moved = op.gauge_transformed(&random_gauge(&op, 11)).unwrap();
        let b = lowest_eigenpairs(&moved, &cfg).unwrap().result;
        for (x, y) in a.eigenvalues.iter().zip(&b.eigenvalues) {
            assert!((x - y).abs() <= 1e-12 * x.abs());
        }
    }

    #[test]
    fn plaquette_fluxes_add_up_to_the_box_flux() {
        let p = MagneticProfile::builtin(1.0, 2.0, 1.0, 1.0).unwrap();
        let g = WellGeometry::new(5.0, &p).unwrap();
        let params = LatticeParams { half_width: 6.0, dx: 0.03 };
        let op = Lattice::assemble(0.5, &p, &g, params).unwrap();
        let exact = box_flux(&p, params);
        assert!((op.total_flux - exact).abs() < 1e-10 * exact);
    }

    #[test]
    fn refuses_coarse_grids_and_bad_boxes() {
        let p = MagneticProfile::builtin(1.0, 2.0, 1.0, 1.0).unwrap();
        let g = WellGeometry::new(5.0, &p).unwrap();
        let coarse = Lattice::assemble(0.1, &p, &g, LatticeParams { half_width: 6.0, dx: 0.2 });
        assert!(matches!(coarse, Err(Error::Config(msg)) if msg.contains("need dx")));
        assert!(Lattice::assemble(0.5, &p, &g, LatticeParams { half_width: 3.0, dx: 0.03 }).is_err());
        assert!(LatticeParams { half_width: 1.0, dx: 0.3 }.cells().is_err());
    }
}
