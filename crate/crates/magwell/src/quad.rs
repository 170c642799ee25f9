//! Quadrature building blocks: Gauss–Legendre rules and adaptive Gauss–Kronrod.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Values that can be integrated: reals and complex numbers.
pub trait QuadValue: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {
    fn zero() -> Self;
    fn magnitude(self) -> f64;
}

impl QuadValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(self) -> f64 {
        self.abs()
    }
}

impl QuadValue for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn magnitude(self) -> f64 {
        self.norm()
    }
}

/// An n-point Gauss–Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes and weights by Newton iteration on the Legendre recurrence.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        let nf = n as f64;
        for i in 0..m {
            // Tricomi's initial guess for the i-th largest root.
            let theta = std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5);
            let mut x = (1.0 - (nf - 1.0) / (8.0 * nf * nf * nf)) * theta.cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() <= 1e-16 * x.abs().max(1.0) {
                    let (_, d) = legendre_with_derivative(n, x);
                    dp = d;
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = x;
            weights[i] = w;
            nodes[n - 1 - i] = -x;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        GaussLegendre { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped to [a, b].
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes.iter().zip(&self.weights).map(move |(&x, &w)| (mid + half * x, half * w))
    }

    pub fn integrate<V: QuadValue>(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> V) -> V {
        let mut acc = V::zero();
        for (x, w) in self.mapped(a, b) {
            acc = acc + f(x) * w;
        }
        acc
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let d = nf * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] =
    [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

/// One 15-point Kronrod panel with its embedded 7-point Gauss estimate.
/// Returns the Kronrod value and |K15 - G7| as an error estimate.
pub fn gauss_kronrod_15<V: QuadValue>(a: f64, b: f64, f: &mut impl FnMut(f64) -> V) -> (V, f64) {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let fc = f(mid);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let s = f(mid - dx) + f(mid + dx);
        kronrod = kronrod + s * WGK[j];
        if j % 2 == 1 {
            gauss = gauss + s * WG[j / 2];
        }
    }
    let kronrod = kronrod * half;
    let gauss = gauss * half;
    (kronrod, (kronrod - gauss).magnitude())
}

/// Stopping rule for [`adaptive`].
#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance { abs: 1e-13, rel: 1e-13, max_intervals: 4000 }
    }
}

impl Tolerance {
    pub fn new(abs: f64, rel: f64) -> Self {
        Tolerance { abs, rel, ..Default::default() }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult<V> {
    pub value: V,
    pub error: f64,
    pub intervals: usize,
}

/// Globally adaptive Gauss–Kronrod integration over [a, b], bisecting the
/// panel with the largest error estimate until the total estimate meets `tol`.
pub fn adaptive<V: QuadValue>(f: impl FnMut(f64) -> V, a: f64, b: f64, tol: Tolerance) -> Result<QuadResult<V>> {
    adaptive_with_breaks(f, &[a, b], tol)
}

/// As [`adaptive`] with the initial partition given by `breaks` (sorted).
pub fn adaptive_with_breaks<V: QuadValue>(
    mut f: impl FnMut(f64) -> V,
    breaks: &[f64],
    tol: Tolerance,
) -> Result<QuadResult<V>> {
    if breaks.len() < 2 {
        return Err(Error::domain("quadrature needs at least two break points"));
    }
    struct Panel<V> {
        a: f64,
        b: f64,
        value: V,
        error: f64,
    }
    let mut panels: Vec<Panel<V>> = Vec::with_capacity(64);
    for w in breaks.windows(2) {
        if w[1] < w[0] {
            return Err(Error::domain("quadrature break points must be sorted"));
        }
        if w[1] == w[0] {
            continue;
        }
        let (value, error) = gauss_kronrod_15(w[0], w[1], &mut f);
        panels.push(Panel { a: w[0], b: w[1], value, error });
    }
    if panels.is_empty() {
        return Ok(QuadResult { value: V::zero(), error: 0.0, intervals: 0 });
    }
    loop {
        let total = panels.iter().fold(V::zero(), |acc, p| acc + p.value);
        let err: f64 = panels.iter().map(|p| p.error).sum();
        if !err.is_finite() || !total.magnitude().is_finite() {
            return Err(Error::Quadrature(format!(
                "non-finite integrand on [{}, {}]",
                breaks[0],
                breaks[breaks.len() - 1]
            )));
        }
        if err <= tol.abs.max(tol.rel * total.magnitude()) {
            return Ok(QuadResult { value: total, error: err, intervals: panels.len() });
        }
        if panels.len() >= tol.max_intervals {
            return Err(Error::Quadrature(format!(
                "error estimate {err:e} above tolerance after {} panels on [{}, {}]",
                panels.len(),
                breaks[0],
                breaks[breaks.len() - 1]
            )));
        }
        let (worst, _) = panels
            .iter()
            .enumerate()
            .fold((0, -1.0), |best, (i, p)| if p.error > best.1 { (i, p.error) } else { best });
        let Panel { a, b, .. } = panels.swap_remove(worst);
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            return Err(Error::Quadrature(format!("panel [{a}, {b}] cannot be split further")));
        }
        let (v1, e1) = gauss_kronrod_15(a, m, &mut f);
        let (v2, e2) = gauss_kronrod_15(m, b, &mut f);
        panels.push(Panel { a, b: m, value: v1, error: e1 });
        panels.push(Panel { a: m, b, value: v2, error: e2 });
    }
}

/// Integral of a real function, panics-free convenience returning only the value.
pub fn integrate(f: impl FnMut(f64) -> f64, a: f64, b: f64, tol: Tolerance) -> Result<f64> {
    adaptive(f, a, b, tol).map(|r| r.value)
}
