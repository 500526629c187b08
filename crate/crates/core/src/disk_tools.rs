//! One-variable constructions on the disk: the extremal function `φ_c`,
//! outer functions from a boundary modulus, the regularized inverses `ψ_n`,
//! finite Blaschke products, and the Taylor coefficient bound of Yanagihara
//! type for functions of small Smirnov seminorm.

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::series::{is_zero, TruncatedSeries};

/// Default boundary grid size, `2^12`.
pub const DEFAULT_GRID: usize = 1 << 12;

/// Samples of a positive function on the unit circle.
///
/// Sample `j` sits at the midpoint angle `θ_j = 2π(j + 1/2)/M`, so neither
/// `θ = 0` nor `θ = π` is a grid point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryModulus {
    grid: usize,
    values: Vec<f64>,
}

impl BoundaryModulus {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        let grid = values.len();
        if grid < 2 || !grid.is_power_of_two() {
            return Err(Error::param(format!("grid size {grid} is not a power of two ≥ 2")));
        }
        for (index, &value) in values.iter().enumerate() {
            if !(value > 0.0) || !value.is_finite() {
                return Err(Error::Modulus { index, value });
            }
        }
        Ok(BoundaryModulus { grid, values })
    }

    /// Samples `w(θ_j)` on the midpoint grid of size `grid`.
    pub fn from_fn(grid: usize, w: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new((0..grid).map(|j| w(grid_angle(grid, j))).collect())
    }

    /// `|g(e^{iθ_j})|` for a closed-form boundary function `g`.
    pub fn from_boundary_fn(grid: usize, g: impl Fn(Complex64) -> Complex64) -> Result<Self> {
        Self::from_fn(grid, |t| g(Complex64::from_polar(1.0, t)).norm())
    }

    pub fn grid(&self) -> usize {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn angle(&self, j: usize) -> f64 {
        grid_angle(self.grid, j)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: BoundaryModulusFile = serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
        if raw.grid != raw.values.len() {
            return Err(Error::Schema(format!(
                "grid = {} but {} values given",
                raw.grid,
                raw.values.len()
            )));
        }
        Self::new(raw.values)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("modulus serialization")
    }
}

#[derive(Deserialize)]
struct BoundaryModulusFile {
    grid: usize,
    values: Vec<f64>,
}

pub fn grid_angle(grid: usize, j: usize) -> f64 {
    2.0 * PI * (j as f64 + 0.5) / grid as f64
}

/// Taylor coefficients of `φ_c(z) = exp((c/8)(1+z)/(1−z)) − 1` through
/// degree `degree`.
pub fn phi_c(c: f64, degree: usize) -> Result<TruncatedSeries> {
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::param(format!("phi_c needs c > 0, got {c}")));
    }
    if degree < 1 {
        return Err(Error::param("phi_c needs degree ≥ 1"));
    }
    if c * (degree as f64).sqrt() > 700.0 {
        return Err(Error::Overflow(format!(
            "c·sqrt(N) = {:.1} > 700: coefficients exceed the double range",
            c * (degree as f64).sqrt()
        )));
    }
    // (c/8)(1+z)/(1−z) = c/8 + (c/4) Σ_{k≥1} z^k
    let mut u = vec![Complex64::new(c / 4.0, 0.0); degree + 1];
    u[0] = Complex64::new(c / 8.0, 0.0);
    let mut g = TruncatedSeries::univariate(u).exp_series()?;
    g.layer_mut(0)[0] -= 1.0;
    Ok(g)
}

/// An outer function on the disk, stored through its Herglotz data:
/// `log φ(z) = Σ_k b_k z^k` with `b_0 = c_0`, `b_k = 2 c_k`, where `c_k` are
/// the Fourier coefficients of `log W`.
#[derive(Clone, Debug)]
pub struct OuterFunction {
    log_coeffs: Vec<Complex64>,
}

impl OuterFunction {
    pub fn from_modulus(w: &BoundaryModulus) -> Self {
        let m = w.grid;
        let mut buf: Vec<Complex64> = w.values.iter().map(|v| Complex64::new(v.ln(), 0.0)).collect();
        FftPlanner::new().plan_fft_forward(m).process(&mut buf);
        // midpoint grid: c_k = e^{−iπk/M} · DFT_k / M
        let half = m / 2;
        let mut log_coeffs = Vec::with_capacity(half + 1);
        for (k, x) in buf.iter().enumerate().take(half + 1) {
            let ck = Complex64::from_polar(1.0, -PI * k as f64 / m as f64) * x / m as f64;
            let weight = if k == 0 || k == half { 1.0 } else { 2.0 };
            log_coeffs.push(ck * weight);
        }
        // k = 0 is real for real data; drop rounding noise in the imaginary part
        log_coeffs[0].im = 0.0;
        OuterFunction { log_coeffs }
    }

    /// Coefficients of `log φ`.
    pub fn log_coeffs(&self) -> &[Complex64] {
        &self.log_coeffs
    }

    /// `φ(z)` for `|z| ≤ 1`, evaluated as `exp` of the log-polynomial.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for b in self.log_coeffs.iter().rev() {
            acc = acc * z + b;
        }
        acc.exp()
    }

    pub fn series(&self, degree: usize) -> Result<TruncatedSeries> {
        let mut u = vec![Complex64::new(0.0, 0.0); degree + 1];
        for (k, b) in self.log_coeffs.iter().enumerate().take(degree + 1) {
            u[k] = *b;
        }
        TruncatedSeries::univariate(u).exp_series()
    }
}

/// Outer function with boundary modulus `W`, expanded through `degree`.
pub fn outer_from_modulus(w: &BoundaryModulus, degree: usize) -> Result<TruncatedSeries> {
    OuterFunction::from_modulus(w).series(degree)
}

/// Boundary modulus `min(n, 1/|ψ|)` of the regularized inverse `ψ_n`.
pub fn psi_n_modulus(psi_boundary: &BoundaryModulus, n: usize) -> Result<BoundaryModulus> {
    if n == 0 {
        return Err(Error::param("psi_n needs n ≥ 1"));
    }
    BoundaryModulus::new(
        psi_boundary
            .values
            .iter()
            .map(|&v| (n as f64).min(1.0 / v))
            .collect(),
    )
}

/// The outer function `ψ_n` with `|ψ_n| = min(n, 1/|ψ|)` on the circle.
pub fn psi_n_outer(psi_boundary: &BoundaryModulus, n: usize) -> Result<OuterFunction> {
    Ok(OuterFunction::from_modulus(&psi_n_modulus(psi_boundary, n)?))
}

pub fn psi_n_truncation(psi_boundary: &BoundaryModulus, n: usize, degree: usize) -> Result<TruncatedSeries> {
    psi_n_outer(psi_boundary, n)?.series(degree)
}

/// Finite Blaschke product: `z^m · Π_j (|a_j|/a_j)(a_j − z)/(1 − conj(a_j) z)`.
#[derive(Clone, Debug, PartialEq)]
pub struct BlaschkeProduct {
    origin_multiplicity: usize,
    zeros: Vec<Complex64>,
}

impl BlaschkeProduct {
    /// `zeros` must lie in the open disk; exact zeros at the origin are moved
    /// into the origin multiplicity.
    pub fn new(zeros: &[Complex64], origin_multiplicity: usize) -> Result<Self> {
        let mut origin = origin_multiplicity;
        let mut rest = Vec::with_capacity(zeros.len());
        for &a in zeros {
            if !(a.norm() < 1.0) {
                return Err(Error::param(format!("Blaschke zero {a} not in the open disk")));
            }
            if is_zero(a) {
                origin += 1;
            } else {
                rest.push(a);
            }
        }
        Ok(BlaschkeProduct {
            origin_multiplicity: origin,
            zeros: rest,
        })
    }

    pub fn zeros(&self) -> &[Complex64] {
        &self.zeros
    }

    pub fn origin_multiplicity(&self) -> usize {
        self.origin_multiplicity
    }

    /// `Σ_j (1 − |a_j|)` over all zeros, origin included.
    pub fn blaschke_sum(&self) -> f64 {
        self.origin_multiplicity as f64 + self.zeros.iter().map(|a| 1.0 - a.norm()).sum::<f64>()
    }

    /// Closed-form value; valid on the closed disk.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        let mut acc = z.powu(self.origin_multiplicity as u32);
        for &a in &self.zeros {
            acc *= (a.norm() / a) * (a - z) / (Complex64::new(1.0, 0.0) - a.conj() * z);
        }
        acc
    }

    pub fn series(&self, degree: usize) -> TruncatedSeries {
        let mut f = vec![Complex64::new(0.0, 0.0); degree + 1];
        if self.origin_multiplicity <= degree {
            f[self.origin_multiplicity] = Complex64::new(1.0, 0.0);
        }
        let mut next = vec![Complex64::new(0.0, 0.0); degree + 1];
        for &a in &self.zeros {
            let unimod = a.norm() / a;
            let ac = a.conj();
            // h = f·(a − z); g_n = h_n + conj(a)·g_{n−1}
            let mut prev = Complex64::new(0.0, 0.0);
            for n in 0..=degree {
                let shifted = if n > 0 { f[n - 1] } else { Complex64::new(0.0, 0.0) };
                let h = a * f[n] - shifted;
                let g = h + ac * prev;
                next[n] = g;
                prev = g;
            }
            for n in 0..=degree {
                f[n] = next[n] * unimod;
            }
        }
        TruncatedSeries::univariate(f)
    }
}

pub fn blaschke(zeros: &[Complex64], origin_multiplicity: usize, degree: usize) -> Result<TruncatedSeries> {
    Ok(BlaschkeProduct::new(zeros, origin_multiplicity)?.series(degree))
}

/// Outcome of the coefficient bound `|ĝ(n)| ≤ exp(√(8n·s)(1 + ε))`.
#[derive(Clone, Debug, Serialize)]
pub struct YanagiharaReport {
    pub seminorm: f64,
    pub slack: f64,
    /// `max_n |ĝ(n)| / bound_n`; ≤ 1 means every coefficient satisfies the bound.
    pub max_ratio: f64,
    pub worst_degree: usize,
    pub violations: usize,
    pub holds: bool,
}

pub const DEFAULT_YANAGIHARA_SLACK: f64 = 0.25;

pub fn yanagihara_bound_check(g: &TruncatedSeries, seminorm_estimate: f64, slack: f64) -> Result<YanagiharaReport> {
    if g.dim() != 1 {
        return Err(Error::UnsupportedDimension(g.dim()));
    }
    if !(seminorm_estimate >= 0.0) {
        return Err(Error::param("seminorm estimate must be non-negative"));
    }
    let mut max_ratio = 0.0f64;
    let mut worst_degree = 0;
    let mut violations = 0;
    for (n, c) in g.univariate_coeffs().iter().enumerate() {
        let log_bound = (8.0 * n as f64 * seminorm_estimate).sqrt() * (1.0 + slack);
        let mag = c.norm();
        let ratio = if mag == 0.0 { 0.0 } else { (mag.ln() - log_bound).exp() };
        if ratio > 1.0 {
            violations += 1;
        }
        if ratio > max_ratio {
            max_ratio = ratio;
            worst_degree = n;
        }
    }
    Ok(YanagiharaReport {
        seminorm: seminorm_estimate,
        slack,
        max_ratio,
        worst_degree,
        violations,
        holds: violations == 0,
    })
}
