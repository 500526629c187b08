//! Degree-truncated power series in `d` complex variables.
//!
//! Coefficients are stored densely, one contiguous vector per homogeneous
//! degree layer, indexed by graded-lex rank (see [`crate::multiindex`]). The
//! truncation degree is part of the value: arithmetic between series of
//! different degrees truncates to the smaller one and sets the
//! [`TruncatedSeries::is_truncated`] flag.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::error::{Error, Result};
use crate::multiindex::{layer_size, ln_multinomial, rank_in_layer, visit_layer, MultiIndex};
use crate::par;

const UNIT_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct TruncatedSeries {
    dim: usize,
    degree: usize,
    layers: Vec<Vec<Complex64>>,
    truncated: bool,
}

impl TruncatedSeries {
    pub fn zero(dim: usize, degree: usize) -> Self {
        assert!(dim >= 1, "dimension must be positive");
        let layers = (0..=degree)
            .map(|n| vec![Complex64::new(0.0, 0.0); layer_size(dim, n)])
            .collect();
        TruncatedSeries {
            dim,
            degree,
            layers,
            truncated: false,
        }
    }

    pub fn constant(dim: usize, degree: usize, value: Complex64) -> Self {
        let mut s = Self::zero(dim, degree);
        s.layers[0][0] = value;
        s
    }

    pub fn one(dim: usize, degree: usize) -> Self {
        Self::constant(dim, degree, Complex64::new(1.0, 0.0))
    }

    /// `c·z^α`, truncated at `degree` (zero if `|α| > degree`).
    pub fn monomial(alpha: &MultiIndex, value: Complex64, degree: usize) -> Self {
        let mut s = Self::zero(alpha.dim(), degree);
        if alpha.degree() <= degree {
            s.layers[alpha.degree()][alpha.rank()] = value;
        }
        s
    }

    /// The coordinate function `z_i` (0-based).
    pub fn variable(dim: usize, i: usize, degree: usize) -> Self {
        Self::monomial(&MultiIndex::axis(dim, i, 1), Complex64::new(1.0, 0.0), degree)
    }

    /// One-variable series from its coefficient list; degree = `len - 1`.
    pub fn univariate(coeffs: Vec<Complex64>) -> Self {
        assert!(!coeffs.is_empty(), "need at least the constant coefficient");
        TruncatedSeries {
            dim: 1,
            degree: coeffs.len() - 1,
            layers: coeffs.into_iter().map(|c| vec![c]).collect(),
            truncated: false,
        }
    }

    pub fn univariate_real(coeffs: &[f64]) -> Self {
        Self::univariate(coeffs.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    /// Builds a series from explicit layers; every layer must have the
    /// graded-lex size for its degree.
    pub fn from_layers(dim: usize, layers: Vec<Vec<Complex64>>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Dimension(0));
        }
        if layers.is_empty() {
            return Err(Error::param("at least one layer required"));
        }
        for (n, l) in layers.iter().enumerate() {
            if l.len() != layer_size(dim, n) {
                return Err(Error::param(format!(
                    "layer {n} has {} entries, expected {}",
                    l.len(),
                    layer_size(dim, n)
                )));
            }
        }
        Ok(TruncatedSeries {
            dim,
            degree: layers.len() - 1,
            layers,
            truncated: false,
        })
    }

    pub fn from_coeffs<I>(dim: usize, degree: usize, coeffs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (MultiIndex, Complex64)>,
    {
        let mut s = Self::zero(dim, degree);
        for (alpha, c) in coeffs {
            s.set_coeff(&alpha, c)?;
        }
        Ok(s)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Truncation degree `N`.
    #[inline]
    pub fn degree(&self) -> usize {
        self.degree
    }

    #[inline]
    pub fn is_truncated(&self) -> bool {
        self.truncated
    }

    pub fn with_truncated_flag(mut self, flag: bool) -> Self {
        self.truncated = flag;
        self
    }

    pub fn layer(&self, n: usize) -> &[Complex64] {
        &self.layers[n]
    }

    pub fn layer_mut(&mut self, n: usize) -> &mut [Complex64] {
        &mut self.layers[n]
    }

    pub fn layers(&self) -> &[Vec<Complex64>] {
        &self.layers
    }

    pub fn coeff(&self, alpha: &MultiIndex) -> Complex64 {
        assert_eq!(alpha.dim(), self.dim, "multi-index dimension");
        let n = alpha.degree();
        if n > self.degree {
            return Complex64::new(0.0, 0.0);
        }
        self.layers[n][alpha.rank()]
    }

    pub fn set_coeff(&mut self, alpha: &MultiIndex, value: Complex64) -> Result<()> {
        if alpha.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                left: self.dim,
                right: alpha.dim(),
            });
        }
        let n = alpha.degree();
        if n > self.degree {
            return Err(Error::Range {
                degree: n,
                max: self.degree,
            });
        }
        self.layers[n][alpha.rank()] = value;
        Ok(())
    }

    /// Coefficients of a one-variable series, constant term first.
    pub fn univariate_coeffs(&self) -> Vec<Complex64> {
        assert_eq!(self.dim, 1, "univariate_coeffs on a {}-variable series", self.dim);
        self.layers.iter().map(|l| l[0]).collect()
    }

    /// Nonzero coefficients in (degree, graded-lex) order.
    pub fn nonzero_terms(&self) -> Vec<(MultiIndex, Complex64)> {
        let mut out = Vec::new();
        for (n, layer) in self.layers.iter().enumerate() {
            let mut i = 0;
            visit_layer(self.dim, n, |a| {
                let c = layer[i];
                if c != Complex64::new(0.0, 0.0) {
                    out.push((MultiIndex::new(a.to_vec()).unwrap(), c));
                }
                i += 1;
            });
        }
        out
    }

    /// Largest degree carrying a nonzero coefficient.
    pub fn max_nonzero_degree(&self) -> Option<usize> {
        (0..=self.degree)
            .rev()
            .find(|&n| self.layers[n].iter().any(|c| !is_zero(c)))
    }

    /// `Some(n)` when every nonzero coefficient has degree `n`; the zero
    /// series counts as homogeneous of degree 0.
    pub fn homogeneous_degree(&self) -> Option<usize> {
        let nonzero: Vec<usize> = (0..=self.degree)
            .filter(|&n| self.layers[n].iter().any(|c| !is_zero(c)))
            .collect();
        match nonzero.as_slice() {
            [] => Some(0),
            [n] => Some(*n),
            _ => None,
        }
    }

    fn check_dim(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                left: self.dim,
                right: other.dim,
            });
        }
        Ok(())
    }

    /// Copy truncated to degree `n ≤ self.degree`. The truncation flag is
    /// set only if a nonzero coefficient was dropped.
    pub fn truncate(&self, n: usize) -> Self {
        let n = n.min(self.degree);
        let lost = self.layers[n + 1..]
            .iter()
            .any(|l| l.iter().any(|c| !is_zero(c)));
        TruncatedSeries {
            dim: self.dim,
            degree: n,
            layers: self.layers[..=n].to_vec(),
            truncated: self.truncated || lost,
        }
    }

    /// Copy with the truncation degree raised to `n`; new layers are zero.
    /// Only meaningful for polynomials whose degree is already ≤ the old `N`.
    pub fn pad_to(&self, n: usize) -> Self {
        let mut out = self.clone();
        for k in self.degree + 1..=n {
            out.layers
                .push(vec![Complex64::new(0.0, 0.0); layer_size(self.dim, k)]);
        }
        out.degree = out.degree.max(n);
        out
    }

    fn zip_layers(&self, other: &Self, op: impl Fn(Complex64, Complex64) -> Complex64) -> Result<Self> {
        self.check_dim(other)?;
        let n = self.degree.min(other.degree);
        let layers = (0..=n)
            .map(|k| {
                self.layers[k]
                    .iter()
                    .zip(&other.layers[k])
                    .map(|(a, b)| op(*a, *b))
                    .collect()
            })
            .collect();
        Ok(TruncatedSeries {
            dim: self.dim,
            degree: n,
            layers,
            truncated: self.truncated || other.truncated || self.degree != other.degree,
        })
    }

    #[allow(clippy::should_implement_trait)]
    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_layers(other, |a, b| a + b)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_layers(other, |a, b| a - b)
    }

    pub fn scale(&self, lambda: Complex64) -> Self {
        self.map_coeffs(|_, c| c * lambda)
    }

    fn map_coeffs(&self, f: impl Fn(usize, Complex64) -> Complex64) -> Self {
        TruncatedSeries {
            dim: self.dim,
            degree: self.degree,
            layers: self
                .layers
                .iter()
                .enumerate()
                .map(|(n, l)| l.iter().map(|&c| f(n, c)).collect())
                .collect(),
            truncated: self.truncated,
        }
    }

    /// Cauchy product truncated to the common degree.
    ///
    /// Output layers are computed independently (in parallel with the
    /// `parallel` feature); each output coefficient is accumulated in a
    /// fixed order, so the result does not depend on the schedule.
    pub fn multiply(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        let n_max = self.degree.min(other.degree);
        let d = self.dim;
        let layers = par::map_range(n_max + 1, |n| {
            let mut out = vec![Complex64::new(0.0, 0.0); layer_size(d, n)];
            if d == 1 {
                let mut acc = Complex64::new(0.0, 0.0);
                for p in 0..=n {
                    acc += self.layers[p][0] * other.layers[n - p][0];
                }
                out[0] = acc;
                return out;
            }
            let mut sum = vec![0u32; d];
            for p in 0..=n {
                let q = n - p;
                let lf = &self.layers[p];
                let lg = &other.layers[q];
                if lf.iter().all(|c| is_zero(c)) || lg.iter().all(|c| is_zero(c)) {
                    continue;
                }
                let mut i = 0;
                visit_layer(d, p, |beta| {
                    let a = lf[i];
                    i += 1;
                    if is_zero(a) {
                        return;
                    }
                    let mut j = 0;
                    visit_layer(d, q, |gamma| {
                        let b = lg[j];
                        j += 1;
                        if is_zero(b) {
                            return;
                        }
                        for k in 0..d {
                            sum[k] = beta[k] + gamma[k];
                        }
                        out[rank_in_layer(&sum)] += a * b;
                    });
                });
            }
            out
        });
        Ok(TruncatedSeries {
            dim: d,
            degree: n_max,
            layers,
            truncated: self.truncated || other.truncated || self.degree != other.degree,
        })
    }

    /// `f_r(z) = f(rz)`.
    pub fn dilate(&self, r: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&r) {
            return Err(Error::param(format!("dilation radius {r} not in [0,1]")));
        }
        let mut pow = vec![1.0f64; self.degree + 1];
        for n in 1..=self.degree {
            pow[n] = pow[n - 1] * r;
        }
        Ok(self.map_coeffs(|n, c| c * pow[n]))
    }

    /// Sums the stored terms at `w`.
    pub fn evaluate(&self, w: &[Complex64]) -> Result<Complex64> {
        if w.len() != self.dim {
            return Err(Error::DimensionMismatch {
                left: self.dim,
                right: w.len(),
            });
        }
        let r2: f64 = w.iter().map(|x| x.norm_sqr()).sum();
        if r2 >= 1.0 {
            log::warn!("evaluating a truncated series at |w| = {} ≥ 1", r2.sqrt());
        }
        Ok(self.eval_unchecked(w))
    }

    pub(crate) fn eval_unchecked(&self, w: &[Complex64]) -> Complex64 {
        if self.dim == 1 {
            let z = w[0];
            let mut acc = Complex64::new(0.0, 0.0);
            for layer in self.layers.iter().rev() {
                acc = acc * z + layer[0];
            }
            return acc;
        }
        let pows = power_table(w, self.degree);
        let mut total = Complex64::new(0.0, 0.0);
        for (n, layer) in self.layers.iter().enumerate() {
            total += eval_layer(self.dim, n, layer, &pows);
        }
        total
    }

    /// `f_n`, the homogeneous component of degree `n`, as a series with the
    /// same truncation degree.
    pub fn homogeneous_component(&self, n: usize) -> Result<Self> {
        if n > self.degree {
            return Err(Error::Range {
                degree: n,
                max: self.degree,
            });
        }
        let mut out = Self::zero(self.dim, self.degree);
        out.layers[n].copy_from_slice(&self.layers[n]);
        out.truncated = self.truncated;
        Ok(out)
    }

    /// Formal `exp(u)` through the truncation degree (one variable).
    pub fn exp_series(&self) -> Result<Self> {
        if self.dim != 1 {
            return Err(Error::UnsupportedDimension(self.dim));
        }
        let u = self.univariate_coeffs();
        let n_max = self.degree;
        // k·u_k, reused by every step of n·g_n = Σ k·u_k·g_{n−k}
        let ku: Vec<Complex64> = u.iter().enumerate().map(|(k, c)| c * k as f64).collect();
        let mut g = vec![Complex64::new(0.0, 0.0); n_max + 1];
        g[0] = u[0].exp();
        for n in 1..=n_max {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 1..=n {
                acc += ku[k] * g[n - k];
            }
            g[n] = acc / n as f64;
        }
        Ok(Self::univariate(g).with_truncated_flag(self.truncated))
    }

    /// Formal reciprocal `1/u` (one variable, `u(0) ≠ 0`).
    pub fn reciprocal(&self) -> Result<Self> {
        if self.dim != 1 {
            return Err(Error::UnsupportedDimension(self.dim));
        }
        let u = self.univariate_coeffs();
        if u[0].norm() == 0.0 {
            return Err(Error::param("reciprocal of a series vanishing at 0"));
        }
        let inv0 = u[0].inv();
        let mut g = vec![Complex64::new(0.0, 0.0); u.len()];
        g[0] = inv0;
        for n in 1..u.len() {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 1..=n {
                acc += u[k] * g[n - k];
            }
            g[n] = -acc * inv0;
        }
        Ok(Self::univariate(g).with_truncated_flag(self.truncated))
    }

    /// `f ∘ i_ζ`: the one-variable series whose `n`-th coefficient is `f_n(ζ)`.
    pub fn slice(&self, zeta: &[Complex64]) -> Result<Self> {
        self.check_direction(zeta)?;
        let pows = power_table(zeta, self.degree);
        let coeffs = (0..=self.degree)
            .map(|n| eval_layer(self.dim, n, &self.layers[n], &pows))
            .collect();
        Ok(Self::univariate(coeffs).with_truncated_flag(self.truncated))
    }

    fn check_direction(&self, zeta: &[Complex64]) -> Result<()> {
        if zeta.len() != self.dim {
            return Err(Error::DimensionMismatch {
                left: self.dim,
                right: zeta.len(),
            });
        }
        check_unit(zeta)
    }

    /// `g ∘ P_ζ` with `P_ζ(z) = ⟨z, ζ⟩`, for a one-variable `g`.
    pub fn lift(&self, zeta: &[Complex64], dim: usize) -> Result<Self> {
        if self.dim != 1 {
            return Err(Error::UnsupportedDimension(self.dim));
        }
        if zeta.len() != dim {
            return Err(Error::DimensionMismatch {
                left: dim,
                right: zeta.len(),
            });
        }
        check_unit(zeta)?;
        let ln_abs: Vec<f64> = zeta.iter().map(|z| z.norm().ln()).collect();
        let arg: Vec<f64> = zeta.iter().map(|z| -z.arg()).collect();
        let mut out = Self::zero(dim, self.degree);
        for n in 0..=self.degree {
            let gn = self.layers[n][0];
            if is_zero(gn) {
                continue;
            }
            let layer = &mut out.layers[n];
            let mut i = 0;
            visit_layer(dim, n, |alpha| {
                let mut log_mag = ln_multinomial(alpha);
                let mut phase = 0.0;
                let mut vanishes = false;
                for (k, &a) in alpha.iter().enumerate() {
                    if a == 0 {
                        continue;
                    }
                    if is_zero(zeta[k]) {
                        vanishes = true;
                        break;
                    }
                    log_mag += a as f64 * ln_abs[k];
                    phase += a as f64 * arg[k];
                }
                if !vanishes {
                    layer[i] = gn * Complex64::from_polar(log_mag.exp(), phase);
                }
                i += 1;
            });
        }
        out.truncated = self.truncated;
        Ok(out)
    }

    /// `∂f/∂z_i`; the result has truncation degree `N − 1` (0 if `N = 0`).
    pub fn partial_derivative(&self, i: usize) -> Self {
        assert!(i < self.dim, "variable index out of range");
        if self.degree == 0 {
            return Self::zero(self.dim, 0).with_truncated_flag(self.truncated);
        }
        let mut out = Self::zero(self.dim, self.degree - 1);
        let mut up = vec![0u32; self.dim];
        for n in 0..self.degree {
            let layer = &mut out.layers[n];
            let src = &self.layers[n + 1];
            let mut j = 0;
            visit_layer(self.dim, n, |alpha| {
                up.copy_from_slice(alpha);
                up[i] += 1;
                layer[j] = src[rank_in_layer(&up)] * up[i] as f64;
                j += 1;
            });
        }
        out.truncated = self.truncated;
        out
    }

    /// `ℓ²` norm of the coefficient sequence (the `H²` norm for `d = 1`).
    pub fn coefficient_l2_norm(&self) -> f64 {
        self.layers
            .iter()
            .flat_map(|l| l.iter())
            .map(|c| c.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

/// `pows[i][k] = w_i^k` for `k ≤ n`.
pub(crate) fn power_table(w: &[Complex64], n: usize) -> Vec<Vec<Complex64>> {
    w.iter()
        .map(|&x| {
            let mut p = Vec::with_capacity(n + 1);
            let mut acc = Complex64::new(1.0, 0.0);
            for _ in 0..=n {
                p.push(acc);
                acc *= x;
            }
            p
        })
        .collect()
}

pub(crate) fn eval_layer(d: usize, n: usize, layer: &[Complex64], pows: &[Vec<Complex64>]) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    let mut i = 0;
    visit_layer(d, n, |alpha| {
        let c = layer[i];
        i += 1;
        if is_zero(c) {
            return;
        }
        let mut term = c;
        for (k, &a) in alpha.iter().enumerate() {
            term *= pows[k][a as usize];
        }
        acc += term;
    });
    acc
}

/// Exact zero test; `norm_sqr() == 0.0` would also accept values below 1e-162.
pub(crate) fn is_zero(c: impl std::borrow::Borrow<Complex64>) -> bool {
    let c = c.borrow();
    c.re == 0.0 && c.im == 0.0
}

pub(crate) fn check_unit(zeta: &[Complex64]) -> Result<()> {
    let norm = zeta.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > UNIT_TOL {
        return Err(Error::param(format!("direction has norm {norm}, expected 1")));
    }
    Ok(())
}

/// On-disk series layout:
/// `{"d": int, "N": int, "coeffs": [{"alpha": [..], "re": .., "im": ..}]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SeriesFile {
    pub d: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub coeffs: Vec<CoeffEntry>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub truncated: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CoeffEntry {
    pub alpha: Vec<u32>,
    pub re: f64,
    pub im: f64,
}

impl TryFrom<SeriesFile> for TruncatedSeries {
    type Error = Error;

    fn try_from(file: SeriesFile) -> Result<Self> {
        if file.d == 0 {
            return Err(Error::Schema("d must be at least 1".into()));
        }
        let mut s = TruncatedSeries::zero(file.d, file.n);
        let mut seen = std::collections::HashSet::new();
        for entry in file.coeffs {
            if entry.alpha.len() != file.d {
                return Err(Error::Schema(format!(
                    "alpha {:?} has length {}, expected {}",
                    entry.alpha,
                    entry.alpha.len(),
                    file.d
                )));
            }
            let alpha = MultiIndex::new(entry.alpha)?;
            if alpha.degree() > file.n {
                return Err(Error::Schema(format!(
                    "alpha {:?} has degree {} > N = {}",
                    alpha.exponents(),
                    alpha.degree(),
                    file.n
                )));
            }
            if !entry.re.is_finite() || !entry.im.is_finite() {
                return Err(Error::Schema(format!("non-finite coefficient at {:?}", alpha.exponents())));
            }
            if !seen.insert(alpha.clone()) {
                return Err(Error::Schema(format!("duplicate alpha {:?}", alpha.exponents())));
            }
            s.set_coeff(&alpha, Complex64::new(entry.re, entry.im))?;
        }
        s.truncated = file.truncated;
        Ok(s)
    }
}

impl From<&TruncatedSeries> for SeriesFile {
    fn from(s: &TruncatedSeries) -> Self {
        SeriesFile {
            d: s.dim,
            n: s.degree,
            coeffs: s
                .nonzero_terms()
                .into_iter()
                .map(|(alpha, c)| CoeffEntry {
                    alpha: alpha.into(),
                    re: c.re,
                    im: c.im,
                })
                .collect(),
            truncated: s.truncated,
        }
    }
}

impl TruncatedSeries {
    pub fn to_json(&self) -> String {
        serde_json::to_string(&SeriesFile::from(self)).expect("series serialization")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: SeriesFile = serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
        file.try_into()
    }

    pub fn read_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn write_file(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }
}
