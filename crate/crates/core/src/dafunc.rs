//! Drury–Arveson norms, sup-norms of homogeneous polynomials, finite
//! sections of multiplication operators `T_m` and their adjoints, the range
//! probe for `T_m*`, and the von Neumann bound for `(1 − z)/(1 − rz)`.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::metrics::QuadratureConfig;
use crate::multiindex::{basis_size, binomial, layer_size, ln_multinomial, rank_in_layer, visit_layer, MultiIndex};
use crate::par;
use crate::series::{eval_layer, is_zero, power_table, TruncatedSeries};
use crate::sphere::{self, Direction};

/// `ln ω_α` for every index of one layer.
pub fn log_omega_layer(d: usize, n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(layer_size(d, n));
    visit_layer(d, n, |a| out.push(-0.5 * ln_multinomial(a)));
    out
}

/// Euclidean norm computed with scaling, so tiny entries do not underflow
/// when squared.
fn scaled_norm(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let big = values.clone().fold(0.0f64, f64::max);
    if big == 0.0 || !big.is_finite() {
        return big;
    }
    values.map(|v| (v / big).powi(2)).sum::<f64>().sqrt() * big
}

/// `|c| ω` from `ln ω`, going through logs only when `ω` itself underflows.
fn weighted_modulus(c: Complex64, log_omega: f64) -> f64 {
    if c.re == 0.0 && c.im == 0.0 {
        0.0
    } else if log_omega > -700.0 {
        c.norm() * log_omega.exp()
    } else {
        (c.norm().ln() + log_omega).exp()
    }
}

/// `|f̂(α)| ω_α` over one layer; `ω_α` is only computed for nonzero entries,
/// so sparse layers of high degree stay cheap.
fn weighted_layer(d: usize, n: usize, layer: &[Complex64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(layer.len());
    let mut i = 0;
    visit_layer(d, n, |a| {
        let c = layer[i];
        i += 1;
        out.push(if is_zero(c) { 0.0 } else { weighted_modulus(c, -0.5 * ln_multinomial(a)) });
    });
    out
}

/// `‖f_n‖_{H²_d}` for each stored degree.
pub fn layer_h2d_norms(f: &TruncatedSeries) -> Vec<f64> {
    let d = f.dim();
    par::map_range(f.degree() + 1, |n| {
        let terms = weighted_layer(d, n, f.layer(n));
        scaled_norm(terms.iter().copied())
    })
}

/// `max_{|α|=n} |f̂(α)| ω_α` for each stored degree.
pub fn layer_coefficient_levels(f: &TruncatedSeries) -> Vec<f64> {
    let d = f.dim();
    par::map_range(f.degree() + 1, |n| weighted_layer(d, n, f.layer(n)).into_iter().fold(0.0, f64::max))
}

/// `‖f‖_{H²_d} = (Σ |f̂(α)|² ω_α²)^{1/2}`.
pub fn h2d_norm(f: &TruncatedSeries) -> f64 {
    scaled_norm(layer_h2d_norms(f).into_iter())
}

#[derive(Clone, Debug, Serialize)]
pub struct SupEstimate {
    pub value: f64,
    pub direction: Direction,
    pub is_lower_bound: bool,
}

/// Lower estimate of `sup_{∂𝔹_d} |h|` for a homogeneous polynomial.
pub fn sup_norm_homogeneous(h: &TruncatedSeries, cfg: &QuadratureConfig) -> Result<SupEstimate> {
    sup_norm_homogeneous_with_hints(h, cfg, &[])
}

/// [`sup_norm_homogeneous`] with extra starting directions. Useful for high
/// degrees, where rounding noise far from the peak hides the ascent direction.
pub fn sup_norm_homogeneous_with_hints(h: &TruncatedSeries, cfg: &QuadratureConfig, hints: &[Direction]) -> Result<SupEstimate> {
    let n = h.homogeneous_degree().ok_or(Error::NotHomogeneous)?;
    let d = h.dim();
    if let Some(bad) = hints.iter().find(|z| z.len() != d) {
        return Err(Error::DimensionMismatch { left: d, right: bad.len() });
    }
    let layer = h.layer(n);
    let best = sphere::maximize_on_sphere(d, cfg.sphere_samples, cfg.refine_steps, cfg.seed, hints, |z| {
        eval_layer(d, n, layer, &power_table(z, n)).norm()
    });
    Ok(SupEstimate {
        value: best.value,
        direction: best.direction,
        is_lower_bound: true,
    })
}

/// Lower estimate of `sup_{∂𝔹_d} |f|` for any stored series, by the same
/// sphere search as [`sup_norm_homogeneous`] on the truncated sum.
pub fn sup_norm_sphere(f: &TruncatedSeries, cfg: &QuadratureConfig) -> Result<SupEstimate> {
    if f.homogeneous_degree().is_some() {
        return sup_norm_homogeneous(f, cfg);
    }
    let best = sphere::maximize_on_sphere(f.dim(), cfg.sphere_samples, cfg.refine_steps, cfg.seed, &[], |z| {
        f.eval_unchecked(z).norm()
    });
    Ok(SupEstimate {
        value: best.value,
        direction: best.direction,
        is_lower_bound: true,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct NormChain {
    pub degree: usize,
    pub sup_est: f64,
    pub h2d: f64,
    /// `‖h‖_{H²_d} / ((n+1)^{(d−1)/2} · sup)`: the empirical constant of the upper
    /// inequality for this input.
    pub constant: f64,
}

/// `sup ≤ ‖h‖_{H²_d} ≤ C (n+1)^{(d−1)/2} sup` with `C` measured.
pub fn norm_chain(h: &TruncatedSeries, cfg: &QuadratureConfig) -> Result<NormChain> {
    let sup = sup_norm_homogeneous(h, cfg)?;
    let n = h.homogeneous_degree().unwrap_or(0);
    let h2d = h2d_norm(h);
    let scale = ((n + 1) as f64).powf((h.dim() as f64 - 1.0) / 2.0);
    Ok(NormChain {
        degree: n,
        sup_est: sup.value,
        h2d,
        constant: if sup.value > 0.0 { h2d / (scale * sup.value) } else { 0.0 },
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct HardySphereReport {
    pub degree: usize,
    pub samples: usize,
    pub binomial_factor: f64,
    pub sphere_mean: f64,
    /// Standard error of `binomial_factor · sphere_mean`.
    pub std_error: f64,
    pub h2d_squared: f64,
    pub relative_discrepancy: f64,
    /// `|estimate − ‖h‖²| / std_error`.
    pub z_score: f64,
}

const MC_CHUNK: usize = 4096;

/// Monte-Carlo check of `‖h‖²_{H²_d} = binom(d−1+n, d−1) ∫_{∂𝔹_d} |h|² dσ`.
pub fn hardy_sphere_relation_check(h: &TruncatedSeries, samples: usize, seed: u64) -> Result<HardySphereReport> {
    let n = h.homogeneous_degree().ok_or(Error::NotHomogeneous)?;
    if samples < 2 {
        return Err(Error::param("need at least two samples"));
    }
    let d = h.dim();
    let layer = h.layer(n);
    let chunks = samples.div_ceil(MC_CHUNK);
    // one independent stream per chunk keeps the result independent of the thread count
    let sums = par::map_range(chunks, |k| {
        let mut rng = sphere::rng(seed);
        rng.set_stream(k as u64 + 1);
        let count = MC_CHUNK.min(samples - k * MC_CHUNK);
        let (mut s1, mut s2) = (0.0, 0.0);
        for _ in 0..count {
            let z = sphere::random_direction(d, &mut rng);
            let v = eval_layer(d, n, layer, &power_table(&z, n)).norm_sqr();
            s1 += v;
            s2 += v * v;
        }
        (s1, s2)
    });
    let (s1, s2) = sums.iter().fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    let m = samples as f64;
    let mean = s1 / m;
    let var = ((s2 / m - mean * mean) * m / (m - 1.0)).max(0.0);
    let factor = binomial(d - 1 + n, d - 1) as f64;
    let h2 = h2d_norm(h).powi(2);
    let est = factor * mean;
    let std_error = factor * (var / m).sqrt();
    let diff = (est - h2).abs();
    Ok(HardySphereReport {
        degree: n,
        samples,
        binomial_factor: factor,
        sphere_mean: mean,
        std_error,
        h2d_squared: h2,
        relative_discrepancy: if h2 > 0.0 { diff / h2 } else { diff },
        z_score: if std_error > 0.0 {
            diff / std_error
        } else if diff == 0.0 {
            0.0
        } else {
            f64::INFINITY
        },
    })
}

/// Offsets of each degree layer inside the flattened basis of degree ≤ N.
fn layer_offsets(d: usize, n: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(n + 2);
    let mut acc = 0;
    for k in 0..=n {
        out.push(acc);
        acc += layer_size(d, k);
    }
    out.push(acc);
    out
}

fn basis_index(offsets: &[usize], alpha: &[u32]) -> usize {
    let n: usize = alpha.iter().map(|&a| a as usize).sum();
    offsets[n] + rank_in_layer(alpha)
}

/// Compression of `T_m` to polynomials of degree ≤ N, in the orthonormal
/// basis `e_α = z^α / ω_α` ordered by degree then graded-lex.
#[derive(Clone, Debug)]
pub struct FiniteSection {
    pub d: usize,
    pub degree: usize,
    pub basis: Vec<MultiIndex>,
    pub entries: DMatrix<Complex64>,
}

impl FiniteSection {
    pub fn side(&self) -> usize {
        self.basis.len()
    }

    /// `(f̂(α) ω_α)_α`: coordinates of `f` (through degree N) in the basis.
    pub fn coordinates(&self, f: &TruncatedSeries) -> Result<DVector<Complex64>> {
        to_coordinates(f, self.degree)
    }

    pub fn series(&self, v: &DVector<Complex64>) -> Result<TruncatedSeries> {
        from_coordinates(self.d, self.degree, v)
    }

    pub fn apply(&self, f: &TruncatedSeries) -> Result<TruncatedSeries> {
        self.series(&(&self.entries * self.coordinates(f)?))
    }

    pub fn apply_adjoint(&self, h: &TruncatedSeries) -> Result<TruncatedSeries> {
        self.series(&(self.entries.adjoint() * self.coordinates(h)?))
    }

    /// Nonzero entries as `row,col,re,im` lines with a header.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "row,col,re,im")?;
        for j in 0..self.side() {
            for i in 0..self.side() {
                let v = self.entries[(i, j)];
                if !is_zero(v) {
                    writeln!(out, "{i},{j},{:e},{:e}", v.re, v.im)?;
                }
            }
        }
        Ok(())
    }
}

pub fn to_coordinates(f: &TruncatedSeries, degree: usize) -> Result<DVector<Complex64>> {
    if f.degree() < degree {
        return Err(Error::Range {
            degree,
            max: f.degree(),
        });
    }
    let d = f.dim();
    let mut out = Vec::with_capacity(basis_size(d, degree));
    for n in 0..=degree {
        for (c, lw) in f.layer(n).iter().zip(log_omega_layer(d, n)) {
            out.push(c * lw.exp());
        }
    }
    Ok(DVector::from_vec(out))
}

pub fn from_coordinates(d: usize, degree: usize, v: &DVector<Complex64>) -> Result<TruncatedSeries> {
    if v.len() != basis_size(d, degree) {
        return Err(Error::param(format!(
            "coordinate vector has length {}, expected {}",
            v.len(),
            basis_size(d, degree)
        )));
    }
    let offsets = layer_offsets(d, degree);
    let layers = (0..=degree)
        .map(|n| {
            log_omega_layer(d, n)
                .iter()
                .enumerate()
                .map(|(i, lw)| v[offsets[n] + i] * (-lw).exp())
                .collect()
        })
        .collect();
    TruncatedSeries::from_layers(d, layers)
}

/// Matrix of `T_m` restricted and projected to degree ≤ N.
pub fn toeplitz_section(m: &TruncatedSeries, degree: usize) -> Result<FiniteSection> {
    if m.degree() < degree {
        return Err(Error::Range {
            degree,
            max: m.degree(),
        });
    }
    let d = m.dim();
    let offsets = layer_offsets(d, degree);
    let side = offsets[degree + 1];
    let mut basis = Vec::with_capacity(side);
    for n in 0..=degree {
        visit_layer(d, n, |a| basis.push(MultiIndex::new(a.to_vec()).unwrap()));
    }
    let symbol: Vec<(MultiIndex, Complex64)> = m
        .truncate(degree)
        .nonzero_terms()
        .into_iter()
        .collect();
    let rows = par::map_range(side, |row| {
        let beta = &basis[row];
        let lw_beta = beta.log_omega();
        symbol
            .iter()
            .filter_map(|(gamma, c)| {
                let alpha = beta.checked_minus(gamma)?;
                let col = basis_index(&offsets, alpha.exponents());
                Some((col, c * (lw_beta - alpha.log_omega()).exp()))
            })
            .collect::<Vec<_>>()
    });
    let mut entries = DMatrix::from_element(side, side, Complex64::new(0.0, 0.0));
    for (row, cols) in rows.into_iter().enumerate() {
        for (col, v) in cols {
            entries[(row, col)] += v;
        }
    }
    Ok(FiniteSection {
        d,
        degree,
        basis,
        entries,
    })
}

/// `T_m* h` through degree N:
/// `(T_m* h)^(α) = Σ_γ conj(m̂(γ)) ĥ(α+γ) ω_{α+γ}² / ω_α²`.
///
/// When `h` is stored below degree `N + deg m` the output misses tail
/// contributions and carries the truncation flag.
pub fn adjoint_apply(m: &TruncatedSeries, h: &TruncatedSeries, degree: usize) -> Result<TruncatedSeries> {
    if m.dim() != h.dim() {
        return Err(Error::DimensionMismatch {
            left: m.dim(),
            right: h.dim(),
        });
    }
    if h.degree() < degree {
        return Err(Error::Range {
            degree,
            max: h.degree(),
        });
    }
    let d = m.dim();
    let symbol = m.nonzero_terms();
    let m_deg = m.max_nonzero_degree().unwrap_or(0);
    let contaminated = h.is_truncated() || m.is_truncated() || h.degree() < degree + m_deg;
    let hd = h.degree();
    let layers = par::map_range(degree + 1, |n| {
        let mut out = Vec::with_capacity(layer_size(d, n));
        let mut beta = vec![0u32; d];
        visit_layer(d, n, |alpha| {
            let lw_alpha = -0.5 * ln_multinomial(alpha);
            let mut acc = Complex64::new(0.0, 0.0);
            for (gamma, c) in &symbol {
                let k = n + gamma.degree();
                if k > hd {
                    continue;
                }
                for i in 0..d {
                    beta[i] = alpha[i] + gamma.exponents()[i];
                }
                let hb = h.layer(k)[rank_in_layer(&beta)];
                if is_zero(hb) {
                    continue;
                }
                let lw_beta = -0.5 * ln_multinomial(&beta);
                acc += c.conj() * hb * (2.0 * (lw_beta - lw_alpha)).exp();
            }
            out.push(acc);
        });
        out
    });
    Ok(TruncatedSeries::from_layers(d, layers)?.with_truncated_flag(contaminated))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RangeVerdict {
    Bounded,
    Growing,
    Inconclusive,
}

#[derive(Clone, Debug, Serialize)]
pub struct RangeProbeRow {
    pub degree: usize,
    /// `‖T_m*^{(N)} g_N − h^{(N)}‖` after each refinement sweep; nonincreasing.
    pub residual_history: Vec<f64>,
    pub residual: f64,
    /// `‖g_N‖_{H²_d}`.
    pub solution_norm: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RangeProbeReport {
    pub rows: Vec<RangeProbeRow>,
    /// Slope of `log ‖g_N‖` against `log N` between the first and last degree.
    pub growth_exponent: f64,
    pub verdict: RangeVerdict,
}

/// Below this exponent the solution norms count as bounded.
pub const BOUNDED_EXPONENT: f64 = 0.05;
/// Above this exponent they count as growing.
pub const GROWING_EXPONENT: f64 = 0.2;

/// Solves `T_m*^{(N)} g = h^{(N)}` on each finite section and tracks `‖g_N‖`.
pub fn range_membership_probe(m: &TruncatedSeries, h: &TruncatedSeries, degrees: &[usize]) -> Result<RangeProbeReport> {
    if m.dim() != h.dim() {
        return Err(Error::DimensionMismatch {
            left: m.dim(),
            right: h.dim(),
        });
    }
    if degrees.is_empty() {
        return Err(Error::param("no degrees to probe"));
    }
    let m0 = m.layer(0)[0];
    if m0.norm() < 1e-14 {
        return Err(Error::Singular("m(0) = 0 makes every finite section singular".into()));
    }
    let top = degrees.iter().copied().max().unwrap_or(0);
    let (m, h) = (&padded(m, top)?, &padded(h, top)?);
    let rows = par::map_slice(degrees, |&n| solve_section(m, h, n))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let (first, last) = (&rows[0], &rows[rows.len() - 1]);
    let growth_exponent = if last.degree > first.degree && first.solution_norm > 0.0 && first.degree > 0 {
        (last.solution_norm / first.solution_norm).ln() / (last.degree as f64 / first.degree as f64).ln()
    } else {
        0.0
    };
    let verdict = if rows.len() < 2 {
        RangeVerdict::Inconclusive
    } else if growth_exponent < BOUNDED_EXPONENT {
        RangeVerdict::Bounded
    } else if growth_exponent > GROWING_EXPONENT {
        RangeVerdict::Growing
    } else {
        RangeVerdict::Inconclusive
    };
    Ok(RangeProbeReport {
        rows,
        growth_exponent,
        verdict,
    })
}

/// Series without the truncation flag are exact polynomials and may be
/// zero-padded; truncated ones must already reach `degree`.
fn padded(f: &TruncatedSeries, degree: usize) -> Result<TruncatedSeries> {
    if f.degree() >= degree {
        Ok(f.clone())
    } else if f.is_truncated() {
        Err(Error::Range {
            degree,
            max: f.degree(),
        })
    } else {
        Ok(f.pad_to(degree))
    }
}

fn solve_section(m: &TruncatedSeries, h: &TruncatedSeries, n: usize) -> Result<RangeProbeRow> {
    let section = toeplitz_section(m, n)?;
    let a = section.entries.adjoint();
    let rhs = to_coordinates(h, n)?;
    let qr = a.clone().col_piv_qr();
    let solve = |b: &DVector<Complex64>| -> Result<DVector<Complex64>> {
        qr.solve(b)
            .ok_or_else(|| Error::Singular(format!("finite section of degree {n} is singular")))
    };
    let mut g = solve(&rhs)?;
    let residual_of = |g: &DVector<Complex64>| (&a * g - &rhs).norm();
    let mut history = vec![residual_of(&g)];
    // iterative refinement; keep a step only if it lowers the residual
    for _ in 0..3 {
        let r = &rhs - &a * &g;
        let candidate = &g + solve(&r)?;
        let res = residual_of(&candidate);
        if res >= *history.last().unwrap() {
            break;
        }
        g = candidate;
        history.push(res);
    }
    Ok(RangeProbeRow {
        degree: n,
        residual: *history.last().unwrap(),
        residual_history: history,
        solution_norm: g.norm(),
    })
}

/// Grid size for [`vn_bound`]; a multiple of 2, so `z = −1` is a grid point.
pub const VN_GRID: usize = 1 << 12;

/// `max_{|z|=1} |(1 − z)/(1 − rz)|` on a grid containing `z = −1`.
pub fn vn_bound(r: f64) -> Result<f64> {
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::param(format!("r must lie in (0,1), got {r}")));
    }
    let values = par::map_range(VN_GRID, |j| {
        let z = if 2 * j == VN_GRID {
            Complex64::new(-1.0, 0.0)
        } else {
            Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * j as f64 / VN_GRID as f64)
        };
        ((1.0 - z) / (1.0 - r * z)).norm()
    });
    Ok(values.into_iter().fold(0.0, f64::max))
}

pub const POWER_ITERATION_TOL: f64 = 1e-10;
const POWER_ITERATION_MAX: usize = 100_000;

/// Largest singular value of the degree-N section of `T_m`, by power
/// iteration on `A*A`: a lower bound for the multiplier norm of `m`.
pub fn mult_norm_lower(m: &TruncatedSeries, degree: usize) -> Result<f64> {
    let a = toeplitz_section(m, degree)?.entries;
    Ok(largest_singular_value(&a, POWER_ITERATION_TOL))
}

pub(crate) fn largest_singular_value(a: &DMatrix<Complex64>, tol: f64) -> f64 {
    let side = a.ncols();
    let mut rng = sphere::rng(0x9e37);
    let mut v = DVector::from_fn(side, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    let norm = v.norm();
    if norm == 0.0 {
        return 0.0;
    }
    v /= Complex64::new(norm, 0.0);
    let ah = a.adjoint();
    let mut sigma2 = 0.0;
    for _ in 0..POWER_ITERATION_MAX {
        let w = &ah * (a * &v);
        let next = w.norm();
        if next == 0.0 {
            return 0.0;
        }
        v = w / Complex64::new(next, 0.0);
        let done = (next - sigma2).abs() <= tol * next;
        sigma2 = next;
        if done {
            break;
        }
    }
    sigma2.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    fn mi(v: &[u32]) -> MultiIndex {
        MultiIndex::new(v.to_vec()).unwrap()
    }

    fn random_series(d: usize, n: usize, seed: u64) -> TruncatedSeries {
        let mut rng = sphere::rng(seed);
        let layers = (0..=n)
            .map(|k| {
                (0..layer_size(d, k))
                    .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                    .collect()
            })
            .collect();
        TruncatedSeries::from_layers(d, layers).unwrap()
    }

    fn random_homogeneous(d: usize, n: usize, seed: u64) -> TruncatedSeries {
        let f = random_series(d, n, seed);
        f.homogeneous_component(n).unwrap()
    }

    #[test]
    fn h2d_norm_examples() {
        for a in [mi(&[2, 3]), mi(&[1, 1, 1]), mi(&[7])] {
            let f = TruncatedSeries::monomial(&a, c(1.0), a.degree());
            assert!((h2d_norm(&f) - a.omega()).abs() < 1e-15);
        }
        assert_eq!(h2d_norm(&TruncatedSeries::one(3, 4)), 1.0);
        // ⟨z, ζ⟩^n has norm 1
        let zeta = sphere::random_directions(3, 1, 4).pop().unwrap();
        let mut p = vec![c(0.0); 9];
        p[8] = c(1.0);
        let f = TruncatedSeries::univariate(p).lift(&zeta, 3).unwrap();
        assert!((h2d_norm(&f) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn coefficient_levels_bounded_by_norm() {
        for seed in 0..10 {
            let f = random_series(3, 6, seed);
            let levels = layer_coefficient_levels(&f);
            let norms = layer_h2d_norms(&f);
            for (l, n) in levels.iter().zip(&norms) {
                assert!(l <= n);
            }
        }
    }

    #[test]
    fn sphere_sup_of_inhomogeneous() {
        let cfg = QuadratureConfig {
            sphere_samples: 64,
            ..Default::default()
        };
        // |1 + z1| on ∂𝔹_2 peaks at 2 on the first axis
        let f = TruncatedSeries::one(2, 1).add(&TruncatedSeries::variable(2, 0, 1)).unwrap();
        let s = sup_norm_sphere(&f, &cfg).unwrap();
        assert_eq!(s.value, 2.0);
        let h = random_homogeneous(2, 4, 1);
        assert_eq!(sup_norm_sphere(&h, &cfg).unwrap().value, sup_norm_homogeneous(&h, &cfg).unwrap().value);
    }

    #[test]
    fn tiny_levels_do_not_underflow() {
        let mut coeffs = vec![c(0.0); 401];
        coeffs[400] = c(1e-200);
        let f = TruncatedSeries::univariate(coeffs);
        let v = layer_h2d_norms(&f)[400];
        assert!((v / 1e-200 - 1.0).abs() < 1e-14, "{v:e}");
    }

    #[test]
    fn sup_norm_examples() {
        let cfg = QuadratureConfig::default();
        let h = TruncatedSeries::monomial(&mi(&[5, 0, 0]), c(1.0), 5);
        assert!((sup_norm_homogeneous(&h, &cfg).unwrap().value - 1.0).abs() < 1e-15);
        let h = TruncatedSeries::monomial(&mi(&[1, 1]), c(1.0), 2);
        assert!((sup_norm_homogeneous(&h, &cfg).unwrap().value - 0.5).abs() < 1e-4);
        assert!(matches!(
            sup_norm_homogeneous(&TruncatedSeries::one(2, 2).add(&TruncatedSeries::variable(2, 0, 2)).unwrap(), &cfg),
            Err(Error::NotHomogeneous)
        ));
    }

    #[test]
    fn norm_chain_holds_on_random_inputs() {
        let cfg = QuadratureConfig {
            sphere_samples: 128,
            ..Default::default()
        };
        for seed in 0..12 {
            let d = 2 + seed as usize % 2;
            let n = 1 + seed as usize % 7;
            let h = random_homogeneous(d, n, seed);
            let chain = norm_chain(&h, &cfg).unwrap();
            assert!(chain.sup_est <= chain.h2d + 1e-9);
            assert!(chain.constant > 0.0 && chain.constant < 10.0, "{chain:?}");
        }
    }

    #[test]
    fn hardy_sphere_examples() {
        let z1 = TruncatedSeries::variable(2, 0, 1);
        let r = hardy_sphere_relation_check(&z1, 100_000, 1).unwrap();
        assert_eq!(r.binomial_factor, 2.0);
        assert!((r.sphere_mean - 0.5).abs() < 4.0 * r.std_error / 2.0);
        let k = hardy_sphere_relation_check(&TruncatedSeries::constant(3, 0, c(2.0)), 10, 1).unwrap();
        assert_eq!(k.relative_discrepancy, 0.0);
        assert_eq!(k.z_score, 0.0);
        let z12 = TruncatedSeries::monomial(&mi(&[1, 1]), c(1.0), 2);
        let r = hardy_sphere_relation_check(&z12, 1_000_000, 2).unwrap();
        assert_eq!(r.binomial_factor, 3.0);
        assert!((r.sphere_mean - 1.0 / 6.0).abs() < 4.0 * r.std_error / 3.0);
        assert!((r.h2d_squared - 0.5).abs() < 1e-15);
        assert!(r.z_score < 4.0);
        // reproducible for a fixed seed
        let again = hardy_sphere_relation_check(&z12, 1_000_000, 2).unwrap();
        assert_eq!(r.sphere_mean, again.sphere_mean);
    }

    #[test]
    fn section_examples() {
        let one = toeplitz_section(&TruncatedSeries::one(2, 3), 3).unwrap();
        assert_eq!(one.side(), 10);
        assert_eq!(one.entries, DMatrix::identity(10, 10).map(|x: f64| c(x)));
        let shift = toeplitz_section(&TruncatedSeries::variable(1, 0, 4), 4).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                let want = if i == j + 1 { 1.0 } else { 0.0 };
                assert_eq!(shift.entries[(i, j)], c(want));
            }
        }
        let s = toeplitz_section(&TruncatedSeries::variable(2, 0, 2), 2).unwrap();
        assert!((s.entries[(1, 0)] - c(1.0)).norm() < 1e-15);
        // entry (β, α) = m̂(β−α) ω_β/ω_α; β = (1,1), α = (0,1)
        let b = s.basis.iter().position(|a| a == &mi(&[1, 1])).unwrap();
        let a = s.basis.iter().position(|a| a == &mi(&[0, 1])).unwrap();
        assert!((s.entries[(b, a)].re - mi(&[1, 1]).omega()).abs() < 1e-15);
        assert!(toeplitz_section(&TruncatedSeries::variable(2, 0, 2), 3).is_err());
    }

    #[test]
    fn section_csv() {
        let s = toeplitz_section(&TruncatedSeries::variable(1, 0, 2), 2).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next(), Some("row,col,re,im"));
        assert_eq!(text.lines().count(), 3);
        assert!(text.contains("1,0,1e0,0e0"));
    }

    #[test]
    fn section_matches_multiply() {
        for seed in 0..6 {
            let d = 1 + seed as usize % 3;
            let n = 5;
            let m = random_series(d, n, seed);
            let f = random_series(d, n, seed + 50);
            let s = toeplitz_section(&m, n).unwrap();
            let got = s.apply(&f).unwrap();
            let want = m.multiply(&f).unwrap().truncate(n);
            for k in 0..=n {
                for (x, y) in got.layer(k).iter().zip(want.layer(k)) {
                    assert!((x - y).norm() <= 1e-12 * (1.0 + y.norm()));
                }
            }
        }
    }

    #[test]
    fn adjoint_examples() {
        let h = random_series(2, 6, 3);
        let same = adjoint_apply(&TruncatedSeries::one(2, 0), &h, 6).unwrap();
        assert_eq!(same.layers(), h.layers());
        assert!(!same.is_truncated());

        let m = TruncatedSeries::univariate_real(&[1.0, -1.0]);
        let h = TruncatedSeries::univariate_real(&(0..=21).map(|k| 0.5f64.powi(k)).collect::<Vec<_>>());
        let out = adjoint_apply(&m, &h, 20).unwrap();
        assert!(!out.is_truncated());
        for (k, v) in out.univariate_coeffs().iter().enumerate() {
            assert!((v.re - 0.5f64.powi(k as i32 + 1)).abs() < 1e-15);
        }
        assert!(adjoint_apply(&m, &h, 21).unwrap().is_truncated());
        assert!(adjoint_apply(&m, &h, 22).is_err());
    }

    #[test]
    fn adjoint_kernel_eigenvector() {
        // k(z, λ) = Σ_n ⟨z, λ⟩^n; T_m* k_λ = conj(m(λ)) k_λ
        let lambda = vec![Complex64::new(0.2, 0.1), Complex64::new(-0.3, 0.2)];
        let n_big = 60;
        let zeta: Vec<Complex64> = {
            let t = sphere::norm(&lambda);
            lambda.iter().map(|x| x / t).collect()
        };
        let t = sphere::norm(&lambda);
        let k_disk = TruncatedSeries::univariate((0..=n_big).map(|n| c(t.powi(n as i32))).collect());
        let kernel = k_disk.lift(&zeta, 2).unwrap();
        let m = random_series(2, 3, 8);
        let out = adjoint_apply(&m, &kernel, 10).unwrap();
        let factor = m.evaluate(&lambda).unwrap().conj();
        for n in 0..=10 {
            for (x, y) in out.layer(n).iter().zip(kernel.layer(n)) {
                assert!((x - factor * y).norm() < 1e-12, "n={n}");
            }
        }
    }

    #[test]
    fn adjoint_is_section_adjoint() {
        for seed in 0..5 {
            let d = 1 + seed as usize % 3;
            let n = 4;
            let m = random_series(d, 2, seed).pad_to(n);
            let f = random_series(d, n, seed + 10);
            let h = random_series(d, n + 2, seed + 20);
            let direct = adjoint_apply(&m, &h, n).unwrap();
            let via = toeplitz_section(&m, n).unwrap().apply_adjoint(&h.truncate(n)).unwrap();
            // ⟨T_m f, h⟩ = ⟨f, T_m* h⟩ with T_m f computed in full
            let mf = m.pad_to(n + 2).multiply(&f.pad_to(n + 2)).unwrap();
            let lhs = inner(&mf, &h, n + 2);
            let rhs = inner(&f, &direct, n);
            assert!((lhs - rhs).norm() < 1e-10 * (1.0 + lhs.norm()), "{lhs} vs {rhs}");
            // the section adjoint is the compression P_N T_m* P_N
            let trunc = adjoint_apply(&m, &h.truncate(n), n).unwrap();
            for k in 0..=n {
                for (x, y) in trunc.layer(k).iter().zip(via.layer(k)) {
                    assert!((x - y).norm() < 1e-12);
                }
            }
        }
    }

    fn inner(f: &TruncatedSeries, g: &TruncatedSeries, n: usize) -> Complex64 {
        let mut acc = c(0.0);
        for k in 0..=n.min(f.degree()).min(g.degree()) {
            for ((x, y), lw) in f.layer(k).iter().zip(g.layer(k)).zip(log_omega_layer(f.dim(), k)) {
                acc += x * y.conj() * (2.0 * lw).exp();
            }
        }
        acc
    }

    /// Norm of the finite-section solution for m = 1 − z: g_k = Σ_{j=k}^{N} ĥ(j).
    fn tail_sum_norm(h: &[f64], n: usize) -> f64 {
        (0..=n)
            .map(|k| h[k..=n].iter().sum::<f64>().powi(2))
            .sum::<f64>()
            .sqrt()
    }

    #[test]
    fn range_probe_telescoping() {
        let m = TruncatedSeries::univariate_real(&[1.0, -1.0]).pad_to(64);
        let geo: Vec<f64> = (0..=64).map(|k| 0.5f64.powi(k)).collect();
        let h = TruncatedSeries::univariate_real(&geo);
        let rep = range_membership_probe(&m, &h, &[8, 16, 32]).unwrap();
        for row in &rep.rows {
            assert!(row.residual <= 1e-12);
            assert!((row.solution_norm - tail_sum_norm(&geo, row.degree)).abs() < 1e-12);
            assert!(row.solution_norm <= 4.0 / 3f64.sqrt());
            assert!(row.residual_history.windows(2).all(|w| w[1] <= w[0]));
        }
        assert_eq!(rep.verdict, RangeVerdict::Bounded);

        let harmonic: Vec<f64> = (0..=64).map(|k| 1.0 / (k + 1) as f64).collect();
        let rep = range_membership_probe(&m, &TruncatedSeries::univariate_real(&harmonic), &[16, 32, 64]).unwrap();
        assert!(rep.rows[2].solution_norm > 1.5 * rep.rows[0].solution_norm);
        assert_eq!(rep.verdict, RangeVerdict::Growing);

        let h = random_series(2, 5, 1);
        let rep = range_membership_probe(&TruncatedSeries::one(2, 5), &h, &[5]).unwrap();
        assert!(rep.rows[0].residual == 0.0);
        assert!((rep.rows[0].solution_norm - h2d_norm(&h)).abs() < 1e-12);

        let z = TruncatedSeries::variable(1, 0, 8);
        assert!(matches!(range_membership_probe(&z, &h.truncate(3), &[3]), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(range_membership_probe(&z, &TruncatedSeries::one(1, 8), &[4]), Err(Error::Singular(_))));

        // exact polynomials are zero-padded, truncated series are not
        let short = TruncatedSeries::univariate_real(&[1.0, -1.0]);
        let g = TruncatedSeries::univariate_real(&[1.0, 0.5, 0.25]);
        let a = range_membership_probe(&short, &g, &[6]).unwrap();
        let b = range_membership_probe(&short.pad_to(6), &g.pad_to(6), &[6]).unwrap();
        assert_eq!(a.rows[0].solution_norm, b.rows[0].solution_norm);
        let lossy = short.clone().with_truncated_flag(true);
        assert!(matches!(range_membership_probe(&lossy, &g, &[6]), Err(Error::Range { .. })));
    }

    #[test]
    fn vn_bound_examples() {
        assert!((vn_bound(0.5).unwrap() - 4.0 / 3.0).abs() < 1e-12);
        assert!((vn_bound(0.9).unwrap() - 2.0 / 1.9).abs() < 1e-12);
        assert!((vn_bound(1e-9).unwrap() - 2.0).abs() < 1e-8);
        assert!(vn_bound(0.0).is_err());
        assert!(vn_bound(1.0).is_err());
    }

    #[test]
    fn mult_norm_examples() {
        for n in 0..6 {
            assert!((mult_norm_lower(&TruncatedSeries::one(2, n), n).unwrap() - 1.0).abs() < 1e-12);
        }
        for n in 1..6 {
            assert!((mult_norm_lower(&TruncatedSeries::variable(1, 0, n), n).unwrap() - 1.0).abs() < 1e-12);
        }
        assert_eq!(mult_norm_lower(&TruncatedSeries::variable(1, 0, 0), 0).unwrap(), 0.0);
    }

    #[test]
    fn mult_norm_matches_svd_oracle_and_is_monotone() {
        for seed in 0..4 {
            let d = 1 + seed as usize % 2;
            let m = random_series(d, 6, seed);
            let mut prev = 0.0;
            for n in 0..=6 {
                let got = mult_norm_lower(&m, n).unwrap();
                let a = toeplitz_section(&m, n).unwrap().entries;
                let oracle = a.singular_values().max();
                assert!((got - oracle).abs() < 1e-8 * oracle, "{got} vs {oracle}");
                assert!(got >= prev - 1e-9);
                prev = got;
            }
        }
    }

    #[test]
    fn homogeneous_mult_norm_below_h2d_norm() {
        for seed in 0..4 {
            let d = 2 + seed as usize % 2;
            let h = random_homogeneous(d, 2, seed);
            for n in 2..6 {
                let lower = mult_norm_lower(&h.pad_to(n), n).unwrap();
                assert!(lower <= h2d_norm(&h) + 1e-9);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn coordinates_roundtrip(seed in 0u64..1000, d in 1usize..4, n in 0usize..6) {
            let f = random_series(d, n, seed);
            let v = to_coordinates(&f, n).unwrap();
            let back = from_coordinates(d, n, &v).unwrap();
            prop_assert!((v.norm() - h2d_norm(&f)).abs() < 1e-12 * (1.0 + v.norm()));
            for k in 0..=n {
                for (x, y) in back.layer(k).iter().zip(f.layer(k)) {
                    prop_assert!((x - y).norm() < 1e-12);
                }
            }
        }
    }
}
