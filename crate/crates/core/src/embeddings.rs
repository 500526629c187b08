//! The map `τ(z) = d^{d/2} z_1···z_d`, the weighted spaces `K_d` with
//! kernel `Σ_n a_n (z w̄)^n`, `a_n = ‖τ^n‖^{-2}_{H²_d}`, and the diagnostics
//! for `F = f∘τ` with `f = B·(1 − z)`.

use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dafunc::h2d_norm;
use crate::disk_tools::BlaschkeProduct;
use crate::duality::{decay_fit, DecayConfig, DecayForm, DecayReport};
use crate::error::{Error, Result};
use crate::metrics::QuadratureConfig;
use crate::multiindex::{checked_binomial, ln_multinomial, MultiIndex};
use crate::par;
use crate::series::{is_zero, TruncatedSeries};

/// `g∘τ` through degree `degree`. Terms with `d·n > degree` are dropped and
/// set the truncation flag.
pub fn tau_compose(g: &TruncatedSeries, d: usize, degree: usize) -> Result<TruncatedSeries> {
    if g.dim() != 1 {
        return Err(Error::UnsupportedDimension(g.dim()));
    }
    if d == 0 {
        return Err(Error::Dimension(0));
    }
    let mut out = TruncatedSeries::zero(d, degree);
    let mut lost = g.is_truncated();
    let half_ln_d = 0.5 * d as f64 * (d as f64).ln();
    for (n, c) in g.univariate_coeffs().into_iter().enumerate() {
        if is_zero(c) {
            continue;
        }
        if d * n > degree {
            lost = true;
            continue;
        }
        let scale = (n as f64 * half_ln_d).exp();
        if !scale.is_finite() {
            return Err(Error::Overflow(format!("d^(dn/2) overflows at n = {n}")));
        }
        out.set_coeff(&MultiIndex::diagonal(d, n as u32), c * scale)?;
    }
    Ok(out.with_truncated_flag(lost))
}

/// Relabels a series in fewer variables as one in `dim` variables that
/// ignores the extra coordinates.
pub fn extend_dimension(f: &TruncatedSeries, dim: usize) -> Result<TruncatedSeries> {
    if dim < f.dim() {
        return Err(Error::DimensionMismatch {
            left: f.dim(),
            right: dim,
        });
    }
    let mut out = TruncatedSeries::zero(dim, f.degree());
    for (alpha, c) in f.nonzero_terms() {
        let mut e = alpha.exponents().to_vec();
        e.resize(dim, 0);
        out.set_coeff(&MultiIndex::new(e)?, c)?;
    }
    Ok(out.with_truncated_flag(f.is_truncated()))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KdWeights {
    pub d: usize,
    /// `a_0, …, a_N`.
    pub a: Vec<f64>,
}

const EXACT_LIMIT: u128 = 1 << 53;

/// `(dn)!/(n!)^d` when it fits in `u128`.
fn diagonal_multinomial(d: usize, n: usize) -> Option<u128> {
    let mut acc: u128 = 1;
    for k in 1..=d {
        acc = acc.checked_mul(checked_binomial(k * n, n)?)?;
    }
    Some(acc)
}

/// `a_n = (dn)!/(d^{dn} (n!)^d)`. Small cases are a single division of exact
/// integers; the rest go through log-factorials.
pub fn kd_weights(d: usize, degree: usize) -> Result<KdWeights> {
    if d == 0 {
        return Err(Error::Dimension(0));
    }
    let ln_d = (d as f64).ln();
    let a = par::map_range(degree + 1, |n| {
        let pow = u32::try_from(d * n).ok().and_then(|e| (d as u128).checked_pow(e));
        if let (Some(num), Some(den)) = (diagonal_multinomial(d, n), pow) {
            // one rounding at most: the numerator conversion, or a division of exact values
            if den.is_power_of_two() || (num <= EXACT_LIMIT && den <= EXACT_LIMIT) {
                return num as f64 / den as f64;
            }
        }
        (ln_multinomial(&vec![n as u32; d]) - (d * n) as f64 * ln_d).exp()
    });
    Ok(KdWeights { d, a })
}

impl KdWeights {
    pub fn degree(&self) -> usize {
        self.a.len() - 1
    }

    /// Least-squares slope of `log a_n` against `log n` over `[lo, hi]`.
    pub fn fitted_exponent(&self, lo: usize, hi: usize) -> Result<f64> {
        if lo < 1 || hi > self.degree() || hi <= lo {
            return Err(Error::param(format!("bad exponent window [{lo}, {hi}]")));
        }
        let pts: Vec<(f64, f64)> = (lo..=hi).map(|n| ((n as f64).ln(), self.a[n].ln())).collect();
        let m = pts.len() as f64;
        let (sx, sy) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
        let (mx, my) = (sx / m, sy / m);
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        Ok(sxy / sxx)
    }
}

/// `‖f‖_{K_d} = (Σ_n |f̂(n)|² / a_n)^{1/2}`.
pub fn kd_norm(f: &TruncatedSeries, w: &KdWeights) -> Result<f64> {
    kd_partial_norms(f, w).map(|v| v.last().copied().unwrap_or(0.0))
}

/// `‖f_{≤n}‖_{K_d}` for every `n ≤ deg f`.
pub fn kd_partial_norms(f: &TruncatedSeries, w: &KdWeights) -> Result<Vec<f64>> {
    if f.dim() != 1 {
        return Err(Error::UnsupportedDimension(f.dim()));
    }
    if f.degree() > w.degree() {
        return Err(Error::Range {
            degree: f.degree(),
            max: w.degree(),
        });
    }
    let mut acc = 0.0;
    Ok(f.univariate_coeffs()
        .iter()
        .zip(&w.a)
        .map(|(c, a)| {
            acc += c.norm_sqr() / a;
            acc.sqrt()
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ZeroSchedule {
    /// `a_j = 1 − j^{−2}`, `j = 1..=count`; `j = 1` puts a zero at the origin.
    InverseSquare { count: usize },
    Explicit { zeros: Vec<Complex64> },
}

impl ZeroSchedule {
    pub fn zeros(&self) -> Vec<Complex64> {
        match self {
            ZeroSchedule::InverseSquare { count } => (1..=*count)
                .map(|j| Complex64::new(1.0 - 1.0 / (j as f64 * j as f64), 0.0))
                .collect(),
            ZeroSchedule::Explicit { zeros } => zeros.clone(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CounterexampleBundle {
    pub zero_count: usize,
    pub blaschke_sum: f64,
    pub degree: usize,
    /// Largest `|f|` over the closed-form samples on the circle and the
    /// radii `k/R` of the disk grid.
    pub sup_disk_max: f64,
    /// Largest `|F|` over the sphere grid, `F = f∘τ` in closed form.
    pub sup_sphere_max: f64,
    /// Same grid, evaluated on the truncated composition.
    pub sup_sphere_max_truncated: f64,
    pub sphere_samples: usize,
    /// `‖f_{≤n}‖_{K_2}` for `n = 0..=N`.
    pub kd_partial_norms: Vec<f64>,
    /// `F` is supported on the diagonal indices `(n, n)`.
    pub diagonal_support: bool,
    pub decay: DecayReport,
}

impl CounterexampleBundle {
    /// Ratio of partial `K_2` norms between two degrees.
    pub fn growth_ratio(&self, from: usize, to: usize) -> Option<f64> {
        let a = *self.kd_partial_norms.get(from)?;
        let b = *self.kd_partial_norms.get(to)?;
        (a > 0.0).then_some(b / a)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "degree,kd_norm")?;
        for (n, v) in self.kd_partial_norms.iter().enumerate() {
            writeln!(out, "{n},{v:e}")?;
        }
        Ok(())
    }
}

/// Angular resolution of the disk and sphere sample grids.
pub const SAMPLE_GRID: usize = 1 << 10;
/// Number of radii (disk) and latitudes (sphere) in the sample grids.
pub const SAMPLE_RADII: usize = 64;

/// Builds `f = B·(1 − z)` through degree `degree` and `F = f∘τ` on `𝔹_2`,
/// and collects boundedness, `K_2` growth and decay diagnostics.
pub fn counterexample_build(schedule: &ZeroSchedule, degree: usize) -> Result<CounterexampleBundle> {
    let b = BlaschkeProduct::new(&schedule.zeros(), 0)?;
    let one_minus_z = TruncatedSeries::univariate_real(&[1.0, -1.0]).pad_to(degree);
    let f = b.series(degree).multiply(&one_minus_z)?;
    let big_f = tau_compose(&f, 2, 2 * degree)?;
    let closed = |w: Complex64| b.eval(w) * (1.0 - w);

    let angles: Vec<f64> = (0..SAMPLE_GRID)
        .map(|j| 2.0 * std::f64::consts::PI * j as f64 / SAMPLE_GRID as f64)
        .collect();
    let sup_disk_max = par::map_range(SAMPLE_RADII + 1, |k| {
        let r = k as f64 / SAMPLE_RADII as f64;
        angles
            .iter()
            .map(|&t| closed(Complex64::from_polar(r, t)).norm())
            .fold(0.0, f64::max)
    })
    .into_iter()
    .fold(0.0, f64::max);

    // z = (cos t e^{iα}, sin t e^{iβ}) on ∂𝔹_2; τ(z) = sin 2t · e^{i(α+β)}
    let coeffs = f.univariate_coeffs();
    let horner = |w: Complex64| coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| acc * w + c);
    let sphere_rows = par::map_range(SAMPLE_RADII + 1, |k| {
        let t = 0.25 * std::f64::consts::PI * k as f64 / SAMPLE_RADII as f64;
        let rho = (2.0 * t).sin();
        angles.iter().fold((0.0f64, 0.0f64), |acc, &phi| {
            let w = Complex64::from_polar(rho, phi);
            (acc.0.max(closed(w).norm()), acc.1.max(horner(w).norm()))
        })
    });
    let (sup_sphere_max, sup_sphere_max_truncated) =
        sphere_rows.iter().fold((0.0f64, 0.0f64), |a, b| (a.0.max(b.0), a.1.max(b.1)));

    let weights = kd_weights(2, degree)?;
    let kd = kd_partial_norms(&f, &weights)?;
    let diagonal_support = big_f
        .nonzero_terms()
        .iter()
        .all(|(a, _)| a.exponents()[0] == a.exponents()[1]);
    let decay = decay_fit(&big_f, &[DecayForm::Coefficient], &DecayConfig::default(), &QuadratureConfig::default())?;
    Ok(CounterexampleBundle {
        zero_count: b.zeros().len() + b.origin_multiplicity(),
        blaschke_sum: b.blaschke_sum(),
        degree,
        sup_disk_max,
        sup_sphere_max,
        sup_sphere_max_truncated,
        sphere_samples: (SAMPLE_RADII + 1) * SAMPLE_GRID,
        kd_partial_norms: kd,
        diagonal_support,
        decay,
    })
}

/// `‖f∘τ‖_{H²_d} − ‖f‖_{K_d}`, the isometry defect on one input.
pub fn isometry_defect(f: &TruncatedSeries, d: usize) -> Result<f64> {
    let w = kd_weights(d, f.degree())?;
    let lhs = h2d_norm(&tau_compose(f, d, d * f.degree())?);
    Ok(lhs - kd_norm(f, &w)?)
}
