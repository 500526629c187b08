//! Coefficient decay of the form `|ĥ(α)| ω_α ≤ M e^{−c√|α|}`, the pairing
//! `Γ_h(f) = Σ_n ⟨f_n, h_n⟩` with its absolute-convergence bound, the
//! seminorms `‖f‖²_c = Σ_n ‖f_n‖² e^{−c√n}` and the metric they induce.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dafunc::{
    layer_coefficient_levels, layer_h2d_norms, log_omega_layer, sup_norm_homogeneous, sup_norm_homogeneous_with_hints,
};
use crate::error::{Error, Result};
use crate::metrics::QuadratureConfig;
use crate::par;
use crate::series::TruncatedSeries;
use crate::sphere::Direction;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayForm {
    /// `max_{|α|=n} |ĥ(α)| ω_α`
    Coefficient,
    /// `‖h_n‖_∞` on the sphere (sampled lower estimate)
    SupNorm,
    /// `‖h_n‖_{H²_d}`
    H2dNorm,
}

impl DecayForm {
    pub const ALL: [DecayForm; 3] = [DecayForm::Coefficient, DecayForm::SupNorm, DecayForm::H2dNorm];

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "coeff" | "coefficient" => Ok(DecayForm::Coefficient),
            "sup" | "sup_norm" => Ok(DecayForm::SupNorm),
            "h2" | "h2d" | "h2d_norm" => Ok(DecayForm::H2dNorm),
            other => Err(Error::param(format!("unknown decay form `{other}` (coeff, sup, h2)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecayConfig {
    pub c_min: f64,
    pub r_squared_floor: f64,
    /// Levels at or below this value are excluded from the fit.
    pub level_floor: f64,
    /// First degree of the fit window.
    pub min_degree: usize,
    /// Last degree of the fit window; `None` means the truncation degree.
    pub max_degree: Option<usize>,
}

impl Default for DecayConfig {
    fn default() -> Self {
        DecayConfig {
            c_min: 0.01,
            r_squared_floor: 0.9,
            level_floor: 1e-280,
            min_degree: 4,
            max_degree: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Accept,
    Reject,
    Inconclusive,
    /// Finitely many nonzero levels: trivially of exponential decay.
    DegenerateAccept,
}

impl Verdict {
    pub fn accepts(self) -> bool {
        matches!(self, Verdict::Accept | Verdict::DegenerateAccept)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FormFit {
    pub form: DecayForm,
    /// Fitted `c` in `log level_n ≈ log M − c√n + p log(n+1)`.
    pub c: f64,
    pub log_m: f64,
    /// Coefficient of the polynomial nuisance term `log(n+1)`.
    pub poly_exponent: f64,
    pub r_squared: f64,
    /// The two-parameter fit `log level_n ≈ log M − c√n`, for comparison.
    pub plain_c: f64,
    pub plain_r_squared: f64,
    /// `max_n level_n e^{c√n}` over every stored degree: the smallest `M`
    /// for which the fitted law is an upper envelope.
    pub envelope_m: f64,
    pub points: usize,
    pub levels: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct DecayReport {
    pub fitted_c: f64,
    #[serde(rename = "fitted_logM")]
    pub fitted_log_m: f64,
    pub r_squared: f64,
    pub envelope_m: f64,
    pub verdict: Verdict,
    pub fits: Vec<FormFit>,
    /// Whether the well-conditioned fits agree on `c` within 20%; `None`
    /// with fewer than two such fits.
    pub forms_agree: Option<bool>,
}

/// Relative agreement required between the per-form values of `c`.
pub const FORM_AGREEMENT: f64 = 0.2;

/// Ordinary least squares `y ≈ X β`; returns `(β, r²)`.
fn least_squares(columns: &[Vec<f64>], y: &[f64]) -> Option<(Vec<f64>, f64)> {
    let rows = y.len();
    let p = columns.len();
    if rows < p + 1 {
        return None;
    }
    let x = DMatrix::from_fn(rows, p, |i, j| columns[j][i]);
    let yv = DVector::from_column_slice(y);
    let beta = x.clone().svd(true, true).solve(&yv, 1e-12).ok()?;
    let fitted = &x * &beta;
    let mean = y.iter().sum::<f64>() / rows as f64;
    let ss_tot: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let ss_res: f64 = y.iter().zip(fitted.iter()).map(|(a, b)| (a - b).powi(2)).sum();
    let r2 = if ss_tot <= 1e-300 { 1.0 } else { (1.0 - ss_res / ss_tot).clamp(0.0, 1.0) };
    Some((beta.iter().copied().collect(), r2))
}

#[derive(Clone, Debug, Serialize)]
pub struct LineFit {
    /// Decay rate `c` in `log level ≈ log M − c·t(n)`.
    pub c: f64,
    pub log_m: f64,
    pub r_squared: f64,
    pub points: usize,
}

fn fit_window(levels: &[f64], cfg: &DecayConfig) -> Vec<(usize, f64)> {
    let hi = cfg.max_degree.unwrap_or(usize::MAX).min(levels.len().saturating_sub(1));
    (cfg.min_degree..=hi)
        .filter(|&n| n < levels.len() && levels[n] > cfg.level_floor)
        .map(|n| (n, levels[n].ln()))
        .collect()
}

fn line_fit(points: &[(usize, f64)], t: impl Fn(f64) -> f64) -> Option<LineFit> {
    let ones = vec![1.0; points.len()];
    let ts: Vec<f64> = points.iter().map(|&(n, _)| t(n as f64)).collect();
    let y: Vec<f64> = points.iter().map(|p| p.1).collect();
    let (beta, r2) = least_squares(&[ones, ts], &y)?;
    Some(LineFit {
        c: -beta[1],
        log_m: beta[0],
        r_squared: r2,
        points: points.len(),
    })
}

fn fit_form(form: DecayForm, levels: Vec<f64>, cfg: &DecayConfig) -> Option<FormFit> {
    let pts = fit_window(&levels, cfg);
    let ones = vec![1.0; pts.len()];
    let sq: Vec<f64> = pts.iter().map(|&(n, _)| (n as f64).sqrt()).collect();
    let lg: Vec<f64> = pts.iter().map(|&(n, _)| ((n + 1) as f64).ln()).collect();
    let y: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let (beta, r2) = least_squares(&[ones, sq, lg], &y)?;
    let plain = line_fit(&pts, f64::sqrt)?;
    let c = -beta[1];
    let envelope_m = levels
        .iter()
        .enumerate()
        .filter(|(_, &l)| l > 0.0)
        .map(|(n, &l)| (l.ln() + c * (n as f64).sqrt()).exp())
        .fold(0.0, f64::max);
    Some(FormFit {
        form,
        c,
        log_m: beta[0],
        poly_exponent: beta[2],
        r_squared: r2,
        plain_c: plain.c,
        plain_r_squared: plain.r_squared,
        envelope_m,
        points: pts.len(),
        levels,
    })
}

/// Per-degree levels of `h` in the given form.
pub fn decay_levels(h: &TruncatedSeries, form: DecayForm, quad: &QuadratureConfig) -> Result<Vec<f64>> {
    Ok(match form {
        DecayForm::Coefficient => layer_coefficient_levels(h),
        DecayForm::H2dNorm => layer_h2d_norms(h),
        DecayForm::SupNorm => sup_levels(h, quad)?,
    })
}

/// Two passes: independent searches per degree, then a second search at
/// every degree seeded with the directions found elsewhere. Both are lower
/// bounds, so the larger value is kept.
fn sup_levels(h: &TruncatedSeries, quad: &QuadratureConfig) -> Result<Vec<f64>> {
    let components = (0..=h.degree())
        .map(|n| h.homogeneous_component(n))
        .collect::<Result<Vec<_>>>()?;
    let first = par::map_slice(&components, |hn| sup_norm_homogeneous(hn, quad))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    if h.dim() == 1 {
        return Ok(first.into_iter().map(|e| e.value).collect());
    }
    let mut hints: Vec<Direction> = Vec::new();
    for e in first.iter().filter(|e| e.value > 0.0) {
        if !hints.iter().any(|d| d == &e.direction) {
            hints.push(e.direction.clone());
        }
    }
    let second_cfg = QuadratureConfig {
        sphere_samples: 0,
        ..quad.clone()
    };
    let second = par::map_slice(&components, |hn| sup_norm_homogeneous_with_hints(hn, &second_cfg, &hints))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(first.iter().zip(&second).map(|(a, b)| a.value.max(b.value)).collect())
}

/// Fits the decay law to each requested form; the first form decides the
/// verdict.
pub fn decay_fit(h: &TruncatedSeries, forms: &[DecayForm], cfg: &DecayConfig, quad: &QuadratureConfig) -> Result<DecayReport> {
    if forms.is_empty() {
        return Err(Error::param("no decay forms requested"));
    }
    let top = h.max_nonzero_degree();
    let degenerate = matches!(top, Some(t) if t < h.degree());
    let mut fits = Vec::with_capacity(forms.len());
    for &form in forms {
        let levels = decay_levels(h, form, quad)?;
        if let Some(fit) = fit_form(form, levels, cfg) {
            fits.push(fit);
        }
    }
    let primary = fits.iter().find(|f| f.form == forms[0]);
    let verdict = match (top, primary) {
        (None, _) => Verdict::Inconclusive,
        _ if degenerate => Verdict::DegenerateAccept,
        (_, None) => Verdict::Inconclusive,
        (_, Some(p)) if p.c > cfg.c_min && p.r_squared > cfg.r_squared_floor => Verdict::Accept,
        (_, Some(_)) => Verdict::Reject,
    };
    let good: Vec<f64> = fits
        .iter()
        .filter(|f| f.r_squared > cfg.r_squared_floor && f.c > cfg.c_min)
        .map(|f| f.c)
        .collect();
    let forms_agree = (good.len() >= 2).then(|| {
        let hi = good.iter().copied().fold(f64::MIN, f64::max);
        let lo = good.iter().copied().fold(f64::MAX, f64::min);
        hi - lo <= FORM_AGREEMENT * lo
    });
    let (fitted_c, fitted_log_m, r_squared, envelope_m) = match primary {
        Some(p) => (p.c, p.log_m, p.r_squared, p.envelope_m),
        None => (0.0, f64::NEG_INFINITY, 0.0, 0.0),
    };
    Ok(DecayReport {
        fitted_c,
        fitted_log_m,
        r_squared,
        envelope_m,
        verdict,
        fits,
        forms_agree,
    })
}

/// `Σ_{n > N} e^{−a√n} ≤ ∫_N^∞ e^{−a√x} dx = 2 e^{−a√N} (√N/a + 1/a²)`.
fn sqrt_exp_tail(a: f64, n: usize) -> f64 {
    let s = (n as f64).sqrt();
    2.0 * (-a * s).exp() * (s / a + 1.0 / (a * a))
}

/// `Σ_{n ≥ 0} e^{−c√n}`: exact terms up to a cutoff plus the integral tail.
pub fn sqrt_exp_sum(c: f64) -> f64 {
    let cutoff = ((40.0 / c).powi(2) as usize).clamp(16, 10_000_000);
    (0..=cutoff).map(|n| (-c * (n as f64).sqrt()).exp()).sum::<f64>() + sqrt_exp_tail(c, cutoff)
}

#[derive(Clone, Debug, Serialize)]
pub struct PairingReport {
    pub value_re: f64,
    pub value_im: f64,
    /// Bound on `Σ_{n>N} |⟨f_n, h_n⟩|` (unavailable unless `h` passes the decay fit).
    pub tail_bound: Option<f64>,
    /// `M ‖f‖_c (Σ_n e^{−c√n})^{1/2}` with `(M, c)` from the fit of `h`.
    pub absolute_bound: Option<f64>,
    /// Cumulative `Σ_{k≤n} |⟨f_k, h_k⟩|`.
    pub abs_partial_sums: Vec<f64>,
    pub degree: usize,
    pub decay_c: f64,
    pub decay_m: f64,
    pub verdict: Verdict,
}

impl PairingReport {
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.value_re, self.value_im)
    }
}

fn layer_pairing(f: &TruncatedSeries, h: &TruncatedSeries, n: usize) -> Complex64 {
    f.layer(n)
        .iter()
        .zip(h.layer(n))
        .zip(log_omega_layer(f.dim(), n))
        .map(|((a, b), lw)| a * b.conj() * (2.0 * lw).exp())
        .sum()
}

/// `Σ_{n≤N} Σ_{|α|=n} ω_α² f̂(α) conj(ĥ(α))` with convergence accounting.
///
/// The absolute bound and the tail use the `H²_d` layer-norm envelope of
/// `h`. The tail also needs a growth ceiling for `f`: stored layers are
/// bounded by `M_f e^{c√n/2}` and that law is extrapolated.
pub fn pairing(f: &TruncatedSeries, h: &TruncatedSeries, degree: usize, cfg: &DecayConfig) -> Result<PairingReport> {
    if f.dim() != h.dim() {
        return Err(Error::DimensionMismatch {
            left: f.dim(),
            right: h.dim(),
        });
    }
    let n_max = degree.min(f.degree()).min(h.degree());
    let terms = par::map_range(n_max + 1, |n| layer_pairing(f, h, n));
    let value: Complex64 = terms.iter().sum();
    let mut abs_partial_sums = Vec::with_capacity(terms.len());
    let mut acc = 0.0;
    for t in &terms {
        acc += t.norm();
        abs_partial_sums.push(acc);
    }
    let decay = decay_fit(h, &[DecayForm::H2dNorm], cfg, &QuadratureConfig::default())?;
    let (mut absolute_bound, mut tail_bound) = (None, None);
    let (c, m) = (decay.fitted_c, decay.envelope_m);
    if decay.verdict == Verdict::Accept {
        let fc = frechet_seminorm(f, c)?;
        absolute_bound = Some(m * fc * sqrt_exp_sum(c).sqrt());
        let half = 0.5 * c;
        let mf = layer_h2d_norms(f)
            .iter()
            .enumerate()
            .map(|(n, &v)| v * (-half * (n as f64).sqrt()).exp())
            .fold(0.0, f64::max);
        tail_bound = Some(m * mf * sqrt_exp_tail(c - half, n_max));
    } else if decay.verdict == Verdict::DegenerateAccept {
        let top = h.max_nonzero_degree().unwrap_or(0);
        tail_bound = Some(if top <= n_max { 0.0 } else { f64::INFINITY });
    }
    Ok(PairingReport {
        value_re: value.re,
        value_im: value.im,
        tail_bound,
        absolute_bound,
        abs_partial_sums,
        degree: n_max,
        decay_c: c,
        decay_m: m,
        verdict: decay.verdict,
    })
}

/// `‖f‖_c = (Σ_n ‖f_n‖²_{H²_d} e^{−c√n})^{1/2}` over stored degrees.
pub fn frechet_seminorm(f: &TruncatedSeries, c: f64) -> Result<f64> {
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::param(format!("seminorm parameter must be positive, got {c}")));
    }
    Ok(layer_h2d_norms(f)
        .iter()
        .enumerate()
        .map(|(n, v)| v * v * (-c * (n as f64).sqrt()).exp())
        .sum::<f64>()
        .sqrt())
}

#[derive(Clone, Debug, Serialize)]
pub struct FrechetDistance {
    pub value: f64,
    /// The omitted terms `k > K` contribute at most `2^{−K}`.
    pub tail_bound: f64,
}

/// `d_F(f, g) = Σ_{k=1}^{K} 2^{−k} s_k/(1 + s_k)` with `s_k = ‖f − g‖_{1/k}`.
pub fn frechet_metric(f: &TruncatedSeries, g: &TruncatedSeries, terms: usize) -> Result<FrechetDistance> {
    if terms == 0 {
        return Err(Error::param("need at least one term"));
    }
    let diff = f.sub(g)?;
    let norms = layer_h2d_norms(&diff);
    let mut value = 0.0;
    for k in 1..=terms {
        let c = 1.0 / k as f64;
        let s = norms
            .iter()
            .enumerate()
            .map(|(n, v)| v * v * (-c * (n as f64).sqrt()).exp())
            .sum::<f64>()
            .sqrt();
        value += 0.5f64.powi(k as i32) * s / (1.0 + s);
    }
    Ok(FrechetDistance {
        value,
        tail_bound: 0.5f64.powi(terms as i32),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct CeilingRow {
    pub c: f64,
    /// Smallest `M` with `‖f_n‖ ≤ M e^{c√n}` over degrees `≤ N/4`, `≤ N/2`, `≤ N`.
    pub nested_m: [f64; 3],
    pub stabilized: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct GrowthCeilingReport {
    pub degree: usize,
    pub rows: Vec<CeilingRow>,
}

/// Relative slack allowed before the ceiling counts as still growing.
pub const CEILING_STABLE_TOL: f64 = 1e-12;

/// For each `c`, the minimal `M` with `‖f_n‖_{H²_d} ≤ M e^{c√n}` over nested
/// degree windows; it stabilizes when the last half of the degrees adds nothing.
pub fn growth_ceiling_check(f: &TruncatedSeries, c_list: &[f64]) -> Result<GrowthCeilingReport> {
    let norms = layer_h2d_norms(f);
    let n = f.degree();
    let mut rows = Vec::with_capacity(c_list.len());
    for &c in c_list {
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::param(format!("ceiling rates must be positive, got {c}")));
        }
        let upto = |top: usize| {
            norms[..=top]
                .iter()
                .enumerate()
                .filter(|(_, &v)| v > 0.0)
                .map(|(k, &v)| (v.ln() - c * (k as f64).sqrt()).exp())
                .fold(0.0, f64::max)
        };
        let nested_m = [upto(n / 4), upto(n / 2), upto(n)];
        rows.push(CeilingRow {
            c,
            stabilized: nested_m[2] <= nested_m[1] * (1.0 + CEILING_STABLE_TOL),
            nested_m,
        });
    }
    Ok(GrowthCeilingReport { degree: n, rows })
}

#[derive(Clone, Debug, Serialize)]
pub struct NawrockiReport {
    pub dim: usize,
    /// `d/(d+1)`.
    pub exponent: f64,
    /// Fit of `log level_n` against `n^{d/(d+1)}`.
    pub nawrocki: Option<LineFit>,
    /// Fit of `log level_n` against `√n`.
    pub sqrt_fit: Option<LineFit>,
    /// `"nawrocki"` or `"sqrt"`, by the larger `r²`.
    pub preferred: Option<String>,
}

/// Compares the `n^{d/(d+1)}` and `√n` laws on the coefficient levels of `h`.
pub fn nawrocki_fit(h: &TruncatedSeries, cfg: &DecayConfig) -> Result<NawrockiReport> {
    let levels = layer_coefficient_levels(h);
    let pts = fit_window(&levels, cfg);
    if pts.len() < 3 {
        return Err(Error::param("too few levels above the floor for a fit"));
    }
    let d = h.dim();
    let exponent = d as f64 / (d as f64 + 1.0);
    let nawrocki = line_fit(&pts, |n| n.powf(exponent));
    let sqrt_fit = line_fit(&pts, f64::sqrt);
    let preferred = match (&nawrocki, &sqrt_fit) {
        (Some(a), Some(b)) => Some(if a.r_squared >= b.r_squared { "nawrocki" } else { "sqrt" }.to_string()),
        _ => None,
    };
    Ok(NawrockiReport {
        dim: d,
        exponent,
        nawrocki,
        sqrt_fit,
        preferred,
    })
}
