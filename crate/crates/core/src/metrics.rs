//! The uniform Smirnov seminorm
//! `⟦f⟧ = sup_{ζ ∈ ∂𝔹_d} sup_{0<r<1} ∫ log(1 + |f(r e^{iθ} ζ)|) dθ/2π`,
//! the metric `ρ(f, g) = ⟦f − g⟧`, and related diagnostics.
//!
//! Slice integrals use the trapezoidal rule on `M` equispaced angles. The
//! slice values come from one inverse FFT of the dilated slice coefficients
//! folded mod `M`.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{is_zero, TruncatedSeries};
use crate::sphere::{self, Direction};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureConfig {
    pub angular_grid: usize,
    pub radius_schedule: Vec<f64>,
    pub sphere_samples: usize,
    pub refine_steps: usize,
    pub seed: u64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            angular_grid: 1 << 10,
            radius_schedule: vec![0.5, 0.9, 0.99, 0.999],
            sphere_samples: 512,
            refine_steps: 20,
            seed: 0x5eed,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        let m = self.angular_grid;
        if m < 64 || !m.is_power_of_two() {
            return Err(Error::param(format!("angular_grid must be a power of two ≥ 64, got {m}")));
        }
        if self.radius_schedule.is_empty() {
            return Err(Error::param("radius_schedule is empty"));
        }
        let mut prev = 0.0;
        for &r in &self.radius_schedule {
            if !(r > prev && r < 1.0) {
                return Err(Error::param(format!(
                    "radius_schedule must be strictly increasing in (0,1): {:?}",
                    self.radius_schedule
                )));
            }
            prev = r;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RadiusValue {
    pub radius: f64,
    pub value: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SeminormEstimate {
    pub value: f64,
    pub argmax_direction: Direction,
    pub argmax_radius: f64,
    /// Always true: finitely many probes only bound the supremum from below.
    pub is_lower_bound: bool,
    /// Slice integrals along `argmax_direction` at every scheduled radius.
    pub per_radius: Vec<RadiusValue>,
    pub evaluations: usize,
}

/// Trapezoidal slice quadrature on a fixed grid; reusable across calls.
#[derive(Clone)]
pub struct SliceQuadrature {
    grid: usize,
    fft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for SliceQuadrature {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SliceQuadrature").field("grid", &self.grid).finish()
    }
}

impl SliceQuadrature {
    pub fn new(grid: usize) -> Result<Self> {
        if grid == 0 || !grid.is_power_of_two() {
            return Err(Error::param(format!("grid must be a power of two, got {grid}")));
        }
        Ok(SliceQuadrature {
            grid,
            fft: FftPlanner::new().plan_fft_inverse(grid),
        })
    }

    pub fn grid(&self) -> usize {
        self.grid
    }

    /// `Σ_n c_n r^n e^{2πi jn/M}` for `j < M`.
    pub fn values(&self, coeffs: &[Complex64], r: f64) -> Vec<Complex64> {
        let m = self.grid;
        let mut buf = vec![Complex64::new(0.0, 0.0); m];
        let mut rn = 1.0;
        for (n, c) in coeffs.iter().enumerate() {
            buf[n % m] += c * rn;
            rn *= r;
        }
        self.fft.process(&mut buf);
        buf
    }

    /// `(1/M) Σ_j log(1 + |g(r e^{iθ_j})|)` for `g = Σ c_n z^n`.
    pub fn log_integral(&self, coeffs: &[Complex64], r: f64) -> f64 {
        if coeffs.iter().all(|c| is_zero(c)) {
            return 0.0;
        }
        mean_log1p(&self.values(coeffs, r))
    }
}

fn mean_log1p(values: &[Complex64]) -> f64 {
    values.iter().map(|v| v.norm().ln_1p()).sum::<f64>() / values.len() as f64
}

fn mean_log_plus(values: &[Complex64]) -> f64 {
    values.iter().map(|v| v.norm().ln().max(0.0)).sum::<f64>() / values.len() as f64
}

fn check_radius(r: f64) -> Result<()> {
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::param(format!("radius must lie in (0,1), got {r}")));
    }
    Ok(())
}

/// `∫ log(1 + |f(r e^{iθ} ζ)|) dθ/2π` by the trapezoidal rule.
pub fn slice_log_integral(f: &TruncatedSeries, zeta: &[Complex64], r: f64, cfg: &QuadratureConfig) -> Result<f64> {
    check_radius(r)?;
    cfg.validate()?;
    let g = f.slice(zeta)?;
    let q = SliceQuadrature::new(cfg.angular_grid)?;
    Ok(q.log_integral(&g.univariate_coeffs(), r))
}

pub fn smirnov_seminorm(f: &TruncatedSeries, cfg: &QuadratureConfig) -> Result<SeminormEstimate> {
    smirnov_seminorm_with_hints(f, cfg, &[])
}

/// Like [`smirnov_seminorm`], with extra candidate directions placed ahead
/// of the random samples.
pub fn smirnov_seminorm_with_hints(
    f: &TruncatedSeries,
    cfg: &QuadratureConfig,
    hints: &[Direction],
) -> Result<SeminormEstimate> {
    cfg.validate()?;
    let d = f.dim();
    for h in hints {
        if h.len() != d {
            return Err(Error::DimensionMismatch { left: d, right: h.len() });
        }
    }
    let q = SliceQuadrature::new(cfg.angular_grid)?;
    let radii = &cfg.radius_schedule;
    let along = |zeta: &[Complex64]| -> Vec<f64> {
        let coeffs = f.slice(zeta).map(|g| g.univariate_coeffs()).unwrap_or_default();
        radii.iter().map(|&r| q.log_integral(&coeffs, r)).collect()
    };
    let hints: Vec<Direction> = hints.iter().map(|h| normalize(h)).collect();
    let best = sphere::maximize_on_sphere(d, cfg.sphere_samples, cfg.refine_steps, cfg.seed, &hints, |z| {
        along(z).into_iter().fold(0.0, f64::max)
    });
    let per: Vec<f64> = along(&best.direction);
    let k = crate::par::first_argmax(&per).unwrap_or(0);
    Ok(SeminormEstimate {
        value: per[k].max(0.0),
        argmax_direction: best.direction,
        argmax_radius: radii[k],
        is_lower_bound: true,
        per_radius: radii
            .iter()
            .zip(&per)
            .map(|(&radius, &value)| RadiusValue { radius, value })
            .collect(),
        evaluations: best.evaluations + 1,
    })
}

fn normalize(v: &[Complex64]) -> Direction {
    let n = sphere::norm(v);
    v.iter().map(|z| z / n).collect()
}

/// `ρ(f, g) = ⟦f − g⟧`.
pub fn rho(f: &TruncatedSeries, g: &TruncatedSeries, cfg: &QuadratureConfig) -> Result<f64> {
    Ok(smirnov_seminorm(&f.sub(g)?, cfg)?.value)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Trend {
    Decreasing,
    NonMonotone,
    Zero,
}

#[derive(Clone, Debug, Serialize)]
pub struct RadialProbeReport {
    /// `(r, ρ(f_r, f))` for each probed radius.
    pub points: Vec<(f64, f64)>,
    pub trend: Trend,
    pub final_value: f64,
}

/// `ρ(f_r, f)` along `radii`: tends to 0 for members of the uniform Smirnov
/// class. Reported as a trend only.
pub fn radial_convergence_probe(f: &TruncatedSeries, radii: &[f64], cfg: &QuadratureConfig) -> Result<RadialProbeReport> {
    let mut prev = 0.0;
    for &r in radii {
        if !(r > prev && r < 1.0) {
            return Err(Error::param(format!("radii must be increasing in (0,1): {radii:?}")));
        }
        prev = r;
    }
    let points = radii
        .iter()
        .map(|&r| Ok((r, rho(&f.dilate(r)?, f, cfg)?)))
        .collect::<Result<Vec<_>>>()?;
    let values: Vec<f64> = points.iter().map(|p| p.1).collect();
    let trend = if values.iter().all(|&v| v == 0.0) {
        Trend::Zero
    } else if values.windows(2).all(|w| w[1] <= w[0] + 1e-12) {
        Trend::Decreasing
    } else {
        Trend::NonMonotone
    };
    Ok(RadialProbeReport {
        final_value: values.last().copied().unwrap_or(0.0),
        points,
        trend,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct GrowthPoint {
    pub point_norm: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct GrowthReport {
    pub seminorm: f64,
    pub points: Vec<GrowthPoint>,
    pub violations: usize,
    pub min_margin: f64,
    pub holds: bool,
}

/// Checks `|f(w)| ≤ exp(2s/(1 − |w|)) − 1` at every point, where `s` should
/// be an upper estimate of `⟦f⟧`.
pub fn growth_bound_check(f: &TruncatedSeries, points: &[Vec<Complex64>], seminorm: f64) -> Result<GrowthReport> {
    if !(seminorm >= 0.0) {
        return Err(Error::param("seminorm must be non-negative"));
    }
    let mut out = Vec::with_capacity(points.len());
    for w in points {
        if w.len() != f.dim() {
            return Err(Error::DimensionMismatch {
                left: f.dim(),
                right: w.len(),
            });
        }
        let t = sphere::norm(w);
        if t >= 1.0 {
            return Err(Error::param(format!("point of norm {t} is not inside the ball")));
        }
        let lhs = f.eval_unchecked(w).norm();
        let rhs = (2.0 * seminorm / (1.0 - t)).exp_m1();
        out.push(GrowthPoint {
            point_norm: t,
            lhs,
            rhs,
            margin: rhs - lhs,
        });
    }
    let violations = out.iter().filter(|p| p.lhs > p.rhs).count();
    Ok(GrowthReport {
        seminorm,
        min_margin: out.iter().map(|p| p.margin).fold(f64::INFINITY, f64::min),
        points: out,
        violations,
        holds: violations == 0,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct EquivalenceRow {
    pub radius: f64,
    /// `|∫ log⁺|f_r| − ∫ log⁺|f||` over the boundary grid.
    pub log_plus_gap: f64,
    /// `∫ log(1 + |f_r − f|)` over the boundary grid.
    pub log1p_distance: f64,
    /// `⟦f − f_r⟧`, as the largest slice integral over the schedule and `s = 1`.
    pub seminorm_distance: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct EquivalenceReport {
    pub grid: usize,
    pub rows: Vec<EquivalenceRow>,
}

impl EquivalenceReport {
    /// Largest of the three discrepancies at the outermost radius.
    pub fn final_max(&self) -> f64 {
        self.rows
            .last()
            .map(|r| r.log_plus_gap.max(r.log1p_distance).max(r.seminorm_distance))
            .unwrap_or(0.0)
    }
}

/// The three descriptions of the Smirnov class on the disk compared for a
/// one-variable series at each radius of the schedule.
pub fn disk_smirnov_equivalence_check(f: &TruncatedSeries, cfg: &QuadratureConfig) -> Result<EquivalenceReport> {
    if f.dim() != 1 {
        return Err(Error::UnsupportedDimension(f.dim()));
    }
    let coeffs = f.univariate_coeffs();
    disk_smirnov_equivalence_check_fn(
        |z| coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| acc * z + c),
        cfg,
    )
}

/// Same as [`disk_smirnov_equivalence_check`] for a function given by
/// evaluation on the closed disk (e.g. a rational function in closed form).
pub fn disk_smirnov_equivalence_check_fn<F>(f: F, cfg: &QuadratureConfig) -> Result<EquivalenceReport>
where
    F: Fn(Complex64) -> Complex64 + Sync,
{
    cfg.validate()?;
    let m = cfg.angular_grid;
    let circle: Vec<Complex64> = (0..m)
        .map(|j| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * j as f64 / m as f64))
        .collect();
    let eval_on = |s: f64| -> Result<Vec<Complex64>> {
        let v: Vec<Complex64> = circle.iter().map(|z| f(z * s)).collect();
        if v.iter().any(|x| !x.re.is_finite() || !x.im.is_finite()) {
            return Err(Error::param(format!("non-finite value on the circle of radius {s}")));
        }
        Ok(v)
    };
    let boundary = eval_on(1.0)?;
    let boundary_log_plus = mean_log_plus(&boundary);
    let mut slice_radii = cfg.radius_schedule.clone();
    slice_radii.push(1.0);
    let rows = crate::par::map_slice(&cfg.radius_schedule, |&r| -> Result<EquivalenceRow> {
        let fr = eval_on(r)?;
        let diff: Vec<Complex64> = boundary.iter().zip(&fr).map(|(a, b)| b - a).collect();
        let mut seminorm_distance = 0.0f64;
        for &s in &slice_radii {
            let vals: Vec<Complex64> = circle
                .iter()
                .map(|z| f(z * (s * r)) - f(z * s))
                .collect();
            seminorm_distance = seminorm_distance.max(mean_log1p(&vals));
        }
        Ok(EquivalenceRow {
            radius: r,
            log_plus_gap: (mean_log_plus(&fr) - boundary_log_plus).abs(),
            log1p_distance: mean_log1p(&diff),
            seminorm_distance,
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Ok(EquivalenceReport { grid: m, rows })
}
