//! The verification battery: thirteen property checks with pinned
//! tolerances, run independently and aggregated into one JSON report.
//!
//! Every check records its assertions with the measured value, the bound it
//! was held to and the signed margin (positive when the assertion holds).
//! `tolerance_scale` multiplies every tolerance; `0` demands exact equality.

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dafunc::{h2d_norm, hardy_sphere_relation_check, layer_h2d_norms, norm_chain, range_membership_probe, vn_bound};
use crate::disk_tools::phi_c;
use crate::duality::{decay_fit, frechet_metric, frechet_seminorm, pairing, DecayConfig, DecayForm, Verdict};
use crate::embeddings::{counterexample_build, kd_norm, kd_weights, tau_compose, ZeroSchedule};
use crate::error::{Error, Result};
use crate::metrics::{disk_smirnov_equivalence_check_fn, growth_bound_check, smirnov_seminorm, QuadratureConfig};
use crate::multiindex::{binomial, layer_size, visit_layer, MultiIndex};
use crate::par;
use crate::series::TruncatedSeries;
use crate::sphere;

#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    /// Where the JSON report is written; `None` leaves it to the caller.
    pub report: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub quadrature: QuadratureConfig,
    pub decay: DecayConfig,
    pub seed: u64,
    /// Multiplies every pinned tolerance.
    pub tolerance_scale: f64,
    /// Family names or check ids; empty runs everything.
    pub filter: Vec<String>,
    pub output: OutputConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            quadrature: QuadratureConfig::default(),
            decay: DecayConfig::default(),
            seed: 20_240_601,
            tolerance_scale: 1.0,
            filter: Vec::new(),
            output: OutputConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Schema(format!("run config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn read_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.quadrature.validate()?;
        if !(self.tolerance_scale >= 0.0 && self.tolerance_scale.is_finite()) {
            return Err(Error::param(format!(
                "tolerance_scale must be finite and non-negative, got {}",
                self.tolerance_scale
            )));
        }
        if !(self.decay.c_min >= 0.0) || !(0.0..=1.0).contains(&self.decay.r_squared_floor) {
            return Err(Error::param("decay thresholds out of range"));
        }
        for f in &self.filter {
            if !CHECKS.iter().any(|c| c.matches(f)) {
                return Err(Error::param(format!("filter `{f}` matches no check")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Assertion {
    pub name: String,
    pub measured: f64,
    pub bound: f64,
    /// Positive when the assertion holds.
    pub margin: f64,
    pub passed: bool,
    pub cases: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Observation {
    pub name: String,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckResult {
    pub criterion: u32,
    pub id: String,
    pub family: String,
    pub title: String,
    pub passed: bool,
    pub assertions: Vec<Assertion>,
    pub observations: Vec<Observation>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteReport {
    pub seed: u64,
    pub tolerance_scale: f64,
    pub filter: Vec<String>,
    pub checks: Vec<CheckResult>,
    pub passed: usize,
    pub failed: usize,
    pub all_passed: bool,
}

impl SuiteReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn write_file(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut text = self.to_json();
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }

    /// One `PASS`/`FAIL` line per check.
    pub fn summary_lines(&self) -> Vec<String> {
        self.checks
            .iter()
            .map(|c| {
                let worst = c
                    .assertions
                    .iter()
                    .map(|a| a.margin)
                    .fold(f64::INFINITY, f64::min);
                format!(
                    "{} {:>2} {:<28} min margin {:+.3e}{}",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.criterion,
                    c.id,
                    worst,
                    c.error.as_ref().map(|e| format!(" error: {e}")).unwrap_or_default()
                )
            })
            .collect()
    }
}

/// Collects the assertions of one check.
pub struct Checker {
    scale: f64,
    assertions: Vec<Assertion>,
    observations: Vec<Observation>,
}

impl Checker {
    fn new(scale: f64) -> Self {
        Checker {
            scale,
            assertions: Vec::new(),
            observations: Vec::new(),
        }
    }

    fn push(&mut self, name: &str, measured: f64, bound: f64, margin: f64, cases: usize) {
        self.assertions.push(Assertion {
            name: name.to_string(),
            measured,
            bound,
            margin,
            // NaN margins fail
            passed: margin >= 0.0,
            cases,
        });
    }

    /// `measured ≤ bound + tol`.
    fn at_most(&mut self, name: &str, measured: f64, bound: f64, tol: f64, cases: usize) {
        let b = bound + tol * self.scale;
        self.push(name, measured, b, b - measured, cases);
    }

    /// `measured ≥ bound` (a threshold, not a tolerance).
    fn at_least(&mut self, name: &str, measured: f64, bound: f64, cases: usize) {
        self.push(name, measured, bound, measured - bound, cases);
    }

    /// `|measured − target| ≤ tol`; the deviation is the measured quantity
    /// and the raw value is kept as an observation.
    fn close(&mut self, name: &str, measured: f64, target: f64, tol: f64, cases: usize) {
        let t = tol * self.scale;
        let dev = (measured - target).abs();
        self.push(name, dev, t, t - dev, cases);
        self.observe(&format!("{name}.value"), measured);
    }

    /// Largest deviation over many cases, held to `tol`.
    fn max_deviation(&mut self, name: &str, deviation: f64, tol: f64, cases: usize) {
        let t = tol * self.scale;
        self.push(name, deviation, t, t - deviation, cases);
    }

    fn flag(&mut self, name: &str, ok: bool) {
        self.push(name, if ok { 1.0 } else { 0.0 }, 1.0, if ok { 0.0 } else { -1.0 }, 1);
    }

    fn observe(&mut self, name: &str, value: f64) {
        self.observations.push(Observation {
            name: name.to_string(),
            value,
        });
    }
}

struct Ctx<'a> {
    cfg: &'a RunConfig,
    seed: u64,
}

impl Ctx<'_> {
    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut r = sphere::rng(self.seed);
        r.set_stream(stream);
        r
    }
}

pub struct CheckSpec {
    pub criterion: u32,
    pub id: &'static str,
    pub family: &'static str,
    pub title: &'static str,
    run: fn(&Ctx, &mut Checker) -> Result<()>,
}

impl CheckSpec {
    pub fn matches(&self, filter: &str) -> bool {
        let f = filter.trim();
        f == self.family || f == self.id || f.parse::<u32>().ok() == Some(self.criterion)
    }
}

pub const CHECKS: &[CheckSpec] = &[
    CheckSpec { criterion: 1, id: "omega_identity", family: "omega", title: "monomial norms against the multinomial identity", run: check_omega },
    CheckSpec { criterion: 2, id: "norm_chain", family: "norms", title: "sup ≤ H²_d norm and the sphere-integral relation", run: check_norm_chain },
    CheckSpec { criterion: 3, id: "phi_c_asymptotics", family: "phi_c", title: "log φ̂_c(n)/√n at c = 1", run: check_phi_c },
    CheckSpec { criterion: 4, id: "von_neumann_bound", family: "von_neumann", title: "grid max of |(1−z)/(1−rz)| equals 2/(1+r)", run: check_vn },
    CheckSpec { criterion: 5, id: "seminorm_domination", family: "seminorm", title: "Smirnov seminorm ≤ H²_d norm", run: check_domination },
    CheckSpec { criterion: 6, id: "growth_bound", family: "growth", title: "|f(w)| ≤ exp(2⟦f⟧/(1−|w|)) − 1", run: check_growth },
    CheckSpec { criterion: 7, id: "telescoping_range", family: "range", title: "finite-section solves for m = 1 − z", run: check_range },
    CheckSpec { criterion: 8, id: "decay_dichotomy", family: "decay", title: "√n-exponential law accepted, polynomial law rejected", run: check_decay },
    CheckSpec { criterion: 9, id: "pairing_bound", family: "pairing", title: "pairing bound and absolute convergence", run: check_pairing },
    CheckSpec { criterion: 10, id: "embedding_isometry", family: "embedding", title: "f ↦ f∘τ is an isometry from K_d", run: check_embedding },
    CheckSpec { criterion: 11, id: "frechet_structure", family: "frechet", title: "seminorm monotonicity and metric axioms", run: check_frechet },
    CheckSpec { criterion: 12, id: "disk_equivalence", family: "disk", title: "three Smirnov-class descriptions agree on rational functions", run: check_disk },
    CheckSpec { criterion: 13, id: "counterexample_trend", family: "counterexample", title: "K_2 growth and boundedness of B·(1 − z)", run: check_counterexample },
];

/// The checks selected by a filter list (all of them when it is empty).
pub fn selected_checks(filter: &[String]) -> Vec<&'static CheckSpec> {
    CHECKS
        .iter()
        .filter(|c| filter.is_empty() || filter.iter().any(|f| c.matches(f)))
        .collect()
}

fn check_seed(base: u64, criterion: u32) -> u64 {
    base ^ (criterion as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

/// Runs the selected checks in parallel. Failures and errors are recorded
/// per check; only an invalid configuration is an `Err`.
pub fn run_suite(cfg: &RunConfig) -> Result<SuiteReport> {
    cfg.validate()?;
    let selected = selected_checks(&cfg.filter);
    let checks = par::map_slice(&selected, |spec| run_one(cfg, spec));
    let passed = checks.iter().filter(|c| c.passed).count();
    let report = SuiteReport {
        seed: cfg.seed,
        tolerance_scale: cfg.tolerance_scale,
        filter: cfg.filter.clone(),
        failed: checks.len() - passed,
        all_passed: passed == checks.len(),
        passed,
        checks,
    };
    if let Some(path) = &cfg.output.report {
        report.write_file(path)?;
    }
    Ok(report)
}

/// Runs a single check by criterion number.
pub fn run_check(cfg: &RunConfig, criterion: u32) -> Result<CheckResult> {
    cfg.validate()?;
    let spec = CHECKS
        .iter()
        .find(|c| c.criterion == criterion)
        .ok_or_else(|| Error::param(format!("no check for criterion {criterion}")))?;
    Ok(run_one(cfg, spec))
}

fn run_one(cfg: &RunConfig, spec: &CheckSpec) -> CheckResult {
    let ctx = Ctx {
        cfg,
        seed: check_seed(cfg.seed, spec.criterion),
    };
    let mut ch = Checker::new(cfg.tolerance_scale);
    let error = (spec.run)(&ctx, &mut ch).err().map(|e| e.to_string());
    let passed = error.is_none() && !ch.assertions.is_empty() && ch.assertions.iter().all(|a| a.passed);
    CheckResult {
        criterion: spec.criterion,
        id: spec.id.to_string(),
        family: spec.family.to_string(),
        title: spec.title.to_string(),
        passed,
        assertions: ch.assertions,
        observations: ch.observations,
        error,
    }
}

fn unit_disk_sample(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) * std::f64::consts::FRAC_1_SQRT_2
}

fn random_poly(d: usize, n: usize, rng: &mut ChaCha8Rng) -> Result<TruncatedSeries> {
    let layers = (0..=n)
        .map(|k| (0..layer_size(d, k)).map(|_| unit_disk_sample(rng)).collect())
        .collect();
    TruncatedSeries::from_layers(d, layers)
}

fn random_homogeneous(d: usize, n: usize, rng: &mut ChaCha8Rng) -> Result<TruncatedSeries> {
    let layers = (0..=n)
        .map(|k| {
            (0..layer_size(d, k))
                .map(|_| if k == n { unit_disk_sample(rng) } else { Complex64::new(0.0, 0.0) })
                .collect()
        })
        .collect();
    TruncatedSeries::from_layers(d, layers)
}

/// `n!/α!` in exact integer arithmetic.
fn multinomial(alpha: &[u32]) -> u128 {
    let mut acc = 1u128;
    let mut total = 0usize;
    for &a in alpha {
        total += a as usize;
        acc *= binomial(total, a as usize);
    }
    acc
}

fn check_omega(ctx: &Ctx, ch: &mut Checker) -> Result<()> {
    const TOL: f64 = 1e-10;
    let mut worst_sum = 0.0f64;
    let mut worst_lift = 0.0f64;
    let mut worst_literal = 0.0f64;
    let mut cases = 0;
    for d in 1..=4 {
        let dirs = sphere::random_directions(d, 100, check_seed(ctx.seed, d as u32));
        let rows = par::map_slice(&dirs, |zeta| -> Result<(f64, f64, f64)> {
            let (mut ws, mut wl, mut wlit) = (0.0f64, 0.0f64, 0.0f64);
            for n in 0..=12 {
                // ‖⟨z, ζ⟩^n‖² = Σ |(n!/α!) ζ^α|² ω_α²
                let (mut s, mut literal) = (0.0, 0.0);
                visit_layer(d, n, |a| {
                    let mut p = 1.0;
                    for (k, &e) in a.iter().enumerate() {
                        p *= zeta[k].norm_sqr().powi(e as i32);
                    }
                    let m = multinomial(a) as f64;
                    let w2 = MultiIndex::new(a.to_vec()).expect("nonempty").omega().powi(2);
                    s += m * m * p * w2;
                    literal += m * p * w2;
                });
                ws = ws.max((s - 1.0).abs());
                wlit = wlit.max((literal - 1.0).abs());
                let mut pw = vec![Complex64::new(0.0, 0.0); n + 1];
                pw[n] = Complex64::new(1.0, 0.0);
                let lifted = TruncatedSeries::univariate(pw).lift(zeta, d)?;
                wl = wl.max((h2d_norm(&lifted) - 1.0).abs());
            }
            Ok((ws, wl, wlit))
        });
        for r in rows {
            let (a, b, c) = r?;
            worst_sum = worst_sum.max(a);
            worst_lift = worst_lift.max(b);
            worst_literal = worst_literal.max(c);
            cases += 13;
        }
    }
    ch.max_deviation("multinomial_weighted_sum", worst_sum, TOL, cases);
    ch.max_deviation("lifted_power_norm", worst_lift, TOL, cases);
    // the single-factor sum equals Σ|ζ^α|², which is 1 only for n ≤ 1 or d = 1
    ch.observe("single_factor_sum_max_deviation", worst_literal);
    Ok(())
}

fn check_norm_chain(ctx: &Ctx, ch: &mut Checker) -> Result<()> {
    const SUP_TOL: f64 = 1e-9;
    const MAX_Z: f64 = 3.0;
    const SAMPLES: usize = 100_000;
    let mut rng = ctx.rng(1);
    let inputs: Vec<(TruncatedSeries, u64)> = (0..50)
        .map(|i| {
            let d = 2 + i % 2;
            let n = 1 + (i / 2) % 10;
            random_homogeneous(d, n, &mut rng).map(|h| (h, rng.random()))
        })
        .collect::<Result<_>>()?;
    let rows = par::map_slice(&inputs, |(h, seed)| -> Result<(f64, f64, f64)> {
        let chain = norm_chain(h, &ctx.cfg.quadrature)?;
        let mc = hardy_sphere_relation_check(h, SAMPLES, *seed)?;
        Ok((chain.sup_est - chain.h2d, mc.z_score, mc.relative_discrepancy))
    });
    let (mut gap, mut z, mut rel) = (f64::NEG_INFINITY, 0.0f64, 0.0f64);
    for r in rows {
        let (g, zz, rr) = r?;
        gap = gap.max(g);
        z = z.max(zz);
        rel = rel.max(rr);
    }
    ch.at_most("sup_minus_h2d", gap, 0.0, SUP_TOL, inputs.len());
    ch.at_most("sphere_relation_z_score", z, 0.0, MAX_Z, inputs.len());
    ch.observe("sphere_relation_max_relative_discrepancy", rel);
    Ok(())
}

fn check_phi_c(_ctx: &Ctx, ch: &mut Checker) -> Result<()> {
    const BAND: f64 = 0.05;
    let f = phi_c(1.0, 2000)?;
    let coeffs = f.univariate_coeffs();
    let ratio = |n: usize| coeffs[n].re.ln() / (n as f64).sqrt();
    let (a, b, c) = (ratio(500), ratio(1000), ratio(2000));
    ch.observe("ratio_500", a);
    ch.observe("ratio_1000", b);
    ch.observe("ratio_2000", c);
    ch.close("ratio_2000_in_band", c, 1.0, BAND, 1);
    ch.at_least("approach_500_to_1000", (a - 1.0).abs() - (b - 1.0).abs(), 0.0, 1);
    ch.at_least("approach_1000_to_2000", (b - 1.0).abs() - (c - 1.0).abs(), 0.0, 1);
    Ok(())
}

fn check_vn(_ctx: &Ctx, ch: &mut Checker) -> Result<()> {
    const TOL: f64 = 1e-12;
    for r in [0.1, 0.5, 0.9] {
        ch.close(&format!("grid_max_r{r}"), vn_bound(r)?, 2.0 / (1.0 + r), TOL, 1);
    }
    Ok(())
}

fn check_domination(ctx: &Ctx, ch: &mut Checker) -> Result<()> {
    const TOL: f64 = 1e-6;
    let mut rng = ctx.rng(1);
    let inputs: Vec<TruncatedSeries> = (0..100)
        .map(|i| {
            let n = rng.random_range(1..=6);
            random_poly(1 + i % 3, n, &mut rng)
        })
        .collect::<Result<_>>()?;
    let gaps = par::map_slice(&inputs, |f| -> Result<f64> {
        Ok(smirnov_seminorm(f, &ctx.cfg.quadrature)?.value - h2d_norm(f))
    });
    let mut worst = f64::NEG_INFINITY;
    for g in gaps {
        worst = worst.max(g?);
    }
    ch.at_most("seminorm_minus_h2d", worst, 0.0, TOL, inputs.len());
    Ok(())
}

fn check_growth(ctx: &Ctx, ch: &mut Checker) -> Result<()> {
    const SAFETY: f64 = 1.05;
    let mut rng = ctx.rng(1);
    let inputs: Vec<(TruncatedSeries, Vec<Vec<Complex64>>)> = (0..20)
        .map(|i| {
            let d = 1 + i % 3;
            let n = rng.random_range(1..=6);
            let f = random_poly(d, n, &mut rng)?;
            let pts = (0..100).map(|_| sphere::random_ball_point(d, 1.0, &mut rng)).collect();
            Ok((f, pts))
        })
        .collect::<Result<_>>()?;
    let rows = par::map_slice(&inputs, |(f, pts)| -> Result<(usize, f64)> {
        let s = smirnov_seminorm(f, &ctx.cfg.quadrature)?.value * SAFETY;
        let rep = growth_bound_check(f, pts, s)?;
        Ok((rep.violations, rep.min_margin))
    });
    let (mut violations, mut margin) = (0usize, f64::INFINITY);
    for r in rows {
        let (v, m) = r?;
        violations += v;
        margin = margin.min(m);
    }
    ch.at_most("violations", violations as f64, 0.0, 0.0, 20 * 100);
    ch.observe("min_margin", margin);
    Ok(())
}

fn check_range(_ctx: &Ctx, ch: &mut Checker) -> Result<()> {
    const RESIDUAL_TOL: f64 = 1e-10;
    const NORM_TOL: f64 = 1e-6;
    const GROWTH: f64 = 1.5;
    let m = TruncatedSeries::univariate_real(&[1.0, -1.0]);
    let degrees = [8, 16, 32];
    let geometric: Vec<f64> = (0..=32).map(|k| 0.5f64.powi(k)).collect();
    let h = TruncatedSeries::univariate_real(&geometric);
    let rep = range_membership_probe(&m, &h, &degrees)?;
    for row in &rep.rows {
        let n = row.degree;
        // g_k = Σ_{j=k}^{N} ĥ(j)
        let mut tail = 0.0;
        let mut sq = 0.0;
        for k in (0..=n).rev() {
            tail += geometric[k];
            sq += tail * tail;
        }
        ch.at_most(&format!("residual_n{n}"), row.residual, 0.0, RESIDUAL_TOL, 1);
        ch.close(&format!("tail_sum_norm_n{n}"), row.solution_norm, sq.sqrt(), NORM_TOL, 1);
    }
    let harmonic: Vec<f64> = (0..=64).map(|k| 1.0 / (k as f64 + 1.0)).collect();
    let h = TruncatedSeries::univariate_real(&harmonic);
    let rep = range_membership_probe(&m, &h, &[16, 64])?;
    let ratio = rep.rows[1].solution_norm / rep.rows[0].solution_norm;
    ch.at_least("harmonic_growth_16_to_64", ratio, GROWTH, 1);
    ch.observe("harmonic_growth_exponent", rep.growth_exponent);
    Ok(())
}

fn law(n_max: usize, f: impl Fn(f64) -> f64) -> TruncatedSeries {
    TruncatedSeries::univariate_real(&(0..=n_max).map(|n| f(n as f64)).collect::<Vec<_>>())
}

fn check_decay(ctx: &Ctx, ch: &mut Checker) -> Result<()> {
    const C_TOL: f64 = 0.05;
    const POLY_C_MAX: f64 = 0.05;
    let quad = &ctx.cfg.quadrature;
    let h = law(400, |n| (-0.5 * n.sqrt()).exp());
    let rep = decay_fit(&h, &[DecayForm::Coefficient], &ctx.cfg.decay, quad)?;
    ch.close("exponential_law_c", rep.fitted_c, 0.5, C_TOL, 1);
    ch.flag("exponential_law_accepted", rep.verdict == Verdict::Accept);

    let window = DecayConfig {
        min_degree: 64,
        max_degree: Some(400),
        ..ctx.cfg.decay.clone()
    };
    let h = law(400, |n| (n + 1.0).powi(-2));
    let rep = decay_fit(&h, &[DecayForm::Coefficient], &window, quad)?;
    ch.at_most("polynomial_law_c", rep.fitted_c, POLY_C_MAX, 0.0, 1);
    ch.flag("polynomial_law_rejected", rep.verdict == Verdict::Reject);
    ch.observe("polynomial_law_plain_c", rep.fits[0].plain_c);
    Ok(())
}

fn check_pairing(ctx: &Ctx, ch: &mut Checker) -> Result<()> {
    const INCREMENT_TOL: f64 = 1e-8;
    const LAST: usize = 10;
    let (d, n_max, c0) = (2, 400, 1.2);
    let mut rng = ctx.rng(1);
    // h_n = e^{−c₀√n} u_n/‖u_n‖ with random u_n
    let u = random_poly(d, n_max, &mut rng)?;
    let layers = u
        .layers()
        .iter()
        .zip(layer_h2d_norms(&u))
        .enumerate()
        .map(|(n, (layer, norm))| {
            let s = (-c0 * (n as f64).sqrt()).exp() / norm;
            layer.iter().map(|c| c * s).collect()
        })
        .collect();
    let h = TruncatedSeries::from_layers(d, layers)?;
    let probe = decay_fit(&h, &[DecayForm::H2dNorm], &ctx.cfg.decay, &ctx.cfg.quadrature)?;
    ch.flag("h_accepted", probe.verdict == Verdict::Accept);
    ch.observe("fitted_c", probe.fitted_c);
    ch.observe("fitted_m", probe.envelope_m);
    let inputs: Vec<TruncatedSeries> = (0..50).map(|_| random_poly(d, n_max, &mut rng)).collect::<Result<_>>()?;
    let rows = par::map_slice(&inputs, |f| -> Result<(f64, f64, usize, f64)> {
        let r = pairing(f, &h, n_max, &ctx.cfg.decay)?;
        let bound = r.absolute_bound.unwrap_or(f64::NAN);
        let sums = &r.abs_partial_sums;
        let nonmonotone = sums.windows(2).filter(|w| w[1] < w[0]).count();
        let top = sums.len() - 1;
        let increment = (top + 1 - LAST..=top)
            .map(|n| (sums[n] - sums[n - 1]) / sums[n])
            .fold(0.0, f64::max);
        Ok((r.value().norm() - bound, sums[top] - bound, nonmonotone, increment))
    });
    let (mut value_gap, mut abs_gap, mut nonmono, mut inc) = (f64::NEG_INFINITY, f64::NEG_INFINITY, 0usize, 0.0f64);
    let mut violations = 0usize;
    for r in rows {
        let (a, b, c, i) = r?;
        if !(a <= 0.0 && b <= 0.0) {
            violations += 1;
        }
        value_gap = value_gap.max(a);
        abs_gap = abs_gap.max(b);
        nonmono += c;
        inc = inc.max(i);
    }
    ch.at_most("bound_violations", violations as f64, 0.0, 0.0, inputs.len());
    ch.observe("max_value_minus_bound", value_gap);
    ch.observe("max_abs_sum_minus_bound", abs_gap);
    ch.at_most("nonmonotone_steps", nonmono as f64, 0.0, 0.0, inputs.len());
    ch.at_most("last_relative_increment", inc, 0.0, INCREMENT_TOL, inputs.len());
    Ok(())
}

fn check_embedding(ctx: &Ctx, ch: &mut Checker) -> Result<()> {
    const ISOMETRY_TOL: f64 = 1e-12;
    const EXPONENT_TOL: f64 = 0.05;
    const N: usize = 40;
    let mut rng = ctx.rng(1);
    let mut worst = 0.0f64;
    let mut worst_rel = 0.0f64;
    let weights: Vec<_> = (2..=4).map(|d| kd_weights(d, N)).collect::<Result<_>>()?;
    // sequential: the d = 4 compositions hold about 29M coefficients each
    for i in 0..50 {
        let d = 2 + i % 3;
        let f = random_poly(1, N, &mut rng)?;
        let lhs = h2d_norm(&tau_compose(&f, d, d * N)?);
        let rhs = kd_norm(&f, &weights[d - 2])?;
        worst = worst.max((lhs - rhs).abs());
        worst_rel = worst_rel.max((lhs - rhs).abs() / rhs);
    }
    ch.max_deviation("isometry_defect", worst, ISOMETRY_TOL, 50);
    ch.observe("isometry_relative_defect", worst_rel);

    let w2 = kd_weights(2, 20)?;
    let mut mismatches = 0usize;
    for n in 0..=20 {
        // a_n 4^n is exact in binary floating point when a_n is
        let scaled = w2.a[n] * 4f64.powi(n as i32);
        if scaled.fract() != 0.0 || scaled as u128 != binomial(2 * n, n) {
            mismatches += 1;
        }
    }
    ch.at_most("d2_weight_mismatches", mismatches as f64, 0.0, 0.0, 21);

    for d in 2..=4 {
        let slope = kd_weights(d, 500)?.fitted_exponent(50, 500)?;
        ch.close(&format!("weight_exponent_d{d}"), slope, -((d - 1) as f64) / 2.0, EXPONENT_TOL, 1);
    }
    Ok(())
}

fn check_frechet(ctx: &Ctx, ch: &mut Checker) -> Result<()> {
    const TRIANGLE_TOL: f64 = 1e-12;
    const TERMS: usize = 30;
    let mut rng = ctx.rng(1);
    let mut increases = 0usize;
    for _ in 0..200 {
        let f = random_poly(2, 12, &mut rng)?;
        let c1 = rng.random_range(0.01..5.0);
        let c2 = c1 + rng.random_range(0.0..5.0);
        if frechet_seminorm(&f, c2)? > frechet_seminorm(&f, c1)? {
            increases += 1;
        }
    }
    ch.at_most("seminorm_increases_in_c", increases as f64, 0.0, 0.0, 200);

    let triples: Vec<[TruncatedSeries; 3]> = (0..1000)
        .map(|_| Ok([random_poly(1, 10, &mut rng)?, random_poly(1, 10, &mut rng)?, random_poly(1, 10, &mut rng)?]))
        .collect::<Result<_>>()?;
    let excess = par::map_slice(&triples, |[f, g, h]| -> Result<f64> {
        let fg = frechet_metric(f, g, TERMS)?.value;
        let gh = frechet_metric(g, h, TERMS)?.value;
        let fh = frechet_metric(f, h, TERMS)?.value;
        Ok(fh - fg - gh)
    });
    let mut worst = f64::NEG_INFINITY;
    for e in excess {
        worst = worst.max(e?);
    }
    ch.at_most("triangle_excess", worst, 0.0, TRIANGLE_TOL, triples.len());

    // dyadic coefficients keep f + h and g + h exact
    let dyadic = |rng: &mut ChaCha8Rng| -> Result<TruncatedSeries> {
        let v: Vec<Complex64> = (0..=10)
            .map(|_| Complex64::new(rng.random_range(-64..=64) as f64 / 64.0, rng.random_range(-64..=64) as f64 / 64.0))
            .collect();
        Ok(TruncatedSeries::univariate(v))
    };
    let mut differ = 0usize;
    for _ in 0..200 {
        let (f, g, h) = (dyadic(&mut rng)?, dyadic(&mut rng)?, dyadic(&mut rng)?);
        let a = frechet_metric(&f, &g, TERMS)?.value;
        let b = frechet_metric(&f.add(&h)?, &g.add(&h)?, TERMS)?.value;
        if a.to_bits() != b.to_bits() {
            differ += 1;
        }
    }
    ch.at_most("translation_mismatches", differ as f64, 0.0, 0.0, 200);
    Ok(())
}

/// `b + Σ_j a_j / (1 − z/p_j)` with `2 ≤ |p_j| ≤ 4`.
struct Rational {
    b: Complex64,
    terms: Vec<(Complex64, Complex64)>,
}

impl Rational {
    fn eval(&self, z: Complex64) -> Complex64 {
        self.terms.iter().fold(self.b, |acc, (a, p)| acc + a / (1.0 - z / p))
    }
}

fn check_disk(ctx: &Ctx, ch: &mut Checker) -> Result<()> {
    const TOL: f64 = 1e-3;
    const RADIUS: f64 = 0.999;
    let quad = QuadratureConfig {
        angular_grid: 1 << 12,
        radius_schedule: vec![0.9, 0.99, RADIUS],
        ..ctx.cfg.quadrature.clone()
    };
    let mut rng = ctx.rng(1);
    let funcs: Vec<Rational> = (0..10)
        .map(|i| {
            let poles = 1 + i % 3;
            let terms = (0..poles)
                .map(|_| {
                    let p = Complex64::from_polar(rng.random_range(2.0..4.0), rng.random_range(0.0..std::f64::consts::TAU));
                    let a = unit_disk_sample(&mut rng) * (0.6 / poles as f64);
                    (a, p)
                })
                .collect();
            Rational {
                b: unit_disk_sample(&mut rng),
                terms,
            }
        })
        .collect();
    let mut worst = [0.0f64; 3];
    for f in &funcs {
        let rep = disk_smirnov_equivalence_check_fn(|z| f.eval(z), &quad)?;
        let row = rep
            .rows
            .iter()
            .find(|r| r.radius == RADIUS)
            .ok_or_else(|| Error::param("radius 0.999 missing from the schedule"))?;
        worst[0] = worst[0].max(row.log_plus_gap);
        worst[1] = worst[1].max(row.log1p_distance);
        worst[2] = worst[2].max(row.seminorm_distance);
    }
    ch.at_most("log_plus_gap", worst[0], 0.0, TOL, funcs.len());
    ch.at_most("log1p_distance", worst[1], 0.0, TOL, funcs.len());
    ch.at_most("seminorm_distance", worst[2], 0.0, TOL, funcs.len());
    Ok(())
}

fn check_counterexample(_ctx: &Ctx, ch: &mut Checker) -> Result<()> {
    const GROWTH: f64 = 10.0;
    const SUP_MAX: f64 = 2.0;
    let bundle = counterexample_build(&ZeroSchedule::InverseSquare { count: 100 }, 400)?;
    let ratio = bundle.growth_ratio(50, 400).unwrap_or(f64::NAN);
    ch.at_least("kd2_growth_50_to_400", ratio, GROWTH, 1);
    ch.at_most("sup_disk_samples", bundle.sup_disk_max, SUP_MAX, 0.0, bundle.sphere_samples);
    ch.at_most("sup_sphere_samples", bundle.sup_sphere_max, SUP_MAX, 0.0, bundle.sphere_samples);
    ch.observe("kd2_norm_50", bundle.kd_partial_norms[50]);
    ch.observe("kd2_norm_400", bundle.kd_partial_norms[400]);
    ch.observe("sup_sphere_samples_truncated", bundle.sup_sphere_max_truncated);
    ch.observe("blaschke_sum", bundle.blaschke_sum);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn filter_selects_family() {
        let sel = selected_checks(&["decay".to_string()]);
        assert_eq!(sel.len(), 1);
        assert_eq!(sel[0].criterion, 8);
        assert_eq!(selected_checks(&[]).len(), 13);
        assert_eq!(selected_checks(&["4".to_string(), "omega".to_string()]).len(), 2);
    }

    #[test]
    fn config_parsing() {
        let cfg = RunConfig::from_json(r#"{"seed": 3, "filter": ["von_neumann"]}"#).unwrap();
        assert_eq!(cfg.seed, 3);
        assert_eq!(cfg.quadrature, QuadratureConfig::default());
        assert!(matches!(RunConfig::from_json(r#"{"sede": 3}"#), Err(Error::Schema(_))));
        assert!(RunConfig::from_json(r#"{"filter": ["nope"]}"#).is_err());
        assert!(RunConfig::from_json(r#"{"tolerance_scale": -1}"#).is_err());
    }

    #[test]
    fn zero_tolerance_fails() {
        let cfg = RunConfig {
            tolerance_scale: 0.0,
            filter: vec!["omega".into()],
            ..Default::default()
        };
        let rep = run_suite(&cfg).unwrap();
        assert_eq!(rep.checks.len(), 1);
        assert!(!rep.all_passed);
        assert_eq!(rep.failed, 1);
    }

    #[test]
    fn checker_margins() {
        let mut ch = Checker::new(1.0);
        ch.at_most("a", 1.0, 2.0, 0.5, 1);
        ch.at_least("b", 1.0, 2.0, 1);
        ch.close("c", f64::NAN, 0.0, 1.0, 1);
        assert_eq!(ch.assertions[0].margin, 1.5);
        assert!(ch.assertions[0].passed);
        assert!(!ch.assertions[1].passed);
        assert!(!ch.assertions[2].passed);
    }
}
