//! `smirnov`: command-line front end for the smirnov-core numerics.
//!
//! Results go to standard output as JSON, or to `--out`. Exit status is 0 on
//! success, 1 when a suite check fails, 2 on usage, schema or parameter
//! errors. Errors are printed to standard error as
//! `{"error": {"code": .., "message": ..}}`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use smirnov_core::dafunc::{h2d_norm, layer_h2d_norms, range_membership_probe, sup_norm_sphere, toeplitz_section};
use smirnov_core::disk_tools::{outer_from_modulus, phi_c, psi_n_truncation, BoundaryModulus};
use smirnov_core::duality::{decay_fit, frechet_metric, frechet_seminorm, pairing, DecayForm};
use smirnov_core::embeddings::{counterexample_build, extend_dimension, tau_compose, ZeroSchedule};
use smirnov_core::metrics::{rho, smirnov_seminorm};
use smirnov_core::suite::{run_suite, RunConfig};
use smirnov_core::{Complex64, Error, TruncatedSeries};

/// Environment variable holding the default run-config path.
const CONFIG_ENV: &str = "SMIRNOV_CONFIG";

#[derive(Parser)]
#[command(name = "smirnov", version, about = "Drury-Arveson and uniform Smirnov class numerics")]
struct Cli {
    /// Run configuration (JSON); quadrature, decay thresholds and seed.
    #[arg(long, global = true, env = CONFIG_ENV)]
    config: Option<PathBuf>,
    /// Write the JSON result here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// H²_d norm, per-degree norms and a sampled sphere sup of a series.
    Norms {
        #[arg(long)]
        f: PathBuf,
    },
    /// Fits |ĥ(α)|ω_α ≤ M e^{-c√|α|} and reports the verdict.
    Decay {
        #[arg(long)]
        h: PathBuf,
        /// Comma-separated forms: coeff, sup, h2.
        #[arg(long, default_value = "coeff,sup,h2", value_delimiter = ',')]
        forms: Vec<String>,
        #[arg(long)]
        min_degree: Option<usize>,
        #[arg(long)]
        max_degree: Option<usize>,
        /// Per-degree levels as CSV (degree, one column per form).
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Smirnov seminorm of f, or the metric ρ(f, g) when --g is given.
    Metric {
        #[arg(long)]
        f: PathBuf,
        #[arg(long)]
        g: Option<PathBuf>,
        /// Also report the Fréchet seminorm ‖f‖_c (or distance with --g).
        #[arg(long)]
        frechet_c: Option<f64>,
    },
    /// Taylor coefficients of exp((c/8)(1+z)/(1−z)) − 1 as a series file.
    PhiC {
        #[arg(long, allow_negative_numbers = true)]
        c: f64,
        #[arg(long)]
        degree: usize,
    },
    /// Outer function with a sampled boundary modulus, as a series file.
    Outer {
        /// Boundary modulus file (JSON).
        #[arg(long)]
        modulus: PathBuf,
        #[arg(long)]
        degree: usize,
        /// Build ψ_n with |ψ_n| = min(n, 1/W) instead.
        #[arg(long)]
        psi_n: Option<usize>,
    },
    /// Solves the finite sections T_m*^{(N)} g = h^{(N)} and tracks ‖g_N‖.
    RangeProbe {
        #[arg(long)]
        m: PathBuf,
        #[arg(long)]
        h: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        degrees: Vec<usize>,
        /// Rows as CSV: degree, residual, solution_norm.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Entries of the largest finite section as CSV.
        #[arg(long)]
        section_csv: Option<PathBuf>,
    },
    /// Builds f = B·(1 − z) and F = f∘τ and reports the K_2 trend.
    Counterexample {
        /// Zeros 1 − j^{-2}, j = 1..=count.
        #[arg(long, conflicts_with = "schedule")]
        zeros: Option<usize>,
        /// Zero schedule file (JSON).
        #[arg(long)]
        schedule: Option<PathBuf>,
        #[arg(long, default_value_t = 400)]
        degree: usize,
        /// Partial K_2 norms as CSV: degree, kd_norm.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Write F (extended to --dim variables) as a series file.
        #[arg(long)]
        series_out: Option<PathBuf>,
        #[arg(long, default_value_t = 2)]
        dim: usize,
    },
    /// The pairing Σ_n ⟨f_n, h_n⟩ with its convergence bound.
    Pair {
        #[arg(long)]
        f: PathBuf,
        #[arg(long)]
        h: PathBuf,
        /// Last degree summed (default: the smaller truncation degree).
        #[arg(long)]
        degree: Option<usize>,
        /// Absolute partial sums as CSV: degree, abs_partial_sum.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Runs the verification battery.
    Suite {
        /// Family name, check id or criterion number; repeatable.
        #[arg(long, value_delimiter = ',')]
        filter: Vec<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        tolerance_scale: Option<f64>,
    },
}

enum Failure {
    Checks,
    Error(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Error(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Error(e.into())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Error(e.into())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Checks) => ExitCode::from(1),
        Err(Failure::Error(e)) => {
            let msg = json!({"error": {"code": e.code(), "message": e.to_string()}});
            eprintln!("{msg}");
            ExitCode::from(2)
        }
    }
}

fn read_text(path: &Path) -> Result<String, Error> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn load_config(path: Option<&Path>) -> Result<RunConfig, Error> {
    match path {
        Some(p) => RunConfig::from_json(&read_text(p)?),
        None => Ok(RunConfig::default()),
    }
}

fn read_series(path: &Path) -> Result<TruncatedSeries, Error> {
    let text = read_text(path)?;
    TruncatedSeries::from_json(&text).map_err(|e| match e {
        Error::Schema(m) => Error::Schema(format!("{}: {m}", path.display())),
        other => other,
    })
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Error> {
    match out {
        Some(p) => std::fs::write(p, format!("{text}\n"))?,
        None => println!("{text}"),
    }
    Ok(())
}

fn emit_json(out: Option<&Path>, value: &Value) -> Result<(), Error> {
    emit(out, &serde_json::to_string_pretty(value)?)
}

fn csv_writer(path: &Path) -> Result<BufWriter<File>, Error> {
    Ok(BufWriter::new(File::create(path)?))
}

fn run(cli: Cli) -> Result<(), Failure> {
    let cfg = load_config(cli.config.as_deref())?;
    let out = cli.out.as_deref();
    let quad = &cfg.quadrature;
    match cli.command {
        Command::Norms { f } => {
            let f = read_series(&f)?;
            let sup = sup_norm_sphere(&f, quad)?;
            emit_json(
                out,
                &json!({
                    "d": f.dim(),
                    "N": f.degree(),
                    "h2d": h2d_norm(&f),
                    "sup_est": sup.value,
                    "sup_is_lower_bound": sup.is_lower_bound,
                    "sup_direction": sup.direction,
                    "layer_h2d": layer_h2d_norms(&f),
                }),
            )?;
        }
        Command::Decay {
            h,
            forms,
            min_degree,
            max_degree,
            csv,
        } => {
            let h = read_series(&h)?;
            let forms = forms.iter().map(|s| DecayForm::parse(s)).collect::<Result<Vec<_>, _>>()?;
            let mut dcfg = cfg.decay.clone();
            if let Some(m) = min_degree {
                dcfg.min_degree = m;
            }
            if max_degree.is_some() {
                dcfg.max_degree = max_degree;
            }
            let rep = decay_fit(&h, &forms, &dcfg, quad)?;
            if let Some(path) = csv {
                let mut w = csv_writer(&path)?;
                let header = rep
                    .fits
                    .iter()
                    .map(|f| serde_json::to_value(f.form).map(|v| v.as_str().unwrap_or_default().to_string()))
                    .collect::<Result<Vec<_>, _>>()?;
                writeln!(w, "degree,{}", header.join(","))?;
                for n in 0..=h.degree() {
                    let row: Vec<String> = rep.fits.iter().map(|f| format!("{:e}", f.levels[n])).collect();
                    writeln!(w, "{n},{}", row.join(","))?;
                }
                w.flush()?;
            }
            emit_json(out, &serde_json::to_value(&rep)?)?;
        }
        Command::Metric { f, g, frechet_c } => {
            let f = read_series(&f)?;
            let mut value = match &g {
                Some(gp) => {
                    let g = read_series(gp)?;
                    let mut v = json!({"rho": rho(&f, &g, quad)?, "is_lower_bound": true});
                    if let Some(c) = frechet_c {
                        v["frechet_c"] = json!(c);
                        v["frechet_seminorm_of_difference"] = json!(frechet_seminorm(&f.sub(&g)?, c)?);
                        v["frechet_distance"] = serde_json::to_value(frechet_metric(&f, &g, 50)?)?;
                    }
                    v
                }
                None => serde_json::to_value(smirnov_seminorm(&f, quad)?)?,
            };
            if let (Some(c), None) = (frechet_c, &g) {
                value["frechet_c"] = json!(c);
                value["frechet_seminorm"] = json!(frechet_seminorm(&f, c)?);
            }
            emit_json(out, &value)?;
        }
        Command::PhiC { c, degree } => {
            emit(out, &phi_c(c, degree)?.to_json())?;
        }
        Command::Outer { modulus, degree, psi_n } => {
            let w = BoundaryModulus::from_json(&read_text(&modulus)?).map_err(|e| match e {
                Error::Schema(m) => Error::Schema(format!("{}: {m}", modulus.display())),
                other => other,
            })?;
            let series = match psi_n {
                Some(n) => psi_n_truncation(&w, n, degree)?,
                None => outer_from_modulus(&w, degree)?,
            };
            emit(out, &series.to_json())?;
        }
        Command::RangeProbe {
            m,
            h,
            degrees,
            csv,
            section_csv,
        } => {
            let m = read_series(&m)?;
            let h = read_series(&h)?;
            let rep = range_membership_probe(&m, &h, &degrees)?;
            if let Some(path) = csv {
                let mut w = csv_writer(&path)?;
                writeln!(w, "degree,residual,solution_norm")?;
                for r in &rep.rows {
                    writeln!(w, "{},{:e},{:e}", r.degree, r.residual, r.solution_norm)?;
                }
                w.flush()?;
            }
            if let Some(path) = section_csv {
                let top = degrees.iter().copied().max().unwrap_or(0);
                let mut w = csv_writer(&path)?;
                toeplitz_section(&m.pad_to(top.max(m.degree())), top)?.write_csv(&mut w)?;
                w.flush()?;
            }
            emit_json(out, &serde_json::to_value(&rep)?)?;
        }
        Command::Counterexample {
            zeros,
            schedule,
            degree,
            csv,
            series_out,
            dim,
        } => {
            let schedule = match (zeros, schedule) {
                (_, Some(p)) => serde_json::from_str::<ZeroSchedule>(&read_text(&p)?)
                    .map_err(|e| Error::Schema(format!("{}: {e}", p.display())))?,
                (count, None) => ZeroSchedule::InverseSquare {
                    count: count.unwrap_or(100),
                },
            };
            let bundle = counterexample_build(&schedule, degree)?;
            if let Some(path) = csv {
                let mut w = csv_writer(&path)?;
                bundle.write_csv(&mut w)?;
                w.flush()?;
            }
            if let Some(path) = series_out {
                let f = rebuild_f(&schedule, degree)?;
                let big = extend_dimension(&tau_compose(&f, 2, 2 * degree)?, dim)?;
                big.write_file(path)?;
            }
            let mut value = serde_json::to_value(&bundle)?;
            value["growth_ratio_50_to_N"] = json!(bundle.growth_ratio(50, degree));
            emit_json(out, &value)?;
        }
        Command::Pair { f, h, degree, csv } => {
            let f = read_series(&f)?;
            let h = read_series(&h)?;
            let n = degree.unwrap_or(f.degree().min(h.degree()));
            let rep = pairing(&f, &h, n, &cfg.decay)?;
            if let Some(path) = csv {
                let mut w = csv_writer(&path)?;
                writeln!(w, "degree,abs_partial_sum")?;
                for (k, v) in rep.abs_partial_sums.iter().enumerate() {
                    writeln!(w, "{k},{v:e}")?;
                }
                w.flush()?;
            }
            emit_json(out, &serde_json::to_value(&rep)?)?;
        }
        Command::Suite {
            filter,
            seed,
            tolerance_scale,
        } => {
            let mut cfg = cfg;
            if !filter.is_empty() {
                cfg.filter = filter;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(t) = tolerance_scale {
                cfg.tolerance_scale = t;
            }
            if let Some(p) = out {
                cfg.output.report = Some(p.to_path_buf());
            }
            let to_stdout = cfg.output.report.is_none();
            let report = run_suite(&cfg)?;
            for line in report.summary_lines() {
                // keep stdout clean for the JSON when no report path is set
                if to_stdout {
                    eprintln!("{line}");
                } else {
                    println!("{line}");
                }
            }
            if to_stdout {
                println!("{}", report.to_json());
            }
            if !report.all_passed {
                return Err(Failure::Checks);
            }
        }
    }
    Ok(())
}

/// The one-variable factor `f = B·(1 − z)` of the counterexample.
fn rebuild_f(schedule: &ZeroSchedule, degree: usize) -> Result<TruncatedSeries, Error> {
    let b = smirnov_core::disk_tools::BlaschkeProduct::new(&schedule.zeros(), 0)?;
    let one_minus_z = TruncatedSeries::univariate(vec![Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)]).pad_to(degree);
    b.series(degree).multiply(&one_minus_z)
}
