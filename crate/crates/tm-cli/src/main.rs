//! `tm-sharp`: command-line driver for the concentration-threshold
//! numerics in `tm-core`.
//!
//! Subcommands map onto the library surface: `mu` (the sharp radial
//! Sobolev function), `soliton-verify` (closed-form integral tables vs
//! quadrature), `maximize` (one concentrating solve), `sweep` (expansion
//! coefficients over a height grid), `classify` (threshold conditions on
//! a sampling grid) and `trial` (glued trial-profile energy ratio).
//!
//! Exit codes: 0 success (and classifier Existence), 1 usage/parse error,
//! 2 solver failure, 3 identity verification failure, 4 classifier
//! NonExistence, 5 classifier Inconclusive.

// `!(x > 0.0)`-style guards deliberately reject NaN along with the
// out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod manifest;
mod output;

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use tm_core::sobolev::{mu_series_log, solve_mu};
use tm_core::soliton::{verify_identities, SolitonFrame};
use tm_core::threshold::{build_trial, classify, ratio, ClassifyParams, GridSpec, Nonlinearity, Outcome};
use tm_core::variational::{compute_sweep_fits, shoot, sweep_row, Precision, SolverConfig, SweepRow};
use tm_core::{ConstantTable, CoreError, Geometry};

use manifest::ManifestWriter;
use output::{write_text, OutputTarget};

#[derive(Parser)]
#[command(
    name = "tm-sharp",
    version,
    about = "Desk-scale numerics for sharp concentration thresholds of critical exponential inequalities"
)]
struct Cli {
    /// Worker threads for sweep rows (default: TM_SHARP_JOBS or the
    /// available parallelism).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonOut {
    /// Output file (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,

    /// Overwrite an existing output file.
    #[arg(long)]
    force: bool,
}

#[derive(Args, Clone)]
struct ConfigArg {
    /// JSON file mirroring the solver configuration.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Use the extended-precision path (quarter steps, double-double
    /// accumulation).
    #[arg(long)]
    extended: bool,

    /// Cross-check the shooting solve against the direct maximizer.
    #[arg(long)]
    crosscheck: bool,
}

impl ConfigArg {
    fn load(&self) -> Result<SolverConfig, String> {
        let mut cfg: SolverConfig = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
                serde_json::from_str(&text)
                    .map_err(|e| format!("invalid config {}: {e}", path.display()))?
            }
            None => SolverConfig::default(),
        };
        if self.extended {
            cfg.precision = Precision::Extended;
        }
        if self.crosscheck {
            cfg.crosscheck = true;
        }
        cfg.validate().map_err(|e| e.to_string())?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Solve the sharp exponential radial Sobolev function mu(j).
    Mu {
        /// A value ("40") or range ("start:step:stop") of j.
        #[arg(long, allow_hyphen_values = true)]
        j: String,

        /// Include the 5-term series value and its relative difference.
        #[arg(long)]
        series: bool,

        /// Output format (json or csv).
        #[arg(long, default_value = "json")]
        format: String,

        /// Constraint-equation residual tolerance.
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,

        #[command(flatten)]
        out: CommonOut,
    },

    /// Verify the closed-form soliton integral tables against quadrature.
    SolitonVerify {
        /// Transition time of the verification frame.
        #[arg(long = "Ta", default_value_t = 40.0)]
        ta: f64,

        /// Maximum allowed deviation.
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },

    /// Solve the concentrating maximization at one height.
    Maximize {
        #[arg(long)]
        geometry: GeometryArg,

        #[arg(long = "H")]
        h: f64,

        /// Include the solution grid in the output.
        #[arg(long)]
        full: bool,

        #[command(flatten)]
        config: ConfigArg,

        #[command(flatten)]
        out: CommonOut,
    },

    /// Sweep heights and fit the asymptotic expansion coefficients.
    Sweep {
        #[arg(long)]
        geometry: GeometryArg,

        /// Height grid "start:step:stop".
        #[arg(long = "H")]
        h_spec: String,

        /// Also write a fits file next to the table.
        #[arg(long)]
        fit: bool,

        #[command(flatten)]
        config: ConfigArg,

        #[command(flatten)]
        out: CommonOut,
    },

    /// Check a nonlinearity against the threshold conditions.
    Classify {
        #[arg(long)]
        geometry: GeometryArg,

        /// Infix expression over s (functions exp, log, pow, cutoff).
        #[arg(long)]
        expr: String,

        #[arg(long)]
        p: f64,

        #[arg(long)]
        q: f64,

        #[arg(long)]
        a: f64,

        #[arg(long, default_value_t = 0.0)]
        b: f64,

        #[arg(long = "L")]
        l: f64,

        /// The theorems' absolute constant, required for p = 3 matches.
        #[arg(long = "Cstar")]
        c_star: Option<f64>,

        /// Assert that L is "sufficiently large" for the non-existence
        /// conditions.
        #[arg(long)]
        assert_l_large: bool,

        /// Sampling grid "smin:smax:n".
        #[arg(long)]
        grid: String,

        #[command(flatten)]
        out: CommonOut,
    },

    /// Build the concentrating trial profile and evaluate its ratio.
    Trial {
        #[arg(long)]
        geometry: GeometryArg,

        #[arg(long = "H")]
        h: f64,

        #[arg(long)]
        expr: String,

        #[command(flatten)]
        config: ConfigArg,

        #[command(flatten)]
        out: CommonOut,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum GeometryArg {
    Plane,
    Disk,
}

impl From<GeometryArg> for Geometry {
    fn from(g: GeometryArg) -> Geometry {
        match g {
            GeometryArg::Plane => Geometry::PlaneCritical,
            GeometryArg::Disk => Geometry::DiskCritical,
        }
    }
}

const EXIT_OK: u8 = 0;
const EXIT_USAGE: u8 = 1;
const EXIT_SOLVER: u8 = 2;
const EXIT_VERIFY: u8 = 3;
const EXIT_NON_EXISTENCE: u8 = 4;
const EXIT_INCONCLUSIVE: u8 = 5;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let jobs = cli
        .jobs
        .or_else(|| {
            std::env::var("TM_SHARP_JOBS")
                .ok()
                .and_then(|v| v.parse().ok())
        })
        .unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1)
        })
        .max(1);

    let code = match run(cli.command, jobs) {
        Ok(code) => code,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
        Err(CliError::Solver(msg)) => {
            eprintln!("solver error: {msg}");
            EXIT_SOLVER
        }
    };
    ExitCode::from(code)
}

enum CliError {
    Usage(String),
    Solver(String),
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Parse { .. } | CoreError::Domain(_) => CliError::Usage(e.to_string()),
            other => CliError::Solver(other.to_string()),
        }
    }
}

fn run(cmd: Command, jobs: usize) -> Result<u8, CliError> {
    match cmd {
        Command::Mu {
            j,
            series,
            format,
            tol,
            out,
        } => cmd_mu(&j, series, &format, tol, &out),
        Command::SolitonVerify { ta, tol } => cmd_soliton_verify(ta, tol),
        Command::Maximize {
            geometry,
            h,
            full,
            config,
            out,
        } => cmd_maximize(geometry.into(), h, full, &config, &out),
        Command::Sweep {
            geometry,
            h_spec,
            fit,
            config,
            out,
        } => cmd_sweep(geometry.into(), &h_spec, fit, &config, &out, jobs),
        Command::Classify {
            geometry,
            expr,
            p,
            q,
            a,
            b,
            l,
            c_star,
            assert_l_large,
            grid,
            out,
        } => cmd_classify(
            geometry.into(),
            &expr,
            ClassifyParams {
                p,
                q,
                a,
                b,
                l,
                c_star,
                l_large_asserted: assert_l_large,
            },
            &grid,
            &out,
        ),
        Command::Trial {
            geometry,
            h,
            expr,
            config,
            out,
        } => cmd_trial(geometry.into(), h, &expr, &config, &out),
    }
}

/// Parse "value" or "start:step:stop" into an ascending list.
fn parse_range(spec: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = spec.split(':').collect();
    let parse = |s: &str| -> Result<f64, CliError> {
        s.trim()
            .parse::<f64>()
            .map_err(|_| CliError::Usage(format!("invalid number '{s}' in '{spec}'")))
    };
    match parts.len() {
        1 => Ok(vec![parse(parts[0])?]),
        3 => {
            let (start, step, stop) = (parse(parts[0])?, parse(parts[1])?, parse(parts[2])?);
            if !(step > 0.0 && stop >= start) {
                return Err(CliError::Usage(format!(
                    "range '{spec}' must have positive step and stop >= start"
                )));
            }
            let n = ((stop - start) / step).round() as usize;
            Ok((0..=n)
                .map(|i| start + step * i as f64)
                .filter(|&v| v <= stop + 1e-9 * step)
                .collect())
        }
        _ => Err(CliError::Usage(format!(
            "'{spec}' is neither a value nor start:step:stop"
        ))),
    }
}

fn cmd_mu(
    j_spec: &str,
    series: bool,
    format: &str,
    tol: f64,
    out: &CommonOut,
) -> Result<u8, CliError> {
    let js = parse_range(j_spec)?;
    if js.iter().any(|&j| !(j > 0.0)) {
        return Err(CliError::Usage("j values must be positive".into()));
    }
    if !(tol > 0.0) {
        return Err(CliError::Usage("tolerance must be positive".into()));
    }
    if format != "json" && format != "csv" {
        return Err(CliError::Usage(format!("unknown format '{format}'")));
    }

    let mut manifest = ManifestWriter::start(
        "mu",
        serde_json::json!({
            "j": j_spec, "series": series, "format": format, "tol": tol,
        }),
    );

    #[derive(serde::Serialize)]
    struct Row {
        j: f64,
        lambda: Option<f64>,
        theta: Option<f64>,
        mu: Option<f64>,
        log_mu: Option<f64>,
        mu_series_5: Option<f64>,
        rel_diff: Option<f64>,
        status: String,
    }

    let mut rows = Vec::new();
    let mut any_failed = false;
    for &j in &js {
        match solve_mu(j, tol) {
            Ok(mp) => {
                let (series_val, rel) = if series && j > 1.0 {
                    let slog = mu_series_log(j, 5).map_err(CliError::from)?;
                    (Some(slog.exp()), Some(f64::exp_m1(slog - mp.log_mu)))
                } else {
                    (None, None)
                };
                rows.push(Row {
                    j,
                    lambda: Some(mp.lambda),
                    theta: Some(mp.theta),
                    mu: Some(mp.mu),
                    log_mu: Some(mp.log_mu),
                    mu_series_5: series_val,
                    rel_diff: rel,
                    status: "ok".into(),
                });
            }
            Err(e) => {
                any_failed = true;
                rows.push(Row {
                    j,
                    lambda: None,
                    theta: None,
                    mu: None,
                    log_mu: None,
                    mu_series_5: None,
                    rel_diff: None,
                    status: format!("failed: {e}"),
                });
            }
        }
    }

    let text = if format == "json" {
        let doc = serde_json::json!({ "schema": 1, "command": "mu", "rows": rows });
        serde_json::to_string_pretty(&doc).unwrap() + "\n"
    } else {
        let mut s = String::from("j,lambda,theta,mu,log_mu,mu_series_5,rel_diff,status\n");
        let cell = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in &rows {
            s += &format!(
                "{},{},{},{},{},{},{},{}\n",
                r.j,
                cell(r.lambda),
                cell(r.theta),
                cell(r.mu),
                cell(r.log_mu),
                cell(r.mu_series_5),
                cell(r.rel_diff),
                r.status
            );
        }
        s
    };

    let target = OutputTarget::new(out.out.clone(), out.force)?;
    let written = write_text(&target, &text)?;
    manifest.finish(written, if any_failed { "partial" } else { "ok" })?;
    Ok(if any_failed { EXIT_SOLVER } else { EXIT_OK })
}

fn cmd_soliton_verify(ta: f64, tol: f64) -> Result<u8, CliError> {
    if !(ta >= 20.0) {
        return Err(CliError::Usage(
            "verification frames need Ta >= 20 so the truncated tails are negligible".into(),
        ));
    }
    let a = 1.0 / ta.sqrt();
    let frame = SolitonFrame::new(a, ta, 1.0 / a, Geometry::PlaneCritical).map_err(CliError::from)?;
    let report = verify_identities(&frame, tol).map_err(CliError::from)?;
    println!(
        "{:<44} {:>24} {:>24} {:>12}",
        "identity", "computed", "expected", "deviation"
    );
    for c in &report.checks {
        println!(
            "{:<44} {:>24.16e} {:>24.16e} {:>12.3e}",
            c.label, c.computed, c.expected, c.deviation
        );
    }
    // the quarter-scaled (2,2) line is the cubic-term value of the
    // third-order expansion
    let ct = ConstantTable::get();
    let hard = tm_core::soliton::zeta_integral(2, 2.0).map_err(CliError::from)?;
    println!(
        "{:<44} {:>24.16e} {:>24.16e}",
        "(1/16) zeta_integral(2,2) = (zeta(3)-1)/4",
        hard / 16.0,
        (ct.zeta3 - 1.0) / 4.0
    );
    println!(
        "max deviation: {:.3e} (tolerance {tol:.1e})",
        report.max_deviation
    );
    if report.passed(tol) {
        println!("all identities verified");
        Ok(EXIT_OK)
    } else {
        let failures = report.failures(tol);
        println!("{} identities outside tolerance:", failures.len());
        for f in failures {
            println!("  {}: deviation {:.3e}", f.label, f.deviation);
        }
        Ok(EXIT_VERIFY)
    }
}

fn cmd_maximize(
    geometry: Geometry,
    h: f64,
    full: bool,
    config: &ConfigArg,
    out: &CommonOut,
) -> Result<u8, CliError> {
    if !(h >= 4.0) {
        return Err(CliError::Usage(format!(
            "maximize requires H >= 4 (the concentration regime), got {h}"
        )));
    }
    let cfg = config.load().map_err(CliError::Usage)?;
    let mut manifest = ManifestWriter::start(
        "maximize",
        serde_json::json!({
            "geometry": geometry.to_string(), "H": h, "full": full,
            "config": serde_json::to_value(&cfg).unwrap(),
        }),
    );

    let sol = shoot(geometry, h, &cfg).map_err(CliError::from)?;
    if cfg.crosscheck {
        let direct =
            tm_core::variational::direct_maximize(geometry, h, &cfg).map_err(CliError::from)?;
        let gap = (direct.s0 - sol.s0).abs();
        if gap > 1e-6 {
            return Err(CliError::Solver(format!(
                "cross-check failed: |S0_direct - S0_shoot| = {gap:e}"
            )));
        }
    }
    let s_crit = match geometry {
        Geometry::PlaneCritical => {
            tm_core::sobolev::mu_hat(2.0 * h * h).map_err(CliError::from)? * sol.s0
        }
        Geometry::DiskCritical => sol.s0,
    };

    let mut doc = serde_json::json!({
        "schema": 1,
        "command": "maximize",
        "geometry": geometry.to_string(),
        "H": h,
        "a": sol.a,
        "lagrange": sol.lagrange,
        "T_a": sol.t_a,
        "v_inf": sol.v_inf,
        "S0": sol.s0,
        "s_critical": s_crit,
        "residuals": sol.residuals,
        "kinetic": sol.kinetic,
        "moments": sol.moments,
    });
    if full {
        doc["grid"] = serde_json::json!({
            "t": sol.t_grid, "v": sol.v, "v_dot": sol.v_dot,
        });
    }
    let target = OutputTarget::new(out.out.clone(), out.force)?;
    let written = write_text(&target, &(serde_json::to_string_pretty(&doc).unwrap() + "\n"))?;
    manifest.finish(written, "ok")?;
    Ok(EXIT_OK)
}

fn cmd_sweep(
    geometry: Geometry,
    h_spec: &str,
    fit: bool,
    config: &ConfigArg,
    out: &CommonOut,
    jobs: usize,
) -> Result<u8, CliError> {
    let hs = parse_range(h_spec)?;
    if hs.len() < 4 {
        return Err(CliError::Usage("sweep needs at least 4 heights".into()));
    }
    if hs.iter().any(|&h| h < 6.0) {
        return Err(CliError::Usage("sweep heights must be >= 6".into()));
    }
    let cfg = config.load().map_err(CliError::Usage)?;
    let mut manifest = ManifestWriter::start(
        "sweep",
        serde_json::json!({
            "geometry": geometry.to_string(), "H": h_spec, "fit": fit, "jobs": jobs,
            "config": serde_json::to_value(&cfg).unwrap(),
        }),
    );

    // worker pool over rows; output order stays keyed by height
    let results: Vec<Option<Result<SweepRow, String>>> = {
        let slots: Vec<std::sync::Mutex<Option<Result<SweepRow, String>>>> =
            hs.iter().map(|_| std::sync::Mutex::new(None)).collect();
        let next = std::sync::atomic::AtomicUsize::new(0);
        std::thread::scope(|scope| {
            for _ in 0..jobs.min(hs.len()) {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                    if i >= hs.len() {
                        break;
                    }
                    let res = sweep_row(geometry, hs[i], &cfg).map_err(|e| e.to_string());
                    *slots[i].lock().unwrap() = Some(res);
                });
            }
        });
        slots.into_iter().map(|s| s.into_inner().unwrap()).collect()
    };

    let mut csv =
        String::from("H,a,T_a,v_inf,S0,s_critical,resid1,resid2,resid3,kinetic,status\n");
    let mut good = Vec::new();
    for (h, res) in hs.iter().zip(results) {
        match res.expect("worker populated every slot") {
            Ok(row) => {
                csv += &format!(
                    "{},{},{},{},{},{},{},{},{},{},ok\n",
                    row.h,
                    row.a,
                    row.t_a,
                    row.v_inf,
                    row.s0,
                    row.s_critical,
                    row.residuals[0],
                    row.residuals[1],
                    row.residuals[2],
                    row.kinetic
                );
                good.push(row);
            }
            Err(e) => {
                csv += &format!("{h},,,,,,,,,,failed: {}\n", e.replace(',', ";"));
            }
        }
    }

    let target = OutputTarget::new(out.out.clone(), out.force)?;
    let mut written = write_text(&target, &csv)?;

    let mut fits_ok = true;
    if fit {
        match compute_sweep_fits(geometry, &good) {
            Ok((fits, raw)) => {
                let doc = serde_json::json!({
                    "schema": 1,
                    "command": "sweep-fits",
                    "geometry": geometry.to_string(),
                    "c8_over_8": fits.c8_over_8,
                    "a2_coeff": fits.a2_coeff,
                    "a_h3_coeff": fits.a_h3_coeff,
                    "remainder_slope": fits.remainder_slope,
                    "ta_coeff": fits.ta_coeff,
                    "vinf_coeff": fits.vinf_coeff,
                    "windows": fits.windows,
                    "raw_fits": raw,
                });
                let fits_target = target.derive("fits.json");
                written.extend(write_text(
                    &fits_target,
                    &(serde_json::to_string_pretty(&doc).unwrap() + "\n"),
                )?);
            }
            Err(e) => {
                eprintln!("fits not computed: {e}");
                fits_ok = false;
            }
        }
    }

    let success = good.len() * 4 >= hs.len() * 3 && (!fit || fits_ok);
    manifest.finish(written, if success { "ok" } else { "partial" })?;
    Ok(if success { EXIT_OK } else { EXIT_SOLVER })
}

fn cmd_classify(
    geometry: Geometry,
    expr: &str,
    params: ClassifyParams,
    grid_spec: &str,
    out: &CommonOut,
) -> Result<u8, CliError> {
    let g = Nonlinearity::parse(expr).map_err(CliError::from)?;
    let parts: Vec<&str> = grid_spec.split(':').collect();
    if parts.len() != 3 {
        return Err(CliError::Usage(format!(
            "grid '{grid_spec}' must be smin:smax:n"
        )));
    }
    let s_min: f64 = parts[0]
        .parse()
        .map_err(|_| CliError::Usage("invalid smin".into()))?;
    let s_max: f64 = parts[1]
        .parse()
        .map_err(|_| CliError::Usage("invalid smax".into()))?;
    let n: usize = parts[2]
        .parse()
        .map_err(|_| CliError::Usage("invalid n".into()))?;
    if !(s_min > 0.0 && s_max > s_min) {
        return Err(CliError::Usage("grid needs 0 < smin < smax".into()));
    }

    let mut manifest = ManifestWriter::start(
        "classify",
        serde_json::json!({
            "geometry": geometry.to_string(), "expr": expr,
            "params": serde_json::to_value(params).unwrap(),
            "grid": grid_spec,
        }),
    );

    let grid = GridSpec { s_min, s_max, n };
    let verdict = classify(&g, geometry, &params, &grid).map_err(CliError::from)?;
    let doc = serde_json::json!({
        "schema": 1,
        "command": "classify",
        "geometry": geometry.to_string(),
        "expr": expr,
        "params": params,
        "grid": grid,
        "outcome": verdict.outcome,
        "matched_condition": verdict.matched_condition,
        "caveat": verdict.caveat,
        "certificate": verdict.certificate,
    });
    let target = OutputTarget::new(out.out.clone(), out.force)?;
    let written = write_text(&target, &(serde_json::to_string_pretty(&doc).unwrap() + "\n"))?;
    manifest.finish(written, "ok")?;
    Ok(match verdict.outcome {
        Outcome::Existence => EXIT_OK,
        Outcome::NonExistence => EXIT_NON_EXISTENCE,
        Outcome::Inconclusive => EXIT_INCONCLUSIVE,
    })
}

fn cmd_trial(
    geometry: Geometry,
    h: f64,
    expr: &str,
    config: &ConfigArg,
    out: &CommonOut,
) -> Result<u8, CliError> {
    if !(h >= 6.0) {
        return Err(CliError::Usage(format!("trial requires H >= 6, got {h}")));
    }
    let g = Nonlinearity::parse(expr).map_err(CliError::from)?;
    let cfg = config.load().map_err(CliError::Usage)?;
    let mut manifest = ManifestWriter::start(
        "trial",
        serde_json::json!({
            "geometry": geometry.to_string(), "H": h, "expr": expr,
            "config": serde_json::to_value(&cfg).unwrap(),
        }),
    );

    let profile = build_trial(geometry, h, &cfg).map_err(CliError::from)?;
    let value = ratio(&g, &profile).map_err(CliError::from)?;
    let threshold = match geometry {
        Geometry::PlaneCritical => ConstantTable::get().s_inf_plane,
        Geometry::DiskCritical => ConstantTable::get().s_inf_disk,
    };
    let doc = serde_json::json!({
        "schema": 1,
        "command": "trial",
        "geometry": geometry.to_string(),
        "H": h,
        "expr": expr,
        "ratio": value,
        "threshold": threshold,
        "margin": value - threshold,
    });
    let target = OutputTarget::new(out.out.clone(), out.force)?;
    let written = write_text(&target, &(serde_json::to_string_pretty(&doc).unwrap() + "\n"))?;
    manifest.finish(written, "ok")?;
    Ok(EXIT_OK)
}
