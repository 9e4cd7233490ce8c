//! Command-line front end: flag parsing, config layering and the
//! subcommands that write each analysis to disk.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use crate::coin::{build_coin, build_initial_state, unitarity_certificate, CoinMatrix, CoinMode};
use crate::config::{load_config, RunConfig, SetError};
use crate::error::{Result, WalkError};
use crate::evolution::{evolve, AmplitudeField};
use crate::linalg::fmt_num;
use crate::recurrence::{
    conjecture_scan, fit_decay_exponent, mean_value_probe, polya_partial_products, return_probability_series, scan_csv,
    scan_jsonl, DecayFit, ReturnSeries,
};
use crate::spectral::spectral_audit;
use crate::stationary::{
    audit_points, gradient_audit, hessian_audit, inflection_roots, modified_phase_velocities, peak_velocities_analytic,
    saddle_audit, velocity_recurrence_criterion,
};

#[derive(Debug, Parser)]
#[command(name = "planar-walk", version, about = "Biased four-state quantum walk on the square lattice")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evolve the walker and write the probability distribution and peaks.
    Evolve(Flags),
    /// Audit the momentum-space spectrum and the Fourier propagator.
    Spectrum(Flags),
    /// Locate stationary points of the phase surfaces and audit derivatives.
    Saddles(Flags),
    /// Peak velocities and the origin-in-hull criterion.
    Velocities(Flags),
    /// Return-probability series and its decay exponent.
    Return(Flags),
    /// Pólya partial products of the return series.
    Polya(Flags),
    /// Mean position over time.
    Mean(Flags),
    /// Sweep of decay, Pólya and mean-position data over a parameter grid.
    Scan(Flags),
    /// Run every check and write a single report; fails if a core check fails.
    Verify(Flags),
}

#[derive(Debug, Args, Default)]
struct Flags {
    /// Flat `key = value` file; flags take precedence over its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Named parameter set applied after the config file (`symmetric`).
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    r: Option<u32>,
    #[arg(long)]
    a: Option<f64>,
    /// Initial phase; accepts `pi/2`-style values.
    #[arg(long, allow_hyphen_values = true)]
    phi: Option<String>,
    /// `as-printed` or `tensor-product`.
    #[arg(long)]
    variant: Option<String>,
    /// `corrected` or `as-printed`.
    #[arg(long)]
    coin_mode: Option<String>,
    /// Evolve even with a non-unitary coin.
    #[arg(long)]
    force: bool,
    #[arg(long)]
    t_max: Option<usize>,
    #[arg(long)]
    grid_n: Option<usize>,
    /// `direct` or `fourier`.
    #[arg(long)]
    engine: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    export_floor: Option<f64>,
    #[arg(long)]
    threshold: Option<f64>,
    /// `lo,hi`
    #[arg(long)]
    fit_window: Option<String>,
    /// Newton seeds per axis.
    #[arg(long)]
    seeds: Option<usize>,
    /// Sample points for derivative audits.
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    scan_p: Option<String>,
    #[arg(long)]
    scan_r: Option<String>,
    #[arg(long)]
    scan_a: Option<String>,
    #[arg(long)]
    scan_phi: Option<String>,
    /// Worker threads (defaults to all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Also write a gnuplot script for the main CSV output.
    #[arg(long)]
    plot_script: bool,
}

fn flag_value(key: &str, set: std::result::Result<(), SetError>) -> Result<()> {
    set.map_err(|e| match e {
        SetError::UnknownKey => WalkError::Invalid(format!("unknown key `{key}`")),
        SetError::Value(m) => WalkError::Invalid(format!("--{}: {m}", key.replace('_', "-"))),
    })
}

impl Flags {
    /// Defaults, then the config file, then the preset, then flags.
    fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => load_config(path)?,
            None => RunConfig::default(),
        };
        if let Some(preset) = &self.preset {
            cfg.apply_preset(preset)?;
        }
        let text: [(&str, Option<String>); 19] = [
            ("p", self.p.map(|v| v.to_string())),
            ("r", self.r.map(|v| v.to_string())),
            ("a", self.a.map(|v| v.to_string())),
            ("phi", self.phi.clone()),
            ("variant", self.variant.clone()),
            ("coin_mode", self.coin_mode.clone()),
            ("t_max", self.t_max.map(|v| v.to_string())),
            ("grid_n", self.grid_n.map(|v| v.to_string())),
            ("engine", self.engine.clone()),
            ("export_floor", self.export_floor.map(|v| v.to_string())),
            ("threshold_fraction", self.threshold.map(|v| v.to_string())),
            ("fit_window", self.fit_window.clone()),
            ("seeds", self.seeds.map(|v| v.to_string())),
            ("samples", self.samples.map(|v| v.to_string())),
            ("scan_p", self.scan_p.clone()),
            ("scan_r", self.scan_r.clone()),
            ("scan_a", self.scan_a.clone()),
            ("scan_phi", self.scan_phi.clone()),
            ("force", self.force.then(|| "true".to_string())),
        ];
        for (key, value) in text {
            if let Some(v) = value {
                flag_value(key, cfg.set(key, &v))?;
            }
        }
        if let Some(out) = &self.out {
            cfg.output_path = out.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Parses `args` (including the program name) and runs the subcommand.
/// Returns the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

type Job = fn(&RunConfig, &Path) -> Result<Outcome>;

fn dispatch(command: Command) -> Result<i32> {
    let (flags, job): (Flags, Job) = match command {
        Command::Evolve(f) => (f, cmd_evolve),
        Command::Spectrum(f) => (f, cmd_spectrum),
        Command::Saddles(f) => (f, cmd_saddles),
        Command::Velocities(f) => (f, cmd_velocities),
        Command::Return(f) => (f, cmd_return),
        Command::Polya(f) => (f, cmd_polya),
        Command::Mean(f) => (f, cmd_mean),
        Command::Scan(f) => (f, cmd_scan),
        Command::Verify(f) => (f, cmd_verify),
    };
    let cfg = flags.resolve()?;
    let out = cfg.output_path.clone();
    fs::create_dir_all(&out)?;
    let outcome = match flags.workers {
        Some(0) => {
            return Err(WalkError::OutOfRange {
                name: "workers",
                value: 0.0,
                expected: "workers >= 1",
            })
        }
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| WalkError::Invalid(e.to_string()))?
            .install(|| job(&cfg, &out))?,
        None => job(&cfg, &out)?,
    };
    for (name, contents) in &outcome.files {
        fs::write(out.join(name), contents)?;
    }
    if flags.plot_script {
        if let Some(script) = &outcome.plot {
            fs::write(out.join("plot.gp"), script)?;
        }
    }
    match outcome.failure {
        Some(e) => Err(e),
        None => Ok(outcome.code),
    }
}

/// Files to write, an optional plot script, and the exit status. A
/// `failure` is reported after the files are written.
struct Outcome {
    files: Vec<(&'static str, String)>,
    plot: Option<String>,
    code: i32,
    failure: Option<WalkError>,
}

impl Outcome {
    fn ok(files: Vec<(&'static str, String)>) -> Self {
        Self {
            files,
            plot: None,
            code: 0,
            failure: None,
        }
    }

    fn with_plot(mut self, script: String) -> Self {
        self.plot = Some(script);
        self
    }
}

fn to_json<T: Serialize>(v: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s)
}

fn coin_for(cfg: &RunConfig) -> Result<CoinMatrix> {
    let params = cfg.params()?;
    let coin = build_coin(&params, cfg.coin_mode);
    Ok(if cfg.force { coin.force() } else { coin })
}

fn line_plot(csv: &str, title: &str, logscale: bool) -> String {
    let scale = if logscale { "set logscale xy\n" } else { "" };
    format!(
        "set datafile separator ','\nset key autotitle columnhead\nset title '{title}'\n{scale}\
         plot '{csv}' using 1:2 with linespoints\n"
    )
}

fn cmd_evolve(cfg: &RunConfig, _out: &Path) -> Result<Outcome> {
    let params = cfg.params()?;
    let coin = coin_for(cfg)?;
    let start = AmplitudeField::new_localized(params, build_initial_state(&cfg.initial()?))?;
    let field = evolve(&start, &coin, cfg.t_max)?;
    let probs = field.probability_field();
    let peaks = probs.peak_positions(cfg.threshold_fraction)?;
    let mut peaks_csv = String::from("x,y,p\n");
    for pk in &peaks {
        peaks_csv.push_str(&format!("{},{},{}\n", pk.x, pk.y, fmt_num(pk.p)));
    }
    let (mx, my) = probs.mean_position();
    let summary = json!({
        "p": params.p(),
        "r": params.r(),
        "a": cfg.a,
        "phi": cfg.phi,
        "variant": cfg.variant,
        "coin_mode": cfg.coin_mode,
        "t": cfg.t_max,
        "total_probability": probs.total(),
        "mean_x": mx,
        "mean_y": my,
        "peaks": peaks,
    });
    let plot = "set datafile separator ','\nset view map\nset title 'P(x,y,t)'\n\
                splot 'distribution.csv' using 1:2:3 every ::1 with points pointtype 5 pointsize 0.3 palette\n"
        .to_string();
    Ok(Outcome::ok(vec![
        ("distribution.csv", probs.to_csv(cfg.export_floor)),
        ("peaks.csv", peaks_csv),
        ("summary.json", to_json(&summary)?),
    ])
    .with_plot(plot))
}

fn cmd_spectrum(cfg: &RunConfig, _out: &Path) -> Result<Outcome> {
    let params = cfg.params()?;
    let audit = spectral_audit(&params, cfg.grid_n(), None)?;
    let coin = build_coin(&params, cfg.coin_mode);
    Ok(Outcome::ok(vec![("spectral_audit.json", to_json(&audit)?), ("coin.csv", coin.to_csv())]))
}

fn cmd_saddles(cfg: &RunConfig, _out: &Path) -> Result<Outcome> {
    let audit = saddle_audit(&cfg.params()?, cfg.seeds, cfg.samples)?;
    Ok(Outcome::ok(vec![("saddle_audit.json", to_json(&audit)?)]))
}

fn cmd_velocities(cfg: &RunConfig, _out: &Path) -> Result<Outcome> {
    let params = cfg.params()?;
    let profile = peak_velocities_analytic(&params);
    let hull = velocity_recurrence_criterion(&profile);
    let mut csv = String::from("label,vx,vy\n");
    for (label, v) in profile.labeled() {
        csv.push_str(&format!("{label},{},{}\n", fmt_num(v.vx), fmt_num(v.vy)));
    }
    let report = json!({
        "p": params.p(),
        "r": params.r(),
        "velocity_profile": profile,
        "hull_criterion": hull,
        "inflection_roots": inflection_roots(&params),
        "modified_phase_velocities": modified_phase_velocities(&params),
    });
    Ok(Outcome::ok(vec![("velocities.json", to_json(&report)?), ("velocities.csv", csv)]))
}

fn series_for(cfg: &RunConfig) -> Result<ReturnSeries> {
    let coin = coin_for(cfg)?;
    return_probability_series(&cfg.params()?, &cfg.initial()?, &coin, cfg.t_max, cfg.engine, cfg.grid_n())
}

#[derive(Serialize)]
struct DecayReport {
    p: f64,
    r: u32,
    engine: crate::recurrence::Engine,
    grid_n: usize,
    t_max: usize,
    fit: DecayFit,
    /// Probability exponent implied by an amplitude decaying like `t^(−1/2)`.
    amplitude_half_power_eta: f64,
    /// Probability exponent of a two-dimensional non-degenerate stationary point.
    planar_stationary_phase_eta: f64,
}

fn decay_report(cfg: &RunConfig, fit: DecayFit) -> DecayReport {
    DecayReport {
        p: cfg.p,
        r: cfg.r,
        engine: cfg.engine,
        grid_n: cfg.grid_n(),
        t_max: cfg.t_max,
        fit,
        amplitude_half_power_eta: 1.0,
        planar_stationary_phase_eta: 2.0,
    }
}

fn cmd_return(cfg: &RunConfig, _out: &Path) -> Result<Outcome> {
    let series = series_for(cfg)?;
    let mut files = vec![("return_series.csv", series.to_csv())];
    let mut failure = None;
    // the series is still written when it is too short to fit
    match fit_decay_exponent(&series.entries, cfg.fit_window()) {
        Ok(fit) => files.push(("decay_fit.json", to_json(&decay_report(cfg, fit))?)),
        Err(e) => failure = Some(e),
    }
    let mut outcome = Outcome::ok(files).with_plot(line_plot("return_series.csv", "P(0,0,t)", true));
    outcome.failure = failure;
    Ok(outcome)
}

fn cmd_polya(cfg: &RunConfig, _out: &Path) -> Result<Outcome> {
    let series = series_for(cfg)?;
    let fit = fit_decay_exponent(&series.entries, cfg.fit_window()).ok();
    let est = polya_partial_products(&series, fit.as_ref());
    let report = json!({
        "p": cfg.p,
        "r": cfg.r,
        "t_max": cfg.t_max,
        "polya_partial": est.last_partial(),
        "extrapolated": est.extrapolated,
        "extrapolation_error": est.extrapolation_error,
        "fit": fit,
    });
    Ok(Outcome::ok(vec![("polya.csv", est.to_csv()), ("polya.json", to_json(&report)?)])
        .with_plot(line_plot("polya.csv", "Polya partial", false).replace("1:2", "1:3")))
}

fn cmd_mean(cfg: &RunConfig, _out: &Path) -> Result<Outcome> {
    let coin = coin_for(cfg)?;
    let traj = mean_value_probe(&cfg.params()?, &cfg.initial()?, &coin, cfg.t_max)?;
    Ok(Outcome::ok(vec![("mean_trajectory.csv", traj.to_csv())])
        .with_plot(line_plot("mean_trajectory.csv", "mean position", false)))
}

fn cmd_scan(cfg: &RunConfig, _out: &Path) -> Result<Outcome> {
    let rows = conjecture_scan(&cfg.scan_grid(), cfg.t_max, cfg.fit_window)?;
    Ok(Outcome::ok(vec![("scan.csv", scan_csv(&rows)), ("scan.jsonl", scan_jsonl(&rows)?)]))
}

#[derive(Debug, Serialize)]
struct Check {
    name: String,
    measured: f64,
    threshold: f64,
    passed: bool,
    /// Core invariants decide the exit status; the rest audit printed formulas.
    load_bearing: bool,
}

fn check(name: &str, measured: f64, threshold: f64, load_bearing: bool) -> Check {
    Check {
        name: name.to_string(),
        measured,
        threshold,
        passed: measured < threshold,
        load_bearing,
    }
}

fn cmd_verify(cfg: &RunConfig, _out: &Path) -> Result<Outcome> {
    let params = cfg.params()?;
    let corrected = build_coin(&params, CoinMode::Corrected);
    let audit = spectral_audit(&params, cfg.grid_n(), None)?;
    let mut checks = vec![
        check("coin_unitarity", unitarity_certificate(&corrected), 1e-12, true),
        check("momentum_operator_unitarity", audit.unitarity_max_defect, 1e-12, true),
        check("fourier_oracle_max_error", audit.fourier_oracle_max_error, 1e-10, true),
        check("numeric_eigen_residual", audit.numeric_residual_max, 1e-10, true),
        check("determinant_identity", audit.det_identity_max_error, 1e-10, true),
    ];

    let t_cons = cfg.t_max.min(64);
    let start = AmplitudeField::new_localized(params, build_initial_state(&cfg.initial()?))?;
    let end = evolve(&start, &corrected, t_cons)?;
    checks.push(check("probability_conservation", (end.total_probability() - 1.0).abs(), 1e-11, true));

    let points = audit_points(cfg.samples);
    for c in gradient_audit(&params, &points) {
        checks.push(check(&c.name, c.max_error, c.tolerance, true));
    }

    checks.push(check("eigenvalue_formula_mismatch", audit.eigenvalue_max_mismatch, 1e-10, false));
    checks.push(check("eigenvector_formula_residual", audit.eigenvector_max_residual, 1e-10, false));
    checks.push(check("eigenvalue_product_vs_det", audit.analytic_det_max_error, 1e-10, false));
    checks.push(check("prefactor_vs_norm_sq", audit.prefactor_vs_norm_sq_max_rel_error, 1e-10, false));
    let hess = hessian_audit(&params, &points);
    for c in &hess.blocks {
        checks.push(check(&format!("hessian_block_{}", c.name), c.max_error, c.tolerance, false));
    }
    for c in &hess.assembled {
        checks.push(check(&format!("hessian_assembled_{}", c.name), c.max_error, c.tolerance, false));
    }

    let passed = checks.iter().filter(|c| c.load_bearing).all(|c| c.passed);
    let report = json!({
        "p": params.p(),
        "r": params.r(),
        "grid_n": cfg.grid_n(),
        "passed": passed,
        "fourier_oracle_max_error": audit.fourier_oracle_max_error,
        "checks": checks,
        "spectral_audit": audit,
        "hessian_audit": hess,
    });
    let mut outcome = Outcome::ok(vec![("verify_report.json", to_json(&report)?)]);
    outcome.code = if passed { 0 } else { 1 };
    Ok(outcome)
}
