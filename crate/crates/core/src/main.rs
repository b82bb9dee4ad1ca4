use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use relboost::amplitudes::{BoostModel, ModeRange};
use relboost::engine::{
    default_gamma_grid, Engine, Progress, SweepRequest, SweepResult, DEFAULT_GRID_POINTS,
    TABLE_GAMMAS,
};
use relboost::entanglement::JointProbability;
use relboost::kinematics::{LorentzFactor, PhaseBranch};
use relboost::quadrature::QuadratureSpec;
use relboost::report::{self, Sidecar, SCHEMA_VERSION};
use relboost::verify::{self, Level};

#[derive(Parser)]
#[command(name = "relboost", version, about = "Boosted two-photon OAM amplitudes and entanglement metrics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Joint probability grid P(k,m), optionally with complex A(k,m) and a heatmap.
    Amplitudes(AmplitudeArgs),
    /// Metric table: S, P, MI, N, D_eff per model and γ.
    Table(Common),
    /// Metric sweep over a log-spaced γ grid.
    Sweep(SweepArgs),
    /// OAM marginals P(k) and P(m).
    Marginals(Common),
    /// Descending Schmidt probabilities with cumulative sums.
    Schmidt(Common),
    /// Oracle checks; exit code 0 iff all pass.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Branch {
    Continuous,
    Principal,
}

impl From<Branch> for PhaseBranch {
    fn from(b: Branch) -> Self {
        match b {
            Branch::Continuous => PhaseBranch::Continuous,
            Branch::Principal => PhaseBranch::Principal,
        }
    }
}

#[derive(Args)]
struct Common {
    /// Boost model(s): zero-rm, non-zero-rm1, non-zero-rm2. Default: all three.
    #[arg(long, value_delimiter = ',', value_parser = parse_model)]
    model: Vec<BoostModel>,
    /// Lorentz factor(s), repeatable or comma separated; each must be >= 1.
    #[arg(long, value_delimiter = ',', value_parser = parse_gamma)]
    gamma: Vec<LorentzFactor>,
    #[arg(long, default_value_t = 20)]
    lmax: u32,
    /// Absolute quadrature tolerance per amplitude.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Worker threads (overrides RELBOOST_THREADS).
    #[arg(long)]
    threads: Option<usize>,
    /// Phase branch of the boosted azimuth.
    #[arg(long, value_enum, default_value_t = Branch::Continuous)]
    branch: Branch,
    /// Suppress progress lines on stderr.
    #[arg(long)]
    quiet: bool,
}

#[derive(Args)]
struct AmplitudeArgs {
    #[command(flatten)]
    common: Common,
    /// Also write a heatmap image of P(k,m).
    #[arg(long)]
    heatmap: bool,
    /// Logarithmic heatmap color scale.
    #[arg(long)]
    log_scale: bool,
    /// Pixels per heatmap cell.
    #[arg(long, default_value_t = 8)]
    scale: u32,
    /// Also write complex A(k,m).
    #[arg(long)]
    complex: bool,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    /// Number of log-spaced points from γ=1 to γ=1e4 when --gamma is absent.
    #[arg(long, default_value_t = DEFAULT_GRID_POINTS)]
    points: usize,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, value_parser = parse_level, default_value = "quick")]
    level: Level,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long)]
    threads: Option<usize>,
}

fn parse_model(s: &str) -> Result<BoostModel, String> {
    s.parse().map_err(|e: relboost::amplitudes::AmplitudeError| e.to_string())
}

fn parse_gamma(s: &str) -> Result<LorentzFactor, String> {
    let x: f64 = s.trim().parse().map_err(|_| format!("{s:?} is not a number"))?;
    LorentzFactor::new(x).map_err(|e| e.to_string())
}

fn parse_level(s: &str) -> Result<Level, String> {
    s.parse()
}

impl Common {
    fn models(&self) -> Vec<BoostModel> {
        if self.model.is_empty() {
            BoostModel::ALL.to_vec()
        } else {
            let mut m = self.model.clone();
            m.dedup();
            m
        }
    }

    /// Requested γ values sorted ascending, or `fallback` when none given.
    fn gammas(&self, fallback: impl FnOnce() -> Vec<LorentzFactor>) -> Vec<LorentzFactor> {
        if self.gamma.is_empty() {
            return fallback();
        }
        let mut g = self.gamma.clone();
        g.sort_by(|a, b| a.value().total_cmp(&b.value()));
        g.dedup_by(|a, b| a.value() == b.value());
        g
    }

    fn spec(&self) -> QuadratureSpec {
        QuadratureSpec::with_tol(self.tol)
    }

    fn sidecar(&self, axes: serde_json::Value) -> Sidecar {
        Sidecar {
            schema: SCHEMA_VERSION,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: std::env::args().collect(),
            created_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map_or(0, |d| d.as_secs()),
            lmax: self.lmax,
            abs_tol: self.tol,
            branch: self.branch.into(),
            axes,
        }
    }

    fn write(&self, name: &str, contents: &str, axes: serde_json::Value) -> Result<PathBuf> {
        let path = self.out.join(name);
        report::write_text(&path, contents)?;
        report::write_sidecar(&path, &self.sidecar(axes))?;
        if !self.quiet {
            eprintln!("wrote {}", path.display());
        }
        Ok(path)
    }
}

fn lf(x: f64) -> LorentzFactor {
    LorentzFactor::new(x).expect("built-in grids are valid")
}

fn sweep(common: &Common, gammas: Vec<LorentzFactor>, keep_joint: bool) -> Result<SweepResult> {
    let mut req = SweepRequest::new(common.models(), gammas, ModeRange::new(common.lmax));
    req.spec = common.spec();
    req.branch = common.branch.into();
    req.keep_joint = keep_joint;
    let engine = Engine::new(common.threads)?;
    let quiet = common.quiet;
    let result = engine.run_sweep(&req, |p: Progress| {
        if !quiet {
            eprintln!(
                "[{}/{}] {} γ={} {}",
                p.completed,
                p.total,
                p.model,
                p.gamma,
                if p.ok { "ok" } else { "FAILED" }
            );
        }
    })?;
    Ok(result)
}

fn check_failures(result: &SweepResult) -> Result<()> {
    let failed: Vec<String> = result
        .failures()
        .map(|r| format!("{} γ={}: {}", r.model, r.gamma, r.error.as_deref().unwrap_or("?")))
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        bail!("{} point(s) failed:\n  {}", failed.len(), failed.join("\n  "))
    }
}

fn mode_axes(lmax: u32) -> serde_json::Value {
    json!({ "rows": "k", "cols": "m", "min": -(lmax as i64), "max": lmax })
}

fn cmd_amplitudes(args: &AmplitudeArgs) -> Result<()> {
    let c = &args.common;
    let gammas = c.gammas(|| vec![LorentzFactor::REST]);
    let lmax = ModeRange::new(c.lmax);
    let engine = Engine::new(c.threads)?;
    for model in c.models() {
        for &g in &gammas {
            let a = engine
                .matrix(model, g, lmax, c.branch.into(), &c.spec())
                .with_context(|| format!("{model} γ={g}"))?;
            let joint = JointProbability::from_amplitudes(&a)?;
            let stem = format!("joint_{}_{}", model.as_str(), report::gamma_tag(g));
            match c.format {
                Format::Csv => c.write(&format!("{stem}.csv"), &report::joint_csv(&joint, lmax), mode_axes(c.lmax))?,
                Format::Json => c.write(&format!("{stem}.json"), &report::joint_json(&a, &joint)?, mode_axes(c.lmax))?,
            };
            if args.complex {
                let stem = format!("amplitude_{}_{}", model.as_str(), report::gamma_tag(g));
                match c.format {
                    Format::Csv => c.write(&format!("{stem}.csv"), &report::amplitude_csv(&a), mode_axes(c.lmax))?,
                    Format::Json => c.write(&format!("{stem}.json"), &report::amplitude_json(&a)?, mode_axes(c.lmax))?,
                };
            }
            if args.heatmap {
                let path = c.out.join(format!("{stem}.png"));
                report::write_heatmap(&path, &joint, args.scale.max(1), args.log_scale)?;
                let mut axes = mode_axes(c.lmax);
                axes["color"] = json!(if args.log_scale {
                    format!("log10, {} decades below max", report::LOG_DECADES)
                } else {
                    "linear in P/max".to_string()
                });
                axes["image_rows"] = json!("k descending from top");
                report::write_sidecar(&path, &c.sidecar(axes))?;
                if !c.quiet {
                    eprintln!("wrote {}", path.display());
                }
            }
        }
    }
    Ok(())
}

fn cmd_table(c: &Common) -> Result<()> {
    let result = sweep(c, c.gammas(|| TABLE_GAMMAS.map(lf).to_vec()), false)?;
    let models = c.models();
    let text = report::table_text(&result, &models);
    print!("{text}");
    c.write("table.txt", &text, json!({ "metrics": report::METRIC_LABELS }))?;
    match c.format {
        Format::Csv => c.write("table.csv", &report::table_csv(&result, &models), json!({ "metrics": report::METRIC_LABELS }))?,
        Format::Json => PathBuf::new(),
    };
    c.write("table.json", &report::sweep_json(&result, "table")?, json!({ "metrics": report::METRIC_LABELS }))?;
    check_failures(&result)
}

fn write_sweep_like(
    c: &Common,
    result: &SweepResult,
    kind: &str,
    csv: impl FnOnce(&SweepResult) -> String,
    axes: serde_json::Value,
) -> Result<()> {
    match c.format {
        Format::Csv => c.write(&format!("{kind}.csv"), &csv(result), axes)?,
        Format::Json => c.write(&format!("{kind}.json"), &report::sweep_json(result, kind)?, axes)?,
    };
    check_failures(result)
}

fn cmd_sweep(args: &SweepArgs) -> Result<()> {
    let c = &args.common;
    if args.points < 2 && c.gamma.is_empty() {
        bail!("--points must be at least 2");
    }
    let result = sweep(c, c.gammas(|| default_gamma_grid(args.points)), false)?;
    write_sweep_like(c, &result, "sweep", report::sweep_csv, json!({ "x": "gamma", "x_scale": "log10" }))
}

fn cmd_marginals(c: &Common) -> Result<()> {
    let result = sweep(c, c.gammas(|| [1.0, 20.0, 100.0, 10000.0].map(lf).to_vec()), false)?;
    write_sweep_like(c, &result, "marginals", report::marginals_csv, json!({ "x": "l", "series": ["p_k", "p_m"] }))
}

fn cmd_schmidt(c: &Common) -> Result<()> {
    let result = sweep(c, c.gammas(|| TABLE_GAMMAS.map(lf).to_vec()), false)?;
    write_sweep_like(c, &result, "schmidt", report::schmidt_csv, json!({ "x": "rank", "series": ["p", "cumulative"] }))
}

fn cmd_verify(args: &VerifyArgs) -> Result<bool> {
    let spec = QuadratureSpec::with_tol(args.tol);
    spec.validate()?;
    let report = verify::run(args.level, &spec, args.threads);
    print!("{}", report.render());
    Ok(report.all_passed())
}

fn ensure_dir(p: &Path) -> Result<()> {
    std::fs::create_dir_all(p).with_context(|| format!("creating {}", p.display()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Amplitudes(a) => ensure_dir(&a.common.out).and_then(|_| cmd_amplitudes(a)).map(|_| true),
        Command::Table(c) => ensure_dir(&c.out).and_then(|_| cmd_table(c)).map(|_| true),
        Command::Sweep(a) => ensure_dir(&a.common.out).and_then(|_| cmd_sweep(a)).map(|_| true),
        Command::Marginals(c) => ensure_dir(&c.out).and_then(|_| cmd_marginals(c)).map(|_| true),
        Command::Schmidt(c) => ensure_dir(&c.out).and_then(|_| cmd_schmidt(c)).map(|_| true),
        Command::Verify(v) => cmd_verify(v),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
