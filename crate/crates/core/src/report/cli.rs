//! Argument parsing and the five subcommands.
//!
//! Commands return an [`Outcome`] rather than printing, so the binary is a
//! thin shell and tests can drive everything in-process.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::analytic::{dss_service_rate, expected_download_time};
use crate::bounds::{regions, verify_region, Interval, Region, RegionAxis, RegionFamily, RegionReport, DEFAULT_P_STEP};
use crate::model::{phi_distribution, AccessKind, AccessModel, ServiceKind};
use crate::monte_carlo::{
    chi_squared_test, simulate_dss, SimulationSettings, DEFAULT_SEED, DEFAULT_TRIALS, MIN_STRATUM_SAMPLES,
};
use crate::optimizer::{optimal_alpha, sweep_alpha, tradeoff_frontier};
use crate::report::figures::{write_figure, FigureId};
use crate::report::format::{fmt_sig, CsvDoc};
use crate::report::params::{ConfigSpec, ParamError};
use crate::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_DISAGREEMENT: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Environment variable that replaces the default simulation seed.
pub const SEED_ENV: &str = "ALLOC_RATE_SEED";

/// Largest |z| accepted before `simulate` reports disagreement.
pub const Z_GATE: f64 = 4.0;

#[derive(Debug, Parser)]
#[command(name = "alloc-rate", version, about = "Service rate and recovery probability of storage allocations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Analytic service rate and recovery probability.
    Rate(RateArgs),
    /// Regions of r or p where spreading is guaranteed worse or better.
    Bounds(BoundsArgs),
    /// Monte Carlo estimates compared against the analytic values.
    Simulate(SimulateArgs),
    /// Service rate and recovery probability for every feasible alpha.
    Sweep(SweepArgs),
    /// Write the CSV panels of a figure.
    Figures(FiguresArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AccessArg {
    Fixed,
    Prob,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ServiceArg {
    Scaled,
    Shifted,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    #[default]
    Text,
    Csv,
}

/// System parameters as long flags; any of them may instead come from
/// `--config "N=30 m=3 ..."`, with flags taking precedence.
#[derive(Debug, Clone, Default, Args)]
pub struct ConfigArgs {
    #[arg(long = "N")]
    pub nodes: Option<u64>,
    #[arg(long = "m")]
    pub redundancy: Option<u64>,
    #[arg(long)]
    pub alpha: Option<u64>,
    #[arg(long = "k")]
    pub file_blocks: Option<u64>,
    #[arg(long, value_enum)]
    pub access: Option<AccessArg>,
    #[arg(long)]
    pub r: Option<u64>,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long, value_enum)]
    pub service: Option<ServiceArg>,
    /// Node service rate [default: 1]
    #[arg(long)]
    pub mu: Option<f64>,
    /// Shift of the shifted exponential [default: 3]
    #[arg(long)]
    pub delta: Option<f64>,
    /// Key-value configuration text.
    #[arg(long)]
    pub config: Option<String>,
}

impl ConfigArgs {
    pub fn spec(&self) -> Result<ConfigSpec, ParamError> {
        let flags = ConfigSpec {
            nodes: self.nodes,
            redundancy: self.redundancy,
            alpha: self.alpha,
            file_blocks: self.file_blocks,
            access: self.access.map(|a| match a {
                AccessArg::Fixed => AccessKind::FixedSize,
                AccessArg::Prob => AccessKind::Probabilistic,
            }),
            r: self.r,
            p: self.p,
            service: self.service.map(|s| match s {
                ServiceArg::Scaled => ServiceKind::Scaled,
                ServiceArg::Shifted => ServiceKind::Shifted,
            }),
            mu: self.mu,
            delta: self.delta,
        };
        let text = match &self.config {
            Some(t) => t.parse()?,
            None => ConfigSpec::default(),
        };
        Ok(flags.or(text))
    }
}

#[derive(Debug, Clone, Args)]
pub struct RateArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Include the per-phi breakdown.
    #[arg(long)]
    pub per_phi: bool,
    #[arg(long, value_enum, default_value_t)]
    pub format: OutputFormat,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct BoundsArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Check every region point against the exact rates.
    #[arg(long)]
    pub verify: bool,
    /// Grid step for verifying regions over p.
    #[arg(long, default_value_t = DEFAULT_P_STEP)]
    pub p_step: f64,
    #[arg(long, value_enum, default_value_t)]
    pub format: OutputFormat,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    #[arg(long, default_value_t = DEFAULT_TRIALS)]
    pub trials: u64,
    /// Overrides ALLOC_RATE_SEED and the default seed 42.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; output does not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct FiguresArgs {
    /// fig2, fig3, fig4, fig5 or fig6.
    pub id: String,
    /// Directory receiving the panel files.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Outcome {
    fn ok(stdout: String) -> Self {
        Self { code: EXIT_OK, stdout, stderr: String::new() }
    }

    fn usage(message: impl std::fmt::Display) -> Self {
        Self { code: EXIT_USAGE, stdout: String::new(), stderr: format!("error: {message}\n") }
    }
}

impl From<ParamError> for Outcome {
    fn from(e: ParamError) -> Self {
        Outcome::usage(e)
    }
}

impl From<Error> for Outcome {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidConfiguration(v) => {
                let mut stderr = String::from("error: invalid configuration\n");
                for violation in v.iter() {
                    let _ = writeln!(stderr, "  {}: {}", violation.code.as_str(), violation.message);
                }
                Outcome { code: EXIT_USAGE, stdout: String::new(), stderr }
            }
            other => Outcome::usage(other),
        }
    }
}

type CmdResult = Result<Outcome, Outcome>;

/// Runs a parsed command, reading the seed override from the environment.
pub fn run(cli: Cli) -> Outcome {
    let env_seed = std::env::var(SEED_ENV).ok();
    run_with_seed_env(cli, env_seed.as_deref())
}

/// Runs a parsed command with an explicit value for the seed variable.
pub fn run_with_seed_env(cli: Cli, env_seed: Option<&str>) -> Outcome {
    let result = match cli.command {
        Command::Rate(a) => cmd_rate(&a),
        Command::Bounds(a) => cmd_bounds(&a),
        Command::Simulate(a) => cmd_simulate(&a, env_seed),
        Command::Sweep(a) => cmd_sweep(&a),
        Command::Figures(a) => cmd_figures(&a),
    };
    result.unwrap_or_else(|e| e)
}

fn header(doc: &mut CsvDoc, command: &str, params: &str) {
    doc.comment(format!("alloc-rate {}", env!("CARGO_PKG_VERSION")));
    doc.comment(format!("command: {command}"));
    doc.comment(format!("params: {params}"));
}

fn emit(text: String, out: &Option<PathBuf>) -> CmdResult {
    match out {
        Some(path) => {
            std::fs::write(path, text).map_err(|e| Outcome::usage(format!("cannot write {}: {e}", path.display())))?;
            Ok(Outcome::ok(String::new()))
        }
        None => Ok(Outcome::ok(text)),
    }
}

pub fn cmd_rate(args: &RateArgs) -> CmdResult {
    let spec = args.config.spec()?;
    let config = spec.system_config()?;
    let access = spec.access_model()?;
    let service = spec.service_model();
    let report = dss_service_rate(&config, &access, &service)?;
    let text = match args.format {
        OutputFormat::Text => {
            let mut s =
                format!("mu_s = {}\np_s = {}\n", fmt_sig(report.service_rate), fmt_sig(report.recovery_probability));
            if args.per_phi {
                let _ = writeln!(s, "{:>6}  {:>18}  {:>18}", "phi", "pmf", "set_rate");
                for t in &report.per_phi {
                    let _ = writeln!(s, "{:>6}  {:>18}  {:>18}", t.phi, fmt_sig(t.probability), fmt_sig(t.set_rate));
                }
            }
            s
        }
        OutputFormat::Csv if args.per_phi => {
            let mut doc = CsvDoc::new(&["phi", "pmf", "set_rate"]);
            header(&mut doc, "rate", &spec.render());
            doc.comment(format!("mu_s: {}", fmt_sig(report.service_rate)));
            doc.comment(format!("p_s: {}", fmt_sig(report.recovery_probability)));
            for t in &report.per_phi {
                doc.row([t.phi.to_string(), fmt_sig(t.probability), fmt_sig(t.set_rate)]);
            }
            doc.render()
        }
        OutputFormat::Csv => {
            let mut doc = CsvDoc::new(&["mu_s", "p_s"]);
            header(&mut doc, "rate", &spec.render());
            doc.row([fmt_sig(report.service_rate), fmt_sig(report.recovery_probability)]);
            doc.render()
        }
    };
    emit(text, &args.out)
}

fn interval_text(i: &Interval<f64>) -> String {
    format!(
        "{}{}, {}{}",
        if i.lower_closed { '[' } else { '(' },
        fmt_sig(i.lower),
        fmt_sig(i.upper),
        if i.upper_closed { ']' } else { ')' }
    )
}

fn region_text(r: &Region<f64>, axis: RegionAxis) -> String {
    match &r.interval {
        Some(i) if axis == RegionAxis::AccessedNodes => {
            let ints = i.integers();
            let members = match (ints.first(), ints.last()) {
                (Some(a), Some(b)) => format!("r in {{{a}..{b}}}"),
                _ => "no integer r".to_string(),
            };
            format!("{}  threshold={}  {members}", interval_text(i), fmt_sig(r.threshold))
        }
        Some(i) => format!("{}  threshold={}", interval_text(i), fmt_sig(r.threshold)),
        None => format!("none  threshold={}", fmt_sig(r.threshold)),
    }
}

fn region_row(doc: &mut CsvDoc, name: &str, threshold: Option<f64>, i: Option<&Interval<f64>>) {
    let t = threshold.map(fmt_sig).unwrap_or_default();
    match i {
        Some(i) => doc.row([
            name.to_string(),
            "true".into(),
            t,
            fmt_sig(i.lower),
            fmt_sig(i.upper),
            i.lower_closed.to_string(),
            i.upper_closed.to_string(),
        ]),
        None => {
            doc.row([name.to_string(), "false".into(), t, String::new(), String::new(), String::new(), String::new()])
        }
    };
}

pub fn cmd_bounds(args: &BoundsArgs) -> CmdResult {
    let spec = args.config.spec()?;
    let m = spec.redundancy()?;
    let alpha = spec.alpha()?;
    let fixed_size = spec.access_kind()? == AccessKind::FixedSize;
    let service = spec.service_model();
    let nodes = if fixed_size { Some(spec.nodes()?) } else { spec.nodes };
    let report: RegionReport<f64> = regions(nodes, m, alpha, fixed_size, &service)?;
    let verification = if args.verify {
        if !(args.p_step > 0.0 && args.p_step <= 1.0) {
            return Err(Outcome::usage("p-step must lie in (0, 1]"));
        }
        let family = match nodes {
            Some(n) if fixed_size => RegionFamily::FixedSize { nodes: n, redundancy: m },
            _ => RegionFamily::Probabilistic { redundancy: m },
        };
        Some(verify_region(&report, family, &service, args.p_step)?)
    } else {
        None
    };
    let axis_name = match report.axis {
        RegionAxis::AccessedNodes => "r",
        RegionAxis::FailureProbability => "p",
    };
    let mut verify_lines = Vec::new();
    if let Some(v) = &verification {
        verify_lines.push(format!("verify: checked={} counterexamples={}", v.checked, v.counterexamples.len()));
        for c in &v.counterexamples {
            verify_lines.push(format!(
                "counterexample: region={:?} {axis_name}={} rate_alpha={} rate_one={}",
                c.side,
                fmt_sig(c.at),
                fmt_sig(c.rate_alpha),
                fmt_sig(c.rate_one)
            ));
        }
    }
    let text = match args.format {
        OutputFormat::Text => {
            let mut s = String::new();
            let _ = writeln!(s, "regions over {axis_name} for alpha={alpha}");
            let _ = writeln!(s, "domain: {}", interval_text(&report.domain));
            let _ = writeln!(s, "worse:  {}", region_text(&report.worse, report.axis));
            let _ = writeln!(s, "better: {}", region_text(&report.better, report.axis));
            let _ = match &report.gap {
                Some(g) => writeln!(s, "gap:    {}", interval_text(g)),
                None => writeln!(s, "gap:    none"),
            };
            for line in &verify_lines {
                let _ = writeln!(s, "{line}");
            }
            s
        }
        OutputFormat::Csv => {
            let mut doc =
                CsvDoc::new(&["region", "exists", "threshold", "lower", "upper", "lower_closed", "upper_closed"]);
            header(&mut doc, "bounds", &spec.render());
            doc.comment(format!("axis: {axis_name}"));
            region_row(&mut doc, "worse", Some(report.worse.threshold), report.worse.interval.as_ref());
            region_row(&mut doc, "better", Some(report.better.threshold), report.better.interval.as_ref());
            region_row(&mut doc, "gap", None, report.gap.as_ref());
            for line in verify_lines {
                doc.trailing_comment(line);
            }
            doc.render()
        }
    };
    emit(text, &args.out)
}

fn resolve_seed(flag: Option<u64>, env_seed: Option<&str>) -> Result<u64, Outcome> {
    match (flag, env_seed) {
        (Some(s), _) => Ok(s),
        (None, Some(text)) => text
            .trim()
            .parse()
            .map_err(|_| Outcome::usage(format!("{SEED_ENV} must be an unsigned integer, got {text:?}"))),
        (None, None) => Ok(DEFAULT_SEED),
    }
}

pub fn cmd_simulate(args: &SimulateArgs, env_seed: Option<&str>) -> CmdResult {
    let spec = args.config.spec()?;
    let config = spec.system_config()?;
    let access: AccessModel<f64> = spec.access_model()?;
    let service = spec.service_model();
    let seed = resolve_seed(args.seed, env_seed)?;
    let mut settings = SimulationSettings::new(args.trials, seed);
    if let Some(t) = args.threads {
        if t == 0 {
            return Err(Outcome::usage("threads must be at least 1"));
        }
        settings = settings.with_threads(t);
    }
    let analytic = dss_service_rate(&config, &access, &service)?;
    let estimate = simulate_dss(&config, &access, &service, &settings)?;
    let chi = chi_squared_test(&estimate.phi, &phi_distribution(&config, &access)?);

    let mut doc = CsvDoc::new(&["metric", "analytic", "simulated", "std_error", "z"]);
    header(&mut doc, "simulate", &spec.render());
    doc.comment(format!("seed: {seed}"));
    doc.comment(format!("trials: {}", args.trials));
    doc.comment(format!(
        "chi_squared: statistic={} dof={} critical={} passed={}",
        fmt_sig(chi.statistic),
        chi.degrees_of_freedom,
        fmt_sig(chi.critical_value),
        chi.passed
    ));
    doc.comment(format!("strata with fewer than {MIN_STRATUM_SAMPLES} samples are not compared"));

    let mut worst: f64 = 0.0;
    let mut metric = |doc: &mut CsvDoc, name: String, analytic: f64, value: f64, se: f64, z: f64| {
        worst = worst.max(z.abs());
        doc.row([name, fmt_sig(analytic), fmt_sig(value), fmt_sig(se), fmt_sig(z)]);
    };
    let r = &estimate.recovery;
    metric(
        &mut doc,
        "p_s".into(),
        analytic.recovery_probability,
        r.value,
        r.std_error,
        r.z_score(analytic.recovery_probability),
    );
    let r = &estimate.rate;
    metric(&mut doc, "mu_s".into(), analytic.service_rate, r.value, r.std_error, r.z_score(analytic.service_rate));
    for s in estimate.strata.iter().filter(|s| s.count >= MIN_STRATUM_SAMPLES) {
        let exact = expected_download_time(&service, config.alpha, s.phi)?;
        let est = crate::monte_carlo::Estimate { value: s.mean_time, std_error: s.std_error };
        metric(&mut doc, format!("T_phi={}", s.phi), exact, s.mean_time, s.std_error, est.z_score(exact));
    }

    let mut stderr = String::new();
    for w in &estimate.warnings {
        let _ = writeln!(
            stderr,
            "warning: stratum phi={} received {} samples (expected {})",
            w.phi,
            w.count,
            fmt_sig(w.expected_count)
        );
    }
    let code = if worst > Z_GATE {
        let _ = writeln!(stderr, "oracle disagreement: max |z| = {} exceeds {Z_GATE}", fmt_sig(worst));
        EXIT_DISAGREEMENT
    } else {
        EXIT_OK
    };
    let mut outcome = emit(doc.render(), &args.out)?;
    outcome.code = code;
    outcome.stderr = stderr;
    Ok(outcome)
}

pub fn cmd_sweep(args: &SweepArgs) -> CmdResult {
    let mut spec = args.config.spec()?;
    spec.alpha = None;
    let access = spec.access_model()?;
    let service = spec.service_model();
    let table = sweep_alpha(spec.nodes()?, spec.redundancy()?, &access, &service)?;
    let opt = optimal_alpha(&table)?;
    let mut doc = CsvDoc::new(&["alpha", "mu_s", "p_s"]);
    header(&mut doc, "sweep", &spec.render());
    for row in &table.rows {
        doc.row([row.alpha.to_string(), fmt_sig(row.service_rate), fmt_sig(row.recovery_probability)]);
    }
    let frontier: Vec<String> = tradeoff_frontier(&table).iter().map(|r| r.alpha.to_string()).collect();
    doc.trailing_comment(format!("frontier alpha={}", frontier.join(",")));
    doc.trailing_comment(format!(
        "optimum alpha_star_rate={} alpha_star_recovery={}",
        opt.alpha_star_rate, opt.alpha_star_recovery
    ));
    emit(doc.render(), &args.out)
}

pub fn cmd_figures(args: &FiguresArgs) -> CmdResult {
    let id: FigureId = args.id.parse().map_err(Outcome::usage)?;
    let paths = write_figure(id, &args.out).map_err(Outcome::usage)?;
    let mut s = String::new();
    for p in paths {
        let _ = writeln!(s, "wrote {}", p.display());
    }
    Ok(Outcome::ok(s))
}
