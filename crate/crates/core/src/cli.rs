//! Command-line front end: config parsing, dispatch and file output.
//!
//! The `nsgd-lab` binary is a thin wrapper around [`main_with_args`].

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::bounds::{
    measure_gap_lb, rate_tuned, rate_tuned_hp, rate_nsgdm_param_free, rate_nsgdm_tuned, rate_general,
    sample_complexity_table, tstar_deterministic, ComplexityPreset, ProblemParams, StepSequence,
    DEFAULT_TSTAR_CAP,
};
use crate::checks::{run_suite, CheckReport, Suite};
use crate::error::{Error, Result};
use crate::experiments::{
    clip_fraction_study, grid_search, measure_gap_experiment, quantile_curve, run_trials, slope_profile,
    write_measure_gap_csv, ExpectationResult, ExperimentConfig, GridSpec, OptimizerChoice, PresetSpec, SlopeVote,
    Statistic,
};
use crate::noise::{OracleSpec, NoiseSpec, AdditiveOracle};
use crate::optimizers::{run_trajectory, write_trajectory_rows, OptimizerSpec, RunOptions, UpdateRule, TRAJECTORY_COLUMNS};
use crate::output::{fmt_float, sha256_hex, CsvOut};
use crate::problems::{make_hard_deterministic, HardInstanceSpec, ProblemSpec};
use crate::schedules::{BatchSchedule, ClipSchedule, MomentumSchedule, StepSchedule};

/// Current config schema version.
pub const CONFIG_VERSION: u32 = 1;

/// Exit code for malformed or inconsistent configs and arguments.
pub const EXIT_CONFIG: i32 = 2;
/// Exit code for failed checks and runtime errors.
pub const EXIT_FAILURE: i32 = 1;

/// Top level of an experiment config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub version: u32,
    pub problem: ProblemSpec,
    pub oracle: OracleSpec,
    pub optimizer: OptimizerSection,
    pub run: RunSection,
    #[serde(default)]
    pub grid: Option<GridSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleName {
    Sgd,
    Nsgd,
    ClipSgd,
}

/// `[optimizer]`: a rule plus either explicit schedules or a preset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerSection {
    pub rule: RuleName,
    #[serde(default)]
    pub step: Option<StepSchedule>,
    #[serde(default)]
    pub batch: Option<BatchSchedule>,
    #[serde(default)]
    pub momentum: Option<MomentumSchedule>,
    /// Required by `clip_sgd`, rejected otherwise.
    #[serde(default)]
    pub clip: Option<ClipSchedule>,
    #[serde(default)]
    pub preset: Option<PresetSpec>,
}

impl OptimizerSection {
    pub fn to_choice(&self) -> Result<OptimizerChoice> {
        let rule = match (self.rule, self.clip) {
            (RuleName::ClipSgd, Some(clip)) => UpdateRule::ClipSgd { clip },
            (RuleName::ClipSgd, None) => return config_err("rule `clip_sgd` needs a `clip` schedule"),
            (_, Some(_)) => return config_err("`clip` is only valid with rule `clip_sgd`"),
            (RuleName::Sgd, None) => UpdateRule::Sgd,
            (RuleName::Nsgd, None) => UpdateRule::Nsgd,
        };
        if let Some(preset) = self.preset {
            if self.step.is_some() || self.batch.is_some() || self.momentum.is_some() {
                return config_err("`preset` replaces `step`, `batch` and `momentum`; give one or the other");
            }
            return Ok(OptimizerChoice::Preset { rule, preset });
        }
        let Some(step) = self.step else {
            return config_err("[optimizer] needs `step` or `preset`");
        };
        let spec = OptimizerSpec::new(rule, step);
        let spec = match (self.batch, self.momentum) {
            (Some(_), Some(_)) => return config_err("give `batch` or `momentum`, not both"),
            (Some(b), None) => spec.with_batch(b),
            (None, Some(m)) => spec.with_momentum(m),
            (None, None) => spec,
        };
        Ok(OptimizerChoice::Explicit(spec))
    }
}

/// `[run]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub horizon: u64,
    #[serde(default = "one")]
    pub trials: u64,
    #[serde(default)]
    pub statistic: Statistic,
    /// Worker threads; 0 uses all cores. `--jobs` overrides it.
    #[serde(default)]
    pub jobs: usize,
    #[serde(default = "default_divergence_bound")]
    pub divergence_bound: f64,
    /// Write per-iteration records to `trajectories.csv` (`run` only).
    #[serde(default)]
    pub write_trajectories: bool,
    #[serde(default = "one_usize")]
    pub trajectory_stride: usize,
}

fn one() -> u64 {
    1
}

fn one_usize() -> usize {
    1
}

fn default_divergence_bound() -> f64 {
    RunOptions::default().divergence_bound
}

fn config_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}

/// A parsed config together with the hash of its text.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub file: ConfigFile,
    pub hash: String,
}

impl LoadedConfig {
    /// Parses and validates config text. Every failure is [`Error::Config`].
    pub fn parse(text: &str) -> Result<Self> {
        let file: ConfigFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if file.version != CONFIG_VERSION {
            return config_err(format!(
                "unsupported config version {}, this build reads version {CONFIG_VERSION}",
                file.version
            ));
        }
        if file.run.trajectory_stride == 0 {
            return config_err("[run] trajectory_stride must be at least 1");
        }
        let loaded = Self {
            hash: sha256_hex(text),
            file,
        };
        // Build everything once so semantic errors surface as config errors.
        loaded
            .experiment(0, None)?
            .prepare()
            .map_err(|e| Error::Config(e.to_string()))?;
        Ok(loaded)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// The experiment described by the config, with the given seed and an
    /// optional `--jobs` override.
    pub fn experiment(&self, seed: u64, jobs: Option<usize>) -> Result<ExperimentConfig> {
        let f = &self.file;
        let mut config = ExperimentConfig::new(
            f.problem.clone(),
            f.oracle,
            f.optimizer.to_choice()?,
            f.run.horizon,
            f.run.trials,
            seed,
        )
        .with_statistic(f.run.statistic)
        .with_jobs(jobs.unwrap_or(f.run.jobs));
        config.divergence_bound = f.run.divergence_bound;
        Ok(config)
    }
}

/// Summary written next to every command's outputs as `manifest.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config_hash: String,
    pub seed: Option<u64>,
    pub version: String,
    pub outputs: Vec<String>,
    pub wall_clock_seconds: f64,
    pub diverged: u64,
    #[serde(default)]
    pub slope_class: Option<String>,
    #[serde(default)]
    pub slopes: Option<Vec<f64>>,
}

struct Session {
    command: &'static str,
    out_dir: PathBuf,
    hash: String,
    seed: Option<u64>,
    started: Instant,
    outputs: Vec<String>,
}

impl Session {
    fn new(command: &'static str, out_dir: &Path, hash: String, seed: Option<u64>, started: Instant) -> Result<Self> {
        fs::create_dir_all(out_dir)?;
        Ok(Self {
            command,
            out_dir: out_dir.to_path_buf(),
            hash,
            seed,
            started,
            outputs: Vec::new(),
        })
    }

    fn file(&mut self, name: &str) -> Result<fs::File> {
        self.outputs.push(name.to_string());
        Ok(fs::File::create(self.out_dir.join(name))?)
    }

    fn csv(&mut self, name: &str, header: &[&str]) -> Result<CsvOut<std::io::BufWriter<fs::File>>> {
        self.outputs.push(name.to_string());
        CsvOut::create(&self.out_dir.join(name), &self.hash, header)
    }

    fn finish(self, diverged: u64, slopes: Option<(String, Vec<f64>)>) -> Result<RunManifest> {
        let (slope_class, slopes) = match slopes {
            Some((c, s)) => (Some(c), Some(s)),
            None => (None, None),
        };
        let manifest = RunManifest {
            command: self.command.to_string(),
            config_hash: self.hash,
            seed: self.seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            outputs: self.outputs,
            wall_clock_seconds: self.started.elapsed().as_secs_f64(),
            diverged,
            slope_class,
            slopes,
        };
        let json = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Io(e.to_string()))?;
        fs::write(self.out_dir.join("manifest.json"), json + "\n")?;
        Ok(manifest)
    }
}

#[derive(Debug, Parser)]
#[command(name = "nsgd-lab", version, about = "Normalized SGD under heavy-tailed noise: experiments, bounds and checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Monte-Carlo estimate of the configured statistic.
    Run(McArgs),
    /// Empirical quantile curve and its slope classification.
    Quantile {
        #[command(flatten)]
        mc: McArgs,
        /// Failure probabilities, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "0.5,0.1,0.01,0.001")]
        deltas: Vec<f64>,
    },
    /// Clipping frequency per window of iterations (rule `clip_sgd`).
    Clipfrac {
        #[command(flatten)]
        mc: McArgs,
        /// Window length; defaults to a tenth of the horizon.
        #[arg(long)]
        window: Option<u64>,
    },
    /// Grid search over the `[grid]` section of the config.
    Grid(McArgs),
    /// Closed-form rates, T* and sample complexities.
    Bounds(BoundsArgs),
    /// Executable lemma checks; exits 1 if any fails.
    Verify(VerifyArgs),
    /// Zero-noise NSGD on ½x² across horizons.
    MeasureGap(MeasureGapArgs),
    /// Normalized gradient descent on the one-dimensional hard instance.
    HardInstance(HardInstanceArgs),
}

#[derive(Debug, Args)]
pub struct OutArgs {
    /// Output directory.
    #[arg(long, env = "NSGD_LAB_OUT", default_value = "nsgd-lab-out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct McArgs {
    /// Experiment config (TOML).
    pub config: PathBuf,
    #[command(flatten)]
    pub out: OutArgs,
    /// Base seed; trial i uses stream i of this seed.
    #[arg(long)]
    pub seed: u64,
    /// Worker threads (0 = all cores); overrides `[run] jobs`.
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
pub struct BoundsArgs {
    #[arg(long, default_value_t = 1.0)]
    pub delta1: f64,
    #[arg(long, default_value_t = 1.0)]
    pub smoothness: f64,
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    /// Tail index p in (1, 2].
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    #[arg(long, default_value_t = 100)]
    pub horizon: u64,
    /// Target accuracy for complexities and T*.
    #[arg(long, default_value_t = 0.1)]
    pub eps: f64,
    /// Failure probability for high-probability rates.
    #[arg(long, default_value_t = 0.1)]
    pub delta_fail: f64,
    /// Step scale for the parameter-free and general rates, and the
    /// constant step of the T* scan.
    #[arg(long, default_value_t = 0.1)]
    pub eta: f64,
    /// Step decay exponent for the general rate.
    #[arg(long, default_value_t = 0.5)]
    pub r: f64,
    /// Batch-size exponent for the general rate.
    #[arg(long, default_value_t = 1.0)]
    pub q: f64,
    #[serde(skip)]
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, default_value = "all", value_parser = clap::builder::PossibleValuesParser::new(Suite::NAMES))]
    pub suite: String,
    #[arg(long)]
    pub seed: u64,
    /// Monte-Carlo samples per statistical check.
    #[arg(long, default_value_t = 20_000)]
    pub mc: u64,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct MeasureGapArgs {
    #[arg(long, default_value_t = 1.0)]
    pub x1: f64,
    #[arg(long, value_delimiter = ',', default_value = "100,400,1600")]
    pub horizons: Vec<u64>,
    #[serde(skip)]
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct HardInstanceArgs {
    #[arg(long, default_value_t = 0.1)]
    pub eps: f64,
    /// Constant step η̄.
    #[arg(long, default_value_t = 0.1)]
    pub step: f64,
    #[arg(long, default_value_t = 1.0)]
    pub delta1: f64,
    #[arg(long, default_value_t = 1.0)]
    pub smoothness: f64,
    /// Extra iterations simulated past T*.
    #[arg(long, default_value_t = 5)]
    pub extra: u64,
    #[serde(skip)]
    #[command(flatten)]
    pub out: OutArgs,
}

fn args_hash<T: Serialize>(command: &str, args: &T) -> String {
    sha256_hex(&format!("{command}:{}", serde_json::to_string(args).expect("plain argument struct")))
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code. Messages go to `stdout` and `stderr`.
pub fn main_with_args<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let rendered = e.render().to_string();
            let _ = if code == 0 {
                write!(stdout, "{rendered}")
            } else {
                write!(stderr, "{rendered}")
            };
            return code;
        }
    };
    match dispatch(cli.command, stdout) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            match e {
                Error::Config(_) => EXIT_CONFIG,
                _ => EXIT_FAILURE,
            }
        }
    }
}

fn dispatch(command: Command, stdout: &mut dyn Write) -> Result<i32> {
    match command {
        Command::Run(mc) => cmd_run(&mc, stdout),
        Command::Quantile { mc, deltas } => cmd_quantile(&mc, &deltas, stdout),
        Command::Clipfrac { mc, window } => cmd_clipfrac(&mc, window, stdout),
        Command::Grid(mc) => cmd_grid(&mc, stdout),
        Command::Bounds(args) => cmd_bounds(&args, stdout),
        Command::Verify(args) => cmd_verify(&args, stdout),
        Command::MeasureGap(args) => cmd_measure_gap(&args, stdout),
        Command::HardInstance(args) => cmd_hard_instance(&args, stdout),
    }
}

fn load(mc: &McArgs) -> Result<(LoadedConfig, ExperimentConfig)> {
    let loaded = LoadedConfig::load(&mc.config)?;
    let config = loaded.experiment(mc.seed, mc.jobs)?;
    Ok((loaded, config))
}

pub fn cmd_run(mc: &McArgs, stdout: &mut dyn Write) -> Result<i32> {
    let started = Instant::now();
    let (loaded, config) = load(mc)?;
    let run = &loaded.file.run;
    let stride = if run.write_trajectories { run.trajectory_stride } else { 0 };
    let stat = config.statistic;
    let results = run_trials(&config, stride, |_, t| {
        let v = if t.diverged { f64::INFINITY } else { stat.of(&t.summary) };
        (v, t.records)
    })?;
    let values: Vec<f64> = results.iter().map(|(v, _)| *v).collect();
    let res = ExpectationResult::from_values(stat, &values);

    let mut session = Session::new("run", &mc.out.out, loaded.hash.clone(), Some(mc.seed), started)?;
    res.write_csv(session.file("expectation.csv")?, &loaded.hash)?;
    if run.write_trajectories {
        let mut out = session.csv("trajectories.csv", &TRAJECTORY_COLUMNS)?;
        for (trial, (_, records)) in results.iter().enumerate() {
            write_trajectory_rows(&mut out, trial as u64, records)?;
        }
        out.finish()?;
    }
    writeln!(
        stdout,
        "{} mean={} std_error={} completed={}/{} diverged={}",
        stat.name(),
        fmt_float(res.mean),
        res.std_error.map(fmt_float).unwrap_or_else(|| "n/a".into()),
        res.completed,
        res.trials,
        res.diverged
    )?;
    session.finish(res.diverged, None)?;
    Ok(0)
}

pub fn cmd_quantile(mc: &McArgs, deltas: &[f64], stdout: &mut dyn Write) -> Result<i32> {
    let started = Instant::now();
    let (loaded, config) = load(mc)?;
    let table = quantile_curve(&config, deltas)?;
    let profile = slope_profile(&table, &SlopeVote::default())?;
    let diverged = table.sorted.iter().filter(|v| v.is_infinite()).count() as u64;

    let mut session = Session::new("quantile", &mc.out.out, loaded.hash.clone(), Some(mc.seed), started)?;
    table.write_csv(session.file("quantiles.csv")?, &loaded.hash)?;
    for row in &table.rows {
        writeln!(
            stdout,
            "delta={} quantile={} stable={}",
            row.delta,
            fmt_float(row.quantile),
            row.stable
        )?;
    }
    writeln!(stdout, "slope_class={}", profile.class.name())?;
    session.finish(diverged, Some((profile.class.name().to_string(), profile.slopes)))?;
    Ok(0)
}

pub fn cmd_clipfrac(mc: &McArgs, window: Option<u64>, stdout: &mut dyn Write) -> Result<i32> {
    let started = Instant::now();
    let (loaded, config) = load(mc)?;
    let window = window.unwrap_or((config.horizon / 10).max(1));
    let table = clip_fraction_study(&config, window)?;
    let mut session = Session::new("clipfrac", &mc.out.out, loaded.hash.clone(), Some(mc.seed), started)?;
    table.write_csv(session.file("clipfrac.csv")?, &loaded.hash)?;
    if let Some(last) = table.windows.last() {
        writeln!(
            stdout,
            "final window {}..={}: clip_fraction={}",
            last.start,
            last.end,
            fmt_float(last.clip_fraction)
        )?;
    }
    session.finish(table.diverged, None)?;
    Ok(0)
}

pub fn cmd_grid(mc: &McArgs, stdout: &mut dyn Write) -> Result<i32> {
    let started = Instant::now();
    let (loaded, config) = load(mc)?;
    let Some(grid) = loaded.file.grid.clone() else {
        return config_err("the grid command needs a [grid] section");
    };
    let result = grid_search(&config, &grid).map_err(|e| match e {
        Error::InvalidArgument(m) => Error::Config(m),
        other => other,
    })?;
    let mut session = Session::new("grid", &mc.out.out, loaded.hash.clone(), Some(mc.seed), started)?;
    result.write_csv(session.file("grid.csv")?, &loaded.hash)?;
    let b = &result.best;
    writeln!(
        stdout,
        "best eta={} r={} gamma={} score={}",
        b.eta,
        b.r,
        b.gamma.map(|g| g.to_string()).unwrap_or_else(|| "-".into()),
        fmt_float(b.score)
    )?;
    let diverged = result.cells.iter().map(|c| c.diverged).sum();
    session.finish(diverged, None)?;
    Ok(0)
}

pub fn cmd_bounds(args: &BoundsArgs, stdout: &mut dyn Write) -> Result<i32> {
    let started = Instant::now();
    let params = ProblemParams::new(args.delta1, args.smoothness, args.sigma, args.p, args.horizon)
        .with_eps(args.eps)
        .with_delta_fail(args.delta_fail);
    params.validate().map_err(|e| Error::Config(e.to_string()))?;

    let mut rows: Vec<(String, f64)> = vec![
        ("rate_tuned".into(), rate_tuned(&params)),
        ("rate_tuned_hp".into(), rate_tuned_hp(&params)?),
        ("rate_general".into(), rate_general(&params, args.eta, args.r, 1.0, args.q)?),
        ("rate_nsgdm_tuned".into(), rate_nsgdm_tuned(&params)?),
        ("rate_nsgdm_param_free".into(), rate_nsgdm_param_free(&params, args.eta)?),
    ];
    if let Ok(lb) = measure_gap_lb(args.delta1, args.smoothness, args.horizon) {
        rows.push(("measure_gap_lb".into(), lb));
    }
    match tstar_deterministic(
        args.eps,
        args.delta1,
        args.smoothness,
        &StepSequence::Constant { eta: args.eta },
        DEFAULT_TSTAR_CAP,
    ) {
        Ok(t) => rows.push(("tstar_constant_step".into(), t as f64)),
        Err(Error::Precondition(_)) | Err(Error::HorizonTooLarge { .. }) => {}
        Err(e) => return Err(e),
    }

    let presets = [
        ComplexityPreset::ParamFree,
        ComplexityPreset::Tuned,
        ComplexityPreset::General { r: args.r, q: args.q },
        ComplexityPreset::FirstOrderLowerBound,
        ComplexityPreset::NsgdLowerBoundSimplified { r: args.r, q: args.q },
        ComplexityPreset::ClipSgdExpectation,
        ComplexityPreset::ClipSgdHighProb,
    ];
    let table = sample_complexity_table(&params, &presets)?;

    let hash = args_hash("bounds", args);
    let mut session = Session::new("bounds", &args.out.out, hash.clone(), None, started)?;
    let mut out = session.csv("bounds.csv", &["quantity", "value"])?;
    for (name, v) in &rows {
        out.row(&[name.clone(), fmt_float(*v)])?;
        writeln!(stdout, "{name:<26} {}", fmt_float(*v))?;
    }
    out.finish()?;
    let mut out = session.csv("complexity.csv", &["label", "value", "eps_exponents", "combine"])?;
    for r in &table {
        let exps: Vec<String> = r.eps_exponents.iter().map(|e| fmt_float(*e)).collect();
        let combine = if r.is_max { "max" } else { "sum" };
        out.row(&[r.label.clone(), fmt_float(r.value), exps.join(";"), combine.to_string()])?;
        writeln!(stdout, "{:<26} {} eps^-[{}] ({combine})", r.label, fmt_float(r.value), exps.join(", "))?;
    }
    out.finish()?;
    session.finish(0, None)?;
    Ok(0)
}

pub const VERIFY_COLUMNS: [&str; 6] = ["name", "passed", "observed", "bound", "tolerance", "samples"];

pub fn cmd_verify(args: &VerifyArgs, stdout: &mut dyn Write) -> Result<i32> {
    let started = Instant::now();
    let suite: Suite = args.suite.parse().map_err(Error::Config)?;
    let reports = run_suite(suite, args.seed, args.mc)?;
    let hash = sha256_hex(&format!("verify:{}:{}", args.suite, args.mc));
    let mut session = Session::new("verify", &args.out.out, hash, Some(args.seed), started)?;
    let mut out = session.csv("verify.csv", &VERIFY_COLUMNS)?;
    print_reports(&reports, stdout)?;
    for r in &reports {
        out.row(&[
            r.name.clone(),
            r.passed.to_string(),
            fmt_float(r.observed),
            fmt_float(r.bound),
            fmt_float(r.tolerance),
            r.samples.to_string(),
        ])?;
    }
    out.finish()?;
    session.finish(0, None)?;
    let failed = reports.iter().filter(|r| !r.passed).count();
    writeln!(stdout, "{} checks, {failed} failed", reports.len())?;
    Ok(if failed == 0 { 0 } else { EXIT_FAILURE })
}

fn print_reports(reports: &[CheckReport], stdout: &mut dyn Write) -> Result<()> {
    let width = reports.iter().map(|r| r.name.len()).max().unwrap_or(4).max(4);
    writeln!(stdout, "{:<width$}  {:<4}  {:>24}  {:>24}  {:>24}", "name", "ok", "observed", "bound", "tolerance")?;
    for r in reports {
        writeln!(
            stdout,
            "{:<width$}  {:<4}  {:>24}  {:>24}  {:>24}",
            r.name,
            if r.passed { "pass" } else { "FAIL" },
            fmt_float(r.observed),
            fmt_float(r.bound),
            fmt_float(r.tolerance)
        )?;
    }
    Ok(())
}

pub fn cmd_measure_gap(args: &MeasureGapArgs, stdout: &mut dyn Write) -> Result<i32> {
    let started = Instant::now();
    let rows = measure_gap_experiment(args.x1, &args.horizons).map_err(|e| match e {
        Error::InvalidArgument(m) | Error::ConstructionInvalid(m) => Error::Config(m),
        other => other,
    })?;
    let hash = args_hash("measure-gap", args);
    let mut session = Session::new("measure-gap", &args.out.out, hash.clone(), None, started)?;
    write_measure_gap_csv(&rows, session.file("measure_gap.csv")?, &hash)?;
    for r in &rows {
        writeln!(
            stdout,
            "T={} avg={} rms={} ratio={}",
            r.horizon,
            fmt_float(r.avg_grad_norm),
            fmt_float(r.rms_grad_norm),
            fmt_float(r.rms_grad_norm / r.avg_grad_norm)
        )?;
    }
    session.finish(0, None)?;
    Ok(0)
}

pub const HARD_INSTANCE_COLUMNS: [&str; 4] = ["t", "x", "loss", "grad_abs"];

pub fn cmd_hard_instance(args: &HardInstanceArgs, stdout: &mut dyn Write) -> Result<i32> {
    let started = Instant::now();
    let spec = HardInstanceSpec {
        eps: args.eps,
        step: args.step,
        delta1: args.delta1,
        smoothness: args.smoothness,
        horizon_cap: DEFAULT_TSTAR_CAP,
    };
    let problem = make_hard_deterministic(&spec).map_err(|e| Error::Config(e.to_string()))?;
    let hard = *problem.hard_instance().expect("hard instance");
    let horizon = hard.tstar + args.extra;
    let oracle = AdditiveOracle::new(problem.clone(), NoiseSpec::none());
    let opt = OptimizerSpec::nsgd(StepSchedule::Constant { eta: args.step });
    let options = RunOptions {
        store_iterates: true,
        ..RunOptions::default()
    };
    let traj = run_trajectory(&problem, &oracle, &opt, horizon, &mut crate::trial_rng(0, 0), &options)?;

    let hash = args_hash("hard-instance", args);
    let mut session = Session::new("hard-instance", &args.out.out, hash, None, started)?;
    let mut out = session.csv("hard_instance.csv", &HARD_INSTANCE_COLUMNS)?;
    for r in &traj.records {
        let x = r.x.as_ref().map(|x| x[0]).unwrap_or(f64::NAN);
        out.row(&[r.t.to_string(), fmt_float(x), fmt_float(r.loss), fmt_float(r.grad_norm)])?;
    }
    out.finish()?;
    let min_before = traj
        .records
        .iter()
        .take_while(|r| r.t <= hard.tstar)
        .map(|r| r.grad_norm)
        .fold(f64::INFINITY, f64::min);
    writeln!(stdout, "tstar={}", hard.tstar)?;
    writeln!(stdout, "f_star={}", fmt_float(problem.f_star))?;
    writeln!(stdout, "min grad_abs for t<=tstar: {}", fmt_float(min_before))?;
    session.finish(0, None)?;
    Ok(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
version = 1

[problem]
kind = "quadratic"
dim = 2

[oracle]
kind = "gaussian"
scale = 0.1

[optimizer]
rule = "nsgd"
step = { form = "constant", eta = 0.1 }

[run]
horizon = 10
trials = 4
"#;

    #[test]
    fn minimal_config_parses() {
        let c = LoadedConfig::parse(MINIMAL).unwrap();
        assert_eq!(c.file.run.trials, 4);
        assert_eq!(c.file.run.statistic, Statistic::AvgGradNorm);
        assert_eq!(c.hash, sha256_hex(MINIMAL));
        let exp = c.experiment(5, Some(2)).unwrap();
        assert_eq!((exp.seed, exp.jobs), (5, 2));
    }

    #[test]
    fn bad_configs_are_config_errors() {
        let cases = [
            MINIMAL.replace("rule = \"nsgd\"", "rule = \"adam\""),
            MINIMAL.replace("version = 1", "version = 2"),
            MINIMAL.replace("trials = 4", "trials = 4\nbogus = 1"),
            MINIMAL.replace("dim = 2", "dim = 2\ncolor = \"red\""),
            MINIMAL.replace("rule = \"nsgd\"", "rule = \"clip_sgd\""),
            MINIMAL.replace("scale = 0.1", "scale = -1.0"),
            MINIMAL.replace("horizon = 10", "horizon = 0"),
            MINIMAL.replace(
                "step = { form = \"constant\", eta = 0.1 }",
                "step = { form = \"constant\", eta = 0.1 }\npreset = { preset = \"param_free\", eta = 1.0, batch = 1.0 }",
            ),
        ];
        for text in cases {
            assert!(matches!(LoadedConfig::parse(&text), Err(Error::Config(_))), "{text}");
        }
    }

    #[test]
    fn unknown_rule_error_names_the_line() {
        let text = MINIMAL.replace("rule = \"nsgd\"", "rule = \"adam\"");
        let Err(Error::Config(msg)) = LoadedConfig::parse(&text) else {
            panic!()
        };
        assert!(msg.contains("line 13"), "{msg}");
    }

    #[test]
    fn preset_config_resolves() {
        let text = MINIMAL.replace(
            "step = { form = \"constant\", eta = 0.1 }",
            "preset = { preset = \"tuned_minibatch\", p = 2.0 }",
        );
        let c = LoadedConfig::parse(&text).unwrap();
        let prepared = c.experiment(0, None).unwrap().prepare().unwrap();
        assert!(matches!(prepared.spec.step, StepSchedule::Constant { .. }));
    }

    #[test]
    fn help_exits_zero() {
        let (mut o, mut e) = (Vec::new(), Vec::new());
        assert_eq!(main_with_args(["nsgd-lab", "--help"], &mut o, &mut e), 0);
        assert!(String::from_utf8(o).unwrap().contains("verify"));
        assert_eq!(main_with_args(["nsgd-lab", "run"], &mut Vec::new(), &mut e), EXIT_CONFIG);
    }
}
