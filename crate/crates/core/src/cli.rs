//! The `walrasian` command-line harness.
//!
//! Every run is described by a [`RunConfig`], built either from flags or from
//! a JSON file (`--config`). The config is echoed into the JSON report, and a
//! report can itself be passed back to `--config` to replay the run.
//!
//! Exit codes: 0 when the certificate passes `--eps`, 2 when the horizon runs
//! out first, 1 on any error.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::economy::{EconomySpec, ExcessDemand, ExchangeEconomy, ScarfEconomy};
use crate::error::{Error, Result};
use crate::gen::{self, GenSpec, Mix, UtilityKind};
use crate::kernels::{FeasibleSet, Kernel};
use crate::linalg::norm2;
use crate::tatonnement::{self, PriceRun, StepSize, TatonnementConfig};
use crate::vi::{self, Method, RunTrace, SolverConfig, ViProblem};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_NOT_CONVERGED: i32 = 2;

pub const TRACE_HEADER: &str = "iter,gap,feas_violation,walras_residual,breg_progress,pathwise_L,elapsed_s";
pub const SWEEP_HEADER: &str = "seed,n_consumers,n_goods,converged,iters_to_eps,pathwise_L_max";

/// Lower bound of the Scarf box price space `[0.1, 1]^3`.
pub const SCARF_BOX_LOWER: f64 = 0.1;
pub const SCARF_START: [f64; 3] = [0.5, 0.3, 0.2];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum CommandKind {
    Scarf,
    Economy,
    ViExample,
    Sweep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Space {
    Box,
    Simplex,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum KernelChoice {
    Euclidean,
    Entropy,
}

impl KernelChoice {
    pub fn kernel(self) -> Kernel {
        match self {
            KernelChoice::Euclidean => Kernel::euclidean(),
            KernelChoice::Entropy => Kernel::entropy(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum MethodChoice {
    Extragradient,
    Gradient,
}

impl From<MethodChoice> for Method {
    fn from(m: MethodChoice) -> Self {
        match m {
            MethodChoice::Extragradient => Method::Extragradient,
            MethodChoice::Gradient => Method::Gradient,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ViExample {
    Rotation,
    ScalarNonminty,
}

/// A step size: a positive number or `"auto"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Eta {
    Value(f64),
    Auto,
}

impl Serialize for Eta {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Eta::Value(v) => s.serialize_f64(*v),
            Eta::Auto => s.serialize_str("auto"),
        }
    }
}

impl<'de> Deserialize<'de> for Eta {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match serde_json::Value::deserialize(d)? {
            serde_json::Value::Number(n) => {
                n.as_f64().map(Eta::Value).ok_or_else(|| serde::de::Error::custom("bad eta"))
            }
            serde_json::Value::String(s) => s.parse().map_err(serde::de::Error::custom),
            other => Err(serde::de::Error::custom(format!("eta must be a number or \"auto\", got {other}"))),
        }
    }
}

impl std::str::FromStr for Eta {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(Eta::Auto);
        }
        s.parse::<f64>().map(Eta::Value).map_err(|_| format!("expected a number or \"auto\", got {s:?}"))
    }
}

impl Eta {
    fn step(self) -> StepSize {
        match self {
            Eta::Value(v) => StepSize::Fixed(v),
            Eta::Auto => StepSize::Auto,
        }
    }
}

/// Fully resolved description of one invocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: CommandKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub example: Option<ViExample>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub economy_file: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<GenSpec>,
    pub space: Space,
    pub kernel: KernelChoice,
    pub method: MethodChoice,
    pub eta: Eta,
    pub horizon: usize,
    pub eps: f64,
    #[serde(default)]
    pub stop_gap: Option<f64>,
    #[serde(default = "one")]
    pub record_every: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<(f64, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seeds: Option<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
}

fn one() -> usize {
    1
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::InvalidInput("--iters must be at least 1".into()));
        }
        if self.record_every == 0 {
            return Err(Error::InvalidInput("--record-every must be at least 1".into()));
        }
        if !(self.eps >= 0.0) {
            return Err(Error::InvalidInput(format!("--eps must be nonnegative, got {}", self.eps)));
        }
        if let Eta::Value(v) = self.eta {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidInput(format!("--eta must be positive, got {v}")));
            }
        }
        match self.command {
            CommandKind::ViExample if self.example.is_none() => {
                return Err(Error::InvalidInput("vi-example needs an example name".into()))
            }
            CommandKind::Economy if self.economy_file.is_some() == self.generator.is_some() => {
                return Err(Error::InvalidInput(
                    "economy needs exactly one source: --economy-file or generator flags".into(),
                ))
            }
            CommandKind::Sweep => {
                if self.generator.is_none() {
                    return Err(Error::InvalidInput("sweep needs generator flags".into()));
                }
                if self.seeds.as_ref().is_none_or(|s| s.is_empty()) {
                    return Err(Error::InvalidInput("sweep needs at least one seed".into()));
                }
            }
            _ => {}
        }
        Ok(())
    }
}

#[derive(Debug, Parser)]
#[command(name = "walrasian", version, about = "Mirror extragradient and extratatonnement runs")]
pub struct Cli {
    /// Run the configuration stored in a JSON file (a run config or a report
    /// with `config_echo`).
    #[arg(long, global = false)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Price adjustment in the three-good Scarf economy.
    Scarf(RunArgs),
    /// Price adjustment in an exchange economy from a file or the generator.
    Economy {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        economy_file: Option<PathBuf>,
        #[command(flatten)]
        gen: GenArgs,
    },
    /// Two-dimensional and scalar counterexample VIs.
    ViExample {
        example: ViExample,
        #[command(flatten)]
        run: RunArgs,
        /// Starting point, comma separated.
        #[arg(long, value_delimiter = ',')]
        x0: Option<Vec<f64>>,
        /// Box bounds `lo,hi` applied to every coordinate.
        #[arg(long, value_delimiter = ',', num_args = 2)]
        bounds: Option<Vec<f64>>,
    },
    /// One generated economy per seed, run independently.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        gen: GenArgs,
        /// Comma separated seeds.
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        seeds: Vec<u64>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[arg(long, value_enum)]
    pub space: Option<Space>,
    #[arg(long, value_enum, default_value = "euclidean")]
    pub kernel: KernelChoice,
    #[arg(long, value_enum, default_value = "extragradient")]
    pub method: MethodChoice,
    /// Step size or `auto`.
    #[arg(long, default_value = "auto")]
    pub eta: Eta,
    #[arg(long, default_value_t = 5000)]
    pub iters: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub eps: f64,
    #[arg(long)]
    pub stop_gap: Option<f64>,
    #[arg(long, default_value_t = 1)]
    pub record_every: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Initial prices, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub p0: Option<Vec<f64>>,
    /// CSV trace output path.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// JSON report output path.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct GenArgs {
    #[arg(long)]
    pub n_consumers: Option<usize>,
    #[arg(long)]
    pub n_goods: Option<usize>,
    /// A kind name (`cobb_douglas`, `leontief`, `ces_substitutes`,
    /// `ces_complements`), `uniform`, or `kind=share` pairs.
    #[arg(long, default_value = "uniform")]
    pub mix: String,
    #[arg(long, default_value_t = gen::DEFAULT_SUPPLY_TOTAL)]
    pub supply_total: f64,
}

pub fn parse_mix(s: &str) -> Result<Mix> {
    let kind = |name: &str| -> Result<UtilityKind> {
        serde_json::from_value(serde_json::Value::String(name.trim().to_string()))
            .map_err(|_| Error::InvalidInput(format!("unknown utility kind {name:?}")))
    };
    if s.trim() == "uniform" {
        return Ok(Mix::uniform());
    }
    if !s.contains('=') {
        return Ok(Mix::only(kind(s)?));
    }
    let mut mix = Mix { cobb_douglas: 0.0, leontief: 0.0, ces_substitutes: 0.0, ces_complements: 0.0 };
    for part in s.split(',') {
        let (name, value) =
            part.split_once('=').ok_or_else(|| Error::InvalidInput(format!("mix entry {part:?} is not kind=share")))?;
        let share: f64 =
            value.trim().parse().map_err(|_| Error::InvalidInput(format!("mix share {value:?} is not a number")))?;
        match kind(name)? {
            UtilityKind::CobbDouglas => mix.cobb_douglas = share,
            UtilityKind::Leontief => mix.leontief = share,
            UtilityKind::CesSubstitutes => mix.ces_substitutes = share,
            UtilityKind::CesComplements => mix.ces_complements = share,
        }
    }
    mix.validate()?;
    Ok(mix)
}

fn gen_spec(gen: &GenArgs, seed: u64) -> Result<Option<GenSpec>> {
    match (gen.n_consumers, gen.n_goods) {
        (None, None) => Ok(None),
        (Some(m), Some(n)) => {
            let mut spec = GenSpec::new(seed, m, n, parse_mix(&gen.mix)?);
            spec.supply_total = gen.supply_total;
            Ok(Some(spec))
        }
        _ => Err(Error::InvalidInput("--n-consumers and --n-goods must be given together".into())),
    }
}

fn base_config(command: CommandKind, run: &RunArgs, default_space: Space) -> RunConfig {
    RunConfig {
        command,
        example: None,
        economy_file: None,
        generator: None,
        space: run.space.unwrap_or(default_space),
        kernel: run.kernel,
        method: run.method,
        eta: run.eta,
        horizon: run.iters,
        eps: run.eps,
        stop_gap: run.stop_gap,
        record_every: run.record_every,
        seed: run.seed,
        x0: run.p0.clone(),
        bounds: None,
        seeds: None,
        trace: run.trace.clone(),
        report: run.report.clone(),
        out_dir: None,
    }
}

/// Resolves parsed flags into a [`RunConfig`].
pub fn config_from_cli(cli: &Cli) -> Result<RunConfig> {
    let config = match (&cli.config, &cli.command) {
        (Some(path), None) => load_config(path)?,
        (Some(_), Some(_)) => return Err(Error::InvalidInput("--config cannot be combined with a subcommand".into())),
        (None, None) => return Err(Error::InvalidInput("a subcommand or --config is required".into())),
        (None, Some(cmd)) => match cmd {
            Command::Scarf(run) => base_config(CommandKind::Scarf, run, Space::Simplex),
            Command::Economy { run, economy_file, gen } => {
                let mut c = base_config(CommandKind::Economy, run, Space::Box);
                c.economy_file = economy_file.clone();
                c.generator = gen_spec(gen, run.seed)?;
                c
            }
            Command::ViExample { example, run, x0, bounds } => {
                let mut c = base_config(CommandKind::ViExample, run, Space::Box);
                c.example = Some(*example);
                if x0.is_some() {
                    c.x0 = x0.clone();
                }
                c.bounds = bounds.as_ref().map(|b| (b[0], b[1]));
                c
            }
            Command::Sweep { run, gen, seeds, out_dir } => {
                let mut c = base_config(CommandKind::Sweep, run, Space::Box);
                c.generator = gen_spec(gen, run.seed)?;
                c.seeds = Some(seeds.clone());
                c.out_dir = out_dir.clone();
                c
            }
        },
    };
    config.validate()?;
    Ok(config)
}

/// Reads a run config, or the `config_echo` of a report.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::InvalidInput(format!("cannot read config {}: {e}", path.display())))?;
    let mut value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| Error::InvalidInput(format!("config {} is not valid JSON: {e}", path.display())))?;
    if let Some(echo) = value.get_mut("config_echo") {
        value = echo.take();
    }
    serde_json::from_value(value).map_err(|e| Error::InvalidInput(format!("config {}: {e}", path.display())))
}

#[derive(Debug, Clone, Serialize)]
pub struct CertificateReport {
    pub eps_feasibility: f64,
    pub walras_residual: f64,
    pub gap: f64,
}

/// JSON report of a price-adjustment run.
#[derive(Debug, Clone, Serialize)]
pub struct PriceReport {
    pub config_echo: RunConfig,
    pub best_iter: usize,
    pub best_prices: Vec<f64>,
    pub normalized_equilibrium: Option<Vec<f64>>,
    pub certificate: CertificateReport,
    #[serde(rename = "pathwise_L_max")]
    pub pathwise_l_max: f64,
    pub rate_slope: Option<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub eta_initial: f64,
    pub eta_final: f64,
    pub last_prices: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub minty_max_violation: Option<f64>,
}

/// JSON report of a counterexample VI run.
#[derive(Debug, Clone, Serialize)]
pub struct ViReport {
    pub config_echo: RunConfig,
    pub best_iter: usize,
    pub best_point: Vec<f64>,
    pub final_point: Vec<f64>,
    pub gap: f64,
    pub initial_norm: f64,
    pub final_norm: f64,
    #[serde(rename = "pathwise_L_max")]
    pub pathwise_l_max: f64,
    pub rate_slope: Option<f64>,
    pub converged: bool,
}

/// Outcome of a single (non-sweep) run.
#[derive(Debug, Clone)]
pub enum Outcome {
    Price(Box<PriceReport>, RunTrace),
    Vi(Box<ViReport>, RunTrace),
}

impl Outcome {
    pub fn converged(&self) -> bool {
        match self {
            Outcome::Price(r, _) => r.converged,
            Outcome::Vi(r, _) => r.converged,
        }
    }

    pub fn trace(&self) -> &RunTrace {
        match self {
            Outcome::Price(_, t) | Outcome::Vi(_, t) => t,
        }
    }

    pub fn report_json(&self) -> String {
        let v = match self {
            Outcome::Price(r, _) => serde_json::to_string_pretty(r),
            Outcome::Vi(r, _) => serde_json::to_string_pretty(r),
        };
        v.expect("reports contain only serializable fields")
    }
}

fn tatonnement_config(config: &RunConfig, kernel: Kernel) -> TatonnementConfig {
    let mut t =
        TatonnementConfig::new(kernel, config.eta.step(), config.horizon).with_record_every(config.record_every);
    t.stop_gap = config.stop_gap;
    t.probe_seed = config.seed;
    t
}

fn price_space(config: &RunConfig, n: usize) -> Result<FeasibleSet> {
    match config.space {
        Space::Simplex => FeasibleSet::simplex(n),
        Space::Box if config.command == CommandKind::Scarf => FeasibleSet::cube(n, SCARF_BOX_LOWER, 1.0),
        Space::Box => FeasibleSet::unit_box(n),
    }
}

fn price_report(config: &RunConfig, run: PriceRun) -> Outcome {
    let rate_slope = vi::rate_slope(&run.trace).ok();
    let c = run.certificate;
    let report = PriceReport {
        config_echo: config.clone(),
        best_iter: run.trace.best_record().k,
        best_prices: run.best_prices.clone(),
        normalized_equilibrium: run.normalized_equilibrium.clone(),
        certificate: CertificateReport {
            eps_feasibility: c.eps_feasibility,
            walras_residual: c.walras_residual,
            gap: c.gap_value,
        },
        pathwise_l_max: run.pathwise_l_max(),
        rate_slope,
        converged: run.converged(config.eps),
        iterations: run.trace.iterations,
        eta_initial: run.eta,
        eta_final: run.trace.final_eta,
        last_prices: run.last_prices.clone(),
        minty_max_violation: run.minty.as_ref().map(|m| m.max_violation),
    };
    Outcome::Price(Box::new(report), run.trace)
}

fn run_prices<E: ExcessDemand + Copy>(config: &RunConfig, economy: E, default_p0: Vec<f64>) -> Result<Outcome> {
    let space = price_space(config, economy.n_goods())?;
    let p0 = config.x0.clone().unwrap_or(default_p0);
    let t = tatonnement_config(config, config.kernel.kernel());
    let run = tatonnement::price_adjustment(config.method.into(), economy, &space, &t, &p0)?;
    Ok(price_report(config, run))
}

fn load_economy(config: &RunConfig) -> Result<ExchangeEconomy> {
    if let Some(path) = &config.economy_file {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::InvalidInput(format!("cannot read economy {}: {e}", path.display())))?;
        let spec: EconomySpec =
            serde_json::from_str(&text).map_err(|e| Error::InvalidInput(format!("economy {}: {e}", path.display())))?;
        return spec.build();
    }
    match &config.generator {
        Some(spec) => gen::generate_economy(spec),
        None => Err(Error::InvalidInput("no economy source given".into())),
    }
}

fn run_vi_example(config: &RunConfig, example: ViExample) -> Result<Outcome> {
    let (default_bounds, default_x0) = match example {
        ViExample::Rotation => ((-10.0, 10.0), vec![1.0, 0.0]),
        ViExample::ScalarNonminty => ((0.0, 3.0), vec![2.0]),
    };
    let (lo, hi) = config.bounds.unwrap_or(default_bounds);
    let n = default_x0.len();
    let x0 = config.x0.clone().unwrap_or(default_x0);
    let set = FeasibleSet::cube(n, lo, hi)?;
    let eta = match config.eta {
        Eta::Value(v) => v,
        Eta::Auto => 0.25,
    };
    let solver = SolverConfig {
        eta,
        horizon: config.horizon,
        kernel: config.kernel.kernel(),
        record_every: config.record_every,
        stop_gap: config.stop_gap,
        backoff: false,
    };
    let trace = match example {
        ViExample::Rotation => {
            vi::solve(config.method.into(), &ViProblem::new(set, vi::rotation_operator(), "rotation"), &solver, &x0)?
        }
        ViExample::ScalarNonminty => vi::solve(
            config.method.into(),
            &ViProblem::new(set, vi::scalar_nonminty_operator(), "1 - x^2"),
            &solver,
            &x0,
        )?,
    };
    let best = trace.best_record();
    let gap = best_gap(&trace, example, lo, hi)?;
    let report = ViReport {
        config_echo: config.clone(),
        best_iter: best.k,
        best_point: trace.best_iterate.clone(),
        final_point: trace.last_iterate.clone(),
        gap,
        initial_norm: norm2(&x0),
        final_norm: norm2(&trace.last_iterate),
        pathwise_l_max: vi::pathwise_modulus(&trace, &trace.kernel),
        rate_slope: vi::rate_slope(&trace).ok(),
        converged: gap <= config.eps,
    };
    Ok(Outcome::Vi(Box::new(report), trace))
}

fn best_gap(trace: &RunTrace, example: ViExample, lo: f64, hi: f64) -> Result<f64> {
    let n = trace.best_iterate.len();
    let set = FeasibleSet::cube(n, lo, hi)?;
    match example {
        ViExample::Rotation => vi::gap(&ViProblem::new(set, vi::rotation_operator(), "rotation"), &trace.best_iterate),
        ViExample::ScalarNonminty => {
            vi::gap(&ViProblem::new(set, vi::scalar_nonminty_operator(), "1 - x^2"), &trace.best_iterate)
        }
    }
}

/// Runs a scarf, economy or vi-example configuration.
pub fn execute(config: &RunConfig) -> Result<Outcome> {
    config.validate()?;
    match config.command {
        CommandKind::Scarf => {
            let space = price_space(config, 3)?;
            let default_p0 = if space.is_simplex() {
                SCARF_START.to_vec()
            } else {
                tatonnement::scale_to_equilibrium(&SCARF_START)?
            };
            run_prices(config, ScarfEconomy::new(), default_p0)
        }
        CommandKind::Economy => {
            let economy = load_economy(config)?;
            let space = price_space(config, economy.n_goods())?;
            let p0 = gen::initial_prices(config.seed, &space)?;
            run_prices(config, &economy, p0)
        }
        CommandKind::ViExample => run_vi_example(config, config.example.expect("validated")),
        CommandKind::Sweep => Err(Error::InvalidInput("use sweep() for sweep configurations".into())),
    }
}

/// Writes the CSV trace of a run.
pub fn write_trace(path: &Path, trace: &RunTrace) -> Result<()> {
    let mut out = String::with_capacity(64 * (trace.records.len() + 1));
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for r in &trace.records {
        let l = r.pathwise_l.map(|v| format!("{v:.16e}")).unwrap_or_default();
        out.push_str(&format!(
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{},{:.16e}\n",
            r.k, r.gap, r.sign_violation, r.complementarity, r.breg_progress, l, r.elapsed_s
        ));
    }
    write_file(path, &out)
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::InvalidInput(format!("cannot create {}: {e}", dir.display())))?;
    }
    let mut f =
        fs::File::create(path).map_err(|e| Error::InvalidInput(format!("cannot write {}: {e}", path.display())))?;
    f.write_all(contents.as_bytes()).map_err(|e| Error::InvalidInput(format!("cannot write {}: {e}", path.display())))
}

/// One row of the sweep aggregate.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub seed: u64,
    pub n_consumers: usize,
    pub n_goods: usize,
    pub converged: bool,
    pub iters_to_eps: Option<usize>,
    pub pathwise_l_max: Option<f64>,
    pub error: Option<String>,
}

fn sweep_one(config: &RunConfig, seed: u64) -> (SweepRow, Option<Outcome>) {
    let mut spec = config.generator.clone().expect("validated");
    spec.seed = seed;
    let mut single = config.clone();
    single.command = CommandKind::Economy;
    single.generator = Some(spec.clone());
    single.seeds = None;
    single.out_dir = None;
    single.seed = seed;
    single.trace = None;
    single.report = None;
    let mut row = SweepRow {
        seed,
        n_consumers: spec.n_consumers,
        n_goods: spec.n_goods,
        converged: false,
        iters_to_eps: None,
        pathwise_l_max: None,
        error: None,
    };
    match execute(&single) {
        Ok(outcome) => {
            if let Outcome::Price(report, trace) = &outcome {
                row.converged = report.converged;
                row.pathwise_l_max = Some(report.pathwise_l_max);
                row.iters_to_eps = trace
                    .records
                    .iter()
                    .find(|r| r.sign_violation <= config.eps && r.complementarity <= config.eps)
                    .map(|r| r.k + 1);
            }
            (row, Some(outcome))
        }
        Err(e) => {
            row.error = Some(e.to_string());
            (row, None)
        }
    }
}

/// Runs every seed of a sweep in parallel and writes per-seed reports plus
/// `sweep.csv` into the output directory (if any).
pub fn sweep(config: &RunConfig) -> Result<Vec<SweepRow>> {
    config.validate()?;
    if config.command != CommandKind::Sweep {
        return Err(Error::InvalidInput("not a sweep configuration".into()));
    }
    let seeds = config.seeds.clone().unwrap_or_default();
    let results: Vec<(SweepRow, Option<Outcome>)> = seeds.par_iter().map(|&s| sweep_one(config, s)).collect();
    if let Some(dir) = &config.out_dir {
        for (row, outcome) in &results {
            let body = match outcome {
                Some(o) => o.report_json(),
                None => serde_json::json!({ "seed": row.seed, "error": row.error }).to_string(),
            };
            write_file(&dir.join(format!("seed_{}.json", row.seed)), &body)?;
            if let Some(o) = outcome {
                write_trace(&dir.join(format!("seed_{}.csv", row.seed)), o.trace())?;
            }
        }
        let mut csv = String::from(SWEEP_HEADER);
        csv.push('\n');
        for (r, _) in &results {
            csv.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.seed,
                r.n_consumers,
                r.n_goods,
                r.converged,
                r.iters_to_eps.map(|k| k.to_string()).unwrap_or_default(),
                r.pathwise_l_max.map(|v| format!("{v:.16e}")).unwrap_or_default()
            ));
        }
        write_file(&dir.join("sweep.csv"), &csv)?;
    }
    Ok(results.into_iter().map(|(r, _)| r).collect())
}

/// Runs a resolved config end to end, writing requested outputs, and returns
/// the exit code.
pub fn run(config: &RunConfig) -> Result<i32> {
    if config.command == CommandKind::Sweep {
        let rows = sweep(config)?;
        return Ok(if rows.iter().all(|r| r.converged) { EXIT_OK } else { EXIT_NOT_CONVERGED });
    }
    let outcome = execute(config)?;
    if let Some(path) = &config.trace {
        write_trace(path, outcome.trace())?;
    }
    let json = outcome.report_json();
    match &config.report {
        Some(path) => write_file(path, &json)?,
        None => println!("{json}"),
    }
    Ok(if outcome.converged() { EXIT_OK } else { EXIT_NOT_CONVERGED })
}

/// Parses `args` (including the program name), runs, and returns the exit
/// code. Errors are printed to stderr as a single line.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return EXIT_OK;
            }
            let msg = e.to_string();
            let line = msg.lines().find(|l| !l.trim().is_empty()).unwrap_or("invalid arguments");
            eprintln!("{line}");
            return EXIT_ERROR;
        }
    };
    match config_from_cli(&cli).and_then(|c| run(&c)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}
