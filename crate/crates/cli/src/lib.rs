//! The `spectral` command line: synthesize spectra, cross-validate
//! strategies, compare them and audit datasets with group ANOVA.
//!
//! [`run`] executes one invocation in-process against arbitrary output
//! streams; the binary is a thin wrapper around it.

mod table;
#[cfg(test)]
mod tests;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use spectral_core::anova::{self, AnovaOptions, HomogeneityTest};
use spectral_core::dataset::{self, kfold_split};
use spectral_core::evaluate::{cross_validate_with_split, fit_strategy, Model};
use spectral_core::ga::GaFitness;
use spectral_core::nn::{save_params, Optimizer};
use spectral_core::pls::ComponentRule;
use spectral_core::{parse_strategy, CvOptions, Error, EvalReport, SpectraDataset, Strategy, SynthConfig};

#[derive(Parser)]
#[command(name = "spectral", version, about = "NIR spectral regression workbench")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic labelled dataset as CSV and print its statistics.
    Synth(SynthArgs),
    /// Cross-validate one strategy.
    Run(RunArgs),
    /// Cross-validate several strategies on one shared fold split.
    Compare(CompareArgs),
    /// Group similarity report (variance screening + one-way ANOVA).
    Anova(AnovaArgs),
    /// Fit a strategy on the whole dataset; network weights are saved.
    Fit(FitArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Profile {
    Pear,
    Navel,
    Linear,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, value_enum, default_value = "pear")]
    profile: Profile,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    n: u64,
    /// Number of wavelength points (default 1600, or 100 for `linear`).
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    dim: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Override the profile's multiplicative scatter std.
    #[arg(long)]
    scatter_std: Option<f64>,
    /// Override the profile's additive offset std.
    #[arg(long)]
    offset_std: Option<f64>,
    /// Override the profile's white-noise std.
    #[arg(long)]
    noise_std: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Format {
    Json,
    Table,
}

#[derive(Clone, Copy, ValueEnum)]
enum OptimizerArg {
    Gd,
    Adam,
}

#[derive(Clone, Copy, ValueEnum)]
enum TestArg {
    Levene,
    Bartlett,
}

/// Model and preprocessing knobs shared by `run`, `compare` and `fit`.
#[derive(Args, Clone)]
struct ModelArgs {
    /// Training epochs for network models.
    #[arg(long, default_value_t = 5000)]
    epochs: usize,
    #[arg(long, default_value_t = 1e-3)]
    lr: f64,
    #[arg(long, value_enum, default_value = "gd")]
    optimizer: OptimizerArg,
    /// Dense layer widths, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "512,256,128,64,32,16")]
    mlp_widths: Vec<usize>,
    /// Conv channel counts, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "64,64,128,128")]
    conv_channels: Vec<usize>,
    /// Use a fixed PLS component count instead of inner cross-validation.
    #[arg(long)]
    pls_components: Option<usize>,
    /// Largest component count tried by inner cross-validation.
    #[arg(long, default_value_t = 15)]
    pls_max: usize,
    #[arg(long, default_value_t = 400)]
    ga_population: usize,
    #[arg(long, default_value_t = 20)]
    ga_generations: usize,
    #[arg(long, default_value_t = 10)]
    ga_folds: usize,
    #[arg(long, default_value_t = 5)]
    sg_window: usize,
}

impl ModelArgs {
    fn options(&self) -> CvOptions {
        let mut o = CvOptions::default();
        o.chain.sg_window = self.sg_window;
        o.chain.ga.population = self.ga_population;
        o.chain.ga.generations = self.ga_generations;
        o.chain.ga.inner_cv_folds = self.ga_folds;
        o.chain.ga.fitness = GaFitness::CurveMin { max: 10 };
        o.pls_rule = match self.pls_components {
            Some(a) => ComponentRule::Fixed(a),
            None => ComponentRule::InnerCv { max: self.pls_max, folds: 5 },
        };
        o.nn.train.epochs = self.epochs;
        o.nn.train.learning_rate = self.lr;
        o.nn.train.optimizer = match self.optimizer {
            OptimizerArg::Gd => Optimizer::Gd,
            OptimizerArg::Adam => Optimizer::adam(),
        };
        o.nn.mlp_widths = self.mlp_widths.clone();
        o.nn.conv_channels = self.conv_channels.clone();
        o
    }
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    strategy: String,
    /// Fold count (default 5 for network models, 10 otherwise).
    #[arg(long, value_parser = clap::value_parser!(u64).range(2..))]
    folds: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    #[command(flatten)]
    model: ModelArgs,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long)]
    data: PathBuf,
    /// Strategy string; repeat for each row.
    #[arg(long = "strategy", required = true)]
    strategies: Vec<String>,
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(2..))]
    folds: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
    #[command(flatten)]
    model: ModelArgs,
}

#[derive(Args)]
struct AnovaArgs {
    #[arg(long)]
    data: PathBuf,
    /// Low/middle threshold (°Brix); terciles when omitted.
    #[arg(long, requires = "t2")]
    t1: Option<f64>,
    /// Middle/high threshold (°Brix).
    #[arg(long, requires = "t1")]
    t2: Option<f64>,
    #[arg(long, default_value_t = 30, value_parser = clap::value_parser!(u64).range(1..))]
    repeats: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "levene")]
    test: TestArg,
    /// Screen dimensions once on the full groups rather than per draw.
    #[arg(long)]
    fixed_validity: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FitArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    strategy: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Where to write network parameters (network models only).
    #[arg(long)]
    params_out: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    model: ModelArgs,
}

/// Failure of a strategy string; reported with exit code 2.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn parse(text: &str) -> anyhow::Result<Strategy> {
    parse_strategy(text).map_err(|e| match e {
        Error::Strategy { position, ref token, .. } => {
            let pointer = format!("{}^", " ".repeat(position));
            UsageError(format!("{e}\n  {text}\n  {pointer} (token {token:?})")).into()
        }
        other => anyhow::Error::new(other),
    })
}

/// Output streams of one invocation.
struct Io<'a> {
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
}

fn emit(io: &mut Io, out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => Ok(io.out.write_all(text.as_bytes())?),
    }
}

fn to_json<T: Serialize>(value: &T) -> anyhow::Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn load(path: &Path) -> anyhow::Result<SpectraDataset> {
    dataset::load_csv(path).with_context(|| format!("loading {}", path.display()))
}

fn cmd_synth(io: &mut Io, a: SynthArgs) -> anyhow::Result<()> {
    let n = a.n as usize;
    let config = match a.profile {
        Profile::Pear => SynthConfig::pear(n, a.seed),
        Profile::Navel => SynthConfig::navel(n, a.seed),
        Profile::Linear => SynthConfig::linear(n, a.dim.unwrap_or(100) as usize, a.seed),
    };
    let mut config = match (a.profile, a.dim) {
        (Profile::Pear | Profile::Navel, Some(d)) => config.with_dim(d as usize),
        _ => config,
    };
    config.scatter_std = a.scatter_std.unwrap_or(config.scatter_std);
    config.offset_std = a.offset_std.unwrap_or(config.offset_std);
    config.noise_std = a.noise_std.unwrap_or(config.noise_std);
    let ds = dataset::synthesize(&config)?;
    dataset::save_csv(&ds, &a.out).with_context(|| format!("writing {}", a.out.display()))?;
    #[derive(Serialize)]
    struct Summary {
        synthetic: bool,
        samples: usize,
        dimensions: usize,
        stats: dataset::DatasetStats,
    }
    let summary = Summary { synthetic: true, samples: ds.len(), dimensions: ds.dim(), stats: dataset::dataset_stats(&ds) };
    emit(io, None, &to_json(&summary)?)
}

fn report_row(r: &EvalReport) -> table::Row {
    table::Row { strategy: r.strategy.clone(), metrics: Ok([r.rmsecv, r.r2_mean, r.closeness_pct]) }
}

fn cmd_run(io: &mut Io, a: RunArgs) -> anyhow::Result<()> {
    let strategy = parse(&a.strategy)?;
    let ds = load(&a.data)?;
    let opts = a.model.options();
    let folds = a.folds.map_or(if strategy.model.is_network() { 5 } else { 10 }, |f| f as usize);
    let start = Instant::now();
    let split = kfold_split(ds.len(), folds, a.seed)?;
    let report = cross_validate_with_split(&strategy, &ds, &split, &opts)?;
    writeln!(io.err, "{} folds in {:.1}s", folds, start.elapsed().as_secs_f64())?;
    let text = match a.format {
        Format::Json => to_json(&report)?,
        Format::Table => table::render(&[report_row(&report)]),
    };
    emit(io, a.out.as_deref(), &text)
}

#[derive(Serialize)]
struct CompareRow {
    strategy: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    report: Option<EvalReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

fn cmd_compare(io: &mut Io, a: CompareArgs) -> anyhow::Result<()> {
    let strategies = a.strategies.iter().map(|s| parse(s)).collect::<anyhow::Result<Vec<_>>>()?;
    let ds = load(&a.data)?;
    let opts = a.model.options();
    let split = kfold_split(ds.len(), a.folds as usize, a.seed)?;
    let results: Vec<CompareRow> = strategies
        .par_iter()
        .map(|s| match cross_validate_with_split(s, &ds, &split, &opts) {
            Ok(r) => CompareRow { strategy: s.to_string(), report: Some(r), error: None },
            Err(e) => CompareRow { strategy: s.to_string(), report: None, error: Some(e.to_string()) },
        })
        .collect();
    let text = match a.format {
        Format::Json => to_json(&results)?,
        Format::Table => {
            let rows: Vec<table::Row> = results
                .iter()
                .map(|r| match (&r.report, &r.error) {
                    (Some(rep), _) => report_row(rep),
                    (None, e) => table::Row { strategy: r.strategy.clone(), metrics: Err(e.clone().unwrap_or_default()) },
                })
                .collect();
            table::render(&rows)
        }
    };
    emit(io, a.out.as_deref(), &text)?;
    let failed = results.iter().filter(|r| r.error.is_some()).count();
    if failed > 0 {
        bail!("{failed} of {} strategies failed", results.len());
    }
    Ok(())
}

fn cmd_anova(io: &mut Io, a: AnovaArgs) -> anyhow::Result<()> {
    if let (Some(t1), Some(t2)) = (a.t1, a.t2) {
        if !(t1 < t2) {
            return Err(UsageError(format!("--t1 must be below --t2 (got {t1} and {t2})")).into());
        }
    }
    let ds = load(&a.data)?;
    let (t1, t2) = match (a.t1, a.t2) {
        (Some(t1), Some(t2)) => (t1, t2),
        _ => anova::tercile_thresholds(ds.sugar().view())?,
    };
    let opts = AnovaOptions {
        repeats: a.repeats as usize,
        seed: a.seed,
        test: match a.test {
            TestArg::Levene => HomogeneityTest::Levene,
            TestArg::Bartlett => HomogeneityTest::Bartlett,
        },
        per_draw_validity: !a.fixed_validity,
        ..AnovaOptions::default()
    };
    let report = anova::similarity_report(&ds, t1, t2, &opts)?;
    for w in &report.warnings {
        writeln!(io.err, "warning: {w}")?;
    }
    emit(io, a.out.as_deref(), &to_json(&report)?)
}

fn cmd_fit(io: &mut Io, a: FitArgs) -> anyhow::Result<()> {
    let strategy = parse(&a.strategy)?;
    let ds = load(&a.data)?;
    let opts = a.model.options();
    let fitted = fit_strategy(&strategy, ds.spectra().view(), ds.sugar().view(), &opts, a.seed)?;
    let pred = fitted.predict(ds.spectra().view())?;
    let train_rmse = (pred.iter().zip(ds.sugar()).map(|(p, t)| (p - t).powi(2)).sum::<f64>() / ds.len() as f64).sqrt();
    #[derive(Serialize)]
    struct FitSummary {
        strategy: String,
        samples: usize,
        features: usize,
        train_rmse: f64,
        #[serde(skip_serializing_if = "Option::is_none")]
        final_loss: Option<f64>,
        #[serde(skip_serializing_if = "Option::is_none")]
        parameters: Option<usize>,
    }
    let mut summary = FitSummary {
        strategy: strategy.to_string(),
        samples: ds.len(),
        features: fitted.chain.output_dim(),
        train_rmse,
        final_loss: None,
        parameters: None,
    };
    match (&fitted.model, &a.params_out) {
        (Model::Nn(net), Some(path)) => {
            save_params(&net.params, path).with_context(|| format!("writing {}", path.display()))?;
            summary.final_loss = net.loss_trace.last().copied();
            summary.parameters = Some(net.params.len());
        }
        (Model::Nn(net), None) => {
            summary.final_loss = net.loss_trace.last().copied();
            summary.parameters = Some(net.params.len());
        }
        (_, Some(_)) => bail!("--params-out needs a network model"),
        _ => {}
    }
    emit(io, a.out.as_deref(), &to_json(&summary)?)
}

/// Runs one invocation (`args[0]` is the program name) and returns the
/// process exit code: 0 on success, 1 on failure, 2 on usage errors.
pub fn run<'a, I, T>(args: I, out: &'a mut dyn Write, err: &'a mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            let sink = if e.use_stderr() { err } else { out };
            let _ = sink.write_all(text.as_bytes());
            return e.exit_code() as u8;
        }
    };
    let mut io = Io { out, err };
    let result = match cli.command {
        Command::Synth(a) => cmd_synth(&mut io, a),
        Command::Run(a) => cmd_run(&mut io, a),
        Command::Compare(a) => cmd_compare(&mut io, a),
        Command::Anova(a) => cmd_anova(&mut io, a),
        Command::Fit(a) => cmd_fit(&mut io, a),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let usage = e.downcast_ref::<UsageError>().is_some();
            let _ = writeln!(io.err, "error: {e:#}");
            if usage {
                2
            } else {
                1
            }
        }
    }
}
