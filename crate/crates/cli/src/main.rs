//! `alkit`: train query policies, run benchmarks and regenerate reports.

mod config;

use std::fs;
use std::io::{BufWriter, Write};
use std::process::ExitCode;

use alkit::bench::{emit_report, read_curves, read_runs_csv, run_benchmark, BenchmarkPlan, BenchmarkResults};
use alkit::data::DatasetManifest;
use alkit::rl::train_policy;
use alkit::strategies::{PolicyArtifact, StrategyKind};
use anyhow::{bail, Context, Result};
use clap::{Arg, ArgMatches, Command as ClapCommand};

use config::{help, Command, RunConfig};

pub const ARTIFACT_FILE: &str = "policy.alkit";
pub const LOG_FILE: &str = "training.log";
pub const RESOLVED_FILE: &str = "config.resolved";
pub const OUT_ENV: &str = "ALKIT_OUT";

fn subcommand(cmd: Command) -> ClapCommand {
    let mut c = ClapCommand::new(cmd.name()).about(cmd.about()).arg(
        Arg::new("config")
            .long("config")
            .value_name("FILE")
            .help("key = value file; flags override its entries"),
    );
    for key in RunConfig::new(cmd).keys() {
        c = c.arg(
            Arg::new(key)
                .long(key.replace('_', "-"))
                .value_name("VALUE")
                .help(help(key)),
        );
    }
    c
}

fn cli() -> ClapCommand {
    let mut c = ClapCommand::new("alkit")
        .about("Pool-based active learning: learned query policies and benchmarks")
        .version(env!("CARGO_PKG_VERSION"))
        .subcommand_required(true)
        .arg_required_else_help(true);
    for cmd in Command::ALL {
        c = c.subcommand(subcommand(cmd));
    }
    c
}

/// A failure reported with the subcommand's usage and exit status 2.
struct UsageError(String);

fn resolve(cmd: Command, m: &ArgMatches) -> std::result::Result<RunConfig, UsageError> {
    let mut cfg = RunConfig::new(cmd);
    let usage = |e: anyhow::Error| UsageError(format!("{e:#}"));
    if let Some(path) = m.get_one::<String>("config") {
        let text = fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {path}"))
            .map_err(usage)?;
        cfg.apply_text(&text).map_err(usage)?;
    }
    for key in cfg.keys() {
        if let Some(v) = m.get_one::<String>(key) {
            cfg.set(key, v).map_err(usage)?;
        }
    }
    if let Ok(out) = std::env::var(OUT_ENV) {
        if !out.is_empty() {
            cfg.set("out", &out).map_err(usage)?;
        }
    }
    if cmd != Command::Report {
        match &cfg.manifest {
            None => return Err(UsageError("missing required --manifest".into())),
            Some(p) if !p.is_file() => {
                return Err(UsageError(format!("manifest {} does not exist", p.display())))
            }
            _ => {}
        }
    }
    Ok(cfg)
}

fn prepare_out(cfg: &RunConfig) -> Result<()> {
    fs::create_dir_all(&cfg.out).with_context(|| format!("cannot create {}", cfg.out.display()))?;
    let path = cfg.out.join(RESOLVED_FILE);
    fs::write(&path, cfg.render()).with_context(|| format!("cannot write {}", path.display()))
}

fn load_manifest(cfg: &RunConfig) -> Result<Vec<alkit::data::RawDataset>> {
    let path = cfg.manifest.as_ref().expect("checked in resolve");
    let datasets = DatasetManifest::from_file(path)?.load_all()?;
    if datasets.is_empty() {
        bail!("manifest {} lists no datasets", path.display());
    }
    Ok(datasets)
}

fn cmd_train_policy(cfg: &RunConfig) -> Result<()> {
    let corpus = load_manifest(cfg)?;
    prepare_out(cfg)?;
    let log_path = cfg.out.join(LOG_FILE);
    let mut log = BufWriter::new(
        fs::File::create(&log_path).with_context(|| format!("cannot create {}", log_path.display()))?,
    );
    let artifact = train_policy(&corpus, &cfg.trainer, &mut log)?;
    log.flush()?;
    let path = cfg.out.join(ARTIFACT_FILE);
    artifact.save(&path)?;
    println!(
        "trained policy on {} datasets; wrote {} and {}",
        corpus.len(),
        path.display(),
        log_path.display()
    );
    Ok(())
}

fn cmd_run_benchmark(cfg: &RunConfig) -> Result<()> {
    let artifact = match &cfg.artifact {
        Some(p) => Some(PolicyArtifact::load(p).with_context(|| format!("policy {}", p.display()))?),
        None => None,
    };
    if cfg.strategies.contains(&StrategyKind::Learned) && artifact.is_none() {
        bail!("strategy 'learned' needs --artifact");
    }
    let datasets = load_manifest(cfg)?;
    prepare_out(cfg)?;
    let plan = BenchmarkPlan {
        datasets: &datasets,
        models: cfg.models.clone(),
        strategies: cfg.strategies.clone(),
        artifact: artifact.as_ref(),
        settings: cfg.bench.clone(),
    };
    let results = run_benchmark(&plan)?;
    emit_report(&results, &cfg.out)?;
    println!("recorded {} runs in {}", results.records.len(), cfg.out.display());
    Ok(())
}

fn cmd_report(cfg: &RunConfig) -> Result<()> {
    let records = read_runs_csv(cfg.out.join("runs.csv"))?;
    let curves_dir = cfg.out.join("curves");
    let curves = if curves_dir.is_dir() {
        read_curves(&curves_dir, &records)?
    } else {
        Vec::new()
    };
    let mut results = BenchmarkResults { records, curves };
    let dest = match (&cfg.report_out, &cfg.model_filter) {
        (Some(p), _) => p.clone(),
        (None, None) => cfg.out.clone(),
        (None, Some(models)) => {
            let tag: Vec<String> = models.iter().map(|m| m.to_string()).collect();
            cfg.out.join(format!("report_{}", tag.join("_")))
        }
    };
    if let Some(models) = &cfg.model_filter {
        results = results.filter_models(models);
        if results.records.is_empty() {
            bail!("no runs of the requested models");
        }
    }
    emit_report(&results, &dest)?;
    println!("wrote reports for {} runs to {}", results.records.len(), dest.display());
    Ok(())
}

fn run(cmd: Command, cfg: &RunConfig) -> Result<()> {
    match cmd {
        Command::TrainPolicy => cmd_train_policy(cfg),
        Command::RunBenchmark => cmd_run_benchmark(cfg),
        Command::Report => cmd_report(cfg),
    }
}

fn main() -> ExitCode {
    let matches = cli().get_matches();
    let (name, sub) = matches.subcommand().expect("subcommand required");
    let cmd = Command::ALL
        .into_iter()
        .find(|c| c.name() == name)
        .expect("registered subcommand");
    let cfg = match resolve(cmd, sub) {
        Ok(c) => c,
        Err(UsageError(msg)) => {
            eprintln!("error: {msg}\n");
            eprintln!("{}", subcommand(cmd).bin_name(format!("alkit {}", cmd.name())).render_usage());
            eprintln!("\nFor more information, try 'alkit {} --help'.", cmd.name());
            return ExitCode::from(2);
        }
    };
    match run(cmd, &cfg) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
