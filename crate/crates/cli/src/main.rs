use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use chrono::{DateTime, Utc};
use clap::{Args, Parser, Subcommand};
use climabm::{
    average_series, emit_charts, load_inputs, parse_config, run_with, write_metrics, ChartSeries, MetricsFrame,
    RunSummary, ScenarioConfig,
};
use log::info;
use rayon::prelude::*;
use serde::Serialize;

/// Environment variable naming the default output directory.
const OUT_ENV: &str = "CLIMABM_OUT";

#[derive(Parser)]
#[command(name = "climabm", version, about = "Flood-exposed agent-based economy simulator")]
struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write metrics, charts and a manifest.
    Run(RunArgs),
    /// Run baseline and hazard scenarios over several seeds.
    Compare(CompareArgs),
    /// Parse the config and load its inputs without simulating.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Override the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Run against an all-zero hazard field.
    #[arg(long)]
    no_hazard: bool,
    /// Freeze firm strategies: no mutation and no replacement.
    #[arg(long)]
    no_evolution: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long)]
    config: PathBuf,
    /// Number of seeds, counting up from the config seed.
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u64).range(1..))]
    seeds: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; defaults to the number of cores.
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Serialize)]
struct RunManifest<'a> {
    version: &'static str,
    command: &'a str,
    seed: u64,
    hazard_enabled: bool,
    evolution_enabled: bool,
    started_at: DateTime<Utc>,
    finished_at: DateTime<Utc>,
    config: &'a ScenarioConfig,
    outputs: Vec<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let result = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Compare(args) => cmd_compare(args),
        Command::Validate { config } => cmd_validate(&config),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = format!("{e:#}").replace('\n', " ");
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}

/// `--out` wins, then the config's `output_dir`, then `$CLIMABM_OUT`, then `out`.
fn output_dir(flag: Option<PathBuf>, config: &ScenarioConfig) -> PathBuf {
    flag.or_else(|| config.output_dir.clone())
        .or_else(|| std::env::var_os(OUT_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn load(path: &Path) -> Result<ScenarioConfig> {
    parse_config(path).with_context(|| format!("loading config {}", path.display()))
}

fn cmd_validate(path: &Path) -> Result<()> {
    let config = load(path)?;
    let (hazard, _curve) = load_inputs(&config)?;
    let grid = hazard.base();
    println!(
        "OK: {}x{} grid, {} return periods, {} epoch(s), {} firms, {} households, {} steps",
        grid.width(),
        grid.height(),
        grid.return_periods().len(),
        hazard.epochs().len(),
        config.n_firms,
        config.n_households,
        config.n_steps()
    );
    Ok(())
}

fn write_manifest(dir: &Path, manifest: &RunManifest<'_>) -> Result<PathBuf> {
    let path = dir.join("manifest.json");
    let json = serde_json::to_string_pretty(manifest)?;
    fs::write(&path, json + "\n").with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

fn cmd_run(args: RunArgs) -> Result<()> {
    let started_at = Utc::now();
    let mut config = load(&args.config)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    config.hazard_enabled &= !args.no_hazard;
    config.evolution_enabled &= !args.no_evolution;
    let out = output_dir(args.out, &config);

    let (hazard, curve) = load_inputs(&config)?;
    let output = run_with(config.clone(), hazard, curve)?;
    let (csv, summary) = write_metrics(&output.metrics, &out)?;
    let mut outputs = vec![csv.clone(), summary];
    if !output.metrics.is_empty() {
        let tag = if config.hazard_enabled { "H" } else { "B" };
        outputs.extend(emit_charts(&[ChartSeries { tag, frames: &output.metrics }], out.join("charts"))?);
    }
    let manifest = write_manifest(
        &out,
        &RunManifest {
            version: env!("CARGO_PKG_VERSION"),
            command: "run",
            seed: config.seed,
            hazard_enabled: config.hazard_enabled,
            evolution_enabled: config.evolution_enabled,
            started_at,
            finished_at: Utc::now(),
            config: &config,
            outputs,
        },
    )?;
    println!("wrote {} and {}", csv.display(), manifest.display());
    Ok(())
}

struct SeedResult {
    seed: u64,
    baseline: Vec<MetricsFrame>,
    hazard: Vec<MetricsFrame>,
}

fn cmd_compare(args: CompareArgs) -> Result<()> {
    let started_at = Utc::now();
    let config = load(&args.config)?;
    let out = output_dir(args.out, &config);
    if config.n_steps() == 0 {
        bail!("compare needs at least one step");
    }
    let (hazard, curve) = load_inputs(&config)?;

    let seeds: Vec<u64> = (0..args.seeds).map(|k| config.seed.wrapping_add(k)).collect();
    let jobs: Vec<(u64, bool)> = seeds.iter().flat_map(|s| [(*s, false), (*s, true)]).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs.unwrap_or(0))
        .build()
        .context("starting worker pool")?;
    let runs: Vec<Vec<MetricsFrame>> = pool.install(|| {
        jobs.par_iter()
            .map(|&(seed, hazard_on)| {
                let mut c = config.clone();
                c.seed = seed;
                c.hazard_enabled = config.hazard_enabled && hazard_on;
                let frames = run_with(c, hazard.clone(), curve.clone())?.metrics;
                let dir = run_dir(&out, seed, hazard_on);
                write_metrics(&frames, &dir)?;
                info!("finished {}", dir.display());
                Ok(frames)
            })
            .collect::<climabm::Result<_>>()
    })?;

    let mut results = Vec::new();
    let mut it = runs.into_iter();
    for seed in &seeds {
        let baseline = it.next().expect("two runs per seed");
        let hazard = it.next().expect("two runs per seed");
        results.push(SeedResult {
            seed: *seed,
            baseline,
            hazard,
        });
    }

    let table = summary_table(&results);
    let table_path = out.join("summary.csv");
    fs::write(&table_path, &table).with_context(|| format!("writing {}", table_path.display()))?;
    print!("{table}");

    let mean_b = average_series(&results.iter().map(|r| r.baseline.clone()).collect::<Vec<_>>())?;
    let mean_h = average_series(&results.iter().map(|r| r.hazard.clone()).collect::<Vec<_>>())?;
    let mut outputs = emit_charts(
        &[
            ChartSeries { tag: "B", frames: &mean_b },
            ChartSeries { tag: "H", frames: &mean_h },
        ],
        out.join("charts"),
    )?;
    outputs.push(table_path);
    write_manifest(
        &out,
        &RunManifest {
            version: env!("CARGO_PKG_VERSION"),
            command: "compare",
            seed: config.seed,
            hazard_enabled: config.hazard_enabled,
            evolution_enabled: config.evolution_enabled,
            started_at,
            finished_at: Utc::now(),
            config: &config,
            outputs,
        },
    )?;
    Ok(())
}

fn run_dir(out: &Path, seed: u64, hazard_on: bool) -> PathBuf {
    out.join(format!("seed_{seed}")).join(if hazard_on { "hazard" } else { "baseline" })
}

/// One row per seed plus a closing `mean` row. The ratio column is the
/// final-step hazard price over the baseline price.
fn summary_table(results: &[SeedResult]) -> String {
    let mut s = String::from(
        "seed,baseline_final_price,hazard_final_price,price_ratio,baseline_final_production,hazard_final_production\n",
    );
    let mut ratios = Vec::new();
    for r in results {
        let b = RunSummary::from_series(&r.baseline);
        let h = RunSummary::from_series(&r.hazard);
        let (bp, hp) = (b.mean_final_price.unwrap_or(f64::NAN), h.mean_final_price.unwrap_or(f64::NAN));
        let ratio = hp / bp;
        ratios.push(ratio);
        s += &format!(
            "{},{bp},{hp},{ratio},{},{}\n",
            r.seed,
            b.mean_final_production.unwrap_or(f64::NAN),
            h.mean_final_production.unwrap_or(f64::NAN)
        );
    }
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    s += &format!("mean,,,{mean},,\n");
    s
}
