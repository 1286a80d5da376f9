//! Command-line harness for the fire-disaster simulator.
//!
//! Exit codes: 0 success, 1 configuration error (bad flags, unreadable or
//! invalid scenario), 2 runtime failure.

use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use fais_core::harness::{self, RunConfig, Strategy, WeightOverrides};
use fais_core::predict::{self, NetKind, PredictorNet};
use fais_core::world;

#[derive(Parser)]
#[command(name = "fais", about = "Deterministic fire-disaster simulator and agent benchmark")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one seeded scenario and report the burnt ratio.
    Run(RunArgs),
    /// Run a grid of scenarios x strategies x seeds and tabulate medians.
    Compare(CompareArgs),
    /// Generate a deterministic city scenario file.
    GenCity(GenCityArgs),
    /// Train a predictor net from replay logs.
    TrainPredictor(TrainArgs),
    /// Render SVG frames from a replay log.
    Render(RenderArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long)]
    seed: u64,
    /// Stop after this many cycles (capped by the scenario deadline).
    #[arg(long)]
    cycles: Option<u32>,
    #[arg(long, default_value = "fais")]
    strategy: String,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    margin: Option<f64>,
    /// Write the replay log here.
    #[arg(long)]
    log: Option<PathBuf>,
    /// Write SVG frames into this directory.
    #[arg(long)]
    render: Option<PathBuf>,
    /// Trained ignition net (defaults to the built-in one).
    #[arg(long)]
    ignition_net: Option<PathBuf>,
    /// Trained water net (defaults to the built-in one).
    #[arg(long)]
    water_net: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    /// Directory of scenario files (*.json), or a single scenario file.
    #[arg(long)]
    scenarios: PathBuf,
    /// Comma-separated strategy list.
    #[arg(long)]
    strategies: String,
    /// Number of seeds (runs use seeds 1..=K).
    #[arg(long)]
    seeds: u64,
    /// Write the JSON table here (text goes to stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenCityArgs {
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    buildings: u32,
    /// Buildings per square kilometer (clamped to the generator's range).
    #[arg(long, default_value_t = 800.0)]
    density: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    /// Directory containing replay logs (*.jsonl).
    #[arg(long)]
    logs: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 200)]
    epochs: u32,
    #[arg(long, default_value_t = 0.5)]
    lr: f64,
    #[arg(long)]
    seed: u64,
    /// Which predictor to train: ignition or water.
    #[arg(long, default_value = "ignition")]
    kind: String,
}

#[derive(Args)]
struct RenderArgs {
    #[arg(long)]
    log: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Render every n-th cycle.
    #[arg(long, default_value_t = 10)]
    every: u32,
}

fn config_err(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(1)
}

fn runtime_err(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(2)
}

fn cmd_run(args: RunArgs) -> ExitCode {
    let strategy = match Strategy::from_str(&args.strategy) {
        Ok(s) => s,
        Err(e) => return config_err(e),
    };
    let mut config = RunConfig::new(args.scenario, args.seed, strategy);
    config.cycles = args.cycles;
    config.weights = WeightOverrides {
        alpha: args.alpha,
        beta: args.beta,
        gamma: args.gamma,
        margin: args.margin,
    };
    config.log_path = args.log;
    config.render_dir = args.render;
    config.ignition_net_path = args.ignition_net;
    config.water_net_path = args.water_net;

    // Scenario problems are configuration errors; everything after the
    // simulation starts is a runtime failure.
    let text = match std::fs::read_to_string(&config.scenario_path) {
        Ok(t) => t,
        Err(e) => return config_err(format!("{}: {e}", config.scenario_path.display())),
    };
    let mut scenario = match world::load_scenario(&text) {
        Ok(s) => s,
        Err(e) => return config_err(e),
    };
    config.weights.apply_to(&mut scenario.params);
    if let Err(e) = scenario.params.validate() {
        return config_err(e);
    }
    match harness::run_scenario(&config, &scenario) {
        Ok(report) => {
            println!("strategy         {}", config.strategy.name());
            println!("cycles run       {}", report.cycles_run);
            println!("burnt ratio      {:.6}", report.final_burnt_ratio);
            println!(
                "messages         submitted {} accepted {} dropped-cap {} dropped-oversize {}",
                report.bus_stats.submitted,
                report.bus_stats.accepted,
                report.bus_stats.dropped_over_cap,
                report.bus_stats.dropped_oversize
            );
            println!("traffic overflow {}", report.traffic_overflow);
            println!("standing viols   {}", report.standing_violations);
            if let Some(log) = &report.log_path {
                println!("log              {}", log.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => runtime_err(e),
    }
}

fn cmd_compare(args: CompareArgs) -> ExitCode {
    let strategies: Vec<Strategy> = match args
        .strategies
        .split(',')
        .map(|s| Strategy::from_str(s.trim()))
        .collect::<Result<Vec<_>, _>>()
    {
        Ok(s) => s,
        Err(e) => return config_err(e),
    };
    let mut scenarios = Vec::new();
    if args.scenarios.is_dir() {
        let mut entries: Vec<PathBuf> = match std::fs::read_dir(&args.scenarios) {
            Ok(rd) => rd
                .filter_map(|e| e.ok())
                .map(|e| e.path())
                .filter(|p| p.extension().is_some_and(|x| x == "json"))
                .collect(),
            Err(e) => return config_err(format!("{}: {e}", args.scenarios.display())),
        };
        entries.sort();
        scenarios = entries;
    } else if args.scenarios.is_file() {
        scenarios.push(args.scenarios.clone());
    }
    if scenarios.is_empty() {
        return config_err(format!("no scenario files under {}", args.scenarios.display()));
    }
    match harness::compare(&scenarios, &strategies, args.seeds) {
        Ok(table) => {
            print!("{}", table.to_text());
            if let Some(out) = args.out {
                let json = serde_json::to_string_pretty(&table).expect("table serializes");
                if let Err(e) = std::fs::write(&out, json + "\n") {
                    return runtime_err(format!("{}: {e}", out.display()));
                }
                println!("json table       {}", out.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => runtime_err(e),
    }
}

fn cmd_gen_city(args: GenCityArgs) -> ExitCode {
    match world::generate_city(args.seed, args.buildings, args.density) {
        Ok(scenario) => {
            let text = world::save_scenario(&scenario);
            if let Err(e) = std::fs::write(&args.out, text) {
                return runtime_err(format!("{}: {e}", args.out.display()));
            }
            println!(
                "wrote {} ({} buildings, {} refuges, {} ignitions, {} brigades)",
                args.out.display(),
                scenario.buildings.len(),
                scenario.refuges.len(),
                scenario.ignitions.len(),
                scenario.brigade_spawns.len()
            );
            ExitCode::SUCCESS
        }
        Err(e) => config_err(e),
    }
}

fn cmd_train(args: TrainArgs) -> ExitCode {
    let kind = match args.kind.as_str() {
        "ignition" => NetKind::Ignition,
        "water" => NetKind::Water,
        other => return config_err(format!("unknown net kind '{other}'")),
    };
    let mut log_paths: Vec<PathBuf> = match std::fs::read_dir(&args.logs) {
        Ok(rd) => rd
            .filter_map(|e| e.ok())
            .map(|e| e.path())
            .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
            .collect(),
        Err(e) => return config_err(format!("{}: {e}", args.logs.display())),
    };
    log_paths.sort();
    if log_paths.is_empty() {
        return config_err(format!("no .jsonl logs under {}", args.logs.display()));
    }
    let mut logs = Vec::new();
    for p in &log_paths {
        match fais_core::replay::read_log(p) {
            Ok(pair) => logs.push(pair),
            Err(e) => return config_err(format!("{}: {e}", p.display())),
        }
    }
    let dataset = match predict::harvest_training_data(&logs) {
        Ok(d) => d,
        Err(e) => return runtime_err(e),
    };
    let samples = match kind {
        NetKind::Ignition => &dataset.ignition,
        NetKind::Water => &dataset.water,
    };
    println!(
        "harvested {} ignition / {} water samples from {} logs",
        dataset.ignition.len(),
        dataset.water.len(),
        logs.len()
    );
    let net = PredictorNet::new(&[predict::FEATURE_COUNT, 16, 1], kind, args.seed);
    match predict::train(&net, samples, args.epochs, args.lr, args.seed) {
        Ok((trained, trace)) => {
            if let Err(e) = std::fs::write(&args.out, predict::save_net(&trained)) {
                return runtime_err(format!("{}: {e}", args.out.display()));
            }
            println!(
                "trained {} net: loss {:.6} -> {:.6} over {} epochs; wrote {}",
                args.kind,
                trace.first().copied().unwrap_or(f64::NAN),
                trace.last().copied().unwrap_or(f64::NAN),
                trace.len(),
                args.out.display()
            );
            ExitCode::SUCCESS
        }
        Err(e) => runtime_err(e),
    }
}

fn cmd_render(args: RenderArgs) -> ExitCode {
    match fais_core::render::render_log(&args.log, &args.out, args.every) {
        Ok(frames) => {
            println!("wrote {frames} frames to {}", args.out.display());
            ExitCode::SUCCESS
        }
        Err(e) => runtime_err(e),
    }
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Cmd::Run(args) => cmd_run(args),
        Cmd::Compare(args) => cmd_compare(args),
        Cmd::GenCity(args) => cmd_gen_city(args),
        Cmd::TrainPredictor(args) => cmd_train(args),
        Cmd::Render(args) => cmd_render(args),
    }
}
