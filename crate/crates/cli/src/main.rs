//! Command-line frontend: scenario generation, routing and refinement,
//! Monte Carlo benchmarking, velocity sweeps, MILP export and plan
//! validation.
//!
//! Exit codes: 0 success, 1 usage/configuration/IO failure, 2 infeasible
//! instance (or a plan that fails validation), 3 internal solver error.

use std::fs::File;
use std::io::{BufWriter, Read};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use voltpath::model::{ChannelParams, Instance, UavParams};
use voltpath::montecarlo::{monte_carlo, McConfig};
use voltpath::plan::FlightPlan;
use voltpath::scenario::{generate_scenario, Area, Scenario};
use voltpath::strategy::{run_strategy, PipelineOpts, Strategy, StrategyError};
use voltpath::sweep::velocity_sweep;
use voltpath::tspe::{build_edge_weights, export_milp, MilpFormat};
use voltpath::validate::{execute, TraceTotals};

#[derive(Parser)]
#[command(
    name = "voltpath",
    version,
    about = "Minimum-total-time trajectory planning for a rechargeable data-dissemination UAV"
)]
struct Cli {
    /// TOML parameter file overriding the built-in channel/UAV defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random instance file.
    Gen(GenArgs),
    /// Route an instance under one strategy and write the results.
    Solve(SolveArgs),
    /// Shorthand for `solve --strategy opt`: route, then refine every
    /// sub-tour jointly over velocities, powers and hover positions.
    Refine(RefineArgs),
    /// Monte Carlo benchmark across seeds, payload sizes and strategies.
    Bench(BenchArgs),
    /// Total time versus cruise velocity on a fixed instance.
    Sweep(SweepArgs),
    /// Export the routing model as solver-readable LP or MPS text.
    ExportMilp(ExportArgs),
    /// Replay a plan through the independent validator.
    Validate(ValidateArgs),
}

#[derive(Args)]
struct GenArgs {
    /// Number of ground terminals.
    #[arg(long, default_value_t = 20)]
    k: usize,
    /// Deployment area in meters: "2000" (square) or "2000x3000".
    #[arg(long, default_value = "2000")]
    area: String,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Payload per terminal in Gbit.
    #[arg(long, default_value_t = 1.0)]
    data_gbits: f64,
    /// Output path for the instance JSON (stdout if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    instance: PathBuf,
    /// One of: effi, max, ini, opt.
    #[arg(long, default_value = "ini")]
    strategy: String,
    #[command(flatten)]
    pipeline: PipelineArgs,
    /// Routing JSON (sub-tours, virtual time, per-tour energy).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Full plan JSON (velocities, powers, hover points).
    #[arg(long)]
    plan_out: Option<PathBuf>,
    /// Execution trace, one JSON event per line.
    #[arg(long)]
    trace_out: Option<PathBuf>,
}

#[derive(Args)]
struct RefineArgs {
    #[arg(long)]
    instance: PathBuf,
    #[command(flatten)]
    pipeline: PipelineArgs,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    plan_out: Option<PathBuf>,
    #[arg(long)]
    trace_out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, default_value_t = 20)]
    k: usize,
    #[arg(long, default_value = "2000")]
    area: String,
    /// First seed; runs use seed, seed+1, ..
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    runs: usize,
    /// Comma-separated payload list in Gbit, e.g. "0.5,1,1.5,2".
    #[arg(long, default_value = "1")]
    data_gbits: String,
    /// Comma-separated strategies, e.g. "effi,max,ini,opt".
    #[arg(long, default_value = "effi,max,ini,opt")]
    strategies: String,
    #[command(flatten)]
    pipeline: PipelineArgs,
    /// Output basename; writes <out>.csv and <out>.json.
    #[arg(long, default_value = "bench")]
    out: PathBuf,
    /// Restrict emission: json, csv, or both.
    #[arg(long, default_value = "both")]
    format: String,
}

#[derive(Args)]
struct SweepArgs {
    /// Instance file; if omitted, one is generated from --k/--area/--seed.
    #[arg(long)]
    instance: Option<PathBuf>,
    #[arg(long, default_value_t = 12)]
    k: usize,
    #[arg(long, default_value = "2000")]
    area: String,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 1.0)]
    data_gbits: f64,
    #[arg(long, default_value_t = 15.0)]
    v_lo: f64,
    #[arg(long, default_value_t = 25.0)]
    v_hi: f64,
    #[arg(long, default_value_t = 0.1)]
    step: f64,
    #[command(flatten)]
    pipeline: PipelineArgs,
    /// CSV output path (stdout if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExportArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Cruise velocity for the edge weights; defaults to the optimal one.
    #[arg(long)]
    velocity: Option<f64>,
    /// lp or mps.
    #[arg(long, default_value = "lp")]
    format: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Plan JSON produced by `solve`/`refine`.
    #[arg(long)]
    plan: PathBuf,
    /// Execution trace output, one JSON event per line.
    #[arg(long)]
    trace_out: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct PipelineArgs {
    /// Largest terminal count routed exactly; larger instances use the
    /// insertion heuristic.
    #[arg(long, default_value_t = 14)]
    exact_limit: usize,
    /// Relative objective-decrease threshold stopping the refinement.
    #[arg(long, default_value_t = 1e-4)]
    tol: f64,
    /// Reuse the INI visiting order for EFFI/MAX instead of re-routing.
    #[arg(long, default_value_t = false)]
    reuse_ini_order: bool,
}

impl PipelineArgs {
    fn to_opts(&self) -> PipelineOpts {
        PipelineOpts {
            exact_limit: self.exact_limit,
            bcd_tol: self.tol,
            reuse_ini_order: self.reuse_ini_order,
            ..PipelineOpts::default()
        }
    }
}

/// Optional TOML override of channel/UAV parameters; quantities accept
/// unit-suffixed strings ("-110 dBm", "2 MHz").
#[derive(Deserialize, Default)]
struct ParamsFile {
    channel: Option<ChannelParams>,
    uav: Option<UavParams>,
}

fn load_params(path: Option<&Path>) -> Result<(ChannelParams, UavParams)> {
    let Some(path) = path else {
        return Ok((ChannelParams::default(), UavParams::default()));
    };
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    let file: ParamsFile = toml::from_str(&text)
        .with_context(|| format!("parsing config {}", path.display()))?;
    let channel = file.channel.unwrap_or_default();
    channel.validate().map_err(|e| anyhow!("config: {e}"))?;
    let uav = file.uav.unwrap_or_default();
    uav.validate().map_err(|e| anyhow!("config: {e}"))?;
    Ok((channel, uav))
}

fn load_instance(path: &Path) -> Result<Instance> {
    let mut text = String::new();
    File::open(path)
        .with_context(|| format!("opening {}", path.display()))?
        .read_to_string(&mut text)?;
    serde_json::from_str(&text).with_context(|| format!("parsing instance {}", path.display()))
}

fn write_text(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => {
            std::fs::write(p, text).with_context(|| format!("writing {}", p.display()))?
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn parse_area(s: &str) -> Result<Area> {
    Area::parse(s).ok_or_else(|| anyhow!("bad area {s:?}; expected \"2000\" or \"2000x3000\""))
}

fn parse_strategy(s: &str) -> Result<Strategy> {
    Strategy::from_name(s).ok_or_else(|| anyhow!("unknown strategy {s:?} (effi|max|ini|opt)"))
}

/// Serialized output of `solve`/`refine`, consumed by `validate`.
#[derive(Serialize, Deserialize)]
struct PlanFile {
    strategy: String,
    totals: TraceTotals,
    plan: FlightPlan,
}

/// Process-level failure with the documented exit codes.
enum Failure {
    Usage(anyhow::Error),
    Infeasible(String),
    Solver(String),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Usage(e)
    }
}

impl From<StrategyError> for Failure {
    fn from(e: StrategyError) -> Self {
        if e.is_infeasibility() {
            Failure::Infeasible(e.to_string())
        } else {
            Failure::Solver(e.to_string())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Infeasible(msg)) => {
            eprintln!("infeasible: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Solver(msg)) => {
            eprintln!("solver error: {msg}");
            ExitCode::from(3)
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let (channel, uav) = load_params(cli.config.as_deref())?;
    match cli.command {
        Command::Gen(args) => {
            let area = parse_area(&args.area)?;
            let scenario = generate_scenario(
                args.k,
                area,
                args.seed,
                channel,
                uav,
                args.data_gbits * 1e9,
            )
            .map_err(|e| Failure::Usage(anyhow!(e)))?;
            let text = serde_json::to_string_pretty(&scenario.instance)
                .context("serializing instance")?;
            write_text(args.out.as_deref(), &(text + "\n"))?;
            Ok(())
        }
        Command::Solve(args) => {
            let strategy = parse_strategy(&args.strategy)?;
            solve_like(
                &args.instance,
                strategy,
                &args.pipeline,
                args.out.as_deref(),
                args.plan_out.as_deref(),
                args.trace_out.as_deref(),
            )
        }
        Command::Refine(args) => solve_like(
            &args.instance,
            Strategy::Opt,
            &args.pipeline,
            args.out.as_deref(),
            args.plan_out.as_deref(),
            args.trace_out.as_deref(),
        ),
        Command::Bench(args) => {
            let area = parse_area(&args.area)?;
            let data_gbits: Vec<f64> = args
                .data_gbits
                .split(',')
                .map(|t| t.trim().parse::<f64>().map_err(|_| anyhow!("bad payload {t:?}")))
                .collect::<Result<_>>()?;
            let strategies: Vec<Strategy> = args
                .strategies
                .split(',')
                .map(|t| parse_strategy(t.trim()))
                .collect::<Result<_>>()?;
            let cfg = McConfig {
                k: args.k,
                area,
                base_seed: args.seed,
                runs: args.runs,
                data_gbits,
                strategies,
                channel,
                uav,
                opts: args.pipeline.to_opts(),
            };
            let report = monte_carlo(&cfg);
            let base = args.out.as_path();
            if args.format != "json" {
                let path = base.with_extension("csv");
                std::fs::write(&path, report.to_csv())
                    .with_context(|| format!("writing {}", path.display()))?;
                println!("wrote {}", path.display());
            }
            if args.format != "csv" {
                let path = base.with_extension("json");
                std::fs::write(&path, serde_json::to_string_pretty(&report.to_json()).unwrap())
                    .with_context(|| format!("writing {}", path.display()))?;
                println!("wrote {}", path.display());
            }
            for s in &report.summaries {
                println!(
                    "{:<5} D={:.2}G runs={:<3} energy {:>10.0} J  flight {:>8.1} s  recharge {:>8.1} s  total {:>8.1} s",
                    s.strategy,
                    s.data_bits / 1e9,
                    s.runs,
                    s.mean_energy_j,
                    s.mean_flight_s,
                    s.mean_recharge_s,
                    s.mean_total_s
                );
            }
            if !report.failures.is_empty() {
                for f in &report.failures {
                    eprintln!(
                        "failed run: {} seed {} D={:.2}G: {}",
                        f.strategy,
                        f.seed,
                        f.data_bits / 1e9,
                        f.error
                    );
                }
                let all_infeasible = report.failures.iter().all(|f| f.infeasible);
                return Err(if all_infeasible {
                    Failure::Infeasible(format!("{} run(s) infeasible", report.failures.len()))
                } else {
                    Failure::Solver(format!("{} run(s) failed", report.failures.len()))
                });
            }
            Ok(())
        }
        Command::Sweep(args) => {
            let instance = match &args.instance {
                Some(path) => load_instance(path)?,
                None => {
                    let area = parse_area(&args.area)?;
                    generate_scenario(args.k, area, args.seed, channel, uav, args.data_gbits * 1e9)
                        .map_err(|e| Failure::Usage(anyhow!(e)))?
                        .instance
                }
            };
            let curve = velocity_sweep(
                &instance,
                args.v_lo,
                args.v_hi,
                args.step,
                args.seed,
                &args.pipeline.to_opts(),
            )?;
            eprintln!(
                "marker: routing-optimal velocity {:.3} m/s, total {:?} s",
                curve.v_marker_mps, curve.marker_total_s
            );
            write_text(args.out.as_deref(), &curve.to_csv())?;
            Ok(())
        }
        Command::ExportMilp(args) => {
            let instance = load_instance(&args.instance)?;
            let format = MilpFormat::from_name(&args.format)
                .ok_or_else(|| anyhow!("unknown format {:?} (lp|mps)", args.format))?;
            let velocity = match args.velocity {
                Some(v) => v,
                None => voltpath::scalar::optimal_cruise_velocity(&instance.uav, 1e-9)
                    .map_err(|e| Failure::Solver(e.to_string()))?,
            };
            let powers = voltpath::strategy::per_terminal_powers(&instance, 1e-9)
                .map_err(StrategyError::from)?;
            let weights = build_edge_weights(&instance, velocity, &powers)
                .map_err(StrategyError::from)?;
            let mut buf = Vec::new();
            export_milp(
                &weights,
                instance.uav.battery_capacity_j,
                &mut buf,
                format,
            )
            .context("exporting model")?;
            write_text(args.out.as_deref(), &String::from_utf8(buf).unwrap())?;
            Ok(())
        }
        Command::Validate(args) => {
            let instance = load_instance(&args.instance)?;
            let text = std::fs::read_to_string(&args.plan)
                .with_context(|| format!("reading plan {}", args.plan.display()))?;
            let plan_file: PlanFile = serde_json::from_str(&text)
                .with_context(|| format!("parsing plan {}", args.plan.display()))?;
            let trace = execute(&plan_file.plan, &instance);
            if let Some(path) = &args.trace_out {
                let mut out = BufWriter::new(
                    File::create(path).with_context(|| format!("creating {}", path.display()))?,
                );
                trace.write_jsonl(&mut out).context("writing trace")?;
            }
            println!(
                "total {:.1} s (flight {:.1} s + recharge {:.1} s), energy {:.0} J, {} violation(s)",
                trace.totals.total_time_s,
                trace.totals.flight_time_s,
                trace.totals.recharge_time_s,
                trace.totals.energy_j,
                trace.violations.len()
            );
            if trace.violations.is_empty() {
                Ok(())
            } else {
                for v in &trace.violations {
                    eprintln!("violation: {v:?}");
                }
                Err(Failure::Infeasible(format!(
                    "plan violates {} constraint(s)",
                    trace.violations.len()
                )))
            }
        }
    }
}

fn solve_like(
    instance_path: &Path,
    strategy: Strategy,
    pipeline: &PipelineArgs,
    out: Option<&Path>,
    plan_out: Option<&Path>,
    trace_out: Option<&Path>,
) -> Result<(), Failure> {
    let instance = load_instance(instance_path)?;
    let scenario = Scenario {
        rng_seed: 0,
        area: Area::default(),
        instance,
    };
    let result = run_strategy(&scenario, strategy, &pipeline.to_opts())?;
    println!(
        "{}: total {:.1} s (flight {:.1} s + recharge {:.1} s), energy {:.0} J, {} sub-tour(s)",
        strategy,
        result.trace.totals.total_time_s,
        result.trace.totals.flight_time_s,
        result.trace.totals.recharge_time_s,
        result.trace.totals.energy_j,
        result.trajectory.subtours.len()
    );
    if out.is_some() {
        let text =
            serde_json::to_string_pretty(&result.trajectory).context("serializing trajectory")?;
        write_text(out, &(text + "\n"))?;
    }
    if plan_out.is_some() {
        let file = PlanFile {
            strategy: strategy.name().to_string(),
            totals: result.trace.totals.clone(),
            plan: result.plan.clone(),
        };
        let text = serde_json::to_string_pretty(&file).context("serializing plan")?;
        write_text(plan_out, &(text + "\n"))?;
    }
    if let Some(path) = trace_out {
        let mut w = BufWriter::new(
            File::create(path).with_context(|| format!("creating {}", path.display()))?,
        );
        result.trace.write_jsonl(&mut w).context("writing trace")?;
    }
    Ok(())
}
