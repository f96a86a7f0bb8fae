use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use ringres_core::capacity::total_memory_capacity;
use ringres_core::experiment::{simulate, OperatingPoint, Simulation};
use ringres_core::sweep::{evaluate_point, long_csv, run_sweep, Axis, SweepOptions};
use ringres_core::tasks::{gen_narma10, TaskDataset};
use ringres_core::{Mask, SweepConfig, TaskKind};

#[derive(Parser)]
#[command(
    name = "ringres",
    version,
    about = "Microring time-delay reservoir simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a parameter sweep and write the result tables.
    Sweep(SweepArgs),
    /// Evaluate one benchmark task at a single operating point.
    Task(TaskArgs),
    /// Memory capacity curves at a single operating point.
    Capacity(CapacityArgs),
    /// Dump the node-sampled drop power and nonlinear detuning of one run.
    Trace(TraceArgs),
    /// Inspect the configuration.
    Config(ConfigArgs),
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Skip points already stored in the output directory's checkpoint.
    #[arg(long)]
    resume: bool,
    /// Worker threads (default: one per core).
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Stop after this many new points.
    #[arg(long, hide = true)]
    max_points: Option<usize>,
}

#[derive(Args)]
struct PointArgs {
    /// Mean input power, dBm.
    #[arg(long, allow_hyphen_values = true)]
    pin: f64,
    /// Pump detuning from the cold resonance, GHz.
    #[arg(long, allow_hyphen_values = true)]
    detuning: f64,
    /// Free-carrier lifetime, s.
    #[arg(long)]
    tau_fc: f64,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum BenchTask {
    Narma10,
    Classify,
    Equalize,
    Radar,
}

impl From<BenchTask> for TaskKind {
    fn from(t: BenchTask) -> Self {
        match t {
            BenchTask::Narma10 => TaskKind::Narma10,
            BenchTask::Classify => TaskKind::Classify,
            BenchTask::Equalize => TaskKind::Equalize,
            BenchTask::Radar => TaskKind::Radar,
        }
    }
}

#[derive(Args)]
struct TaskArgs {
    #[arg(value_enum)]
    task: BenchTask,
    #[command(flatten)]
    point: PointArgs,
    /// Number of seeds (defaults to the config's seed count).
    #[arg(long)]
    seeds: Option<usize>,
    #[arg(long)]
    first_seed: Option<u64>,
    /// Channel SNR for the equalization task, dB.
    #[arg(long)]
    snr_db: Option<f64>,
    /// Radar I/Q file with an `i,q` header.
    #[arg(long, conflicts_with = "surrogate")]
    radar_csv: Option<PathBuf>,
    /// Use the synthetic sea-clutter generator instead of a radar file.
    #[arg(long)]
    surrogate: bool,
    /// Prediction horizon for the radar task.
    #[arg(long)]
    radar_k: Option<usize>,
}

#[derive(Args)]
struct CapacityArgs {
    #[command(flatten)]
    point: PointArgs,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Input bias (defaults to the config's reference bias).
    #[arg(long)]
    bias: Option<f64>,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TraceArgs {
    #[command(flatten)]
    point: PointArgs,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    bias: Option<f64>,
    /// Number of input symbols to simulate (defaults to the whole NARMA-10 stream).
    #[arg(long)]
    symbols: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ConfigArgs {
    /// Print the built-in configuration.
    #[arg(long, conflicts_with = "check")]
    dump_defaults: bool,
    /// Validate a config file and print its hash.
    #[arg(long)]
    check: Option<PathBuf>,
}

fn load_config(path: Option<&Path>) -> Result<SweepConfig> {
    match path {
        None => Ok(SweepConfig::default()),
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            SweepConfig::from_toml(&text).with_context(|| format!("in {}", p.display()))
        }
    }
}

fn single_point(cfg: &mut SweepConfig, p: &PointArgs) {
    cfg.grid.power_dbm = Axis::List(vec![p.pin]);
    cfg.grid.detuning_ghz = Axis::List(vec![p.detuning]);
    cfg.grid.carrier_lifetimes_s = vec![p.tau_fc];
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            std::io::stdout().lock().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn sweep(args: SweepArgs) -> Result<()> {
    let cfg = load_config(args.config.as_deref())?;
    let opts = SweepOptions {
        workers: args.workers,
        resume: args.resume,
        max_points: args.max_points,
    };
    let outcome = run_sweep(&cfg, &args.out, &opts)?;
    let failed = outcome
        .results
        .iter()
        .filter(|r| !r.failures.is_empty())
        .count();
    eprintln!(
        "{}/{} points done, {} with failures, results in {}",
        outcome.results.len(),
        outcome.total_points,
        failed,
        args.out.display()
    );
    Ok(())
}

fn task(args: TaskArgs) -> Result<()> {
    let mut cfg = load_config(args.point.config.as_deref())?;
    single_point(&mut cfg, &args.point);
    cfg.grid.tasks = vec![args.task.into()];
    if let Some(n) = args.seeds {
        cfg.grid.seed_count = n;
    }
    if let Some(s) = args.first_seed {
        cfg.grid.first_seed = s;
    }
    if let Some(snr) = args.snr_db {
        cfg.tasks.snr_db = snr;
    }
    if let Some(p) = args.radar_csv {
        cfg.tasks.radar.path = Some(p);
        cfg.tasks.radar.surrogate = false;
    }
    if args.surrogate {
        cfg.tasks.radar.path = None;
        cfg.tasks.radar.surrogate = true;
    }
    if let Some(k) = args.radar_k {
        cfg.tasks.radar.k = k;
    }
    cfg.validate()?;
    let point = cfg.points()?[0];
    let result = evaluate_point(&cfg, point);
    print!("{}", long_csv(std::slice::from_ref(&result))?);
    if !result.failures.is_empty() {
        bail!("{}", result.failures.join("; "));
    }
    Ok(())
}

fn reference_run(
    p: &PointArgs,
    seed: u64,
    bias: Option<f64>,
    symbols: Option<usize>,
) -> Result<(TaskDataset, Simulation)> {
    let cfg = load_config(p.config.as_deref())?;
    let setup = cfg.setup_for(p.tau_fc)?;
    let op = OperatingPoint::new(p.pin, p.detuning);
    let data = gen_narma10(cfg.tasks.narma10, seed);
    let mask = Mask::random(setup.node_count, data.mask_range, seed);
    let reservoir = setup.reservoir(op, mask)?;
    let bias = bias.unwrap_or(cfg.tasks.reference_bias);
    let sim = simulate(
        &data,
        &reservoir,
        bias,
        op.power_w(),
        symbols.unwrap_or(data.len()),
    )?;
    Ok((data, sim))
}

fn capacity(args: CapacityArgs) -> Result<()> {
    let cfg = load_config(args.point.config.as_deref())?;
    let (data, sim) = reference_run(&args.point, args.seed, args.bias, None)?;
    let report = total_memory_capacity(
        &sim.states,
        &data.input,
        data.split.train_range(),
        data.split.test_ranges()[0].clone(),
        &cfg.capacity,
    )?;
    emit(args.out.as_deref(), &report.to_csv())
}

fn trace(args: TraceArgs) -> Result<()> {
    let cfg = load_config(args.point.config.as_deref())?;
    let (_, sim) = reference_run(&args.point, args.seed, args.bias, args.symbols)?;
    let theta = 1.0 / (cfg.reservoir.symbol_rate_baud * cfg.reservoir.node_count as f64);
    let mut text = String::from("t_s,drop_power_w,delta_nl_hz\n");
    for (i, (p, d)) in sim
        .run
        .node_samples
        .iter()
        .zip(&sim.run.trace.samples)
        .enumerate()
    {
        text.push_str(&format!("{:e},{p:e},{d:e}\n", (i + 1) as f64 * theta));
    }
    emit(args.out.as_deref(), &text)
}

fn config(args: ConfigArgs) -> Result<()> {
    if let Some(p) = args.check {
        let cfg = load_config(Some(&p))?;
        println!("ok {} points, hash {}", cfg.points()?.len(), cfg.hash()?);
        return Ok(());
    }
    if !args.dump_defaults {
        bail!("nothing to do; pass --dump-defaults or --check <file>");
    }
    print!("{}", SweepConfig::default().to_toml()?);
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Sweep(a) => sweep(a),
        Command::Task(a) => task(a),
        Command::Capacity(a) => capacity(a),
        Command::Trace(a) => trace(a),
        Command::Config(a) => config(a),
    }
}
