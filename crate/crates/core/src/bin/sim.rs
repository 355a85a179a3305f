use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use racesim::bench::{
    experiment_acceleration_sweep, experiment_fidelity, save_trace, step_timing_probe, write_outputs,
    ExperimentConfig,
};
use racesim::closed_loop::{run_closed_loop, scale_velocity_profile, LoopConfig, ReferenceLap};
use racesim::generate::{generate_lap, generate_track, GeneratorSpec, LapSpec};
use racesim::integrator::DEFAULT_STEP;
use racesim::track::TrackCenterline;
use racesim::vehicle::{ModelVariant, VehicleParameters};
use racesim::{SimError, SimResult};

/// Closed-loop vehicle dynamics simulation and model-fidelity benchmarks.
#[derive(Parser)]
#[command(name = "sim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Drive one lap and write its result and traces.
    Run(RunArgs),
    /// Batch experiments.
    #[command(subcommand)]
    Bench(BenchCommand),
    /// Measure the wall-clock cost of one physics step.
    Timing(TimingArgs),
    /// Generate synthetic tracks and reference laps.
    #[command(subcommand)]
    Gen(GenCommand),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    vehicle: PathBuf,
    #[arg(long)]
    track: PathBuf,
    #[arg(long)]
    lap: PathBuf,
    #[arg(long, default_value = "base")]
    variant: ModelVariant,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Speed-profile scale factor.
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
    /// Loop configuration (JSON); defaults apply otherwise.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Enable sensor noise.
    #[arg(long)]
    noise: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum BenchCommand {
    /// Every variant repeated on the unscaled lap.
    Fidelity(BenchArgs),
    /// Every variant over ascending speed-profile scale factors.
    Sweep(BenchArgs),
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the configured output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the configured parallelism (0 = all cores).
    #[arg(long)]
    parallelism: Option<usize>,
}

#[derive(Args)]
struct TimingArgs {
    #[arg(long, default_value = "base")]
    variant: ModelVariant,
    #[arg(long, default_value = "data/vehicle.json")]
    vehicle: PathBuf,
    #[arg(long, default_value_t = 100_000)]
    steps: usize,
}

#[derive(Subcommand)]
enum GenCommand {
    /// Track CSV (plus metadata sidecar) from a generator spec.
    Track {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Reference lap CSV at a fraction of the vehicle's grip limit.
    Lap {
        #[arg(long)]
        track: PathBuf,
        #[arg(long)]
        vehicle: PathBuf,
        #[arg(long)]
        grip_fraction: f64,
        #[arg(long)]
        speed_cap: Option<f64>,
        #[arg(long, default_value_t = 1.0)]
        spacing: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn create_dir(dir: &Path) -> SimResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| SimError::io(dir, e))
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> SimResult<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text).map_err(|e| SimError::io(path, e))
}

fn run(args: RunArgs) -> SimResult<()> {
    let base = VehicleParameters::load(&args.vehicle)?;
    let track = TrackCenterline::load(&args.track)?;
    let lap = scale_velocity_profile(&ReferenceLap::load(&args.lap)?, args.scale)?;
    let mut cfg = match &args.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| SimError::io(p, e))?;
            serde_json::from_str::<LoopConfig>(&text)?
        }
        None => LoopConfig::default(),
    };
    cfg.sensors.noise_enabled |= args.noise;
    let out = run_closed_loop(args.variant, &base, &lap, &track, &cfg, args.seed)?;
    create_dir(&args.out)?;
    write_json(&args.out.join("result.json"), &out.result)?;
    save_trace(&out.trace, &args.out.join("trace.csv"))?;
    let ticks = args.out.join("ticks.csv");
    let mut w = csv::Writer::from_path(&ticks)?;
    for t in &out.ticks {
        w.serialize(t)?;
    }
    w.flush().map_err(|e| SimError::io(ticks, e))?;
    let r = &out.result;
    match (r.lap_time, r.d_max) {
        (Some(t), Some(d)) => println!("{}: completed in {t:.3} s, d_max {d:.3} m", r.variant),
        _ => println!(
            "{}: not completed after {:.1} m ({})",
            r.variant,
            r.distance,
            r.failure.as_deref().unwrap_or("unknown")
        ),
    }
    Ok(())
}

fn bench(args: BenchArgs, sweep: bool) -> SimResult<()> {
    let text = std::fs::read_to_string(&args.config).map_err(|e| SimError::io(&args.config, e))?;
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if let Some(out) = args.out {
        cfg.output_dir = out;
    }
    if let Some(p) = args.parallelism {
        cfg.parallelism = p;
    }
    let out = if sweep {
        experiment_acceleration_sweep(&cfg)?
    } else {
        experiment_fidelity(&cfg)?
    };
    write_outputs(&out, &cfg.output_dir, &text)?;
    let done = out.rows.iter().filter(|r| r.completed).count();
    println!(
        "{} runs, {} completed; results in {}",
        out.rows.len(),
        done,
        cfg.output_dir.display()
    );
    Ok(())
}

fn timing(args: TimingArgs) -> SimResult<()> {
    let base = VehicleParameters::load(&args.vehicle)?;
    let t = step_timing_probe(&base, args.variant, args.steps, DEFAULT_STEP)?;
    println!("{}", serde_json::to_string_pretty(&t)?);
    Ok(())
}

fn generate(cmd: GenCommand) -> SimResult<()> {
    match cmd {
        GenCommand::Track { spec, out } => {
            let track = generate_track(&GeneratorSpec::load(&spec)?)?;
            track.save(&out)?;
            println!("{}: {:.1} m, {} samples", track.name, track.s_max, track.samples.len());
        }
        GenCommand::Lap {
            track,
            vehicle,
            grip_fraction,
            speed_cap,
            spacing,
            out,
        } => {
            let track = TrackCenterline::load(&track)?;
            let params = VehicleParameters::load(&vehicle)?;
            let lap = generate_lap(
                &track,
                &params,
                &LapSpec {
                    grip_fraction,
                    speed_cap,
                    spacing,
                },
            )?;
            lap.save(&out)?;
            let vmax = lap.samples.iter().map(|s| s.v).fold(0.0, f64::max);
            println!(
                "lap over {:.1} m: top speed {vmax:.1} m/s, peak lateral demand {:.2} m/s^2",
                lap.length(),
                lap.peak_lateral_acceleration()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => run(a),
        Command::Bench(BenchCommand::Fidelity(a)) => bench(a, false),
        Command::Bench(BenchCommand::Sweep(a)) => bench(a, true),
        Command::Timing(a) => timing(a),
        Command::Gen(c) => generate(c),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config() || matches!(e, SimError::Generation(_)) {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
