//! Batch experiments: the fidelity study and the lateral-acceleration sweep.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chassis::ExternalWrench;
use crate::closed_loop::{run_closed_loop, scale_velocity_profile, LoopConfig, ReferenceLap, RunOutput};
use crate::driveline::ActuationCommand;
use crate::error::{SimError, SimResult};
use crate::integrator::dp45_step;
use crate::metrics::{disparity, resample, uniform_grid, LateralErrorTrace, DEFAULT_GRID_SPACING, DEFAULT_MAX_GAP};
use crate::track::TrackCenterline;
use crate::vehicle::{initial_state, make_variant, ModelVariant, Pose2, VehicleModel, VehicleParameters, VehicleState};

/// Default repetitions of the fidelity study and of the sweep.
pub const FIDELITY_REPETITIONS: usize = 30;
pub const SWEEP_REPETITIONS: usize = 5;
/// Real-time budget per physics step (µs).
pub const STEP_BUDGET_US: f64 = 800.0;

fn default_factors() -> Vec<f64> {
    vec![1.0]
}

fn default_grid() -> f64 {
    DEFAULT_GRID_SPACING
}

/// Batch description, read from JSON. Relative paths are taken relative to
/// the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub vehicle: PathBuf,
    pub track: PathBuf,
    pub lap: PathBuf,
    /// Optional external lateral-error trace (`s_m,d_m`) to compare against.
    #[serde(default)]
    pub reference_trace: Option<PathBuf>,
    pub variants: Vec<ModelVariant>,
    /// Defaults to 30 for the fidelity study and 5 for the sweep.
    #[serde(default)]
    pub repetitions: Option<usize>,
    #[serde(default = "default_factors")]
    pub scale_factors: Vec<f64>,
    /// Sensor noise; defaults to on for the fidelity study, off for the sweep.
    #[serde(default)]
    pub noise: Option<bool>,
    #[serde(default)]
    pub base_seed: u64,
    pub output_dir: PathBuf,
    /// Concurrent runs; 0 uses every core.
    #[serde(default)]
    pub parallelism: usize,
    #[serde(default = "default_grid")]
    pub grid_spacing: f64,
    #[serde(default, rename = "loop")]
    pub loop_config: LoopConfig,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> SimResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| SimError::io(path, e))?;
        let mut cfg: ExperimentConfig = serde_json::from_str(&text)?;
        let dir = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.vehicle, &mut cfg.track, &mut cfg.lap, &mut cfg.output_dir] {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        }
        if let Some(p) = &mut cfg.reference_trace {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> SimResult<()> {
        if self.variants.is_empty() {
            return Err(SimError::config("experiment lists no variants"));
        }
        if self.repetitions == Some(0) {
            return Err(SimError::config("repetitions must be >= 1"));
        }
        if self.scale_factors.is_empty() || self.scale_factors.iter().any(|f| !(*f > 0.0 && f.is_finite())) {
            return Err(SimError::config("scale factors must be positive"));
        }
        if self.scale_factors.windows(2).any(|w| w[1] <= w[0]) {
            return Err(SimError::config("scale factors must be strictly ascending"));
        }
        if !(self.grid_spacing > 0.0) {
            return Err(SimError::config("grid spacing must be positive"));
        }
        for p in [&self.vehicle, &self.track, &self.lap].into_iter().chain(&self.reference_trace) {
            if !p.exists() {
                return Err(SimError::config(format!("{} does not exist", p.display())));
            }
        }
        self.loop_config.validate()
    }
}

/// One row of `results.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub run_id: usize,
    pub variant: ModelVariant,
    pub scale: f64,
    pub repetition: usize,
    pub seed: u64,
    pub completed: bool,
    pub lap_time_s: Option<f64>,
    pub d_max_m: Option<f64>,
    /// Against the baseline run with the same factor and seed (m^3).
    pub disparity_base_m3: Option<f64>,
    /// Against the external reference trace (m^3).
    pub disparity_ref_m3: Option<f64>,
    /// Peak requested `v^2 kappa` of the scaled lap (m/s^2).
    pub peak_lat_acc_mps2: f64,
    pub distance_m: f64,
    pub failure: Option<String>,
}

/// Mean, sample standard deviation, min and max of one metric.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Stats {
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

impl Stats {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Some(Self {
            mean,
            std,
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        })
    }
}

/// Per (variant, factor) summary over completed runs.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub variant: ModelVariant,
    pub scale: f64,
    pub runs: usize,
    pub completed: usize,
    pub lap_time: Option<Stats>,
    pub d_max: Option<Stats>,
    pub disparity_base: Option<Stats>,
    pub disparity_ref: Option<Stats>,
}

impl SummaryRow {
    pub fn completion_rate(&self) -> f64 {
        self.completed as f64 / self.runs as f64
    }
}

/// Groups rows by (variant, factor) in order of first appearance.
pub fn aggregate(rows: &[ResultRow]) -> Vec<SummaryRow> {
    let mut keys: Vec<(ModelVariant, f64)> = Vec::new();
    for r in rows {
        if !keys.iter().any(|k| k.0 == r.variant && k.1 == r.scale) {
            keys.push((r.variant, r.scale));
        }
    }
    keys.into_iter()
        .map(|(variant, scale)| {
            let group: Vec<&ResultRow> = rows
                .iter()
                .filter(|r| r.variant == variant && r.scale == scale)
                .collect();
            let done: Vec<&&ResultRow> = group.iter().filter(|r| r.completed).collect();
            let stats = |f: fn(&ResultRow) -> Option<f64>| {
                Stats::of(&done.iter().filter_map(|r| f(r)).collect::<Vec<_>>())
            };
            SummaryRow {
                variant,
                scale,
                runs: group.len(),
                completed: done.len(),
                lap_time: stats(|r| r.lap_time_s),
                d_max: stats(|r| r.d_max_m),
                disparity_base: stats(|r| r.disparity_base_m3),
                disparity_ref: stats(|r| r.disparity_ref_m3),
            }
        })
        .collect()
}

/// Median of every tire normal load seen during one noise-free baseline lap.
pub fn median_wheel_load(
    base: &VehicleParameters,
    lap: &ReferenceLap,
    track: &TrackCenterline,
    cfg: &LoopConfig,
) -> SimResult<f64> {
    let mut quiet = *cfg;
    quiet.sensors.noise_enabled = false;
    let out = run_closed_loop(ModelVariant::Base, base, lap, track, &quiet, 0)?;
    if !out.result.completed {
        return Err(SimError::config(format!(
            "baseline lap for the tire fit load did not complete: {}",
            out.result.failure.unwrap_or_default()
        )));
    }
    let mut loads = out.wheel_loads;
    loads.sort_by(f64::total_cmp);
    let n = loads.len();
    Ok(if n % 2 == 1 {
        loads[n / 2]
    } else {
        0.5 * (loads[n / 2 - 1] + loads[n / 2])
    })
}

/// Inputs shared by every run of a batch.
struct Batch {
    base: VehicleParameters,
    track: TrackCenterline,
    lap: ReferenceLap,
    reference: Option<LateralErrorTrace>,
    grid: Vec<f64>,
    loop_config: LoopConfig,
    variants: Vec<ModelVariant>,
    repetitions: usize,
    base_seed: u64,
    threads: usize,
}

fn load_trace(path: &Path) -> SimResult<LateralErrorTrace> {
    #[derive(Deserialize)]
    struct Row {
        s_m: f64,
        d_m: f64,
    }
    let file = std::fs::File::open(path).map_err(|e| SimError::io(path, e))?;
    let rows = csv::Reader::from_reader(file)
        .deserialize()
        .collect::<Result<Vec<Row>, _>>()?;
    LateralErrorTrace::new(rows.iter().map(|r| r.s_m).collect(), rows.iter().map(|r| r.d_m).collect())
        .map_err(|e| SimError::config(format!("{}: {e}", path.display())))
}

pub fn save_trace(trace: &LateralErrorTrace, path: &Path) -> SimResult<()> {
    let file = std::fs::File::create(path).map_err(|e| SimError::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(["s_m", "d_m"])?;
    for (s, d) in trace.s.iter().zip(&trace.d) {
        w.write_record([s.to_string(), d.to_string()])?;
    }
    w.flush().map_err(|e| SimError::io(path, e))
}

impl Batch {
    fn new(cfg: &ExperimentConfig, default_reps: usize, default_noise: bool) -> SimResult<Self> {
        cfg.validate()?;
        let mut base = VehicleParameters::load(&cfg.vehicle)?;
        let track = TrackCenterline::load(&cfg.track)?;
        let lap = ReferenceLap::load(&cfg.lap)?;
        let reference = cfg.reference_trace.as_deref().map(load_trace).transpose()?;
        let mut loop_config = cfg.loop_config;
        loop_config.sensors.noise_enabled = cfg.noise.unwrap_or(default_noise);
        // The baseline is always run: every other variant is compared to it.
        let mut variants = vec![ModelVariant::Base];
        variants.extend(cfg.variants.iter().copied().filter(|v| *v != ModelVariant::Base));
        if base.tire_fit_load.is_none() && variants.iter().any(|v| v.needs_fit_load()) {
            base.tire_fit_load = Some(median_wheel_load(&base, &lap, &track, &loop_config)?);
        }
        for v in &variants {
            make_variant(&base, *v)?;
        }
        let grid = uniform_grid(track.s_max, cfg.grid_spacing)?;
        Ok(Self {
            base,
            track,
            lap,
            reference,
            grid,
            loop_config,
            variants,
            repetitions: cfg.repetitions.unwrap_or(default_reps),
            base_seed: cfg.base_seed,
            threads: cfg.parallelism,
        })
    }

    fn on_grid(&self, out: &RunOutput) -> Option<LateralErrorTrace> {
        if !out.result.completed {
            return None;
        }
        resample(&out.trace, &self.grid, DEFAULT_MAX_GAP).ok()
    }

    /// Runs every variant and repetition at one scale factor.
    fn run_factor(&self, factor: f64, first_id: usize) -> SimResult<Vec<(ResultRow, LateralErrorTrace)>> {
        let lap = scale_velocity_profile(&self.lap, factor)?;
        let peak = lap.peak_lateral_acceleration();
        let jobs: Vec<(usize, ModelVariant, usize)> = self
            .variants
            .iter()
            .flat_map(|v| (0..self.repetitions).map(move |r| (*v, r)))
            .enumerate()
            .map(|(k, (v, r))| (first_id + k, v, r))
            .collect();
        let run = |&(_, v, rep): &(usize, ModelVariant, usize)| {
            run_closed_loop(v, &self.base, &lap, &self.track, &self.loop_config, self.base_seed + rep as u64)
        };
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.threads)
            .build()
            .map_err(|e| SimError::config(format!("thread pool: {e}")))?;
        let outputs: Vec<RunOutput> = pool.install(|| jobs.par_iter().map(run).collect::<SimResult<Vec<_>>>())?;

        let gridded: Vec<Option<LateralErrorTrace>> = outputs.iter().map(|o| self.on_grid(o)).collect();
        let reference = self.reference.as_ref().and_then(|r| resample(r, &self.grid, DEFAULT_MAX_GAP).ok());
        let mut rows = Vec::with_capacity(jobs.len());
        for (k, ((id, v, rep), out)) in jobs.iter().zip(outputs).enumerate() {
            // Baseline jobs come first, one per repetition.
            let baseline = gridded[*rep].as_ref();
            let mine = gridded[k].as_ref();
            let disparity_base = mine.zip(baseline).and_then(|(t, b)| disparity(t, b).ok());
            let disparity_ref = mine.zip(reference.as_ref()).and_then(|(t, r)| disparity(t, r).ok());
            let r = out.result;
            rows.push((
                ResultRow {
                    run_id: *id,
                    variant: *v,
                    scale: factor,
                    repetition: *rep,
                    seed: r.seed,
                    completed: r.completed,
                    lap_time_s: r.lap_time,
                    d_max_m: r.d_max,
                    disparity_base_m3: disparity_base,
                    disparity_ref_m3: disparity_ref,
                    peak_lat_acc_mps2: peak,
                    distance_m: r.distance,
                    failure: r.failure,
                },
                out.trace,
            ));
        }
        Ok(rows)
    }
}

/// Results of a batch, in run-id order.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchOutput {
    pub rows: Vec<ResultRow>,
    pub traces: Vec<LateralErrorTrace>,
    /// Median load used for the fitted tire variants, when one was needed.
    pub tire_fit_load: Option<f64>,
}

fn collect(batches: Vec<Vec<(ResultRow, LateralErrorTrace)>>, fit: Option<f64>) -> BatchOutput {
    let (rows, traces) = batches.into_iter().flatten().unzip();
    BatchOutput {
        rows,
        traces,
        tire_fit_load: fit,
    }
}

/// Every variant, `repetitions` times, on the unscaled lap. Run `k` of a
/// variant uses seed `base_seed + k` so all variants see the same noise.
pub fn experiment_fidelity(cfg: &ExperimentConfig) -> SimResult<BatchOutput> {
    let batch = Batch::new(cfg, FIDELITY_REPETITIONS, true)?;
    let rows = batch.run_factor(1.0, 0)?;
    Ok(collect(vec![rows], batch.base.tire_fit_load))
}

/// The lap's speed profile scaled by each factor in turn. Factors above the
/// first one at which a baseline run fails are not run.
pub fn experiment_acceleration_sweep(cfg: &ExperimentConfig) -> SimResult<BatchOutput> {
    let batch = Batch::new(cfg, SWEEP_REPETITIONS, false)?;
    let mut all = Vec::new();
    let mut next_id = 0;
    for &factor in &cfg.scale_factors {
        let rows = batch.run_factor(factor, next_id)?;
        next_id += rows.len();
        let baseline_failed = rows
            .iter()
            .any(|(r, _)| r.variant == ModelVariant::Base && !r.completed);
        all.push(rows);
        if baseline_failed {
            break;
        }
    }
    Ok(collect(all, batch.base.tire_fit_load))
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes `results.csv`, `summary.csv`, one `trace_<id>.csv` per run and a
/// `config.snapshot` copy of `config_text`.
pub fn write_outputs(out: &BatchOutput, dir: &Path, config_text: &str) -> SimResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| SimError::io(dir, e))?;
    let results = dir.join("results.csv");
    let file = std::fs::File::create(&results).map_err(|e| SimError::io(&results, e))?;
    let mut w = csv::Writer::from_writer(file);
    for r in &out.rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| SimError::io(&results, e))?;

    for (r, t) in out.rows.iter().zip(&out.traces) {
        save_trace(t, &dir.join(format!("trace_{}.csv", r.run_id)))?;
    }

    let summary = dir.join("summary.csv");
    let file = std::fs::File::create(&summary).map_err(|e| SimError::io(&summary, e))?;
    let mut w = csv::Writer::from_writer(file);
    let mut header = vec!["variant".to_string(), "scale".into(), "runs".into(), "completed".into(), "completion_rate".into()];
    for m in ["lap_time_s", "d_max_m", "disparity_base_m3", "disparity_ref_m3"] {
        for s in ["mean", "std", "min", "max"] {
            header.push(format!("{m}_{s}"));
        }
    }
    w.write_record(&header)?;
    for s in aggregate(&out.rows) {
        let mut rec = vec![
            s.variant.to_string(),
            s.scale.to_string(),
            s.runs.to_string(),
            s.completed.to_string(),
            s.completion_rate().to_string(),
        ];
        for st in [s.lap_time, s.d_max, s.disparity_base, s.disparity_ref] {
            rec.extend([opt(st.map(|x| x.mean)), opt(st.map(|x| x.std)), opt(st.map(|x| x.min)), opt(st.map(|x| x.max))]);
        }
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| SimError::io(&summary, e))?;

    let snapshot = dir.join("config.snapshot");
    std::fs::write(&snapshot, config_text).map_err(|e| SimError::io(&snapshot, e))
}

/// Wall-clock cost of one physics step (six derivative evaluations plus the
/// update).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimingSummary {
    pub steps: usize,
    pub mean_us: f64,
    pub p99_us: f64,
    pub max_us: f64,
    pub budget_us: f64,
    pub within_budget: bool,
}

/// Times `steps` physics steps of `variant` driving a slow slalom at
/// 50 m/s from a trimmed start.
pub fn step_timing_probe(base: &VehicleParameters, variant: ModelVariant, steps: usize, h: f64) -> SimResult<TimingSummary> {
    if steps == 0 || !(h > 0.0) {
        return Err(SimError::config("timing needs at least one step of positive size"));
    }
    let mut params = base.clone();
    if variant.needs_fit_load() && params.tire_fit_load.is_none() {
        params.tire_fit_load = Some(params.total_mass() * crate::chassis::G / 4.0);
    }
    let model = VehicleModel::new(make_variant(&params, variant)?)?;
    let trim = initial_state(&model, Pose2::default(), 50.0)?;
    let ext = ExternalWrench::default();
    let mut x = trim.state;
    let mut samples = Vec::with_capacity(steps);
    for k in 0..steps {
        let t = k as f64 * h;
        let u = ActuationCommand {
            steering: 0.02 * (std::f64::consts::TAU * 0.5 * t).sin(),
            ..trim.command
        };
        let start = Instant::now();
        let next = dp45_step(|x, u: &ActuationCommand| model.derivatives(&VehicleState(*x), u, &ext), &x.0, &u, h)?;
        samples.push(start.elapsed().as_secs_f64() * 1e6);
        x = VehicleState(next);
    }
    let mean_us = samples.iter().sum::<f64>() / steps as f64;
    let max_us = samples.iter().copied().fold(0.0, f64::max);
    samples.sort_by(f64::total_cmp);
    let idx = ((0.99 * steps as f64).ceil() as usize).clamp(1, steps) - 1;
    Ok(TimingSummary {
        steps,
        mean_us,
        p99_us: samples[idx],
        max_us,
        budget_us: STEP_BUDGET_US,
        within_budget: mean_us < STEP_BUDGET_US,
    })
}
