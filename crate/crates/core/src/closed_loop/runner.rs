use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::chassis::ExternalWrench;
use crate::driveline::{ActuationCommand, LagActuator};
use crate::error::{SimError, SimResult};
use crate::integrator::{dp45_step, IntegratorConfig};
use crate::metrics::{max_lateral_error, LateralErrorTrace};
use crate::track::{CurvilinearPose, TrackCenterline, DEFAULT_CORRIDOR};
use crate::vehicle::{initial_state, make_variant, ModelVariant, Pose2, VehicleModel, VehicleParameters, VehicleState};

use super::controller::{lateral_control, longitudinal_control, low_level, ControllerConfig};
use super::estimation::{Estimator, EstimatorConfig};
use super::reference::ReferenceLap;
use super::sensors::{sense, Measurement, SensorConfig};

/// Speed below which a run that has been going for a while counts as stalled.
const STALL_SPEED: f64 = 0.5;
const STALL_GRACE: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LoopConfig {
    pub integrator: IntegratorConfig,
    pub controller: ControllerConfig,
    pub sensors: SensorConfig,
    pub estimator: EstimatorConfig,
    /// Half-width of the drivable corridor (m).
    pub corridor: f64,
    /// Runs longer than this multiple of the reference lap time (plus 10 s)
    /// are abandoned.
    pub timeout_factor: f64,
}

impl Default for LoopConfig {
    fn default() -> Self {
        Self {
            integrator: IntegratorConfig::default(),
            controller: ControllerConfig::default(),
            sensors: SensorConfig::default(),
            estimator: EstimatorConfig::default(),
            corridor: DEFAULT_CORRIDOR,
            timeout_factor: 2.0,
        }
    }
}

impl LoopConfig {
    pub fn validate(&self) -> SimResult<()> {
        self.integrator.validate()?;
        self.controller.validate(self.integrator.step_size)?;
        self.sensors.validate()?;
        self.estimator.validate()?;
        if !(self.corridor > 0.0 && self.timeout_factor >= 1.0) {
            return Err(SimError::config("corridor must be > 0 and timeout factor >= 1"));
        }
        Ok(())
    }
}

/// Outcome of one closed-loop lap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub variant: String,
    pub seed: u64,
    pub completed: bool,
    /// Lap time (s), only for completed runs.
    pub lap_time: Option<f64>,
    /// Largest absolute lateral error (m), only for completed runs.
    pub d_max: Option<f64>,
    /// Distance covered before the run ended (m).
    pub distance: f64,
    pub failure: Option<String>,
}

/// One control-tick record.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TickRecord {
    pub t: f64,
    /// Unwrapped progress (m).
    pub s: f64,
    /// Lateral error against the reference offset (m).
    pub d: f64,
    pub v: f64,
    pub ax: f64,
    pub ay: f64,
    pub steering: f64,
    pub throttle: f64,
    pub brake: f64,
    pub gear: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub result: RunResult,
    /// Lateral error over progress, ending at the lap length when completed.
    pub trace: LateralErrorTrace,
    pub ticks: Vec<TickRecord>,
    /// Every tire normal load seen at the control ticks (N).
    pub wheel_loads: Vec<f64>,
}

/// Why a run stopped early.
enum Stop {
    Finished { lap_time: f64 },
    Failed(String),
}

/// A vehicle driving a reference lap under closed-loop control.
pub struct Simulation<'a> {
    pub model: VehicleModel,
    lap: &'a ReferenceLap,
    track: &'a TrackCenterline,
    cfg: LoopConfig,
    rng: ChaCha8Rng,
    estimator: Estimator,
    actuators: [LagActuator; 3],
    target: ActuationCommand,
    pub state: VehicleState,
    pub time: f64,
    /// Unwrapped distance along the track (m).
    pub progress: f64,
    pose: CurvilinearPose,
    external: ExternalWrench,
    steps_per_tick: usize,
    wheelbase: f64,
    mass: f64,
    /// Tick records so far.
    pub ticks: Vec<TickRecord>,
    /// Tire normal loads seen at the control ticks (N).
    pub wheel_loads: Vec<f64>,
}

impl<'a> Simulation<'a> {
    /// Trims the vehicle on the reference line at the start of the lap.
    pub fn new(
        params: VehicleParameters,
        lap: &'a ReferenceLap,
        track: &'a TrackCenterline,
        cfg: &LoopConfig,
        seed: u64,
    ) -> SimResult<Self> {
        cfg.validate()?;
        if (lap.length() - track.s_max).abs() > 1e-6 * track.s_max.max(1.0) {
            return Err(SimError::config(format!(
                "reference lap length {} m does not match track length {} m",
                lap.length(),
                track.s_max
            )));
        }
        let model = VehicleModel::new(params)?;
        let start = lap.samples[0];
        let c = track.at(start.s);
        let (sin_psi, cos_psi) = c.psi.sin_cos();
        let pose = Pose2 {
            x: c.x - start.d * sin_psi,
            y: c.y + start.d * cos_psi,
            yaw: c.psi,
        };
        let trim = initial_state(&model, pose, start.v)?;
        let bypass = model.params.flags.bypass_actuators;
        let a = model.params.actuators;
        let actuators = [
            LagActuator::new(a.steering, bypass, trim.command.steering),
            LagActuator::new(a.throttle, bypass, trim.command.throttle),
            LagActuator::new(a.brake, bypass, trim.command.brake),
        ];
        let h = cfg.integrator.step_size;
        let cpose = track.project(pose.x, pose.y, pose.yaw, Some(start.s), cfg.corridor)?;
        let mass = model.layout.total_mass;
        let ch = &model.params.chassis;
        Ok(Self {
            wheelbase: ch.l_f + ch.l_r,
            mass,
            external: track.external_wrench(&cpose, mass),
            pose: cpose,
            estimator: Estimator::new(&cfg.estimator, cfg.controller.period),
            steps_per_tick: cfg.controller.steps_per_tick(h),
            rng: ChaCha8Rng::seed_from_u64(seed),
            target: trim.command,
            state: trim.state,
            time: 0.0,
            progress: 0.0,
            actuators,
            model,
            lap,
            track,
            cfg: *cfg,
            ticks: Vec::new(),
            wheel_loads: Vec::new(),
        })
    }

    fn truth(&self, ax: f64, ay: f64) -> Measurement {
        let x = &self.state.0;
        use crate::vehicle::state as st;
        Measurement {
            x: x[st::X],
            y: x[st::Y],
            yaw: x[st::YAW],
            vx: x[st::VX],
            vy: x[st::VY],
            yaw_rate: x[st::YAW_RATE],
            ax,
            ay,
        }
    }

    /// Advances one physics step under the held targets. Returns the lap
    /// time when the finish line is crossed during the step.
    pub fn physics_step(&mut self) -> SimResult<Option<f64>> {
        let h = self.cfg.integrator.step_size;
        let [steer, throttle, brake] = &mut self.actuators;
        let u = ActuationCommand {
            steering: steer.delayed(self.target.steering, h),
            throttle: throttle.delayed(self.target.throttle, h),
            brake: brake.delayed(self.target.brake, h),
            gear: self.target.gear,
        };
        let model = &self.model;
        let ext = self.external;
        let next = dp45_step(
            |x, u: &ActuationCommand| model.derivatives(&VehicleState(*x), u, &ext),
            &self.state.0,
            &u,
            h,
        )
        .map_err(|e| match e {
            SimError::Integration { stage, .. } => SimError::Integration {
                stage,
                time: Some(self.time),
            },
            other => other,
        })?;
        self.state = VehicleState(next);
        self.time += h;

        use crate::vehicle::state as st;
        let x = &self.state.0;
        let pose = self.track.project(x[st::X], x[st::Y], x[st::YAW], Some(self.pose.s), self.cfg.corridor)?;
        let s_max = self.track.s_max;
        let mut ds = pose.s - self.pose.s;
        if self.track.closed {
            if ds < -0.5 * s_max {
                ds += s_max;
            } else if ds > 0.5 * s_max {
                ds -= s_max;
            }
        }
        let before = self.progress;
        self.progress += ds;
        self.pose = pose;
        self.external = self.track.external_wrench(&pose, self.mass);
        let length = self.lap.length();
        if self.progress >= length && before < length {
            let frac = if ds > 0.0 { (length - before) / ds } else { 1.0 };
            return Ok(Some(self.time - h + frac * h));
        }
        Ok(None)
    }

    /// Senses, estimates and sets new targets, then integrates one control
    /// period, recording the tick. Returns the lap time once the finish line
    /// is crossed.
    pub fn control_tick(&mut self) -> SimResult<Option<f64>> {
        let eval = self.model.evaluate(&self.state, &self.target, &self.external)?;
        self.wheel_loads.extend_from_slice(&eval.wheels.fz);
        let truth = self.truth(eval.ax, eval.ay);
        let measured = sense(&truth, &self.cfg.sensors, &mut self.rng);
        let est = self.estimator.estimate(&measured);
        let est_pose = self
            .track
            .project(est.x, est.y, est.yaw, Some(self.pose.s), self.cfg.corridor)?;

        let c = &self.cfg.controller;
        let steering = lateral_control(&est, &est_pose, self.lap, self.wheelbase, c);
        let a_target = longitudinal_control(&est, &est_pose, self.lap, c);
        let mut cmd = low_level(a_target, est.vx, self.target.gear, &self.model.params, c);
        cmd.steering = steering;
        self.target = cmd;

        let record = TickRecord {
            t: self.time,
            s: self.progress,
            d: self.pose.d - self.lap.at(self.pose.s).d,
            v: truth.vx,
            ax: eval.ax,
            ay: eval.ay,
            steering: cmd.steering,
            throttle: cmd.throttle,
            brake: cmd.brake,
            gear: cmd.gear,
        };
        self.ticks.push(record);
        for _ in 0..self.steps_per_tick {
            if let Some(lap_time) = self.physics_step()? {
                return Ok(Some(lap_time));
            }
        }
        Ok(None)
    }

    /// Steering, throttle, brake and gear targets currently held.
    pub fn targets(&self) -> ActuationCommand {
        self.target
    }

    /// External wrench currently applied.
    pub fn external(&self) -> ExternalWrench {
        self.external
    }

    fn time_limit(&self) -> f64 {
        let mut t = 0.0;
        for w in self.lap.samples.windows(2) {
            let v = 0.5 * (w[0].v + w[1].v);
            t += (w[1].s - w[0].s) / v.max(1.0);
        }
        self.cfg.timeout_factor * t + 10.0
    }

    /// Drives until the lap is complete or the run fails. Physical faults
    /// (leaving the corridor, numerical breakdown, stalling, timeout) end the
    /// run as not completed; they are not errors.
    pub fn run(mut self, variant: &str, seed: u64) -> RunOutput {
        let limit = self.time_limit();
        let stop = loop {
            match self.control_tick() {
                Ok(Some(lap_time)) => break Stop::Finished { lap_time },
                Ok(None) => {}
                Err(e) => break Stop::Failed(e.to_string()),
            }
            if self.time > limit {
                break Stop::Failed(format!("timeout after {:.1} s", self.time));
            }
            if self.time > STALL_GRACE && self.state.0[crate::vehicle::state::VX] < STALL_SPEED {
                break Stop::Failed(format!("vehicle stalled at s = {:.1} m", self.progress));
            }
        };

        let ticks = std::mem::take(&mut self.ticks);
        let wheel_loads = std::mem::take(&mut self.wheel_loads);
        let mut s: Vec<f64> = ticks.iter().map(|r| r.s).collect();
        let mut d: Vec<f64> = ticks.iter().map(|r| r.d).collect();
        let (completed, lap_time, failure) = match stop {
            Stop::Finished { lap_time } => {
                let length = self.lap.length();
                s.push(length);
                d.push(self.pose.d - self.lap.at(length).d);
                (true, Some(lap_time), None)
            }
            Stop::Failed(why) => (false, None, Some(why)),
        };
        // Progress is monotone in practice; enforce it so a brief reversal at
        // the start cannot invalidate the trace.
        for k in 1..s.len() {
            if s[k] < s[k - 1] {
                s[k] = s[k - 1];
            }
        }
        let trace = LateralErrorTrace::new(s, d).unwrap_or_default();
        let d_max = if completed { max_lateral_error(&trace).ok() } else { None };
        RunOutput {
            result: RunResult {
                variant: variant.to_string(),
                seed,
                completed: completed && d_max.is_some(),
                lap_time,
                d_max,
                distance: self.progress.max(0.0),
                failure,
            },
            trace,
            ticks,
            wheel_loads,
        }
    }
}

/// Builds `variant` from `base` and drives one lap of `lap` on `track`.
///
/// Configuration faults are returned as errors; everything that goes wrong
/// while driving yields a non-completed [`RunResult`].
pub fn run_closed_loop(
    variant: ModelVariant,
    base: &VehicleParameters,
    lap: &ReferenceLap,
    track: &TrackCenterline,
    cfg: &LoopConfig,
    seed: u64,
) -> SimResult<RunOutput> {
    let params = make_variant(base, variant)?;
    let sim = match Simulation::new(params, lap, track, cfg, seed) {
        Ok(sim) => sim,
        Err(e) if e.is_config() => return Err(e),
        Err(e) => {
            return Ok(RunOutput {
                result: RunResult {
                    variant: variant.id().into(),
                    seed,
                    completed: false,
                    lap_time: None,
                    d_max: None,
                    distance: 0.0,
                    failure: Some(e.to_string()),
                },
                trace: LateralErrorTrace::default(),
                ticks: Vec::new(),
                wheel_loads: Vec::new(),
            })
        }
    };
    Ok(sim.run(variant.id(), seed))
}
