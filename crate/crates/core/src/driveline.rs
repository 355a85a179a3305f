//! Engine map, gearbox, spool differential, brakes and actuator lags.

use std::collections::VecDeque;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::chassis::{PerWheel, FL, FR, RL, RR};
use crate::error::{SimError, SimResult};

const RAD_S_TO_RPM: f64 = 60.0 / (2.0 * std::f64::consts::PI);

/// Wheel speed below which brake torque is faded linearly to zero, so the
/// brake never drives a wheel through standstill.
pub const BRAKE_FADE_SPEED: f64 = 2.0;

/// Engine torque over (engine speed x throttle).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineMap {
    /// Engine speed breakpoints (rev/min), strictly increasing.
    pub speeds: Vec<f64>,
    /// Throttle breakpoints in [0, 1], strictly increasing.
    pub throttles: Vec<f64>,
    /// `torque[i][j]` at `speeds[i]`, `throttles[j]` (N m).
    pub torque: Vec<Vec<f64>>,
}

fn strictly_increasing(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite()) && v.windows(2).all(|w| w[1] > w[0])
}

/// Cell index and fraction for `x` on `grid`, clamped to the grid edges.
fn locate(grid: &[f64], x: f64) -> (usize, f64) {
    let last = grid.len() - 1;
    if x <= grid[0] {
        return (0, 0.0);
    }
    if x >= grid[last] {
        return (last - 1, 1.0);
    }
    let i = grid.partition_point(|g| *g <= x) - 1;
    let i = i.min(last - 1);
    (i, (x - grid[i]) / (grid[i + 1] - grid[i]))
}

impl EngineMap {
    pub fn validate(&self) -> SimResult<()> {
        if self.speeds.len() < 2 || self.throttles.len() < 2 {
            return Err(SimError::config("engine map needs at least a 2x2 grid"));
        }
        if !strictly_increasing(&self.speeds) || !strictly_increasing(&self.throttles) {
            return Err(SimError::config("engine map breakpoints must be strictly increasing"));
        }
        if self.throttles[0] < 0.0 || *self.throttles.last().unwrap() > 1.0 {
            return Err(SimError::config("engine map throttle breakpoints must lie in [0, 1]"));
        }
        if self.torque.len() != self.speeds.len()
            || self.torque.iter().any(|r| r.len() != self.throttles.len())
        {
            return Err(SimError::config("engine map table shape does not match its breakpoints"));
        }
        for row in &self.torque {
            if row.iter().any(|t| !t.is_finite()) {
                return Err(SimError::config("engine map contains non-finite torque"));
            }
            if row.windows(2).any(|w| w[1] < w[0]) {
                return Err(SimError::config("engine torque must be non-decreasing in throttle"));
            }
        }
        Ok(())
    }

    pub fn max_speed(&self) -> f64 {
        *self.speeds.last().unwrap()
    }

    /// Reads a CSV whose header is `rpm,<throttle breakpoints...>` and whose
    /// rows hold the engine speed followed by torque values.
    pub fn load_csv(path: &Path) -> SimResult<Self> {
        let file = std::fs::File::open(path).map_err(|e| SimError::io(path, e))?;
        let mut rdr = csv::Reader::from_reader(file);
        let headers = rdr.headers()?.clone();
        if headers.len() < 3 {
            return Err(SimError::config(format!(
                "{}: engine map header needs rpm plus at least two throttle columns",
                path.display()
            )));
        }
        let parse = |s: &str| -> SimResult<f64> {
            s.trim()
                .parse::<f64>()
                .map_err(|_| SimError::config(format!("{}: bad number '{s}'", path.display())))
        };
        let throttles = headers.iter().skip(1).map(parse).collect::<SimResult<Vec<_>>>()?;
        let mut speeds = Vec::new();
        let mut torque = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let vals = rec.iter().map(parse).collect::<SimResult<Vec<_>>>()?;
            if vals.len() != throttles.len() + 1 {
                return Err(SimError::config(format!(
                    "{}: engine map row has {} cells, expected {}",
                    path.display(),
                    vals.len(),
                    throttles.len() + 1
                )));
            }
            speeds.push(vals[0]);
            torque.push(vals[1..].to_vec());
        }
        let map = Self {
            speeds,
            throttles,
            torque,
        };
        map.validate()?;
        Ok(map)
    }

    pub fn save_csv(&self, path: &Path) -> SimResult<()> {
        let file = std::fs::File::create(path).map_err(|e| SimError::io(path, e))?;
        let mut w = csv::Writer::from_writer(file);
        let mut header = vec!["rpm".to_string()];
        header.extend(self.throttles.iter().map(|t| format!("{t}")));
        w.write_record(&header)?;
        for (s, row) in self.speeds.iter().zip(&self.torque) {
            let mut rec = vec![format!("{s}")];
            rec.extend(row.iter().map(|t| format!("{t}")));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| SimError::io(path, e))?;
        Ok(())
    }

    /// Torque at `throttle` along the speed-interpolated row.
    fn row_at(&self, rpm: f64) -> impl Iterator<Item = f64> + '_ {
        let (i, fs) = locate(&self.speeds, rpm);
        let (a, b) = (&self.torque[i], &self.torque[i + 1]);
        a.iter().zip(b).map(move |(ta, tb)| ta + fs * (tb - ta))
    }

    /// Throttle that yields `torque` at `rpm`, clamped to the map's range.
    pub fn throttle_for_torque(&self, rpm: f64, torque: f64) -> f64 {
        let row: Vec<f64> = self.row_at(rpm).collect();
        if torque <= row[0] {
            return self.throttles[0];
        }
        for j in 0..row.len() - 1 {
            if torque <= row[j + 1] {
                let span = row[j + 1] - row[j];
                let f = if span > 0.0 { (torque - row[j]) / span } else { 0.0 };
                return self.throttles[j] + f * (self.throttles[j + 1] - self.throttles[j]);
            }
        }
        *self.throttles.last().unwrap()
    }
}

/// Bilinear interpolation of the engine map, clamped at the grid edges.
pub fn engine_torque(engine_speed: f64, throttle: f64, map: &EngineMap) -> f64 {
    let (i, fs) = locate(&map.speeds, engine_speed);
    let (j, ft) = locate(&map.throttles, throttle);
    let t = &map.torque;
    let lo = t[i][j] + ft * (t[i][j + 1] - t[i][j]);
    let hi = t[i + 1][j] + ft * (t[i + 1][j + 1] - t[i + 1][j]);
    lo + fs * (hi - lo)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowertrainParameters {
    pub engine_map: EngineMap,
    /// Overall ratios per gear including the final drive; gear 1 first.
    pub gear_ratios: Vec<f64>,
    /// Spin inertia per wheel including its share of the driveline (kg m^2).
    pub wheel_inertia: PerWheel,
    /// Effective rolling radius (m).
    pub wheel_radius: f64,
    /// Brake torque per unit pressure summed over all four wheels (N m/bar).
    pub brake_gain: f64,
    /// Front share of the brake torque.
    pub brake_balance: f64,
    /// Engine speed that triggers an upshift (rev/min).
    pub upshift_rpm: f64,
    /// A downshift happens once the lower gear would sit this far below the
    /// upshift speed (rev/min).
    pub shift_hysteresis_rpm: f64,
}

impl PowertrainParameters {
    pub fn validate(&self) -> SimResult<()> {
        self.engine_map.validate()?;
        if self.gear_ratios.is_empty() || self.gear_ratios.iter().any(|g| !(*g > 0.0)) {
            return Err(SimError::config("gear ratios must be positive and non-empty"));
        }
        if !(self.wheel_radius > 0.0) {
            return Err(SimError::config("wheel radius must be positive"));
        }
        if self.wheel_inertia.iter().any(|i| !(*i > 0.0)) {
            return Err(SimError::config("wheel inertias must be positive"));
        }
        if !(self.brake_gain >= 0.0) || !(0.0..=1.0).contains(&self.brake_balance) {
            return Err(SimError::config("brake gain must be >= 0 and balance within [0, 1]"));
        }
        if !(self.upshift_rpm > 0.0 && self.shift_hysteresis_rpm >= 0.0) {
            return Err(SimError::config("shift thresholds must be positive"));
        }
        Ok(())
    }

    pub fn gear_count(&self) -> usize {
        self.gear_ratios.len()
    }

    /// Overall ratio of a 1-based gear index.
    pub fn ratio(&self, gear: usize) -> f64 {
        self.gear_ratios[gear.clamp(1, self.gear_ratios.len()) - 1]
    }

    /// Engine speed (rev/min) for a rear-axle spin rate.
    pub fn engine_speed(&self, omega_rear: f64, gear: usize) -> f64 {
        omega_rear * self.ratio(gear) * RAD_S_TO_RPM
    }

    /// Per-wheel brake torque magnitudes at `pressure`.
    pub fn brake_torques(&self, pressure: f64) -> PerWheel {
        let total = pressure.max(0.0) * self.brake_gain;
        let front = total * self.brake_balance / 2.0;
        let rear = total * (1.0 - self.brake_balance) / 2.0;
        [front, front, rear, rear]
    }
}

#[inline]
fn brake_direction(omega: f64) -> f64 {
    (omega / BRAKE_FADE_SPEED).clamp(-1.0, 1.0)
}

/// Spin accelerations of the four wheels.
///
/// The rear wheels are locked together by the spool: the returned rear
/// accelerations are identical, so two equal rear speeds stay equal.
/// `fx` is the longitudinal tire force of each wheel in its own frame.
pub fn wheel_spin_derivatives(
    omega: &PerWheel,
    gear: usize,
    throttle: f64,
    brake_pressure: f64,
    fx: &PerWheel,
    p: &PowertrainParameters,
) -> PerWheel {
    let r = p.wheel_radius;
    let brake = p.brake_torques(brake_pressure);
    let mut out = [0.0; 4];
    for i in [FL, FR] {
        out[i] = (-brake[i] * brake_direction(omega[i]) - fx[i] * r) / p.wheel_inertia[i];
    }
    let omega_rear = 0.5 * (omega[RL] + omega[RR]);
    let rpm = p.engine_speed(omega_rear, gear);
    let drive = engine_torque(rpm, throttle, &p.engine_map) * p.ratio(gear);
    let braking = (brake[RL] + brake[RR]) * brake_direction(omega_rear);
    let reaction = (fx[RL] + fx[RR]) * r;
    let rear = (drive - braking - reaction) / (p.wheel_inertia[RL] + p.wheel_inertia[RR]);
    out[RL] = rear;
    out[RR] = rear;
    out
}

/// Gear selection with hysteresis.
///
/// Without a current gear, returns the lowest gear whose engine speed stays
/// below the upshift threshold. With one, upshifts once the threshold is
/// reached and downshifts once the next lower gear would run below the
/// threshold minus the hysteresis band.
pub fn gear_for_speed(v: f64, current: Option<usize>, p: &PowertrainParameters) -> usize {
    let n = p.gear_count();
    let rpm = |g: usize| p.engine_speed(v.max(0.0) / p.wheel_radius, g);
    match current {
        None => (1..=n).find(|g| rpm(*g) < p.upshift_rpm).unwrap_or(n),
        Some(g) => {
            let mut g = g.clamp(1, n);
            while g < n && rpm(g) >= p.upshift_rpm {
                g += 1;
            }
            while g > 1 && rpm(g - 1) < p.upshift_rpm - p.shift_hysteresis_rpm {
                g -= 1;
            }
            g
        }
    }
}

/// Output of the low-level controller.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActuationCommand {
    /// Steering target (rad).
    pub steering: f64,
    /// Throttle in [0, 1].
    pub throttle: f64,
    /// Brake pressure (bar).
    pub brake: f64,
    /// 1-based gear index.
    pub gear: usize,
}

impl Default for ActuationCommand {
    fn default() -> Self {
        Self {
            steering: 0.0,
            throttle: 0.0,
            brake: 0.0,
            gear: 1,
        }
    }
}

/// Dead time plus first-order lag constants of one actuator channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LagParameters {
    pub dead_time: f64,
    pub tau: f64,
}

impl LagParameters {
    pub fn validate(&self, channel: &str) -> SimResult<()> {
        if !(self.dead_time >= 0.0 && self.tau > 0.0) {
            return Err(SimError::config(format!(
                "{channel} actuator needs dead time >= 0 and tau > 0"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActuatorParameters {
    pub steering: LagParameters,
    pub throttle: LagParameters,
    pub brake: LagParameters,
}

impl ActuatorParameters {
    pub fn validate(&self) -> SimResult<()> {
        self.steering.validate("steering")?;
        self.throttle.validate("throttle")?;
        self.brake.validate("brake")
    }
}

/// Transport delay realised as a timestamped command queue.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayLine {
    dead_time: f64,
    clock: f64,
    /// (release time, value); the front entry is the current output.
    queue: VecDeque<(f64, f64)>,
}

const CLOCK_EPS: f64 = 1e-9;

impl DelayLine {
    pub fn new(dead_time: f64, initial: f64) -> Self {
        let mut queue = VecDeque::new();
        queue.push_back((f64::NEG_INFINITY, initial));
        Self {
            dead_time,
            clock: 0.0,
            queue,
        }
    }

    /// Registers `command` at the current time and returns the delayed value
    /// to hold over the next `dt`.
    pub fn step(&mut self, command: f64, dt: f64) -> f64 {
        self.queue.push_back((self.clock + self.dead_time, command));
        while self.queue.len() > 1 && self.queue[1].0 <= self.clock + CLOCK_EPS {
            self.queue.pop_front();
        }
        let out = self.queue[0].1;
        self.clock += dt;
        out
    }

    pub fn output(&self) -> f64 {
        self.queue[0].1
    }
}

/// Dead time followed by a first-order lag, or a pass-through when bypassed.
#[derive(Debug, Clone, PartialEq)]
pub struct LagActuator {
    pub params: LagParameters,
    pub bypass: bool,
    pub value: f64,
    delay: DelayLine,
}

pub type SteeringActuator = LagActuator;

impl LagActuator {
    pub fn new(params: LagParameters, bypass: bool, initial: f64) -> Self {
        Self {
            params,
            bypass,
            value: initial,
            delay: DelayLine::new(params.dead_time, initial),
        }
    }

    /// Delays `target`; the lag itself is left to the caller (used when the
    /// lag is part of an integrated state vector).
    pub fn delayed(&mut self, target: f64, dt: f64) -> f64 {
        if self.bypass {
            target
        } else {
            self.delay.step(target, dt)
        }
    }

    /// Advances by `dt`, discretising the lag exactly for a held input.
    pub fn step(&mut self, target: f64, dt: f64) -> f64 {
        if self.bypass {
            self.value = target;
            return target;
        }
        let u = self.delay.step(target, dt);
        self.value = u + (self.value - u) * (-dt / self.params.tau).exp();
        self.value
    }
}

pub fn steering_step(mut act: SteeringActuator, target: f64, dt: f64) -> SteeringActuator {
    act.step(target, dt);
    act
}

pub fn pedal_lag_step(mut act: LagActuator, target: f64, dt: f64) -> LagActuator {
    act.step(target, dt);
    act
}

/// Time derivative of a lagged actuator state.
#[inline]
pub fn lag_derivative(value: f64, delayed_target: f64, tau: f64) -> f64 {
    (delayed_target - value) / tau
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map() -> EngineMap {
        EngineMap {
            speeds: vec![1000.0, 5000.0, 9000.0],
            throttles: vec![0.0, 0.5, 1.0],
            torque: vec![
                vec![-20.0, 100.0, 200.0],
                vec![-40.0, 200.0, 500.0],
                vec![-60.0, 150.0, 400.0],
            ],
        }
    }

    pub(crate) fn powertrain() -> PowertrainParameters {
        PowertrainParameters {
            engine_map: map(),
            gear_ratios: vec![8.0, 6.0, 4.5, 3.5, 3.0, 2.6],
            wheel_inertia: [1.5, 1.5, 2.0, 2.0],
            wheel_radius: 0.3,
            brake_gain: 400.0,
            brake_balance: 0.6,
            upshift_rpm: 8000.0,
            shift_hysteresis_rpm: 1500.0,
        }
    }

    #[test]
    fn node_and_midpoint() {
        let m = map();
        assert_eq!(engine_torque(5000.0, 0.5, &m), 200.0);
        assert_eq!(engine_torque(1000.0, 1.0, &m), 200.0);
        let mid = engine_torque(3000.0, 0.25, &m);
        assert!((mid - (-20.0 + 100.0 - 40.0 + 200.0) / 4.0).abs() < 1e-12);
        assert_eq!(engine_torque(7000.0, 0.0, &m), -50.0);
    }

    #[test]
    fn edges_clamp() {
        let m = map();
        assert_eq!(engine_torque(0.0, 1.0, &m), 200.0);
        assert_eq!(engine_torque(20000.0, 2.0, &m), 400.0);
    }

    #[test]
    fn malformed_maps_are_rejected() {
        let mut m = map();
        m.torque[1][2] = 0.0;
        assert!(m.validate().unwrap_err().is_config());
        let mut m = map();
        m.speeds = vec![1000.0];
        assert!(m.validate().is_err());
    }

    #[test]
    fn throttle_inverse() {
        let m = map();
        for rpm in [1500.0, 4000.0, 7777.0] {
            for th in [0.1, 0.4, 0.77, 1.0] {
                let t = engine_torque(rpm, th, &m);
                assert!((m.throttle_for_torque(rpm, t) - th).abs() < 1e-12);
            }
        }
        assert_eq!(m.throttle_for_torque(3000.0, 1e6), 1.0);
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("map.csv");
        map().save_csv(&path).unwrap();
        assert_eq!(EngineMap::load_csv(&path).unwrap(), map());
    }

    #[test]
    fn spin_at_rest_is_zero() {
        let mut p = powertrain();
        for row in &mut p.engine_map.torque {
            row[0] = 0.0;
        }
        assert_eq!(wheel_spin_derivatives(&[0.0; 4], 1, 0.0, 0.0, &[0.0; 4], &p), [0.0; 4]);
    }

    #[test]
    fn pure_brake_torque_on_front_wheel() {
        let mut p = powertrain();
        p.wheel_inertia = [2.0; 4];
        // 1000 N m on each front wheel.
        p.brake_balance = 1.0;
        p.brake_gain = 2000.0;
        let d = wheel_spin_derivatives(&[50.0, 50.0, 50.0, 50.0], 1, 0.0, 1.0, &[0.0; 4], &p);
        assert!((d[FL] + 500.0).abs() < 1e-12);
        assert!((d[FR] + 500.0).abs() < 1e-12);
    }

    #[test]
    fn spool_shares_acceleration() {
        let p = powertrain();
        let d = wheel_spin_derivatives(&[80.0, 80.0, 81.0, 81.0], 3, 0.7, 3.0, &[100.0, -50.0, 900.0, 300.0], &p);
        assert_eq!(d[RL], d[RR]);
    }

    #[test]
    fn gear_selection() {
        let p = powertrain();
        assert_eq!(gear_for_speed(0.0, None, &p), 1);
        let mut last = 1;
        for i in 0..400 {
            let g = gear_for_speed(i as f64 * 0.25, None, &p);
            assert!(g >= last);
            last = g;
        }
        // Speed at which gear 2 reaches the upshift threshold.
        let v2 = p.upshift_rpm / RAD_S_TO_RPM / p.ratio(2) * p.wheel_radius;
        assert_eq!(gear_for_speed(v2 * (1.0 + 1e-12), Some(2), &p), 3);
        // Just below threshold minus hysteresis in gear 2 while in gear 3.
        let v_down =
            (p.upshift_rpm - p.shift_hysteresis_rpm) / RAD_S_TO_RPM / p.ratio(2) * p.wheel_radius;
        assert_eq!(gear_for_speed(v_down * 0.999, Some(3), &p), 2);
        assert_eq!(gear_for_speed(v_down * 1.001, Some(3), &p), 3);
    }

    #[test]
    fn steering_step_response() {
        let params = LagParameters {
            dead_time: 0.02,
            tau: 0.05,
        };
        let mut act = SteeringActuator::new(params, false, 0.0);
        let dt = 0.001;
        for _ in 0..70 {
            act = steering_step(act, 0.1, dt);
        }
        let expected = 0.1 * (1.0 - (-1.0f64).exp());
        assert!((act.value - expected).abs() / expected < 0.01, "{}", act.value);
        for _ in 0..2000 {
            act = steering_step(act, 0.1, dt);
        }
        assert!((act.value - 0.1).abs() < 1e-6);
    }

    #[test]
    fn dead_time_hides_the_command() {
        let params = LagParameters {
            dead_time: 0.02,
            tau: 0.05,
        };
        let mut act = LagActuator::new(params, false, 0.0);
        for _ in 0..20 {
            act = pedal_lag_step(act, 1.0, 0.001);
            assert_eq!(act.value, 0.0);
        }
        act = pedal_lag_step(act, 1.0, 0.001);
        assert!(act.value > 0.0);
    }

    #[test]
    fn pedal_zero_and_one_tau() {
        let params = LagParameters {
            dead_time: 0.01,
            tau: 0.04,
        };
        let mut act = LagActuator::new(params, false, 0.0);
        for _ in 0..100 {
            act = pedal_lag_step(act, 0.0, 0.0008);
        }
        assert_eq!(act.value, 0.0);
        let mut act = LagActuator::new(params, false, 0.0);
        // 10 ms dead time + 40 ms lag at 0.8 ms steps = 62.5 steps; use 0.5 ms.
        for _ in 0..100 {
            act = pedal_lag_step(act, 1.0, 0.0005);
        }
        assert!((act.value - (1.0 - (-1.0f64).exp())).abs() < 0.01 * 0.632);
    }

    #[test]
    fn bypass_is_identity() {
        let params = LagParameters {
            dead_time: 0.05,
            tau: 0.1,
        };
        let mut act = LagActuator::new(params, true, 0.0);
        for target in [0.1, -0.3, 0.25] {
            act = steering_step(act, target, 0.0008);
            assert_eq!(act.value, target);
        }
    }

    #[test]
    fn monotone_command_gives_monotone_output() {
        let params = LagParameters {
            dead_time: 0.015,
            tau: 0.03,
        };
        let mut act = LagActuator::new(params, false, 0.0);
        let mut last = 0.0;
        for k in 0..500 {
            act.step((k as f64 * 0.002).min(0.5), 0.0008);
            assert!(act.value >= last);
            last = act.value;
        }
    }
}
