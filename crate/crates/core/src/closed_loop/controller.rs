//! Reference path-tracking controller and low-level longitudinal control.
//!
//! A curvature feedforward plus lateral/heading feedback law stands in for an
//! optimising controller; it is deterministic and needs no solver.

use serde::{Deserialize, Serialize};

use crate::driveline::{engine_torque, gear_for_speed, ActuationCommand};
use crate::error::{SimError, SimResult};
use crate::track::CurvilinearPose;
use crate::vehicle::VehicleParameters;

use super::reference::ReferenceLap;
use super::sensors::Measurement;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LateralGains {
    /// Feedforward weight on the kinematic steering angle.
    pub curvature: f64,
    /// Steering per metre of lateral error (rad/m).
    pub offset: f64,
    /// Steering per radian of heading error.
    pub heading: f64,
    /// Steering per rad/s of yaw-rate error against `v kappa`.
    pub yaw_rate: f64,
    /// Extra steering per unit lateral acceleration (rad s^2/m).
    pub understeer: f64,
}

impl Default for LateralGains {
    fn default() -> Self {
        Self {
            curvature: 1.0,
            offset: 0.08,
            heading: 0.8,
            yaw_rate: 0.1,
            understeer: 0.0015,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ControllerConfig {
    /// Control period (s); a whole number of physics steps.
    pub period: f64,
    pub lateral: LateralGains,
    /// Curvature preview horizon (s).
    pub preview_time: f64,
    /// Speed preview horizon (s).
    pub speed_preview_time: f64,
    /// Speed-tracking gain (1/s).
    pub speed_gain: f64,
    /// Steering target limit (rad).
    pub steering_limit: f64,
    /// Acceleration limits (m/s^2).
    pub accel_min: f64,
    pub accel_max: f64,
    /// Net longitudinal demand below which neither pedal is used (m/s^2).
    pub coast_band: f64,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self {
            period: 0.0096,
            lateral: LateralGains::default(),
            preview_time: 0.12,
            speed_preview_time: 0.25,
            speed_gain: 0.8,
            steering_limit: 0.35,
            accel_min: -30.0,
            accel_max: 15.0,
            coast_band: 0.05,
        }
    }
}

impl ControllerConfig {
    pub fn validate(&self, physics_step: f64) -> SimResult<()> {
        let ratio = self.period / physics_step;
        if !(self.period > 0.0) || (ratio - ratio.round()).abs() > 1e-9 || ratio.round() < 1.0 {
            return Err(SimError::config(format!(
                "control period {} s is not a whole multiple of the physics step {} s",
                self.period, physics_step
            )));
        }
        if !(self.steering_limit > 0.0 && self.accel_max > 0.0 && self.accel_min < 0.0) {
            return Err(SimError::config("controller limits must be positive magnitudes"));
        }
        if !(self.preview_time >= 0.0 && self.speed_preview_time >= 0.0 && self.coast_band >= 0.0) {
            return Err(SimError::config("preview times and coast band must be >= 0"));
        }
        Ok(())
    }

    /// Physics steps per control tick.
    pub fn steps_per_tick(&self, physics_step: f64) -> usize {
        (self.period / physics_step).round() as usize
    }
}

/// Steering target: kinematic feedforward on the previewed curvature plus
/// feedback on lateral offset, heading and yaw rate. Left of the target
/// (positive offset error) steers right.
pub fn lateral_control(
    est: &Measurement,
    pose: &CurvilinearPose,
    lap: &ReferenceLap,
    wheelbase: f64,
    cfg: &ControllerConfig,
) -> f64 {
    let g = &cfg.lateral;
    let v = est.vx.max(0.0);
    let now = lap.at(pose.s);
    let ahead = lap.at(pose.s + v * cfg.preview_time);
    let feedforward = g.curvature * (wheelbase * ahead.kappa).atan()
        + g.understeer * v * v * ahead.kappa;
    let feedback = -g.offset * (pose.d - now.d)
        - g.heading * pose.heading
        - g.yaw_rate * (est.yaw_rate - v * now.kappa);
    (feedforward + feedback).clamp(-cfg.steering_limit, cfg.steering_limit)
}

/// Target longitudinal acceleration: previewed feedforward plus proportional
/// speed tracking, clamped.
pub fn longitudinal_control(
    est: &Measurement,
    pose: &CurvilinearPose,
    lap: &ReferenceLap,
    cfg: &ControllerConfig,
) -> f64 {
    let v = est.vx;
    let ahead = lap.at(pose.s + v.max(0.0) * cfg.speed_preview_time);
    let a = ahead.ax + cfg.speed_gain * (ahead.v - v);
    a.clamp(cfg.accel_min, cfg.accel_max)
}

/// Maps a target acceleration to throttle, brake pressure and gear.
///
/// The wheel force demand is `m a + drag`. Positive demand is met by the
/// engine through the inverted map; demand below what engine braking alone
/// delivers is met by the brakes. Throttle and brake are never both applied.
pub fn low_level(
    a_target: f64,
    v: f64,
    current_gear: usize,
    p: &VehicleParameters,
    cfg: &ControllerConfig,
) -> ActuationCommand {
    let pt = &p.powertrain;
    let gear = gear_for_speed(v.max(0.0), Some(current_gear), pt);
    let mass = p.total_mass();
    let demand = mass * a_target + p.aero.drag_area * v * v.abs();
    let mut cmd = ActuationCommand {
        gear,
        ..Default::default()
    };
    if demand.abs() < mass * cfg.coast_band {
        return cmd;
    }
    let r = pt.wheel_radius;
    let ratio = pt.ratio(gear);
    let rpm = pt.engine_speed(v.max(0.0) / r, gear);
    let engine = demand * r / ratio;
    let idle = engine_torque(rpm, 0.0, &pt.engine_map);
    if demand > 0.0 {
        cmd.throttle = pt.engine_map.throttle_for_torque(rpm, engine).clamp(0.0, 1.0);
    } else if engine < idle && pt.brake_gain > 0.0 {
        let brake_torque = (idle - engine) * ratio;
        cmd.brake = brake_torque / pt.brake_gain;
    }
    cmd
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closed_loop::reference::LapSample;
    use crate::vehicle::testing::baseline;

    fn lap(kappa: f64) -> ReferenceLap {
        ReferenceLap::new(
            (0..=50)
                .map(|i| LapSample {
                    s: i as f64 * 2.0,
                    d: 0.0,
                    v: 30.0,
                    kappa,
                    ax: 0.0,
                })
                .collect(),
        )
        .unwrap()
    }

    fn cfg_no_extras() -> ControllerConfig {
        ControllerConfig {
            lateral: LateralGains {
                yaw_rate: 0.0,
                understeer: 0.0,
                ..Default::default()
            },
            ..Default::default()
        }
    }

    fn est(v: f64) -> Measurement {
        Measurement {
            vx: v,
            ..Default::default()
        }
    }

    #[test]
    fn aligned_on_straight_is_zero() {
        let pose = CurvilinearPose::default();
        assert_eq!(lateral_control(&est(30.0), &pose, &lap(0.0), 3.0, &cfg_no_extras()), 0.0);
    }

    #[test]
    fn curvature_feedforward() {
        let pose = CurvilinearPose::default();
        let est = Measurement {
            vx: 30.0,
            yaw_rate: 0.3,
            ..Default::default()
        };
        let d = lateral_control(&est, &pose, &lap(0.01), 3.0, &cfg_no_extras());
        assert!((d - 0.03f64.atan()).abs() < 1e-12);
    }

    #[test]
    fn left_offset_steers_right() {
        let mut pose = CurvilinearPose::default();
        let base = lateral_control(&est(30.0), &pose, &lap(0.0), 3.0, &cfg_no_extras());
        pose.d = 0.5;
        assert!(lateral_control(&est(30.0), &pose, &lap(0.0), 3.0, &cfg_no_extras()) < base);
    }

    #[test]
    fn speed_law() {
        let cfg = ControllerConfig {
            speed_gain: 0.5,
            ..Default::default()
        };
        let pose = CurvilinearPose::default();
        assert_eq!(longitudinal_control(&est(30.0), &pose, &lap(0.0), &cfg), 0.0);
        assert!((longitudinal_control(&est(28.0), &pose, &lap(0.0), &cfg) - 1.0).abs() < 1e-12);
        assert_eq!(longitudinal_control(&est(-1000.0), &pose, &lap(0.0), &cfg), cfg.accel_max);
    }

    #[test]
    fn brake_pressure_from_torque_balance() {
        let mut p = baseline();
        p.powertrain.brake_gain = 100.0;
        p.powertrain.wheel_radius = 0.3;
        p.chassis.sprung_mass = 1000.0 - p.suspension.unsprung_mass.iter().sum::<f64>();
        let cmd = low_level(-10.0, 0.0, 1, &p, &ControllerConfig::default());
        assert_eq!(cmd.throttle, 0.0);
        assert!((cmd.brake - 30.0).abs() < 1e-9, "{}", cmd.brake);
    }

    #[test]
    fn pedals_are_exclusive_and_coast() {
        let p = baseline();
        let cfg = ControllerConfig::default();
        for a in [-20.0, -3.0, -0.5, 0.0, 0.5, 3.0, 12.0] {
            for v in [5.0, 30.0, 70.0] {
                let c = low_level(a, v, gear_for_speed(v, None, &p.powertrain), &p, &cfg);
                assert!(c.throttle * c.brake == 0.0);
            }
        }
        assert_eq!(low_level(12.0, 30.0, 3, &p, &cfg).brake, 0.0);
        let coast = low_level(0.01, 0.0, 1, &p, &cfg);
        assert_eq!((coast.throttle, coast.brake), (0.0, 0.0));
    }

    #[test]
    fn period_must_align() {
        let cfg = ControllerConfig {
            period: 0.01,
            ..Default::default()
        };
        assert!(cfg.validate(800e-6).unwrap_err().is_config());
        assert!(ControllerConfig::default().validate(800e-6).is_ok());
        assert_eq!(ControllerConfig::default().steps_per_tick(800e-6), 12);
    }
}
