use serde::{Deserialize, Serialize};

use crate::error::{SimError, SimResult};
use crate::track::wrap_angle;

use super::sensors::Measurement;

/// Low-pass cutoffs per channel group (Hz); `None` passes the channel through.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorConfig {
    #[serde(default)]
    pub position_hz: Option<f64>,
    #[serde(default)]
    pub yaw_hz: Option<f64>,
    #[serde(default)]
    pub velocity_hz: Option<f64>,
    #[serde(default)]
    pub yaw_rate_hz: Option<f64>,
    #[serde(default)]
    pub acceleration_hz: Option<f64>,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            position_hz: None,
            yaw_hz: None,
            velocity_hz: Some(20.0),
            yaw_rate_hz: Some(20.0),
            acceleration_hz: Some(10.0),
        }
    }
}

impl EstimatorConfig {
    pub fn pass_through() -> Self {
        Self {
            position_hz: None,
            yaw_hz: None,
            velocity_hz: None,
            yaw_rate_hz: None,
            acceleration_hz: None,
        }
    }

    pub fn validate(&self) -> SimResult<()> {
        let all = [
            self.position_hz,
            self.yaw_hz,
            self.velocity_hz,
            self.yaw_rate_hz,
            self.acceleration_hz,
        ];
        if all.iter().flatten().any(|f| !(*f > 0.0)) {
            return Err(SimError::config("estimator cutoffs must be positive"));
        }
        Ok(())
    }
}

/// Smoothing factor of a sampled single-pole low-pass.
pub fn smoothing_factor(cutoff_hz: Option<f64>, period: f64) -> f64 {
    match cutoff_hz {
        Some(fc) if fc.is_finite() => 1.0 - (-2.0 * std::f64::consts::PI * fc * period).exp(),
        _ => 1.0,
    }
}

/// Per-channel first-order low-pass filter running at the control period.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimator {
    a_pos: f64,
    a_yaw: f64,
    a_vel: f64,
    a_rate: f64,
    a_acc: f64,
    state: Option<Measurement>,
}

impl Estimator {
    pub fn new(cfg: &EstimatorConfig, period: f64) -> Self {
        Self {
            a_pos: smoothing_factor(cfg.position_hz, period),
            a_yaw: smoothing_factor(cfg.yaw_hz, period),
            a_vel: smoothing_factor(cfg.velocity_hz, period),
            a_rate: smoothing_factor(cfg.yaw_rate_hz, period),
            a_acc: smoothing_factor(cfg.acceleration_hz, period),
            state: None,
        }
    }

    /// Filters one measurement. The first call initialises the filter.
    pub fn estimate(&mut self, m: &Measurement) -> Measurement {
        let Some(prev) = self.state else {
            self.state = Some(*m);
            return *m;
        };
        // a = 1 is an exact pass-through, not merely a numerically close one.
        let f = |a: f64, y: f64, x: f64| if a == 1.0 { x } else { y + a * (x - y) };
        let next = Measurement {
            x: f(self.a_pos, prev.x, m.x),
            y: f(self.a_pos, prev.y, m.y),
            yaw: if self.a_yaw == 1.0 {
                m.yaw
            } else {
                wrap_angle(prev.yaw + self.a_yaw * wrap_angle(m.yaw - prev.yaw))
            },
            vx: f(self.a_vel, prev.vx, m.vx),
            vy: f(self.a_vel, prev.vy, m.vy),
            yaw_rate: f(self.a_rate, prev.yaw_rate, m.yaw_rate),
            ax: f(self.a_acc, prev.ax, m.ax),
            ay: f(self.a_acc, prev.ay, m.ay),
        };
        self.state = Some(next);
        next
    }
}
