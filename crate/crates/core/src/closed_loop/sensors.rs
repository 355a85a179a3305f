use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{SimError, SimResult};

/// Standard deviations of the additive Gaussian sensor noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseLevels {
    /// Position (m).
    pub position: f64,
    /// Velocity (m/s).
    pub velocity: f64,
    /// Heading (rad).
    pub yaw: f64,
    /// Yaw rate (rad/s).
    pub yaw_rate: f64,
    /// Acceleration (m/s^2).
    pub acceleration: f64,
}

impl Default for NoiseLevels {
    fn default() -> Self {
        Self {
            position: 0.02,
            velocity: 0.05,
            yaw: 0.002,
            yaw_rate: 0.005,
            acceleration: 0.2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorConfig {
    #[serde(default)]
    pub noise_enabled: bool,
    #[serde(default)]
    pub noise: NoiseLevels,
}

impl SensorConfig {
    pub fn validate(&self) -> SimResult<()> {
        let n = &self.noise;
        let all = [n.position, n.velocity, n.yaw, n.yaw_rate, n.acceleration];
        if all.iter().any(|s| !(*s >= 0.0 && s.is_finite())) {
            return Err(SimError::config("sensor noise levels must be finite and >= 0"));
        }
        Ok(())
    }
}

/// Vehicle motion as the sensors see it: planar pose on the track surface,
/// body-frame velocities and accelerations.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Measurement {
    pub x: f64,
    pub y: f64,
    pub yaw: f64,
    pub vx: f64,
    pub vy: f64,
    pub yaw_rate: f64,
    pub ax: f64,
    pub ay: f64,
}

/// Adds seeded Gaussian noise; with noise disabled the truth passes through
/// unchanged and the generator is not touched.
pub fn sense<R: Rng + ?Sized>(truth: &Measurement, cfg: &SensorConfig, rng: &mut R) -> Measurement {
    if !cfg.noise_enabled {
        return *truth;
    }
    let n = &cfg.noise;
    let mut draw = |sigma: f64| {
        if sigma > 0.0 {
            Normal::new(0.0, sigma).expect("validated sigma").sample(rng)
        } else {
            0.0
        }
    };
    Measurement {
        x: truth.x + draw(n.position),
        y: truth.y + draw(n.position),
        yaw: truth.yaw + draw(n.yaw),
        vx: truth.vx + draw(n.velocity),
        vy: truth.vy + draw(n.velocity),
        yaw_rate: truth.yaw_rate + draw(n.yaw_rate),
        ax: truth.ax + draw(n.acceleration),
        ay: truth.ay + draw(n.acceleration),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn truth() -> Measurement {
        Measurement {
            x: 12.5,
            y: -3.0,
            yaw: 0.7,
            vx: 40.0,
            vy: 0.2,
            yaw_rate: 0.1,
            ax: 1.0,
            ay: 9.0,
        }
    }

    #[test]
    fn disabled_noise_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = sense(&truth(), &SensorConfig::default(), &mut rng);
        assert_eq!(m, truth());
    }

    #[test]
    fn seeded_noise_repeats() {
        let cfg = SensorConfig {
            noise_enabled: true,
            ..Default::default()
        };
        let mut a = ChaCha8Rng::seed_from_u64(42);
        let mut b = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..100 {
            assert_eq!(sense(&truth(), &cfg, &mut a), sense(&truth(), &cfg, &mut b));
        }
    }

    #[test]
    fn position_noise_has_requested_spread() {
        let cfg = SensorConfig {
            noise_enabled: true,
            noise: NoiseLevels {
                position: 0.1,
                ..Default::default()
            },
        };
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 100_000;
        let samples: Vec<f64> = (0..n).map(|_| sense(&truth(), &cfg, &mut rng).x - truth().x).collect();
        let mean = samples.iter().sum::<f64>() / n as f64;
        let var = samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let std = var.sqrt();
        assert!((0.097..=0.103).contains(&std), "{std}");
    }
}
