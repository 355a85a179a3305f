use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{SimError, SimResult};

pub const LAP_HEADER: [&str; 5] = ["s_m", "d_m", "v_mps", "kappa_radpm", "ax_mps2"];

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LapSample {
    #[serde(rename = "s_m")]
    pub s: f64,
    /// Target lateral offset (m).
    #[serde(rename = "d_m")]
    pub d: f64,
    /// Target speed (m/s).
    #[serde(rename = "v_mps")]
    pub v: f64,
    #[serde(rename = "kappa_radpm")]
    pub kappa: f64,
    /// Target longitudinal acceleration (m/s^2).
    #[serde(rename = "ax_mps2")]
    pub ax: f64,
}

/// Target trajectory over one lap. The last sample sits at the lap length;
/// on a closed track it repeats the first.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceLap {
    pub samples: Vec<LapSample>,
}

impl ReferenceLap {
    pub fn new(samples: Vec<LapSample>) -> SimResult<Self> {
        if samples.len() < 2 {
            return Err(SimError::config("a reference lap needs at least two samples"));
        }
        for (i, w) in samples.windows(2).enumerate() {
            if !(w[1].s > w[0].s) {
                return Err(SimError::config(format!("reference lap s not increasing at {i}")));
            }
        }
        for (i, x) in samples.iter().enumerate() {
            if [x.s, x.d, x.v, x.kappa, x.ax].iter().any(|v| !v.is_finite()) || x.v < 0.0 {
                return Err(SimError::config(format!(
                    "reference lap sample {i} is not finite or has negative speed"
                )));
            }
        }
        Ok(Self { samples })
    }

    pub fn length(&self) -> f64 {
        self.samples[self.samples.len() - 1].s
    }

    pub fn load(path: &Path) -> SimResult<Self> {
        let file = std::fs::File::open(path).map_err(|e| SimError::io(path, e))?;
        let mut rdr = csv::Reader::from_reader(file);
        if rdr.headers()?.iter().collect::<Vec<_>>() != LAP_HEADER {
            return Err(SimError::config(format!(
                "{}: expected header {}",
                path.display(),
                LAP_HEADER.join(",")
            )));
        }
        let samples = rdr.deserialize().collect::<Result<Vec<LapSample>, _>>()?;
        Self::new(samples)
    }

    pub fn save(&self, path: &Path) -> SimResult<()> {
        let file = std::fs::File::create(path).map_err(|e| SimError::io(path, e))?;
        let mut w = csv::Writer::from_writer(file);
        for s in &self.samples {
            w.serialize(s)?;
        }
        w.flush().map_err(|e| SimError::io(path, e))
    }

    /// Linear interpolation at `s`, wrapped into the lap.
    pub fn at(&self, s: f64) -> LapSample {
        let len = self.length();
        let first = self.samples[0].s;
        let s = if s < first || s > len {
            first + (s - first).rem_euclid(len - first)
        } else {
            s
        };
        let i = self
            .samples
            .partition_point(|x| x.s <= s)
            .clamp(1, self.samples.len() - 1);
        let (a, b) = (&self.samples[i - 1], &self.samples[i]);
        let t = (s - a.s) / (b.s - a.s);
        let lerp = |u: f64, v: f64| u + t * (v - u);
        LapSample {
            s,
            d: lerp(a.d, b.d),
            v: lerp(a.v, b.v),
            kappa: lerp(a.kappa, b.kappa),
            ax: lerp(a.ax, b.ax),
        }
    }

    /// Largest requested lateral acceleration `v^2 |kappa|` over the samples.
    pub fn peak_lateral_acceleration(&self) -> f64 {
        self.samples
            .iter()
            .map(|x| x.v * x.v * x.kappa.abs())
            .fold(0.0, f64::max)
    }
}

/// Multiplies the speed profile by `factor` with the path untouched. The
/// longitudinal target scales linearly with the factor; the lateral
/// acceleration implied by `v^2 kappa` scales with its square.
pub fn scale_velocity_profile(lap: &ReferenceLap, factor: f64) -> SimResult<ReferenceLap> {
    if !(factor > 0.0 && factor.is_finite()) {
        return Err(SimError::config("velocity scale factor must be positive"));
    }
    let samples = lap
        .samples
        .iter()
        .map(|x| LapSample {
            v: x.v * factor,
            ax: x.ax * factor,
            ..*x
        })
        .collect();
    Ok(ReferenceLap { samples })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lap() -> ReferenceLap {
        let samples = (0..=100)
            .map(|i| {
                let s = i as f64 * 2.0;
                LapSample {
                    s,
                    d: 0.0,
                    v: 30.0 + 10.0 * (s / 30.0).sin(),
                    kappa: 0.01 * (s / 50.0).cos(),
                    ax: (s / 30.0).cos(),
                }
            })
            .collect();
        ReferenceLap::new(samples).unwrap()
    }

    #[test]
    fn unit_factor_is_identity() {
        assert_eq!(scale_velocity_profile(&lap(), 1.0).unwrap(), lap());
    }

    #[test]
    fn lateral_acceleration_scales_quadratically() {
        let base = lap();
        let scaled = scale_velocity_profile(&base, 1.1).unwrap();
        let ratio = scaled.peak_lateral_acceleration() / base.peak_lateral_acceleration();
        assert!((ratio - 1.21).abs() < 1e-12);
        for (a, b) in base.samples.iter().zip(&scaled.samples) {
            assert_eq!(a.kappa.to_bits(), b.kappa.to_bits());
            assert_eq!(a.s.to_bits(), b.s.to_bits());
            assert_eq!(a.d.to_bits(), b.d.to_bits());
        }
    }

    #[test]
    fn interpolation_wraps() {
        let l = lap();
        let a = l.at(10.0);
        let b = l.at(10.0 + l.length());
        assert!((a.v - b.v).abs() < 1e-9);
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("lap.csv");
        lap().save(&path).unwrap();
        assert_eq!(ReferenceLap::load(&path).unwrap(), lap());
    }
}
