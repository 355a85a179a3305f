//! Lateral-error fidelity metrics.

use serde::{Deserialize, Serialize};

use crate::error::{SimError, SimResult};

/// Default spacing of the common comparison grid (m).
pub const DEFAULT_GRID_SPACING: f64 = 0.5;
/// Default largest gap tolerated in a raw trace before resampling (m).
pub const DEFAULT_MAX_GAP: f64 = 5.0;

/// Lateral offset `d` over track position `s`, with `s` non-decreasing.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LateralErrorTrace {
    pub s: Vec<f64>,
    pub d: Vec<f64>,
}

impl LateralErrorTrace {
    pub fn new(s: Vec<f64>, d: Vec<f64>) -> SimResult<Self> {
        if s.len() != d.len() {
            return Err(SimError::Metric("s and d lengths differ".into()));
        }
        if s.iter().chain(&d).any(|v| !v.is_finite()) {
            return Err(SimError::Metric("trace contains non-finite samples".into()));
        }
        if s.windows(2).any(|w| w[1] < w[0]) {
            return Err(SimError::Metric("trace s must be non-decreasing".into()));
        }
        Ok(Self { s, d })
    }

    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }
}

/// `count` points spaced evenly over `[0, s_max]`, the spacing being the
/// largest value not exceeding the requested one that divides `s_max`.
pub fn uniform_grid(s_max: f64, spacing: f64) -> SimResult<Vec<f64>> {
    if !(spacing > 0.0 && s_max > 0.0) {
        return Err(SimError::Metric("grid needs positive length and spacing".into()));
    }
    let n = (s_max / spacing - 1e-9).ceil().max(1.0) as usize;
    let h = s_max / n as f64;
    Ok((0..=n).map(|k| if k == n { s_max } else { k as f64 * h }).collect())
}

/// Linear interpolation of `trace` onto `grid`, clamping beyond its ends.
pub fn resample(trace: &LateralErrorTrace, grid: &[f64], max_gap: f64) -> SimResult<LateralErrorTrace> {
    if trace.is_empty() {
        return Err(SimError::Metric("cannot resample an empty trace".into()));
    }
    let (s, d) = (&trace.s, &trace.d);
    if let Some(w) = s.windows(2).find(|w| w[1] - w[0] > max_gap) {
        return Err(SimError::Metric(format!(
            "trace gap of {:.2} m at s = {:.1} m exceeds {max_gap} m",
            w[1] - w[0],
            w[0]
        )));
    }
    if let (Some(first), Some(last)) = (grid.first(), grid.last()) {
        if s[0] - first > max_gap || last - s[s.len() - 1] > max_gap {
            return Err(SimError::Metric("trace does not cover the grid".into()));
        }
    }
    let mut out = Vec::with_capacity(grid.len());
    let mut j = 0;
    for &g in grid {
        while j + 1 < s.len() && s[j + 1] <= g {
            j += 1;
        }
        let v = if g <= s[0] {
            d[0]
        } else if j + 1 >= s.len() {
            d[s.len() - 1]
        } else {
            let span = s[j + 1] - s[j];
            if span > 0.0 {
                d[j] + (g - s[j]) / span * (d[j + 1] - d[j])
            } else {
                d[j + 1]
            }
        };
        out.push(v);
    }
    Ok(LateralErrorTrace {
        s: grid.to_vec(),
        d: out,
    })
}

/// Largest absolute lateral error over the samples.
pub fn max_lateral_error(trace: &LateralErrorTrace) -> SimResult<f64> {
    if trace.is_empty() {
        return Err(SimError::Metric("empty trace".into()));
    }
    Ok(trace.d.iter().fold(0.0, |m, v| m.max(v.abs())))
}

fn check_same_grid(a: &LateralErrorTrace, b: &LateralErrorTrace) -> SimResult<f64> {
    if a.len() < 2 || a.s != b.s {
        return Err(SimError::Metric("traces are not on the same grid".into()));
    }
    let s_max = a.s[a.len() - 1] - a.s[0];
    if !(s_max > 0.0) {
        return Err(SimError::Metric("grid has zero length".into()));
    }
    Ok(s_max)
}

/// Reference-weighted mean squared difference (m^3):
/// `1/s_max * integral (d - d_ref)^2 |d_ref| ds`, trapezoid rule.
///
/// Not symmetric: the weight comes from `reference` only, so stretches where
/// the reference tracks perfectly contribute nothing.
pub fn disparity(trace: &LateralErrorTrace, reference: &LateralErrorTrace) -> SimResult<f64> {
    let s_max = check_same_grid(trace, reference)?;
    let f = |k: usize| {
        let diff = trace.d[k] - reference.d[k];
        diff * diff * reference.d[k].abs()
    };
    let mut sum = 0.0;
    for k in 0..trace.len() - 1 {
        sum += 0.5 * (f(k) + f(k + 1)) * (trace.s[k + 1] - trace.s[k]);
    }
    Ok(sum / s_max)
}

/// Mean absolute lateral error over the lap. Diagnostic only: a mean hides
/// short large excursions, so it is not used for any acceptance decision.
pub fn mean_lateral_error(trace: &LateralErrorTrace) -> SimResult<f64> {
    if trace.len() < 2 {
        return Err(SimError::Metric("need at least two samples".into()));
    }
    let s_max = trace.s[trace.len() - 1] - trace.s[0];
    let mut sum = 0.0;
    for k in 0..trace.len() - 1 {
        sum += 0.5 * (trace.d[k].abs() + trace.d[k + 1].abs()) * (trace.s[k + 1] - trace.s[k]);
    }
    Ok(sum / s_max)
}
