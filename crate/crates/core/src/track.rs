//! Track centreline, curvilinear projection and the track's influence on the
//! vehicle (gravity on banked or sloped surfaces, 3-D lift of the planar pose).
//!
//! Lateral offsets `d` are positive to the left of the driving direction.
//! Positive banking raises the right edge, so a left-hand curve is banked
//! with positive angles. Positive slope is uphill.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::chassis::{ExternalWrench, G};
use crate::error::{SimError, SimResult};

pub const TRACK_HEADER: [&str; 8] = [
    "s_m",
    "x_m",
    "y_m",
    "z_m",
    "psi_rad",
    "kappa_radpm",
    "bank_rad",
    "slope_rad",
];

/// Largest allowed distance between samples (m).
pub const MAX_SPACING: f64 = 2.0;
/// Default half-width of the admissible corridor around the centreline (m).
pub const DEFAULT_CORRIDOR: f64 = 15.0;
/// Half-width of the local foot-point search around the hint (m).
const SEARCH_WINDOW: f64 = 40.0;
const MAX_SURFACE_ANGLE: f64 = 0.3;
/// Endpoint distance below which a closed track's last sample repeats the first (m).
const CLOSURE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TrackSample {
    #[serde(rename = "s_m")]
    pub s: f64,
    #[serde(rename = "x_m")]
    pub x: f64,
    #[serde(rename = "y_m")]
    pub y: f64,
    #[serde(rename = "z_m")]
    pub z: f64,
    #[serde(rename = "psi_rad")]
    pub psi: f64,
    #[serde(rename = "kappa_radpm")]
    pub kappa: f64,
    #[serde(rename = "bank_rad")]
    pub bank: f64,
    #[serde(rename = "slope_rad")]
    pub slope: f64,
}

/// Sidecar metadata stored next to a track CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackMeta {
    pub closed: bool,
    #[serde(default)]
    pub name: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CurvilinearPose {
    pub s: f64,
    pub d: f64,
    /// Vehicle heading minus track heading, wrapped to (-pi, pi].
    pub heading: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub roll: f64,
    pub pitch: f64,
    pub yaw: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackCenterline {
    pub name: String,
    pub samples: Vec<TrackSample>,
    pub closed: bool,
    /// Total length; for a closed track this includes the closing segment.
    pub s_max: f64,
    min_spacing: f64,
}

pub fn wrap_angle(a: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut w = a.rem_euclid(two_pi);
    if w > std::f64::consts::PI {
        w -= two_pi;
    }
    w
}

/// Path of the metadata sidecar of a track CSV (`oval.csv` -> `oval.meta.json`).
pub fn meta_path(csv: &Path) -> PathBuf {
    csv.with_extension("meta.json")
}

impl TrackCenterline {
    /// A closed track may list its start point again as the last sample; the
    /// repeat is folded into the closing segment.
    pub fn new(name: impl Into<String>, mut samples: Vec<TrackSample>, closed: bool) -> SimResult<Self> {
        if samples.len() < 2 {
            return Err(SimError::config("a track needs at least two samples"));
        }
        let last = samples[samples.len() - 1];
        let repeats_start = (samples[0].x - last.x).hypot(samples[0].y - last.y) < CLOSURE_TOL;
        let s_max = if closed && repeats_start {
            samples.pop();
            if samples.len() < 2 {
                return Err(SimError::config("a track needs at least two samples"));
            }
            last.s
        } else if closed {
            last.s + (samples[0].x - last.x).hypot(samples[0].y - last.y)
        } else {
            last.s
        };
        let mut min_spacing = f64::INFINITY;
        for w in samples.windows(2) {
            min_spacing = min_spacing.min(w[1].s - w[0].s);
        }
        let track = Self {
            name: name.into(),
            samples,
            closed,
            s_max,
            min_spacing,
        };
        track.validate()?;
        Ok(track)
    }

    fn validate(&self) -> SimResult<()> {
        let n = self.samples.len();
        for (i, s) in self.samples.iter().enumerate() {
            let vals = [s.s, s.x, s.y, s.z, s.psi, s.kappa, s.bank, s.slope];
            if vals.iter().any(|v| !v.is_finite()) {
                return Err(SimError::config(format!("track sample {i} is not finite")));
            }
            if s.bank.abs() > MAX_SURFACE_ANGLE || s.slope.abs() > MAX_SURFACE_ANGLE {
                return Err(SimError::config(format!(
                    "track sample {i}: banking/slope beyond {MAX_SURFACE_ANGLE} rad"
                )));
            }
        }
        for i in 0..self.segment_count() {
            let (a, b) = self.segment(i);
            let ds = b.1 - a.s;
            if !(ds > 0.0) {
                return Err(SimError::config(format!("track s not strictly increasing at {i}")));
            }
            if ds > MAX_SPACING + 1e-6 {
                return Err(SimError::config(format!(
                    "track spacing {ds:.3} m at sample {i} exceeds {MAX_SPACING} m"
                )));
            }
            let chord = (b.0.x - a.x).hypot(b.0.y - a.y);
            if (chord - ds).abs() > 0.01 * ds + 1e-6 {
                return Err(SimError::config(format!(
                    "track s increment disagrees with the sample spacing at {i}"
                )));
            }
        }
        // Heading must follow the curvature: compare the integrated curvature
        // with the heading change over windows of a few tens of metres.
        let mut i = 0;
        while i < n - 1 {
            let mut j = i;
            let mut integral = 0.0;
            let mut turn = 0.0;
            while j < n - 1 && self.samples[j].s - self.samples[i].s < 20.0 {
                let (a, b) = (&self.samples[j], &self.samples[j + 1]);
                integral += 0.5 * (a.kappa + b.kappa) * (b.s - a.s);
                turn += wrap_angle(b.psi - a.psi);
                j += 1;
            }
            if (integral - turn).abs() > 0.05 * turn.abs() + 0.025 {
                return Err(SimError::config(format!(
                    "track curvature inconsistent with heading near s = {:.1} m",
                    self.samples[i].s
                )));
            }
            i = j;
        }
        if self.closed {
            let (a, b) = (&self.samples[n - 1], &self.samples[0]);
            if wrap_angle(b.psi - a.psi).abs() > 0.1 || (b.z - a.z).abs() > 0.5 {
                return Err(SimError::config("closed track is discontinuous across the seam"));
            }
        }
        Ok(())
    }

    pub fn load(path: &Path) -> SimResult<Self> {
        let meta_file = meta_path(path);
        let meta_text =
            std::fs::read_to_string(&meta_file).map_err(|e| SimError::io(&meta_file, e))?;
        let meta: TrackMeta = serde_json::from_str(&meta_text)?;
        let file = std::fs::File::open(path).map_err(|e| SimError::io(path, e))?;
        let mut rdr = csv::Reader::from_reader(file);
        let header = rdr.headers()?.clone();
        if header.iter().collect::<Vec<_>>() != TRACK_HEADER {
            return Err(SimError::config(format!(
                "{}: expected header {}",
                path.display(),
                TRACK_HEADER.join(",")
            )));
        }
        let samples = rdr.deserialize().collect::<Result<Vec<TrackSample>, _>>()?;
        let name = if meta.name.is_empty() {
            path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
        } else {
            meta.name
        };
        Self::new(name, samples, meta.closed)
    }

    pub fn save(&self, path: &Path) -> SimResult<()> {
        let file = std::fs::File::create(path).map_err(|e| SimError::io(path, e))?;
        let mut w = csv::Writer::from_writer(file);
        for s in &self.samples {
            w.serialize(s)?;
        }
        if self.closed {
            let first = self.samples[0];
            let last = self.samples[self.samples.len() - 1];
            w.serialize(TrackSample {
                s: self.s_max,
                psi: last.psi + wrap_angle(first.psi - last.psi),
                ..first
            })?;
        }
        w.flush().map_err(|e| SimError::io(path, e))?;
        let meta = TrackMeta {
            closed: self.closed,
            name: self.name.clone(),
        };
        let meta_file = meta_path(path);
        std::fs::write(&meta_file, serde_json::to_string_pretty(&meta)?)
            .map_err(|e| SimError::io(&meta_file, e))
    }

    fn segment_count(&self) -> usize {
        if self.closed {
            self.samples.len()
        } else {
            self.samples.len() - 1
        }
    }

    /// Start sample and (end sample, end s) of segment `i`.
    #[inline]
    fn segment(&self, i: usize) -> (&TrackSample, (&TrackSample, f64)) {
        let a = &self.samples[i];
        if i + 1 < self.samples.len() {
            let b = &self.samples[i + 1];
            (a, (b, b.s))
        } else {
            (a, (&self.samples[0], self.s_max))
        }
    }

    /// Wraps `s` into [0, s_max) on closed tracks, clamps on open ones.
    pub fn wrap_s(&self, s: f64) -> f64 {
        if self.closed {
            let w = s.rem_euclid(self.s_max);
            if w >= self.s_max {
                0.0
            } else {
                w
            }
        } else {
            s.clamp(self.samples[0].s, self.s_max)
        }
    }

    fn segment_at(&self, s: f64) -> usize {
        let i = self.samples.partition_point(|x| x.s <= s);
        i.saturating_sub(1).min(self.segment_count() - 1)
    }

    /// All channels linearly interpolated at `s`.
    pub fn at(&self, s: f64) -> TrackSample {
        let s = self.wrap_s(s);
        let i = self.segment_at(s);
        let (a, (b, sb)) = self.segment(i);
        let t = ((s - a.s) / (sb - a.s)).clamp(0.0, 1.0);
        let lerp = |u: f64, v: f64| u + t * (v - u);
        TrackSample {
            s,
            x: lerp(a.x, b.x),
            y: lerp(a.y, b.y),
            z: lerp(a.z, b.z),
            psi: wrap_angle(a.psi + t * wrap_angle(b.psi - a.psi)),
            kappa: lerp(a.kappa, b.kappa),
            bank: lerp(a.bank, b.bank),
            slope: lerp(a.slope, b.slope),
        }
    }

    /// Foot point on segment `i`: (s, signed offset, distance).
    #[inline]
    fn foot(&self, i: usize, px: f64, py: f64) -> (f64, f64, f64) {
        let (a, (b, sb)) = self.segment(i);
        let (ex, ey) = (b.x - a.x, b.y - a.y);
        let len2 = ex * ex + ey * ey;
        let (rx, ry) = (px - a.x, py - a.y);
        let t = ((rx * ex + ry * ey) / len2).clamp(0.0, 1.0);
        let (fx, fy) = (a.x + t * ex, a.y + t * ey);
        let dist = (px - fx).hypot(py - fy);
        let side = ex * ry - ey * rx;
        let d = if side >= 0.0 { dist } else { -dist };
        (a.s + t * (sb - a.s), d, dist)
    }

    fn search(&self, px: f64, py: f64, segments: impl Iterator<Item = usize>) -> Option<(f64, f64, f64)> {
        let mut best: Option<(f64, f64, f64)> = None;
        for i in segments {
            let f = self.foot(i, px, py);
            if best.is_none_or(|b| f.2 < b.2) {
                best = Some(f);
            }
        }
        best
    }

    /// Projects a planar point onto the centreline, searching locally around
    /// `hint_s` first and globally only if that fails.
    pub fn project(
        &self,
        px: f64,
        py: f64,
        yaw: f64,
        hint_s: Option<f64>,
        corridor: f64,
    ) -> SimResult<CurvilinearPose> {
        let nseg = self.segment_count();
        let mut best = None;
        if let Some(h) = hint_s {
            let k = self.segment_at(self.wrap_s(h)) as isize;
            let m = ((SEARCH_WINDOW / self.min_spacing).ceil() as isize).min(nseg as isize);
            let range = (-m..=m).filter_map(|o| {
                let j = k + o;
                if self.closed {
                    Some(j.rem_euclid(nseg as isize) as usize)
                } else if (0..nseg as isize).contains(&j) {
                    Some(j as usize)
                } else {
                    None
                }
            });
            best = self.search(px, py, range).filter(|b| b.2 <= corridor);
        }
        if best.is_none() {
            best = self.search(px, py, 0..nseg);
        }
        let (s, d, dist) = best.expect("track has segments");
        if dist > corridor {
            return Err(SimError::OffTrack { s, d, corridor });
        }
        let s = self.wrap_s(s);
        let heading = wrap_angle(yaw - self.at(s).psi);
        Ok(CurvilinearPose { s, d, heading })
    }

    /// Gravity of the banked/sloped surface that the planar model does not
    /// see, expressed in body axes (moment channels stay zero).
    pub fn external_wrench(&self, pose: &CurvilinearPose, mass: f64) -> ExternalWrench {
        let surf = self.at(pose.s);
        let weight = mass * G;
        let along = -weight * surf.slope.sin();
        let across = weight * surf.bank.sin();
        let (sh, ch) = pose.heading.sin_cos();
        ExternalWrench {
            fx: along * ch + across * sh,
            fy: -along * sh + across * ch,
            fz: weight * (1.0 - surf.bank.cos() * surf.slope.cos()),
            ..Default::default()
        }
    }

    /// Places the planar pose on the 3-D track surface.
    pub fn lift_to_3d(
        &self,
        px: f64,
        py: f64,
        yaw: f64,
        hint_s: Option<f64>,
        corridor: f64,
    ) -> SimResult<(Pose3, CurvilinearPose)> {
        let c = self.project(px, py, yaw, hint_s, corridor)?;
        let surf = self.at(c.s);
        let pose = Pose3 {
            x: px,
            y: py,
            z: surf.z - c.d * surf.bank.sin(),
            roll: surf.bank,
            pitch: surf.slope,
            yaw,
        };
        Ok((pose, c))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn straight(len: f64, bank: f64, slope: f64) -> TrackCenterline {
        let n = (len / 1.0) as usize;
        let samples = (0..=n)
            .map(|i| TrackSample {
                s: i as f64,
                x: i as f64,
                bank,
                slope,
                ..Default::default()
            })
            .collect();
        TrackCenterline::new("straight", samples, false).unwrap()
    }

    fn circle(radius: f64, n: usize) -> TrackCenterline {
        let ds = 2.0 * std::f64::consts::PI * radius / n as f64;
        let dphi = ds / radius;
        let chord = 2.0 * radius * (dphi / 2.0).sin();
        let samples = (0..n)
            .map(|i| {
                let phi = i as f64 * dphi;
                TrackSample {
                    s: i as f64 * chord,
                    x: radius * phi.sin(),
                    y: radius * (1.0 - phi.cos()),
                    psi: wrap_angle(phi),
                    kappa: 1.0 / radius,
                    ..Default::default()
                }
            })
            .collect();
        TrackCenterline::new("circle", samples, true).unwrap()
    }

    #[test]
    fn straight_projection() {
        let t = straight(50.0, 0.0, 0.0);
        let c = t.project(10.0, 0.5, 0.0, Some(9.0), 15.0).unwrap();
        assert!((c.s - 10.0).abs() < 1e-12);
        assert!((c.d - 0.5).abs() < 1e-12);
        let m = t.project(10.0, -0.5, 0.0, Some(9.0), 15.0).unwrap();
        assert_eq!(m.s, c.s);
        assert_eq!(m.d, -c.d);
        let on = t.project(23.25, 0.0, 0.0, None, 15.0).unwrap();
        assert!(on.d.abs() < 1e-9);
    }

    #[test]
    fn off_corridor_is_a_fault() {
        let t = straight(50.0, 0.0, 0.0);
        let err = t.project(10.0, 20.0, 0.0, Some(10.0), 15.0).unwrap_err();
        assert!(matches!(err, SimError::OffTrack { .. }));
    }

    #[test]
    fn closed_track_wraps() {
        let t = circle(100.0, 400);
        let c = t.project(-1.0, 0.0, 0.0, Some(t.s_max - 1.0), 15.0).unwrap();
        assert!(c.s > t.s_max - 2.0 && c.s < t.s_max, "{}", c.s);
        let c = t.project(1.0, 0.1, 0.0, Some(t.s_max - 1.0), 15.0).unwrap();
        assert!(c.s < 2.0);
    }

    #[test]
    fn centreline_points_project_to_themselves() {
        let t = circle(100.0, 400);
        for k in 0..50 {
            let s = k as f64 * 12.345;
            let p = t.at(s);
            let c = t.project(p.x, p.y, p.psi, Some(s + 3.0), 15.0).unwrap();
            assert!((c.s - s).abs() < 1e-6 && c.d.abs() < 1e-6);
            assert!(c.heading.abs() < 1e-9);
        }
    }

    #[test]
    fn flat_surface_has_no_wrench() {
        let t = straight(20.0, 0.0, 0.0);
        let c = CurvilinearPose {
            s: 5.0,
            d: 0.3,
            heading: 0.2,
        };
        let w = t.external_wrench(&c, 800.0);
        assert_eq!((w.fx, w.fy, w.fz), (0.0, 0.0, 0.0));
    }

    #[test]
    fn banking_pulls_toward_the_low_side() {
        let t = straight(20.0, 0.1, 0.0);
        let c = CurvilinearPose {
            s: 5.0,
            ..Default::default()
        };
        let w = t.external_wrench(&c, 1000.0);
        assert!((w.fy - 1000.0 * 9.81 * 0.1f64.sin()).abs() < 1e-9);
        assert!(w.fy > 0.0, "towards the left, i.e. the centre of a left-hand curve");
        let up = straight(20.0, 0.0, 0.05);
        assert!(up.external_wrench(&c, 1000.0).fx < 0.0);
    }

    #[test]
    fn lift_inherits_surface() {
        let flat = straight(20.0, 0.0, 0.0);
        let (p, _) = flat.lift_to_3d(5.0, 1.0, 0.1, None, 15.0).unwrap();
        assert_eq!((p.z, p.roll, p.pitch), (0.0, 0.0, 0.0));
        let banked = straight(20.0, 0.05, 0.0);
        let (p, c) = banked.lift_to_3d(5.0, 1.0, 0.1, None, 15.0).unwrap();
        assert_eq!(p.roll, 0.05);
        let back = banked.project(p.x, p.y, p.yaw, Some(c.s), 15.0).unwrap();
        assert!((back.s - c.s).abs() < 1e-6 && (back.d - c.d).abs() < 1e-6);
    }

    #[test]
    fn inconsistent_curvature_is_rejected() {
        let mut samples = straight(50.0, 0.0, 0.0).samples;
        for s in &mut samples {
            s.kappa = 0.01;
        }
        assert!(TrackCenterline::new("bad", samples, false).unwrap_err().is_config());
    }

    #[test]
    fn csv_round_trip() {
        let t = circle(80.0, 300);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.csv");
        t.save(&path).unwrap();
        let back = TrackCenterline::load(&path).unwrap();
        assert!(back.closed);
        assert_eq!(back.samples.len(), t.samples.len());
        assert!((back.s_max - t.s_max).abs() < 1e-9);
    }
}
