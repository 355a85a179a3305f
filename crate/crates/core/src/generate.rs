//! Synthetic track and reference-lap generators.
//!
//! Tracks are chains of straights and constant-radius arcs, so they are
//! tangent-continuous with curvature steps at the joints. Laps follow a
//! quasi-steady speed profile at a fraction of the estimated grip limit.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::chassis::G;
use crate::closed_loop::{LapSample, ReferenceLap};
use crate::driveline::engine_torque;
use crate::error::{SimError, SimResult};
use crate::track::{wrap_angle, TrackCenterline, TrackSample};
use crate::vehicle::VehicleParameters;

fn fault(msg: impl Into<String>) -> SimError {
    SimError::Generation(msg.into())
}

fn default_spacing() -> f64 {
    1.0
}

fn default_separation() -> f64 {
    30.0
}

/// Oval of two straights joined by two half-circle turns, driven
/// anticlockwise. Banking ramps linearly across each straight/turn joint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OvalSpec {
    /// Length of each straight (m).
    pub straight: f64,
    /// Turn radius (m).
    pub radius: f64,
    /// Banking on the straights and in the turns (rad).
    #[serde(default)]
    pub bank_straight: f64,
    #[serde(default)]
    pub bank_turn: f64,
    /// Length over which banking changes, centred on each joint (m).
    #[serde(default)]
    pub bank_transition: f64,
}

/// One piece of a road course.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum CourseSegment {
    /// A straight; `length: null` marks one of the two straights solved for
    /// so the course closes.
    Straight { length: Option<f64> },
    /// Constant-radius corner; positive angles turn left.
    Corner { radius: f64, angle_deg: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoadCourseSpec {
    pub segments: Vec<CourseSegment>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TrackShape {
    Oval(OvalSpec),
    RoadCourse(RoadCourseSpec),
}

/// Everything needed to generate a track file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSpec {
    pub name: String,
    pub shape: TrackShape,
    /// Sample spacing (m); at most 2 m.
    #[serde(default = "default_spacing")]
    pub spacing: f64,
    /// Smallest allowed distance between parts of the track more than
    /// 100 m apart along it (m).
    #[serde(default = "default_separation")]
    pub min_separation: f64,
}

impl GeneratorSpec {
    pub fn load(path: &std::path::Path) -> SimResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| SimError::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Straight or arc with its start pose.
#[derive(Debug, Clone, Copy)]
struct Piece {
    x: f64,
    y: f64,
    psi: f64,
    length: f64,
    kappa: f64,
}

impl Piece {
    fn end(&self) -> (f64, f64, f64) {
        self.at(self.length)
    }

    fn at(&self, u: f64) -> (f64, f64, f64) {
        let psi = self.psi + self.kappa * u;
        if self.kappa.abs() < 1e-12 {
            (self.x + u * self.psi.cos(), self.y + u * self.psi.sin(), psi)
        } else {
            let r = 1.0 / self.kappa;
            (
                self.x + r * (psi.sin() - self.psi.sin()),
                self.y - r * (psi.cos() - self.psi.cos()),
                psi,
            )
        }
    }
}

/// (length, curvature) chain starting at the origin heading along +x.
fn chain(parts: &[(f64, f64)]) -> Vec<Piece> {
    let (mut x, mut y, mut psi) = (0.0, 0.0, 0.0);
    let mut out = Vec::with_capacity(parts.len());
    for &(length, kappa) in parts {
        let p = Piece { x, y, psi, length, kappa };
        (x, y, psi) = p.end();
        out.push(p);
    }
    out
}

fn oval_parts(o: &OvalSpec) -> SimResult<Vec<(f64, f64)>> {
    if !(o.straight > 0.0 && o.radius > 0.0) {
        return Err(fault("oval needs positive straight length and radius"));
    }
    let turn = PI * o.radius;
    Ok(vec![
        (o.straight, 0.0),
        (turn, 1.0 / o.radius),
        (o.straight, 0.0),
        (turn, 1.0 / o.radius),
    ])
}

fn course_parts(c: &RoadCourseSpec) -> SimResult<Vec<(f64, f64)>> {
    let mut heading = 0.0;
    let mut total_turn = 0.0;
    let mut known = (0.0, 0.0);
    let mut unknown = Vec::new();
    for (i, seg) in c.segments.iter().enumerate() {
        match *seg {
            CourseSegment::Straight { length: Some(l) } => {
                if !(l > 0.0) {
                    return Err(fault(format!("segment {i}: straight length must be > 0")));
                }
                known.0 += l * f64::cos(heading);
                known.1 += l * f64::sin(heading);
            }
            CourseSegment::Straight { length: None } => unknown.push((i, heading)),
            CourseSegment::Corner { radius, angle_deg } => {
                if !(radius > 0.0) || angle_deg == 0.0 || !angle_deg.is_finite() {
                    return Err(fault(format!("segment {i}: corner needs radius > 0 and a turn")));
                }
                let angle = angle_deg.to_radians();
                let p = Piece {
                    x: 0.0,
                    y: 0.0,
                    psi: heading,
                    length: radius * angle.abs(),
                    kappa: angle.signum() / radius,
                };
                let (ex, ey, _) = p.end();
                known.0 += ex;
                known.1 += ey;
                heading += angle;
                total_turn += angle;
            }
        }
    }
    if (total_turn - TAU).abs() > 1e-9 {
        return Err(fault(format!(
            "corner angles sum to {:.3} deg, a closed anticlockwise course needs 360",
            total_turn.to_degrees()
        )));
    }
    let [(ia, ha), (_, hb)] = unknown[..] else {
        return Err(fault("exactly two straights must have length null"));
    };
    // la * t(ha) + lb * t(hb) = -known
    let det = ha.cos() * hb.sin() - ha.sin() * hb.cos();
    if det.abs() < 1e-6 {
        return Err(fault("the two closing straights are parallel"));
    }
    let (rx, ry) = (-known.0, -known.1);
    let la = (rx * hb.sin() - ry * hb.cos()) / det;
    let lb = (ha.cos() * ry - ha.sin() * rx) / det;
    if la <= 1.0 || lb <= 1.0 {
        return Err(fault(format!(
            "course cannot close: closing straights would be {la:.1} m and {lb:.1} m"
        )));
    }
    let mut parts = Vec::with_capacity(c.segments.len());
    for (i, seg) in c.segments.iter().enumerate() {
        parts.push(match *seg {
            CourseSegment::Straight { length: Some(l) } => (l, 0.0),
            CourseSegment::Straight { length: None } => (if i == ia { la } else { lb }, 0.0),
            CourseSegment::Corner { radius, angle_deg } => {
                (radius * angle_deg.to_radians().abs(), angle_deg.signum() / radius)
            }
        });
    }
    Ok(parts)
}

/// Banking at arc position `s` for an oval whose pieces start at `starts`.
fn oval_bank(o: &OvalSpec, starts: &[f64], s_max: f64, s: f64) -> f64 {
    let half = 0.5 * o.bank_transition;
    let mut bank = if (starts[1]..starts[2]).contains(&s) || s >= starts[3] {
        o.bank_turn
    } else {
        o.bank_straight
    };
    if half > 0.0 {
        for (k, &joint) in starts.iter().enumerate() {
            // Joints 1 and 3 enter a turn, 0 and 2 leave one.
            let entering = k % 2 == 1;
            for j in [joint - s_max, joint, joint + s_max] {
                let u = (s - j + half) / (2.0 * half);
                if (0.0..=1.0).contains(&u) {
                    let (from, to) = if entering {
                        (o.bank_straight, o.bank_turn)
                    } else {
                        (o.bank_turn, o.bank_straight)
                    };
                    bank = from + u * (to - from);
                }
            }
        }
    }
    bank
}

/// Samples the track; the last sample repeats the first.
pub fn generate_track(spec: &GeneratorSpec) -> SimResult<TrackCenterline> {
    if !(spec.spacing > 0.0 && spec.spacing <= crate::track::MAX_SPACING) {
        return Err(fault("spacing must be in (0, 2] m"));
    }
    let parts = match &spec.shape {
        TrackShape::Oval(o) => {
            if o.bank_transition < 0.0 || o.bank_transition > o.straight.min(PI * o.radius) {
                return Err(fault("bank transition must fit within a straight and a turn"));
            }
            oval_parts(o)?
        }
        TrackShape::RoadCourse(c) => course_parts(c)?,
    };
    let pieces = chain(&parts);
    let mut starts = Vec::with_capacity(pieces.len());
    let mut s_max = 0.0;
    for p in &pieces {
        starts.push(s_max);
        s_max += p.length;
    }
    let n = (s_max / spec.spacing).ceil() as usize;
    let ds = s_max / n as f64;
    let mut samples = Vec::with_capacity(n + 1);
    let mut k_piece = 0;
    for k in 0..=n {
        let s = if k == n { s_max } else { k as f64 * ds };
        while k_piece + 1 < pieces.len() && s >= starts[k_piece + 1] {
            k_piece += 1;
        }
        let p = &pieces[k_piece];
        let (x, y, psi) = p.at(s - starts[k_piece]);
        let bank = match &spec.shape {
            TrackShape::Oval(o) => oval_bank(o, &starts, s_max, s.min(s_max - 1e-9)),
            TrackShape::RoadCourse(_) => 0.0,
        };
        samples.push(TrackSample {
            s,
            x,
            y,
            z: 0.0,
            psi: wrap_angle(psi),
            kappa: p.kappa,
            bank,
            slope: 0.0,
        });
    }
    // Close exactly; the residual is round-off only.
    let first = samples[0];
    let last = samples.last_mut().expect("non-empty");
    if (last.x - first.x).hypot(last.y - first.y) > 1e-6 {
        return Err(fault("generated track does not close"));
    }
    last.x = first.x;
    last.y = first.y;
    check_separation(&samples, spec.min_separation)?;
    TrackCenterline::new(spec.name.clone(), samples, true)
}

/// Rejects tracks whose distant parts come closer than `min_sep`.
fn check_separation(samples: &[TrackSample], min_sep: f64) -> SimResult<()> {
    const NEIGHBOURHOOD: f64 = 100.0;
    let s_max = samples[samples.len() - 1].s;
    for (i, a) in samples.iter().enumerate() {
        for b in &samples[i + 1..] {
            let gap = (b.s - a.s).min(s_max - (b.s - a.s));
            if gap > NEIGHBOURHOOD && (a.x - b.x).hypot(a.y - b.y) < min_sep {
                return Err(fault(format!(
                    "track overlaps itself: s = {:.0} m and s = {:.0} m are {:.1} m apart",
                    a.s,
                    b.s,
                    (a.x - b.x).hypot(a.y - b.y)
                )));
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LapSpec {
    /// Fraction of the estimated grip limit used in corners, in (0, 1].
    pub grip_fraction: f64,
    /// Optional speed cap below the vehicle's top speed (m/s).
    #[serde(default)]
    pub speed_cap: Option<f64>,
    #[serde(default = "default_spacing")]
    pub spacing: f64,
}

/// Quasi-steady grip estimates for profile generation.
struct GripModel<'a> {
    p: &'a VehicleParameters,
    mu: f64,
    mass: f64,
}

impl GripModel<'_> {
    /// Lateral acceleration limit at speed `v` (m/s^2).
    fn limit(&self, v: f64) -> f64 {
        self.mu * (G + self.p.aero.downforce(v) / self.mass)
    }

    /// Share of the total normal load carried by the driven rear axle at `v`,
    /// from the static split and the downforce position.
    fn rear_share(&self, v: f64) -> f64 {
        let c = &self.p.chassis;
        let wheelbase = c.l_f + c.l_r;
        let weight = self.mass * G;
        let down = self.p.aero.downforce(v);
        let rear = weight * c.l_f / wheelbase + down * (c.l_f + self.p.aero.l_aero) / wheelbase;
        (rear / (weight + down)).clamp(0.0, 1.0)
    }

    /// Largest engine-limited acceleration at `v` over all gears.
    fn engine_accel(&self, v: f64) -> f64 {
        let pt = &self.p.powertrain;
        let max_rpm = pt.engine_map.max_speed();
        let force = (1..=pt.gear_count())
            .filter(|g| pt.engine_speed(v / pt.wheel_radius, *g) <= max_rpm)
            .map(|g| {
                let rpm = pt.engine_speed(v / pt.wheel_radius, g);
                engine_torque(rpm, 1.0, &pt.engine_map) * pt.ratio(g) / pt.wheel_radius
            })
            .fold(f64::NEG_INFINITY, f64::max);
        (force - self.p.aero.drag_area * v * v) / self.mass
    }

    /// Top speed on a long straight (m/s).
    fn top_speed(&self) -> f64 {
        let mut v = 1.0;
        while self.engine_accel(v + 0.1) > 0.0 {
            v += 0.1;
        }
        v
    }

    /// Corner speed at curvature `kappa`: `v = sqrt(f a_max(v) / |kappa|)`
    /// iterated to a fixed point, capped.
    fn corner_speed(&self, kappa: f64, fraction: f64, cap: f64) -> f64 {
        if kappa.abs() < 1e-9 {
            return cap;
        }
        let mut v = (fraction * self.limit(0.0) / kappa.abs()).sqrt();
        for _ in 0..200 {
            let next = (fraction * self.limit(v) / kappa.abs()).sqrt();
            if next >= cap {
                return cap;
            }
            if (next - v).abs() < 1e-10 {
                return next;
            }
            v = next;
        }
        v.min(cap)
    }
}

/// Reference lap along the centreline at a fraction of the grip limit.
///
/// The grip limit is the tire's nominal peak friction times the weight plus
/// downforce at the corner speed. Braking is limited to the part of the same
/// fraction of grip not used laterally; acceleration to the driven rear
/// axle's share of it and to what the engine delivers.
pub fn generate_lap(track: &TrackCenterline, p: &VehicleParameters, spec: &LapSpec) -> SimResult<ReferenceLap> {
    let f = spec.grip_fraction;
    if !(f > 0.0 && f <= 1.0) {
        return Err(SimError::config("grip fraction must be in (0, 1]"));
    }
    if !(spec.spacing > 0.0) {
        return Err(SimError::config("lap spacing must be positive"));
    }
    let mass = p.total_mass();
    let nominal = mass * G / 4.0;
    let grip = GripModel {
        p,
        mu: p.tire.nominal_peak_mu(nominal)?,
        mass,
    };
    let mut cap = grip.top_speed();
    if let Some(c) = spec.speed_cap {
        if !(c > 0.0) {
            return Err(SimError::config("speed cap must be positive"));
        }
        cap = cap.min(c);
    }

    let grid = crate::metrics::uniform_grid(track.s_max, spec.spacing).map_err(|e| fault(e.to_string()))?;
    let n = grid.len() - 1; // last point repeats the first
    let kappa: Vec<f64> = grid[..n].iter().map(|s| track.at(*s).kappa).collect();
    let mut v: Vec<f64> = kappa.iter().map(|k| grip.corner_speed(*k, f, cap)).collect();
    let ds: Vec<f64> = (0..n).map(|k| grid[k + 1] - grid[k]).collect();

    let long_budget = |v: f64, kappa: f64| {
        let total = f * grip.limit(v);
        let lateral = v * v * kappa.abs();
        (total * total - lateral * lateral).max(0.0).sqrt()
    };
    // Periodic forward/backward passes; three rounds settle the seam.
    for _ in 0..3 {
        for k in 0..n {
            let j = (k + 1) % n;
            let traction = long_budget(v[k], kappa[k]) * grip.rear_share(v[k]);
            let a = traction.min(grip.engine_accel(v[k]).max(0.0));
            v[j] = v[j].min((v[k] * v[k] + 2.0 * a * ds[k]).sqrt());
        }
        for k in (0..n).rev() {
            let j = (k + 1) % n;
            let a = long_budget(v[j], kappa[j]);
            v[k] = v[k].min((v[j] * v[j] + 2.0 * a * ds[k]).sqrt());
        }
    }

    let mut samples = Vec::with_capacity(n + 1);
    for k in 0..n {
        let prev = (k + n - 1) % n;
        let next = (k + 1) % n;
        let ax = (v[next] * v[next] - v[prev] * v[prev]) / (2.0 * (ds[prev] + ds[k]));
        samples.push(LapSample {
            s: grid[k],
            d: 0.0,
            v: v[k],
            kappa: kappa[k],
            ax,
        });
    }
    samples.push(LapSample {
        s: track.s_max,
        ..samples[0]
    });
    ReferenceLap::new(samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vehicle::testing::baseline;

    fn oval(straight: f64, radius: f64) -> GeneratorSpec {
        GeneratorSpec {
            name: "oval".into(),
            shape: TrackShape::Oval(OvalSpec {
                straight,
                radius,
                bank_straight: 0.0,
                bank_turn: 0.0,
                bank_transition: 0.0,
            }),
            spacing: 1.0,
            min_separation: 30.0,
        }
    }

    #[test]
    fn oval_length_and_closure() {
        let t = generate_track(&oval(400.0, 200.0)).unwrap();
        let expected = 800.0 + TAU * 200.0;
        assert!((t.s_max - expected).abs() / expected < 1e-3);
        assert!(t.samples.iter().all(|s| s.bank == 0.0));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("oval.csv");
        t.save(&path).unwrap();
        let mut rdr = csv::Reader::from_path(&path).unwrap();
        let rows: Vec<TrackSample> = rdr.deserialize().map(|r| r.unwrap()).collect();
        let (a, b) = (rows[0], rows[rows.len() - 1]);
        assert!((a.x - b.x).hypot(a.y - b.y) < 1e-6);
        assert_eq!(TrackCenterline::load(&path).unwrap(), t);
    }

    #[test]
    fn oval_banking_levels() {
        let mut spec = oval(400.0, 200.0);
        if let TrackShape::Oval(o) = &mut spec.shape {
            o.bank_straight = 0.02;
            o.bank_turn = 0.12;
            o.bank_transition = 60.0;
        }
        let t = generate_track(&spec).unwrap();
        assert!((t.at(200.0).bank - 0.02).abs() < 1e-12);
        assert!((t.at(400.0 + 100.0 * PI).bank - 0.12).abs() < 1e-12);
        assert!((t.at(400.0).bank - 0.07).abs() < 1e-3);
    }

    fn course(segments: Vec<CourseSegment>) -> GeneratorSpec {
        GeneratorSpec {
            name: "course".into(),
            shape: TrackShape::RoadCourse(RoadCourseSpec { segments }),
            spacing: 1.0,
            min_separation: 30.0,
        }
    }

    fn corner(radius: f64, angle_deg: f64) -> CourseSegment {
        CourseSegment::Corner { radius, angle_deg }
    }

    fn straight(l: Option<f64>) -> CourseSegment {
        CourseSegment::Straight { length: l }
    }

    #[test]
    fn road_course_closes() {
        let t = generate_track(&course(vec![
            straight(Some(300.0)),
            corner(80.0, 120.0),
            straight(None),
            corner(80.0, 120.0),
            straight(None),
            corner(80.0, 120.0),
        ]))
        .unwrap();
        // Equilateral: both solved straights equal the fixed one.
        let expected = 900.0 + TAU * 80.0;
        assert!((t.s_max - expected).abs() < 1e-6, "{}", t.s_max);
    }

    #[test]
    fn infeasible_courses_fail() {
        let bad_sum = course(vec![straight(None), corner(50.0, 90.0), straight(None), corner(50.0, 90.0)]);
        assert!(matches!(generate_track(&bad_sum), Err(SimError::Generation(_))));
        let negative = course(vec![
            straight(Some(2000.0)),
            corner(50.0, 180.0),
            straight(None),
            corner(50.0, 90.0),
            straight(None),
            corner(50.0, 90.0),
        ]);
        assert!(matches!(generate_track(&negative), Err(SimError::Generation(_))));
        let tight = oval(400.0, 10.0);
        assert!(matches!(generate_track(&tight), Err(SimError::Generation(_))));
    }

    fn no_downforce() -> VehicleParameters {
        let mut p = baseline();
        p.aero.lift_area = 0.0;
        p
    }

    #[test]
    fn corner_speed_scales_with_sqrt_fraction() {
        let t = generate_track(&oval(400.0, 150.0)).unwrap();
        let p = no_downforce();
        let spec = |f| LapSpec {
            grip_fraction: f,
            speed_cap: None,
            spacing: 1.0,
        };
        let full = generate_lap(&t, &p, &spec(1.0)).unwrap();
        let quarter = generate_lap(&t, &p, &spec(0.25)).unwrap();
        let mid_turn = 400.0 + 75.0 * PI;
        let ratio = quarter.at(mid_turn).v / full.at(mid_turn).v;
        assert!((ratio - 0.5).abs() < 1e-9, "{ratio}");
    }

    #[test]
    fn straights_reach_the_cap() {
        let t = generate_track(&oval(1500.0, 150.0)).unwrap();
        let lap = generate_lap(
            &t,
            &baseline(),
            &LapSpec {
                grip_fraction: 0.6,
                speed_cap: Some(45.0),
                spacing: 1.0,
            },
        )
        .unwrap();
        assert!((lap.at(750.0).v - 45.0).abs() < 1e-12);
    }

    #[test]
    fn lateral_demand_within_fraction() {
        let t = generate_track(&oval(400.0, 150.0)).unwrap();
        let p = baseline();
        let f = 0.6;
        let lap = generate_lap(
            &t,
            &p,
            &LapSpec {
                grip_fraction: f,
                speed_cap: None,
                spacing: 1.0,
            },
        )
        .unwrap();
        let mass = p.total_mass();
        let mu = p.tire.nominal_peak_mu(mass * G / 4.0).unwrap();
        for s in &lap.samples {
            let limit = mu * (G + p.aero.downforce(s.v) / mass);
            assert!(s.v * s.v * s.kappa.abs() <= f * limit * 1.02);
        }
    }
}
