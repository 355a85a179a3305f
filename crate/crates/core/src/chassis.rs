//! Sprung-body dynamics, per-wheel vertical dynamics and suspension forces.
//!
//! Axes follow ISO 8855: x forward, y left, z up; positive roll lifts the
//! left side, positive pitch lowers the nose. Wheels are indexed
//! [`FL`], [`FR`], [`RL`], [`RR`].
//!
//! Suspension force convention: the composite force `F_c,i` acts upward on
//! wheel `i` and downward on the body above it. Consistently, spring
//! deflection `z_s,i` is the suspension *extension* measured from the spring's
//! free length (negative at rest), and the anti-roll bar sees the wheel's
//! vertical travel relative to its body mount (bump positive).

use serde::{Deserialize, Serialize};

use crate::error::{SimError, SimResult};

pub const G: f64 = 9.81;

pub const FL: usize = 0;
pub const FR: usize = 1;
pub const RL: usize = 2;
pub const RR: usize = 3;

pub type PerWheel = [f64; 4];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChassisParameters {
    /// Sprung mass (kg).
    pub sprung_mass: f64,
    /// Sprung-body roll inertia about its CoG (kg m^2).
    pub i_xx: f64,
    /// Sprung-body pitch inertia about its CoG (kg m^2).
    pub i_yy: f64,
    /// Whole-vehicle yaw inertia (kg m^2).
    pub i_zz: f64,
    /// Distance from the vehicle CoG to the front axle (m).
    pub l_f: f64,
    /// Distance from the vehicle CoG to the rear axle (m).
    pub l_r: f64,
    /// Front track width (m).
    pub b_f: f64,
    /// Rear track width (m).
    pub b_r: f64,
    /// Sprung CoG height above ground (m).
    pub h_cog: f64,
    /// Roll pivot height above ground (m).
    pub h_rp: f64,
    /// Pitch pivot height while accelerating (m).
    pub h_pp_accel: f64,
    /// Pitch pivot height while decelerating (m).
    pub h_pp_decel: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WheelSuspension {
    /// Unsprung mass per wheel (kg).
    pub unsprung_mass: PerWheel,
    /// Spring stiffness per wheel (N/m).
    pub spring: PerWheel,
    /// Damper coefficient per wheel (N s/m).
    pub damper: PerWheel,
    /// Front anti-roll bar stiffness (N/m).
    pub k_ar_front: f64,
    /// Rear anti-roll bar stiffness (N/m).
    pub k_ar_rear: f64,
    /// Admissible travel away from the design position (m).
    #[serde(default = "default_travel_limit")]
    pub travel_limit: f64,
}

fn default_travel_limit() -> f64 {
    0.08
}

impl ChassisParameters {
    pub fn wheelbase(&self) -> f64 {
        self.l_f + self.l_r
    }

    pub fn validate(&self) -> SimResult<()> {
        let ok = self.sprung_mass > 0.0
            && self.i_xx > 0.0
            && self.i_yy > 0.0
            && self.i_zz > 0.0
            && self.l_f + self.l_r > 0.0
            && self.b_f >= 0.0
            && self.b_r >= 0.0
            && self.h_cog >= 0.0;
        if !ok {
            return Err(SimError::config(
                "chassis requires positive mass, inertias and wheelbase, non-negative tracks and CoG height",
            ));
        }
        Ok(())
    }
}

impl WheelSuspension {
    pub fn validate(&self) -> SimResult<()> {
        let ok = self.unsprung_mass.iter().all(|m| *m > 0.0)
            && self.spring.iter().all(|k| *k > 0.0)
            && self.damper.iter().all(|c| *c >= 0.0)
            && self.k_ar_front >= 0.0
            && self.k_ar_rear >= 0.0
            && self.travel_limit > 0.0;
        if !ok {
            return Err(SimError::config(
                "suspension requires positive masses and springs, non-negative dampers and bars",
            ));
        }
        Ok(())
    }
}

/// Vertical state of one wheel station.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct WheelVertical {
    /// Wheel-centre heave from the design position (m).
    pub heave: f64,
    pub heave_rate: f64,
    /// Suspension extension from the spring free length (m).
    pub travel: f64,
    pub travel_rate: f64,
}

/// `F_s = z_s k_s`, `F_d = dz_s k_d`.
#[inline]
pub fn spring_damper_forces(z_s: f64, dz_s: f64, k_s: f64, k_d: f64) -> (f64, f64) {
    (z_s * k_s, dz_s * k_d)
}

/// Anti-roll bar forces from per-wheel vertical travel:
/// `F_ar,fl = -F_ar,fr = (z_fr - z_fl) k_ar,f`, rear analogous.
#[inline]
pub fn antiroll_forces(travel: &PerWheel, k_ar_f: f64, k_ar_r: f64) -> PerWheel {
    let front = (travel[FR] - travel[FL]) * k_ar_f;
    let rear = (travel[RR] - travel[RL]) * k_ar_r;
    [front, -front, rear, -rear]
}

/// Squat/lift (and roll-pivot jacking) forces from the suspension geometry.
///
/// `fx`, `fy` are tire forces in body axes. With a zero track width the
/// lateral term is defined as zero.
pub fn axle_geometry_forces(
    fx: &PerWheel,
    fy: &PerWheel,
    p: &ChassisParameters,
    accelerating: bool,
) -> PerWheel {
    let h_pp = if accelerating { p.h_pp_accel } else { p.h_pp_decel };
    let lat = |b: f64| if b > 0.0 { 2.0 * p.h_rp / b } else { 0.0 };
    let (lat_f, lat_r) = (lat(p.b_f), lat(p.b_r));
    let lon_f = if p.l_f > 0.0 { h_pp / p.l_f } else { 0.0 };
    let lon_r = if p.l_r > 0.0 { h_pp / p.l_r } else { 0.0 };
    [
        fy[FL] * lat_f + fx[FL] * lon_f,
        -fy[FR] * lat_f + fx[FR] * lon_f,
        fy[RL] * lat_r - fx[RL] * lon_r,
        -fy[RR] * lat_r - fx[RR] * lon_r,
    ]
}

#[inline]
pub fn composite_suspension_force(f_s: f64, f_d: f64, f_ar: f64, f_a: f64) -> f64 {
    f_s + f_d + f_ar + f_a
}

/// Mass distribution and wheel placement derived from the parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ChassisLayout {
    pub total_mass: f64,
    pub sprung_mass: f64,
    pub unsprung_mass: PerWheel,
    /// Wheel contact-point x relative to the vehicle CoG (m).
    pub x: PerWheel,
    /// Wheel contact-point y (m).
    pub y: PerWheel,
    /// Sprung CoG x relative to the vehicle CoG (m).
    pub x_sprung: f64,
    /// Static sprung load carried by each corner (N).
    pub static_corner_load: PerWheel,
}

impl ChassisLayout {
    pub fn new(c: &ChassisParameters, s: &WheelSuspension) -> Self {
        let mu = s.unsprung_mass;
        let total_mass = c.sprung_mass + mu.iter().sum::<f64>();
        let x = [c.l_f, c.l_f, -c.l_r, -c.l_r];
        let y = [c.b_f / 2.0, -c.b_f / 2.0, c.b_r / 2.0, -c.b_r / 2.0];
        let unsprung_moment: f64 = (0..4).map(|i| mu[i] * x[i]).sum();
        let x_sprung = -unsprung_moment / c.sprung_mass;
        let wb = c.wheelbase();
        let front = c.sprung_mass * G * (x_sprung + c.l_r) / wb;
        let rear = c.sprung_mass * G - front;
        Self {
            total_mass,
            sprung_mass: c.sprung_mass,
            unsprung_mass: mu,
            x,
            y,
            x_sprung,
            static_corner_load: [front / 2.0, front / 2.0, rear / 2.0, rear / 2.0],
        }
    }
}

/// Chassis pose and rates (small roll/pitch).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BodyState {
    /// Body-frame longitudinal velocity (m/s).
    pub vx: f64,
    /// Body-frame lateral velocity (m/s).
    pub vy: f64,
    pub yaw_rate: f64,
    /// Sprung CoG heave from the design position (m).
    pub heave: f64,
    pub heave_rate: f64,
    pub roll: f64,
    pub roll_rate: f64,
    pub pitch: f64,
    pub pitch_rate: f64,
}

/// Aerodynamic loads at the CoG.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AeroWrench {
    pub drag: f64,
    /// Vertical aero force, positive up (N).
    pub lift: f64,
    pub pitch_moment: f64,
}

/// External force/moment on the body (body axes).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ExternalWrench {
    pub fx: f64,
    pub fy: f64,
    pub fz: f64,
    pub mx: f64,
    pub my: f64,
    pub mz: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BodyAccelerations {
    /// d(vx)/dt in the rotating body frame.
    pub dvx: f64,
    pub dvy: f64,
    pub dyaw_rate: f64,
    pub heave: f64,
    pub roll: f64,
    pub pitch: f64,
    /// Inertial longitudinal acceleration (m/s^2).
    pub ax: f64,
    /// Inertial lateral acceleration (m/s^2).
    pub ay: f64,
}

/// Newton-Euler balance of the body.
///
/// Planar motion (surge, sway, yaw) uses the total mass; heave, roll and
/// pitch act on the sprung mass only. Tire shear forces enter at ground
/// level; unsprung horizontal inertia is lumped at ground level so that a
/// zero CoG height removes all acceleration-induced load transfer.
#[allow(clippy::too_many_arguments)]
pub fn body_derivatives(
    body: &BodyState,
    f_c: &PerWheel,
    fx: &PerWheel,
    fy: &PerWheel,
    aero: &AeroWrench,
    ext: &ExternalWrench,
    p: &ChassisParameters,
    layout: &ChassisLayout,
) -> SimResult<BodyAccelerations> {
    let sum_fx: f64 = fx.iter().sum();
    let sum_fy: f64 = fy.iter().sum();
    let m = layout.total_mass;
    let ax = (sum_fx + aero.drag + ext.fx) / m;
    let ay = (sum_fy + ext.fy) / m;

    let mut yaw_moment = ext.mz;
    let mut roll_moment = ext.mx;
    let mut pitch_moment = ext.my + aero.pitch_moment;
    let mut heave_force = aero.lift + ext.fz - layout.sprung_mass * G;
    for i in 0..4 {
        let (xi, yi) = (layout.x[i], layout.y[i]);
        yaw_moment += xi * fy[i] - yi * fx[i];
        heave_force -= f_c[i];
        roll_moment -= yi * f_c[i];
        pitch_moment += (xi - layout.x_sprung) * f_c[i];
        let mu = layout.unsprung_mass[i];
        roll_moment += p.h_cog * (fy[i] - mu * ay);
        pitch_moment -= p.h_cog * (fx[i] - mu * ax);
    }
    let acc = BodyAccelerations {
        dvx: ax + body.yaw_rate * body.vy,
        dvy: ay - body.yaw_rate * body.vx,
        dyaw_rate: yaw_moment / p.i_zz,
        heave: heave_force / layout.sprung_mass,
        roll: roll_moment / p.i_xx,
        pitch: pitch_moment / p.i_yy,
        ax,
        ay,
    };
    let all = [
        acc.dvx,
        acc.dvy,
        acc.dyaw_rate,
        acc.heave,
        acc.roll,
        acc.pitch,
    ];
    if all.iter().any(|v| !v.is_finite()) {
        return Err(SimError::Model {
            reason: "non-finite body acceleration".into(),
            snapshot: None,
        });
    }
    Ok(acc)
}

/// Wheel loads at rest on a flat road with `downforce` (N, positive down)
/// acting at the CoG.
pub fn static_wheel_loads(p: &ChassisParameters, total_mass: f64, downforce: f64) -> PerWheel {
    let total = total_mass * G + downforce;
    let front = total * p.l_r / p.wheelbase();
    let rear = total - front;
    [front / 2.0, front / 2.0, rear / 2.0, rear / 2.0]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chassis() -> ChassisParameters {
        ChassisParameters {
            sprung_mass: 1000.0,
            i_xx: 300.0,
            i_yy: 1000.0,
            i_zz: 1200.0,
            l_f: 1.5,
            l_r: 1.5,
            b_f: 1.6,
            b_r: 1.5,
            h_cog: 0.3,
            h_rp: 0.05,
            h_pp_accel: 0.1,
            h_pp_decel: 0.2,
        }
    }

    #[test]
    fn spring_damper_values() {
        assert_eq!(spring_damper_forces(0.0, 0.0, 2e5, 8000.0), (0.0, 0.0));
        assert_eq!(spring_damper_forces(0.02, 0.0, 2e5, 8000.0).0, 4000.0);
        assert_eq!(spring_damper_forces(0.0, -0.1, 2e5, 8000.0).1, -800.0);
    }

    #[test]
    fn antiroll_values_and_antisymmetry() {
        assert_eq!(antiroll_forces(&[0.01, 0.01, -0.02, -0.02], 5e4, 4e4), [0.0; 4]);
        let f = antiroll_forces(&[0.0, 0.02, 0.0, 0.0], 5e4, 4e4);
        assert!((f[FL] - 1000.0).abs() < 1e-9);
        assert!((f[FR] + 1000.0).abs() < 1e-9);
        let swapped = antiroll_forces(&[0.02, 0.0, 0.0, 0.0], 5e4, 4e4);
        assert_eq!(swapped[FL], -f[FL]);
        assert_eq!(swapped[FR], -f[FR]);
    }

    #[test]
    fn axle_geometry_values() {
        let p = ChassisParameters {
            b_f: 1.6,
            h_rp: 0.05,
            ..chassis()
        };
        assert_eq!(axle_geometry_forces(&[0.0; 4], &[0.0; 4], &p, true), [0.0; 4]);
        let f = axle_geometry_forces(&[0.0; 4], &[1000.0, 0.0, 0.0, 0.0], &p, true);
        assert!((f[FL] - 62.5).abs() < 1e-12);
        let mirrored = axle_geometry_forces(&[0.0; 4], &[1000.0, 1000.0, 0.0, 0.0], &p, false);
        assert_eq!(mirrored[FL], -mirrored[FR]);
    }

    #[test]
    fn axle_geometry_zero_track_is_defined() {
        let p = ChassisParameters {
            b_f: 0.0,
            b_r: 0.0,
            h_rp: 0.0,
            ..chassis()
        };
        let f = axle_geometry_forces(&[0.0; 4], &[1000.0; 4], &p, true);
        assert_eq!(f, [0.0; 4]);
    }

    #[test]
    fn composite_sum() {
        assert_eq!(composite_suspension_force(0.0, 0.0, 0.0, 0.0), 0.0);
        assert_eq!(composite_suspension_force(4000.0, -800.0, 1000.0, 62.5), 4262.5);
        assert_eq!(composite_suspension_force(62.5, 1000.0, -800.0, 4000.0), 4262.5);
    }

    #[test]
    fn static_loads() {
        let p = chassis();
        let f = static_wheel_loads(&p, 1000.0, 0.0);
        for v in f {
            assert!((v - 2452.5).abs() < 1e-9);
        }
        let q = ChassisParameters {
            l_f: 1.7,
            l_r: 1.3,
            ..chassis()
        };
        let f = static_wheel_loads(&q, 1000.0, 0.0);
        assert!((f[FL] + f[FR] - 4251.0).abs() < 1e-9);
        let f2 = static_wheel_loads(&q, 2000.0, 0.0);
        for i in 0..4 {
            assert!((f2[i] - 2.0 * f[i]).abs() < 1e-9);
        }
    }

    fn suspension() -> WheelSuspension {
        WheelSuspension {
            unsprung_mass: [25.0; 4],
            spring: [2e5; 4],
            damper: [6000.0; 4],
            k_ar_front: 5e4,
            k_ar_rear: 3e4,
            travel_limit: 0.08,
        }
    }

    #[test]
    fn equilibrium_at_rest_has_zero_acceleration() {
        let p = chassis();
        let layout = ChassisLayout::new(&p, &suspension());
        let f_c = layout.static_corner_load.map(|s| -s);
        let acc = body_derivatives(
            &BodyState::default(),
            &f_c,
            &[0.0; 4],
            &[0.0; 4],
            &AeroWrench::default(),
            &ExternalWrench::default(),
            &p,
            &layout,
        )
        .unwrap();
        for v in [acc.dvx, acc.dvy, acc.dyaw_rate, acc.heave, acc.roll, acc.pitch] {
            assert!(v.abs() < 1e-9, "{acc:?}");
        }
    }

    #[test]
    fn symmetric_braking_has_no_yaw_or_roll() {
        let p = chassis();
        let layout = ChassisLayout::new(&p, &suspension());
        let f_c = layout.static_corner_load.map(|s| -s);
        let acc = body_derivatives(
            &BodyState {
                vx: 30.0,
                ..Default::default()
            },
            &f_c,
            &[-2000.0, -2000.0, -1500.0, -1500.0],
            &[0.0; 4],
            &AeroWrench::default(),
            &ExternalWrench::default(),
            &p,
            &layout,
        )
        .unwrap();
        assert_eq!(acc.dyaw_rate, 0.0);
        assert_eq!(acc.roll, 0.0);
        assert!(acc.pitch > 0.0, "braking should pitch the nose down");
    }

    #[test]
    fn lateral_force_balance() {
        let p = chassis();
        let s = WheelSuspension {
            unsprung_mass: [1e-9; 4],
            ..suspension()
        };
        let layout = ChassisLayout::new(&p, &s);
        let f_c = layout.static_corner_load.map(|s| -s);
        let acc = body_derivatives(
            &BodyState::default(),
            &f_c,
            &[0.0; 4],
            &[3500.0; 4],
            &AeroWrench::default(),
            &ExternalWrench::default(),
            &p,
            &layout,
        )
        .unwrap();
        assert!((acc.ay - 14.0).abs() < 1e-6);
    }

    #[test]
    fn sprung_cog_offset_keeps_total_cog() {
        let p = ChassisParameters {
            l_f: 1.7,
            l_r: 1.3,
            ..chassis()
        };
        let s = WheelSuspension {
            unsprung_mass: [20.0, 20.0, 30.0, 30.0],
            ..suspension()
        };
        let layout = ChassisLayout::new(&p, &s);
        let moment = layout.sprung_mass * layout.x_sprung
            + (0..4).map(|i| s.unsprung_mass[i] * layout.x[i]).sum::<f64>();
        assert!(moment.abs() < 1e-9);
        // Body corner loads plus unsprung weight reproduce the lever split.
        let front: f64 = layout.static_corner_load[FL]
            + layout.static_corner_load[FR]
            + (s.unsprung_mass[FL] + s.unsprung_mass[FR]) * G;
        let expected = static_wheel_loads(&p, layout.total_mass, 0.0);
        assert!((front - expected[FL] - expected[FR]).abs() < 1e-9);
    }
}
