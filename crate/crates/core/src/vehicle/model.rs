use crate::aero::aero_wrench;
use crate::chassis::{
    antiroll_forces, axle_geometry_forces, body_derivatives, composite_suspension_force,
    spring_damper_forces, ChassisLayout, ExternalWrench, PerWheel, G, FL, FR, RL, RR,
};
use crate::driveline::{lag_derivative, wheel_spin_derivatives, ActuationCommand};
use crate::error::{SimError, SimResult};
use crate::tire::{
    tire_lag_derivative, vertical_tire_force, SlipState, TireLagState, RELAXATION_SPEED_FLOOR,
};

use super::state::{self, block, body_of, set_block, STATE_LEN};
use super::{VehicleParameters, VehicleState};

/// Per-wheel quantities of one derivative evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct WheelOutputs {
    /// Tire normal load (N).
    pub fz: PerWheel,
    /// Shear forces in each wheel's own frame (N).
    pub fx: PerWheel,
    pub fy: PerWheel,
    /// Steady-state slip from the contact-point kinematics.
    pub kappa: PerWheel,
    pub alpha: PerWheel,
    /// Vertical wheel travel relative to the body mount, bump positive (m).
    pub travel: PerWheel,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub derivative: [f64; STATE_LEN],
    pub wheels: WheelOutputs,
    /// Inertial accelerations at the CoG (m/s^2).
    pub ax: f64,
    pub ay: f64,
}

/// A validated parameter set together with quantities derived from it once.
#[derive(Debug, Clone)]
pub struct VehicleModel {
    pub params: VehicleParameters,
    pub layout: ChassisLayout,
    /// Tire deflection at the design position (m).
    pub design_deflection: PerWheel,
    /// Spring extension at the design position (m, negative = compressed).
    pub design_extension: PerWheel,
}

impl VehicleModel {
    pub fn new(params: VehicleParameters) -> SimResult<Self> {
        params.validate()?;
        let layout = ChassisLayout::new(&params.chassis, &params.suspension);
        let mut design_deflection = [0.0; 4];
        let mut design_extension = [0.0; 4];
        for i in 0..4 {
            let corner = layout.static_corner_load[i];
            design_extension[i] = -corner / params.suspension.spring[i];
            design_deflection[i] =
                (corner + layout.unsprung_mass[i] * G) / params.tire_vertical.spring_rate;
        }
        Ok(Self {
            params,
            layout,
            design_deflection,
            design_extension,
        })
    }

    /// Effective steering, throttle and brake: the lagged states, or the
    /// commands themselves when the actuators are bypassed.
    #[inline]
    fn actuation(&self, x: &[f64; STATE_LEN], u: &ActuationCommand) -> (f64, f64, f64) {
        if self.params.flags.bypass_actuators {
            (u.steering, u.throttle, u.brake)
        } else {
            (x[state::STEER], x[state::THROTTLE], x[state::BRAKE])
        }
    }

    /// Body mount heave and heave rate above each wheel.
    #[inline]
    fn mounts(&self, x: &[f64; STATE_LEN]) -> (PerWheel, PerWheel) {
        let l = &self.layout;
        let mut z = [0.0; 4];
        let mut dz = [0.0; 4];
        for i in 0..4 {
            let lever = l.x[i] - l.x_sprung;
            z[i] = x[state::HEAVE] + l.y[i] * x[state::ROLL] - lever * x[state::PITCH];
            dz[i] =
                x[state::HEAVE_RATE] + l.y[i] * x[state::ROLL_RATE] - lever * x[state::PITCH_RATE];
        }
        (z, dz)
    }

    /// `dx/dt = f(x, u)` with `external` added to the body force balance.
    pub fn derivatives(
        &self,
        x: &VehicleState,
        u: &ActuationCommand,
        external: &ExternalWrench,
    ) -> SimResult<[f64; STATE_LEN]> {
        Ok(self.evaluate(x, u, external)?.derivative)
    }

    pub fn evaluate(
        &self,
        xs: &VehicleState,
        u: &ActuationCommand,
        external: &ExternalWrench,
    ) -> SimResult<Evaluation> {
        let p = &self.params;
        let l = &self.layout;
        let x = &xs.0;
        let snapshot = |reason: String| SimError::Model {
            reason,
            snapshot: Some(x.to_vec()),
        };
        if !xs.is_finite() {
            return Err(snapshot("non-finite state".into()));
        }
        let (steer, throttle, brake) = self.actuation(x, u);
        let body = body_of(x);
        let zw = block(x, state::WHEEL_HEAVE);
        let dzw = block(x, state::WHEEL_HEAVE_RATE);
        let omega = block(x, state::WHEEL_SPIN);
        let lag_kappa = block(x, state::LAG_KAPPA);
        let lag_alpha = block(x, state::LAG_ALPHA);

        // Vertical tire forces.
        let mut out = WheelOutputs::default();
        for i in 0..4 {
            out.fz[i] = vertical_tire_force(self.design_deflection[i] - zw[i], &p.tire_vertical);
        }

        // Contact-point kinematics, slip and shear forces.
        let (sin_d, cos_d) = steer.sin_cos();
        let mut fx_body = [0.0; 4];
        let mut fy_body = [0.0; 4];
        let mut lag_rate = [TireLagState::default(); 4];
        let radius = p.powertrain.wheel_radius;
        for i in 0..4 {
            let vx_c = body.vx - body.yaw_rate * l.y[i];
            let vy_c = body.vy + body.yaw_rate * l.x[i];
            let (s, c) = if i == FL || i == FR {
                (sin_d, cos_d)
            } else {
                (0.0, 1.0)
            };
            let vx_w = vx_c * c + vy_c * s;
            let vy_w = -vx_c * s + vy_c * c;
            let denom = vx_w.abs().max(RELAXATION_SPEED_FLOOR);
            let steady = SlipState::new((omega[i] * radius - vx_w) / denom, (-vy_w / denom).atan(), 0.0);
            out.kappa[i] = steady.kappa;
            out.alpha[i] = steady.alpha;
            let lag = TireLagState {
                kappa: lag_kappa[i],
                alpha: lag_alpha[i],
            };
            lag_rate[i] = tire_lag_derivative(&lag, &steady, vx_w, &p.relaxation);
            let f = p
                .tire
                .forces(&SlipState::new(lag.kappa, lag.alpha, 0.0), out.fz[i])
                .map_err(|e| snapshot(format!("wheel {i}: {e}")))?;
            out.fx[i] = f.fx;
            out.fy[i] = f.fy;
            fx_body[i] = f.fx * c - f.fy * s;
            fy_body[i] = f.fx * s + f.fy * c;
        }

        // Suspension.
        let aero = aero_wrench(body.vx, &p.aero);
        let (zm, dzm) = self.mounts(x);
        for i in 0..4 {
            out.travel[i] = zw[i] - zm[i];
        }
        let f_ar = if p.flags.zero_track_width {
            [0.0; 4]
        } else {
            antiroll_forces(&out.travel, p.suspension.k_ar_front, p.suspension.k_ar_rear)
        };
        let accelerating = fx_body[RL] + fx_body[RR] >= 0.0;
        let f_a = axle_geometry_forces(&fx_body, &fy_body, &p.chassis, accelerating);
        let mut f_c = [0.0; 4];
        for i in 0..4 {
            let ext = self.design_extension[i] - out.travel[i];
            let (f_s, f_d) = spring_damper_forces(
                ext,
                dzm[i] - dzw[i],
                p.suspension.spring[i],
                p.suspension.damper[i],
            );
            f_c[i] = composite_suspension_force(f_s, f_d, f_ar[i], f_a[i]);
        }

        let acc = body_derivatives(
            &body, &f_c, &fx_body, &fy_body, &aero, external, &p.chassis, l,
        )
        .map_err(|e| snapshot(e.to_string()))?;

        let spin = wheel_spin_derivatives(&omega, u.gear, throttle, brake, &out.fx, &p.powertrain);

        let mut d = [0.0; STATE_LEN];
        let (sin_psi, cos_psi) = x[state::YAW].sin_cos();
        d[state::X] = body.vx * cos_psi - body.vy * sin_psi;
        d[state::Y] = body.vx * sin_psi + body.vy * cos_psi;
        d[state::YAW] = body.yaw_rate;
        d[state::HEAVE] = body.heave_rate;
        d[state::ROLL] = body.roll_rate;
        d[state::PITCH] = body.pitch_rate;
        d[state::VX] = acc.dvx;
        d[state::VY] = acc.dvy;
        d[state::YAW_RATE] = acc.dyaw_rate;
        d[state::HEAVE_RATE] = acc.heave;
        d[state::ROLL_RATE] = acc.roll;
        d[state::PITCH_RATE] = acc.pitch;
        set_block(&mut d, state::WHEEL_HEAVE, &dzw);
        let mut zw_acc = [0.0; 4];
        for i in 0..4 {
            zw_acc[i] = (out.fz[i] + f_c[i]) / l.unsprung_mass[i] - G;
        }
        set_block(&mut d, state::WHEEL_HEAVE_RATE, &zw_acc);
        set_block(&mut d, state::WHEEL_SPIN, &spin);
        set_block(&mut d, state::LAG_KAPPA, &lag_rate.map(|r| r.kappa));
        set_block(&mut d, state::LAG_ALPHA, &lag_rate.map(|r| r.alpha));
        if !p.flags.bypass_actuators {
            let a = &p.actuators;
            d[state::STEER] = lag_derivative(x[state::STEER], u.steering, a.steering.tau);
            d[state::THROTTLE] = lag_derivative(x[state::THROTTLE], u.throttle, a.throttle.tau);
            d[state::BRAKE] = lag_derivative(x[state::BRAKE], u.brake, a.brake.tau);
        }
        if d.iter().any(|v| !v.is_finite()) {
            return Err(snapshot("non-finite derivative".into()));
        }
        Ok(Evaluation {
            derivative: d,
            wheels: out,
            ax: acc.ax,
            ay: acc.ay,
        })
    }

    /// Kinetic plus potential energy of the body, wheels, springs, anti-roll
    /// bars and tire springs, relative to the design position (J).
    pub fn mechanical_energy(&self, xs: &VehicleState) -> f64 {
        let p = &self.params;
        let l = &self.layout;
        let x = &xs.0;
        let ms = l.sprung_mass;
        let mut e = 0.5 * l.total_mass * (x[state::VX].powi(2) + x[state::VY].powi(2))
            + 0.5 * p.chassis.i_zz * x[state::YAW_RATE].powi(2)
            + 0.5 * ms * x[state::HEAVE_RATE].powi(2)
            + 0.5 * p.chassis.i_xx * x[state::ROLL_RATE].powi(2)
            + 0.5 * p.chassis.i_yy * x[state::PITCH_RATE].powi(2)
            + ms * G * x[state::HEAVE];
        let (zm, _) = self.mounts(x);
        let zw = block(x, state::WHEEL_HEAVE);
        let dzw = block(x, state::WHEEL_HEAVE_RATE);
        let mut travel = [0.0; 4];
        for i in 0..4 {
            travel[i] = zw[i] - zm[i];
            let ext = self.design_extension[i] - travel[i];
            e += 0.5 * p.suspension.spring[i] * ext * ext;
            e += 0.5 * l.unsprung_mass[i] * dzw[i].powi(2) + l.unsprung_mass[i] * G * zw[i];
            let defl = (self.design_deflection[i] - zw[i]).max(0.0);
            e += 0.5 * p.tire_vertical.spring_rate * defl * defl;
        }
        if !p.flags.zero_track_width {
            e += 0.5 * p.suspension.k_ar_front * (travel[FR] - travel[FL]).powi(2);
            e += 0.5 * p.suspension.k_ar_rear * (travel[RR] - travel[RL]).powi(2);
        }
        e
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrator::dp45_step;
    use crate::vehicle::testing::baseline;

    fn at_rest(m: &VehicleModel) -> VehicleState {
        let _ = m;
        VehicleState::default()
    }

    #[test]
    fn design_position_is_static_equilibrium() {
        let m = VehicleModel::new(baseline()).unwrap();
        let d = m
            .derivatives(&at_rest(&m), &ActuationCommand::default(), &ExternalWrench::default())
            .unwrap();
        let worst = d.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        assert!(worst < 1e-6, "{d:?}");
    }

    #[test]
    fn evaluation_is_bit_identical() {
        let m = VehicleModel::new(baseline()).unwrap();
        let mut x = VehicleState::default();
        x.0[state::VX] = 30.0;
        x.0[state::VY] = 0.4;
        x.0[state::YAW_RATE] = 0.2;
        x.0[state::STEER] = 0.03;
        for i in 0..4 {
            x.0[state::WHEEL_SPIN + i] = 100.0;
        }
        let u = ActuationCommand {
            steering: 0.04,
            throttle: 0.3,
            brake: 0.0,
            gear: 3,
        };
        let a = m.derivatives(&x, &u, &ExternalWrench::default()).unwrap();
        let b = m.derivatives(&x, &u, &ExternalWrench::default()).unwrap();
        assert_eq!(a.map(f64::to_bits), b.map(f64::to_bits));
    }

    #[test]
    fn free_oscillation_conserves_energy() {
        let mut p = baseline();
        p.suspension.damper = [0.0; 4];
        p.aero.drag_area = 0.0;
        p.aero.lift_area = 0.0;
        let m = VehicleModel::new(p).unwrap();
        let mut x = VehicleState::default();
        x.0[state::HEAVE] = 0.01;
        x.0[state::ROLL] = 0.005;
        x.0[state::PITCH] = -0.004;
        x.0[state::WHEEL_HEAVE] = 0.002;
        let u = ActuationCommand::default();
        let ext = ExternalWrench::default();
        let e0 = m.mechanical_energy(&x);
        let f = |s: &[f64; STATE_LEN], u: &ActuationCommand| m.derivatives(&VehicleState(*s), u, &ext);
        let h = 800e-6;
        let mut max_drift = 0.0f64;
        for _ in 0..1250 {
            x = VehicleState(dp45_step(f, &x.0, &u, h).unwrap());
            let e = m.mechanical_energy(&x);
            max_drift = max_drift.max(((e - e0) / e0).abs());
        }
        assert!(max_drift < 1e-3, "energy drift {max_drift}");
    }

    #[test]
    fn symmetric_throttle_has_no_yaw_or_roll() {
        let m = VehicleModel::new(baseline()).unwrap();
        let mut x = VehicleState::default();
        x.0[state::VX] = 5.0;
        for i in 0..4 {
            x.0[state::WHEEL_SPIN + i] = 5.0 / m.params.powertrain.wheel_radius;
        }
        x.0[state::THROTTLE] = 1.0;
        let u = ActuationCommand {
            throttle: 1.0,
            ..Default::default()
        };
        let d = m.derivatives(&x, &u, &ExternalWrench::default()).unwrap();
        assert_eq!(d[state::YAW_RATE], 0.0);
        assert_eq!(d[state::ROLL_RATE], 0.0);
        assert!(d[state::WHEEL_SPIN + RL] > 0.0);
    }

    #[test]
    fn mirrored_inputs_mirror_the_derivative() {
        let m = VehicleModel::new(baseline()).unwrap();
        let mut x = VehicleState::default();
        x.0[state::VX] = 40.0;
        x.0[state::VY] = 0.5;
        x.0[state::YAW_RATE] = 0.3;
        x.0[state::ROLL] = 0.01;
        x.0[state::ROLL_RATE] = -0.02;
        x.0[state::HEAVE] = -0.003;
        x.0[state::STEER] = 0.05;
        let zw = [0.001, -0.002, 0.0005, 0.0015];
        let alpha = [0.02, 0.025, 0.01, 0.012];
        let kappa = [0.0, 0.001, 0.02, 0.025];
        for i in 0..4 {
            x.0[state::WHEEL_HEAVE + i] = zw[i];
            x.0[state::LAG_ALPHA + i] = alpha[i];
            x.0[state::LAG_KAPPA + i] = kappa[i];
            x.0[state::WHEEL_SPIN + i] = 40.0 / 0.3;
        }
        x.0[state::WHEEL_SPIN + RL] = 137.0;
        x.0[state::WHEEL_SPIN + RR] = 137.0;
        let u = ActuationCommand {
            steering: 0.06,
            throttle: 0.4,
            brake: 0.0,
            gear: 4,
        };
        let mirror = |x: &VehicleState| {
            let mut y = *x;
            for k in [state::Y, state::YAW, state::ROLL, state::VY, state::YAW_RATE, state::ROLL_RATE, state::STEER] {
                y.0[k] = -y.0[k];
            }
            for base in [state::WHEEL_HEAVE, state::WHEEL_HEAVE_RATE, state::WHEEL_SPIN, state::LAG_KAPPA, state::LAG_ALPHA] {
                y.0.swap(base + FL, base + FR);
                y.0.swap(base + RL, base + RR);
            }
            for i in 0..4 {
                y.0[state::LAG_ALPHA + i] = -y.0[state::LAG_ALPHA + i];
            }
            y
        };
        let ext = ExternalWrench::default();
        let d = VehicleState(m.derivatives(&x, &u, &ext).unwrap());
        let um = ActuationCommand {
            steering: -u.steering,
            ..u
        };
        let dm = m.derivatives(&mirror(&x), &um, &ext).unwrap();
        let expected = mirror(&d);
        for k in 0..STATE_LEN {
            let scale = expected.0[k].abs().max(1.0);
            assert!(
                (dm[k] - expected.0[k]).abs() <= 1e-9 * scale,
                "{}: {} vs {}",
                state::NAMES[k],
                dm[k],
                expected.0[k]
            );
        }
    }
}
