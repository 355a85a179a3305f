use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::chassis::{ExternalWrench, RL, RR};
use crate::driveline::{engine_torque, gear_for_speed, ActuationCommand};
use crate::error::{SimError, SimResult};

use super::state::{self, VehicleState, STATE_LEN};
use super::VehicleModel;

/// Planar position and heading in the world frame.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose2 {
    pub x: f64,
    pub y: f64,
    pub yaw: f64,
}

/// An equilibrium state together with the command that holds it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Trim {
    pub state: VehicleState,
    pub command: ActuationCommand,
}

const MAX_ITERATIONS: usize = 60;
const RESIDUAL_TOL: f64 = 1e-9;

/// Straight-line equilibrium at `speed`: suspension and tires settled under
/// weight and downforce, rear wheels slipping just enough to balance drag,
/// throttle set from the engine map. Actuator states equal their commands.
pub fn initial_state(model: &VehicleModel, pose: Pose2, speed: f64) -> SimResult<Trim> {
    if !(speed >= 0.0 && speed.is_finite()) {
        return Err(SimError::config("initial speed must be non-negative"));
    }
    let p = &model.params;
    let pt = &p.powertrain;
    let r = pt.wheel_radius;
    let gear = gear_for_speed(speed, None, pt);
    let mut command = ActuationCommand {
        gear,
        ..Default::default()
    };
    let mut x = VehicleState::default();
    x.0[state::X] = pose.x;
    x.0[state::Y] = pose.y;
    x.0[state::YAW] = pose.yaw;
    x.0[state::VX] = speed;
    for i in 0..4 {
        x.0[state::WHEEL_SPIN + i] = speed / r;
    }

    // Unknowns: heave, pitch, four wheel heaves and (when moving) the rear
    // axle spin. Residuals: the matching accelerations and surge.
    let moving = speed > 0.0;
    let n = if moving { 7 } else { 6 };
    let slots = [
        state::HEAVE,
        state::PITCH,
        state::WHEEL_HEAVE,
        state::WHEEL_HEAVE + 1,
        state::WHEEL_HEAVE + 2,
        state::WHEEL_HEAVE + 3,
    ];
    let residual_slots = [
        state::HEAVE_RATE,
        state::PITCH_RATE,
        state::WHEEL_HEAVE_RATE,
        state::WHEEL_HEAVE_RATE + 1,
        state::WHEEL_HEAVE_RATE + 2,
        state::WHEEL_HEAVE_RATE + 3,
    ];
    let ext = ExternalWrench::default();

    let apply = |q: &DVector<f64>, x: &mut VehicleState| {
        for (k, slot) in slots.iter().enumerate() {
            x.0[*slot] = q[k];
        }
        if moving {
            x.0[state::WHEEL_SPIN + RL] = q[6];
            x.0[state::WHEEL_SPIN + RR] = q[6];
            let kappa = (q[6] * r - speed) / speed.max(crate::tire::RELAXATION_SPEED_FLOOR);
            x.0[state::LAG_KAPPA + RL] = kappa;
            x.0[state::LAG_KAPPA + RR] = kappa;
        }
    };
    let residual = |x: &VehicleState, cmd: &ActuationCommand| -> SimResult<DVector<f64>> {
        let d = model.derivatives(x, cmd, &ext)?;
        let mut out = DVector::zeros(n);
        for (k, slot) in residual_slots.iter().enumerate() {
            out[k] = d[*slot];
        }
        if moving {
            out[6] = d[state::VX];
        }
        Ok(out)
    };

    let mut q = DVector::zeros(n);
    if moving {
        q[6] = speed / r;
    }
    let steps: Vec<f64> = (0..n).map(|k| if k < 6 { 1e-7 } else { 1e-6 * (speed / r).max(1.0) }).collect();
    let mut converged = false;
    for _ in 0..MAX_ITERATIONS {
        apply(&q, &mut x);
        let f0 = residual(&x, &command)?;
        if f0.amax() < RESIDUAL_TOL {
            converged = true;
            break;
        }
        let mut jac = DMatrix::zeros(n, n);
        for k in 0..n {
            let mut qk = q.clone();
            qk[k] += steps[k];
            let mut xk = x;
            apply(&qk, &mut xk);
            let fk = residual(&xk, &command)?;
            jac.set_column(k, &((fk - &f0) / steps[k]));
        }
        let dq = jac
            .lu()
            .solve(&(-f0))
            .ok_or_else(|| SimError::config("equilibrium Jacobian is singular"))?;
        q += dq;
    }
    apply(&q, &mut x);
    if !converged {
        let f = residual(&x, &command)?;
        if f.amax() > 1e-6 {
            return Err(SimError::config(format!(
                "no static equilibrium found at {speed} m/s (residual {:.3e})",
                f.amax()
            )));
        }
    }

    let eval = model.evaluate(&x, &command, &ext)?;
    let limit = p.suspension.travel_limit;
    if eval.wheels.travel.iter().any(|t| t.abs() > limit) {
        return Err(SimError::config(format!(
            "equilibrium at {speed} m/s exceeds the suspension travel limit of {limit} m"
        )));
    }
    if eval.wheels.fz.iter().any(|f| *f <= 0.0) {
        return Err(SimError::config("equilibrium leaves a wheel without ground contact"));
    }

    if moving {
        let omega = x.0[state::WHEEL_SPIN + RL];
        let rpm = pt.engine_speed(omega, gear);
        let axle_torque = (eval.wheels.fx[RL] + eval.wheels.fx[RR]) * r;
        let engine = axle_torque / pt.ratio(gear);
        let max = engine_torque(rpm, 1.0, &pt.engine_map);
        if engine > max {
            return Err(SimError::config(format!(
                "{speed} m/s cannot be sustained: needs {engine:.0} N m, engine gives {max:.0} N m"
            )));
        }
        command.throttle = pt.engine_map.throttle_for_torque(rpm, engine);
        x.0[state::THROTTLE] = command.throttle;
    }
    debug_assert_eq!(x.0.len(), STATE_LEN);
    Ok(Trim { state: x, command })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chassis::{static_wheel_loads, G};
    use crate::vehicle::testing::baseline;

    #[test]
    fn at_rest_loads_are_static() {
        let m = VehicleModel::new(baseline()).unwrap();
        let trim = initial_state(&m, Pose2::default(), 0.0).unwrap();
        let eval = m.evaluate(&trim.state, &trim.command, &ExternalWrench::default()).unwrap();
        let expected = static_wheel_loads(&m.params.chassis, m.layout.total_mass, 0.0);
        for i in 0..4 {
            assert!((eval.wheels.fz[i] - expected[i]).abs() / expected[i] < 1e-3);
        }
    }

    #[test]
    fn high_speed_vertical_balance() {
        let m = VehicleModel::new(baseline()).unwrap();
        let trim = initial_state(&m, Pose2::default(), 80.0).unwrap();
        let eval = m.evaluate(&trim.state, &trim.command, &ExternalWrench::default()).unwrap();
        let total: f64 = eval.wheels.fz.iter().sum();
        let expected = m.layout.total_mass * G + m.params.aero.downforce(80.0);
        assert!((total - expected).abs() / expected < 1e-3, "{total} vs {expected}");
    }

    #[test]
    fn trim_is_stationary_apart_from_travel() {
        let m = VehicleModel::new(baseline()).unwrap();
        for v in [20.0, 55.0, 80.0] {
            let trim = initial_state(&m, Pose2::default(), v).unwrap();
            let d = m.derivatives(&trim.state, &trim.command, &ExternalWrench::default()).unwrap();
            for (k, dk) in d.iter().enumerate() {
                if k == state::X || k == state::Y {
                    continue;
                }
                assert!(dk.abs() < 1e-6, "v = {v}: {} = {dk}", state::NAMES[k]);
            }
        }
    }

    #[test]
    fn negative_speed_is_rejected() {
        let m = VehicleModel::new(baseline()).unwrap();
        assert!(initial_state(&m, Pose2::default(), -1.0).unwrap_err().is_config());
    }
}
