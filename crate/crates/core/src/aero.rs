//! Drag, lift and aero pitch moment.

use serde::{Deserialize, Serialize};

use crate::chassis::AeroWrench;
use crate::error::{SimError, SimResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AeroParameters {
    /// 1/2 rho c_d A (kg/m).
    pub drag_area: f64,
    /// 1/2 rho c_l A (kg/m); negative lift is downforce.
    pub lift_area: f64,
    /// Distance of the lift force from the CoG (m); positive behind the CoG.
    pub l_aero: f64,
}

impl AeroParameters {
    pub fn validate(&self) -> SimResult<()> {
        if !(self.drag_area >= 0.0 && self.lift_area.is_finite() && self.l_aero.is_finite()) {
            return Err(SimError::config("aero drag term must be non-negative"));
        }
        Ok(())
    }

    /// Downforce magnitude at speed `v` (N, positive down).
    pub fn downforce(&self, v: f64) -> f64 {
        -self.lift_area * v * v
    }
}

/// Aerodynamic loads with the body speed as airspeed (no wind).
#[inline]
pub fn aero_wrench(v_x: f64, p: &AeroParameters) -> AeroWrench {
    let lift = p.lift_area * v_x * v_x;
    AeroWrench {
        drag: -p.drag_area * v_x * v_x.abs(),
        lift,
        pitch_moment: lift * p.l_aero,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> AeroParameters {
        AeroParameters {
            drag_area: 1.0,
            lift_area: -2.0,
            l_aero: 0.2,
        }
    }

    #[test]
    fn standstill() {
        let w = aero_wrench(0.0, &params());
        assert_eq!(w.drag, 0.0);
        assert_eq!(w.lift, 0.0);
        assert_eq!(w.pitch_moment, 0.0);
    }

    #[test]
    fn drag_and_moment_values() {
        assert_eq!(aero_wrench(50.0, &params()).drag, -2500.0);
        let p = AeroParameters {
            lift_area: 5000.0 / 2500.0,
            ..params()
        };
        let w = aero_wrench(50.0, &p);
        assert!((w.lift - 5000.0).abs() < 1e-9);
        assert!((w.pitch_moment - 1000.0).abs() < 1e-9);
    }

    #[test]
    fn parity() {
        for v in [3.0, 17.5, 80.0] {
            let a = aero_wrench(v, &params());
            let b = aero_wrench(-v, &params());
            assert_eq!(a.drag, -b.drag);
            assert_eq!(a.lift, b.lift);
        }
    }

    #[test]
    fn downforce_is_lift_magnitude() {
        let p = params();
        assert_eq!(p.downforce(40.0), -aero_wrench(40.0, &p).lift);
    }
}
