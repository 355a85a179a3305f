//! The 35-entry state vector.
//!
//! | index | content |
//! |-------|---------|
//! | 0..3  | planar pose: X, Y (m), yaw psi (rad) |
//! | 3..6  | sprung-body heave (m), roll, pitch (rad) |
//! | 6..9  | body-frame vx, vy (m/s), yaw rate (rad/s) |
//! | 9..12 | heave rate (m/s), roll rate, pitch rate (rad/s) |
//! | 12..16| wheel heave z_w per wheel (m) |
//! | 16..20| wheel heave rate per wheel (m/s) |
//! | 20..24| wheel spin per wheel (rad/s) |
//! | 24..28| lagged longitudinal slip kappa' per wheel |
//! | 28..32| lagged slip angle alpha' per wheel (rad) |
//! | 32    | steering angle (rad) |
//! | 33    | throttle (0..1) |
//! | 34    | brake pressure (bar) |
//!
//! Wheel blocks are ordered FL, FR, RL, RR. Degrees of freedom: 6 body,
//! 4 wheel vertical, 4 wheel spin.

use crate::chassis::{BodyState, PerWheel};

pub const STATE_LEN: usize = 35;
pub const DEGREES_OF_FREEDOM: usize = 14;

pub const X: usize = 0;
pub const Y: usize = 1;
pub const YAW: usize = 2;
pub const HEAVE: usize = 3;
pub const ROLL: usize = 4;
pub const PITCH: usize = 5;
pub const VX: usize = 6;
pub const VY: usize = 7;
pub const YAW_RATE: usize = 8;
pub const HEAVE_RATE: usize = 9;
pub const ROLL_RATE: usize = 10;
pub const PITCH_RATE: usize = 11;
pub const WHEEL_HEAVE: usize = 12;
pub const WHEEL_HEAVE_RATE: usize = 16;
pub const WHEEL_SPIN: usize = 20;
pub const LAG_KAPPA: usize = 24;
pub const LAG_ALPHA: usize = 28;
pub const STEER: usize = 32;
pub const THROTTLE: usize = 33;
pub const BRAKE: usize = 34;

/// Human-readable names, in index order.
pub const NAMES: [&str; STATE_LEN] = [
    "x", "y", "yaw", "heave", "roll", "pitch", "vx", "vy", "yaw_rate", "heave_rate", "roll_rate",
    "pitch_rate", "zw_fl", "zw_fr", "zw_rl", "zw_rr", "dzw_fl", "dzw_fr", "dzw_rl", "dzw_rr",
    "omega_fl", "omega_fr", "omega_rl", "omega_rr", "kappa_fl", "kappa_fr", "kappa_rl",
    "kappa_rr", "alpha_fl", "alpha_fr", "alpha_rl", "alpha_rr", "steer", "throttle", "brake",
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleState(pub [f64; STATE_LEN]);

impl Default for VehicleState {
    fn default() -> Self {
        Self([0.0; STATE_LEN])
    }
}

#[inline]
pub(crate) fn block(x: &[f64; STATE_LEN], start: usize) -> PerWheel {
    [x[start], x[start + 1], x[start + 2], x[start + 3]]
}

#[inline]
pub(crate) fn set_block(x: &mut [f64; STATE_LEN], start: usize, v: &PerWheel) {
    x[start..start + 4].copy_from_slice(v);
}

impl VehicleState {
    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn body(&self) -> BodyState {
        body_of(&self.0)
    }

    pub fn speed(&self) -> f64 {
        self.0[VX].hypot(self.0[VY])
    }

    pub fn wheel_heave(&self) -> PerWheel {
        block(&self.0, WHEEL_HEAVE)
    }

    pub fn wheel_spin(&self) -> PerWheel {
        block(&self.0, WHEEL_SPIN)
    }

    pub fn lag_alpha(&self) -> PerWheel {
        block(&self.0, LAG_ALPHA)
    }
}

#[inline]
pub(crate) fn body_of(x: &[f64; STATE_LEN]) -> BodyState {
    BodyState {
        vx: x[VX],
        vy: x[VY],
        yaw_rate: x[YAW_RATE],
        heave: x[HEAVE],
        heave_rate: x[HEAVE_RATE],
        roll: x[ROLL],
        roll_rate: x[ROLL_RATE],
        pitch: x[PITCH],
        pitch_rate: x[PITCH_RATE],
    }
}
