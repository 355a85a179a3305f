//! Tire force generation in three fidelities, transient slip (relaxation)
//! and the vertical tire spring.

mod mf2006;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{SimError, SimResult};

pub use mf2006::{
    CombinedCoefficients, LateralCoefficients, LongitudinalCoefficients, Mf2006Parameters,
    PureSlipCurve, ScalingFactors,
};

/// Below this speed the relaxation rate is frozen at its value here (m/s).
pub const RELAXATION_SPEED_FLOOR: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SlipState {
    /// Longitudinal slip (-).
    pub kappa: f64,
    /// Slip angle (rad). Positive slip angle produces positive lateral force.
    pub alpha: f64,
    /// Camber (rad).
    pub gamma: f64,
}

impl SlipState {
    pub fn new(kappa: f64, alpha: f64, gamma: f64) -> Self {
        Self { kappa, alpha, gamma }
    }
}

/// Shear forces in the tire frame (N).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Forces {
    pub fx: f64,
    pub fy: f64,
}

impl Forces {
    pub const ZERO: Forces = Forces { fx: 0.0, fy: 0.0 };
}

/// One basic Magic Formula curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MfCurve {
    /// Stiffness factor.
    pub b: f64,
    /// Shape factor.
    pub c: f64,
    /// Peak value (N).
    pub d: f64,
    /// Curvature factor.
    pub e: f64,
}

impl MfCurve {
    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        let bx = self.b * x;
        self.d * (self.c * (bx - self.e * (bx - bx.atan())).atan()).sin()
    }

    fn validate(&self, which: &str) -> SimResult<()> {
        if !(self.b > 0.0 && self.c > 1.0 && self.d > 0.0 && self.e <= 1.0) {
            return Err(SimError::config(format!(
                "{which} curve violates B > 0, C > 1, D > 0, E <= 1: {self:?}"
            )));
        }
        Ok(())
    }
}

/// Basic four-parameter Magic Formula, independent per direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MfSimpleParameters {
    pub longitudinal: MfCurve,
    pub lateral: MfCurve,
}

impl MfSimpleParameters {
    pub fn validate(&self) -> SimResult<()> {
        self.longitudinal.validate("longitudinal")?;
        self.lateral.validate("lateral")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearTireParameters {
    /// Cornering stiffness (N/rad).
    pub c_alpha: f64,
    /// Longitudinal slip stiffness (N per unit slip).
    pub c_kappa: f64,
}

impl LinearTireParameters {
    pub fn validate(&self) -> SimResult<()> {
        if !(self.c_alpha > 0.0 && self.c_kappa > 0.0) {
            return Err(SimError::config("linear tire stiffnesses must be positive"));
        }
        Ok(())
    }
}

/// Combined-slip Magic Formula 2006 forces.
pub fn mf2006_forces(slip: &SlipState, fz: f64, p: &Mf2006Parameters) -> SimResult<Forces> {
    p.forces(slip, fz)
}

/// Basic Magic Formula: `y = D sin(C atan(B x - E (B x - atan(B x))))` per
/// direction, with `x` the slip angle or the longitudinal slip. Camber is
/// ignored.
pub fn mf_simple_forces(slip: &SlipState, p: &MfSimpleParameters) -> Forces {
    Forces {
        fx: p.longitudinal.eval(slip.kappa),
        fy: p.lateral.eval(slip.alpha),
    }
}

/// Unsaturated linear tire.
pub fn linear_tire_forces(slip: &SlipState, p: &LinearTireParameters) -> Forces {
    Forces {
        fx: p.c_kappa * slip.kappa,
        fy: p.c_alpha * slip.alpha,
    }
}

fn curve_from_full(c: &PureSlipCurve, which: &str) -> SimResult<MfCurve> {
    if !(c.d > 0.0) {
        return Err(SimError::Fit(format!("{which} peak force not positive ({})", c.d)));
    }
    if !(c.c > 1.0) {
        return Err(SimError::Fit(format!("{which} shape factor {} does not exceed 1", c.c)));
    }
    Ok(MfCurve {
        // B C D equals the zero-slip stiffness of the full model.
        b: c.stiffness / (c.c * c.d),
        c: c.c,
        d: c.d,
        e: c.e.min(1.0),
    })
}

fn check_fit_load(p: &Mf2006Parameters, fz: f64) -> SimResult<()> {
    if !(fz > 0.0 && fz >= p.fz_min && fz <= p.fz_max) {
        return Err(SimError::Fit(format!(
            "fit load {fz:.1} N outside the valid range [{:.1}, {:.1}] N",
            p.fz_min, p.fz_max
        )));
    }
    Ok(())
}

/// Identifies the basic Magic Formula from the full model at load `fz`
/// (zero camber): the peak value, shape, curvature and zero-slip stiffness of
/// each pure-slip curve carry over directly.
pub fn fit_simple_from_full(p: &Mf2006Parameters, fz: f64) -> SimResult<MfSimpleParameters> {
    check_fit_load(p, fz)?;
    let lon = p.longitudinal_curve(fz, 0.0)?;
    let lat = p.lateral_curve(fz, 0.0)?;
    Ok(MfSimpleParameters {
        longitudinal: curve_from_full(&lon, "longitudinal")?,
        lateral: curve_from_full(&lat, "lateral")?,
    })
}

/// Linear tire whose stiffnesses equal the full model's zero-slip slope at
/// load `fz`.
pub fn linear_from_full(p: &Mf2006Parameters, fz: f64) -> SimResult<LinearTireParameters> {
    check_fit_load(p, fz)?;
    let lon = p.longitudinal_curve(fz, 0.0)?;
    let lat = p.lateral_curve(fz, 0.0)?;
    if !(lon.stiffness > 0.0 && lat.stiffness > 0.0) {
        return Err(SimError::Fit("full model has non-positive slip stiffness".into()));
    }
    Ok(LinearTireParameters {
        c_alpha: lat.stiffness,
        c_kappa: lon.stiffness,
    })
}

/// Shear force law selected for a vehicle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum TireModel {
    Mf2006(Mf2006Parameters),
    MfSimple(MfSimpleParameters),
    Linear(LinearTireParameters),
}

impl TireModel {
    /// Shear forces for a wheel carrying `fz`. A wheel without ground contact
    /// produces no force regardless of the fidelity.
    #[inline]
    pub fn forces(&self, slip: &SlipState, fz: f64) -> SimResult<Forces> {
        if fz <= 0.0 {
            return Ok(Forces::ZERO);
        }
        match self {
            TireModel::Mf2006(p) => p.forces(slip, fz),
            TireModel::MfSimple(p) => Ok(mf_simple_forces(slip, p)),
            TireModel::Linear(p) => Ok(linear_tire_forces(slip, p)),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            TireModel::Mf2006(_) => "mf2006",
            TireModel::MfSimple(_) => "mf_simple",
            TireModel::Linear(_) => "linear",
        }
    }

    pub fn validate(&self) -> SimResult<()> {
        match self {
            TireModel::Mf2006(p) => p.validate(),
            TireModel::MfSimple(p) => p.validate(),
            TireModel::Linear(p) => p.validate(),
        }
    }

    /// Peak lateral friction coefficient at the nominal load, used for
    /// reference-lap generation.
    pub fn nominal_peak_mu(&self, nominal_load: f64) -> SimResult<f64> {
        Ok(match self {
            TireModel::Mf2006(p) => p.lateral_curve(p.fz0, 0.0)?.mu,
            TireModel::MfSimple(p) => p.lateral.d / nominal_load,
            // A linear tire never saturates; fall back to a dry-road value.
            TireModel::Linear(_) => 1.0,
        })
    }
}

/// On-disk tire parameter file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TireFile {
    pub version: u32,
    #[serde(flatten)]
    pub model: TireModel,
}

impl TireFile {
    pub fn load(path: &Path) -> SimResult<TireModel> {
        let text = std::fs::read_to_string(path).map_err(|e| SimError::io(path, e))?;
        let file: TireFile = serde_json::from_str(&text)?;
        if file.version != 1 {
            return Err(SimError::config(format!(
                "unsupported tire file version {}",
                file.version
            )));
        }
        file.model.validate()?;
        Ok(file.model)
    }

    pub fn save(model: &TireModel, path: &Path) -> SimResult<()> {
        let file = TireFile {
            version: 1,
            model: model.clone(),
        };
        let text = serde_json::to_string_pretty(&file)?;
        std::fs::write(path, text).map_err(|e| SimError::io(path, e))
    }
}

/// Transient slip carried by the first-order relaxation model.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TireLagState {
    pub kappa: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelaxationLengths {
    /// Longitudinal relaxation length (m).
    pub longitudinal: f64,
    /// Lateral relaxation length (m).
    pub lateral: f64,
}

/// `d(alpha')/dt = |v_x| / sigma_alpha * (alpha - alpha')`, likewise for
/// kappa. Below [`RELAXATION_SPEED_FLOOR`] the rate stays at the floor value.
#[inline]
pub fn tire_lag_derivative(
    lag: &TireLagState,
    steady: &SlipState,
    v_x: f64,
    lengths: &RelaxationLengths,
) -> TireLagState {
    let v = v_x.abs().max(RELAXATION_SPEED_FLOOR);
    TireLagState {
        kappa: v / lengths.longitudinal * (steady.kappa - lag.kappa),
        alpha: v / lengths.lateral * (steady.alpha - lag.alpha),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TireVertical {
    /// Vertical spring rate (N/m).
    pub spring_rate: f64,
    /// Unloaded radius (m).
    pub unloaded_radius: f64,
}

/// Contact-patch normal force of the tire spring; zero once the rim is
/// farther from the road than the unloaded radius.
#[inline]
pub fn vertical_tire_force(penetration: f64, p: &TireVertical) -> f64 {
    (p.spring_rate * penetration).max(0.0)
}
