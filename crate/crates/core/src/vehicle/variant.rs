use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{SimError, SimResult};
use crate::tire::{fit_simple_from_full, linear_from_full, TireModel};

use super::VehicleParameters;

const SCALE: f64 = 0.9;

/// The baseline and its seven simplifications.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelVariant {
    Base,
    /// Four-parameter Magic Formula fitted at the median wheel load.
    MfSimple,
    /// Linear tires with the slip stiffness of the full model.
    LinearTires,
    /// No acceleration-induced load transfer.
    Cog0,
    /// Coincident left/right wheels on top of `Cog0`.
    SingleTrackCog0,
    /// Actuators track their commands instantly.
    NoDelay,
    /// Tire grip and slip stiffness reduced by 10 %.
    LessGrip,
    /// Downforce reduced by 10 %.
    LessLift,
}

impl ModelVariant {
    pub const ALL: [ModelVariant; 8] = [
        ModelVariant::Base,
        ModelVariant::MfSimple,
        ModelVariant::LinearTires,
        ModelVariant::Cog0,
        ModelVariant::SingleTrackCog0,
        ModelVariant::NoDelay,
        ModelVariant::LessGrip,
        ModelVariant::LessLift,
    ];

    pub fn id(self) -> &'static str {
        match self {
            ModelVariant::Base => "base",
            ModelVariant::MfSimple => "mf_simple",
            ModelVariant::LinearTires => "linear_tires",
            ModelVariant::Cog0 => "cog0",
            ModelVariant::SingleTrackCog0 => "single_track_cog0",
            ModelVariant::NoDelay => "no_delay",
            ModelVariant::LessGrip => "less_grip",
            ModelVariant::LessLift => "less_lift",
        }
    }

    /// Whether building this variant needs the median-load tire fit.
    pub fn needs_fit_load(self) -> bool {
        matches!(self, ModelVariant::MfSimple | ModelVariant::LinearTires)
    }
}

impl fmt::Display for ModelVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for ModelVariant {
    type Err = SimError;

    fn from_str(s: &str) -> SimResult<Self> {
        Ok(match s {
            "base" => ModelVariant::Base,
            "mf_simple" => ModelVariant::MfSimple,
            "linear_tires" => ModelVariant::LinearTires,
            "cog0" => ModelVariant::Cog0,
            "single_track_cog0" => ModelVariant::SingleTrackCog0,
            "no_delay" | "no_actuation_delay" => ModelVariant::NoDelay,
            "less_grip" => ModelVariant::LessGrip,
            "less_lift" | "less_downforce" => ModelVariant::LessLift,
            other => return Err(SimError::config(format!("unknown model variant '{other}'"))),
        })
    }
}

fn zero_heights(p: &mut VehicleParameters) {
    let c = &mut p.chassis;
    c.h_cog = 0.0;
    c.h_rp = 0.0;
    c.h_pp_accel = 0.0;
    c.h_pp_decel = 0.0;
    p.flags.zero_cog_height = true;
}

fn full_tire(base: &VehicleParameters, v: ModelVariant) -> SimResult<(&crate::tire::Mf2006Parameters, f64)> {
    let TireModel::Mf2006(full) = &base.tire else {
        return Err(SimError::config(format!(
            "variant {v} needs a full Magic Formula baseline tire"
        )));
    };
    let fz = base.tire_fit_load.ok_or_else(|| {
        SimError::config(format!(
            "variant {v} needs tire_fit_load (median wheel load of a baseline run)"
        ))
    })?;
    Ok((full, fz))
}

/// Derives the parameter set of `v` from the baseline.
pub fn make_variant(base: &VehicleParameters, v: ModelVariant) -> SimResult<VehicleParameters> {
    let mut p = base.clone();
    match v {
        ModelVariant::Base => {}
        ModelVariant::MfSimple => {
            let (full, fz) = full_tire(base, v)?;
            p.tire = TireModel::MfSimple(fit_simple_from_full(full, fz)?);
        }
        ModelVariant::LinearTires => {
            let (full, fz) = full_tire(base, v)?;
            p.tire = TireModel::Linear(linear_from_full(full, fz)?);
        }
        ModelVariant::Cog0 => zero_heights(&mut p),
        ModelVariant::SingleTrackCog0 => {
            zero_heights(&mut p);
            p.chassis.b_f = 0.0;
            p.chassis.b_r = 0.0;
            p.flags.zero_track_width = true;
        }
        ModelVariant::NoDelay => p.flags.bypass_actuators = true,
        ModelVariant::LessGrip => match &mut p.tire {
            TireModel::Mf2006(t) => {
                let s = &mut t.scaling;
                s.mux *= SCALE;
                s.muy *= SCALE;
                s.kxk *= SCALE;
                s.kya *= SCALE;
            }
            TireModel::MfSimple(t) => {
                t.longitudinal.d *= SCALE;
                t.lateral.d *= SCALE;
            }
            TireModel::Linear(t) => {
                t.c_alpha *= SCALE;
                t.c_kappa *= SCALE;
            }
        },
        ModelVariant::LessLift => p.aero.lift_area *= SCALE,
    }
    p.name = if base.name.is_empty() {
        v.id().to_string()
    } else {
        format!("{}:{}", base.name, v.id())
    };
    if v == ModelVariant::Base {
        p.name = base.name.clone();
    }
    p.validate()?;
    Ok(p)
}
