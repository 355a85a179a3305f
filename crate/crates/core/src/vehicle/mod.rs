//! The assembled vehicle: parameter file, state map, derivative function,
//! model variants and equilibrium initialisation.

mod init;
mod model;
pub mod state;
mod variant;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::aero::AeroParameters;
use crate::chassis::{ChassisParameters, WheelSuspension};
use crate::driveline::{ActuatorParameters, EngineMap, PowertrainParameters};
use crate::error::{SimError, SimResult};
use crate::tire::{RelaxationLengths, TireFile, TireModel, TireVertical};

pub use init::{initial_state, Pose2, Trim};
pub use model::{Evaluation, VehicleModel, WheelOutputs};
pub use state::{VehicleState, STATE_LEN};
pub use variant::{make_variant, ModelVariant};

pub const PARAMETER_FILE_VERSION: u32 = 1;

/// Structural switches used by the simplified variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructuralFlags {
    #[serde(default)]
    pub zero_track_width: bool,
    #[serde(default)]
    pub zero_cog_height: bool,
    #[serde(default)]
    pub bypass_actuators: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VehicleParameters {
    pub version: u32,
    #[serde(default)]
    pub name: String,
    pub chassis: ChassisParameters,
    pub suspension: WheelSuspension,
    pub tire: TireModel,
    pub tire_vertical: TireVertical,
    pub relaxation: RelaxationLengths,
    pub aero: AeroParameters,
    pub powertrain: PowertrainParameters,
    pub actuators: ActuatorParameters,
    #[serde(default)]
    pub flags: StructuralFlags,
    /// Wheel load used to fit the simplified tires (N); the median load of a
    /// baseline run on the reference lap.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tire_fit_load: Option<f64>,
}

fn resolve(base: &Path, rel: &str) -> PathBuf {
    let p = Path::new(rel);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

impl VehicleParameters {
    /// Loads and validates a parameter file.
    ///
    /// The tire and engine map may be inlined (`tire`, `powertrain.engine_map`)
    /// or referenced relative to the file (`tire_file`,
    /// `powertrain.engine_map_file`).
    pub fn load(path: &Path) -> SimResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| SimError::io(path, e))?;
        let mut value: Value = serde_json::from_str(&text)?;
        let dir = path.parent().unwrap_or(Path::new("."));
        let obj = value
            .as_object_mut()
            .ok_or_else(|| SimError::config("vehicle file must hold a JSON object"))?;
        if let Some(file) = obj.remove("tire_file") {
            let rel = file
                .as_str()
                .ok_or_else(|| SimError::config("tire_file must be a string"))?;
            let model = TireFile::load(&resolve(dir, rel))?;
            obj.insert("tire".into(), serde_json::to_value(model)?);
        }
        if let Some(pt) = obj.get_mut("powertrain").and_then(Value::as_object_mut) {
            if let Some(file) = pt.remove("engine_map_file") {
                let rel = file
                    .as_str()
                    .ok_or_else(|| SimError::config("engine_map_file must be a string"))?;
                let map = EngineMap::load_csv(&resolve(dir, rel))?;
                pt.insert("engine_map".into(), serde_json::to_value(map)?);
            }
        }
        let p: VehicleParameters = serde_json::from_value(value)?;
        p.validate()?;
        Ok(p)
    }

    /// Writes a self-contained file with the tire and engine map inlined.
    pub fn save(&self, path: &Path) -> SimResult<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text).map_err(|e| SimError::io(path, e))
    }

    pub fn validate(&self) -> SimResult<()> {
        if self.version != PARAMETER_FILE_VERSION {
            return Err(SimError::config(format!(
                "unsupported vehicle file version {}",
                self.version
            )));
        }
        self.chassis.validate()?;
        self.suspension.validate()?;
        self.tire.validate()?;
        if !(self.tire_vertical.spring_rate > 0.0 && self.tire_vertical.unloaded_radius > 0.0) {
            return Err(SimError::config("tire vertical stiffness and radius must be positive"));
        }
        if !(self.relaxation.longitudinal > 0.0 && self.relaxation.lateral > 0.0) {
            return Err(SimError::config("relaxation lengths must be positive"));
        }
        self.aero.validate()?;
        self.powertrain.validate()?;
        self.actuators.validate()?;
        let c = &self.chassis;
        let zero_track = c.b_f == 0.0 && c.b_r == 0.0;
        if self.flags.zero_track_width != zero_track {
            return Err(SimError::config(
                "zero_track_width flag must match zero front and rear track widths",
            ));
        }
        let zero_height =
            c.h_cog == 0.0 && c.h_rp == 0.0 && c.h_pp_accel == 0.0 && c.h_pp_decel == 0.0;
        if self.flags.zero_cog_height && !zero_height {
            return Err(SimError::config(
                "zero_cog_height flag requires zero CoG and pivot heights",
            ));
        }
        if let Some(fz) = self.tire_fit_load {
            if !(fz > 0.0) {
                return Err(SimError::config("tire_fit_load must be positive"));
            }
        }
        Ok(())
    }

    pub fn total_mass(&self) -> f64 {
        self.chassis.sprung_mass + self.suspension.unsprung_mass.iter().sum::<f64>()
    }
}


#[cfg(test)]
mod tests {
    use super::testing::baseline;
    use super::*;

    #[test]
    fn shipped_file_loads_and_round_trips() {
        let p = baseline();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("v.json");
        p.save(&path).unwrap();
        assert_eq!(VehicleParameters::load(&path).unwrap(), p);
    }

    #[test]
    fn flag_mismatch_is_rejected() {
        let mut p = baseline();
        p.flags.zero_track_width = true;
        assert!(p.validate().unwrap_err().is_config());
    }

    #[test]
    fn bad_version_is_rejected() {
        let mut p = baseline();
        p.version = 7;
        assert!(p.validate().is_err());
    }
}
