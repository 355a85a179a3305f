//! Median tire normal load of a noise-free baseline lap, the operating point
//! at which the simplified tires are fitted.
//!
//! `cargo run --release --example median_tire_load` prints it; add `--write`
//! to store it as `tire_fit_load` in `data/vehicle.json`.

use std::path::PathBuf;

use racesim::bench::median_wheel_load;
use racesim::closed_loop::{LoopConfig, ReferenceLap};
use racesim::track::TrackCenterline;
use racesim::vehicle::VehicleParameters;
use racesim::{SimError, SimResult};

fn main() -> SimResult<()> {
    let data = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data");
    let vehicle_path = data.join("vehicle.json");
    let vehicle = VehicleParameters::load(&vehicle_path)?;
    let track = TrackCenterline::load(&data.join("tracks/road_course.csv"))?;
    let lap = ReferenceLap::load(&data.join("laps/road_course_070.csv"))?;
    let load = median_wheel_load(&vehicle, &lap, &track, &LoopConfig::default())?;
    println!("median wheel load {load:.1} N");
    if std::env::args().any(|a| a == "--write") {
        // Patch the line in place so key order and file references stay.
        let text = std::fs::read_to_string(&vehicle_path).map_err(|e| SimError::io(&vehicle_path, e))?;
        let mut found = false;
        let lines: Vec<String> = text
            .lines()
            .map(|line| {
                if line.trim_start().starts_with("\"tire_fit_load\"") {
                    found = true;
                    let comma = if line.trim_end().ends_with(',') { "," } else { "" };
                    format!("  \"tire_fit_load\": {load:.1}{comma}")
                } else {
                    line.to_string()
                }
            })
            .collect();
        if !found {
            return Err(SimError::config("vehicle file has no tire_fit_load entry to update"));
        }
        let text = lines.join("\n") + "\n";
        std::fs::write(&vehicle_path, text).map_err(|e| SimError::io(&vehicle_path, e))?;
        println!("written to {}", vehicle_path.display());
    }
    Ok(())
}
