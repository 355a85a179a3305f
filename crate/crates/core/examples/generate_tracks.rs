//! Regenerates the shipped tracks and reference laps under `data/`.
//!
//! Run with `cargo run --release --example generate_tracks`.

use std::path::PathBuf;

use racesim::generate::{generate_lap, generate_track, GeneratorSpec, LapSpec};
use racesim::vehicle::VehicleParameters;
use racesim::SimResult;

/// Track name and reference-lap grip fraction.
const SHIPPED: [(&str, f64); 2] = [("oval", 0.6), ("road_course", 0.7)];

fn main() -> SimResult<()> {
    let data = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data");
    let vehicle = VehicleParameters::load(&data.join("vehicle.json"))?;
    for (name, fraction) in SHIPPED {
        let spec = GeneratorSpec::load(&data.join("tracks").join(format!("{name}.gen.json")))?;
        let track = generate_track(&spec)?;
        track.save(&data.join("tracks").join(format!("{name}.csv")))?;
        let lap = generate_lap(
            &track,
            &vehicle,
            &LapSpec {
                grip_fraction: fraction,
                speed_cap: None,
                spacing: 1.0,
            },
        )?;
        let file = format!("{name}_{:03}.csv", (fraction * 100.0).round() as u32);
        lap.save(&data.join("laps").join(&file))?;
        let vmax = lap.samples.iter().map(|s| s.v).fold(0.0, f64::max);
        println!(
            "{name}: {:.1} m, lap {file} top speed {vmax:.1} m/s, peak lateral demand {:.2} m/s^2",
            track.s_max,
            lap.peak_lateral_acceleration()
        );
    }
    Ok(())
}
