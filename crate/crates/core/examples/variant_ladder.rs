//! Every model variant on the same lap and seed, compared with the baseline.

use std::path::PathBuf;

use racesim::closed_loop::{run_closed_loop, LoopConfig, ReferenceLap};
use racesim::metrics::{disparity, resample, uniform_grid, DEFAULT_GRID_SPACING, DEFAULT_MAX_GAP};
use racesim::track::TrackCenterline;
use racesim::vehicle::{ModelVariant, VehicleParameters};
use racesim::SimResult;

fn main() -> SimResult<()> {
    let data = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data");
    let vehicle = VehicleParameters::load(&data.join("vehicle.json"))?;
    let track = TrackCenterline::load(&data.join("tracks/road_course.csv"))?;
    let lap = ReferenceLap::load(&data.join("laps/road_course_070.csv"))?;
    let cfg = LoopConfig::default();
    let grid = uniform_grid(track.s_max, DEFAULT_GRID_SPACING)?;
    let seed = 3;
    let base = run_closed_loop(ModelVariant::Base, &vehicle, &lap, &track, &cfg, seed)?;
    let base_trace = resample(&base.trace, &grid, DEFAULT_MAX_GAP)?;
    println!("{:<18} {:>9} {:>8} {:>12}", "variant", "lap_s", "d_max_m", "disparity_m3");
    for v in ModelVariant::ALL {
        let out = run_closed_loop(v, &vehicle, &lap, &track, &cfg, seed)?;
        let r = &out.result;
        match (r.lap_time, r.d_max) {
            (Some(t), Some(d)) => {
                let dis = disparity(&resample(&out.trace, &grid, DEFAULT_MAX_GAP)?, &base_trace)?;
                println!("{:<18} {t:>9.3} {d:>8.3} {dis:>12.3e}", v.id());
            }
            _ => println!("{:<18} failed: {}", v.id(), r.failure.as_deref().unwrap_or("")),
        }
    }
    Ok(())
}
