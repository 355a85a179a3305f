//! One noise-free baseline lap of the road course with a few tick samples.

use std::path::PathBuf;

use racesim::closed_loop::{run_closed_loop, LoopConfig, ReferenceLap};
use racesim::track::TrackCenterline;
use racesim::vehicle::{ModelVariant, VehicleParameters};
use racesim::SimResult;

fn main() -> SimResult<()> {
    let data = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data");
    let vehicle = VehicleParameters::load(&data.join("vehicle.json"))?;
    let track = TrackCenterline::load(&data.join("tracks/road_course.csv"))?;
    let lap = ReferenceLap::load(&data.join("laps/road_course_070.csv"))?;
    let mut cfg = LoopConfig::default();
    cfg.sensors.noise_enabled = false;
    let out = run_closed_loop(ModelVariant::Base, &vehicle, &lap, &track, &cfg, 0)?;
    println!("t_s,s_m,d_m,v_mps,ay_mps2,steer_rad,throttle,brake_bar,gear");
    for r in out.ticks.iter().step_by(100) {
        println!(
            "{:.2},{:.1},{:.3},{:.2},{:.2},{:.4},{:.3},{:.1},{}",
            r.t, r.s, r.d, r.v, r.ay, r.steering, r.throttle, r.brake, r.gear
        );
    }
    println!("{}", serde_json::to_string_pretty(&out.result)?);
    Ok(())
}
