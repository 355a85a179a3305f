//! Constant-radius cornering at half the grip limit: lateral force balance
//! and per-axle lateral load transfer, baseline against cog0.

use std::f64::consts::TAU;
use std::path::PathBuf;

use racesim::chassis::{ExternalWrench, FL, FR, RL, RR};
use racesim::closed_loop::{LoopConfig, Simulation};
use racesim::generate::{generate_lap, LapSpec};
use racesim::track::{TrackCenterline, TrackSample};
use racesim::vehicle::{make_variant, ModelVariant, VehicleParameters};
use racesim::SimResult;

fn circle(radius: f64) -> SimResult<TrackCenterline> {
    let n = (TAU * radius).round() as usize;
    let ds = TAU * radius / n as f64;
    let samples = (0..n)
        .map(|k| {
            let th = k as f64 * ds / radius;
            TrackSample {
                s: k as f64 * ds,
                x: radius * th.sin(),
                y: radius * (1.0 - th.cos()),
                z: 0.0,
                psi: th,
                kappa: 1.0 / radius,
                bank: 0.0,
                slope: 0.0,
            }
        })
        .collect();
    TrackCenterline::new("circle", samples, true)
}

fn main() -> SimResult<()> {
    let data = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data");
    let vehicle = VehicleParameters::load(&data.join("vehicle.json"))?;
    let track = circle(100.0)?;
    let lap = generate_lap(
        &track,
        &vehicle,
        &LapSpec {
            grip_fraction: 0.5,
            speed_cap: None,
            spacing: 1.0,
        },
    )?;
    let mut cfg = LoopConfig::default();
    cfg.sensors.noise_enabled = false;
    for v in [ModelVariant::Base, ModelVariant::Cog0] {
        let mut sim = Simulation::new(make_variant(&vehicle, v)?, &lap, &track, &cfg, 0)?;
        while sim.time < 10.0 {
            sim.control_tick()?;
        }
        let e = sim.model.evaluate(&sim.state, &sim.targets(), &ExternalWrench::default())?;
        let fz = e.wheels.fz;
        println!(
            "{:<6} v {:.2} m/s, ay {:.2} m/s^2, transfer front {:.1} N, rear {:.1} N",
            v.id(),
            sim.state.speed(),
            e.ay,
            (fz[FR] - fz[FL]) / 2.0,
            (fz[RR] - fz[RL]) / 2.0
        );
    }
    Ok(())
}
