//! Wall-clock cost of one physics step for every variant.

use std::path::PathBuf;

use racesim::bench::step_timing_probe;
use racesim::integrator::DEFAULT_STEP;
use racesim::vehicle::{ModelVariant, VehicleParameters};
use racesim::SimResult;

fn main() -> SimResult<()> {
    let data = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data");
    let vehicle = VehicleParameters::load(&data.join("vehicle.json"))?;
    println!("{:<18} {:>8} {:>8} {:>8}", "variant", "mean_us", "p99_us", "max_us");
    for v in ModelVariant::ALL {
        let t = step_timing_probe(&vehicle, v, 20_000, DEFAULT_STEP)?;
        println!("{:<18} {:>8.1} {:>8.1} {:>8.1}", v.id(), t.mean_us, t.p99_us, t.max_us);
    }
    Ok(())
}
