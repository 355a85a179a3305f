//! Disparity to the baseline as the speed profile is scaled up, until the
//! baseline can no longer complete the lap.

use std::path::PathBuf;

use racesim::bench::{experiment_acceleration_sweep, ExperimentConfig};
use racesim::SimResult;

fn main() -> SimResult<()> {
    let data = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data");
    let mut cfg = ExperimentConfig::load(&data.join("experiments/sweep.json"))?;
    cfg.scale_factors.retain(|f| *f <= 1.1);
    let out = experiment_acceleration_sweep(&cfg)?;
    println!("{:<18} {:>6} {:>10} {:>12}", "variant", "scale", "ay_peak", "disparity_m3");
    for r in &out.rows {
        let d = r.disparity_base_m3.map_or("failed".to_string(), |d| format!("{d:.3e}"));
        println!("{:<18} {:>6.2} {:>10.2} {d:>12}", r.variant.id(), r.scale, r.peak_lat_acc_mps2);
    }
    Ok(())
}
