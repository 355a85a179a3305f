//! Lateral and longitudinal force curves of the three tire fidelities at the
//! fit load, as CSV on stdout.

use std::path::PathBuf;

use racesim::tire::{fit_simple_from_full, linear_from_full, SlipState, TireModel};
use racesim::vehicle::VehicleParameters;
use racesim::SimResult;

fn main() -> SimResult<()> {
    let data = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data");
    let p = VehicleParameters::load(&data.join("vehicle.json"))?;
    let TireModel::Mf2006(full) = &p.tire else {
        panic!("the shipped vehicle uses the full Magic Formula tire");
    };
    let fz = p.tire_fit_load.unwrap_or(full.fz0);
    let models = [
        TireModel::Mf2006(full.clone()),
        TireModel::MfSimple(fit_simple_from_full(full, fz)?),
        TireModel::Linear(linear_from_full(full, fz)?),
    ];
    println!("# fz = {fz:.0} N");
    println!("slip,fy_mf2006,fy_mf_simple,fy_linear,fx_mf2006,fx_mf_simple,fx_linear");
    for k in -40..=40 {
        let slip = k as f64 * 0.005;
        let fy: Vec<f64> = models
            .iter()
            .map(|m| m.forces(&SlipState::new(0.0, slip, 0.0), fz).map(|f| f.fy))
            .collect::<SimResult<_>>()?;
        let fx: Vec<f64> = models
            .iter()
            .map(|m| m.forces(&SlipState::new(slip, 0.0, 0.0), fz).map(|f| f.fx))
            .collect::<SimResult<_>>()?;
        println!(
            "{slip:.3},{:.1},{:.1},{:.1},{:.1},{:.1},{:.1}",
            fy[0], fy[1], fy[2], fx[0], fx[1], fx[2]
        );
    }
    Ok(())
}
