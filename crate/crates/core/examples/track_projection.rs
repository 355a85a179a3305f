//! Curvilinear projection on the banked oval and the resulting external
//! force on a stationary car.

use std::path::PathBuf;

use racesim::track::TrackCenterline;
use racesim::SimResult;

fn main() -> SimResult<()> {
    let data = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data");
    let track = TrackCenterline::load(&data.join("tracks/oval.csv"))?;
    println!("{:>8} {:>7} {:>8} {:>9} {:>9}", "s_m", "d_m", "bank_rad", "ext_fy_N", "ext_fz_N");
    for k in 0..8 {
        let s = k as f64 * track.s_max / 8.0;
        let c = track.at(s);
        // A point 2 m left of the centerline, heading along the track.
        let (x, y) = (c.x - 2.0 * c.psi.sin(), c.y + 2.0 * c.psi.cos());
        let pose = track.project(x, y, c.psi, Some(s), 15.0)?;
        let w = track.external_wrench(&pose, 800.0);
        println!("{:>8.1} {:>7.3} {:>8.4} {:>9.1} {:>9.1}", pose.s, pose.d, c.bank, w.fy, w.fz);
    }
    Ok(())
}
