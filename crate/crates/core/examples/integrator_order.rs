//! Convergence of the fixed-step integrator on `x' = -x` over one second.
//! In f64 the error falls by about 2^5 per halving until it reaches round-off;
//! the same scheme in double-double keeps the fifth-order slope further down.

use racesim::integrator::{dp45_step, integrate};
use racesim::SimResult;
use twofloat::TwoFloat;

fn double_double_error(steps: u32) -> SimResult<f64> {
    let mut term = TwoFloat::from(1.0);
    let mut exact = term;
    for k in 1..40u32 {
        term = -term / f64::from(k);
        exact += term;
    }
    let h = TwoFloat::from(1.0) / f64::from(steps);
    let mut x = [TwoFloat::from(1.0)];
    for _ in 0..steps {
        x = dp45_step(|x: &[TwoFloat; 1], _: &()| Ok([-x[0]]), &x, &(), h)?;
    }
    Ok(f64::from(x[0] - exact).abs())
}

fn ratio(previous: Option<f64>, err: f64) -> String {
    previous.map_or(String::new(), |p| format!("{:.1}", p / err))
}

fn main() -> SimResult<()> {
    let exact = (-1.0f64).exp();
    let (mut prev, mut prev_dd) = (None, None);
    println!("{:>10} {:>12} {:>8} {:>12} {:>8}", "h_s", "f64_error", "ratio", "dd_error", "ratio");
    for k in 0..10 {
        let steps = 5u32 << k;
        let h = 1.0 / f64::from(steps);
        let out = integrate(|x: &[f64; 1], _: &()| Ok([-x[0]]), &[1.0], |_| (), h, 1.0)?;
        let err = (out.last().map(|(_, x)| x[0]).unwrap_or(f64::NAN) - exact).abs();
        let dd = double_double_error(steps)?;
        println!(
            "{h:>10.2e} {err:>12.3e} {:>8} {dd:>12.3e} {:>8}",
            ratio(prev, err),
            ratio(prev_dd, dd)
        );
        prev = Some(err);
        prev_dd = Some(dd);
    }
    Ok(())
}
