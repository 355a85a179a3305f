//! Fixed-step Dormand-Prince 4(5) integration.
//!
//! Only the six stages feeding the 5th-order solution are evaluated. The
//! seventh (FSAL) stage exists solely for the embedded error estimate, which
//! is not used because the step size is fixed.

use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{SimError, SimResult};

/// Default physics step (seconds).
pub const DEFAULT_STEP: f64 = 800e-6;

/// A state vector of fixed dimension `N`.
pub type StateVector<const N: usize, T = f64> = [T; N];

/// Stage coefficients as exact fractions, so that the tableau carries the
/// full precision of whatever scalar type it is evaluated in.
const A: [[(f64, f64); 5]; 6] = [
    [(0.0, 1.0); 5],
    [(1.0, 5.0), (0.0, 1.0), (0.0, 1.0), (0.0, 1.0), (0.0, 1.0)],
    [(3.0, 40.0), (9.0, 40.0), (0.0, 1.0), (0.0, 1.0), (0.0, 1.0)],
    [(44.0, 45.0), (-56.0, 15.0), (32.0, 9.0), (0.0, 1.0), (0.0, 1.0)],
    [
        (19372.0, 6561.0),
        (-25360.0, 2187.0),
        (64448.0, 6561.0),
        (-212.0, 729.0),
        (0.0, 1.0),
    ],
    [
        (9017.0, 3168.0),
        (-355.0, 33.0),
        (46732.0, 5247.0),
        (49.0, 176.0),
        (-5103.0, 18656.0),
    ],
];

/// 5th-order weights.
const B: [(f64, f64); 6] = [
    (35.0, 384.0),
    (0.0, 1.0),
    (500.0, 1113.0),
    (125.0, 192.0),
    (-2187.0, 6784.0),
    (11.0, 84.0),
];

#[inline]
fn frac<T: Float>((num, den): (f64, f64)) -> T {
    // Numerators and denominators are small integers, exact in any float type.
    // One residual correction recovers the last bits for extended-precision
    // types whose division is not correctly rounded. The fused residual is
    // exact in f64, so there the correction stays below half an ulp.
    let num = T::from(num).expect("tableau numerator");
    let den = T::from(den).expect("tableau denominator");
    let q = num / den;
    q + (-q).mul_add(den, num) / den
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[default]
    Dp45Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    /// Step size (seconds).
    pub step_size: f64,
    #[serde(default)]
    pub method: Method,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            step_size: DEFAULT_STEP,
            method: Method::Dp45Fixed,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> SimResult<()> {
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return Err(SimError::config(format!(
                "integrator step size must be positive, got {}",
                self.step_size
            )));
        }
        Ok(())
    }
}

fn check_stage<const N: usize, T: Float>(k: &StateVector<N, T>, stage: usize) -> SimResult<()> {
    if k.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(SimError::Integration { stage, time: None })
    }
}

/// Advances `x` by one Dormand-Prince step of size `h` with `u` held constant.
///
/// Generic over the scalar so the scheme can be checked in extended
/// precision; the simulation uses `f64`. `f` may itself fail (e.g. a
/// tire-model fault); such errors pass through unchanged. A non-finite
/// derivative yields [`SimError::Integration`] with the 1-based stage index.
pub fn dp45_step<const N: usize, T, U, F>(
    mut f: F,
    x: &StateVector<N, T>,
    u: &U,
    h: T,
) -> SimResult<StateVector<N, T>>
where
    T: Float,
    F: FnMut(&StateVector<N, T>, &U) -> SimResult<StateVector<N, T>>,
{
    debug_assert!(h > T::zero());
    let mut k = [[T::zero(); N]; 6];
    for stage in 0..6 {
        let mut xs = *x;
        for (j, a) in A[stage].iter().enumerate().take(stage) {
            let kj = &k[j];
            let ha = h * frac::<T>(*a);
            for (xi, kji) in xs.iter_mut().zip(kj.iter()) {
                *xi = *xi + ha * *kji;
            }
        }
        let ks = f(&xs, u)?;
        check_stage(&ks, stage + 1)?;
        k[stage] = ks;
    }
    let mut out = *x;
    for (stage, b) in B.iter().enumerate() {
        if b.0 == 0.0 {
            continue;
        }
        let hb = h * frac::<T>(*b);
        for (oi, ki) in out.iter_mut().zip(k[stage].iter()) {
            *oi = *oi + hb * *ki;
        }
    }
    if out.iter().any(|v| !v.is_finite()) {
        return Err(SimError::Integration {
            stage: 6,
            time: None,
        });
    }
    Ok(out)
}

/// Number of fixed steps needed to reach `t_end`, and the length of the final
/// step (equal to `h` unless `t_end` is not a multiple of `h`).
fn step_plan(h: f64, t_end: f64) -> (usize, f64) {
    let ratio = t_end / h;
    let nearest = ratio.round();
    if (ratio - nearest).abs() <= 1e-9 * ratio.max(1.0) {
        (nearest as usize, h)
    } else {
        let n = ratio.ceil() as usize;
        (n, t_end - (n - 1) as f64 * h)
    }
}

/// Integrates from `t = 0` to `t_end`, sampling the input schedule at the
/// start of every step (zero-order hold).
///
/// Returns the samples at `t = 0, h, 2h, ...`; the last sample is at `t_end`.
pub fn integrate<const N: usize, U, F, S>(
    mut f: F,
    x0: &StateVector<N>,
    mut schedule: S,
    h: f64,
    t_end: f64,
) -> SimResult<Vec<(f64, StateVector<N>)>>
where
    F: FnMut(&StateVector<N>, &U) -> SimResult<StateVector<N>>,
    S: FnMut(f64) -> U,
{
    if !(h > 0.0) {
        return Err(SimError::config("step size must be positive"));
    }
    if !(t_end >= 0.0) {
        return Err(SimError::config("t_end must be non-negative"));
    }
    let (n, last) = step_plan(h, t_end);
    let mut out = Vec::with_capacity(n + 1);
    out.push((0.0, *x0));
    let mut x = *x0;
    for i in 0..n {
        let t = i as f64 * h;
        let hi = if i + 1 == n { last } else { h };
        let u = schedule(t);
        x = dp45_step(&mut f, &x, &u, hi).map_err(|e| match e {
            SimError::Integration { stage, .. } => SimError::Integration {
                stage,
                time: Some(t),
            },
            other => other,
        })?;
        let t_next = if i + 1 == n { t_end } else { (i + 1) as f64 * h };
        out.push((t_next, x));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn decay(x: &[f64; 1], _: &()) -> SimResult<[f64; 1]> {
        Ok([-x[0]])
    }

    #[test]
    fn tableau_rows_sum_to_nodes() {
        let nodes = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0];
        for (row, c) in A.iter().zip(nodes.iter()) {
            let s: f64 = row.iter().map(|a| frac::<f64>(*a)).sum();
            assert!((s - c).abs() < 1e-14);
        }
        let bsum: f64 = B.iter().map(|b| frac::<f64>(*b)).sum();
        assert!((bsum - 1.0).abs() < 1e-14);
    }

    #[test]
    fn f64_coefficients_are_plain_quotients() {
        for &(num, den) in A.iter().flatten().chain(B.iter()) {
            assert_eq!(frac::<f64>((num, den)).to_bits(), (num / den).to_bits());
        }
    }

    #[test]
    fn exponential_decay_single_step() {
        let x = dp45_step(decay, &[1.0], &(), 0.1).unwrap();
        assert!((x[0] - (-0.1f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn zero_derivative_is_exact() {
        let x = dp45_step(|_: &[f64; 2], _: &()| Ok([0.0, 0.0]), &[5.0, -2.0], &(), 0.8e-3).unwrap();
        assert_eq!(x, [5.0, -2.0]);
    }

    #[test]
    fn harmonic_oscillator_rotation() {
        let osc = |x: &[f64; 2], _: &()| Ok([x[1], -x[0]]);
        let x = dp45_step(osc, &[1.0, 0.0], &(), 0.01).unwrap();
        assert!((x[0] - 0.01f64.cos()).abs() < 1e-12);
        assert!((x[1] + 0.01f64.sin()).abs() < 1e-12);
    }

    #[test]
    fn non_finite_stage_reports_index() {
        // Finite at the initial point, blows up at the second stage.
        let f = |x: &[f64; 1], _: &()| Ok([if x[0] > 1.0 { f64::NAN } else { 1.0 }]);
        let err = dp45_step(f, &[1.0], &(), 0.1).unwrap_err();
        assert!(matches!(err, SimError::Integration { stage: 2, .. }));
    }

    #[test]
    fn integrate_empty_horizon() {
        let out = integrate(decay, &[1.0], |_| (), 0.1, 0.0).unwrap();
        assert_eq!(out, vec![(0.0, [1.0])]);
    }

    #[test]
    fn integrate_decay_to_one_second() {
        let out = integrate(decay, &[1.0], |_| (), 0.001, 1.0).unwrap();
        assert_eq!(out.len(), 1001);
        let (t, x) = out.last().unwrap();
        assert_eq!(*t, 1.0);
        assert!((x[0] - (-1.0f64).exp()).abs() < 1e-8);
    }

    #[test]
    fn integrate_constant_ramp() {
        let out = integrate(|_: &[f64; 1], _: &()| Ok([1.0]), &[0.0], |_| (), 0.1, 1.0).unwrap();
        assert!((out.last().unwrap().1[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn integrate_fault_carries_timestamp() {
        let f = |x: &[f64; 1], _: &()| Ok([if x[0] > 0.35 { f64::INFINITY } else { 1.0 }]);
        let err = integrate(f, &[0.0], |_| (), 0.1, 1.0).unwrap_err();
        match err {
            SimError::Integration { time: Some(t), .. } => assert!((t - 0.3).abs() < 1e-12),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn input_is_zero_order_held() {
        // Input changes inside the step must not matter: the schedule is only
        // sampled at step starts.
        let f = |_: &[f64; 1], u: &f64| Ok([*u]);
        let a = integrate(f, &[0.0], |t| if t < 0.12 { 1.0 } else { 2.0 }, 0.1, 0.3).unwrap();
        let b = integrate(f, &[0.0], |t| if t < 0.18 { 1.0 } else { 2.0 }, 0.1, 0.3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn non_multiple_horizon_lands_on_t_end() {
        let out = integrate(|_: &[f64; 1], _: &()| Ok([1.0]), &[0.0], |_| (), 0.3, 1.0).unwrap();
        let (t, x) = out.last().unwrap();
        assert_eq!(*t, 1.0);
        assert!((x[0] - 1.0).abs() < 1e-12);
    }
}
