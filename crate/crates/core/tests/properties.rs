//! Randomised invariants of the metrics, track projection and tire laws.

use std::f64::consts::{PI, TAU};
use std::path::PathBuf;

use proptest::prelude::*;

use racesim::metrics::{disparity, max_lateral_error, uniform_grid, LateralErrorTrace};
use racesim::tire::{SlipState, TireModel};
use racesim::track::{wrap_angle, TrackCenterline, TrackSample};
use racesim::vehicle::VehicleParameters;

fn baseline_tire() -> TireModel {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/vehicle.json");
    VehicleParameters::load(&path).expect("shipped vehicle file").tire
}

/// Counter-clockwise circle of radius `r` sampled every ~1 m.
fn circle(r: f64) -> TrackCenterline {
    let n = (TAU * r).ceil() as usize;
    let samples = (0..n)
        .map(|k| {
            let th = TAU * k as f64 / n as f64;
            TrackSample {
                s: r * th,
                x: r * th.sin(),
                y: r - r * th.cos(),
                psi: th,
                kappa: 1.0 / r,
                ..Default::default()
            }
        })
        .collect();
    TrackCenterline::new("circle", samples, true).unwrap()
}

fn trace(d: Vec<f64>) -> LateralErrorTrace {
    let s = (0..d.len()).map(|k| k as f64 * 0.5).collect();
    LateralErrorTrace::new(s, d).unwrap()
}

proptest! {
    #[test]
    fn wrap_angle_lands_in_half_open_interval(a in -100.0f64..100.0) {
        let w = wrap_angle(a);
        prop_assert!(w > -PI && w <= PI);
        let turns = (a - w) / TAU;
        prop_assert!((turns - turns.round()).abs() < 1e-9);
    }

    #[test]
    fn grid_spans_length_without_exceeding_spacing(s_max in 1.0f64..5000.0, h in 0.1f64..10.0) {
        let g = uniform_grid(s_max, h).unwrap();
        prop_assert_eq!(g[0], 0.0);
        prop_assert_eq!(*g.last().unwrap(), s_max);
        prop_assert!(g.windows(2).all(|w| w[1] > w[0] && w[1] - w[0] <= h * (1.0 + 1e-9)));
    }

    #[test]
    fn d_max_bounds_every_sample(d in prop::collection::vec(-3.0f64..3.0, 2..200)) {
        let m = max_lateral_error(&trace(d.clone())).unwrap();
        prop_assert!(d.iter().all(|v| v.abs() <= m));
        prop_assert!(d.iter().any(|v| v.abs() == m));
    }

    #[test]
    fn disparity_is_nonnegative_and_zero_on_itself(
        pairs in prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 2..200)
    ) {
        let (a, b): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let (ta, tb) = (trace(a), trace(b));
        prop_assert!(disparity(&ta, &tb).unwrap() >= 0.0);
        prop_assert_eq!(disparity(&tb, &tb).unwrap(), 0.0);
    }

    #[test]
    fn disparity_of_constant_traces(c in -2.0f64..2.0, r in -2.0f64..2.0, n in 2usize..100) {
        let got = disparity(&trace(vec![c; n]), &trace(vec![r; n])).unwrap();
        let want = (c - r).powi(2) * r.abs();
        prop_assert!((got - want).abs() <= 1e-12 * want.max(1.0));
    }

    #[test]
    fn projection_recovers_offset_on_a_circle(th in 0.0f64..TAU, d in -10.0f64..10.0, yaw in -0.5f64..0.5) {
        let r = 150.0;
        let track = circle(r);
        // Left of a counter-clockwise circle is towards its centre.
        let rho = r - d;
        let (x, y) = (rho * th.sin(), r - rho * th.cos());
        let pose = track.project(x, y, th + yaw, None, 15.0).unwrap();
        // Chord sagitta bounds the polygon's deviation from the circle.
        prop_assert!((pose.d - d).abs() < 2e-3, "d {} vs {}", pose.d, d);
        let ds = wrap_angle(pose.s / r - th) * r;
        prop_assert!(ds.abs() < 0.05, "s off by {}", ds);
        prop_assert!(wrap_angle(pose.heading - yaw).abs() < 0.01);
    }

    #[test]
    fn tire_forces_are_odd_in_slip(
        kappa in -0.3f64..0.3,
        alpha in -0.3f64..0.3,
        fz in 500.0f64..8000.0,
    ) {
        let tire = baseline_tire();
        let f = tire.forces(&SlipState::new(kappa, alpha, 0.0), fz).unwrap();
        let g = tire.forces(&SlipState::new(-kappa, -alpha, 0.0), fz).unwrap();
        prop_assert!((f.fx + g.fx).abs() <= 1e-9 * f.fx.abs().max(1.0));
        prop_assert!((f.fy + g.fy).abs() <= 1e-9 * f.fy.abs().max(1.0));
    }

    #[test]
    fn tire_force_stays_within_friction_bound(
        kappa in -1.0f64..1.0,
        alpha in -1.0f64..1.0,
        fz in 500.0f64..8000.0,
    ) {
        let tire = baseline_tire();
        let f = tire.forces(&SlipState::new(kappa, alpha, 0.0), fz).unwrap();
        prop_assert!(f.fx.hypot(f.fy) < 2.5 * fz);
    }
}
