use std::f64::consts::PI;

use approx::assert_relative_eq;
use nalgebra::{Rotation3, Unit};
use proptest::prelude::*;

use bimanual_core::haptics::{FailureEvent, FailureKind};
use bimanual_core::metrics::{deflection_sample, dsi_sample, fpb, lowpass, normalized_jerk, Butterworth};
use bimanual_core::world::{robot_to_vr, vr_to_robot, RoomBounds, SceneConfig, Vec3};

fn vec3(range: f64) -> impl Strategy<Value = Vec3> {
    (-range..range, -range..range, -range..range).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

/// A smooth, non-degenerate 3-D path sampled at `n` points over `duration`.
fn wiggle(n: usize, duration: f64, a: [f64; 3], w: [f64; 3]) -> Vec<Vec3> {
    (0..n)
        .map(|i| {
            let t = duration * i as f64 / (n - 1) as f64;
            let s = t / duration;
            Vec3::new(
                0.3 * s + a[0] * (w[0] * s).sin(),
                a[1] * (w[1] * s).sin(),
                0.1 * s * s + a[2] * (w[2] * s).cos(),
            )
        })
        .collect()
}

fn path_strategy() -> impl Strategy<Value = Vec<Vec3>> {
    (
        200usize..600,
        prop::array::uniform3(0.0..0.05f64),
        prop::array::uniform3(0.5..6.0f64),
    )
        .prop_map(|(n, a, w)| wiggle(n, 1.0, a, w))
}

proptest! {
    #[test]
    fn dsi_is_antisymmetric(r in 0.0..1.0f64, l in 0.0..1.0f64) {
        match (dsi_sample(r, l), dsi_sample(l, r)) {
            (Some(a), Some(b)) => {
                prop_assert!((a + b).abs() < 1e-9);
                prop_assert!(a.abs() <= 100.0 + 1e-9);
            }
            (None, None) => prop_assert!(r + l < 1e-6),
            _ => prop_assert!(false, "antisymmetry broken for {r}, {l}"),
        }
    }

    #[test]
    fn deflection_is_non_negative_between_the_faces(w in 0.05..0.5f64, xl in -1.0..1.0f64, frac in 0.0..=1.0f64) {
        let xr = xl + frac * w;
        prop_assert!(deflection_sample(w, xl, xr) >= 0.0);
        prop_assert!((deflection_sample(w, xl, xr) - deflection_sample(w, xr, xl)).abs() < 1e-12);
    }

    #[test]
    fn fpb_shares_sum_to_one_hundred(fl in 0.01..20.0f64, fr in 0.01..20.0f64) {
        let left = FailureEvent { kind: FailureKind::Break, t: 1.0, f_left: fl, f_right: fr };
        let right = FailureEvent { f_left: fr, f_right: fl, ..left.clone() };
        let sum = fpb(&left).unwrap() + fpb(&right).unwrap();
        prop_assert!((sum - 100.0).abs() < 1e-9);
    }

    #[test]
    fn room_clamp_is_idempotent_and_inside(p in vec3(3.0)) {
        let room = RoomBounds::default();
        let once = room.clamp(&p);
        prop_assert!(room.contains(&once));
        prop_assert_eq!(room.clamp(&once), once);
        if room.contains(&p) {
            prop_assert_eq!(once, p);
        }
    }

    #[test]
    fn frame_mapping_round_trips(p in vec3(2.0), scale in 0.5..4.0f64) {
        let cfg = SceneConfig { vr_scale: scale, ..SceneConfig::default() };
        let back = vr_to_robot(&robot_to_vr(&p, &cfg).unwrap(), &cfg).unwrap();
        prop_assert!((back - p).norm() < 1e-12);
    }

    #[test]
    fn nj_invariant_under_rigid_motion(
        path in path_strategy(),
        shift in vec3(5.0),
        axis in vec3(1.0),
        angle in -PI..PI,
    ) {
        prop_assume!(axis.norm() > 0.1);
        let dt = 1.0 / (path.len() - 1) as f64;
        let base = normalized_jerk(&path, dt).unwrap();
        let rot = Rotation3::from_axis_angle(&Unit::new_normalize(axis), angle);
        let moved: Vec<Vec3> = path.iter().map(|p| rot * p + shift).collect();
        let nj = normalized_jerk(&moved, dt).unwrap();
        prop_assert!((nj - base).abs() <= 1e-6 * base);
    }

    #[test]
    fn nj_invariant_under_amplitude_and_time_scaling(
        path in path_strategy(),
        amp in 0.01..100.0f64,
        time in 0.1..10.0f64,
    ) {
        let dt = 1.0 / (path.len() - 1) as f64;
        let base = normalized_jerk(&path, dt).unwrap();
        let scaled: Vec<Vec3> = path.iter().map(|p| p * amp).collect();
        let nj = normalized_jerk(&scaled, dt * time).unwrap();
        prop_assert!((nj - base).abs() <= 1e-6 * base);
    }

    #[test]
    fn lowpass_passes_slow_signals(freq in 0.2..1.0f64, phase in 0.0..(2.0 * PI), n in 400usize..1200) {
        let x: Vec<f64> = (0..n).map(|k| (2.0 * PI * freq * k as f64 / 200.0 + phase).sin()).collect();
        let y = lowpass(&x).unwrap();
        let twice = lowpass(&y).unwrap();
        // Away from the edges, a 1 Hz or slower sine goes through untouched.
        for i in n / 4..3 * n / 4 {
            prop_assert!((y[i] - x[i]).abs() < 0.02);
            prop_assert!((twice[i] - y[i]).abs() < 0.02);
        }
    }
}

#[test]
fn one_hertz_attenuation_below_one_percent() {
    let f = Butterworth::lowpass(6, 10.0, 200.0).unwrap();
    // Forward-backward filtering squares the magnitude.
    let gain = f.magnitude(1.0).powi(2);
    assert!((1.0 - gain).abs() < 0.01, "gain {gain}");
    assert_relative_eq!(f.magnitude(10.0).powi(2), 0.5, epsilon = 1e-6);
}

#[test]
fn lowpass_matches_reference_implementation() {
    // Reference values from scipy.signal.sosfiltfilt(butter(6, 10, fs=200, output="sos"), x).
    let x: Vec<f64> = (0..60)
        .map(|k| {
            let t = k as f64 / 200.0;
            (2.0 * PI * 3.0 * t).sin() + 0.3 * (2.0 * PI * 40.0 * t).cos() + 0.5 * t
        })
        .collect();
    let y = lowpass(&x).unwrap();
    let expected = [
        (0, 0.29787715),
        (7, 0.60685823),
        (21, 0.98949014),
        (33, 0.1111259),
        (59, -0.41553056),
    ];
    for (i, v) in expected {
        assert_relative_eq!(y[i], v, epsilon = 1e-6);
    }
}

#[test]
fn nj_of_minimum_jerk_reach() {
    // Analytic value for a 1-D minimum-jerk profile is sqrt(360).
    let n = 2001;
    let path: Vec<Vec3> = (0..n)
        .map(|i| {
            let s = i as f64 / (n - 1) as f64;
            Vec3::new(0.2 * (10.0 * s.powi(3) - 15.0 * s.powi(4) + 6.0 * s.powi(5)), 0.0, 0.0)
        })
        .collect();
    let nj = normalized_jerk(&path, 1.0 / (n - 1) as f64).unwrap();
    assert_relative_eq!(nj, 360f64.sqrt(), max_relative = 0.01);
}
