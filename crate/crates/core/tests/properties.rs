//! Randomized invariants across the library.

use magbot::cli::{parse_scenario, Scenario};
use magbot::docking::{request_retract, step_dropoff, step_pickup, AlignmentError, DockPhase, DockState, DockTolerance};
use magbot::estimation::{
    delta_wrench, pca_fit, pca_project, symmetric_eigen, PayloadModel, PositionLabel, Row, SyntheticGrid,
    WrenchDataset,
};
use magbot::simctrl::{static_wrenches, LoadCase};
use magbot::trajectory::{circle_sine, motion_peaks, validate_trajectory, MotionContext};
use magbot::types::GRAVITY;
use magbot::{
    forward_kinematics, inverse_kinematics, mover_distance, normalize_angle, Axis, PlatformGeometry, Pose6D, Wrench,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn pose_strategy() -> impl Strategy<Value = Pose6D> {
    (0.0..960.0, 0.0..720.0, 205.0..=280.0, -14.0..=14.0, -14.0..=14.0, -360.0..=360.0)
        .prop_map(|(x, y, z, alpha, beta, gamma)| Pose6D { x, y, z, alpha, beta, gamma })
}

fn wrench_strategy() -> impl Strategy<Value = Wrench> {
    prop::array::uniform6(-20.0..20.0).prop_map(Wrench::from_array)
}

/// Third largest eigenvalue of the population covariance.
fn third_variance(rows: &[Row]) -> f64 {
    let n = rows.len() as f64;
    let mean: [f64; 6] = std::array::from_fn(|c| rows.iter().map(|r| r[c]).sum::<f64>() / n);
    let cov = std::array::from_fn(|i| {
        std::array::from_fn(|j| rows.iter().map(|r| (r[i] - mean[i]) * (r[j] - mean[j])).sum::<f64>() / n)
    });
    let mut values = symmetric_eigen(cov).0;
    values.sort_by(|a, b| b.total_cmp(a));
    values[2]
}

fn dataset(label: PositionLabel, samples: Vec<(Wrench, Wrench)>) -> WrenchDataset {
    WrenchDataset { label, samples }
}

proptest! {
    #[test]
    fn ik_fk_round_trip(pose in pose_strategy()) {
        let geom = PlatformGeometry::default();
        let back = forward_kinematics(&inverse_kinematics(&pose, &geom).unwrap(), &geom).unwrap();
        for axis in Axis::ALL {
            prop_assert!((back.get(axis) - pose.get(axis)).abs() < 1e-9, "{axis}: {} vs {}", back.get(axis), pose.get(axis));
        }
    }

    #[test]
    fn ik_keeps_movers_symmetric(pose in pose_strategy()) {
        let geom = PlatformGeometry::default();
        let pair = inverse_kinematics(&pose, &geom).unwrap();
        prop_assert!((pair.distance() - mover_distance(pose.z, &geom).unwrap()).abs() < 1e-9);
        prop_assert!((0.5 * (pair.mover1.x + pair.mover2.x) - pose.x).abs() < 1e-9);
        prop_assert!((0.5 * (pair.mover1.y + pair.mover2.y) - pose.y).abs() < 1e-9);
    }

    #[test]
    fn normalized_angles_are_half_open(a in -1e4f64..1e4) {
        let n = normalize_angle(a).unwrap();
        prop_assert!(n > -180.0 && n <= 180.0);
        prop_assert!(((a - n) / 360.0 - ((a - n) / 360.0).round()).abs() < 1e-9);
    }

    #[test]
    fn statics_balance_forces_and_moments(
        z in 205.0..=280.0f64,
        mb in 0.0..3.0f64,
        m in 0.0..3.0f64,
        px in -100.0..=100.0f64,
        py in -100.0..=100.0f64,
    ) {
        let geom = PlatformGeometry::default();
        let pose = Pose6D { z, ..Pose6D::default() };
        let load = LoadCase { magbot_mass: mb, payload_mass: m, payload_x: px, payload_y: py };
        let (w1, w2) = static_wrenches(&pose, &load, &geom).unwrap();
        let total = GRAVITY * (mb + m);
        prop_assert!((w1.fz + w2.fz - total).abs() <= 1e-12 * total.max(1.0));
        // Pitch moment about the platform center from the vertical reactions.
        let d = mover_distance(z, &geom).unwrap();
        prop_assert!(((w2.fz - w1.fz) * d / 2.0 - GRAVITY * m * px).abs() < 1e-9 * (1.0 + total * d));
        prop_assert!((w1.tx + w2.tx).abs() < 1e-12);
        prop_assert!((w1.tx - w2.tx - GRAVITY * m * py / 1000.0).abs() < 1e-12);
        prop_assert!(w1.fx <= 0.0 && w2.fx <= 0.0);
    }

    #[test]
    fn statics_are_linear_in_payload_mass(m1 in 0.0..2.0f64, m2 in 0.0..2.0f64, px in -100.0..=100.0f64) {
        let geom = PlatformGeometry::default();
        let pose = Pose6D { z: 230.0, ..Pose6D::default() };
        let at = |m| {
            let load = LoadCase { magbot_mass: 0.0, payload_mass: m, payload_x: px, payload_y: 0.0 };
            static_wrenches(&pose, &load, &geom).unwrap()
        };
        let (a, b, sum) = (at(m1), at(m2), at(m1 + m2));
        for (x, y, s) in [(a.0, b.0, sum.0), (a.1, b.1, sum.1)] {
            for ((x, y), s) in x.to_array().iter().zip(y.to_array()).zip(s.to_array()) {
                prop_assert!((x + y - s).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn delta_is_linear(
        samples in prop::collection::vec((wrench_strategy(), wrench_strategy()), 1..20),
        k in -5.0..5.0f64,
    ) {
        let label = PositionLabel { x: 0, y: 0 };
        let base = delta_wrench(&dataset(label, samples.clone())).unwrap();
        let scaled: Vec<_> = samples.iter().map(|(a, b)| (*a * k, *b * k)).collect();
        let shifted: Vec<_> = samples.iter().map(|(a, b)| (*a + *b, *b + *b)).collect();
        let ks = delta_wrench(&dataset(label, scaled)).unwrap();
        let sh = delta_wrench(&dataset(label, shifted)).unwrap();
        for c in 0..6 {
            prop_assert!((ks[c] - k * base[c]).abs() < 1e-9);
            // Adding the same wrench to both movers leaves the delta alone.
            prop_assert!((sh[c] - base[c]).abs() < 1e-9);
        }
    }

    #[test]
    fn pca_is_scale_equivariant(
        rows in prop::collection::vec(prop::array::uniform6(-10.0..10.0f64), 9),
        k in 0.1..10.0f64,
    ) {
        let base = pca_fit(&rows);
        prop_assume!(base.is_ok());
        let base = base.unwrap();
        prop_assume!(base.explained_variance[0] - base.explained_variance[1] > 1e-3);
        prop_assume!(base.explained_variance[1] - third_variance(&rows) > 1e-3);
        let scaled_rows: Vec<Row> = rows.iter().map(|r| r.map(|v| v * k)).collect();
        let scaled = pca_fit(&scaled_rows).unwrap();
        for i in 0..2 {
            prop_assert!((scaled.explained_variance[i] - k * k * base.explained_variance[i]).abs()
                < 1e-8 * k * k * base.explained_variance[0]);
        }
        for (r, s) in rows.iter().zip(&scaled_rows) {
            let (p, q) = (pca_project(&base, r), pca_project(&scaled, s));
            for i in 0..2 {
                prop_assert!((q[i] - k * p[i]).abs() < 1e-6 * k * (1.0 + p[i].abs()));
            }
        }
    }

    #[test]
    fn classifier_ignores_dataset_order(seed in any::<u64>(), query in prop::array::uniform6(-3.0..3.0f64)) {
        let geom = PlatformGeometry::default();
        let spec = SyntheticGrid { noise_sigma: 0.01, samples_per_cell: 3, ..SyntheticGrid::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = spec.generate(&geom, &mut rng).unwrap();
        let mut shuffled = data.clone();
        shuffled.rotate_left((seed % 9) as usize);
        shuffled.swap(0, 8);
        let (a, b) = (PayloadModel::fit(&data).unwrap(), PayloadModel::fit(&shuffled).unwrap());
        prop_assert_eq!(a.classify(&query), b.classify(&query));
        for (label, c) in &a.centroids {
            let other = b.centroids.iter().find(|(l, _)| l == label).unwrap().1;
            prop_assert!((c[0] - other[0]).abs() < 1e-9 && (c[1] - other[1]).abs() < 1e-9);
        }
    }

    #[test]
    fn docking_never_drops_the_platform(
        ops in prop::collection::vec((0u8..3, 0.0..1.0f64, 0.0..1.0f64), 1..60),
    ) {
        let tol = DockTolerance::default();
        let mut state = DockState::free();
        for (op, pos, ang) in ops {
            let err = AlignmentError::new(pos, ang);
            let before = state;
            match op {
                0 => if let Ok(out) = step_pickup(state, err, &tol) { state = out.state },
                1 => if let Ok(out) = step_dropoff(state, err, &tol) { state = out.state },
                _ => match request_retract(state) {
                    Ok(next) => {
                        prop_assert!(!before.pin_engaged());
                        state = next;
                    }
                    Err(_) => prop_assert_eq!(state, before),
                },
            }
            prop_assert!(state.consistent());
            prop_assert_eq!(state.carried(), state.pin_engaged());
            if state.phase() == DockPhase::Free || state.phase() == DockPhase::Retracting {
                prop_assert!(!state.pin_engaged());
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn slowing_a_trajectory_keeps_it_valid(radius in 0.0..120.0f64, z_amp in 0.0..30.0f64, factor in 1.0..4.0f64) {
        let ctx = MotionContext::default();
        let center = Pose6D::new(480.0, 360.0, 242.5, 0.0, 0.0, 0.0).unwrap();
        let traj = circle_sine(center, radius, z_amp, 1, &ctx).unwrap();
        prop_assert!(validate_trajectory(&traj, &ctx).valid());
        let slow = traj.time_scaled(factor);
        let slow_ctx = MotionContext { dt: ctx.dt * factor, ..ctx.clone() };
        prop_assert!(validate_trajectory(&slow, &slow_ctx).valid());
        let (p, q) = (motion_peaks(&traj), motion_peaks(&slow));
        prop_assert!((q.speed * factor - p.speed).abs() <= 1e-6 * (1.0 + p.speed));
        prop_assert!((q.accel * factor * factor - p.accel).abs() <= 1e-6 * (1.0 + p.accel));
        prop_assert!((slow.duration() - factor * traj.duration()).abs() < 1e-9 * (1.0 + slow.duration()));
    }

    #[test]
    fn scenario_emit_is_a_fixed_point(
        v_max in 100.0..5000.0f64,
        radius in 0.0..200.0f64,
        seed in any::<u32>(),
        kind in prop::sample::select(vec!["sweep", "circle", "helix", "cos_sin"]),
        pid_set in 0u8..3,
    ) {
        let mut sc = Scenario::default();
        for kv in [
            format!("v_max={v_max}"),
            format!("radius={radius}"),
            format!("seed={seed}"),
            format!("kind={kind}"),
            format!("pid_set={pid_set}"),
            "name=prop run".to_string(),
        ] {
            sc.set(&kv).unwrap();
        }
        let text = sc.emit();
        let back = parse_scenario(&text).unwrap();
        prop_assert_eq!(back.emit(), text);
        prop_assert_eq!(back.num("v_max"), v_max);
        prop_assert_eq!(back.num("radius"), radius);
        prop_assert_eq!(back.seed(), seed as u64);
        prop_assert_eq!(back.word("kind"), kind);
        prop_assert_eq!(back.name(), "prop run");
    }
}
