//! Property tests for the model invariants.

use grabwatch::angle::{wrap_signed, Angle};
use grabwatch::calibration::{calibrate, CalibrationConfig};
use grabwatch::geometry::{
    cos_viewing_angle, estimate_alpha, project_m, theta_from_state, validation_alpha, ImagePoint,
    ValidationInput,
};
use grabwatch::ingestion::{load_dataset, write_dataset_csv, DatasetFormat, DetectionRecord, LoadOptions};
use grabwatch::monitor::{alarm_transitions, SwingEstimate, SwingStatus};
use grabwatch::reference_frame::{fit_reference_angle, to_image_point, PixelDetection};
use grabwatch::simulator::{draw_sample, replication_rng};
use proptest::prelude::*;

const DEG: f64 = std::f64::consts::PI / 180.0;

fn swing_state() -> impl Strategy<Value = (f64, f64, f64, f64)> {
    (
        0.0..20.0 * DEG,
        1e-4..20.0 * DEG,
        0.0..std::f64::consts::TAU,
        500.0..5000.0,
    )
}

proptest! {
    #[test]
    fn round_trip_identity((alpha, beta, gamma, h) in swing_state()) {
        let a = Angle::from_radians(alpha);
        let b = Angle::from_radians(beta);
        let m = project_m(a, b, Angle::from_radians(gamma), h).unwrap();
        let theta = if m == 0.0 {
            Angle::ZERO
        } else {
            Angle::from_radians(theta_from_state(a, b, m, h).unwrap().acos())
        };
        let recovered = estimate_alpha(m, theta, b, h).unwrap();
        prop_assert!((recovered.radians() - alpha).abs() < 1e-9);
    }

    #[test]
    fn projection_equation_residual((alpha, beta, gamma, h) in swing_state()) {
        let a = Angle::from_radians(alpha);
        let b = Angle::from_radians(beta);
        let g = Angle::from_radians(gamma);
        let m = project_m(a, b, g, h).unwrap();
        let c = cos_viewing_angle(a, b, g);
        let residual = (m * m + h * h) * c * c - h * h;
        prop_assert!(residual.abs() <= 1e-6 * h * h);
    }

    #[test]
    fn untilted_camera_ignores_theta(
        m in 0.0..4000.0f64,
        theta in -std::f64::consts::PI..std::f64::consts::PI,
        h in 500.0..5000.0f64,
    ) {
        let with_theta = estimate_alpha(m, Angle::from_radians(theta), Angle::ZERO, h).unwrap();
        let reference = estimate_alpha(m, Angle::ZERO, Angle::ZERO, h).unwrap();
        prop_assert_eq!(with_theta, reference);
        let expected = (h / (m * m + h * h).sqrt()).acos();
        prop_assert!((with_theta.radians() - expected).abs() < 1e-12);
    }

    #[test]
    fn untilted_camera_estimate_increases_with_m(
        m1 in 0.0..3000.0f64,
        gap in 1e-6..1000.0f64,
        h in 500.0..5000.0f64,
    ) {
        let lo = estimate_alpha(m1, Angle::ZERO, Angle::ZERO, h).unwrap();
        let hi = estimate_alpha(m1 + gap, Angle::ZERO, Angle::ZERO, h).unwrap();
        prop_assert!(hi.radians() > lo.radians());
    }

    #[test]
    fn width_estimator_scale_invariance(
        m in 0.0..500.0f64,
        x in 50.0..500.0f64,
        l in 5.0..40.0f64,
        scale in 0.1..10.0f64,
    ) {
        let b = 2.9;
        prop_assume!(m * b / (x * l) <= 1.0);
        let base = validation_alpha(&ValidationInput { m, x, b, l }).unwrap();
        // Pixel quantities scale together (a finer sensor changes nothing)...
        let pixels_scaled = validation_alpha(&ValidationInput {
            m: m * scale,
            x: x * scale,
            b,
            l,
        })
        .unwrap();
        prop_assert!((base.radians() - pixels_scaled.radians()).abs() < 1e-9);
        // ...and so do the metric quantities (a larger payload on a longer rope).
        let metres_scaled = validation_alpha(&ValidationInput {
            m,
            x,
            b: b * scale,
            l: l * scale,
        })
        .unwrap();
        prop_assert!((base.radians() - metres_scaled.radians()).abs() < 1e-9);
    }
}

fn detections_from_angles(angles: &[f64], radius: f64, principal: (f64, f64)) -> Vec<PixelDetection> {
    angles
        .iter()
        .enumerate()
        .map(|(i, &a)| PixelDetection {
            frame_id: i as u64,
            timestamp_s: None,
            center_x: principal.0 + radius * a.cos(),
            center_y: principal.1 + radius * a.sin(),
            rope_length_m: None,
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn reference_fit_is_rotation_equivariant(
        angles in prop::collection::vec(-std::f64::consts::PI..std::f64::consts::PI, 3..40),
        delta in -std::f64::consts::PI..std::f64::consts::PI,
    ) {
        let base = detections_from_angles(&angles, 80.0, (0.0, 0.0));
        let rotated: Vec<f64> = angles.iter().map(|a| wrap_signed(a + delta)).collect();
        let turned = detections_from_angles(&rotated, 80.0, (0.0, 0.0));

        let fit_base = fit_reference_angle(&base, (0.0, 0.0)).unwrap();
        let fit_turned = fit_reference_angle(&turned, (0.0, 0.0)).unwrap();

        let phi_base = fit_base.frame.reference_angle_phi.radians();
        let phi_turned = fit_turned.frame.reference_angle_phi.radians();
        prop_assert!(
            wrap_signed(phi_turned - phi_base - delta).abs() < 1e-9,
            "phi {} vs rotated {} (delta {})", phi_base, phi_turned, delta
        );
        for (d_base, d_turned) in base.iter().zip(&turned) {
            let t_base = to_image_point(d_base, &fit_base.frame).theta.radians();
            let t_turned = to_image_point(d_turned, &fit_turned.frame).theta.radians();
            prop_assert!(wrap_signed(t_turned - t_base).abs() < 1e-9);
        }
    }

    #[test]
    fn reference_fit_translates_with_principal_point(
        angles in prop::collection::vec(-std::f64::consts::PI..std::f64::consts::PI, 3..40),
        shift_x in -500.0..500.0f64,
        shift_y in -500.0..500.0f64,
    ) {
        let at_origin = detections_from_angles(&angles, 80.0, (0.0, 0.0));
        let shifted = detections_from_angles(&angles, 80.0, (shift_x, shift_y));

        let fit_a = fit_reference_angle(&at_origin, (0.0, 0.0)).unwrap();
        let fit_b = fit_reference_angle(&shifted, (shift_x, shift_y)).unwrap();
        prop_assert!(
            (fit_a.frame.reference_angle_phi.radians()
                - fit_b.frame.reference_angle_phi.radians())
            .abs()
                < 1e-9
        );
        for (da, db) in at_origin.iter().zip(&shifted) {
            let pa = to_image_point(da, &fit_a.frame);
            let pb = to_image_point(db, &fit_b.frame);
            prop_assert!((pa.m - pb.m).abs() < 1e-9);
            prop_assert!(wrap_signed(pa.theta.radians() - pb.theta.radians()).abs() < 1e-9);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn calibration_is_scale_consistent(seed in 0u64..1000, scale in 0.2..5.0f64) {
        let mut rng = replication_rng(seed, 0);
        let points: Vec<ImagePoint> = draw_sample(
            Angle::from_degrees(5.0),
            Angle::from_degrees(2.0),
            1600.0,
            300,
            &mut rng,
        )
        .into_iter()
        .map(|d| d.point)
        .collect();
        let scaled: Vec<ImagePoint> = points
            .iter()
            .map(|p| ImagePoint { m: p.m * scale, theta: p.theta })
            .collect();
        let cfg = CalibrationConfig {
            clamp_infeasible: true,
            ..CalibrationConfig::default()
        };
        let a = calibrate(&points, 1600.0, &cfg).unwrap();
        let b = calibrate(&scaled, 1600.0 * scale, &cfg).unwrap();
        prop_assert!((a.params.beta.radians() - b.params.beta.radians()).abs() < 1e-9);
        prop_assert!((a.params.sigma_sq - b.params.sigma_sq).abs() < 1e-9);
    }
}

fn estimate_with_status(statuses: &[u8]) -> Vec<SwingEstimate> {
    statuses
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let status = match s % 3 {
                0 => SwingStatus::Normal,
                1 => SwingStatus::Alarm,
                _ => SwingStatus::OutOfRange,
            };
            SwingEstimate {
                frame_id: i as u64,
                alpha: Angle::from_degrees(f64::from(*s)),
                m: 0.0,
                theta: Angle::ZERO,
                status,
            }
        })
        .collect()
}

proptest! {
    #[test]
    fn alarm_events_count_entries_not_frames(statuses in prop::collection::vec(0u8..3, 0..200)) {
        let estimates = estimate_with_status(&statuses);
        let events = alarm_transitions(&estimates);

        // Reference count: walk the sequence, counting entries into Alarm.
        let mut expected = 0usize;
        let mut prev = SwingStatus::Normal;
        for e in &estimates {
            if e.status == SwingStatus::Alarm && prev != SwingStatus::Alarm {
                expected += 1;
            }
            prev = e.status;
        }
        prop_assert_eq!(events.len(), expected);
        let alarm_frames = estimates
            .iter()
            .filter(|e| e.status == SwingStatus::Alarm)
            .count();
        prop_assert!(events.len() <= alarm_frames);
    }
}

fn arbitrary_record() -> impl Strategy<Value = DetectionRecord> {
    (
        0u64..1_000_000,
        prop::option::of(prop::sample::select(vec![
            "2024-03-01T08:00:00Z".to_string(),
            "2024-03-01T08:00:00.111Z".to_string(),
            "2023-12-31T23:59:59+08:00".to_string(),
        ])),
        -1e6..1e6f64,
        -1e6..1e6f64,
        prop::option::of(0.0..4000.0f64),
        prop::option::of(0.0..4000.0f64),
        prop::option::of(0.0..1.0f64),
        prop::option::of(0.1..100.0f64),
    )
        .prop_map(
            |(frame_id, timestamp, center_x, center_y, bbox_w, bbox_h, confidence, rope)| {
                DetectionRecord {
                    frame_id,
                    timestamp,
                    center_x,
                    center_y,
                    bbox_w,
                    bbox_h,
                    confidence,
                    rope_length_m: rope,
                }
            },
        )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn dataset_round_trip_is_lossless(
        records in prop::collection::btree_map(0u64..1_000_000, arbitrary_record(), 1..40)
    ) {
        // Unique frame ids, sorted, with the map key as the id.
        let records: Vec<DetectionRecord> = records
            .into_iter()
            .map(|(id, mut r)| {
                r.frame_id = id;
                r
            })
            .collect();
        let mut bytes = Vec::new();
        write_dataset_csv(&records, &mut bytes).unwrap();
        let tmp = tempfile::Builder::new().suffix(".csv").tempfile().unwrap();
        std::fs::write(tmp.path(), &bytes).unwrap();
        let loaded = load_dataset(tmp.path(), DatasetFormat::Csv, &LoadOptions::new(1920, 1080)).unwrap();
        prop_assert_eq!(loaded.records, records);
        prop_assert!(loaded.rejects.is_empty());
    }
}
