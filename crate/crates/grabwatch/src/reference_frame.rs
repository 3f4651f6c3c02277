//! Image-plane coordinate frame: principal point plus zero reference line.
//!
//! Raw detections are pixel positions of the payload's bounding-box centre.
//! Centering them on the principal point gives a radius `m` and a raw planar
//! angle; the zero reference direction `phi` is fitted so the sample median of
//! the wrapped residual angles is as close to zero as possible. With a
//! symmetric swing the true residual angles have median zero, which is what
//! makes this fit identifiable.

use crate::angle::{wrap_signed, Angle};
use crate::geometry::ImagePoint;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Detections closer to the principal point than this are excluded from the
/// reference-angle fit; their planar angle is too ill-conditioned to help.
pub const MIN_FIT_RADIUS_PX: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReferenceFrameError {
    #[error("reference fit needs at least {required} usable detections, got {usable}")]
    InsufficientData { usable: usize, required: usize },
    #[error("all detections sit at the principal point; reference direction is undefined")]
    DegenerateData,
}

/// One detection record reduced to what the geometry needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PixelDetection {
    pub frame_id: u64,
    /// Seconds since the Unix epoch, when the source row carried a timestamp.
    pub timestamp_s: Option<f64>,
    pub center_x: f64,
    pub center_y: f64,
    pub rope_length_m: Option<f64>,
}

/// Fitted image-plane frame: principal point and zero-line direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceFrame {
    pub principal_x: f64,
    pub principal_y: f64,
    /// Direction of the zero reference line in pixel coordinates, in (−π, π].
    pub reference_angle_phi: Angle,
}

/// Fit result with diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedReference {
    pub frame: ReferenceFrame,
    /// Median of the wrapped residual angles at the fitted phi. The candidate
    /// scan is exact for finite samples, so this is 0 whenever some data angle
    /// balances the rest.
    pub median_residual: f64,
    pub points_used: usize,
    pub points_excluded: usize,
}

/// Median of the wrapped residuals `wrap(a_i − phi)`, lower-of-two-middles for
/// even counts.
pub fn wrapped_residual_median(angles: &[f64], phi: f64) -> f64 {
    let mut residuals: Vec<f64> = angles.iter().map(|&a| wrap_signed(a - phi)).collect();
    residuals.sort_by(f64::total_cmp);
    let n = residuals.len();
    let mid = if n % 2 == 1 { n / 2 } else { n / 2 - 1 };
    residuals[mid]
}

/// Fits the zero reference direction as the circular median of the raw
/// detection angles around `principal`.
///
/// The scan considers every data angle as a candidate cut. For a candidate
/// `s_k` the wrapped residuals, in ascending order, are exactly the sorted
/// angles read circularly starting just past the point diametrically opposite
/// `s_k`; the median residual is therefore available in O(log n) per candidate
/// without re-sorting.
///
/// Several candidates routinely zero the median (any angle splitting the
/// sample into equal halves qualifies), so ties resolve by the smaller mean
/// absolute residual. That criterion is invariant under joint rotation of the
/// data, which keeps the fit rotation-equivariant; only exactly symmetric
/// configurations fall through to the smaller-phi fallback.
pub fn fit_reference_angle(
    detections: &[PixelDetection],
    principal: (f64, f64),
) -> Result<FittedReference, ReferenceFrameError> {
    let (px, py) = principal;
    let mut angles = Vec::with_capacity(detections.len());
    let mut excluded = 0usize;
    let mut max_radius = 0.0f64;
    for d in detections {
        let dx = d.center_x - px;
        let dy = d.center_y - py;
        let r = dx.hypot(dy);
        max_radius = max_radius.max(r);
        if r >= MIN_FIT_RADIUS_PX {
            angles.push(wrap_signed(dy.atan2(dx)));
        } else {
            excluded += 1;
        }
    }
    if angles.len() < 3 {
        if !detections.is_empty() && max_radius < MIN_FIT_RADIUS_PX {
            return Err(ReferenceFrameError::DegenerateData);
        }
        return Err(ReferenceFrameError::InsufficientData {
            usable: angles.len(),
            required: 3,
        });
    }

    angles.sort_by(f64::total_cmp);
    let n = angles.len();
    let mid = if n % 2 == 1 { n / 2 } else { n / 2 - 1 };

    let candidate_median = |k: usize| {
        let s_k = angles[k];
        // Cut diametrically opposite the candidate, kept inside (−π, π].
        let cut = if s_k <= 0.0 {
            s_k + std::f64::consts::PI
        } else {
            s_k - std::f64::consts::PI
        };
        let j0 = angles.partition_point(|&a| a <= cut);
        wrap_signed(angles[(j0 + mid) % n] - s_k)
    };

    let medians: Vec<f64> = (0..n).map(candidate_median).collect();
    let best_objective = medians
        .iter()
        .map(|m| m.abs())
        .fold(f64::INFINITY, f64::min);

    let mean_abs_residual = |phi: f64| {
        angles.iter().map(|&a| wrap_signed(a - phi).abs()).sum::<f64>() / n as f64
    };
    let mut best: Option<(usize, f64)> = None;
    for k in 0..n {
        if medians[k].abs() > best_objective {
            continue;
        }
        let spread = mean_abs_residual(angles[k]);
        let better = match best {
            None => true,
            Some((bk, bs)) => {
                spread < bs || (spread == bs && angles[k] < angles[bk])
            }
        };
        if better {
            best = Some((k, spread));
        }
    }
    let (best_k, _) = best.expect("at least three candidates");
    let best_phi = angles[best_k];
    let best_median = medians[best_k];

    Ok(FittedReference {
        frame: ReferenceFrame {
            principal_x: px,
            principal_y: py,
            reference_angle_phi: Angle::from_radians(best_phi),
        },
        median_residual: best_median,
        points_used: n,
        points_excluded: excluded,
    })
}

/// Converts a detection into polar image-plane coordinates under `rf`.
///
/// `m` is the pixel distance from the principal point; `theta` the wrapped
/// angle against the reference line, with `theta = 0` at `m = 0`.
pub fn to_image_point(d: &PixelDetection, rf: &ReferenceFrame) -> ImagePoint {
    let dx = d.center_x - rf.principal_x;
    let dy = d.center_y - rf.principal_y;
    let m = dx.hypot(dy);
    let theta = if m == 0.0 {
        Angle::ZERO
    } else {
        Angle::from_radians(wrap_signed(
            dy.atan2(dx) - rf.reference_angle_phi.radians(),
        ))
    };
    ImagePoint { m, theta }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn det(frame_id: u64, x: f64, y: f64) -> PixelDetection {
        PixelDetection {
            frame_id,
            timestamp_s: None,
            center_x: x,
            center_y: y,
            rope_length_m: None,
        }
    }

    fn dets_at_angles(angles: &[f64], radius: f64) -> Vec<PixelDetection> {
        angles
            .iter()
            .enumerate()
            .map(|(i, &a)| det(i as u64, radius * a.cos(), radius * a.sin()))
            .collect()
    }

    #[test]
    fn symmetric_triplet_recovers_center_angle() {
        let phi0 = 0.8;
        let dets = dets_at_angles(&[phi0 - 0.2, phi0, phi0 + 0.2], 50.0);
        let fit = fit_reference_angle(&dets, (0.0, 0.0)).unwrap();
        assert_abs_diff_eq!(
            fit.frame.reference_angle_phi.radians(),
            phi0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(fit.median_residual, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn wrap_straddling_cluster_recovers_planted_direction() {
        // Angles clustered around 3.1 rad spill across the ±π boundary; the
        // arithmetic median of raw angles would be badly wrong here.
        let phi0 = 3.1;
        let spread = [-0.15, -0.08, -0.03, 0.0, 0.02, 0.09, 0.14];
        let angles: Vec<f64> = spread.iter().map(|s| wrap_signed(phi0 + s)).collect();
        let dets = dets_at_angles(&angles, 80.0);
        let fit = fit_reference_angle(&dets, (0.0, 0.0)).unwrap();
        assert_abs_diff_eq!(
            wrap_signed(fit.frame.reference_angle_phi.radians() - phi0),
            0.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn residual_median_is_zeroed_on_uniform_angles() {
        // Uniform angles carry no direction signal; the fit still has to zero
        // the residual median exactly.
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let n = 1001;
        let angles: Vec<f64> = (0..n)
            .map(|_| wrap_signed(rng.random::<f64>() * std::f64::consts::TAU))
            .collect();
        let dets = dets_at_angles(&angles, 120.0);
        let fit = fit_reference_angle(&dets, (0.0, 0.0)).unwrap();
        let bound = 2.0 / (n as f64).sqrt();
        assert!(fit.median_residual.abs() <= bound);
        let recomputed = wrapped_residual_median(
            &angles,
            fit.frame.reference_angle_phi.radians(),
        );
        assert_abs_diff_eq!(recomputed, fit.median_residual, epsilon = 1e-12);
    }

    #[test]
    fn insufficient_and_degenerate_inputs() {
        let two = dets_at_angles(&[0.1, 0.4], 50.0);
        assert!(matches!(
            fit_reference_angle(&two, (0.0, 0.0)),
            Err(ReferenceFrameError::InsufficientData { usable: 2, .. })
        ));
        let at_center = vec![det(0, 0.0, 0.0), det(1, 0.2, 0.1), det(2, 0.0, 0.3)];
        assert!(matches!(
            fit_reference_angle(&at_center, (0.0, 0.0)),
            Err(ReferenceFrameError::DegenerateData)
        ));
        assert!(matches!(
            fit_reference_angle(&[], (0.0, 0.0)),
            Err(ReferenceFrameError::InsufficientData { usable: 0, .. })
        ));
    }

    #[test]
    fn sub_pixel_points_are_excluded_but_counted() {
        let mut dets = dets_at_angles(&[0.3, 0.5, 0.7, 0.9], 40.0);
        dets.push(det(9, 0.4, 0.3)); // radius 0.5 px
        let fit = fit_reference_angle(&dets, (0.0, 0.0)).unwrap();
        assert_eq!(fit.points_used, 4);
        assert_eq!(fit.points_excluded, 1);
    }

    #[test]
    fn image_point_conversion_axis_aligned() {
        let rf = ReferenceFrame {
            principal_x: 960.0,
            principal_y: 540.0,
            reference_angle_phi: Angle::ZERO,
        };
        let p = to_image_point(&det(0, 960.0, 540.0), &rf);
        assert_eq!(p.m, 0.0);
        assert_eq!(p.theta, Angle::ZERO);
        let p = to_image_point(&det(1, 1060.0, 540.0), &rf);
        assert_abs_diff_eq!(p.m, 100.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.theta.radians(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn image_point_three_four_five() {
        let rf = ReferenceFrame {
            principal_x: 0.0,
            principal_y: 0.0,
            reference_angle_phi: Angle::ZERO,
        };
        let p = to_image_point(&det(0, 30.0, 40.0), &rf);
        assert_abs_diff_eq!(p.m, 50.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.theta.radians(), (40.0f64 / 30.0).atan(), epsilon = 1e-12);
    }
}
