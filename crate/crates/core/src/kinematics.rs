//! Closed-form inverse and forward kinematics of the two-mover platform.
//!
//! The platform height is set by the planar distance between the movers
//! through the symmetric leg trapezoid; platform yaw is the heading of the
//! mover-1 to mover-2 vector; platform tilts are geared to the mover yaw
//! offsets.

use std::fmt;

use thiserror::Error;

use crate::types::{Axis, InvariantError, MoverState, PlatformGeometry, Pose6D, TileGrid, WorkspaceLimits};

/// Slack applied to every bound comparison so values sitting exactly on a
/// limit (up to rounding) are accepted.
pub const BOUND_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KinematicsError {
    #[error("unreachable height z = {z} mm: admissible interval is [{z_min}, {z_max}] mm")]
    UnreachableHeight { z: f64, z_min: f64, z_max: f64 },
    #[error("mover distance {d} mm outside mechanical range [{d_lo}, {d_hi}] mm")]
    DistanceOutOfRange { d: f64, d_lo: f64, d_hi: f64 },
    #[error(transparent)]
    Invariant(#[from] InvariantError),
}

/// The two mover commands that realize one platform pose. Mover 1 drives
/// platform alpha, mover 2 drives platform beta.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MoverPair {
    pub mover1: MoverState,
    pub mover2: MoverState,
}

impl MoverPair {
    pub fn distance(&self) -> f64 {
        self.mover1.planar_distance(&self.mover2)
    }

    pub fn movers(&self) -> [MoverState; 2] {
        [self.mover1, self.mover2]
    }
}

/// Planar mover distance needed for platform height `z_p`.
///
/// Only the elbow-up branch (platform above the lower leg joints) is
/// accepted.
pub fn mover_distance(z_p: f64, geom: &PlatformGeometry) -> Result<f64, KinematicsError> {
    let h = z_p - geom.joint_stack();
    if !z_p.is_finite() || h < 0.0 || h > geom.k {
        return Err(KinematicsError::UnreachableHeight {
            z: z_p,
            z_min: geom.joint_stack(),
            z_max: z_ceiling(geom),
        });
    }
    Ok(2.0 * (geom.fixed_offset() + (geom.k * geom.k - h * h).sqrt()))
}

/// Platform height for a given mover distance (elbow-up branch).
pub fn platform_height(d_m: f64, geom: &PlatformGeometry) -> Result<f64, KinematicsError> {
    let d_lo = 2.0 * geom.fixed_offset();
    let d_hi = 2.0 * (geom.fixed_offset() + geom.k);
    if !d_m.is_finite() || d_m < d_lo || d_m > d_hi {
        return Err(KinematicsError::DistanceOutOfRange { d: d_m, d_lo, d_hi });
    }
    let u = d_m / 2.0 - geom.fixed_offset();
    Ok(geom.joint_stack() + (geom.k * geom.k - u * u).sqrt())
}

/// Highest platform position, reached with fully upright legs.
pub fn z_ceiling(geom: &PlatformGeometry) -> f64 {
    geom.joint_stack() + geom.k
}

/// Platform height interval reachable inside `[d_min, d_max]`.
pub fn reachable_z_interval(geom: &PlatformGeometry) -> Result<(f64, f64), KinematicsError> {
    Ok((platform_height(geom.d_max, geom)?, platform_height(geom.d_min, geom)?))
}

pub fn inverse_kinematics(
    pose: &Pose6D,
    geom: &PlatformGeometry,
) -> Result<MoverPair, KinematicsError> {
    pose.validate()?;
    let half = mover_distance(pose.z, geom)? / 2.0;
    let (sin_g, cos_g) = pose.gamma.to_radians().sin_cos();
    let mover1 = MoverState {
        x: pose.x - half * cos_g,
        y: pose.y - half * sin_g,
        z: geom.z_m,
        gamma: -pose.alpha / geom.g_a + pose.gamma,
    };
    let mover2 = MoverState {
        x: pose.x + half * cos_g,
        y: pose.y + half * sin_g,
        z: geom.z_m,
        gamma: -pose.beta / geom.g_b + pose.gamma,
    };
    Ok(MoverPair { mover1, mover2 })
}

/// Forward kinematics with platform yaw unwrapped towards the mean mover
/// yaw. Since tilts are bounded the platform yaw always lies within half a
/// turn of that mean, so no outside reference is needed inside the
/// workspace.
pub fn forward_kinematics(
    pair: &MoverPair,
    geom: &PlatformGeometry,
) -> Result<Pose6D, KinematicsError> {
    let reference = 0.5 * (pair.mover1.gamma + pair.mover2.gamma);
    forward_kinematics_near(pair, geom, reference)
}

/// Forward kinematics choosing the platform yaw branch closest to
/// `reference_gamma`.
pub fn forward_kinematics_near(
    pair: &MoverPair,
    geom: &PlatformGeometry,
    reference_gamma: f64,
) -> Result<Pose6D, KinematicsError> {
    pair.mover1.validate()?;
    pair.mover2.validate()?;
    let dx = pair.mover2.x - pair.mover1.x;
    let dy = pair.mover2.y - pair.mover1.y;
    let z = platform_height(dx.hypot(dy), geom)?;
    let heading = dy.atan2(dx).to_degrees();
    let gamma = heading + 360.0 * ((reference_gamma - heading) / 360.0).round();
    Ok(Pose6D {
        x: 0.5 * (pair.mover1.x + pair.mover2.x),
        y: 0.5 * (pair.mover1.y + pair.mover2.y),
        z,
        alpha: geom.g_a * (gamma - pair.mover1.gamma),
        beta: geom.g_b * (gamma - pair.mover2.gamma),
        gamma,
    })
}

/// Pose that puts mover 1 on anchor `a` and mover 2 on anchor `b` with
/// level platform.
pub fn anchored_pose(
    a: (f64, f64),
    b: (f64, f64),
    geom: &PlatformGeometry,
) -> Result<Pose6D, KinematicsError> {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let gamma = dy.atan2(dx).to_degrees();
    Ok(Pose6D {
        x: 0.5 * (a.0 + b.0),
        y: 0.5 * (a.1 + b.1),
        z: platform_height(dx.hypot(dy), geom)?,
        alpha: 0.0,
        beta: 0.0,
        gamma,
    })
}

/// What a violation is about.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Quantity {
    Pose(Axis),
    /// Height outside the mechanically reachable interval.
    ReachableZ,
    MoverDistance,
    MoverX(u8),
    MoverY(u8),
    MoverGamma(u8),
    MoverSpeed(u8),
    MoverAccel(u8),
    MoverYawRate(u8),
    /// Stored mover command disagrees with the inverse kinematics of the
    /// stored pose.
    MoverMismatch(u8),
    SampleTiming,
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Quantity::Pose(axis) => write!(f, "{axis}"),
            Quantity::ReachableZ => f.write_str("z (reachable)"),
            Quantity::MoverDistance => f.write_str("mover distance"),
            Quantity::MoverX(i) => write!(f, "mover{i} x"),
            Quantity::MoverY(i) => write!(f, "mover{i} y"),
            Quantity::MoverGamma(i) => write!(f, "mover{i} gamma"),
            Quantity::MoverSpeed(i) => write!(f, "mover{i} speed"),
            Quantity::MoverAccel(i) => write!(f, "mover{i} acceleration"),
            Quantity::MoverYawRate(i) => write!(f, "mover{i} yaw rate"),
            Quantity::MoverMismatch(i) => write!(f, "mover{i} command"),
            Quantity::SampleTiming => f.write_str("sample timing"),
        }
    }
}

/// One broken bound: `value` lies beyond `bound`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violation {
    pub quantity: Quantity,
    pub value: f64,
    pub bound: f64,
    /// Trajectory sample index, when the check ran on a trajectory.
    pub sample: Option<usize>,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(i) = self.sample {
            write!(f, "sample {i}: ")?;
        }
        write!(f, "{} = {} violates bound {}", self.quantity, self.value, self.bound)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct WorkspaceReport {
    pub violations: Vec<Violation>,
}

impl WorkspaceReport {
    pub fn valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, quantity: Quantity) -> bool {
        self.violations.iter().any(|v| v.quantity == quantity)
    }

    pub(crate) fn push(&mut self, quantity: Quantity, value: f64, bound: f64) {
        self.violations.push(Violation {
            quantity,
            value,
            bound,
            sample: None,
        });
    }

    /// Pushes a violation if `value` falls outside `[lo, hi]`.
    pub(crate) fn check_range(&mut self, quantity: Quantity, value: f64, (lo, hi): (f64, f64)) {
        if value.is_nan() {
            self.push(quantity, value, hi);
        } else if value < lo - BOUND_EPS {
            self.push(quantity, value, lo);
        } else if value > hi + BOUND_EPS {
            self.push(quantity, value, hi);
        }
    }

    pub(crate) fn extend_at(&mut self, other: WorkspaceReport, sample: usize) {
        self.violations
            .extend(other.violations.into_iter().map(|v| Violation {
                sample: Some(sample),
                ..v
            }));
    }
}

/// Validates a pose against the platform ranges, the tile area and the
/// mover-level restrictions. Violations are returned as data.
pub fn check_workspace(
    pose: &Pose6D,
    limits: &WorkspaceLimits,
    grid: &TileGrid,
    geom: &PlatformGeometry,
) -> WorkspaceReport {
    let mut report = WorkspaceReport::default();
    for axis in [Axis::Z, Axis::Alpha, Axis::Beta, Axis::Gamma] {
        if let Some(range) = limits.range(axis) {
            report.check_range(Quantity::Pose(axis), pose.get(axis), range);
        }
    }
    for axis in [Axis::X, Axis::Y] {
        if !pose.get(axis).is_finite() {
            report.push(Quantity::Pose(axis), pose.get(axis), f64::NAN);
        }
    }
    let pair = match inverse_kinematics(pose, geom) {
        Ok(pair) => pair,
        Err(_) => {
            report.push(Quantity::ReachableZ, pose.z, z_ceiling(geom));
            return report;
        }
    };
    check_movers(&pair, limits, grid, geom, &mut report);
    report
}

pub(crate) fn check_movers(
    pair: &MoverPair,
    limits: &WorkspaceLimits,
    grid: &TileGrid,
    geom: &PlatformGeometry,
    report: &mut WorkspaceReport,
) {
    report.check_range(Quantity::MoverDistance, pair.distance(), (geom.d_min, geom.d_max));
    let area = grid.bounds().shrink(limits.mover_half_extent);
    for (i, m) in pair.movers().iter().enumerate() {
        let id = i as u8 + 1;
        report.check_range(Quantity::MoverX(id), m.x, (area.x_min, area.x_max));
        report.check_range(Quantity::MoverY(id), m.y, (area.y_min, area.y_max));
        if m.gamma.abs() > limits.mover_gamma_local + BOUND_EPS
            && !grid.near_anchor(m.x, m.y, limits.anchor_radius)
        {
            report.push(Quantity::MoverGamma(id), m.gamma, limits.mover_gamma_local);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::default_geometry;
    use approx::assert_abs_diff_eq;

    // Reference values from an independent 30-digit evaluation of the
    // closed form with the prototype constants.
    const D_205: f64 = 454.246_652_871_986_66;
    const X1_205: f64 = 252.876_673_564_006_67;
    const X2_205: f64 = 707.123_326_435_993_3;

    fn pose(x: f64, y: f64, z: f64, a: f64, b: f64, g: f64) -> Pose6D {
        Pose6D::new(x, y, z, a, b, g).unwrap()
    }

    #[test]
    fn mover_distance_examples() {
        let g = default_geometry();
        assert_abs_diff_eq!(mover_distance(284.8, &g).unwrap(), 182.0, epsilon = 1e-9);
        assert_abs_diff_eq!(mover_distance(280.0, &g).unwrap(), 258.8, epsilon = 1e-9);
        assert_abs_diff_eq!(mover_distance(205.0, &g).unwrap(), D_205, epsilon = 1e-9);
    }

    #[test]
    fn mover_distance_rejects_unreachable_heights() {
        let g = default_geometry();
        let err = mover_distance(300.0, &g).unwrap_err();
        assert!(err.to_string().contains("unreachable height"));
        assert!(err.to_string().contains("284.8"));
        // elbow-down side
        assert!(mover_distance(100.0, &g).is_err());
        assert!(mover_distance(f64::NAN, &g).is_err());
    }

    #[test]
    fn platform_height_examples() {
        let g = default_geometry();
        assert_abs_diff_eq!(platform_height(182.0, &g).unwrap(), 284.8, epsilon = 1e-9);
        assert_abs_diff_eq!(platform_height(258.8, &g).unwrap(), 280.0, epsilon = 1e-9);
        assert_abs_diff_eq!(platform_height(454.2466, &g).unwrap(), 205.0, epsilon = 1e-4);
        assert!(platform_height(100.0, &g).is_err());
        assert!(platform_height(600.0, &g).is_err());
    }

    #[test]
    fn ik_examples() {
        let g = default_geometry();
        let pair = inverse_kinematics(&pose(480.0, 360.0, 205.0, 0.0, 0.0, 0.0), &g).unwrap();
        assert_abs_diff_eq!(pair.mover1.x, X1_205, epsilon = 1e-9);
        assert_abs_diff_eq!(pair.mover2.x, X2_205, epsilon = 1e-9);
        assert_eq!((pair.mover1.y, pair.mover2.y), (360.0, 360.0));
        assert_eq!((pair.mover1.gamma, pair.mover2.gamma), (0.0, 0.0));
        assert_eq!((pair.mover1.z, pair.mover2.z), (1.0, 1.0));

        let pair = inverse_kinematics(&pose(480.0, 360.0, 205.0, 0.0, 0.0, 90.0), &g).unwrap();
        assert_abs_diff_eq!(pair.mover1.x, 480.0, epsilon = 1e-9);
        assert_abs_diff_eq!(pair.mover1.y, 360.0 - (X2_205 - 480.0), epsilon = 1e-9);
        assert_abs_diff_eq!(pair.mover2.y, 587.123_326_435_993_3, epsilon = 1e-9);
        assert_eq!(pair.mover1.gamma, 90.0);

        let pair = inverse_kinematics(&pose(480.0, 360.0, 205.0, 14.0, 0.0, 0.0), &g).unwrap();
        assert_abs_diff_eq!(pair.mover1.gamma, -117.647_058_823_529_4, epsilon = 1e-9);
        assert_eq!(pair.mover2.gamma, 0.0);

        let pair = inverse_kinematics(&pose(480.0, 360.0, 205.0, 0.0, 0.0, 7.5), &g).unwrap();
        assert_eq!((pair.mover1.gamma, pair.mover2.gamma), (7.5, 7.5));
    }

    #[test]
    fn fk_examples() {
        let g = default_geometry();
        let m = |x: f64| MoverState::new(x, 360.0, 1.0, 0.0).unwrap();
        let pair = MoverPair {
            mover1: m(X1_205),
            mover2: m(X2_205),
        };
        let p = forward_kinematics(&pair, &g).unwrap();
        assert_abs_diff_eq!(p.x, 480.0, epsilon = 1e-9);
        assert_abs_diff_eq!(p.y, 360.0, epsilon = 1e-9);
        assert_abs_diff_eq!(p.z, 205.0, epsilon = 1e-9);
        assert_eq!((p.alpha, p.beta, p.gamma), (0.0, 0.0, 0.0));

        let too_close = MoverPair {
            mover1: m(400.0),
            mover2: m(450.0),
        };
        assert!(matches!(
            forward_kinematics(&too_close, &g),
            Err(KinematicsError::DistanceOutOfRange { .. })
        ));
    }

    #[test]
    fn fk_unwraps_multi_turn_yaw() {
        let g = default_geometry();
        let p = pose(480.0, 360.0, 240.0, 5.0, -3.0, 700.0);
        let back = forward_kinematics(&inverse_kinematics(&p, &g).unwrap(), &g).unwrap();
        assert_abs_diff_eq!(back.gamma, 700.0, epsilon = 1e-9);
        assert_abs_diff_eq!(back.alpha, 5.0, epsilon = 1e-9);
        let near = forward_kinematics_near(&inverse_kinematics(&p, &g).unwrap(), &g, 0.0).unwrap();
        assert_abs_diff_eq!(near.gamma, -20.0, epsilon = 1e-9);
    }

    #[test]
    fn workspace_examples() {
        let (g, l, grid) = (default_geometry(), WorkspaceLimits::default(), TileGrid::default());
        assert!(check_workspace(&pose(480.0, 360.0, 205.0, 0.0, 0.0, 0.0), &l, &grid, &g).valid());

        let r = check_workspace(&pose(480.0, 360.0, 300.0, 0.0, 0.0, 0.0), &l, &grid, &g);
        assert!(r.has(Quantity::Pose(Axis::Z)));
        assert!(r.has(Quantity::ReachableZ));

        let r = check_workspace(&pose(480.0, 360.0, 240.0, 20.0, 0.0, 0.0), &l, &grid, &g);
        assert!(r.has(Quantity::Pose(Axis::Alpha)));
        // 20 deg of tilt also needs a mover yaw far beyond the local window
        assert!(r.has(Quantity::MoverGamma(1)));
    }

    #[test]
    fn workspace_flags_movers_off_the_tiles() {
        let (g, l, grid) = (default_geometry(), WorkspaceLimits::default(), TileGrid::default());
        let r = check_workspace(&pose(200.0, 360.0, 205.0, 0.0, 0.0, 0.0), &l, &grid, &g);
        assert!(r.has(Quantity::MoverX(1)));
        assert!(!r.has(Quantity::MoverX(2)));
        let r = check_workspace(&pose(480.0, 50.0, 205.0, 0.0, 0.0, 0.0), &l, &grid, &g);
        assert!(r.has(Quantity::MoverY(1)) && r.has(Quantity::MoverY(2)));
    }

    #[test]
    fn anchored_pose_allows_full_tilt() {
        let (g, l, grid) = (default_geometry(), WorkspaceLimits::default(), TileGrid::default());
        let p = anchored_pose((360.0, 120.0), (600.0, 360.0), &g).unwrap();
        assert_abs_diff_eq!(p.z, 263.490_104_321_840_94, epsilon = 1e-9);
        assert_abs_diff_eq!(p.gamma, 45.0, epsilon = 1e-12);
        assert!(check_workspace(&p, &l, &grid, &g).valid());
        assert!(check_workspace(&p.with(Axis::Alpha, 14.0), &l, &grid, &g).valid());
        assert!(check_workspace(&p.with(Axis::Beta, -14.0), &l, &grid, &g).valid());
        let r = check_workspace(&p.with(Axis::Alpha, 14.01), &l, &grid, &g);
        assert_eq!(r.violations.len(), 1);
        assert!(r.has(Quantity::Pose(Axis::Alpha)));
    }

    #[test]
    fn reachable_interval_matches_distance_limits() {
        let g = default_geometry();
        let (lo, hi) = reachable_z_interval(&g).unwrap();
        assert_abs_diff_eq!(lo, 205.0, epsilon = 1e-9);
        assert_abs_diff_eq!(hi, 280.0, epsilon = 1e-9);
        assert_abs_diff_eq!(z_ceiling(&g), 284.8, epsilon = 1e-12);
    }
}
