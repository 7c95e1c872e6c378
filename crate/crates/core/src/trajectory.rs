//! Test motions for the platform and their time parameterization.
//!
//! Every motion is first described geometrically as a pose path over
//! `s ∈ [0, 1]`, checked against the workspace, then timed with a
//! trapezoidal law on the longest mover path. If the sampled mover motion
//! still breaks a dynamic limit, the whole segment is stretched uniformly
//! until it does not.

use std::f64::consts::TAU;

use thiserror::Error;

use crate::kinematics::{
    check_movers, check_workspace, inverse_kinematics, KinematicsError, MoverPair, Quantity,
    Violation, WorkspaceReport, BOUND_EPS,
};
use crate::types::{Axis, PlatformGeometry, Pose6D, TileGrid, WorkspaceLimits};

/// Relative slack of the dynamic limit checks in [`validate_trajectory`].
/// Covers the quantization of trajectories that went through CSV.
pub const LIMIT_RTOL: f64 = 1e-3;

/// Tolerance on stored mover commands versus inverse kinematics of the
/// stored pose, in mm / deg.
pub const MOVER_MATCH_TOL: f64 = 1e-3;

const PROBES: usize = 2000;
const MAX_SCALING_STEPS: usize = 100;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrajectoryError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("infeasible motion at path parameter {s:.4}: {violation}")]
    Infeasible { violation: Violation, s: f64 },
    #[error("{axis} amplitude {amplitude} deg exceeds the workspace limit {limit} deg")]
    AmplitudeOutOfRange { axis: Axis, amplitude: f64, limit: f64 },
    #[error("motion needs movers at full-rotation anchors: {violation}")]
    AnchorRequired { violation: Violation },
    #[error("uniform time scaling did not converge")]
    NotConverged,
    #[error(transparent)]
    Kinematics(#[from] KinematicsError),
}

/// Dynamic envelope of one mover.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionLimits {
    /// mm/s
    pub v_max: f64,
    /// mm/s²
    pub a_max: f64,
    /// Mover yaw rate, deg/s.
    pub w_max: f64,
}

impl Default for MotionLimits {
    /// Full dynamics of the maglev system.
    fn default() -> Self {
        Self {
            v_max: 2000.0,
            a_max: 10000.0,
            w_max: 360.0,
        }
    }
}

impl MotionLimits {
    /// Set speeds used for the positioning accuracy runs.
    pub fn experiment() -> Self {
        Self {
            v_max: 500.0,
            a_max: 10000.0,
            w_max: 20.0,
        }
    }

    /// Yaw acceleration bound used for timing pure-rotation segments: the
    /// translational ramp time applied to the yaw rate.
    fn yaw_accel(&self) -> f64 {
        self.w_max * self.a_max / self.v_max
    }

    pub fn validate(&self) -> Result<(), TrajectoryError> {
        for (name, v) in [("v_max", self.v_max), ("a_max", self.a_max), ("w_max", self.w_max)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(TrajectoryError::InvalidInput(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// Rest-to-rest trapezoidal (or triangular) velocity profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrapezoidProfile {
    pub distance: f64,
    pub accel: f64,
    pub v_peak: f64,
    pub t_acc: f64,
    pub t_cruise: f64,
    pub duration: f64,
}

impl TrapezoidProfile {
    pub fn new(distance: f64, v_max: f64, a_max: f64) -> Result<Self, TrajectoryError> {
        if !(distance.is_finite() && distance >= 0.0) {
            return Err(TrajectoryError::InvalidInput(format!(
                "profile distance must be >= 0, got {distance}"
            )));
        }
        if !(v_max > 0.0 && a_max > 0.0) {
            return Err(TrajectoryError::InvalidInput("profile limits must be positive".into()));
        }
        let (t_acc, v_peak, t_cruise) = if distance * a_max >= v_max * v_max {
            let t_acc = v_max / a_max;
            (t_acc, v_max, (distance - v_max * t_acc) / v_max)
        } else {
            let t_acc = (distance / a_max).sqrt();
            (t_acc, a_max * t_acc, 0.0)
        };
        Ok(Self {
            distance,
            accel: a_max,
            v_peak,
            t_acc,
            t_cruise,
            duration: 2.0 * t_acc + t_cruise,
        })
    }

    pub fn position(&self, t: f64) -> f64 {
        let t = t.clamp(0.0, self.duration);
        let ramp = 0.5 * self.accel * self.t_acc * self.t_acc;
        if t < self.t_acc {
            0.5 * self.accel * t * t
        } else if t < self.t_acc + self.t_cruise {
            ramp + self.v_peak * (t - self.t_acc)
        } else {
            let rem = self.duration - t;
            self.distance - 0.5 * self.accel * rem * rem
        }
    }

    pub fn velocity(&self, t: f64) -> f64 {
        if t <= 0.0 || t >= self.duration {
            0.0
        } else if t < self.t_acc {
            self.accel * t
        } else if t < self.t_acc + self.t_cruise {
            self.v_peak
        } else {
            self.accel * (self.duration - t)
        }
    }
}

pub fn trapezoid_profile(distance: f64, limits: &MotionLimits) -> Result<TrapezoidProfile, TrajectoryError> {
    TrapezoidProfile::new(distance, limits.v_max, limits.a_max)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySample {
    pub t: f64,
    pub pose: Pose6D,
    pub movers: MoverPair,
}

/// Uniformly sampled platform motion with the mover commands realizing it.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub dt: f64,
    pub samples: Vec<TrajectorySample>,
}

impl Trajectory {
    pub fn duration(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.t)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn first_pose(&self) -> Option<Pose6D> {
        self.samples.first().map(|s| s.pose)
    }

    pub fn last_pose(&self) -> Option<Pose6D> {
        self.samples.last().map(|s| s.pose)
    }

    /// Same geometry with every time step stretched by `factor`.
    pub fn time_scaled(&self, factor: f64) -> Trajectory {
        Trajectory {
            dt: self.dt * factor,
            samples: self
                .samples
                .iter()
                .map(|s| TrajectorySample { t: s.t * factor, ..*s })
                .collect(),
        }
    }

    pub(crate) fn stationary(pose: Pose6D, ctx: &MotionContext) -> Result<Trajectory, TrajectoryError> {
        let report = check_workspace(&pose, &ctx.limits, &ctx.grid, &ctx.geom);
        if let Some(v) = report.violations.first() {
            return Err(classify(*v, 0.0));
        }
        Ok(Trajectory {
            dt: ctx.dt,
            samples: vec![TrajectorySample {
                t: 0.0,
                pose,
                movers: inverse_kinematics(&pose, &ctx.geom)?,
            }],
        })
    }

    /// Appends a segment that starts where this trajectory ends.
    fn append(&mut self, segment: Vec<(Pose6D, MoverPair)>) {
        let skip = usize::from(!self.samples.is_empty());
        let start = self.samples.len() - skip;
        for (i, (pose, movers)) in segment.into_iter().enumerate().skip(skip) {
            self.samples.push(TrajectorySample {
                t: (start + i) as f64 * self.dt,
                pose,
                movers,
            });
        }
    }
}

/// Everything the generators need to know about the machine.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionContext {
    pub geom: PlatformGeometry,
    pub limits: WorkspaceLimits,
    pub grid: TileGrid,
    pub motion: MotionLimits,
    /// Sample period, s.
    pub dt: f64,
}

impl Default for MotionContext {
    fn default() -> Self {
        Self {
            geom: PlatformGeometry::default(),
            limits: WorkspaceLimits::default(),
            grid: TileGrid::default(),
            motion: MotionLimits::default(),
            dt: 1e-3,
        }
    }
}

/// Peak finite-difference mover dynamics of a sampled motion.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MotionPeaks {
    pub speed: f64,
    pub accel: f64,
    pub yaw_rate: f64,
}

fn mover_xy(pair: &MoverPair, i: usize) -> (f64, f64, f64) {
    let m = if i == 0 { pair.mover1 } else { pair.mover2 };
    (m.x, m.y, m.gamma)
}

/// Finite-difference velocity of both movers between consecutive samples;
/// entry `k` covers samples `k` and `k + 1`.
fn mover_velocities(movers: &[MoverPair], times: &[f64]) -> Vec<[(f64, f64, f64); 2]> {
    movers
        .windows(2)
        .zip(times.windows(2))
        .map(|(w, t)| {
            let h = t[1] - t[0];
            std::array::from_fn(|i| {
                let (x0, y0, g0) = mover_xy(&w[0], i);
                let (x1, y1, g1) = mover_xy(&w[1], i);
                ((x1 - x0) / h, (y1 - y0) / h, (g1 - g0) / h)
            })
        })
        .collect()
}

pub fn motion_peaks(traj: &Trajectory) -> MotionPeaks {
    let movers: Vec<_> = traj.samples.iter().map(|s| s.movers).collect();
    let times: Vec<_> = traj.samples.iter().map(|s| s.t).collect();
    peaks(&movers, &times)
}

fn peaks(movers: &[MoverPair], times: &[f64]) -> MotionPeaks {
    let vel = mover_velocities(movers, times);
    let mut out = MotionPeaks::default();
    for v in &vel {
        for &(vx, vy, w) in v {
            out.speed = out.speed.max(vx.hypot(vy));
            out.yaw_rate = out.yaw_rate.max(w.abs());
        }
    }
    for (k, pair) in vel.windows(2).enumerate() {
        let h = 0.5 * (times[k + 2] - times[k]);
        for i in 0..2 {
            let ax = (pair[1][i].0 - pair[0][i].0) / h;
            let ay = (pair[1][i].1 - pair[0][i].1) / h;
            out.accel = out.accel.max(ax.hypot(ay));
        }
    }
    out
}

fn classify(violation: Violation, s: f64) -> TrajectoryError {
    match violation.quantity {
        Quantity::MoverGamma(_) => TrajectoryError::AnchorRequired { violation },
        _ => TrajectoryError::Infeasible { violation, s },
    }
}

/// Times a geometric path and returns its samples at `ctx.dt`.
fn fit_segment<F>(path: F, ctx: &MotionContext) -> Result<Vec<(Pose6D, MoverPair)>, TrajectoryError>
where
    F: Fn(f64) -> Pose6D,
{
    let mut len_xy = [0.0f64; 2];
    let mut len_yaw = [0.0f64; 2];
    let mut prev: Option<MoverPair> = None;
    for i in 0..=PROBES {
        let s = i as f64 / PROBES as f64;
        let pose = path(s);
        let report = check_workspace(&pose, &ctx.limits, &ctx.grid, &ctx.geom);
        if let Some(v) = report.violations.first() {
            return Err(classify(*v, s));
        }
        let pair = inverse_kinematics(&pose, &ctx.geom)?;
        if let Some(p) = prev {
            for (k, (a, b)) in p.movers().iter().zip(pair.movers()).enumerate() {
                len_xy[k] += (b.x - a.x).hypot(b.y - a.y);
                len_yaw[k] += (b.gamma - a.gamma).abs();
            }
        }
        prev = Some(pair);
    }

    let m = &ctx.motion;
    let by_xy = TrapezoidProfile::new(len_xy[0].max(len_xy[1]), m.v_max, m.a_max)?;
    let by_yaw = TrapezoidProfile::new(len_yaw[0].max(len_yaw[1]), m.w_max, m.yaw_accel())?;
    let profile = if by_yaw.duration > by_xy.duration { by_yaw } else { by_xy };

    let mut scale = 1.0;
    for _ in 0..MAX_SCALING_STEPS {
        let duration = profile.duration * scale;
        // a path without mover motion is a single sample
        let steps = if profile.distance > 0.0 {
            ((duration / ctx.dt) - 1e-9).ceil().max(1.0) as usize
        } else {
            0
        };
        let mut out = Vec::with_capacity(steps + 1);
        let mut times = Vec::with_capacity(steps + 1);
        for i in 0..=steps {
            let t = (i as f64 * ctx.dt).min(duration);
            let s = if profile.distance > 0.0 {
                (profile.position(t / scale) / profile.distance).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let pose = path(s);
            out.push((pose, inverse_kinematics(&pose, &ctx.geom)?));
            times.push(i as f64 * ctx.dt);
        }
        let movers: Vec<_> = out.iter().map(|(_, m)| *m).collect();
        let pk = peaks(&movers, &times);
        let ratio = (pk.speed / m.v_max)
            .max((pk.accel / m.a_max).sqrt())
            .max(pk.yaw_rate / m.w_max);
        if ratio <= 1.0 + BOUND_EPS {
            return Ok(out);
        }
        scale *= ratio * (1.0 + 1e-6);
    }
    Err(TrajectoryError::NotConverged)
}

/// Rejects a generated trajectory that fails its own validation. Guards the
/// gaps between the geometric probes.
fn checked(traj: Trajectory, ctx: &MotionContext) -> Result<Trajectory, TrajectoryError> {
    let report = validate_trajectory(&traj, ctx);
    match report.violations.first() {
        None => Ok(traj),
        Some(v) => {
            let s = v.sample.map_or(0.0, |i| i as f64 / traj.len().max(1) as f64);
            Err(classify(*v, s))
        }
    }
}

fn check_context(ctx: &MotionContext) -> Result<(), TrajectoryError> {
    ctx.motion.validate()?;
    if !(ctx.dt.is_finite() && ctx.dt > 0.0) {
        return Err(TrajectoryError::InvalidInput(format!("dt must be positive, got {}", ctx.dt)));
    }
    Ok(())
}

/// Straight rest-to-rest move in pose space.
pub fn linear_move(from: Pose6D, to: Pose6D, ctx: &MotionContext) -> Result<Trajectory, TrajectoryError> {
    check_context(ctx)?;
    let (a, b) = (from.to_array(), to.to_array());
    let segment = fit_segment(
        |s| Pose6D::from_array(std::array::from_fn(|i| a[i] + (b[i] - a[i]) * s)),
        ctx,
    )?;
    let mut traj = Trajectory { dt: ctx.dt, samples: Vec::new() };
    traj.append(segment);
    checked(traj, ctx)
}

/// Range an axis can sweep at `held`: the configured range for z and the
/// rotations, the tile area for x and y.
pub fn axis_range(axis: Axis, held: &Pose6D, ctx: &MotionContext) -> Result<(f64, f64), TrajectoryError> {
    if let Some(range) = ctx.limits.range(axis) {
        return Ok(range);
    }
    let half = crate::kinematics::mover_distance(held.z, &ctx.geom)? / 2.0;
    let (sin_g, cos_g) = held.gamma.to_radians().sin_cos();
    let area = ctx.grid.bounds().shrink(ctx.limits.mover_half_extent);
    Ok(match axis {
        Axis::X => (area.x_min + (half * cos_g).abs(), area.x_max - (half * cos_g).abs()),
        _ => (area.y_min + (half * sin_g).abs(), area.y_max - (half * sin_g).abs()),
    })
}

/// Moves one axis `reps` times from its minimum to its maximum and back,
/// holding the others at `held`. The motion starts at the minimum.
/// `range` overrides the default axis range.
pub fn sweep_axis(
    axis: Axis,
    reps: u32,
    held: Pose6D,
    range: Option<(f64, f64)>,
    ctx: &MotionContext,
) -> Result<Trajectory, TrajectoryError> {
    check_context(ctx)?;
    held.validate().map_err(KinematicsError::from)?;
    if reps == 0 {
        return Trajectory::stationary(held, ctx);
    }
    let (lo, hi) = match range {
        Some(r) => r,
        None => axis_range(axis, &held, ctx)?,
    };
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(TrajectoryError::InvalidInput(format!(
            "empty {axis} range [{lo}, {hi}] at the held pose"
        )));
    }
    let up = fit_segment(|s| held.with(axis, lo + (hi - lo) * s), ctx)?;
    let down: Vec<_> = up.iter().rev().copied().collect();
    let mut traj = Trajectory { dt: ctx.dt, samples: Vec::new() };
    for _ in 0..reps {
        traj.append(up.clone());
        traj.append(down.clone());
    }
    checked(traj, ctx)
}

/// Circle of `radius` in x/y around `center` with a sine of amplitude
/// `z_amp` in z, both at the same phase.
pub fn circle_sine(
    center: Pose6D,
    radius: f64,
    z_amp: f64,
    cycles: u32,
    ctx: &MotionContext,
) -> Result<Trajectory, TrajectoryError> {
    check_context(ctx)?;
    if !(radius >= 0.0 && radius.is_finite() && z_amp.is_finite()) {
        return Err(TrajectoryError::InvalidInput(format!(
            "radius must be >= 0 and z_amp finite, got {radius} / {z_amp}"
        )));
    }
    let turns = cycles as f64;
    let segment = fit_segment(
        |s| {
            let phase = TAU * turns * s;
            Pose6D {
                x: center.x + radius * phase.cos(),
                y: center.y + radius * phase.sin(),
                z: center.z + z_amp * phase.sin(),
                alpha: 0.0,
                beta: 0.0,
                ..center
            }
        },
        ctx,
    )?;
    let mut traj = Trajectory { dt: ctx.dt, samples: Vec::new() };
    traj.append(segment);
    checked(traj, ctx)
}

/// Helix parameters: radius grows linearly with turn angle while z moves
/// linearly from `z0` to `z1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HelixSpec {
    pub r0: f64,
    /// Radius increase per turn, mm.
    pub r_growth: f64,
    pub z0: f64,
    pub z1: f64,
    pub turns: f64,
}

pub fn extending_helix(
    center: Pose6D,
    spec: HelixSpec,
    ctx: &MotionContext,
) -> Result<Trajectory, TrajectoryError> {
    check_context(ctx)?;
    if !(spec.turns >= 0.0 && spec.r0 >= 0.0 && spec.r0 + spec.r_growth * spec.turns >= 0.0) {
        return Err(TrajectoryError::InvalidInput(format!("bad helix {spec:?}")));
    }
    let segment = fit_segment(
        |s| {
            let phase = TAU * spec.turns * s;
            let r = spec.r0 + spec.r_growth * spec.turns * s;
            Pose6D {
                x: center.x + r * phase.cos(),
                y: center.y + r * phase.sin(),
                z: spec.z0 + (spec.z1 - spec.z0) * s,
                ..center
            }
        },
        ctx,
    )?;
    let mut traj = Trajectory { dt: ctx.dt, samples: Vec::new() };
    traj.append(segment);
    checked(traj, ctx)
}

/// Cosine in alpha plus sine in beta around `center`. Both movers turn far
/// beyond the local yaw window, so `center` must place them on anchors.
pub fn cos_alpha_sin_beta(
    center: Pose6D,
    amp_a: f64,
    amp_b: f64,
    cycles: u32,
    ctx: &MotionContext,
) -> Result<Trajectory, TrajectoryError> {
    check_context(ctx)?;
    for (axis, amp, (lo, hi)) in [
        (Axis::Alpha, amp_a, ctx.limits.alpha_range),
        (Axis::Beta, amp_b, ctx.limits.beta_range),
    ] {
        let limit = hi.min(-lo);
        if !(amp.is_finite() && amp.abs() <= limit + BOUND_EPS) {
            return Err(TrajectoryError::AmplitudeOutOfRange { axis, amplitude: amp, limit });
        }
    }
    let turns = cycles as f64;
    let segment = fit_segment(
        |s| {
            let phase = TAU * turns * s;
            Pose6D {
                alpha: center.alpha + amp_a * phase.cos(),
                beta: center.beta + amp_b * phase.sin(),
                ..center
            }
        },
        ctx,
    )?;
    let mut traj = Trajectory { dt: ctx.dt, samples: Vec::new() };
    traj.append(segment);
    checked(traj, ctx)
}

/// Checks every sample against the workspace and the stored mover commands
/// against the pose, then the finite-difference mover speed, acceleration
/// and yaw rate against `ctx.motion`.
pub fn validate_trajectory(traj: &Trajectory, ctx: &MotionContext) -> WorkspaceReport {
    let mut report = WorkspaceReport::default();
    for (i, sample) in traj.samples.iter().enumerate() {
        report.extend_at(check_workspace(&sample.pose, &ctx.limits, &ctx.grid, &ctx.geom), i);
        let mut stored = WorkspaceReport::default();
        match inverse_kinematics(&sample.pose, &ctx.geom) {
            Ok(expected) => {
                for (k, (want, got)) in expected.movers().iter().zip(sample.movers.movers()).enumerate() {
                    let err = (want.x - got.x)
                        .abs()
                        .max((want.y - got.y).abs())
                        .max((want.gamma - got.gamma).abs());
                    if !(err <= MOVER_MATCH_TOL) {
                        stored.push(Quantity::MoverMismatch(k as u8 + 1), err, MOVER_MATCH_TOL);
                    }
                }
            }
            // the pose itself is already flagged; still bound the commands
            Err(_) => check_movers(&sample.movers, &ctx.limits, &ctx.grid, &ctx.geom, &mut stored),
        }
        report.extend_at(stored, i);
    }

    let times: Vec<f64> = traj.samples.iter().map(|s| s.t).collect();
    for (k, w) in times.windows(2).enumerate() {
        let h = w[1] - w[0];
        if !(h > 0.0) || (h - traj.dt).abs() > 1e-6 * traj.dt.max(1.0) {
            let mut r = WorkspaceReport::default();
            r.push(Quantity::SampleTiming, h, traj.dt);
            report.extend_at(r, k + 1);
        }
    }
    if report.has(Quantity::SampleTiming) {
        return report;
    }

    let m = &ctx.motion;
    let over = |value: f64, bound: f64| value > bound * (1.0 + LIMIT_RTOL);
    let movers: Vec<_> = traj.samples.iter().map(|s| s.movers).collect();
    let vel = mover_velocities(&movers, &times);
    for (k, v) in vel.iter().enumerate() {
        let mut r = WorkspaceReport::default();
        for (i, &(vx, vy, w)) in v.iter().enumerate() {
            let id = i as u8 + 1;
            if over(vx.hypot(vy), m.v_max) {
                r.push(Quantity::MoverSpeed(id), vx.hypot(vy), m.v_max);
            }
            if over(w.abs(), m.w_max) {
                r.push(Quantity::MoverYawRate(id), w.abs(), m.w_max);
            }
        }
        report.extend_at(r, k + 1);
    }
    for (k, pair) in vel.windows(2).enumerate() {
        let h = 0.5 * (times[k + 2] - times[k]);
        let mut r = WorkspaceReport::default();
        for i in 0..2 {
            let a = ((pair[1][i].0 - pair[0][i].0) / h).hypot((pair[1][i].1 - pair[0][i].1) / h);
            if over(a, m.a_max) {
                r.push(Quantity::MoverAccel(i as u8 + 1), a, m.a_max);
            }
        }
        report.extend_at(r, k + 1);
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::{anchored_pose, forward_kinematics};
    use approx::assert_abs_diff_eq;

    fn home() -> Pose6D {
        Pose6D::new(480.0, 360.0, 242.5, 0.0, 0.0, 0.0).unwrap()
    }

    #[test]
    fn trapezoid_examples() {
        let lim = MotionLimits::experiment();
        let p = trapezoid_profile(0.0, &lim).unwrap();
        assert_eq!(p.duration, 0.0);

        let p = trapezoid_profile(200.0, &lim).unwrap();
        assert_abs_diff_eq!(p.duration, 0.45, epsilon = 1e-12);
        assert_abs_diff_eq!(p.t_acc, 0.05, epsilon = 1e-12);
        assert_abs_diff_eq!(p.t_cruise, 0.35, epsilon = 1e-12);
        assert_abs_diff_eq!(p.position(p.duration), 200.0, epsilon = 1e-9);

        let p = trapezoid_profile(20.0, &lim).unwrap();
        assert_eq!(p.t_cruise, 0.0);
        assert_abs_diff_eq!(p.duration, 2.0 * (20.0f64 / 10000.0).sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(p.v_peak, 447.213_595_499_958, epsilon = 1e-9);

        assert!(trapezoid_profile(-1.0, &lim).is_err());
    }

    #[test]
    fn trapezoid_respects_limits_everywhere() {
        let lim = MotionLimits::experiment();
        for d in [0.5, 12.5, 25.0, 80.0, 1000.0] {
            let p = trapezoid_profile(d, &lim).unwrap();
            let n = 2000;
            let mut prev_v = 0.0;
            for i in 0..=n {
                let t = p.duration * i as f64 / n as f64;
                let v = p.velocity(t);
                assert!(v <= lim.v_max + 1e-9);
                if i > 0 {
                    let a = (v - prev_v).abs() / (p.duration / n as f64);
                    assert!(a <= lim.a_max * (1.0 + 1e-6), "accel {a} for d={d}");
                }
                prev_v = v;
            }
            assert_eq!(p.position(0.0), 0.0);
            assert_abs_diff_eq!(p.position(p.duration), d, epsilon = 1e-9);
        }
    }

    #[test]
    fn z_sweep_spans_table_range() {
        let ctx = MotionContext::default();
        let traj = sweep_axis(Axis::Z, 2, home(), None, &ctx).unwrap();
        let zs: Vec<f64> = traj.samples.iter().map(|s| s.pose.z).collect();
        assert_abs_diff_eq!(zs.iter().cloned().fold(f64::MAX, f64::min), 205.0, epsilon = 1e-9);
        assert_abs_diff_eq!(zs.iter().cloned().fold(f64::MIN, f64::max), 280.0, epsilon = 1e-9);
        assert!(validate_trajectory(&traj, &ctx).valid());
    }

    #[test]
    fn sweep_with_zero_reps_is_stationary() {
        let traj = sweep_axis(Axis::X, 0, home(), None, &MotionContext::default()).unwrap();
        assert_eq!(traj.len(), 1);
        assert_eq!(traj.samples[0].pose, home());
    }

    #[test]
    fn alpha_sweep_away_from_anchor_fails() {
        let err = sweep_axis(Axis::Alpha, 1, home(), None, &MotionContext::default()).unwrap_err();
        assert!(matches!(err, TrajectoryError::AnchorRequired { .. }), "{err}");
    }

    #[test]
    fn alpha_sweep_at_anchor_pair_works() {
        let ctx = MotionContext {
            motion: MotionLimits::experiment(),
            ..MotionContext::default()
        };
        let center = anchored_pose((360.0, 120.0), (600.0, 360.0), &ctx.geom).unwrap();
        let traj = sweep_axis(Axis::Alpha, 1, center, None, &ctx).unwrap();
        assert!(validate_trajectory(&traj, &ctx).valid());
        let peaks = motion_peaks(&traj);
        assert!(peaks.yaw_rate <= 20.0 * (1.0 + 1e-9));
    }

    #[test]
    fn circle_examples() {
        let ctx = MotionContext::default();
        let still = circle_sine(home(), 0.0, 0.0, 1, &ctx).unwrap();
        assert!(still.samples.iter().all(|s| s.pose == still.samples[0].pose));

        let traj = circle_sine(home(), 100.0, 37.5, 1, &ctx).unwrap();
        let (a, b) = (traj.first_pose().unwrap(), traj.last_pose().unwrap());
        for axis in Axis::ALL {
            assert_abs_diff_eq!(a.get(axis), b.get(axis), epsilon = 1e-9);
        }
        assert!(traj.samples.iter().all(|s| s.pose.z >= 205.0 - 1e-9 && s.pose.z <= 280.0 + 1e-9));
        assert!(validate_trajectory(&traj, &ctx).valid());
    }

    #[test]
    fn circle_leaving_the_tiles_is_rejected() {
        let err = circle_sine(home(), 300.0, 0.0, 1, &MotionContext::default()).unwrap_err();
        assert!(matches!(err, TrajectoryError::Infeasible { .. }));
    }

    #[test]
    fn helix_examples() {
        let ctx = MotionContext::default();
        let spec = HelixSpec { r0: 20.0, r_growth: 30.0, z0: 210.0, z1: 270.0, turns: 3.0 };
        let traj = extending_helix(home(), spec, &ctx).unwrap();
        assert!(validate_trajectory(&traj, &ctx).valid());
        assert!(motion_peaks(&traj).speed <= ctx.motion.v_max * (1.0 + 1e-9));

        let flat = extending_helix(home(), HelixSpec { r_growth: 0.0, ..spec }, &ctx).unwrap();
        for s in &flat.samples {
            let r = (s.pose.x - 480.0).hypot(s.pose.y - 360.0);
            assert_abs_diff_eq!(r, 20.0, epsilon = 1e-9);
        }

        let z_only = extending_helix(home(), HelixSpec { turns: 0.0, ..spec }, &ctx).unwrap();
        assert!(z_only.samples.iter().all(|s| s.pose.x == 500.0 && s.pose.y == 360.0));
        assert_abs_diff_eq!(z_only.last_pose().unwrap().z, 270.0, epsilon = 1e-9);

        let too_wide = HelixSpec { r_growth: 150.0, ..spec };
        assert!(extending_helix(home(), too_wide, &ctx).is_err());
    }

    #[test]
    fn cos_sin_examples() {
        let ctx = MotionContext::default();
        let center = anchored_pose((360.0, 120.0), (600.0, 360.0), &ctx.geom).unwrap();
        let still = cos_alpha_sin_beta(center, 0.0, 0.0, 1, &ctx).unwrap();
        assert!(still.samples.iter().all(|s| s.pose == center));

        let traj = cos_alpha_sin_beta(center, 10.0, 10.0, 1, &ctx).unwrap();
        let max_alpha = traj.samples.iter().map(|s| s.pose.alpha.abs()).fold(0.0, f64::max);
        assert_abs_diff_eq!(max_alpha, 10.0, epsilon = 1e-9);
        for s in &traj.samples {
            assert_abs_diff_eq!(s.pose.alpha.hypot(s.pose.beta), 10.0, epsilon = 1e-9);
        }
        let span = traj
            .samples
            .iter()
            .map(|s| (s.movers.mover1.gamma - s.pose.gamma).abs())
            .fold(0.0, f64::max);
        assert_abs_diff_eq!(span, 84.033_613_445_378_15, epsilon = 1e-9);
        assert!(validate_trajectory(&traj, &ctx).valid());

        assert!(matches!(
            cos_alpha_sin_beta(center, 15.0, 0.0, 1, &ctx),
            Err(TrajectoryError::AmplitudeOutOfRange { .. })
        ));
        assert!(matches!(
            cos_alpha_sin_beta(home(), 10.0, 10.0, 1, &ctx),
            Err(TrajectoryError::AnchorRequired { .. })
        ));
    }

    #[test]
    fn validation_flags_jumps_and_dips() {
        let ctx = MotionContext::default();
        let g = &ctx.geom;
        let a = Pose6D::new(480.0, 360.0, 205.0, 0.0, 0.0, 0.0).unwrap();
        let b = a.with(Axis::Y, 460.0);
        let traj = Trajectory {
            dt: 1e-3,
            samples: vec![
                TrajectorySample { t: 0.0, pose: a, movers: inverse_kinematics(&a, g).unwrap() },
                TrajectorySample { t: 1e-3, pose: b, movers: inverse_kinematics(&b, g).unwrap() },
            ],
        };
        let r = validate_trajectory(&traj, &ctx);
        let v = r.violations.iter().find(|v| v.quantity == Quantity::MoverSpeed(1)).unwrap();
        assert_abs_diff_eq!(v.value, 1e5, epsilon = 1e-6);

        let dip = a.with(Axis::Z, 200.0);
        let traj = Trajectory {
            dt: 1e-3,
            samples: vec![
                TrajectorySample { t: 0.0, pose: dip, movers: inverse_kinematics(&dip, g).unwrap() },
                TrajectorySample { t: 1e-3, pose: dip, movers: inverse_kinematics(&dip, g).unwrap() },
            ],
        };
        let r = validate_trajectory(&traj, &ctx);
        assert!(r.has(Quantity::Pose(Axis::Z)));
        assert!(r.has(Quantity::MoverDistance));
    }

    #[test]
    fn validation_flags_inconsistent_commands_and_timing() {
        let ctx = MotionContext::default();
        let mut traj = circle_sine(home(), 50.0, 0.0, 1, &ctx).unwrap();
        traj.samples[10].movers.mover1.x += 1.0;
        traj.samples[20].t += 5e-4;
        let r = validate_trajectory(&traj, &ctx);
        assert!(r.has(Quantity::MoverMismatch(1)));
        assert!(r.has(Quantity::SampleTiming));
    }

    #[test]
    fn samples_match_forward_kinematics() {
        let ctx = MotionContext::default();
        let traj = circle_sine(home(), 80.0, 20.0, 2, &ctx).unwrap();
        for s in &traj.samples {
            let p = forward_kinematics(&s.movers, &ctx.geom).unwrap();
            for axis in Axis::ALL {
                assert_abs_diff_eq!(p.get(axis), s.pose.get(axis), epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn time_scaling_scales_finite_differences() {
        let traj = circle_sine(home(), 80.0, 20.0, 1, &MotionContext::default()).unwrap();
        let base = motion_peaks(&traj);
        for c in [0.5, 2.0, 3.0] {
            let scaled = motion_peaks(&traj.time_scaled(c));
            assert_abs_diff_eq!(scaled.speed, base.speed / c, epsilon = 1e-6 * base.speed);
            assert_abs_diff_eq!(scaled.accel, base.accel / (c * c), epsilon = 1e-6 * base.accel);
        }
    }
}
