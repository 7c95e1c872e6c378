//! Mover tilt-axis control simulation and platform statics.
//!
//! One mover rotational axis is modelled as a rigid inertia with viscous
//! damping, driven by an ideal-form PIDT1 controller and loaded by a
//! constant disturbance torque from the payload. Angles are in degrees,
//! torques in N·mm.

use thiserror::Error;

use crate::kinematics::{mover_distance, KinematicsError};
use crate::types::{PlatformGeometry, Pose6D, Wrench, GRAVITY};

/// Angle magnitude treated as numerical blow-up, deg.
pub const BLOWUP_ANGLE: f64 = 1e6;

/// Default half-length of the platform top along its x axis, mm.
pub const PLATFORM_HALF_LENGTH: f64 = 100.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid parameter {name} = {value}: {rule}")]
    InvalidParam { name: &'static str, value: f64, rule: &'static str },
    #[error("trace of {len} s is shorter than the {window} s window")]
    TraceTooShort { len: f64, window: f64 },
    #[error(transparent)]
    Kinematics(#[from] KinematicsError),
}

fn require(name: &'static str, value: f64, ok: bool, rule: &'static str) -> Result<(), SimError> {
    if ok && value.is_finite() {
        Ok(())
    } else {
        Err(SimError::InvalidParam { name, value, rule })
    }
}

/// Controller gains of one mover axis. `windup_torque` bounds the integral
/// contribution `|Kp·∫e/Tn|`; infinite means unclamped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PidParams {
    pub kp: f64,
    /// Integral time, s.
    pub tn: f64,
    /// Derivative time, s.
    pub tv: f64,
    /// Derivative filter time constant, s.
    pub t1: f64,
    pub windup_torque: f64,
}

impl PidParams {
    pub const fn new(kp: f64, tn: f64, tv: f64, t1: f64) -> Self {
        Self { kp, tn, tv, t1, windup_torque: f64::INFINITY }
    }

    /// Vendor default parameters.
    pub const SET0: PidParams = PidParams::new(35.0, 0.03, 0.015, 0.001);
    /// Tuned for the platform without payload.
    pub const SET1: PidParams = PidParams::new(25.0, 0.12, 0.04, 0.015);
    /// Tuned for the platform with payload.
    pub const SET2: PidParams = PidParams::new(22.0, 0.12, 0.06, 0.01);

    pub fn preset(index: u8) -> Option<PidParams> {
        match index {
            0 => Some(Self::SET0),
            1 => Some(Self::SET1),
            2 => Some(Self::SET2),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        require("kp", self.kp, self.kp > 0.0, "must be positive")?;
        require("tn", self.tn, self.tn > 0.0, "must be positive")?;
        require("tv", self.tv, self.tv > 0.0, "must be positive")?;
        require("t1", self.t1, self.t1 > 0.0, "must be positive")?;
        if !(self.windup_torque >= 0.0) {
            return Err(SimError::InvalidParam {
                name: "windup_torque",
                value: self.windup_torque,
                rule: "must be >= 0",
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PidState {
    /// ∫e dt, deg·s.
    pub integral: f64,
    /// Filtered error derivative, deg/s.
    pub derivative: f64,
    pub prev_error: Option<f64>,
}

/// One controller update. The raw derivative is zero on the first step.
pub fn pid_step(state: PidState, params: &PidParams, error: f64, dt: f64) -> (f64, PidState) {
    debug_assert!(dt > 0.0);
    let bound = params.windup_torque * params.tn / params.kp;
    let integral = (state.integral + error * dt).clamp(-bound, bound);
    let raw = state.prev_error.map_or(0.0, |prev| (error - prev) / dt);
    let derivative = state.derivative + dt / (params.t1 + dt) * (raw - state.derivative);
    let u = params.kp * (error + integral / params.tn + params.tv * derivative);
    (u, PidState { integral, derivative, prev_error: Some(error) })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantParams {
    /// kg·mm²
    pub inertia: f64,
    /// N·mm·s/deg
    pub damping: f64,
    /// Constant torque on top of the payload torque, N·mm.
    pub disturbance_torque: f64,
    /// Integration step, s.
    pub dt: f64,
    /// Lever arm of a centered payload about the tilt axis, mm.
    pub load_arm: f64,
    /// Anti-windup bound as a multiple of the static disturbance.
    pub windup_factor: f64,
}

impl Default for PlantParams {
    fn default() -> Self {
        Self {
            inertia: 3000.0,
            damping: 0.01,
            disturbance_torque: 0.0,
            dt: 1e-3,
            load_arm: 2.0,
            windup_factor: 10.0,
        }
    }
}

impl PlantParams {
    pub fn validate(&self) -> Result<(), SimError> {
        require("inertia", self.inertia, self.inertia > 0.0, "must be positive")?;
        require("damping", self.damping, self.damping >= 0.0, "must be >= 0")?;
        require("disturbance_torque", self.disturbance_torque, true, "must be finite")?;
        require("dt", self.dt, self.dt > 0.0, "must be positive")?;
        require("load_arm", self.load_arm, true, "must be finite")?;
        require("windup_factor", self.windup_factor, self.windup_factor >= 0.0, "must be >= 0")
    }

    /// Inertia in N·mm·s²/deg.
    fn inertia_per_degree(&self) -> f64 {
        self.inertia * std::f64::consts::PI / 180.0 / 1000.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoadCase {
    /// kg
    pub magbot_mass: f64,
    /// kg
    pub payload_mass: f64,
    /// Payload position on the platform top, mm.
    pub payload_x: f64,
    pub payload_y: f64,
}

impl Default for LoadCase {
    fn default() -> Self {
        Self { magbot_mass: 1.09, payload_mass: 0.0, payload_x: 0.0, payload_y: 0.0 }
    }
}

impl LoadCase {
    pub fn centered(payload_mass: f64) -> Self {
        Self { payload_mass, ..Self::default() }
    }

    pub fn validate(&self, half_length: f64) -> Result<(), SimError> {
        require("magbot_mass", self.magbot_mass, self.magbot_mass >= 0.0, "must be >= 0")?;
        require("payload_mass", self.payload_mass, self.payload_mass >= 0.0, "must be >= 0")?;
        require(
            "payload_x",
            self.payload_x,
            self.payload_x.abs() <= half_length,
            "must lie on the platform",
        )?;
        require("payload_y", self.payload_y, true, "must be finite")
    }

    /// Static torque the payload puts on the tilt axis, N·mm.
    pub fn disturbance(&self, plant: &PlantParams) -> f64 {
        plant.disturbance_torque + GRAVITY * self.payload_mass * (plant.load_arm + self.payload_y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimSample {
    pub t: f64,
    /// deg
    pub angle: f64,
    /// N·mm
    pub torque: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimTrace {
    pub dt: f64,
    pub samples: Vec<SimSample>,
    /// Time at which the angle left ±[`BLOWUP_ANGLE`]; the trace stops there.
    pub diverged_at: Option<f64>,
}

impl SimTrace {
    pub fn duration(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.t)
    }

    pub fn stable(&self) -> bool {
        self.diverged_at.is_none()
    }

    /// Peak-to-peak angle over samples with `t0 <= t < t1`.
    pub fn peak_to_peak(&self, t0: f64, t1: f64) -> f64 {
        let (lo, hi) = self
            .samples
            .iter()
            .filter(|s| s.t >= t0 && s.t < t1)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| (lo.min(s.angle), hi.max(s.angle)));
        if hi >= lo { hi - lo } else { 0.0 }
    }
}

/// Closed-loop response of the tilt axis held at zero under the load's
/// static torque, integrated with semi-implicit Euler.
pub fn simulate_levitation(
    pid: &PidParams,
    plant: &PlantParams,
    load: &LoadCase,
    duration: f64,
) -> Result<SimTrace, SimError> {
    pid.validate()?;
    plant.validate()?;
    load.validate(f64::INFINITY)?;
    require("duration", duration, duration > 0.0, "must be positive")?;

    let dist = load.disturbance(plant);
    let pid = PidParams {
        windup_torque: pid.windup_torque.min(plant.windup_factor * dist.abs()),
        ..*pid
    };
    let inertia = plant.inertia_per_degree();
    let dt = plant.dt;
    let steps = (duration / dt).round().max(1.0) as usize;

    let mut trace = SimTrace { dt, samples: Vec::with_capacity(steps), diverged_at: None };
    let (mut angle, mut rate) = (0.0f64, 0.0f64);
    let mut state = PidState::default();
    for i in 1..=steps {
        let (u, next) = pid_step(state, &pid, -angle, dt);
        state = next;
        rate += dt * (u - plant.damping * rate + dist) / inertia;
        angle += dt * rate;
        let t = i as f64 * dt;
        if !(angle.abs() <= BLOWUP_ANGLE) {
            trace.diverged_at = Some(t);
            break;
        }
        trace.samples.push(SimSample { t, angle, torque: u });
    }
    Ok(trace)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscillationMetric {
    /// Peak-to-peak angle over the trailing window, deg.
    pub peak_to_peak: f64,
    /// Mean ratio of successive half-cycle peak magnitudes; absent with
    /// fewer than two complete half-cycles.
    pub decay_ratio: Option<f64>,
    /// Period from mean-crossing intervals; absent with fewer than two
    /// crossings.
    pub dominant_period: Option<f64>,
}

/// Oscillation summary of the last `window` seconds of `trace`. Crossings
/// and peaks are taken about the window mean.
pub fn oscillation_metric(trace: &SimTrace, window: f64) -> Result<OscillationMetric, SimError> {
    let len = trace.samples.len() as f64 * trace.dt;
    if !(window > 0.0) || len + 1e-9 < window {
        return Err(SimError::TraceTooShort { len, window });
    }
    let count = ((window / trace.dt).round() as usize).clamp(1, trace.samples.len());
    let tail = &trace.samples[trace.samples.len() - count..];
    let (lo, hi) = tail
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| (lo.min(s.angle), hi.max(s.angle)));
    let mean = tail.iter().map(|s| s.angle).sum::<f64>() / tail.len() as f64;

    let mut crossings = Vec::new();
    let mut half_peaks = Vec::new();
    let mut current_peak = 0.0f64;
    for w in tail.windows(2) {
        let (a, b) = (w[0].angle - mean, w[1].angle - mean);
        current_peak = current_peak.max(a.abs());
        if (a < 0.0 && b >= 0.0) || (a > 0.0 && b <= 0.0) {
            let frac = if a == b { 0.0 } else { a / (a - b) };
            crossings.push(w[0].t + frac * (w[1].t - w[0].t));
            // the stretch before the first crossing may be a partial half-cycle
            if crossings.len() > 1 {
                half_peaks.push(current_peak);
            }
            current_peak = 0.0;
        }
    }

    let dominant_period = (crossings.len() >= 2).then(|| {
        2.0 * (crossings[crossings.len() - 1] - crossings[0]) / (crossings.len() - 1) as f64
    });
    let decay_ratio = (half_peaks.len() >= 2 && half_peaks[0] > 0.0).then(|| {
        let n = (half_peaks.len() - 1) as f64;
        (half_peaks[half_peaks.len() - 1] / half_peaks[0]).powf(1.0 / n)
    });
    Ok(OscillationMetric {
        peak_to_peak: hi - lo,
        decay_ratio,
        dominant_period,
    })
}

/// Tangent of the leg angle against vertical at mover distance `d`.
fn leg_slope(d: f64, geom: &PlatformGeometry) -> f64 {
    let h = d / 2.0 - geom.x_b - geom.x_t;
    h / (geom.k * geom.k - h * h).sqrt()
}

/// Static wrench each mover carries for a resting platform.
///
/// Vertical forces split like a beam on two supports. Each mover's wrench
/// is expressed in its own frame with x pointing toward the platform
/// center, so the horizontal leg reaction is `-F_z·tan(leg)` on both and
/// the roll torques of the two movers carry opposite signs. Forces in N,
/// torques in N·m.
pub fn static_wrenches(
    pose: &Pose6D,
    load: &LoadCase,
    geom: &PlatformGeometry,
) -> Result<(Wrench, Wrench), SimError> {
    let d = mover_distance(pose.z, geom)?;
    let slope = leg_slope(d, geom);
    let (m, mb) = (load.payload_mass, load.magbot_mass);
    let share = load.payload_x / d;
    let fz1 = GRAVITY * (mb / 2.0 + m * (0.5 - share));
    let fz2 = GRAVITY * (mb / 2.0 + m * (0.5 + share));
    let roll = GRAVITY * m * load.payload_y / 2.0 / 1000.0;
    let w1 = Wrench { fx: -fz1 * slope, fy: 0.0, fz: fz1, tx: roll, ty: 0.0, tz: 0.0 };
    let w2 = Wrench { fx: -fz2 * slope, fy: 0.0, fz: fz2, tx: -roll, ty: 0.0, tz: 0.0 };
    Ok((w1, w2))
}
