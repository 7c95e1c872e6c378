//! Pick-up and drop-off of the platform at the docking station.
//!
//! The spring-pin coupling is reduced to a transition system whose gated
//! steps only advance while the mover alignment error is within tolerance.

use std::fmt;

use thiserror::Error;

use crate::trajectory::{linear_move, MotionContext, Trajectory, TrajectoryError};
use crate::types::Pose6D;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DockPhase {
    Free,
    Approach,
    Aligned,
    Engaging,
    Locked,
    AtStation,
    Inserting,
    Unlocked,
    Retracting,
}

impl fmt::Display for DockPhase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DockPhase::Free => "FREE",
            DockPhase::Approach => "APPROACH",
            DockPhase::Aligned => "ALIGNED",
            DockPhase::Engaging => "ENGAGING",
            DockPhase::Locked => "LOCKED",
            DockPhase::AtStation => "AT_STATION",
            DockPhase::Inserting => "INSERTING",
            DockPhase::Unlocked => "UNLOCKED",
            DockPhase::Retracting => "RETRACTING",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DockError {
    #[error("{op} is not possible in phase {phase}")]
    WrongPhase { phase: DockPhase, op: &'static str },
    #[error("cannot retract while the pin is engaged")]
    RetractWhileLocked,
    #[error("tolerances must be positive and finite")]
    InvalidTolerance,
}

/// Coupling state. Only the transition functions create non-initial
/// states, so the pin and carry flags always agree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DockState {
    phase: DockPhase,
    pin_engaged: bool,
}

impl DockState {
    /// Mover without the platform.
    pub const fn free() -> Self {
        Self { phase: DockPhase::Free, pin_engaged: false }
    }

    /// Mover carrying the platform.
    pub const fn locked() -> Self {
        Self { phase: DockPhase::Locked, pin_engaged: true }
    }

    pub fn phase(&self) -> DockPhase {
        self.phase
    }

    pub fn pin_engaged(&self) -> bool {
        self.pin_engaged
    }

    pub fn carried(&self) -> bool {
        self.pin_engaged
    }

    /// True when the pin flag is consistent with the phase.
    pub fn consistent(&self) -> bool {
        !self.pin_engaged
            || matches!(self.phase, DockPhase::Locked | DockPhase::AtStation | DockPhase::Inserting)
    }

    fn to(self, phase: DockPhase) -> Self {
        Self { phase, ..self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DockTolerance {
    /// mm
    pub pos_tol: f64,
    /// deg
    pub ang_tol: f64,
}

impl Default for DockTolerance {
    fn default() -> Self {
        Self { pos_tol: 0.5, ang_tol: 0.5 }
    }
}

impl DockTolerance {
    pub fn validate(&self) -> Result<(), DockError> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if ok(self.pos_tol) && ok(self.ang_tol) {
            Ok(())
        } else {
            Err(DockError::InvalidTolerance)
        }
    }

    pub fn admits(&self, err: AlignmentError) -> bool {
        err.pos.abs() <= self.pos_tol && err.ang.abs() <= self.ang_tol
    }
}

/// Mover pose error relative to the station during a gated step.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AlignmentError {
    /// mm
    pub pos: f64,
    /// deg
    pub ang: f64,
}

impl AlignmentError {
    pub const ZERO: AlignmentError = AlignmentError { pos: 0.0, ang: 0.0 };

    pub fn new(pos: f64, ang: f64) -> Self {
        Self { pos, ang }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub state: DockState,
    /// Set when a gated step was refused.
    pub diagnostic: Option<String>,
}

impl StepOutcome {
    fn ok(state: DockState) -> Self {
        Self { state, diagnostic: None }
    }

    fn retry(state: DockState, err: AlignmentError, tol: &DockTolerance) -> Self {
        Self {
            state,
            diagnostic: Some(format!(
                "lag error {:.3} mm / {:.3} deg exceeds tolerance {} mm / {} deg",
                err.pos, err.ang, tol.pos_tol, tol.ang_tol
            )),
        }
    }
}

/// One pick-up step: FREE, APPROACH, ALIGNED, ENGAGING, LOCKED.
pub fn step_pickup(state: DockState, err: AlignmentError, tol: &DockTolerance) -> Result<StepOutcome, DockError> {
    tol.validate()?;
    let within = tol.admits(err);
    Ok(match state.phase {
        DockPhase::Free => StepOutcome::ok(state.to(DockPhase::Approach)),
        DockPhase::Approach if within => StepOutcome::ok(state.to(DockPhase::Aligned)),
        DockPhase::Approach => StepOutcome::retry(state, err, tol),
        DockPhase::Aligned if within => StepOutcome::ok(state.to(DockPhase::Engaging)),
        DockPhase::Engaging if within => StepOutcome::ok(DockState::locked()),
        DockPhase::Aligned | DockPhase::Engaging => StepOutcome::retry(state.to(DockPhase::Approach), err, tol),
        phase => return Err(DockError::WrongPhase { phase, op: "pick-up step" }),
    })
}

/// One drop-off step: LOCKED, AT_STATION, INSERTING, UNLOCKED, RETRACTING,
/// FREE.
pub fn step_dropoff(state: DockState, err: AlignmentError, tol: &DockTolerance) -> Result<StepOutcome, DockError> {
    tol.validate()?;
    let within = tol.admits(err);
    Ok(match state.phase {
        DockPhase::Locked => StepOutcome::ok(state.to(DockPhase::AtStation)),
        DockPhase::AtStation if within => StepOutcome::ok(state.to(DockPhase::Inserting)),
        DockPhase::AtStation => StepOutcome::retry(state, err, tol),
        DockPhase::Inserting if within => StepOutcome::ok(DockState {
            phase: DockPhase::Unlocked,
            pin_engaged: false,
        }),
        DockPhase::Inserting => StepOutcome::retry(state.to(DockPhase::AtStation), err, tol),
        DockPhase::Unlocked | DockPhase::Retracting => {
            let next = request_retract(state)?;
            StepOutcome::ok(next)
        }
        phase => return Err(DockError::WrongPhase { phase, op: "drop-off step" }),
    })
}

/// Pulls the mover away from the station. Refused while the pin holds.
pub fn request_retract(state: DockState) -> Result<DockState, DockError> {
    if state.pin_engaged {
        return Err(DockError::RetractWhileLocked);
    }
    match state.phase {
        DockPhase::Unlocked => Ok(state.to(DockPhase::Retracting)),
        DockPhase::Retracting => Ok(state.to(DockPhase::Free)),
        phase => Err(DockError::WrongPhase { phase, op: "retract" }),
    }
}

/// One line of the dock event log.
#[derive(Debug, Clone, PartialEq)]
pub struct DockEvent {
    /// s
    pub t: f64,
    pub from: DockPhase,
    pub to: DockPhase,
    pub diagnostic: Option<String>,
}

impl fmt::Display for DockEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.3},{},{},{}", self.t, self.from, self.to, self.diagnostic.as_deref().unwrap_or(""))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CycleReport {
    pub pickup_ok: bool,
    pub dropoff_ok: bool,
    pub retries: usize,
    pub events: Vec<DockEvent>,
    pub final_state: DockState,
}

impl CycleReport {
    pub fn success(&self) -> bool {
        self.pickup_ok && self.dropoff_ok && self.final_state == DockState::free()
    }
}

/// Runs a pick-up followed by a drop-off, drawing one alignment error per
/// step from `errors` and ticking the log clock by `step_time`. A phase
/// sequence gives up after `max_retries` refused steps.
pub fn run_cycle(
    mut errors: impl FnMut() -> AlignmentError,
    tol: &DockTolerance,
    max_retries: usize,
    step_time: f64,
) -> Result<CycleReport, DockError> {
    let mut state = DockState::free();
    let mut events = Vec::new();
    let mut retries = 0;
    let mut t = 0.0;
    let mut drive = |state: &mut DockState,
                     target: DockPhase,
                     step: fn(DockState, AlignmentError, &DockTolerance) -> Result<StepOutcome, DockError>|
     -> Result<bool, DockError> {
        let mut refused = 0;
        while state.phase != target {
            let out = step(*state, errors(), tol)?;
            t += step_time;
            events.push(DockEvent { t, from: state.phase, to: out.state.phase, diagnostic: out.diagnostic.clone() });
            if out.diagnostic.is_some() {
                refused += 1;
                retries += 1;
                if refused > max_retries {
                    *state = out.state;
                    return Ok(false);
                }
            }
            *state = out.state;
        }
        Ok(true)
    };
    let pickup_ok = drive(&mut state, DockPhase::Locked, step_pickup)?;
    let dropoff_ok = pickup_ok && drive(&mut state, DockPhase::Free, step_dropoff)?;
    Ok(CycleReport { pickup_ok, dropoff_ok, retries, events, final_state: state })
}

/// Straight approach onto the station along its rail. The rail heading
/// defaults to the station's local x axis (its gamma).
pub fn dock_trajectory(
    station: Pose6D,
    approach_offset: f64,
    rail_heading: Option<f64>,
    ctx: &MotionContext,
) -> Result<Trajectory, TrajectoryError> {
    if !(approach_offset.is_finite() && approach_offset >= 0.0) {
        return Err(TrajectoryError::InvalidInput(format!(
            "approach offset must be >= 0, got {approach_offset}"
        )));
    }
    if approach_offset == 0.0 {
        return Trajectory::stationary(station, ctx);
    }
    let (s, c) = rail_heading.unwrap_or(station.gamma).to_radians().sin_cos();
    let start = Pose6D {
        x: station.x - approach_offset * c,
        y: station.y - approach_offset * s,
        ..station
    };
    linear_move(start, station, ctx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajectory::MotionLimits;
    use approx::assert_abs_diff_eq;

    #[test]
    fn perfect_pickup_takes_four_steps() {
        let tol = DockTolerance::default();
        let mut s = DockState::free();
        for _ in 0..4 {
            let out = step_pickup(s, AlignmentError::ZERO, &tol).unwrap();
            assert!(out.diagnostic.is_none());
            s = out.state;
        }
        assert_eq!(s.phase(), DockPhase::Locked);
        assert!(s.carried() && s.pin_engaged());
    }

    #[test]
    fn misalignment_at_aligned_retries() {
        let tol = DockTolerance::default();
        let s = DockState::free().to(DockPhase::Aligned);
        let out = step_pickup(s, AlignmentError::new(1.0, 0.0), &tol).unwrap();
        assert_eq!(out.state.phase(), DockPhase::Approach);
        assert!(out.diagnostic.unwrap().contains("lag error"));
    }

    #[test]
    fn nominal_dropoff_frees_the_mover() {
        let tol = DockTolerance::default();
        let mut s = DockState::locked();
        let mut phases = vec![];
        while s.phase() != DockPhase::Free {
            s = step_dropoff(s, AlignmentError::ZERO, &tol).unwrap().state;
            phases.push(s.phase());
        }
        assert_eq!(
            phases,
            [DockPhase::AtStation, DockPhase::Inserting, DockPhase::Unlocked, DockPhase::Retracting, DockPhase::Free]
        );
        assert!(!s.carried() && !s.pin_engaged());
    }

    #[test]
    fn retract_while_locked_is_rejected() {
        assert_eq!(request_retract(DockState::locked()), Err(DockError::RetractWhileLocked));
        let inserting = DockState::locked().to(DockPhase::Inserting);
        assert_eq!(request_retract(inserting), Err(DockError::RetractWhileLocked));
    }

    #[test]
    fn misaligned_insert_returns_to_station() {
        let tol = DockTolerance::default();
        let s = DockState::locked().to(DockPhase::Inserting);
        let out = step_dropoff(s, AlignmentError::new(0.0, 0.8), &tol).unwrap();
        assert_eq!(out.state.phase(), DockPhase::AtStation);
        assert!(out.state.pin_engaged());
        assert!(out.diagnostic.is_some());
    }

    #[test]
    fn wrong_phase_is_an_error() {
        let tol = DockTolerance::default();
        assert!(step_pickup(DockState::locked(), AlignmentError::ZERO, &tol).is_err());
        assert!(step_dropoff(DockState::free(), AlignmentError::ZERO, &tol).is_err());
        let bad = DockTolerance { pos_tol: 0.0, ..tol };
        assert_eq!(step_pickup(DockState::free(), AlignmentError::ZERO, &bad), Err(DockError::InvalidTolerance));
    }

    #[test]
    fn cycles_succeed_at_zero_error() {
        let tol = DockTolerance::default();
        for _ in 0..10 {
            let r = run_cycle(|| AlignmentError::ZERO, &tol, 3, 0.1).unwrap();
            assert!(r.success());
            assert_eq!(r.events.len(), 9);
            assert_eq!(r.retries, 0);
        }
    }

    #[test]
    fn persistent_misalignment_gives_up() {
        let r = run_cycle(|| AlignmentError::new(2.0, 0.0), &DockTolerance::default(), 3, 0.1).unwrap();
        assert!(!r.success());
        assert_eq!(r.final_state.phase(), DockPhase::Approach);
        assert!(!r.final_state.carried());
        assert!(r.events.iter().any(|e| e.diagnostic.is_some()));
    }

    #[test]
    fn event_lines() {
        let e = DockEvent { t: 0.5, from: DockPhase::Locked, to: DockPhase::AtStation, diagnostic: None };
        assert_eq!(e.to_string(), "0.500,LOCKED,AT_STATION,");
    }

    #[test]
    fn approach_examples() {
        let ctx = MotionContext { motion: MotionLimits::experiment(), ..MotionContext::default() };
        let station = Pose6D::new(480.0, 360.0, 242.5, 0.0, 0.0, 0.0).unwrap();
        let still = dock_trajectory(station, 0.0, None, &ctx).unwrap();
        assert_eq!(still.len(), 1);

        let traj = dock_trajectory(station, 50.0, None, &ctx).unwrap();
        assert_abs_diff_eq!(traj.duration(), 0.15, epsilon = 1e-9);
        assert_abs_diff_eq!(traj.first_pose().unwrap().x, 430.0, epsilon = 1e-12);
        assert_eq!(traj.last_pose().unwrap(), station);

        let edge = Pose6D { x: 650.0, ..station };
        assert!(dock_trajectory(edge, 100.0, Some(180.0), &ctx).is_err());
    }
}
