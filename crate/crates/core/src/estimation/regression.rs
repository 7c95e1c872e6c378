//! Gear-ratio calibration by ordinary least squares.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::EstimationError;
use crate::kinematics::{forward_kinematics, inverse_kinematics};
use crate::types::{PlatformGeometry, Pose6D};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegressionFit {
    /// Platform degrees per mover degree.
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

impl RegressionFit {
    /// Estimated platform rotation per mover rotation.
    pub fn gear_ratio(&self) -> f64 {
        self.slope.abs()
    }
}

/// Fits `platform_angle = slope·mover_gamma + intercept`.
pub fn calibrate_gear_ratio(samples: &[(f64, f64)]) -> Result<RegressionFit, EstimationError> {
    if samples.iter().any(|(x, y)| !(x.is_finite() && y.is_finite())) {
        return Err(EstimationError::Invalid("calibration samples must be finite".into()));
    }
    let n = samples.len() as f64;
    if samples.len() < 2 {
        return Err(EstimationError::DegenerateAbscissa);
    }
    let mx = samples.iter().map(|s| s.0).sum::<f64>() / n;
    let my = samples.iter().map(|s| s.1).sum::<f64>() / n;
    let sxx: f64 = samples.iter().map(|s| (s.0 - mx).powi(2)).sum();
    let sxy: f64 = samples.iter().map(|s| (s.0 - mx) * (s.1 - my)).sum();
    let spread = samples.iter().fold(0.0f64, |m, s| m.max((s.0 - mx).abs()));
    if spread == 0.0 || sxx <= 0.0 {
        return Err(EstimationError::DegenerateAbscissa);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = samples.iter().map(|s| (s.1 - my).powi(2)).sum();
    let ss_res: f64 = samples.iter().map(|s| (s.1 - slope * s.0 - intercept).powi(2)).sum();
    let r_squared = if ss_tot > 0.0 { (1.0 - ss_res / ss_tot).clamp(0.0, 1.0) } else { 0.0 };
    Ok(RegressionFit { slope, intercept, r_squared })
}

/// Which mover a calibration sweep turns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CalibratedAxis {
    /// Mover 1, tilting the platform about alpha.
    Alpha,
    /// Mover 2, tilting the platform about beta.
    Beta,
}

/// Turns one mover through `mover_angles` (relative to the level pose) and
/// reads back the platform tilt through forward kinematics, with Gaussian
/// sensor noise of `sigma` degrees.
pub fn calibration_sweep<R: Rng + ?Sized>(
    base: &Pose6D,
    axis: CalibratedAxis,
    mover_angles: &[f64],
    sigma: f64,
    geom: &PlatformGeometry,
    rng: &mut R,
) -> Result<Vec<(f64, f64)>, EstimationError> {
    let noise = Normal::new(0.0, sigma)
        .map_err(|_| EstimationError::Invalid(format!("noise sigma must be >= 0, got {sigma}")))?;
    let level = inverse_kinematics(&Pose6D { alpha: 0.0, beta: 0.0, ..*base }, geom)?;
    mover_angles
        .iter()
        .map(|&angle| {
            let mut pair = level;
            let reading = match axis {
                CalibratedAxis::Alpha => {
                    pair.mover1.gamma += angle;
                    forward_kinematics(&pair, geom)?.alpha
                }
                CalibratedAxis::Beta => {
                    pair.mover2.gamma += angle;
                    forward_kinematics(&pair, geom)?.beta
                }
            };
            Ok((angle, reading + noise.sample(rng)))
        })
        .collect()
}

/// Mover angles of the bench calibration: 0° to 130° in 10° steps.
pub fn bench_angles() -> Vec<f64> {
    (0..14).map(|i| 10.0 * i as f64).collect()
}
