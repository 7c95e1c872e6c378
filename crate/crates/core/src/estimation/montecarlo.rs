//! Monte-Carlo propagation of mover positioning noise to the platform.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::EstimationError;
use crate::kinematics::{forward_kinematics_near, inverse_kinematics};
use crate::types::{Axis, PlatformGeometry, Pose6D};

/// Independent Gaussian noise on mover commands.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MoverNoise {
    /// mm, applied to x and y of both movers.
    pub sigma_xy: f64,
    /// deg, applied to gamma of both movers.
    pub sigma_gamma: f64,
}

impl MoverNoise {
    pub fn uniform(sigma: f64) -> Self {
        Self { sigma_xy: sigma, sigma_gamma: sigma }
    }
}

/// Mean absolute platform deviation per axis (x, y, z, alpha, beta, gamma)
/// when the movers realize `pose` with `noise`.
pub fn propagate_accuracy<R: Rng + ?Sized>(
    pose: &Pose6D,
    noise: MoverNoise,
    trials: usize,
    geom: &PlatformGeometry,
    rng: &mut R,
) -> Result<[f64; 6], EstimationError> {
    if trials == 0 {
        return Err(EstimationError::Invalid("trials must be >= 1".into()));
    }
    let bad = |s: f64| EstimationError::Invalid(format!("noise sigma must be >= 0, got {s}"));
    let n_xy = Normal::new(0.0, noise.sigma_xy).map_err(|_| bad(noise.sigma_xy))?;
    let n_g = Normal::new(0.0, noise.sigma_gamma).map_err(|_| bad(noise.sigma_gamma))?;
    let nominal = inverse_kinematics(pose, geom)?;
    let truth = pose.to_array();
    let mut sum = [0.0; 6];
    for _ in 0..trials {
        let mut pair = nominal;
        for m in [&mut pair.mover1, &mut pair.mover2] {
            m.x += n_xy.sample(rng);
            m.y += n_xy.sample(rng);
            m.gamma += n_g.sample(rng);
        }
        let got = forward_kinematics_near(&pair, geom, pose.gamma)?.to_array();
        for (i, axis) in Axis::ALL.iter().enumerate() {
            let err = got[i] - truth[i];
            sum[i] += if *axis == Axis::Gamma {
                (err + 180.0).rem_euclid(360.0) - 180.0
            } else {
                err
            }
            .abs();
        }
    }
    Ok(sum.map(|s| s / trials as f64))
}
