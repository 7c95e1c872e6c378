//! Payload localization from mover wrenches, gear-ratio calibration and
//! accuracy propagation.

mod montecarlo;
mod pca;
mod regression;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

pub use montecarlo::{propagate_accuracy, MoverNoise};
pub use pca::{pca_fit, pca_project, symmetric_eigen, PcaModel, Row, DIM};
pub use regression::{bench_angles, calibrate_gear_ratio, calibration_sweep, CalibratedAxis, RegressionFit};

use crate::kinematics::KinematicsError;
use crate::simctrl::{static_wrenches, LoadCase, SimError};
use crate::types::{PlatformGeometry, Pose6D, Wrench};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimationError {
    #[error("dataset {0} has no samples")]
    Empty(String),
    #[error("unknown payload position label {0:?}")]
    BadLabel(String),
    #[error("need at least 2 rows, got {0}")]
    TooFewRows(usize),
    #[error("rows have no variance; the model is degenerate")]
    Degenerate,
    #[error("calibration needs at least two distinct mover angles")]
    DegenerateAbscissa,
    #[error("missing payload positions: {0}")]
    MissingLabels(String),
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Kinematics(#[from] KinematicsError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// Payload cell on the platform: sign of the x and y offsets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PositionLabel {
    pub x: i8,
    pub y: i8,
}

fn sign_char(s: i8) -> char {
    match s {
        -1 => '-',
        0 => '0',
        _ => '+',
    }
}

impl PositionLabel {
    /// All nine cells, in lexicographic label order.
    pub fn all() -> Vec<PositionLabel> {
        let mut v: Vec<_> = [-1i8, 0, 1]
            .iter()
            .flat_map(|&x| [-1i8, 0, 1].map(|y| PositionLabel { x, y }))
            .collect();
        v.sort_by_key(|l| l.to_string());
        v
    }
}

impl fmt::Display for PositionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x{}y{}", sign_char(self.x), sign_char(self.y))
    }
}

impl FromStr for PositionLabel {
    type Err = EstimationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let sign = |c: char| match c {
            '-' => Some(-1),
            '0' => Some(0),
            '+' => Some(1),
            _ => None,
        };
        let c: Vec<char> = s.trim().chars().collect();
        match c.as_slice() {
            ['x', sx, 'y', sy] => match (sign(*sx), sign(*sy)) {
                (Some(x), Some(y)) => Ok(PositionLabel { x, y }),
                _ => Err(EstimationError::BadLabel(s.into())),
            },
            _ => Err(EstimationError::BadLabel(s.into())),
        }
    }
}

/// Wrench recordings of both movers with the payload at one cell.
#[derive(Debug, Clone, PartialEq)]
pub struct WrenchDataset {
    pub label: PositionLabel,
    pub samples: Vec<(Wrench, Wrench)>,
}

/// Mean of mover 1 minus mover 2 wrench over a dataset.
pub fn delta_wrench(dataset: &WrenchDataset) -> Result<Row, EstimationError> {
    mean_delta(dataset.samples.iter()).ok_or_else(|| EstimationError::Empty(dataset.label.to_string()))
}

fn mean_delta<'a>(samples: impl Iterator<Item = &'a (Wrench, Wrench)>) -> Option<Row> {
    let mut sum = [0.0; DIM];
    let mut n = 0usize;
    for (a, b) in samples {
        let d = (*a - *b).to_array();
        for c in 0..DIM {
            sum[c] += d[c];
        }
        n += 1;
    }
    (n > 0).then(|| sum.map(|s| s / n as f64))
}

/// Nearest centroid in projected space; equal distances resolve to the
/// lexicographically smallest label.
pub fn classify_payload(model: &PcaModel, centroids: &[(PositionLabel, [f64; 2])], v: &Row) -> PositionLabel {
    let p = pca_project(model, v);
    let mut best: Option<(f64, String, PositionLabel)> = None;
    for (label, c) in centroids {
        let d = (p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2);
        let name = label.to_string();
        let better = match &best {
            None => true,
            Some((bd, bn, _)) => d < *bd || (d == *bd && name < *bn),
        };
        if better {
            best = Some((d, name, *label));
        }
    }
    best.expect("classify_payload needs at least one centroid").2
}

/// Fitted payload locator: PCA over the per-cell deltas plus their
/// projections as centroids.
#[derive(Debug, Clone, PartialEq)]
pub struct PayloadModel {
    pub pca: PcaModel,
    pub centroids: Vec<(PositionLabel, [f64; 2])>,
}

impl PayloadModel {
    pub fn fit(datasets: &[WrenchDataset]) -> Result<Self, EstimationError> {
        check_labels(datasets)?;
        let deltas = datasets.iter().map(delta_wrench).collect::<Result<Vec<_>, _>>()?;
        Self::from_deltas(datasets.iter().map(|d| d.label).zip(deltas).collect())
    }

    /// Rows are put in label order first so the model does not depend on
    /// the order the datasets arrived in.
    fn from_deltas(mut rows: Vec<(PositionLabel, Row)>) -> Result<Self, EstimationError> {
        rows.sort_by_cached_key(|r| r.0.to_string());
        let pca = pca_fit(&rows.iter().map(|r| r.1).collect::<Vec<_>>())?;
        let centroids = rows.iter().map(|(l, r)| (*l, pca_project(&pca, r))).collect();
        Ok(Self { pca, centroids })
    }

    pub fn classify(&self, v: &Row) -> PositionLabel {
        classify_payload(&self.pca, &self.centroids, v)
    }

    /// Smallest distance between two centroids.
    pub fn min_spacing(&self) -> f64 {
        let mut best = f64::INFINITY;
        for (i, (_, a)) in self.centroids.iter().enumerate() {
            for (_, b) in &self.centroids[i + 1..] {
                best = best.min((a[0] - b[0]).hypot(a[1] - b[1]));
            }
        }
        best
    }
}

/// Requires each of the nine cells exactly once.
pub fn check_labels(datasets: &[WrenchDataset]) -> Result<(), EstimationError> {
    let all = PositionLabel::all();
    let missing: Vec<String> = all
        .iter()
        .filter(|l| !datasets.iter().any(|d| d.label == **l))
        .map(|l| l.to_string())
        .collect();
    if !missing.is_empty() {
        return Err(EstimationError::MissingLabels(missing.join(", ")));
    }
    if datasets.len() != all.len() {
        return Err(EstimationError::Invalid(format!(
            "expected one dataset per cell, got {} datasets",
            datasets.len()
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LooResult {
    pub correct: usize,
    pub total: usize,
}

impl LooResult {
    pub fn accuracy(&self) -> f64 {
        if self.total == 0 { 0.0 } else { self.correct as f64 / self.total as f64 }
    }
}

/// Leave-one-sample-out: each sample is held out, the model is refit on
/// the remaining samples, and the held-out sample's wrench difference is
/// classified. Every dataset needs at least two samples.
pub fn leave_one_out(datasets: &[WrenchDataset]) -> Result<LooResult, EstimationError> {
    check_labels(datasets)?;
    if let Some(d) = datasets.iter().find(|d| d.samples.len() < 2) {
        return Err(EstimationError::Invalid(format!(
            "dataset {} needs at least 2 samples for leave-one-out",
            d.label
        )));
    }
    let full: Vec<Row> = datasets.iter().map(delta_wrench).collect::<Result<_, _>>()?;
    let mut result = LooResult { correct: 0, total: 0 };
    for (i, ds) in datasets.iter().enumerate() {
        for held in 0..ds.samples.len() {
            let reduced = mean_delta(
                ds.samples.iter().enumerate().filter(|(j, _)| *j != held).map(|(_, s)| s),
            )
            .expect("at least one sample remains");
            let rows: Vec<_> = datasets
                .iter()
                .enumerate()
                .map(|(k, d)| (d.label, if k == i { reduced } else { full[k] }))
                .collect();
            let model = PayloadModel::from_deltas(rows)?;
            let (a, b) = ds.samples[held];
            if model.classify(&(a - b).to_array()) == ds.label {
                result.correct += 1;
            }
            result.total += 1;
        }
    }
    Ok(result)
}

/// Synthetic payload experiment built from the statics model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticGrid {
    pub pose: Pose6D,
    pub payload_mass: f64,
    pub magbot_mass: f64,
    /// Cell offset from the platform center in x and y, mm.
    pub offset: f64,
    pub samples_per_cell: usize,
    /// Standard deviation added to every component of every mover wrench.
    pub noise_sigma: f64,
}

impl Default for SyntheticGrid {
    fn default() -> Self {
        Self {
            pose: Pose6D { x: 480.0, y: 360.0, z: 205.0, alpha: 0.0, beta: 0.0, gamma: 0.0 },
            payload_mass: 0.5,
            magbot_mass: 1.09,
            offset: 60.0,
            samples_per_cell: 20,
            noise_sigma: 0.0,
        }
    }
}

impl SyntheticGrid {
    pub fn generate<R: Rng + ?Sized>(
        &self,
        geom: &PlatformGeometry,
        rng: &mut R,
    ) -> Result<Vec<WrenchDataset>, EstimationError> {
        if self.samples_per_cell == 0 {
            return Err(EstimationError::Invalid("samples_per_cell must be >= 1".into()));
        }
        let noise = Normal::new(0.0, self.noise_sigma)
            .map_err(|_| EstimationError::Invalid(format!("bad noise sigma {}", self.noise_sigma)))?;
        let mut jitter = |w: Wrench| Wrench::from_array(w.to_array().map(|v| v + noise.sample(rng)));
        let mut out = Vec::with_capacity(9);
        for label in PositionLabel::all() {
            let load = LoadCase {
                magbot_mass: self.magbot_mass,
                payload_mass: self.payload_mass,
                payload_x: self.offset * label.x as f64,
                payload_y: self.offset * label.y as f64,
            };
            let (w1, w2) = static_wrenches(&self.pose, &load, geom)?;
            let samples = (0..self.samples_per_cell).map(|_| (jitter(w1), jitter(w2))).collect();
            out.push(WrenchDataset { label, samples });
        }
        Ok(out)
    }
}
