//! CSV formats: trajectories, simulation traces, wrench telemetry,
//! PCA projections and calibration samples.
//!
//! Numbers are written with six decimals so that files diff cleanly.

use std::io::{Read, Write};

use thiserror::Error;

use crate::estimation::PositionLabel;
use crate::kinematics::MoverPair;
use crate::simctrl::SimTrace;
use crate::trajectory::{Trajectory, TrajectorySample};
use crate::types::{MoverState, PlatformGeometry, Pose6D, Wrench};

pub const TRAJECTORY_HEADER: [&str; 13] = [
    "t", "x_p", "y_p", "z_p", "alpha", "beta", "gamma", "x_m1", "y_m1", "gamma_m1", "x_m2", "y_m2", "gamma_m2",
];
pub const TRACE_HEADER: [&str; 3] = ["t", "angle_deg", "torque"];
pub const WRENCH_HEADER: [&str; 13] = [
    "t", "fx1", "fy1", "fz1", "tx1", "ty1", "tz1", "fx2", "fy2", "fz2", "tx2", "ty2", "tz2",
];
pub const PROJECTION_HEADER: [&str; 3] = ["label", "pc1", "pc2"];
pub const CALIBRATION_HEADER: [&str; 2] = ["mover_gamma", "platform_angle"];

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("unexpected header {got:?}, expected {expected:?}")]
    Header { expected: String, got: String },
    #[error("row {row}, column {column}: cannot read {value:?} as a number")]
    Field { row: usize, column: &'static str, value: String },
    #[error("file has no data rows")]
    Empty,
}

/// Fixed six-decimal rendering; negative zero prints as zero.
pub fn fmt6(v: f64) -> String {
    let s = format!("{v:.6}");
    if s.trim_start_matches('-').chars().all(|c| c == '0' || c == '.') {
        s.trim_start_matches('-').to_string()
    } else {
        s
    }
}

fn write_rows<W: Write>(out: W, header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<(), IoError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn read_rows<R: Read>(input: R, header: &'static [&'static str]) -> Result<Vec<Vec<f64>>, IoError> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let got: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if got != header {
        return Err(IoError::Header { expected: header.join(","), got: got.join(",") });
    }
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let row = rec
            .iter()
            .zip(header)
            .map(|(field, column)| {
                field.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| IoError::Field {
                    row: i + 1,
                    column,
                    value: field.to_string(),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(IoError::Empty);
    }
    Ok(rows)
}

pub fn write_trajectory<W: Write>(traj: &Trajectory, out: W) -> Result<(), IoError> {
    let rows = traj.samples.iter().map(|s| {
        let p = s.pose;
        let (m1, m2) = (s.movers.mover1, s.movers.mover2);
        [s.t, p.x, p.y, p.z, p.alpha, p.beta, p.gamma, m1.x, m1.y, m1.gamma, m2.x, m2.y, m2.gamma]
            .map(fmt6)
            .to_vec()
    });
    write_rows(out, &TRAJECTORY_HEADER, rows)
}

/// Reads a trajectory. Movers fly at `geom.z_m`; the sample period is the
/// mean spacing of the time column, or `default_dt` for a single row.
pub fn read_trajectory<R: Read>(input: R, geom: &PlatformGeometry, default_dt: f64) -> Result<Trajectory, IoError> {
    let rows = read_rows(input, &TRAJECTORY_HEADER)?;
    let mover = |x, y, gamma| MoverState { x, y, z: geom.z_m, gamma };
    let samples: Vec<TrajectorySample> = rows
        .iter()
        .map(|r| TrajectorySample {
            t: r[0],
            pose: Pose6D { x: r[1], y: r[2], z: r[3], alpha: r[4], beta: r[5], gamma: r[6] },
            movers: MoverPair { mover1: mover(r[7], r[8], r[9]), mover2: mover(r[10], r[11], r[12]) },
        })
        .collect();
    let dt = if samples.len() > 1 {
        (samples[samples.len() - 1].t - samples[0].t) / (samples.len() - 1) as f64
    } else {
        default_dt
    };
    Ok(Trajectory { dt, samples })
}

pub fn write_trace<W: Write>(trace: &SimTrace, out: W) -> Result<(), IoError> {
    let rows = trace.samples.iter().map(|s| vec![fmt6(s.t), fmt6(s.angle), fmt6(s.torque)]);
    write_rows(out, &TRACE_HEADER, rows)
}

pub fn write_wrenches<W: Write>(samples: &[(Wrench, Wrench)], dt: f64, out: W) -> Result<(), IoError> {
    let rows = samples.iter().enumerate().map(|(i, (a, b))| {
        std::iter::once(i as f64 * dt)
            .chain(a.to_array())
            .chain(b.to_array())
            .map(fmt6)
            .collect()
    });
    write_rows(out, &WRENCH_HEADER, rows)
}

pub fn read_wrenches<R: Read>(input: R) -> Result<Vec<(Wrench, Wrench)>, IoError> {
    Ok(read_rows(input, &WRENCH_HEADER)?
        .into_iter()
        .map(|r| {
            (
                Wrench::from_array(std::array::from_fn(|i| r[1 + i])),
                Wrench::from_array(std::array::from_fn(|i| r[7 + i])),
            )
        })
        .collect())
}

pub fn write_projections<W: Write>(points: &[(PositionLabel, [f64; 2])], out: W) -> Result<(), IoError> {
    let rows = points.iter().map(|(l, p)| vec![l.to_string(), fmt6(p[0]), fmt6(p[1])]);
    write_rows(out, &PROJECTION_HEADER, rows)
}

pub fn write_calibration<W: Write>(samples: &[(f64, f64)], out: W) -> Result<(), IoError> {
    write_rows(out, &CALIBRATION_HEADER, samples.iter().map(|(a, b)| vec![fmt6(*a), fmt6(*b)]))
}

pub fn read_calibration<R: Read>(input: R) -> Result<Vec<(f64, f64)>, IoError> {
    Ok(read_rows(input, &CALIBRATION_HEADER)?.into_iter().map(|r| (r[0], r[1])).collect())
}
