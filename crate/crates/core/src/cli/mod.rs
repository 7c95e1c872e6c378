//! Command-line front end.
//!
//! Exit codes: 0 on success (including diagnoses such as an unstable
//! simulation), 1 on usage or file errors, 2 when the request is
//! infeasible.

pub mod io;
pub mod report;
pub mod scenario;

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::docking::{dock_trajectory, run_cycle, AlignmentError};
use crate::estimation::{
    bench_angles, calibrate_gear_ratio, calibration_sweep, leave_one_out, propagate_accuracy, PayloadModel,
    PositionLabel, WrenchDataset,
};
use crate::kinematics::{
    check_workspace, forward_kinematics, inverse_kinematics, reachable_z_interval, z_ceiling, MoverPair,
};
use crate::simctrl::{oscillation_metric, simulate_levitation};
use crate::trajectory::{
    circle_sine, cos_alpha_sin_beta, extending_helix, linear_move, motion_peaks, sweep_axis, validate_trajectory,
    HelixSpec, Trajectory,
};
use crate::types::{Axis, MoverState, Pose6D};

pub use report::Report;
pub use scenario::{parse_scenario, Scenario, ScenarioError};

#[derive(Debug, Parser)]
#[command(name = "magbot", version, about = "Kinematics, motion and analysis tools for a two-mover 6-DoF platform")]
struct Cli {
    /// Scenario file; falls back to $MAGBOT_CONFIG.
    #[arg(long, global = true, env = "MAGBOT_CONFIG")]
    config: Option<PathBuf>,
    /// Random seed, overriding the scenario's.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Scenario override, e.g. --set v_max=500. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Mover commands for a platform pose.
    #[command(allow_negative_numbers = true)]
    Ik { x: f64, y: f64, z: f64, alpha: f64, beta: f64, gamma: f64 },
    /// Platform pose for mover positions.
    #[command(allow_negative_numbers = true)]
    Fk { x1: f64, y1: f64, gamma1: f64, x2: f64, y2: f64, gamma2: f64 },
    /// Check a pose against the workspace.
    #[command(allow_negative_numbers = true)]
    Workspace { x: f64, y: f64, z: f64, alpha: f64, beta: f64, gamma: f64 },
    /// Generate a test trajectory as CSV.
    Traj {
        /// sweep, circle, helix or cos_sin
        #[arg(long)]
        kind: Option<String>,
        /// Axis for sweeps.
        #[arg(long)]
        axis: Option<String>,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Check a trajectory CSV against workspace and dynamic limits.
    Validate { file: PathBuf },
    /// Simulate one mover tilt axis under a controller parameter set.
    Simulate {
        #[arg(long)]
        pid_set: Option<u8>,
        #[arg(long)]
        payload_mass: Option<f64>,
        /// Write the trace CSV here.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Fit the payload locator on nine labeled wrench recordings.
    Payload {
        /// Use datasets generated from the statics model.
        #[arg(long)]
        synthetic: bool,
        /// Telemetry files as LABEL=PATH, or PATH named after its label.
        files: Vec<String>,
        /// Write projected coordinates here.
        #[arg(long, short)]
        out: Option<PathBuf>,
        /// Write the synthetic datasets as telemetry CSVs into this directory.
        #[arg(long)]
        dump_dir: Option<PathBuf>,
    },
    /// Gear-ratio regression on recorded samples, or a Monte-Carlo study.
    Calibrate {
        /// CSV with mover_gamma,platform_angle columns.
        #[arg(long)]
        samples: Option<PathBuf>,
    },
    /// Propagate mover positioning noise to platform accuracy.
    Accuracy,
    /// Run pick-up/drop-off cycles at the docking station.
    Dock {
        /// Write the approach trajectory CSV here.
        #[arg(long)]
        trajectory_out: Option<PathBuf>,
    },
    /// Cycle time and throughput of the pick-and-place demo.
    Demo {
        #[arg(long)]
        cycle_time: Option<f64>,
    },
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Infeasible(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Infeasible(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Infeasible(m) => m,
        }
    }
}

fn infeasible(e: impl std::fmt::Display) -> Failure {
    Failure::Infeasible(e.to_string())
}

fn usage(e: impl std::fmt::Display) -> Failure {
    Failure::Usage(e.to_string())
}

type Out<'a> = &'a mut dyn Write;

/// Runs the command line `args` (program name first) and returns the exit
/// code. Results go to `out`, diagnostics to `err`.
pub fn run<I, T>(args: I, out: Out<'_>, err: Out<'_>) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = if e.use_stderr() { write!(err, "{e}") } else { write!(out, "{e}") };
            return code;
        }
    };
    match execute(cli, out) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message());
            f.code()
        }
    }
}

fn load_scenario(cli: &Cli) -> Result<Scenario, Failure> {
    let mut sc = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
            parse_scenario(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?
        }
        None => Scenario::default(),
    };
    for o in &cli.overrides {
        sc.set(o).map_err(|e| usage(format!("--set {o}: {}", e.message)))?;
    }
    if let Some(seed) = cli.seed {
        sc.set(&format!("seed={seed}")).map_err(usage)?;
    }
    Ok(sc)
}

fn emit(out: Out<'_>, text: impl std::fmt::Display) -> Result<(), Failure> {
    write!(out, "{text}").map_err(usage)
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| usage(format!("cannot write {}: {e}", path.display())))
}

fn open(path: &Path) -> Result<BufReader<File>, Failure> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| usage(format!("cannot read {}: {e}", path.display())))
}

fn execute(cli: Cli, out: Out<'_>) -> Result<i32, Failure> {
    let sc = load_scenario(&cli)?;
    match cli.command {
        Command::Ik { x, y, z, alpha, beta, gamma } => cmd_ik(&sc, [x, y, z, alpha, beta, gamma], out),
        Command::Fk { x1, y1, gamma1, x2, y2, gamma2 } => cmd_fk(&sc, [x1, y1, gamma1, x2, y2, gamma2], out),
        Command::Workspace { x, y, z, alpha, beta, gamma } => {
            cmd_workspace(&sc, [x, y, z, alpha, beta, gamma], out)
        }
        Command::Traj { kind, axis, out: path } => {
            let mut sc = sc;
            if let Some(k) = kind {
                sc.set(&format!("kind={k}")).map_err(|e| usage(e.message))?;
            }
            if let Some(a) = axis {
                sc.set(&format!("axis={a}")).map_err(|e| usage(e.message))?;
            }
            let traj = build_trajectory(&sc)?;
            match path {
                Some(p) => io::write_trajectory(&traj, create(&p)?).map_err(usage)?,
                None => io::write_trajectory(&traj, &mut *out).map_err(usage)?,
            }
            Ok(0)
        }
        Command::Validate { file } => cmd_validate(&sc, &file, out),
        Command::Simulate { pid_set, payload_mass, out: path } => {
            let mut sc = sc;
            if let Some(s) = pid_set {
                sc.set(&format!("pid_set={s}")).map_err(|e| usage(e.message))?;
            }
            if let Some(m) = payload_mass {
                sc.set(&format!("payload_mass={m}")).map_err(|e| usage(e.message))?;
            }
            cmd_simulate(&sc, path.as_deref(), out)
        }
        Command::Payload { synthetic, files, out: path, dump_dir } => {
            cmd_payload(&sc, synthetic, &files, path.as_deref(), dump_dir.as_deref(), out)
        }
        Command::Calibrate { samples } => cmd_calibrate(&sc, samples.as_deref(), out),
        Command::Accuracy => cmd_accuracy(&sc, out),
        Command::Dock { trajectory_out } => cmd_dock(&sc, trajectory_out.as_deref(), out),
        Command::Demo { cycle_time } => cmd_demo(&sc, cycle_time, out),
    }
}

fn pose_from(v: [f64; 6]) -> Result<Pose6D, Failure> {
    Pose6D::new(v[0], v[1], v[2], v[3], v[4], v[5]).map_err(infeasible)
}

fn cmd_ik(sc: &Scenario, v: [f64; 6], out: Out<'_>) -> Result<i32, Failure> {
    let geom = sc.geometry().map_err(usage)?;
    let pair = inverse_kinematics(&pose_from(v)?, &geom).map_err(infeasible)?;
    for (i, m) in pair.movers().iter().enumerate() {
        emit(out, format!("mover{} {:.4} {:.4} {:.4}\n", i + 1, m.x, m.y, m.gamma))?;
    }
    Ok(0)
}

fn cmd_fk(sc: &Scenario, v: [f64; 6], out: Out<'_>) -> Result<i32, Failure> {
    let geom = sc.geometry().map_err(usage)?;
    let mover = |x, y, gamma| MoverState::new(x, y, geom.z_m, gamma).map_err(infeasible);
    let pair = MoverPair { mover1: mover(v[0], v[1], v[2])?, mover2: mover(v[3], v[4], v[5])? };
    let p = forward_kinematics(&pair, &geom).map_err(infeasible)?;
    emit(
        out,
        format!("pose {:.4} {:.4} {:.4} {:.4} {:.4} {:.4}\n", p.x, p.y, p.z, p.alpha, p.beta, p.gamma),
    )?;
    Ok(0)
}

fn cmd_workspace(sc: &Scenario, v: [f64; 6], out: Out<'_>) -> Result<i32, Failure> {
    let ctx = sc.motion_context().map_err(usage)?;
    let pose = pose_from(v)?;
    let mut r = Report::new("workspace", sc.name());
    let (lo, hi) = reachable_z_interval(&ctx.geom).map_err(infeasible)?;
    r.metric("reachable_z_min", lo, "mm", 4);
    r.metric("reachable_z_max", hi, "mm", 4);
    r.metric("z_ceiling", z_ceiling(&ctx.geom), "mm", 4);
    let report = check_workspace(&pose, &ctx.limits, &ctx.grid, &ctx.geom);
    r.check("pose", report.valid(), format!("{} violation(s)", report.violations.len()));
    for v in &report.violations {
        r.note(format!("violation: {v}"));
    }
    emit(out, &r)?;
    Ok(if report.valid() { 0 } else { 2 })
}

/// Builds the trajectory the scenario's `[traj]` section describes.
fn build_trajectory(sc: &Scenario) -> Result<Trajectory, Failure> {
    let ctx = sc.motion_context().map_err(usage)?;
    let center = sc.traj_center().map_err(infeasible)?;
    let cycles = sc.int("cycles") as u32;
    let result = match sc.word("kind") {
        "sweep" => sweep_axis(sc.axis(), sc.int("reps") as u32, center, sc.sweep_range(), &ctx),
        "circle" => circle_sine(center, sc.num("radius"), sc.num("z_amp"), cycles, &ctx),
        "helix" => extending_helix(
            center,
            HelixSpec {
                r0: sc.num("r0"),
                r_growth: sc.num("r_growth"),
                z0: sc.num("z0"),
                z1: sc.num("z1"),
                turns: sc.num("turns"),
            },
            &ctx,
        ),
        _ => cos_alpha_sin_beta(center, sc.num("amp_a"), sc.num("amp_b"), cycles, &ctx),
    };
    result.map_err(infeasible)
}

fn cmd_validate(sc: &Scenario, file: &Path, out: Out<'_>) -> Result<i32, Failure> {
    let ctx = sc.motion_context().map_err(usage)?;
    let traj = io::read_trajectory(open(file)?, &ctx.geom, ctx.dt).map_err(usage)?;
    let report = validate_trajectory(&traj, &ctx);
    let peaks = motion_peaks(&traj);
    let mut r = Report::new("validate", sc.name());
    r.metric("samples", traj.len() as f64, "-", 0);
    r.metric("duration", traj.duration(), "s", 3);
    r.metric("peak_mover_speed", peaks.speed, "mm/s", 3);
    r.metric("peak_mover_accel", peaks.accel, "mm/s^2", 3);
    r.metric("peak_mover_yaw_rate", peaks.yaw_rate, "deg/s", 3);
    r.metric("violations", report.violations.len() as f64, "-", 0);
    r.check("trajectory", report.valid(), format!("{} violation(s)", report.violations.len()));
    for v in report.violations.iter().take(20) {
        r.note(format!("violation: {v}"));
    }
    if report.violations.len() > 20 {
        r.note(format!("... {} more", report.violations.len() - 20));
    }
    emit(out, &r)?;
    Ok(if report.valid() { 0 } else { 2 })
}

fn cmd_simulate(sc: &Scenario, trace_out: Option<&Path>, out: Out<'_>) -> Result<i32, Failure> {
    let pid = sc.pid().map_err(usage)?;
    let load = sc.load_case().map_err(usage)?;
    let (duration, window) = (sc.num("duration"), sc.num("window"));
    let trace = simulate_levitation(&pid, &sc.plant(), &load, duration).map_err(infeasible)?;
    if let Some(p) = trace_out {
        io::write_trace(&trace, create(p)?).map_err(usage)?;
    }
    let mut r = Report::new("simulate", sc.name());
    r.metric("kp", pid.kp, "-", 3);
    r.metric("tn", pid.tn, "s", 3);
    r.metric("tv", pid.tv, "s", 3);
    r.metric("t1", pid.t1, "s", 3);
    r.metric("payload_mass", load.payload_mass, "kg", 3);
    let regime = if let Some(t) = trace.diverged_at {
        r.note(format!("diagnostic: angle diverged at t = {t:.3} s"));
        "diverged"
    } else {
        let m = oscillation_metric(&trace, window).map_err(infeasible)?;
        let initial = trace.peak_to_peak(0.0, window);
        r.metric("initial_peak_to_peak", initial, "deg", 6);
        r.metric("trailing_peak_to_peak", m.peak_to_peak, "deg", 6);
        if let Some(d) = m.decay_ratio {
            r.metric("decay_ratio", d, "-", 4);
        }
        if let Some(p) = m.dominant_period {
            r.metric("dominant_period", p, "s", 4);
        }
        let peak_torque = trace.samples.iter().fold(0.0f64, |a, s| a.max(s.torque.abs()));
        r.metric("peak_torque", peak_torque, "N*mm", 3);
        if m.peak_to_peak <= 0.1 * initial { "stable" } else { "oscillatory" }
    };
    r.note(format!("regime: {regime}"));
    emit(out, &r)?;
    Ok(0)
}

fn load_dataset(spec: &str) -> Result<WrenchDataset, Failure> {
    let (label, path) = match spec.split_once('=') {
        Some((l, p)) => (l.to_string(), PathBuf::from(p)),
        None => {
            let p = PathBuf::from(spec);
            let stem = p.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
            (stem, p)
        }
    };
    let label: PositionLabel = label
        .parse()
        .map_err(|_| infeasible(format!("missing label for {spec}: use LABEL=PATH or name the file after its label")))?;
    let samples = io::read_wrenches(open(&path)?).map_err(usage)?;
    Ok(WrenchDataset { label, samples })
}

fn cmd_payload(
    sc: &Scenario,
    synthetic: bool,
    files: &[String],
    proj_out: Option<&Path>,
    dump_dir: Option<&Path>,
    out: Out<'_>,
) -> Result<i32, Failure> {
    let geom = sc.geometry().map_err(usage)?;
    let datasets: Vec<WrenchDataset> = if synthetic {
        let mut rng = ChaCha8Rng::seed_from_u64(sc.seed());
        sc.synthetic_grid().generate(&geom, &mut rng).map_err(infeasible)?
    } else if files.is_empty() {
        return Err(usage("payload needs --synthetic or nine telemetry files"));
    } else {
        files.iter().map(|f| load_dataset(f)).collect::<Result<_, _>>()?
    };
    if let Some(dir) = dump_dir {
        std::fs::create_dir_all(dir).map_err(usage)?;
        for d in &datasets {
            let path = dir.join(format!("{}.csv", d.label));
            io::write_wrenches(&d.samples, sc.num("dt"), create(&path)?).map_err(usage)?;
        }
    }
    let model = PayloadModel::fit(&datasets).map_err(infeasible)?;
    let mut r = Report::new("payload", sc.name());
    for (c, name) in crate::types::Wrench::COMPONENTS.iter().enumerate() {
        r.metric(format!("importance_{name}"), model.pca.loadings_importance[c], "-", 4);
    }
    r.metric("explained_variance_pc1", model.pca.explained_variance[0], "-", 6);
    r.metric("explained_variance_pc2", model.pca.explained_variance[1], "-", 6);
    r.metric("min_centroid_spacing", model.min_spacing(), "-", 6);
    let rank = model.pca.importance_ranking();
    r.note(format!(
        "top components: {}, {}",
        crate::types::Wrench::COMPONENTS[rank[0]],
        crate::types::Wrench::COMPONENTS[rank[1]]
    ));
    if datasets.iter().all(|d| d.samples.len() >= 2) {
        let loo = leave_one_out(&datasets).map_err(infeasible)?;
        r.metric("loo_accuracy", loo.accuracy(), "-", 4);
        r.note(format!("leave-one-out: {}/{} correct", loo.correct, loo.total));
    } else {
        r.note("leave-one-out skipped: every dataset needs at least two samples");
    }
    for (label, p) in &model.centroids {
        r.note(format!("projection {label}: {} {}", io::fmt6(p[0]), io::fmt6(p[1])));
    }
    if let Some(p) = proj_out {
        io::write_projections(&model.centroids, create(p)?).map_err(usage)?;
    }
    emit(out, &r)?;
    Ok(0)
}

fn cmd_calibrate(sc: &Scenario, samples: Option<&Path>, out: Out<'_>) -> Result<i32, Failure> {
    let mut r = Report::new("calibrate", sc.name());
    if let Some(path) = samples {
        let data = io::read_calibration(open(path)?).map_err(usage)?;
        let fit = calibrate_gear_ratio(&data).map_err(infeasible)?;
        r.metric("slope", fit.slope, "deg/deg", 6);
        r.metric("intercept", fit.intercept, "deg", 6);
        r.metric("r_squared", fit.r_squared, "-", 6);
        r.metric("gear_ratio", fit.gear_ratio(), "-", 6);
        emit(out, &r)?;
        return Ok(0);
    }
    let geom = sc.geometry().map_err(usage)?;
    let axis = sc.calibrated_axis();
    let truth = match axis {
        crate::estimation::CalibratedAxis::Alpha => geom.g_a,
        crate::estimation::CalibratedAxis::Beta => geom.g_b,
    };
    let (runs, tol, sigma) = (sc.int("calib_runs") as usize, sc.num("calib_tolerance"), sc.num("calib_noise"));
    if runs == 0 {
        return Err(usage("calib_runs must be >= 1"));
    }
    let pose = sc.pose().map_err(usage)?;
    let mut rng = ChaCha8Rng::seed_from_u64(sc.seed());
    let mut within = 0usize;
    let mut sum = 0.0;
    for _ in 0..runs {
        let data = calibration_sweep(&pose, axis, &bench_angles(), sigma, &geom, &mut rng).map_err(infeasible)?;
        let g = calibrate_gear_ratio(&data).map_err(infeasible)?.gear_ratio();
        sum += g;
        if (g - truth).abs() < tol {
            within += 1;
        }
    }
    let frac = within as f64 / runs as f64;
    r.metric("true_gear_ratio", truth, "-", 6);
    r.metric("mean_gear_ratio", sum / runs as f64, "-", 6);
    r.metric("fraction_within_tolerance", frac, "-", 4);
    r.check("recovery", frac >= 0.95, format!("{within}/{runs} runs within ±{tol}"));
    emit(out, &r)?;
    Ok(0)
}

fn cmd_accuracy(sc: &Scenario, out: Out<'_>) -> Result<i32, Failure> {
    let geom = sc.geometry().map_err(usage)?;
    let pose = sc.pose().map_err(usage)?;
    let trials = sc.int("trials") as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(sc.seed());
    let mae = propagate_accuracy(&pose, sc.mover_noise(), trials, &geom, &mut rng).map_err(infeasible)?;
    let mut r = Report::new("accuracy", sc.name());
    for axis in Axis::ALL {
        r.metric(format!("mae_{}", axis.name()), mae[axis as usize], axis.unit(), 6);
    }
    let (a, b, g) = (mae[3], mae[4], mae[5]);
    r.check("gamma below alpha and beta", g < a && g < b, format!("gamma {g:.6} vs alpha {a:.6} / beta {b:.6}"));
    emit(out, &r)?;
    Ok(0)
}

fn cmd_dock(sc: &Scenario, traj_out: Option<&Path>, out: Out<'_>) -> Result<i32, Failure> {
    let ctx = sc.motion_context().map_err(usage)?;
    let tol = sc.dock_tolerance().map_err(usage)?;
    let station = sc.pose().map_err(usage)?;
    let approach = dock_trajectory(station, sc.num("approach_offset"), sc.opt_num("rail_heading"), &ctx)
        .map_err(infeasible)?;
    if let Some(p) = traj_out {
        io::write_trajectory(&approach, create(p)?).map_err(usage)?;
    }
    let err = AlignmentError::new(sc.num("error_pos"), sc.num("error_ang"));
    let cycles = sc.int("dock_cycles") as usize;
    let mut ok = 0;
    let mut retries = 0;
    emit(out, "cycle,t,from,to,diagnostic\n")?;
    for c in 0..cycles {
        let report = run_cycle(|| err, &tol, sc.int("max_retries") as usize, 0.1).map_err(infeasible)?;
        for e in &report.events {
            emit(out, format!("{},{e}\n", c + 1))?;
        }
        ok += usize::from(report.success());
        retries += report.retries;
    }
    let mut r = Report::new("dock", sc.name());
    r.metric("cycles", cycles as f64, "-", 0);
    r.metric("successful_cycles", ok as f64, "-", 0);
    r.metric("retries", retries as f64, "-", 0);
    r.metric("approach_duration", approach.duration(), "s", 3);
    r.check("success rate", ok == cycles, format!("{ok}/{cycles}"));
    emit(out, &r)?;
    Ok(0)
}

fn cmd_demo(sc: &Scenario, cycle_time: Option<f64>, out: Out<'_>) -> Result<i32, Failure> {
    let mut r = Report::new("demo", sc.name());
    let cycle = match cycle_time.or_else(|| sc.opt_num("cycle_time")) {
        Some(c) if c > 0.0 && c.is_finite() => {
            r.note("cycle time given, not computed");
            c
        }
        Some(c) => return Err(usage(format!("cycle time must be positive, got {c}"))),
        None => {
            let ctx = sc.motion_context().map_err(usage)?;
            let z = sc.num("demo_z");
            let pick = pose_from([sc.num("pick_x"), sc.num("pick_y"), z, 0.0, 0.0, 0.0])?;
            let place = pose_from([sc.num("place_x"), sc.num("place_y"), z, 0.0, 0.0, 0.0])?;
            let there = linear_move(pick, place, &ctx).map_err(infeasible)?;
            let back = linear_move(place, pick, &ctx).map_err(infeasible)?;
            let (dp, dd) = (sc.num("dwell_pick"), sc.num("dwell_place"));
            r.metric("move_time", there.duration(), "s", 3);
            r.metric("return_time", back.duration(), "s", 3);
            r.metric("dwell_time", dp + dd, "s", 3);
            dp + there.duration() + dd + back.duration()
        }
    };
    r.metric("cycle_time", cycle, "s", 3);
    r.metric("throughput", 60.0 / cycle, "products/min", 2);
    emit(out, &r)?;
    Ok(0)
}
