//! Scenario files: `key = value` lines grouped in `[section]`s.
//!
//! Every key has a default, so an empty file is a valid scenario. Keys are
//! unique across sections; a key written before any section header is
//! filed under its own section.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::docking::DockTolerance;
use crate::estimation::{CalibratedAxis, MoverNoise, SyntheticGrid};
use crate::kinematics::anchored_pose;
use crate::simctrl::{LoadCase, PidParams, PlantParams};
use crate::trajectory::{MotionContext, MotionLimits};
use crate::types::{Axis, InvariantError, PlatformGeometry, Pose6D, TileGrid, WorkspaceLimits};

#[derive(Debug, Clone, PartialEq, Error)]
#[error("line {line}: {message}")]
pub struct ScenarioError {
    /// 1-based; 0 when the problem is not tied to a line.
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Kind {
    Num,
    /// Non-negative integer.
    Int,
    /// Number, or the word given as default meaning "derive it".
    NumOr(&'static str),
    Word(&'static [&'static str]),
    Text,
}

struct Key {
    section: &'static str,
    name: &'static str,
    kind: Kind,
    default: &'static str,
}

const fn key(section: &'static str, name: &'static str, kind: Kind, default: &'static str) -> Key {
    Key { section, name, kind, default }
}

const BOOL: Kind = Kind::Word(&["true", "false"]);

const KEYS: &[Key] = &[
    key("scenario", "name", Kind::Text, "default"),
    key("scenario", "seed", Kind::Int, "0"),
    key("geometry", "k", Kind::Num, "156"),
    key("geometry", "x_b", Kind::Num, "20"),
    key("geometry", "x_t", Kind::Num, "71"),
    key("geometry", "z_b", Kind::Num, "69.3"),
    key("geometry", "z_t", Kind::Num, "58.5"),
    key("geometry", "z_m", Kind::Num, "1"),
    key("geometry", "g_a", Kind::Num, "0.119"),
    key("geometry", "g_b", Kind::Num, "0.131"),
    key("geometry", "d_min", Kind::NumOr("auto"), "auto"),
    key("geometry", "d_max", Kind::NumOr("auto"), "auto"),
    key("grid", "nx", Kind::Int, "4"),
    key("grid", "ny", Kind::Int, "3"),
    key("grid", "tile_edge", Kind::Num, "240"),
    key("grid", "origin_x", Kind::Num, "0"),
    key("grid", "origin_y", Kind::Num, "0"),
    key("grid", "anchors", Kind::Text, "center"),
    key("limits", "z_min", Kind::Num, "205"),
    key("limits", "z_max", Kind::Num, "280"),
    key("limits", "alpha_min", Kind::Num, "-14"),
    key("limits", "alpha_max", Kind::Num, "14"),
    key("limits", "beta_min", Kind::Num, "-14"),
    key("limits", "beta_max", Kind::Num, "14"),
    key("limits", "gamma_min", Kind::Num, "-360"),
    key("limits", "gamma_max", Kind::Num, "360"),
    key("limits", "mover_gamma_local", Kind::Num, "10"),
    key("limits", "anchor_radius", Kind::Num, "5"),
    key("limits", "mover_half_extent", Kind::Num, "77.5"),
    key("motion", "v_max", Kind::Num, "2000"),
    key("motion", "a_max", Kind::Num, "10000"),
    key("motion", "w_max", Kind::Num, "360"),
    key("motion", "dt", Kind::Num, "0.001"),
    key("pose", "x", Kind::Num, "480"),
    key("pose", "y", Kind::Num, "360"),
    key("pose", "z", Kind::Num, "242.5"),
    key("pose", "alpha", Kind::Num, "0"),
    key("pose", "beta", Kind::Num, "0"),
    key("pose", "gamma", Kind::Num, "0"),
    key("traj", "kind", Kind::Word(&["sweep", "circle", "helix", "cos_sin"]), "helix"),
    key("traj", "axis", Kind::Word(&["x", "y", "z", "alpha", "beta", "gamma"]), "z"),
    key("traj", "reps", Kind::Int, "1"),
    key("traj", "range_min", Kind::NumOr("none"), "none"),
    key("traj", "range_max", Kind::NumOr("none"), "none"),
    key("traj", "at_anchor", BOOL, "false"),
    key("traj", "radius", Kind::Num, "100"),
    key("traj", "z_amp", Kind::Num, "30"),
    key("traj", "cycles", Kind::Int, "1"),
    key("traj", "r0", Kind::Num, "20"),
    key("traj", "r_growth", Kind::Num, "30"),
    key("traj", "z0", Kind::Num, "210"),
    key("traj", "z1", Kind::Num, "270"),
    key("traj", "turns", Kind::Num, "3"),
    key("traj", "amp_a", Kind::Num, "10"),
    key("traj", "amp_b", Kind::Num, "10"),
    key("sim", "pid_set", Kind::Int, "2"),
    key("sim", "kp", Kind::NumOr("preset"), "preset"),
    key("sim", "tn", Kind::NumOr("preset"), "preset"),
    key("sim", "tv", Kind::NumOr("preset"), "preset"),
    key("sim", "t1", Kind::NumOr("preset"), "preset"),
    key("sim", "inertia", Kind::Num, "3000"),
    key("sim", "damping", Kind::Num, "0.01"),
    key("sim", "disturbance_torque", Kind::Num, "0"),
    key("sim", "sim_dt", Kind::Num, "0.001"),
    key("sim", "load_arm", Kind::Num, "2"),
    key("sim", "windup_factor", Kind::Num, "10"),
    key("sim", "duration", Kind::Num, "2"),
    key("sim", "window", Kind::Num, "0.5"),
    key("sim", "magbot_mass", Kind::Num, "1.09"),
    key("sim", "payload_mass", Kind::Num, "1"),
    key("sim", "payload_x", Kind::Num, "0"),
    key("sim", "payload_y", Kind::Num, "0"),
    key("sim", "platform_half_length", Kind::Num, "100"),
    key("payload", "grid_mass", Kind::Num, "0.5"),
    key("payload", "grid_offset", Kind::Num, "60"),
    key("payload", "grid_z", Kind::Num, "205"),
    key("payload", "samples", Kind::Int, "20"),
    key("payload", "wrench_noise", Kind::Num, "0"),
    key("calibrate", "calib_axis", Kind::Word(&["alpha", "beta"]), "alpha"),
    key("calibrate", "calib_noise", Kind::Num, "0.2"),
    key("calibrate", "calib_runs", Kind::Int, "1000"),
    key("calibrate", "calib_tolerance", Kind::Num, "0.005"),
    key("accuracy", "sigma_xy", Kind::Num, "0.05"),
    key("accuracy", "sigma_gamma", Kind::Num, "0.05"),
    key("accuracy", "trials", Kind::Int, "10000"),
    key("dock", "pos_tol", Kind::Num, "0.5"),
    key("dock", "ang_tol", Kind::Num, "0.5"),
    key("dock", "approach_offset", Kind::Num, "50"),
    key("dock", "rail_heading", Kind::NumOr("station"), "station"),
    key("dock", "dock_cycles", Kind::Int, "10"),
    key("dock", "error_pos", Kind::Num, "0"),
    key("dock", "error_ang", Kind::Num, "0"),
    key("dock", "max_retries", Kind::Int, "3"),
    key("demo", "pick_x", Kind::Num, "330"),
    key("demo", "pick_y", Kind::Num, "360"),
    key("demo", "place_x", Kind::Num, "630"),
    key("demo", "place_y", Kind::Num, "360"),
    key("demo", "demo_z", Kind::Num, "260"),
    key("demo", "dwell_pick", Kind::Num, "0.5"),
    key("demo", "dwell_place", Kind::Num, "0.5"),
    key("demo", "cycle_time", Kind::NumOr("none"), "none"),
];

fn lookup(name: &str) -> Option<&'static Key> {
    KEYS.iter().find(|k| k.name == name)
}

fn sections() -> Vec<&'static str> {
    let mut out: Vec<&'static str> = Vec::new();
    for k in KEYS {
        if !out.contains(&k.section) {
            out.push(k.section);
        }
    }
    out
}

fn check_value(key: &Key, raw: &str) -> Result<String, String> {
    let raw = raw.trim();
    let num = |s: &str| -> Result<f64, String> {
        match s.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(format!("{} expects a number, got {s:?}", key.name)),
        }
    };
    match key.kind {
        Kind::Num => num(raw).map(|v| v.to_string()),
        Kind::Int => raw
            .parse::<u64>()
            .map(|v| v.to_string())
            .map_err(|_| format!("{} expects a non-negative integer, got {raw:?}", key.name)),
        Kind::NumOr(word) if raw == word => Ok(raw.to_string()),
        Kind::NumOr(word) => num(raw)
            .map(|v| v.to_string())
            .map_err(|e| format!("{e} or {word:?}")),
        Kind::Word(allowed) if allowed.contains(&raw) => Ok(raw.to_string()),
        Kind::Word(allowed) => Err(format!("{} must be one of {}, got {raw:?}", key.name, allowed.join("|"))),
        Kind::Text if raw.is_empty() => Err(format!("{} must not be empty", key.name)),
        Kind::Text => Ok(raw.to_string()),
    }
}

/// Parsed scenario. Values are kept normalized as text; typed views are
/// built on demand and were all checked once during parsing.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    values: BTreeMap<&'static str, String>,
    lines: BTreeMap<&'static str, usize>,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            values: KEYS.iter().map(|k| (k.name, k.default.to_string())).collect(),
            lines: BTreeMap::new(),
        }
    }
}

pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let mut sc = Scenario::default();
    let mut section: Option<String> = None;
    for (idx, raw_line) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw_line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| ScenarioError { line, message: format!("malformed section header {content:?}") })?
                .trim();
            if !sections().contains(&name) {
                return Err(ScenarioError { line, message: format!("unknown section [{name}]") });
            }
            section = Some(name.to_string());
            continue;
        }
        let (k, v) = content
            .split_once('=')
            .ok_or_else(|| ScenarioError { line, message: format!("expected `key = value`, got {content:?}") })?;
        sc.set_at(k.trim(), v, section.as_deref(), line)?;
    }
    sc.check()?;
    Ok(sc)
}

impl Scenario {
    fn set_at(&mut self, name: &str, value: &str, section: Option<&str>, line: usize) -> Result<(), ScenarioError> {
        let key = lookup(name).ok_or_else(|| ScenarioError { line, message: format!("unknown key {name:?}") })?;
        if let Some(s) = section {
            if s != key.section {
                return Err(ScenarioError {
                    line,
                    message: format!("key {name:?} belongs in [{}], not [{s}]", key.section),
                });
            }
        }
        let v = check_value(key, value).map_err(|message| ScenarioError { line, message })?;
        self.values.insert(key.name, v);
        self.lines.insert(key.name, line);
        Ok(())
    }

    /// Applies a `key=value` override, then rechecks the whole scenario.
    pub fn set(&mut self, assignment: &str) -> Result<(), ScenarioError> {
        let (k, v) = assignment.split_once('=').ok_or_else(|| ScenarioError {
            line: 0,
            message: format!("expected key=value, got {assignment:?}"),
        })?;
        self.set_at(k.trim(), v, None, 0)?;
        self.check()
    }

    /// Writes every key, grouped by section. Parsing the result gives back
    /// an equal scenario.
    pub fn emit(&self) -> String {
        let mut out = String::new();
        for (i, section) in sections().into_iter().enumerate() {
            if i > 0 {
                out.push('\n');
            }
            let _ = writeln!(out, "[{section}]");
            for k in KEYS.iter().filter(|k| k.section == section) {
                let _ = writeln!(out, "{} = {}", k.name, self.values[k.name]);
            }
        }
        out
    }

    fn raw(&self, name: &str) -> &str {
        &self.values[name]
    }

    pub fn num(&self, name: &str) -> f64 {
        self.raw(name).parse().unwrap_or(f64::NAN)
    }

    /// Numeric value, or `None` when the key holds its keyword.
    pub fn opt_num(&self, name: &str) -> Option<f64> {
        self.raw(name).parse().ok()
    }

    pub fn int(&self, name: &str) -> u64 {
        self.raw(name).parse().unwrap_or(0)
    }

    pub fn word(&self, name: &str) -> &str {
        self.raw(name)
    }

    pub fn name(&self) -> &str {
        self.raw("name")
    }

    pub fn seed(&self) -> u64 {
        self.int("seed")
    }

    fn fail(&self, field: &str, message: String) -> ScenarioError {
        let line = lookup(field)
            .and_then(|k| self.lines.get(k.name))
            .copied()
            .or_else(|| self.lines.values().copied().max())
            .unwrap_or(0);
        ScenarioError { line, message }
    }

    fn invariant(&self, e: InvariantError) -> ScenarioError {
        let field = match &e {
            InvariantError::NotFinite { field, .. } | InvariantError::Violated { field, .. } => field.to_string(),
        };
        self.fail(&field, e.to_string())
    }

    /// Builds every typed view once so that a parsed scenario is usable
    /// by every command.
    fn check(&self) -> Result<(), ScenarioError> {
        self.geometry()?;
        self.workspace_limits()?;
        self.grid()?;
        self.motion_context()?;
        self.pose()?;
        self.pid()?;
        let plant = self.plant();
        plant.validate().map_err(|e| self.fail(sim_field(&e), e.to_string()))?;
        self.load_case()?;
        self.dock_tolerance()?;
        for name in ["dwell_pick", "dwell_place", "approach_offset", "wrench_noise", "calib_noise", "sigma_xy", "sigma_gamma"] {
            if self.num(name) < 0.0 {
                return Err(self.fail(name, format!("{name} must be >= 0")));
            }
        }
        for name in ["duration", "window"] {
            if !(self.num(name) > 0.0) {
                return Err(self.fail(name, format!("{name} must be positive")));
            }
        }
        if let Some(c) = self.opt_num("cycle_time") {
            if !(c > 0.0) {
                return Err(self.fail("cycle_time", "cycle_time must be positive".into()));
            }
        }
        if self.int("pid_set") > 2 {
            return Err(self.fail("pid_set", "pid_set must be 0, 1 or 2".into()));
        }
        Ok(())
    }

    pub fn geometry(&self) -> Result<PlatformGeometry, ScenarioError> {
        let mut g = PlatformGeometry {
            k: self.num("k"),
            x_b: self.num("x_b"),
            x_t: self.num("x_t"),
            z_b: self.num("z_b"),
            z_t: self.num("z_t"),
            z_m: self.num("z_m"),
            g_a: self.num("g_a"),
            g_b: self.num("g_b"),
            ..PlatformGeometry::default()
        };
        let base = g;
        let derive = |z: f64, name: &str| {
            let d = base.distance_at_height(z);
            if d.is_finite() {
                Ok(d)
            } else {
                Err(self.fail(name, format!("cannot derive {name}: z = {z} is out of reach of the legs")))
            }
        };
        g.d_min = match self.opt_num("d_min") {
            Some(v) => v,
            None => derive(self.num("z_max"), "d_min")?,
        };
        g.d_max = match self.opt_num("d_max") {
            Some(v) => v,
            None => derive(self.num("z_min"), "d_max")?,
        };
        g.validate().map_err(|e| self.invariant(e))?;
        Ok(g)
    }

    pub fn workspace_limits(&self) -> Result<WorkspaceLimits, ScenarioError> {
        let l = WorkspaceLimits {
            z_range: (self.num("z_min"), self.num("z_max")),
            alpha_range: (self.num("alpha_min"), self.num("alpha_max")),
            beta_range: (self.num("beta_min"), self.num("beta_max")),
            gamma_range: (self.num("gamma_min"), self.num("gamma_max")),
            mover_gamma_local: self.num("mover_gamma_local"),
            anchor_radius: self.num("anchor_radius"),
            mover_half_extent: self.num("mover_half_extent"),
        };
        l.validate().map_err(|e| self.invariant(e))?;
        Ok(l)
    }

    pub fn grid(&self) -> Result<TileGrid, ScenarioError> {
        let (nx, ny) = (self.int("nx") as u32, self.int("ny") as u32);
        let mut grid = TileGrid::with_center_anchors(nx, ny, self.num("tile_edge"));
        grid.anchors = match self.word("anchors") {
            "center" => grid.anchors,
            "none" => Vec::new(),
            list => list
                .split_whitespace()
                .map(|pair| {
                    let parsed = pair
                        .split_once(':')
                        .and_then(|(x, y)| Some((x.parse::<f64>().ok()?, y.parse::<f64>().ok()?)));
                    parsed.ok_or_else(|| {
                        self.fail("anchors", format!("anchors: expected center, none or x:y pairs, got {pair:?}"))
                    })
                })
                .collect::<Result<_, _>>()?,
        };
        let grid = grid.translated(self.num("origin_x"), self.num("origin_y"));
        grid.validate().map_err(|e| self.invariant(e))?;
        Ok(grid)
    }

    pub fn motion_limits(&self) -> MotionLimits {
        MotionLimits { v_max: self.num("v_max"), a_max: self.num("a_max"), w_max: self.num("w_max") }
    }

    pub fn motion_context(&self) -> Result<MotionContext, ScenarioError> {
        let ctx = MotionContext {
            geom: self.geometry()?,
            limits: self.workspace_limits()?,
            grid: self.grid()?,
            motion: self.motion_limits(),
            dt: self.num("dt"),
        };
        ctx.motion.validate().map_err(|e| self.fail("v_max", e.to_string()))?;
        if !(ctx.dt > 0.0) {
            return Err(self.fail("dt", "dt must be positive".into()));
        }
        Ok(ctx)
    }

    pub fn pose(&self) -> Result<Pose6D, ScenarioError> {
        Pose6D::new(
            self.num("x"),
            self.num("y"),
            self.num("z"),
            self.num("alpha"),
            self.num("beta"),
            self.num("gamma"),
        )
        .map_err(|e| self.invariant(e))
    }

    /// The scenario pose, or with `at_anchor` the level pose on the anchor
    /// pair whose midpoint is closest to it.
    pub fn traj_center(&self) -> Result<Pose6D, ScenarioError> {
        let pose = self.pose()?;
        if self.word("at_anchor") != "true" {
            return Ok(pose);
        }
        let geom = self.geometry()?;
        let grid = self.grid()?;
        let best = grid
            .anchor_pairs(geom.d_min, geom.d_max)
            .into_iter()
            .min_by(|(a1, b1), (a2, b2)| {
                let d = |a: &(f64, f64), b: &(f64, f64)| {
                    (0.5 * (a.0 + b.0) - pose.x).hypot(0.5 * (a.1 + b.1) - pose.y)
                };
                d(a1, b1).total_cmp(&d(a2, b2))
            })
            .ok_or_else(|| self.fail("at_anchor", "no anchor pair is within the mover distance range".into()))?;
        let anchored =
            anchored_pose(best.0, best.1, &geom).map_err(|e| self.fail("at_anchor", e.to_string()))?;
        Ok(Pose6D { alpha: pose.alpha, beta: pose.beta, ..anchored })
    }

    pub fn axis(&self) -> Axis {
        self.word("axis").parse().unwrap_or(Axis::Z)
    }

    pub fn sweep_range(&self) -> Option<(f64, f64)> {
        Some((self.opt_num("range_min")?, self.opt_num("range_max")?))
    }

    pub fn pid(&self) -> Result<PidParams, ScenarioError> {
        let base = PidParams::preset(self.int("pid_set") as u8)
            .ok_or_else(|| self.fail("pid_set", "pid_set must be 0, 1 or 2".into()))?;
        let pid = PidParams {
            kp: self.opt_num("kp").unwrap_or(base.kp),
            tn: self.opt_num("tn").unwrap_or(base.tn),
            tv: self.opt_num("tv").unwrap_or(base.tv),
            t1: self.opt_num("t1").unwrap_or(base.t1),
            ..base
        };
        pid.validate().map_err(|e| self.fail(sim_field(&e), e.to_string()))?;
        Ok(pid)
    }

    pub fn plant(&self) -> PlantParams {
        PlantParams {
            inertia: self.num("inertia"),
            damping: self.num("damping"),
            disturbance_torque: self.num("disturbance_torque"),
            dt: self.num("sim_dt"),
            load_arm: self.num("load_arm"),
            windup_factor: self.num("windup_factor"),
        }
    }

    pub fn load_case(&self) -> Result<LoadCase, ScenarioError> {
        let load = LoadCase {
            magbot_mass: self.num("magbot_mass"),
            payload_mass: self.num("payload_mass"),
            payload_x: self.num("payload_x"),
            payload_y: self.num("payload_y"),
        };
        load.validate(self.num("platform_half_length"))
            .map_err(|e| self.fail(sim_field(&e), e.to_string()))?;
        Ok(load)
    }

    pub fn synthetic_grid(&self) -> SyntheticGrid {
        SyntheticGrid {
            pose: Pose6D { x: self.num("x"), y: self.num("y"), z: self.num("grid_z"), alpha: 0.0, beta: 0.0, gamma: 0.0 },
            payload_mass: self.num("grid_mass"),
            magbot_mass: self.num("magbot_mass"),
            offset: self.num("grid_offset"),
            samples_per_cell: self.int("samples") as usize,
            noise_sigma: self.num("wrench_noise"),
        }
    }

    pub fn calibrated_axis(&self) -> CalibratedAxis {
        if self.word("calib_axis") == "beta" { CalibratedAxis::Beta } else { CalibratedAxis::Alpha }
    }

    pub fn mover_noise(&self) -> MoverNoise {
        MoverNoise { sigma_xy: self.num("sigma_xy"), sigma_gamma: self.num("sigma_gamma") }
    }

    pub fn dock_tolerance(&self) -> Result<DockTolerance, ScenarioError> {
        let tol = DockTolerance { pos_tol: self.num("pos_tol"), ang_tol: self.num("ang_tol") };
        tol.validate().map_err(|e| self.fail("pos_tol", e.to_string()))?;
        Ok(tol)
    }
}

fn sim_field(e: &crate::simctrl::SimError) -> &'static str {
    match e {
        crate::simctrl::SimError::InvalidParam { name, .. } => match *name {
            "dt" => "sim_dt",
            other => other,
        },
        _ => "duration",
    }
}
