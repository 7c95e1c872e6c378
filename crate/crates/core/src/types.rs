//! Shared value types: poses, mover states, platform geometry, workspace
//! limits, the tile grid and wrenches.
//!
//! Lengths are millimeters and angles are degrees on every public surface.
//! Radians only appear transiently inside trigonometric evaluation.

use std::fmt;
use std::ops::{Add, Mul, Sub};
use std::str::FromStr;

use thiserror::Error;

/// Standard gravity in m/s² (equivalently N/kg).
pub const GRAVITY: f64 = 9.81;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InvariantError {
    #[error("{field} must be finite, got {value}")]
    NotFinite { field: &'static str, value: f64 },
    #[error("{field} = {value} violates {rule}")]
    Violated {
        field: &'static str,
        value: f64,
        rule: &'static str,
    },
}

fn finite(field: &'static str, value: f64) -> Result<f64, InvariantError> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(InvariantError::NotFinite { field, value })
    }
}

fn require(
    ok: bool,
    field: &'static str,
    value: f64,
    rule: &'static str,
) -> Result<(), InvariantError> {
    if ok {
        Ok(())
    } else {
        Err(InvariantError::Violated { field, value, rule })
    }
}

/// Wraps an angle into (-180, 180].
pub fn normalize_angle(deg: f64) -> Result<f64, InvariantError> {
    let deg = finite("angle", deg)?;
    let mut a = deg.rem_euclid(360.0);
    if a > 180.0 {
        a -= 360.0;
    }
    // rem_euclid can land exactly on 360.0 for tiny negative inputs
    if a <= -180.0 {
        a += 360.0;
    }
    Ok(a)
}

/// One of the six platform axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Axis {
    X,
    Y,
    Z,
    Alpha,
    Beta,
    Gamma,
}

impl Axis {
    pub const ALL: [Axis; 6] = [
        Axis::X,
        Axis::Y,
        Axis::Z,
        Axis::Alpha,
        Axis::Beta,
        Axis::Gamma,
    ];

    pub fn is_rotation(self) -> bool {
        matches!(self, Axis::Alpha | Axis::Beta | Axis::Gamma)
    }

    pub fn unit(self) -> &'static str {
        if self.is_rotation() {
            "deg"
        } else {
            "mm"
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
            Axis::Alpha => "alpha",
            Axis::Beta => "beta",
            Axis::Gamma => "gamma",
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Axis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "x" => Ok(Axis::X),
            "y" => Ok(Axis::Y),
            "z" => Ok(Axis::Z),
            "alpha" | "a" => Ok(Axis::Alpha),
            "beta" | "b" => Ok(Axis::Beta),
            "gamma" | "g" => Ok(Axis::Gamma),
            other => Err(format!("unknown axis '{other}'")),
        }
    }
}

/// Platform pose. `gamma` is kept unwrapped so multi-turn rotations stay
/// continuous; call [`normalize_angle`] explicitly when a wrapped value is
/// wanted.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Pose6D {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl Pose6D {
    pub fn new(
        x: f64,
        y: f64,
        z: f64,
        alpha: f64,
        beta: f64,
        gamma: f64,
    ) -> Result<Self, InvariantError> {
        let pose = Self {
            x,
            y,
            z,
            alpha,
            beta,
            gamma,
        };
        pose.validate()?;
        Ok(pose)
    }

    pub fn validate(&self) -> Result<(), InvariantError> {
        for axis in Axis::ALL {
            finite(axis.name(), self.get(axis))?;
        }
        require(self.z >= 0.0, "z", self.z, "z >= 0")
    }

    pub fn get(&self, axis: Axis) -> f64 {
        match axis {
            Axis::X => self.x,
            Axis::Y => self.y,
            Axis::Z => self.z,
            Axis::Alpha => self.alpha,
            Axis::Beta => self.beta,
            Axis::Gamma => self.gamma,
        }
    }

    pub fn with(mut self, axis: Axis, value: f64) -> Self {
        match axis {
            Axis::X => self.x = value,
            Axis::Y => self.y = value,
            Axis::Z => self.z = value,
            Axis::Alpha => self.alpha = value,
            Axis::Beta => self.beta = value,
            Axis::Gamma => self.gamma = value,
        }
        self
    }

    pub fn to_array(&self) -> [f64; 6] {
        [self.x, self.y, self.z, self.alpha, self.beta, self.gamma]
    }

    pub fn from_array(v: [f64; 6]) -> Self {
        Self {
            x: v[0],
            y: v[1],
            z: v[2],
            alpha: v[3],
            beta: v[4],
            gamma: v[5],
        }
    }
}

/// Planar command of one mover. A mover never tilts, so alpha and beta are
/// not stored at all.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MoverState {
    pub x: f64,
    pub y: f64,
    /// Flight altitude above the tile surface.
    pub z: f64,
    pub gamma: f64,
}

impl MoverState {
    pub fn new(x: f64, y: f64, z: f64, gamma: f64) -> Result<Self, InvariantError> {
        let m = Self { x, y, z, gamma };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<(), InvariantError> {
        finite("mover x", self.x)?;
        finite("mover y", self.y)?;
        finite("mover z", self.z)?;
        finite("mover gamma", self.gamma)?;
        require(self.z > 0.0, "mover z", self.z, "flight altitude > 0")
    }

    pub fn alpha(&self) -> f64 {
        0.0
    }

    pub fn beta(&self) -> f64 {
        0.0
    }

    pub fn planar_distance(&self, other: &MoverState) -> f64 {
        (other.x - self.x).hypot(other.y - self.y)
    }
}

/// Mechanism constants of the two-mover platform.
///
/// `g_a` and `g_b` are platform rotation per unit mover rotation, so the
/// mover command for a platform tilt is `-alpha / g_a`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlatformGeometry {
    /// Leg length.
    pub k: f64,
    pub x_b: f64,
    pub x_t: f64,
    pub z_b: f64,
    pub z_t: f64,
    /// Mover flight altitude.
    pub z_m: f64,
    pub g_a: f64,
    pub g_b: f64,
    pub d_min: f64,
    pub d_max: f64,
}

impl Default for PlatformGeometry {
    fn default() -> Self {
        default_geometry()
    }
}

/// Prototype constants. The mover-distance limits are the distances that
/// realize the platform height interval [205, 280] mm.
pub fn default_geometry() -> PlatformGeometry {
    let mut geom = PlatformGeometry {
        k: 156.0,
        x_b: 20.0,
        x_t: 71.0,
        z_b: 69.3,
        z_t: 58.5,
        z_m: 1.0,
        g_a: 0.119,
        g_b: 0.131,
        d_min: 0.0,
        d_max: 0.0,
    };
    geom.d_min = geom.distance_at_height(280.0);
    geom.d_max = geom.distance_at_height(205.0);
    geom
}

impl PlatformGeometry {
    /// Height of the lower leg joints: z_m + z_b + z_t.
    pub fn joint_stack(&self) -> f64 {
        self.z_m + self.z_b + self.z_t
    }

    /// Fixed horizontal offset x_b + x_t between a mover and the platform
    /// center that is not bridged by the legs.
    pub fn fixed_offset(&self) -> f64 {
        self.x_b + self.x_t
    }

    /// Unchecked closed form; `kinematics::mover_distance` adds the domain
    /// check.
    pub(crate) fn distance_at_height(&self, z_p: f64) -> f64 {
        let h = z_p - self.joint_stack();
        2.0 * (self.fixed_offset() + (self.k * self.k - h * h).sqrt())
    }

    pub fn validate(&self) -> Result<(), InvariantError> {
        for (name, v) in [
            ("k", self.k),
            ("x_b", self.x_b),
            ("x_t", self.x_t),
            ("z_b", self.z_b),
            ("z_t", self.z_t),
            ("z_m", self.z_m),
            ("g_a", self.g_a),
            ("g_b", self.g_b),
            ("d_min", self.d_min),
            ("d_max", self.d_max),
        ] {
            finite(name, v)?;
        }
        require(self.k > 0.0, "k", self.k, "k > 0")?;
        require(self.z_m > 0.0, "z_m", self.z_m, "z_m > 0")?;
        require(self.g_a != 0.0, "g_a", self.g_a, "g_a != 0")?;
        require(self.g_b != 0.0, "g_b", self.g_b, "g_b != 0")?;
        require(self.d_min > 0.0, "d_min", self.d_min, "d_min > 0")?;
        require(self.d_min < self.d_max, "d_max", self.d_max, "d_min < d_max")?;
        let reach = 2.0 * (self.fixed_offset() + self.k);
        require(
            self.d_max <= reach,
            "d_max",
            self.d_max,
            "d_max <= 2(x_b + x_t + k)",
        )
    }
}

/// Allowed platform ranges plus the mover-level rotation restriction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorkspaceLimits {
    pub z_range: (f64, f64),
    pub alpha_range: (f64, f64),
    pub beta_range: (f64, f64),
    pub gamma_range: (f64, f64),
    /// Mover gamma allowed away from full-rotation anchors.
    pub mover_gamma_local: f64,
    /// Distance from an anchor within which a mover may rotate freely.
    pub anchor_radius: f64,
    /// Half edge of the square mover footprint that must stay on the tiles.
    pub mover_half_extent: f64,
}

impl Default for WorkspaceLimits {
    fn default() -> Self {
        Self {
            z_range: (205.0, 280.0),
            alpha_range: (-14.0, 14.0),
            beta_range: (-14.0, 14.0),
            gamma_range: (-360.0, 360.0),
            mover_gamma_local: 10.0,
            anchor_radius: 5.0,
            mover_half_extent: 77.5,
        }
    }
}

impl WorkspaceLimits {
    pub fn range(&self, axis: Axis) -> Option<(f64, f64)> {
        match axis {
            Axis::Z => Some(self.z_range),
            Axis::Alpha => Some(self.alpha_range),
            Axis::Beta => Some(self.beta_range),
            Axis::Gamma => Some(self.gamma_range),
            Axis::X | Axis::Y => None,
        }
    }

    pub fn validate(&self) -> Result<(), InvariantError> {
        for (name, (lo, hi)) in [
            ("z_range", self.z_range),
            ("alpha_range", self.alpha_range),
            ("beta_range", self.beta_range),
            ("gamma_range", self.gamma_range),
        ] {
            finite(name, lo)?;
            finite(name, hi)?;
            require(lo <= hi, name, hi, "range min <= max")?;
        }
        require(
            self.mover_gamma_local >= 0.0,
            "mover_gamma_local",
            self.mover_gamma_local,
            ">= 0",
        )?;
        require(
            self.anchor_radius >= 0.0,
            "anchor_radius",
            self.anchor_radius,
            ">= 0",
        )?;
        require(
            self.mover_half_extent >= 0.0,
            "mover_half_extent",
            self.mover_half_extent,
            ">= 0",
        )
    }
}

/// Axis-aligned rectangle in the tile plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Rect {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x_min && x <= self.x_max && y >= self.y_min && y <= self.y_max
    }

    pub fn shrink(&self, margin: f64) -> Rect {
        Rect {
            x_min: self.x_min + margin,
            x_max: self.x_max - margin,
            y_min: self.y_min + margin,
            y_max: self.y_max - margin,
        }
    }
}

/// Stator tile layout.
#[derive(Debug, Clone, PartialEq)]
pub struct TileGrid {
    pub nx: u32,
    pub ny: u32,
    pub tile_edge: f64,
    /// Lower-left corner of the grid.
    pub origin: (f64, f64),
    /// Positions where movers may rotate a full turn.
    pub anchors: Vec<(f64, f64)>,
}

impl Default for TileGrid {
    fn default() -> Self {
        Self::with_center_anchors(4, 3, 240.0)
    }
}

impl TileGrid {
    /// Grid at the origin with one full-rotation anchor per tile center.
    pub fn with_center_anchors(nx: u32, ny: u32, tile_edge: f64) -> Self {
        let anchors = (0..ny)
            .flat_map(|j| {
                (0..nx).map(move |i| {
                    (
                        (i as f64 + 0.5) * tile_edge,
                        (j as f64 + 0.5) * tile_edge,
                    )
                })
            })
            .collect();
        Self {
            nx,
            ny,
            tile_edge,
            origin: (0.0, 0.0),
            anchors,
        }
    }

    pub fn bounds(&self) -> Rect {
        Rect {
            x_min: self.origin.0,
            x_max: self.origin.0 + self.nx as f64 * self.tile_edge,
            y_min: self.origin.1,
            y_max: self.origin.1 + self.ny as f64 * self.tile_edge,
        }
    }

    pub fn translated(&self, dx: f64, dy: f64) -> Self {
        Self {
            origin: (self.origin.0 + dx, self.origin.1 + dy),
            anchors: self.anchors.iter().map(|&(x, y)| (x + dx, y + dy)).collect(),
            ..self.clone()
        }
    }

    pub fn near_anchor(&self, x: f64, y: f64, radius: f64) -> bool {
        self.anchors
            .iter()
            .any(|&(ax, ay)| (ax - x).hypot(ay - y) <= radius)
    }

    /// Anchor pairs whose separation lies in `[d_min, d_max]`, i.e. places
    /// where both movers can rotate freely at once.
    pub fn anchor_pairs(&self, d_min: f64, d_max: f64) -> Vec<((f64, f64), (f64, f64))> {
        let mut pairs = Vec::new();
        for (i, a) in self.anchors.iter().enumerate() {
            for b in &self.anchors[i + 1..] {
                let d = (b.0 - a.0).hypot(b.1 - a.1);
                if d >= d_min && d <= d_max {
                    pairs.push((*a, *b));
                }
            }
        }
        pairs
    }

    pub fn validate(&self) -> Result<(), InvariantError> {
        require(self.nx >= 1, "nx", self.nx as f64, "nx >= 1")?;
        require(self.ny >= 1, "ny", self.ny as f64, "ny >= 1")?;
        finite("tile_edge", self.tile_edge)?;
        require(self.tile_edge > 0.0, "tile_edge", self.tile_edge, "> 0")?;
        finite("origin x", self.origin.0)?;
        finite("origin y", self.origin.1)?;
        Ok(())
    }
}

/// Force (N) and torque (N·m) applied to one mover by its levitation
/// controller.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Wrench {
    pub fx: f64,
    pub fy: f64,
    pub fz: f64,
    pub tx: f64,
    pub ty: f64,
    pub tz: f64,
}

impl Wrench {
    pub const COMPONENTS: [&'static str; 6] = ["fx", "fy", "fz", "tx", "ty", "tz"];

    pub fn to_array(&self) -> [f64; 6] {
        [self.fx, self.fy, self.fz, self.tx, self.ty, self.tz]
    }

    pub fn from_array(v: [f64; 6]) -> Self {
        Self {
            fx: v[0],
            fy: v[1],
            fz: v[2],
            tx: v[3],
            ty: v[4],
            tz: v[5],
        }
    }

    pub fn validate(&self) -> Result<(), InvariantError> {
        for (name, v) in Self::COMPONENTS.iter().zip(self.to_array()) {
            finite(name, v)?;
        }
        Ok(())
    }
}

impl Sub for Wrench {
    type Output = Wrench;

    fn sub(self, rhs: Wrench) -> Wrench {
        let (a, b) = (self.to_array(), rhs.to_array());
        Wrench::from_array(std::array::from_fn(|i| a[i] - b[i]))
    }
}

impl Add for Wrench {
    type Output = Wrench;

    fn add(self, rhs: Wrench) -> Wrench {
        let (a, b) = (self.to_array(), rhs.to_array());
        Wrench::from_array(std::array::from_fn(|i| a[i] + b[i]))
    }
}

impl Mul<f64> for Wrench {
    type Output = Wrench;

    fn mul(self, k: f64) -> Wrench {
        Wrench::from_array(self.to_array().map(|v| v * k))
    }
}
