//! Kinematics, motion generation, levitation-control simulation and wrench
//! analytics for a 6-DoF platform carried by two planar maglev movers.
//!
//! Everything is expressed in millimeters and degrees unless a type says
//! otherwise.

pub mod cli;
pub mod docking;
pub mod estimation;
pub mod kinematics;
pub mod simctrl;
pub mod trajectory;
pub mod types;

pub use kinematics::{
    check_workspace, forward_kinematics, inverse_kinematics, mover_distance, platform_height,
    MoverPair, WorkspaceReport,
};
pub use types::{
    default_geometry, normalize_angle, Axis, MoverState, PlatformGeometry, Pose6D, TileGrid,
    WorkspaceLimits, Wrench,
};
