//! Transient response of a generating station coupled to a finite-inertia grid.
//!
//! The two-machine system reduces to a driven damped pendulum
//! `delta'' + beta delta' + zeta_ii sin(delta) = tau` for the rotor angle
//! `delta = theta_grid - theta_gen`. The response to a step in the coupling
//! strength is computed three ways:
//!
//! * [`eigen`]: eigen-decomposition of the truncated relaxation hierarchy,
//! * [`mcf`]: matrix continued fractions for the spectrum,
//! * [`oracle`]: direct numerical integration of the pendulum or of the full
//!   machine set.
//!
//! [`characteristics`] extracts oscillation frequencies and relaxation times.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod characteristics;
pub mod eigen;
pub mod error;
pub mod hierarchy;
pub mod mcf;
pub mod model;
pub mod oracle;
pub mod scalar;
pub mod special;
pub mod trajectory;

pub use error::{Error, Result};
pub use hierarchy::{assemble_blocks, HierarchyBlocks, Truncation};
pub use model::{InertiaRatio, ModelKind, PendulumParams, Phase, StationScenario};
pub use scalar::Real;
pub use trajectory::Trajectory;

pub type StationScenarioF64 = StationScenario<f64>;
pub type StationScenarioF32 = StationScenario<f32>;
pub type PendulumParamsF64 = PendulumParams<f64>;
pub type PendulumParamsF32 = PendulumParams<f32>;
pub type TrajectoryF64 = Trajectory<f64>;
pub type TrajectoryF32 = Trajectory<f32>;
pub type HierarchyBlocksF64 = HierarchyBlocks<f64>;
pub type HierarchyBlocksF32 = HierarchyBlocks<f32>;
