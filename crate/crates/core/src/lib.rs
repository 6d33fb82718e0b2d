//! Bloch-vector simulation of a driven, dissipative two-level atom under
//! Markovian jump feedback, and the geometric phase of its nonunitary
//! evolution.
//!
//! - [`model`]: states, the feedback unitary, the rotating drive and the
//!   affine Bloch equation `dp/dt = M(t) p + c`.
//! - [`integrator`]: fixed-step RK4 over one field cycle.
//! - [`gphase`]: eigenframe tracking and the geometric phase.
//! - [`oracle`]: independent density-matrix and Schrodinger references.
//! - [`sweep`]: parameter grids, parallel with the `parallel` feature.
//! - [`verify`]: randomised oracle cross-checks.

pub mod gphase;
pub mod integrator;
pub mod model;
pub mod oracle;
pub mod sweep;
pub mod verify;

pub use gphase::{evolve_phase, geometric_phase, PhaseError, PhaseResult};
pub use integrator::{integrate, IntegrationError, Trajectory};
pub use model::{BlochState, DriftSystem, DriveField, FeedbackControl, SimParams};
pub use sweep::{run_sweep, SweepGrid, SweepSpec};

/// Version string echoed into output metadata.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
