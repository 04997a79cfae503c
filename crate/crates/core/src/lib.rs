//! Finite-time motion planning for single-integrator multi-agent systems.
//!
//! Each kinetic agent descends a Lyapunov barrier function built against its
//! nearest neighbor. The barrier keeps agents at least `d_c` apart, and the
//! fractional-power feedback law drives each agent to its goal in finite time.
//!
//! * [`model`]: domain types and configuration validation.
//! * [`barrier`]: the barrier function, its gradients and stationary points.
//! * [`controller`]: the feedback law, Lyapunov rate and settling-time bound.
//! * [`world`]: boundary ring, nearest-neighbor sensing, scenarios.
//! * [`sim`]: explicit Euler closed loop with event recording.
//! * [`analysis`]: numerical audits of the above.

// Negated comparisons are how NaN inputs get rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod barrier;
pub mod controller;
pub mod error;
pub mod model;
pub mod sim;
pub mod world;

pub use error::{Error, Result};
pub use model::{AgentKind, AgentState, BarrierParams, ControlParams, RealVec, WorldConfig};
