//! Planar physics-based manipulation planning for grasping in clutter.
//!
//! The crate is organised bottom-up:
//!
//! - [`world`]: states, controls, scenes and the scene file format.
//! - [`physics`]: the quasi-static planar pushing simulator used as the
//!   state-transition function for both planning and execution.
//! - [`cost`]: goal, disturbance, edge and acceleration cost terms.
//! - [`pbsto`]: the sampling-based stochastic trajectory optimizer.
//! - [`controllers`]: online re-planning (OR) and naive re-planning (NR).
//! - [`uncertainty`]: scene generation, planning-world perturbation and
//!   execution noise levels.
//! - [`harness`]: experiment sweeps, metrics, CSV/JSON output and SVG traces.

pub mod controllers;
pub mod cost;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod pbsto;
pub mod physics;
pub mod seed;
pub mod uncertainty;
pub mod world;

pub use error::{Error, Result};
