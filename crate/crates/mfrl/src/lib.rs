//! A search-and-matching labor market in which a learning firm can be
//! trained, diagnosed, and corrected. The crate solves the model's
//! theoretical steady state, exposes the two training environments (the
//! closed loop where the firm moves market tightness, and the mean-field
//! variant where tightness is frozen), implements the deterministic-policy-
//! gradient learner from scratch, and drives the calibrated mean-field
//! fixed-point iteration that aligns the learned policy with the
//! competitive equilibrium.
//!
//! Modules:
//!
//! - [`econ`]: closed-form model primitives (production, matching, wages,
//!   the employment flow law, flow profit).
//! - [`equilibrium`]: the steady-state solver, market-consistency helpers,
//!   the market-moving (monopsony) grid-search oracle, and value-iteration
//!   best responses used as learning-free references.
//! - [`neural`]: small dense networks with hand-written exact backprop,
//!   Adam, Polyak target tracking, and a finite-difference gradient checker.
//! - [`ddpg`]: replay buffer, actor-critic updates, and the episode loop.
//! - [`env`]: the two decision processes.
//! - [`mf_loop`]: effective-cost calibration, the damped (and, for cheap
//!   best responses, backtracking) field iteration, and contraction
//!   diagnostics.
//! - [`experiments`]: experiment commands, configuration resolution, output
//!   formats, and the learning-free verification suite.
//!
//! Runnable walkthroughs live in `examples/`; see the README for the
//! command-line interface.

pub mod ddpg;
pub mod econ;
pub mod env;
pub mod equilibrium;
pub mod error;
pub mod experiments;
pub mod mf_loop;
pub mod neural;

pub use error::{Error, Result};
