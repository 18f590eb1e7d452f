//! Asynchronous gradient-push (AGP) and asynchronous perturbed push-sum over
//! directed graphs with bounded processing and message delays.
//!
//! The crate is organised bottom-up:
//!
//! - [`topology`]: reference digraphs, delay-augmented graphs and the
//!   column-stochastic consensus matrices acting on the augmented state.
//! - [`schedule`]: activation sets and message delays per time index, with
//!   bound verification and a line-oriented text format.
//! - [`pushsum`]: the perturbed push-sum engine and rate fitting.
//! - [`objectives`]: strongly convex local objectives and synthetic data.
//! - [`agp`]: the optimizer, in matrix form and in per-agent buffer form.
//! - [`analysis`]: re-weighted objective, asynchrony bias and rate diagnostics.
//! - [`runtime`]: a threaded backend with real send/receive queues.

pub mod agp;
pub mod analysis;
mod error;
pub mod linalg;
pub mod objectives;
pub mod pushsum;
pub mod runtime;
pub mod schedule;
pub mod topology;

pub use error::{Error, Result};
pub use nalgebra;
