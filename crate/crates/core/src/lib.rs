//! Multiple-level transmit-power policies for a cognitive-radio secondary user.
//!
//! The secondary transmitter senses the primary band for `τ` seconds, maps the
//! accumulated energy to one of `M` power levels and transmits for the rest
//! of the frame. This crate designs the energy intervals and power levels that
//! maximize the average secondary rate under an average transmit-power budget
//! and an average interference budget at the primary receiver, and checks the
//! resulting analytic figures with a frame-level Monte Carlo simulator.
//!
//! Module map:
//! - [`scenario`]: physical parameters and config ingestion
//! - [`statistics`]: Gamma laws of the energy statistic, incomplete gamma machinery
//! - [`partition`]: per-energy scores and optimal interval design
//! - [`allocation`]: closed-form powers and the dual problem
//! - [`optimizer`]: alternating optimization, sensing-time search, baselines
//! - [`montecarlo`]: frame-level simulation

// NaN must fail range checks, which `!(x > 0.0)` expresses directly
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod allocation;
pub mod error;
pub mod montecarlo;
pub mod optimizer;
pub mod partition;
pub mod scenario;
pub mod statistics;

pub use error::{Error, Result};
