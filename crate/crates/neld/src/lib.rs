//! Nonequilibrium Langevin dynamics (NELD) under planar flows with
//! automorphism-remapped periodic boundary conditions, plus the estimators
//! used to verify convergence of the dynamics to a periodic steady state.
//!
//! The crate is organized around the pipeline:
//! [`flow`] (background flows and deforming cells) -> [`remap`] (coordinate
//! maps between frames) -> [`potential`] (cell-periodic forces) ->
//! [`dynamics`] (SDE integration and period-sampled chains) ->
//! [`analysis`] (drift, limit-cycle, and convergence diagnostics).

pub mod analysis;
pub mod cli;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod flow;
pub mod output;
pub mod potential;
pub mod remap;
pub mod rng;

pub use error::{NeldError, Result};
