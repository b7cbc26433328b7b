//! Attraction-repulsion Neyman-Scott point process: simulation, Bayesian
//! fitting by double Metropolis-Hastings, spatial diagnostics, and risk maps.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod diagnostics;
pub mod error;
pub mod geometry;
pub mod ingest;
pub mod io;
pub mod model;
pub mod risk;
pub mod samplers;
pub mod simulation;

pub use error::{Error, Result};
pub use geometry::{Point, PointPattern, Window};
pub use model::{ModelParams, PriorSpec};
