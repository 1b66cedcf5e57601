//! Repeated games with vector payoffs: approachability strategies, no-regret
//! learners, calibrated forecasters and the simulation engine that checks
//! their convergence rates.

pub mod approach;
pub mod calibration;
pub mod engine;
pub mod equilibria;
pub mod error;
pub mod geometry;
pub mod invariant;
pub mod regret;
pub mod suites;
pub mod zerosum;

pub use error::{Error, Result};
pub use geometry::{ConvexTarget, Grid, MixedAction};
