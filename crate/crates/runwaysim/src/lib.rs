//! Simulation engine and policy suite for stochastic single-runway arrival
//! sequencing. Flights approach the runway with Brownian-motion ETAs, landing
//! separations are Erlang-distributed and weather changepoints stretch them;
//! four sequencing policies (a simulation-based population heuristic, its
//! expected-value twin, FCFS and a static local-search sequence) are compared
//! under a reproducible experiment harness.

pub mod calibration;
pub mod engine;
pub mod error;
pub mod harness;
pub mod model;
pub mod paths;
pub mod policies;

pub use error::{Error, Result};
