//! Numerical laboratory for two coupled KdV/ODE cascade systems with
//! separated time scales: semi-discrete operators, monolithic implicit
//! integration, Lyapunov functional evaluation, spectral stability
//! classification, and Tikhonov-approximation epsilon sweeps.

pub mod banded;
pub mod config;
pub mod critical;
pub mod error;
pub mod exec;
pub mod experiments;
pub mod integrator;
pub mod lyapunov;
pub mod model;
pub mod operator;
pub mod profiles;
pub mod spectral;
pub mod verify;

pub use config::RunConfig;
pub use error::{Error, Result};
pub use model::{CoupledState, Disturbance, Grid, Regime, SystemParams, Trajectory};
