//! Adaptive event-triggered boundary control of a reaction-diffusion PDE
//! cascaded into an unstable scalar ODE.
//!
//! Everything is generic over the scalar type through [`Real`]; the `*64`
//! aliases below fix it to `f64`.

// `!(x > 0)` also rejects NaN, which is the point of those checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod identifier;
pub mod kernels;
pub mod plant;
pub mod quadrature;
pub mod scalar;
pub mod simulator;
pub mod theta;
pub mod trigger;

pub use error::{Error, Result};
pub use kernels::{compute_gains, solve_h, GainSet, KernelGrid, KernelParams, KernelScheme};
pub use plant::{CrankNicolson, GridSpec, InitialProfile, PlantParams, PlantState};
pub use scalar::Real;
pub use simulator::{run, run_batch, ScenarioConfig, Summary, TrajectoryLog};
pub use theta::{Estimate, ThetaBox};
pub use trigger::{dwell_bound, DwellReport, EtmParams};

pub type Estimate64 = Estimate<f64>;
pub type ThetaBox64 = ThetaBox<f64>;
pub type PlantParams64 = PlantParams<f64>;
pub type PlantState64 = PlantState<f64>;
pub type GridSpec64 = GridSpec<f64>;
pub type KernelParams64 = KernelParams<f64>;
pub type GainSet64 = GainSet<f64>;
pub type EtmParams64 = EtmParams<f64>;
pub type ScenarioConfig64 = ScenarioConfig<f64>;
pub type TrajectoryLog64 = TrajectoryLog<f64>;
pub type Summary64 = Summary<f64>;
