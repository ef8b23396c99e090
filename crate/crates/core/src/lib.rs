//! Experience-weighted attraction (EWA) learning on 2×2 network coordination
//! games.
//!
//! The crate is `no_std` (it needs `alloc`) and contains the numerical core:
//!
//! * [`graph`]: undirected graphs, seeded Erdős–Rényi generation, exact
//!   cohesiveness and eigenvector centrality.
//! * [`game`]: payoff matrices, Nash and limiting-equilibrium enumeration
//!   through cohesiveness thresholds.
//! * [`dynamics`]: the logit response, the attraction drift and its
//!   Jacobian, payoff transforms and time-varying accuracy.
//! * [`ode`]: fixed-step RK4 and adaptive Dormand–Prince integration with
//!   convergence detection.
//! * [`equilibria`]: Newton multi-start fixed-point census and stability.
//! * [`influence`]: the Jacobian at the neutral state, its dominant
//!   eigenpairs and the resulting coordination prediction.
//!
//! IO, configuration, experiments and the command-line tool live in the
//! `ewa-lab` crate.

#![no_std]

extern crate alloc;

pub mod dynamics;
pub mod equilibria;
mod error;
pub mod game;
pub mod graph;
pub mod influence;
pub mod ode;
pub mod ratio;
pub mod rng;

pub use dynamics::{logit_response, BehavioralParams, EwaSystem, LambdaSchedule, PayoffTransform};
pub use equilibria::{BeCensus, CensusConfig, FixedPointRecord, Stability};
pub use error::{Error, Result};
pub use game::{PayoffMatrix, PureProfile, Threshold};
pub use graph::{Cohesion, Graph};
pub use influence::{InfluenceConfig, InfluenceReport, Prediction};
pub use ode::{IntegrationConfig, Stepper, TerminalStatus, Trajectory};
pub use ratio::Ratio;
