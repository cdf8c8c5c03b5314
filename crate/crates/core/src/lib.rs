//! Simulation and optimization toolkit for an ISAC base station assisted by a
//! UAV-mounted reflecting surface whose location, orientation and reflection
//! phases are all adjustable.
//!
//! Stage one alternates particle-swarm search over the surface pose with
//! Riemannian descent over the phases to maximize `||H_s h_c^H||^2`. Stage two
//! solves the transmit beamformer in closed form under a communication SNR
//! floor.

pub mod beamformer;
pub mod channel;
pub mod config;
pub mod error;
pub mod geometry;
pub mod manifold_pbf;
pub mod metrics;
pub mod pso;
pub mod runner;

pub use channel::{build_channels, ChannelSet, Scenario};
pub use config::{Experiment, ScenarioFile};
pub use error::{Error, Result};
pub use geometry::{Pose6D, Region};
pub use metrics::{Beamformer, PhaseVector};
pub use runner::{run_scheme, Scheme, SchemeResult};
