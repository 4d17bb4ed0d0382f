//! Alpha belief propagation on pairwise Markov random fields.
//!
//! The crate provides model types ([`model`]), message-passing inference and
//! its baselines ([`inference`]), a sufficient convergence certificate for
//! binary models ([`convergence`]), seeded random model generation
//! ([`randgen`]) and a MIMO detection harness ([`mimo`]).

pub mod convergence;
pub mod divergence;
pub mod error;
pub mod experiments;
pub mod inference;
pub mod io;
pub mod mimo;
pub mod model;
pub mod plot;
pub mod randgen;
pub mod report;

pub use convergence::{certify, theta_from_ising, theta_from_mrf, Certificate, ThetaParams};
pub use divergence::{alpha_divergence, kl_divergence};
pub use error::{Error, Result};
pub use inference::{
    exact_marginals, exact_map, run_alpha_bp, AlphaAssignment, AnnealSchedule, BeliefResult,
    MessageState, RunConfig,
};
pub use model::{ising_to_mrf, DiscreteDistribution, Domain, Graph, IsingModel, PairwiseMrf};
