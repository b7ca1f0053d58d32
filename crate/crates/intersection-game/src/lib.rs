//! Nash-equilibrial planning and empathetic intent estimation for a
//! two-car uncontrolled intersection.
//!
//! The library solves the open-loop Nash equilibria of a general-sum
//! differential game between two cars crossing an uncontrolled
//! intersection, learns neural value surrogates from those solutions, and
//! simulates incomplete-information interactions in which each agent
//! estimates the other's private aggressiveness and rationality — either
//! empathetically (joint estimate, allowing others to be wrong about
//! oneself) or non-empathetically (conditioned on one's own true
//! parameters). A sweep harness compares the two estimation styles by the
//! social value they realize across initial states, priors, and true
//! parameters.
//!
//! ## Module map
//!
//! - [`domain`]: states, actions, rewards, dynamics, Hamiltonian.
//! - [`bvp`]: collocation solver for the coupled Pontryagin
//!   boundary-value problem, plus an independent condition verifier.
//! - [`value_net`]: equilibrium dataset generation and the gated
//!   two-branch value network with analytic input gradients.
//! - [`estimation`]: common belief over the 16-cell joint parameter grid,
//!   Boltzmann action likelihoods, empathetic / non-empathetic estimates.
//! - [`planner`]: Hamiltonian action-values and deterministic action
//!   selection on the discrete acceleration grid.
//! - [`sim`]: the closed interaction loop and realized (social) values.
//! - [`experiments`]: scenario sweeps, hypothesis reports, policy maps.
//! - [`pipeline`]: persisted artifacts, manifests, and the stage drivers
//!   behind the `intersection-game` binary.
//!
//! ## Runnable examples
//!
//! Each major capability has a runnable example:
//!
//! ```text
//! cargo run --release --example solve_equilibrium
//! cargo run --release --example verify_conditions
//! cargo run --release --example effort_only_baseline
//! cargo run --release --example generate_dataset
//! cargo run --release --example train_surrogate
//! cargo run --release --example belief_tracking
//! cargo run --release --example simulate_interaction
//! cargo run --release --example sweep_hypotheses
//! cargo run --release --example policy_maps
//! ```

pub mod bvp;
pub mod config;
pub mod domain;
pub mod error;
pub mod estimation;
pub mod experiments;
pub mod linalg;
pub mod pipeline;
pub mod planner;
pub mod sim;
pub mod util;
pub mod value_net;

pub use config::{Config, GameConfig, SolverConfig, SweepConfig, TrainConfig};
pub use domain::{Action, AgentParams, AgentState, JointState};
