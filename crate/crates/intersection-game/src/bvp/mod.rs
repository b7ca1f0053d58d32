//! Two-point boundary-value solver for the coupled Pontryagin conditions
//! of the two-car game.
//!
//! For a fixed initial state and aggressiveness pair, the open-loop Nash
//! equilibrium solves a 12-dimensional first-order system: the joint state
//! `(d1, v1, d2, v2)` forward, each agent's co-state (the gradient of its
//! value along the trajectory) backward, coupled through the pointwise
//! Hamiltonian-maximizing control `u_i = clip(lambda_{v,i} / 2)`.
//!
//! The solver discretizes by three-point Lobatto collocation on a mesh
//! clustered around the predicted conflict window, applies damped Newton
//! with continuation in the collision penalty, then bisects intervals whose
//! independently estimated local error is too large. Values are recovered
//! afterwards by integrating the running reward backward from the terminal
//! reward.

mod guess;
mod io;
mod newton;
mod verify;

pub use guess::{build_initial_guess, conflict_mesh, predict_conflict_times};
pub use io::{read_trajectory_csv, trajectory_sidecar_json, write_trajectory_csv, TrajectorySidecar};
pub use verify::{verify_pmp_residuals, PmpResiduals};

use serde::{Deserialize, Serialize};

use crate::config::{GameConfig, SolverConfig};
use crate::domain::{Action, JointState};
use crate::error::BvpError;

/// One boundary-value problem: initial joint state, aggressiveness pair,
/// and the mesh the solution is computed on.
#[derive(Debug, Clone)]
pub struct BvpProblem {
    pub x0: JointState,
    pub theta: [f64; 2],
    pub cfg: GameConfig,
    pub solver: SolverConfig,
    /// Strictly increasing, `time_grid[0] == 0`, last entry `== horizon`.
    pub time_grid: Vec<f64>,
}

impl BvpProblem {
    /// Build a problem on the default conflict-clustered mesh.
    pub fn new(x0: JointState, theta: [f64; 2], cfg: &GameConfig, solver: &SolverConfig) -> Self {
        let time_grid = conflict_mesh(&x0, theta, cfg, solver);
        Self {
            x0,
            theta,
            cfg: cfg.clone(),
            solver: solver.clone(),
            time_grid,
        }
    }

    pub fn symmetric_start(&self) -> bool {
        let a = &self.x0.agents;
        a[0].d == a[1].d && a[0].v == a[1].v && self.theta[0] == self.theta[1]
    }
}

/// State and co-state guess on the problem mesh.
#[derive(Debug, Clone)]
pub struct InitialGuess {
    pub times: Vec<f64>,
    /// Flat `[d1, v1, d2, v2]` per node.
    pub states: Vec<[f64; 4]>,
    /// Per node, per agent, co-state over the flat joint state.
    pub costates: Vec<[[f64; 4]; 2]>,
}

/// A converged (or best-effort) solution of the Pontryagin system.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EquilibriumTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<JointState>,
    pub actions: Vec<[Action; 2]>,
    /// `costates[k][i]` is agent `i`'s co-state at node `k`.
    pub costates: Vec<[[f64; 4]; 2]>,
    /// `values[k][i]` is agent `i`'s value-to-go at node `k`.
    pub values: Vec<[f64; 2]>,
    pub theta: [f64; 2],
    pub converged: bool,
    /// Solver-side estimate of the worst scaled defect.
    pub residual_norm: f64,
    /// True when the problem itself is swap-symmetric.
    pub symmetric_start: bool,
    /// True when a swap-symmetric problem converged to an asymmetric
    /// equilibrium (one of the mirrored pair; its swap image solves the
    /// same problem).
    pub asymmetric_at_symmetric_start: bool,
}

impl EquilibriumTrajectory {
    pub fn n_nodes(&self) -> usize {
        self.times.len()
    }

    /// Largest deviation from the swap image of itself, for symmetric
    /// problems.
    pub fn swap_asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (s, u) in self.states.iter().zip(self.actions.iter()) {
            worst = worst
                .max((s.agents[0].d - s.agents[1].d).abs())
                .max((s.agents[0].v - s.agents[1].v).abs())
                .max((u[0].0 - u[1].0).abs());
        }
        worst
    }
}

/// What the solver was doing when it gave up.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Diagnostics {
    pub residual_norm: f64,
    pub newton_iterations: usize,
    pub stage_b: f64,
    pub n_nodes: usize,
    pub message: String,
}

impl std::fmt::Display for Diagnostics {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} (residual {:.3e}, {} Newton iterations, b = {:.3e}, {} nodes)",
            self.message, self.residual_norm, self.newton_iterations, self.stage_b, self.n_nodes
        )
    }
}

/// Solve the boundary-value problem from an explicit guess.
///
/// Fails with [`BvpError::InvalidGuess`] when the guess does not live on
/// the problem mesh and with [`BvpError::NonConvergence`] when the damped
/// Newton iteration stalls above tolerance; the non-convergence carries
/// diagnostics rather than a silently degraded trajectory.
pub fn solve_bvp(
    prob: &BvpProblem,
    guess: &InitialGuess,
) -> Result<EquilibriumTrajectory, BvpError> {
    newton::solve(prob, guess)
}

/// Convenience: build the default guess for the problem's mesh and solve.
pub fn solve_bvp_default(prob: &BvpProblem) -> Result<EquilibriumTrajectory, BvpError> {
    let guess = build_initial_guess(prob);
    newton::solve(prob, &guess)
}
