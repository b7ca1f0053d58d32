//! Independent audit of the Pontryagin conditions on a trajectory.
//!
//! Deliberately avoids the solver's collocation formulas: ODE defects come
//! from midpoint-rule differencing of the stored nodes, values are
//! recomputed by plain trapezoidal quadrature, and the control condition is
//! re-derived from the stored co-states. A trajectory that merely satisfies
//! the solver's own equations but not the underlying conditions fails here.

use serde::{Deserialize, Serialize};

use crate::domain::{
    dynamics_rhs, instantaneous_reward, instantaneous_reward_grad, optimal_control,
    terminal_reward, terminal_reward_grad, Action, JointState,
};

use super::{BvpProblem, EquilibriumTrajectory};

/// Max-norm defect per Pontryagin condition.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PmpResiduals {
    /// Scaled midpoint-rule defect of the state equation.
    pub state_ode: f64,
    /// Scaled midpoint-rule defect of the co-state equations.
    pub costate_ode: f64,
    /// Initial-state and terminal-co-state violations.
    pub boundary: f64,
    /// Distance of stored actions from the clipped Hamiltonian maximizer.
    pub control: f64,
    /// Relative mismatch of stored values against terminal reward plus
    /// trapezoidal running reward.
    pub value: f64,
}

impl PmpResiduals {
    pub fn max_norm(&self) -> f64 {
        self.state_ode
            .max(self.costate_ode)
            .max(self.boundary)
            .max(self.control)
            .max(self.value)
    }
}

/// Recompute every condition of the equilibrium system on the trajectory
/// by independent quadrature and differencing.
pub fn verify_pmp_residuals(
    traj: &EquilibriumTrajectory,
    prob: &BvpProblem,
) -> PmpResiduals {
    let cfg = &prob.cfg;
    let theta = &prob.theta;
    let n = traj.times.len();
    assert!(n >= 1, "trajectory has no nodes");
    assert_eq!(traj.states.len(), n);
    assert_eq!(traj.actions.len(), n);
    assert_eq!(traj.costates.len(), n);
    assert_eq!(traj.values.len(), n);

    let mut state_ode: f64 = 0.0;
    let mut costate_ode: f64 = 0.0;
    for j in 0..n.saturating_sub(1) {
        let h = traj.times[j + 1] - traj.times[j];
        let xa = &traj.states[j];
        let xb = &traj.states[j + 1];
        let mid = JointState::new(
            0.5 * (xa.agents[0].d + xb.agents[0].d),
            0.5 * (xa.agents[0].v + xb.agents[0].v),
            0.5 * (xa.agents[1].d + xb.agents[1].d),
            0.5 * (xa.agents[1].v + xb.agents[1].v),
            0.5 * (traj.times[j] + traj.times[j + 1]),
        );
        let u_mid = [
            Action(0.5 * (traj.actions[j][0].0 + traj.actions[j + 1][0].0)),
            Action(0.5 * (traj.actions[j][1].0 + traj.actions[j + 1][1].0)),
        ];
        let f_mid = dynamics_rhs(&mid, &u_mid);
        let da = xa.flat();
        let db = xb.flat();
        for k in 0..4 {
            let defect = (db[k] - da[k]) / h - f_mid[k];
            state_ode = state_ode.max(defect.abs() / (1.0 + f_mid[k].abs()));
        }
        for i in 0..2 {
            // lambda_dot = -(grad_x f_i + A^T lambda): components
            // (-df/dd1, -lambda_d1, -df/dd2, -lambda_d2)
            let gf = instantaneous_reward_grad(&mid, theta[i], cfg);
            let lam_mid: Vec<f64> = (0..4)
                .map(|k| 0.5 * (traj.costates[j][i][k] + traj.costates[j + 1][i][k]))
                .collect();
            let rhs = [-gf[0], -lam_mid[0], -gf[2], -lam_mid[2]];
            for k in 0..4 {
                let defect =
                    (traj.costates[j + 1][i][k] - traj.costates[j][i][k]) / h - rhs[k];
                costate_ode = costate_ode.max(defect.abs() / (1.0 + rhs[k].abs()));
            }
        }
    }

    let mut boundary: f64 = 0.0;
    let first = traj.states.first().unwrap().flat();
    let x0 = prob.x0.flat();
    for k in 0..4 {
        boundary = boundary.max((first[k] - x0[k]).abs());
    }
    let last_state = traj.states.last().unwrap();
    let last_costate = traj.costates.last().unwrap();
    for i in 0..2 {
        let grad = terminal_reward_grad(last_state, i, cfg);
        for k in 0..4 {
            boundary = boundary.max((last_costate[i][k] - grad[k]).abs());
        }
    }

    let mut control: f64 = 0.0;
    for (u, lam) in traj.actions.iter().zip(traj.costates.iter()) {
        control = control.max((u[0].0 - optimal_control(lam[0][1], cfg)).abs());
        control = control.max((u[1].0 - optimal_control(lam[1][3], cfg)).abs());
    }

    // values: terminal reward plus trapezoidal quadrature of the running
    // reward, accumulated backward
    let mut value: f64 = 0.0;
    let terminal = terminal_reward(last_state, cfg);
    for i in 0..2 {
        value = value.max(
            (traj.values[n - 1][i] - terminal[i]).abs() / (1.0 + terminal[i].abs()),
        );
    }
    let rewards: Vec<[f64; 2]> = traj
        .states
        .iter()
        .zip(traj.actions.iter())
        .map(|(x, u)| instantaneous_reward(x, u, theta, cfg))
        .collect();
    let mut acc = terminal;
    for j in (0..n.saturating_sub(1)).rev() {
        let h = traj.times[j + 1] - traj.times[j];
        for i in 0..2 {
            acc[i] += 0.5 * h * (rewards[j][i] + rewards[j + 1][i]);
            value = value.max((traj.values[j][i] - acc[i]).abs() / (1.0 + acc[i].abs()));
        }
    }

    PmpResiduals {
        state_ode,
        costate_ode,
        boundary,
        control,
        value,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bvp::{solve_bvp_default, BvpProblem};
    use crate::config::Config;

    #[test]
    fn single_node_trajectory_reports_boundary_only() {
        let cfg = Config::default();
        let mut game = cfg.game.clone();
        game.horizon = 0.05; // irrelevant; mesh is overridden below
        let mut prob = BvpProblem::new(
            JointState::new(20.0, 18.0, 15.0, 18.0, 0.0),
            [1.0, 1.0],
            &game,
            &cfg.solver,
        );
        prob.time_grid = vec![0.0];
        let traj = solve_bvp_default(&{
            let mut p = prob.clone();
            p.time_grid = vec![0.0];
            p
        })
        .unwrap();
        let res = verify_pmp_residuals(&traj, &prob);
        assert_eq!(res.state_ode, 0.0);
        assert_eq!(res.costate_ode, 0.0);
        assert!(res.boundary < 1e-12);
        assert!(res.value < 1e-12);
    }

    #[test]
    fn perturbed_costate_is_detected() {
        let cfg = Config::default();
        let mut solver = cfg.solver.clone();
        solver.narrow_halfcount = 20;
        let prob = BvpProblem::new(
            JointState::new(20.0, 18.0, 15.0, 18.0, 0.0),
            [1.0, 1.0],
            &cfg.game,
            &solver,
        );
        let mut traj = solve_bvp_default(&prob).expect("solve");
        let clean = verify_pmp_residuals(&traj, &prob);
        assert!(clean.costate_ode < 1e-3);
        let mid = traj.costates.len() / 2;
        traj.costates[mid][0][0] += 1.0;
        let dirty = verify_pmp_residuals(&traj, &prob);
        assert!(
            dirty.costate_ode > 1.0,
            "costate defect {} should be O(1)",
            dirty.costate_ode
        );
    }
}
