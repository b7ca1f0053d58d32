//! State and action spaces, rewards, dynamics, and the Hamiltonian of the
//! two-car uncontrolled intersection game.
//!
//! All functions here are pure and allocation-free; every other module is
//! built on top of them. The per-agent state is longitudinal position and
//! velocity; the control is acceleration. Each agent carries a private
//! aggressiveness (which shifts its collision-zone entry boundary) and a
//! rationality (the inverse temperature of its action likelihood).

use serde::{Deserialize, Serialize};

use crate::config::GameConfig;

/// Aggressive aggressiveness value.
pub const THETA_AGGRESSIVE: f64 = 1.0;
/// Non-aggressive aggressiveness value.
pub const THETA_NON_AGGRESSIVE: f64 = 5.0;
/// Noisy rationality value.
pub const LAMBDA_NOISY: f64 = 0.1;
/// Less-noisy rationality value.
pub const LAMBDA_LESS_NOISY: f64 = 0.5;

/// Position and velocity of one car.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentState {
    /// Longitudinal position (m).
    pub d: f64,
    /// Velocity (m/s).
    pub v: f64,
}

impl AgentState {
    pub fn new(d: f64, v: f64) -> Self {
        Self { d, v }
    }
}

/// The joint state of both cars plus elapsed time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointState {
    pub agents: [AgentState; 2],
    /// Elapsed time (s) in `[0, T]`.
    pub t: f64,
}

impl JointState {
    pub fn new(d1: f64, v1: f64, d2: f64, v2: f64, t: f64) -> Self {
        Self {
            agents: [AgentState::new(d1, v1), AgentState::new(d2, v2)],
            t,
        }
    }

    /// Flat `[d1, v1, d2, v2]` view.
    pub fn flat(&self) -> [f64; 4] {
        [
            self.agents[0].d,
            self.agents[0].v,
            self.agents[1].d,
            self.agents[1].v,
        ]
    }

    pub fn from_flat(x: [f64; 4], t: f64) -> Self {
        Self::new(x[0], x[1], x[2], x[3], t)
    }

    /// The same state with the two agents exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            agents: [self.agents[1], self.agents[0]],
            t: self.t,
        }
    }
}

/// Acceleration command (m/s^2).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct Action(pub f64);

impl Action {
    /// Clamp into the configured action range.
    pub fn clamped(self, cfg: &GameConfig) -> Self {
        Action(self.0.clamp(cfg.u_min, cfg.u_max))
    }
}

/// One agent's private parameter pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentParams {
    /// Aggressiveness; 1 is aggressive, 5 is non-aggressive.
    pub theta: f64,
    /// Rationality; 0.1 is noisy, 0.5 is less noisy.
    pub lambda: f64,
}

impl AgentParams {
    pub fn new(theta: f64, lambda: f64) -> Self {
        Self { theta, lambda }
    }
}

/// Numerically stable logistic function.
pub fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Entry sigmoid: approaches 1 once the car has passed `R/2 - theta*W/2`.
pub fn sigma1(d: f64, theta: f64, cfg: &GameConfig) -> f64 {
    logistic(cfg.gamma * (d - cfg.zone_entry(theta)))
}

/// Exit sigmoid: drops to 0 once the car has passed `R/2 + W/2 + L`.
pub fn sigma2(d: f64, cfg: &GameConfig) -> f64 {
    logistic(-cfg.gamma * (d - cfg.zone_exit()))
}

/// `(s, s(1-s), 1-2s)` of the logistic at `z`, each at full relative
/// precision; forming `1 - s` directly loses eight digits once the
/// sigmoid saturates, which the stiff collision gradients cannot afford.
fn logistic_parts(z: f64) -> (f64, f64, f64) {
    let e = (-z.abs()).exp();
    let denom = 1.0 + e;
    let q = e / (denom * denom);
    let m = (1.0 - e) / denom; // |1 - 2s|
    if z >= 0.0 {
        (1.0 / denom, q, -m)
    } else {
        (e / denom, q, m)
    }
}

/// Soft in-zone indicator for one car, `sigma1 * sigma2`, with its first
/// and second derivatives in `d`.
///
/// The collision loss factorizes as `-b * zone(d1) * zone(d2)`, so these
/// three values are all the reward code and the solver Jacobians need.
pub fn zone_indicator(d: f64, theta: f64, cfg: &GameConfig) -> (f64, f64, f64) {
    let g = cfg.gamma;
    let (s1, q1, m1) = logistic_parts(g * (d - cfg.zone_entry(theta)));
    let (s2, q2, m2) = logistic_parts(-g * (d - cfg.zone_exit()));
    let s1p = g * q1;
    let s2p = -g * q2;
    let s1pp = g * g * q1 * m1;
    let s2pp = g * g * q2 * m2;
    let z = s1 * s2;
    let zp = s1p * s2 + s1 * s2p;
    let zpp = s1pp * s2 + 2.0 * s1p * s2p + s1 * s2pp;
    (z, zp, zpp)
}

/// Negative effort reward `-u^2`.
pub fn effort_reward(u: Action) -> f64 {
    -u.0 * u.0
}

/// Collision loss for an agent with aggressiveness `theta_i`:
/// `-b * zone(d1; theta_i) * zone(d2; theta_i)`.
pub fn collision_loss(x: &JointState, theta_i: f64, cfg: &GameConfig) -> f64 {
    let (z1, _, _) = zone_indicator(x.agents[0].d, theta_i, cfg);
    let (z2, _, _) = zone_indicator(x.agents[1].d, theta_i, cfg);
    -cfg.b * z1 * z2
}

/// Gradient of [`collision_loss`] with respect to `(d1, d2)`.
///
/// Closed form via the product rule over the zone indicators; the sigmoids
/// are too stiff at `gamma = 10` for finite differences to be trustworthy.
pub fn collision_loss_grad(x: &JointState, theta_i: f64, cfg: &GameConfig) -> [f64; 2] {
    let (z1, z1p, _) = zone_indicator(x.agents[0].d, theta_i, cfg);
    let (z2, z2p, _) = zone_indicator(x.agents[1].d, theta_i, cfg);
    [-cfg.b * z1p * z2, -cfg.b * z1 * z2p]
}

/// Hessian of [`collision_loss`] with respect to `(d1, d2)`:
/// `[d11, d12, d22]`.
pub fn collision_loss_hess(x: &JointState, theta_i: f64, cfg: &GameConfig) -> [f64; 3] {
    let (z1, z1p, z1pp) = zone_indicator(x.agents[0].d, theta_i, cfg);
    let (z2, z2p, z2pp) = zone_indicator(x.agents[1].d, theta_i, cfg);
    [
        -cfg.b * z1pp * z2,
        -cfg.b * z1p * z2p,
        -cfg.b * z1 * z2pp,
    ]
}

/// Instantaneous reward of each agent: effort plus collision loss.
pub fn instantaneous_reward(
    x: &JointState,
    u: &[Action; 2],
    theta: &[f64; 2],
    cfg: &GameConfig,
) -> [f64; 2] {
    [
        effort_reward(u[0]) + collision_loss(x, theta[0], cfg),
        effort_reward(u[1]) + collision_loss(x, theta[1], cfg),
    ]
}

/// Gradient of agent `i`'s instantaneous reward with respect to the flat
/// state `[d1, v1, d2, v2]`. The effort term has no state dependence.
pub fn instantaneous_reward_grad(
    x: &JointState,
    theta_i: f64,
    cfg: &GameConfig,
) -> [f64; 4] {
    let g = collision_loss_grad(x, theta_i, cfg);
    [g[0], 0.0, g[1], 0.0]
}

/// Terminal reward of each agent: `alpha * d(T) - (v(T) - v0)^2`.
pub fn terminal_reward(x: &JointState, cfg: &GameConfig) -> [f64; 2] {
    let r = |a: &AgentState| cfg.alpha * a.d - (a.v - cfg.v0) * (a.v - cfg.v0);
    [r(&x.agents[0]), r(&x.agents[1])]
}

/// Gradient of agent `i`'s terminal reward with respect to the flat state.
pub fn terminal_reward_grad(x: &JointState, i: usize, cfg: &GameConfig) -> [f64; 4] {
    let mut g = [0.0; 4];
    g[2 * i] = cfg.alpha;
    g[2 * i + 1] = -2.0 * (x.agents[i].v - cfg.v0);
    g
}

/// State derivative under the double-integrator dynamics: `(v, u)` per agent.
pub fn dynamics_rhs(x: &JointState, u: &[Action; 2]) -> [f64; 4] {
    [x.agents[0].v, u[0].0, x.agents[1].v, u[1].0]
}

/// Exact kinematic step of the double integrator.
pub fn dynamics_step(x: &JointState, u: &[Action; 2], dt: f64) -> JointState {
    let step = |a: &AgentState, u: f64| AgentState {
        d: a.d + a.v * dt + 0.5 * u * dt * dt,
        v: a.v + u * dt,
    };
    JointState {
        agents: [step(&x.agents[0], u[0].0), step(&x.agents[1], u[1].0)],
        t: x.t + dt,
    }
}

/// Hamiltonian of agent `i`: `H_i = lambda_i . h(x, u) + f_i(x, u; theta_i)`.
///
/// `costate_i` is agent `i`'s co-state over the flat joint state, one
/// `(lambda_d, lambda_v)` pair per agent.
pub fn hamiltonian(
    x: &JointState,
    u: &[Action; 2],
    costate_i: &[f64; 4],
    theta: &[f64; 2],
    i: usize,
    cfg: &GameConfig,
) -> f64 {
    let h = dynamics_rhs(x, u);
    let f = effort_reward(u[i]) + collision_loss(x, theta[i], cfg);
    costate_i.iter().zip(h.iter()).map(|(l, h)| l * h).sum::<f64>() + f
}

/// The acceleration maximizing agent `i`'s Hamiltonian over the box
/// `[u_min, u_max]`: the interior stationary point `lambda_v / 2`, clipped.
pub fn optimal_control(costate_v_own: f64, cfg: &GameConfig) -> f64 {
    (costate_v_own / 2.0).clamp(cfg.u_min, cfg.u_max)
}
