//! Shared test support: the closed-form single-agent solution used as an
//! independent oracle whenever the collision channel is switched off.
//!
//! With no coupling, each car solves its own linear-quadratic problem:
//! maximize `int -u^2 dt + alpha d(T) - (v(T) - v0)^2`. Pontryagin gives a
//! constant position co-state `alpha`, a velocity co-state that grows
//! linearly backward from the terminal condition, and the control
//! `u = lambda_v / 2`, with the terminal co-state fixed by
//! self-consistency. Everything below is that closed form, written
//! directly from the formulas and never touching the solver code paths.

#![allow(dead_code)]

use intersection_game::config::GameConfig;

/// Closed-form solution of the decoupled effort-only problem.
#[derive(Debug, Clone, Copy)]
pub struct LqOracle {
    pub alpha: f64,
    pub v_ref: f64,
    pub horizon: f64,
}

impl LqOracle {
    pub fn from_config(cfg: &GameConfig) -> Self {
        Self {
            alpha: cfg.alpha,
            v_ref: cfg.v0,
            horizon: cfg.horizon,
        }
    }

    /// Terminal velocity co-state for a car at velocity `v` at time `t`,
    /// from `lambda_T = -2 (v(T) - v_ref)` solved self-consistently.
    pub fn lambda_terminal(&self, v: f64, t: f64) -> f64 {
        let tau = self.horizon - t;
        (-2.0 * (v - self.v_ref) - self.alpha * tau * tau / 2.0) / (1.0 + tau)
    }

    /// Velocity co-state at the current time.
    pub fn lambda_v(&self, v: f64, t: f64) -> f64 {
        self.lambda_terminal(v, t) + self.alpha * (self.horizon - t)
    }

    /// Optimal control at the current time.
    pub fn control(&self, v: f64, t: f64) -> f64 {
        self.lambda_v(v, t) / 2.0
    }

    /// Value-to-go from `(d, v)` at time `t`.
    pub fn value(&self, d: f64, v: f64, t: f64) -> f64 {
        let tau = self.horizon - t;
        let lt = self.lambda_terminal(v, t);
        let a = self.alpha;
        let effort = if a == 0.0 {
            lt * lt / 4.0 * tau
        } else {
            (((lt + a * tau).powi(3)) - lt.powi(3)) / (12.0 * a)
        };
        let d_final = d + v * tau + lt * tau * tau / 4.0 + a * tau.powi(3) / 6.0;
        -effort + a * d_final - lt * lt / 4.0
    }

    /// Gradient of the value with respect to the car's own `(d, v)`.
    pub fn value_grad(&self, v: f64, t: f64) -> [f64; 2] {
        [self.alpha, self.lambda_v(v, t)]
    }

    /// Full state/co-state/control/value rollout from `(d0, v_init)` at
    /// `t = 0`, evaluated at the given times.
    pub fn rollout(&self, d0: f64, v_init: f64, times: &[f64]) -> Vec<LqNode> {
        let lt = self.lambda_terminal(v_init, 0.0);
        let a = self.alpha;
        let horizon = self.horizon;
        times
            .iter()
            .map(|&s| {
                let lam_v = lt + a * (horizon - s);
                let v = v_init + (lt * s + a * (horizon * s - s * s / 2.0)) / 2.0;
                let d = d0
                    + v_init * s
                    + (lt * s * s / 2.0 + a * (horizon * s * s / 2.0 - s.powi(3) / 6.0)) / 2.0;
                LqNode {
                    t: s,
                    d,
                    v,
                    lambda_d: a,
                    lambda_v: lam_v,
                    u: lam_v / 2.0,
                    value: self.value(d, v, s),
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LqNode {
    pub t: f64,
    pub d: f64,
    pub v: f64,
    pub lambda_d: f64,
    pub lambda_v: f64,
    pub u: f64,
    pub value: f64,
}

/// A game configuration with the collision channel switched off.
pub fn effort_only_config() -> GameConfig {
    GameConfig {
        b: 1e-300,
        ..GameConfig::default()
    }
}

/// Family-wise relative error: max absolute deviation over the family
/// scaled by the family's largest magnitude.
pub fn family_rel_err(pairs: &[(f64, f64)]) -> f64 {
    let scale = pairs
        .iter()
        .map(|(_, b)| b.abs())
        .fold(0.0f64, f64::max)
        .max(1e-300);
    pairs
        .iter()
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max)
        / scale
}

/// Deterministic test-local randomness.
pub struct XorShift(pub u64);

impl XorShift {
    pub fn next_f64(&mut self) -> f64 {
        self.0 ^= self.0 << 13;
        self.0 ^= self.0 >> 7;
        self.0 ^= self.0 << 17;
        (self.0 >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn in_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }
}
