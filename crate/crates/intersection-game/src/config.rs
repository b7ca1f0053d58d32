//! Game, solver, and training configuration.
//!
//! Everything is serialized as a TOML file with `[game]`, `[solver]`,
//! `[train]` and `[sweep]` tables; every field has a default so a partial
//! file (or none at all) is valid. See `docs/formats.md` for the schema.

use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::error::ConfigError;

/// Physical and game-theoretic constants of the intersection case.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct GameConfig {
    /// Collision penalty magnitude.
    pub b: f64,
    /// Sigmoid shape parameter.
    pub gamma: f64,
    /// Progress reward weight in the terminal reward.
    pub alpha: f64,
    /// Road length (m).
    pub road_length: f64,
    /// Car length (m).
    pub car_length: f64,
    /// Car width (m).
    pub car_width: f64,
    /// Reference velocity (m/s); initial and terminal target speed.
    pub v0: f64,
    /// Horizon (s).
    pub horizon: f64,
    /// Simulation step (s).
    pub dt: f64,
    /// Lower bound of the acceleration range (m/s^2).
    pub u_min: f64,
    /// Upper bound of the acceleration range (m/s^2).
    pub u_max: f64,
    /// Spacing of the discrete action grid (m/s^2).
    pub u_step: f64,
    /// Belief learning rate: mixing weight toward the prior before each update.
    pub epsilon: f64,
    /// Number of agents (only 2 is exercised by the experiments).
    pub n_agents: usize,
}

impl Default for GameConfig {
    fn default() -> Self {
        Self {
            b: 1e4,
            gamma: 10.0,
            alpha: 1e-6,
            road_length: 70.0,
            car_length: 3.0,
            car_width: 1.5,
            v0: 18.0,
            horizon: 3.0,
            dt: 0.05,
            u_min: -5.0,
            u_max: 10.0,
            u_step: 0.5,
            epsilon: 0.05,
            n_agents: 2,
        }
    }
}

impl GameConfig {
    /// Position where the entry sigmoid of an agent with aggressiveness
    /// `theta` reaches 1/2: `R/2 - theta*W/2`.
    pub fn zone_entry(&self, theta: f64) -> f64 {
        self.road_length / 2.0 - theta * self.car_width / 2.0
    }

    /// Position where the exit sigmoid reaches 1/2: `R/2 + W/2 + L`.
    pub fn zone_exit(&self) -> f64 {
        self.road_length / 2.0 + self.car_width / 2.0 + self.car_length
    }

    /// The discrete action grid, `u_min ..= u_max` at `u_step` spacing.
    pub fn action_grid(&self) -> Vec<f64> {
        let n = ((self.u_max - self.u_min) / self.u_step).round() as usize;
        (0..=n).map(|k| self.u_min + k as f64 * self.u_step).collect()
    }

    /// Number of simulation steps over the horizon.
    pub fn n_steps(&self) -> usize {
        (self.horizon / self.dt).round() as usize
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        fn check(ok: bool, what: &str) -> Result<(), ConfigError> {
            if ok {
                Ok(())
            } else {
                Err(ConfigError::Invalid(what.to_string()))
            }
        }
        check(self.b > 0.0, "b must be positive")?;
        check(self.gamma > 0.0, "gamma must be positive")?;
        check(self.alpha > 0.0, "alpha must be positive")?;
        check(
            self.road_length > self.car_width + 2.0 * self.car_length,
            "road length must exceed W + 2L so the conflict zone is well-formed",
        )?;
        check(self.horizon > 0.0, "horizon must be positive")?;
        check(self.dt > 0.0, "dt must be positive")?;
        check(self.u_min < self.u_max, "u_min must be below u_max")?;
        check(
            self.u_step > 0.0 && self.u_step <= self.u_max - self.u_min,
            "u_step must fit inside the action range",
        )?;
        check(
            (0.0..=1.0).contains(&self.epsilon),
            "epsilon must lie in [0, 1]",
        )?;
        check(self.n_agents == 2, "only two-agent games are supported")?;
        Ok(())
    }
}

/// Knobs of the boundary-value solver.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Spacing of the uniform base mesh (s).
    pub base_spacing: f64,
    /// Half-width of the narrow sample cluster around the conflict time (s).
    pub narrow_window: f64,
    /// Number of stamps on each side of the conflict time in the narrow cluster.
    pub narrow_halfcount: usize,
    /// Padding added around the conflict window for the wide cluster (s).
    pub wide_window: f64,
    /// Spacing inside the wide cluster (s).
    pub wide_spacing: f64,
    /// Convergence tolerance on the scaled residual (mixed units).
    pub tol_res: f64,
    /// Maximum Newton iterations per continuation stage.
    pub max_newton_iter: usize,
    /// Collision-penalty continuation ladder; the final entry is replaced by
    /// the configured `b`.
    pub continuation_stages: usize,
    /// Maximum residual-driven mesh refinement rounds.
    pub max_refine_rounds: usize,
    /// Hard cap on mesh nodes during refinement.
    pub max_nodes: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            base_spacing: 0.025,
            narrow_window: 1e-3,
            narrow_halfcount: 800,
            wide_window: 0.25,
            wide_spacing: 5e-3,
            tol_res: 1e-3,
            max_newton_iter: 200,
            continuation_stages: 4,
            max_refine_rounds: 8,
            max_nodes: 12_000,
        }
    }
}

/// Knobs of surrogate training.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    /// Weight of the co-state matching term.
    pub c_weight: f64,
    /// Learning rate.
    pub lr: f64,
    /// Number of full-batch epochs.
    pub epochs: usize,
    /// First/second moment decay of the adaptive optimizer.
    pub beta1: f64,
    pub beta2: f64,
    /// Parameter initialization seed.
    pub seed: u64,
    /// Minimum time spacing between dataset records taken from one
    /// trajectory (s); thins the near-duplicate nodes of the dense solver
    /// cluster out of the training set.
    pub record_spacing: f64,
    /// Number of held-out initial states.
    pub n_test_states: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            c_weight: 1.0,
            lr: 0.01,
            epochs: 50_000,
            beta1: 0.9,
            beta2: 0.999,
            seed: 7,
            record_spacing: 0.01,
            n_test_states: 36,
        }
    }
}

/// Knobs of the scenario sweep.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    /// Spacing of the initial-state mesh (m).
    pub mesh_spacing: f64,
    /// Lower corner of the scanned position box (m).
    pub d_lo: f64,
    /// Upper corner of the scanned position box (m).
    pub d_hi: f64,
    /// Tolerance used when declaring one social value strictly higher.
    pub strict_tau: f64,
    /// Fractional tolerance for the "not worse" comparison.
    pub not_worse_frac: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            mesh_spacing: 0.5,
            d_lo: 15.0,
            d_hi: 20.0,
            strict_tau: 1e-6,
            not_worse_frac: 0.01,
        }
    }
}

/// Everything a pipeline run needs, read from one TOML file.
#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub game: GameConfig,
    pub solver: SolverConfig,
    pub train: TrainConfig,
    pub sweep: SweepConfig,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Io(path.display().to_string(), e.to_string()))?;
        let cfg: Config = toml::from_str(&text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.game.validate()?;
        Ok(cfg)
    }

    pub fn save(&self, path: &Path) -> Result<(), ConfigError> {
        let text = toml::to_string_pretty(self).expect("config serializes");
        std::fs::write(path, text)
            .map_err(|e| ConfigError::Io(path.display().to_string(), e.to_string()))
    }

    /// Stable content hash of the configuration, used to key artifacts.
    pub fn digest(&self) -> String {
        use sha2::{Digest, Sha256};
        let canon = serde_json::to_string(self).expect("config serializes");
        let mut h = Sha256::new();
        h.update(canon.as_bytes());
        let out = h.finalize();
        out.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}
