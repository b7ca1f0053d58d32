//! Conflict-time prediction, mesh construction, and the rollout initial
//! guess.
//!
//! The collision gradient behaves like a mixture of near-delta spikes in
//! time, so the mesh must sample densely where the cars can meet. Two
//! closed-form time stamps bracket that window: `t1`, when the trailing car
//! would enter the conflict zone under maximum deceleration, and `t2`, when
//! the leading car would leave it at constant velocity.

use crate::config::{GameConfig, SolverConfig};
use crate::domain::JointState;

use super::{BvpProblem, InitialGuess};

/// Predicted conflict time stamps `(t1, t2)`, both clamped to `[0, T]`.
///
/// `t1`: the trailing car reaches the entry boundary of its own zone under
/// maximum deceleration (horizon if it never gets there). `t2`: the leading
/// car passes the exit boundary at its initial velocity.
pub fn predict_conflict_times(
    x0: &JointState,
    theta: &[f64; 2],
    cfg: &GameConfig,
) -> (f64, f64) {
    let (lead, trail) = if x0.agents[0].d >= x0.agents[1].d {
        (0, 1)
    } else {
        (1, 0)
    };
    let t2 = {
        let gap = cfg.zone_exit() - x0.agents[lead].d;
        if gap <= 0.0 {
            0.0
        } else {
            (gap / x0.agents[lead].v).min(cfg.horizon)
        }
    };
    let t1 = {
        let entry = cfg.zone_entry(theta[trail]);
        let d = x0.agents[trail].d;
        let v = x0.agents[trail].v;
        let a = cfg.u_min; // maximum deceleration, negative
        if d >= entry {
            0.0
        } else {
            // first root of d + v t + a t^2 / 2 = entry
            let disc = v * v + 2.0 * a * (entry - d);
            if disc < 0.0 {
                cfg.horizon
            } else {
                let t = (v - disc.sqrt()) / (-a);
                let t_stop = v / (-a);
                if t <= t_stop && t >= 0.0 {
                    t.min(cfg.horizon)
                } else {
                    cfg.horizon
                }
            }
        }
    };
    (t1.clamp(0.0, cfg.horizon), t2.clamp(0.0, cfg.horizon))
}

/// Union of the base mesh, a wide cluster over the conflict window, and the
/// narrow stamp cluster `{t1 +- (w/m) k}, k = 0..m` on each side of `t1`.
pub fn conflict_mesh(
    x0: &JointState,
    theta: [f64; 2],
    cfg: &GameConfig,
    solver: &SolverConfig,
) -> Vec<f64> {
    let (t1, t2) = predict_conflict_times(x0, &theta, cfg);
    let mut stamps = Vec::new();
    // uniform base
    let n_base = (cfg.horizon / solver.base_spacing).round() as usize;
    for k in 0..=n_base {
        stamps.push(k as f64 * cfg.horizon / n_base as f64);
    }
    // wide cluster spanning the whole window the cars can overlap in
    let lo = (t1.min(t2) - solver.wide_window).max(0.0);
    let hi = (t1.max(t2) + solver.wide_window).min(cfg.horizon);
    let mut t = lo;
    while t < hi {
        stamps.push(t);
        t += solver.wide_spacing;
    }
    stamps.push(hi);
    // narrow stamp cluster around t1
    let m = solver.narrow_halfcount as f64;
    for k in 0..=solver.narrow_halfcount {
        let dt = solver.narrow_window * k as f64 / m;
        stamps.push((t1 - dt).max(0.0));
        stamps.push((t1 + dt).min(cfg.horizon));
    }
    stamps.sort_by(|a, b| a.partial_cmp(b).unwrap());
    stamps.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    if let Some(first) = stamps.first_mut() {
        *first = 0.0;
    }
    if let Some(last) = stamps.last_mut() {
        *last = cfg.horizon;
    }
    stamps
}

/// Rollout guess on the problem mesh: the leading car holds its velocity,
/// the trailing car brakes at full strength until `t1`; co-states carry the
/// terminal condition backward with the collision gradient ignored.
pub fn build_initial_guess(prob: &BvpProblem) -> InitialGuess {
    build_initial_guess_with_roles(prob, false)
}

/// Same rollout with the leading/trailing roles force-swapped; used as a
/// retry when a swap-symmetric start stalls on the default branch.
pub fn build_initial_guess_with_roles(prob: &BvpProblem, swap_roles: bool) -> InitialGuess {
    let cfg = &prob.cfg;
    let x0 = &prob.x0;
    let (t1, _) = predict_conflict_times(x0, &prob.theta, cfg);
    let mut lead = if x0.agents[0].d >= x0.agents[1].d { 0 } else { 1 };
    if swap_roles {
        lead = 1 - lead;
    }
    let trail = 1 - lead;

    let rollout = |i: usize, t: f64| -> (f64, f64) {
        let a0 = &x0.agents[i];
        if i == lead {
            (a0.d + a0.v * t, a0.v)
        } else {
            // brake at u_min until t1 (or standstill), then coast
            let u = cfg.u_min;
            let t_stop = a0.v / (-u);
            let tb = t.min(t1).min(t_stop);
            let d = a0.d + a0.v * tb + 0.5 * u * tb * tb;
            let v = a0.v + u * tb;
            (d + v * (t - tb), v)
        }
    };

    let times = prob.time_grid.clone();
    let horizon = cfg.horizon;
    let mut states = Vec::with_capacity(times.len());
    for &t in &times {
        let (d1, v1) = rollout(0, t);
        let (d2, v2) = rollout(1, t);
        states.push([d1, v1, d2, v2]);
    }
    let _ = trail;

    // terminal co-state from the guessed final state, integrated backward
    // with zero collision gradient: lambda_d constant, lambda_v picks up
    // alpha per unit time.
    let (dt1, vt1) = rollout(0, horizon);
    let (dt2, vt2) = rollout(1, horizon);
    let _ = (dt1, dt2);
    let lam_v_t = [-2.0 * (vt1 - cfg.v0), -2.0 * (vt2 - cfg.v0)];
    let mut costates = Vec::with_capacity(times.len());
    for &t in &times {
        let tau = horizon - t;
        let mut per_agent = [[0.0; 4]; 2];
        for i in 0..2 {
            per_agent[i][2 * i] = cfg.alpha;
            per_agent[i][2 * i + 1] = lam_v_t[i] + cfg.alpha * tau;
        }
        costates.push(per_agent);
    }

    InitialGuess {
        times,
        states,
        costates,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Config;

    fn setup() -> Config {
        Config::default()
    }

    #[test]
    fn leading_exit_time_matches_kinematics() {
        let cfg = setup();
        let x0 = JointState::new(20.0, 18.0, 15.0, 18.0, 0.0);
        let (_, t2) = predict_conflict_times(&x0, &[1.0, 1.0], &cfg.game);
        assert!((t2 - (38.75 - 20.0) / 18.0).abs() < 1e-12);
    }

    #[test]
    fn trailing_entry_time_solves_quadratic() {
        let cfg = setup();
        let x0 = JointState::new(20.0, 18.0, 15.0, 18.0, 0.0);
        let (t1, _) = predict_conflict_times(&x0, &[1.0, 1.0], &cfg.game);
        let expected = (18.0 - 131.5f64.sqrt()) / 5.0;
        assert!((t1 - expected).abs() < 1e-10, "t1 = {t1}");
        // the root actually crosses the entry boundary
        let d = 15.0 + 18.0 * t1 - 2.5 * t1 * t1;
        assert!((d - 34.25).abs() < 1e-9);
    }

    #[test]
    fn past_exit_clamps_to_zero() {
        let cfg = setup();
        let x0 = JointState::new(50.0, 18.0, 45.0, 18.0, 0.0);
        let (t1, t2) = predict_conflict_times(&x0, &[1.0, 1.0], &cfg.game);
        assert_eq!(t2, 0.0);
        assert_eq!(t1, 0.0); // trailing car already past its entry as well
    }

    #[test]
    fn unreachable_entry_gives_horizon() {
        let cfg = setup();
        // trailing car too slow and too far to reach the zone while braking
        let x0 = JointState::new(20.0, 18.0, 5.0, 3.0, 0.0);
        let (t1, _) = predict_conflict_times(&x0, &[5.0, 5.0], &cfg.game);
        assert_eq!(t1, cfg.game.horizon);
    }

    #[test]
    fn mesh_contains_the_narrow_stamp_cluster() {
        let cfg = setup();
        let x0 = JointState::new(20.0, 18.0, 15.0, 18.0, 0.0);
        let mesh = conflict_mesh(&x0, [1.0, 1.0], &cfg.game, &cfg.solver);
        let (t1, _) = predict_conflict_times(&x0, &[1.0, 1.0], &cfg.game);
        let spacing = cfg.solver.narrow_window / cfg.solver.narrow_halfcount as f64;
        assert!((spacing - 1.25e-6).abs() < 1e-18);
        // all 1601 stamps are mesh members
        for k in 0..=cfg.solver.narrow_halfcount {
            for sgn in [-1.0, 1.0] {
                let t = (t1 + sgn * spacing * k as f64).clamp(0.0, cfg.game.horizon);
                assert!(
                    mesh.iter().any(|m| (m - t).abs() < 1e-9),
                    "stamp {t} missing"
                );
            }
        }
        // strictly increasing, full span
        assert_eq!(mesh[0], 0.0);
        assert_eq!(*mesh.last().unwrap(), cfg.game.horizon);
        for w in mesh.windows(2) {
            assert!(w[1] > w[0]);
        }
    }

    #[test]
    fn cluster_truncates_at_zero() {
        let cfg = setup();
        // trailing car on top of the boundary: t1 = 0
        let x0 = JointState::new(40.0, 18.0, 34.3, 18.0, 0.0);
        let (t1, _) = predict_conflict_times(&x0, &[1.0, 1.0], &cfg.game);
        assert_eq!(t1, 0.0);
        let mesh = conflict_mesh(&x0, [1.0, 1.0], &cfg.game, &cfg.solver);
        assert_eq!(mesh[0], 0.0);
        for w in mesh.windows(2) {
            assert!(w[1] > w[0]);
        }
    }

    #[test]
    fn guess_leading_car_coasts_exactly() {
        let cfg = setup();
        let x0 = JointState::new(20.0, 18.0, 15.0, 18.0, 0.0);
        let prob = BvpProblem::new(x0, [1.0, 1.0], &cfg.game, &cfg.solver);
        let guess = build_initial_guess(&prob);
        for (t, s) in guess.times.iter().zip(guess.states.iter()) {
            assert!((s[0] - (20.0 + 18.0 * t)).abs() < 1e-9);
            assert_eq!(s[1], 18.0);
        }
    }

    #[test]
    fn guess_costate_matches_terminal_condition() {
        let cfg = setup();
        let x0 = JointState::new(20.0, 18.0, 15.0, 18.0, 0.0);
        let prob = BvpProblem::new(x0, [1.0, 1.0], &cfg.game, &cfg.solver);
        let guess = build_initial_guess(&prob);
        let last = guess.costates.last().unwrap();
        // leading car ends at v0, so its terminal velocity co-state vanishes
        assert!((last[0][0] - cfg.game.alpha).abs() < 1e-15);
        assert!(last[0][1].abs() < 1e-9);
        assert_eq!(last[0][2], 0.0);
        assert_eq!(last[0][3], 0.0);
    }
}
