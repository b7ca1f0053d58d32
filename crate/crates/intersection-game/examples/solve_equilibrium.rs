//! Solve one equilibrium boundary-value problem and print a summary.
//!
//! ```bash
//! cargo run --release --example solve_equilibrium -- [d1 d2 theta1 theta2 [out.csv]]
//! ```
//!
//! Aggressiveness is `1` (aggressive) or `5` (non-aggressive). With no
//! arguments, solves the leading/trailing pair (20 m, 15 m) with both
//! agents aggressive.

use std::time::Instant;

use intersection_game::bvp::{
    predict_conflict_times, solve_bvp_default, trajectory_sidecar_json, verify_pmp_residuals,
    write_trajectory_csv, BvpProblem, TrajectorySidecar,
};
use intersection_game::config::Config;
use intersection_game::domain::JointState;

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let d1: f64 = args.first().map_or(20.0, |s| s.parse().expect("d1"));
    let d2: f64 = args.get(1).map_or(15.0, |s| s.parse().expect("d2"));
    let th1: f64 = args.get(2).map_or(1.0, |s| s.parse().expect("theta1"));
    let th2: f64 = args.get(3).map_or(1.0, |s| s.parse().expect("theta2"));

    let cfg = Config::default();
    let x0 = JointState::new(d1, cfg.game.v0, d2, cfg.game.v0, 0.0);
    let (t1, t2) = predict_conflict_times(&x0, &[th1, th2], &cfg.game);
    println!("initial state: d = ({d1} m, {d2} m) at {} m/s", cfg.game.v0);
    println!("aggressiveness: ({th1}, {th2})");
    println!("predicted conflict window: t1 = {t1:.4} s, t2 = {t2:.4} s");

    let prob = BvpProblem::new(x0, [th1, th2], &cfg.game, &cfg.solver);
    println!("mesh nodes: {}", prob.time_grid.len());

    let start = Instant::now();
    let traj = match solve_bvp_default(&prob) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("solve failed: {e}");
            std::process::exit(3);
        }
    };
    let elapsed = start.elapsed();
    println!(
        "converged in {:.2} s on {} nodes, solver defect {:.2e}",
        elapsed.as_secs_f64(),
        traj.n_nodes(),
        traj.residual_norm
    );

    let res = verify_pmp_residuals(&traj, &prob);
    println!(
        "independent audit: state {:.1e}, costate {:.1e}, boundary {:.1e}, control {:.1e}, value {:.1e}",
        res.state_ode, res.costate_ode, res.boundary, res.control, res.value
    );
    println!("values at t = 0: V1 = {:.4}, V2 = {:.4}", traj.values[0][0], traj.values[0][1]);
    let (umin1, umax1) = traj
        .actions
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), u| {
            (lo.min(u[0].0), hi.max(u[0].0))
        });
    let (umin2, umax2) = traj
        .actions
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), u| {
            (lo.min(u[1].0), hi.max(u[1].0))
        });
    println!("control ranges: u1 in [{umin1:.2}, {umax1:.2}], u2 in [{umin2:.2}, {umax2:.2}]");
    println!(
        "final positions: d1 = {:.2} m, d2 = {:.2} m (zone exit at {:.2} m)",
        traj.states.last().unwrap().agents[0].d,
        traj.states.last().unwrap().agents[1].d,
        cfg.game.zone_exit()
    );

    if let Some(path) = args.get(4) {
        let path = std::path::Path::new(path);
        write_trajectory_csv(&traj, path).expect("write trajectory");
        let sidecar = TrajectorySidecar {
            version: 1,
            id: format!("d1_{d1}_d2_{d2}_th_{th1}_{th2}"),
            theta: traj.theta,
            x0: x0.flat(),
            converged: traj.converged,
            residual_norm: traj.residual_norm,
            residuals: Some(res),
            symmetric_start: traj.symmetric_start,
            asymmetric_at_symmetric_start: traj.asymmetric_at_symmetric_start,
            config_digest: cfg.digest(),
        };
        let json_path = path.with_extension("json");
        std::fs::write(&json_path, trajectory_sidecar_json(&sidecar)).expect("write sidecar");
        println!("wrote {} and {}", path.display(), json_path.display());
    }
}
