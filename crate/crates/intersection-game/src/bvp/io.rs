//! Trajectory persistence: one CSV per solve plus a JSON sidecar.
//!
//! Floats are written in Rust's shortest round-trip representation, so a
//! parsed file reproduces the in-memory trajectory bit for bit.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::domain::{Action, JointState};
use crate::error::PipelineError;
use crate::util::{parse_f64, write_atomic};

use super::{EquilibriumTrajectory, PmpResiduals};

pub const TRAJECTORY_CSV_HEADER: &str =
    "t,d1,v1,d2,v2,u1,u2,l1_d1,l1_v1,l1_d2,l1_v2,l2_d1,l2_v1,l2_d2,l2_v2,V1,V2";

/// Metadata stored next to each trajectory CSV.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrajectorySidecar {
    pub version: u32,
    pub id: String,
    pub theta: [f64; 2],
    pub x0: [f64; 4],
    pub converged: bool,
    pub residual_norm: f64,
    pub residuals: Option<PmpResiduals>,
    pub symmetric_start: bool,
    pub asymmetric_at_symmetric_start: bool,
    pub config_digest: String,
}

pub fn trajectory_sidecar_json(sidecar: &TrajectorySidecar) -> String {
    serde_json::to_string_pretty(sidecar).expect("sidecar serializes")
}

pub fn write_trajectory_csv(
    traj: &EquilibriumTrajectory,
    path: &Path,
) -> Result<(), PipelineError> {
    let mut out = String::with_capacity(traj.n_nodes() * 160);
    out.push_str(TRAJECTORY_CSV_HEADER);
    out.push('\n');
    for k in 0..traj.n_nodes() {
        let s = traj.states[k].flat();
        let u = &traj.actions[k];
        let l = &traj.costates[k];
        let v = &traj.values[k];
        let row = [
            traj.times[k],
            s[0],
            s[1],
            s[2],
            s[3],
            u[0].0,
            u[1].0,
            l[0][0],
            l[0][1],
            l[0][2],
            l[0][3],
            l[1][0],
            l[1][1],
            l[1][2],
            l[1][3],
            v[0],
            v[1],
        ];
        let mut first = true;
        for x in row {
            if !first {
                out.push(',');
            }
            first = false;
            out.push_str(&format!("{x}"));
        }
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())
}

/// Parse a trajectory CSV back. The sidecar carries the flags; callers that
/// only need the numeric trajectory can pass placeholder metadata.
pub fn read_trajectory_csv(
    path: &Path,
    theta: [f64; 2],
) -> Result<EquilibriumTrajectory, PipelineError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| PipelineError::Io(path.display().to_string(), e.to_string()))?;
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    if header != TRAJECTORY_CSV_HEADER {
        return Err(PipelineError::Other(format!(
            "unexpected trajectory header in {}",
            path.display()
        )));
    }
    let mut traj = EquilibriumTrajectory {
        times: Vec::new(),
        states: Vec::new(),
        actions: Vec::new(),
        costates: Vec::new(),
        values: Vec::new(),
        theta,
        converged: true,
        residual_norm: 0.0,
        symmetric_start: false,
        asymmetric_at_symmetric_start: false,
    };
    for line in lines {
        if line.is_empty() {
            continue;
        }
        let cols: Vec<f64> = line
            .split(',')
            .map(parse_f64)
            .collect::<Result<_, _>>()
            .map_err(|e| PipelineError::Other(format!("{}: {e}", path.display())))?;
        if cols.len() != 17 {
            return Err(PipelineError::Other(format!(
                "trajectory row with {} columns in {}",
                cols.len(),
                path.display()
            )));
        }
        traj.times.push(cols[0]);
        traj.states
            .push(JointState::new(cols[1], cols[2], cols[3], cols[4], cols[0]));
        traj.actions.push([Action(cols[5]), Action(cols[6])]);
        traj.costates.push([
            [cols[7], cols[8], cols[9], cols[10]],
            [cols[11], cols[12], cols[13], cols[14]],
        ]);
        traj.values.push([cols[15], cols[16]]);
    }
    Ok(traj)
}
