//! Uniform-refinement convergence studies with `rho = h^r` constant per level.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{eoc, l2_error};
use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::ocp::{OcpProblem, OcpSettings, Regularization, RhoStrategy, SolverKind};
use crate::targets::TargetField;

/// Axis spacing `2^{-(l+1)}` of uniform level `l`.
pub fn axis_spacing(level: usize) -> f64 {
    0.5f64.powi(level as i32 + 1)
}

#[derive(Clone, Debug)]
pub struct StudyConfig {
    pub d: usize,
    pub regularization: Regularization,
    pub target: TargetField,
    pub levels: Vec<usize>,
    /// The first solver provides the reported error; the others are timed and cross-checked.
    pub solvers: Vec<SolverKind>,
    pub settings: OcpSettings,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolverRun {
    pub solver: SolverKind,
    pub iterations: usize,
    pub converged: bool,
    pub seconds: f64,
    pub final_relative_residual: f64,
    /// Mean inner iterations per outer step, when inner solves are iterative.
    pub inner_mean: Option<f64>,
    /// `||y - y_ref||_{L^2}` against the reporting solver's state.
    pub l2_error: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub level: usize,
    pub vertices: usize,
    pub elements: usize,
    pub state_dofs: usize,
    pub h: f64,
    pub rho: f64,
    pub l2_error: f64,
    pub eoc: Option<f64>,
    pub runs: Vec<SolverRun>,
}

/// Solves every level with every solver and reports errors against the target.
pub fn run_uniform_study(cfg: &StudyConfig, mut progress: impl FnMut(&ConvergenceRow)) -> Result<Vec<ConvergenceRow>> {
    if cfg.solvers.is_empty() {
        return Err(Error::invalid("a study needs at least one solver"));
    }
    let mut rows: Vec<ConvergenceRow> = Vec::new();
    let mut mesh: Option<(usize, Arc<Mesh>)> = None;
    for &level in &cfg.levels {
        let m = match mesh.take() {
            Some((l, m)) if l + 1 == level => Arc::new(m.refine_uniform()),
            Some((l, m)) if l == level => m,
            _ => Arc::new(Mesh::uniform_level(cfg.d, level)?),
        };
        mesh = Some((level, m.clone()));
        let h = axis_spacing(level);
        let rho = h.powf(cfg.regularization.rho_exponent());
        let problem = OcpProblem::new(m.clone(), cfg.regularization, RhoStrategy::Constant(rho), cfg.target.clone())?
            .with_amg_config(cfg.settings.amg);
        let mut runs = Vec::new();
        let mut err = f64::NAN;
        for (k, &solver) in cfg.solvers.iter().enumerate() {
            let res = problem.solve(solver, &cfg.settings)?;
            let e = l2_error(&res.y, &cfg.target).total;
            if k == 0 {
                err = e;
            }
            runs.push(SolverRun {
                solver,
                iterations: res.stats.iterations,
                converged: res.stats.converged,
                seconds: res.seconds,
                final_relative_residual: res.stats.final_relative(),
                inner_mean: res
                    .inner
                    .as_ref()
                    .filter(|s| s.calls > 0)
                    .map(|s| s.total_iterations as f64 / s.calls as f64),
                l2_error: e,
            });
        }
        let eoc = rows.last().filter(|r| r.level + 1 == level).map(|r| eoc(r.l2_error, err));
        let row = ConvergenceRow {
            level,
            vertices: m.num_vertices(),
            elements: m.num_elements(),
            state_dofs: problem.num_state_dofs(),
            h,
            rho,
            l2_error: err,
            eoc,
            runs,
        };
        progress(&row);
        rows.push(row);
    }
    Ok(rows)
}
