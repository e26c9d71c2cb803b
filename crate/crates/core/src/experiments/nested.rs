//! Nested iteration on uniformly or adaptively refined mesh sequences.

use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{eoc, l2_error};
use crate::error::{Error, Result};
use crate::fespace::NodalField;
use crate::krylov::{dot, Diagonal, LinearOperator};
use crate::mesh::Mesh;
use crate::ocp::{InnerSolve, OcpProblem, OcpSettings, Regularization, RhoStrategy};
use crate::targets::TargetField;

/// What the per-level threshold `alpha [N_l / N_{l-1}]^{beta/3}` is relative to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum NestedTolerance {
    /// Preconditioned residual of the prolongated initial guess.
    InitialResidual,
    /// Preconditioned norm of the right-hand side.
    RightHandSide,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdaptivityConfig {
    /// Maximum-marking parameter.
    pub theta: f64,
    pub alpha: f64,
    pub beta: f64,
    pub max_levels: usize,
    /// Stop before a level would exceed this many vertices.
    pub max_vertices: usize,
    /// Residual reduction on the coarsest level.
    pub coarse_reduction: f64,
    pub tolerance: NestedTolerance,
    pub inner: InnerSolve,
}

impl AdaptivityConfig {
    /// Defaults of the reference experiments for `d = 2`.
    pub fn defaults(regularization: Regularization, uniform: bool) -> Self {
        let (alpha, inner) = match regularization {
            Regularization::L2 => (0.4, InnerSolve::Lumped),
            Regularization::Energy => (0.5, InnerSolve::Amg(3)),
        };
        AdaptivityConfig {
            theta: 0.5,
            alpha,
            beta: if uniform { 0.5 } else { 0.75 },
            max_levels: 5,
            max_vertices: usize::MAX,
            coarse_reduction: 1e-6,
            tolerance: NestedTolerance::InitialResidual,
            inner,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return Err(Error::invalid(format!("theta = {} outside (0, 1]", self.theta)));
        }
        if !(self.alpha > 0.0 && self.beta >= 0.0 && self.coarse_reduction > 0.0 && self.coarse_reduction < 1.0) {
            return Err(Error::invalid("nested thresholds must be positive"));
        }
        if self.max_levels == 0 {
            return Err(Error::invalid("max_levels must be positive"));
        }
        Ok(())
    }

    /// `alpha [N_l / N_{l-1}]^{beta/3}`.
    pub fn threshold(&self, n_fine: usize, n_coarse: usize) -> f64 {
        self.alpha * (n_fine as f64 / n_coarse as f64).powf(self.beta / 3.0)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NestedRow {
    pub level: usize,
    pub vertices: usize,
    pub elements: usize,
    pub state_dofs: usize,
    pub l2_error: f64,
    pub eoc: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Relative stopping tolerance handed to PCG on this level.
    pub rel_tol: f64,
    pub seconds: f64,
}

/// Elements whose indicator is at least `theta` times the largest one.
pub fn maximum_marking(indicators: &[f64], theta: f64) -> Vec<usize> {
    let max = indicators.iter().cloned().fold(0.0, f64::max);
    if max <= 0.0 {
        return Vec::new();
    }
    let bound = theta * max;
    indicators.iter().enumerate().filter(|(_, &v)| v >= bound).map(|(e, _)| e).collect()
}

/// Nested SC-PCG: each level starts from the prolongated previous state.
pub fn run_adaptive_nested(
    d: usize,
    regularization: Regularization,
    target: &TargetField,
    cfg: &AdaptivityConfig,
    uniform: bool,
    settings: &OcpSettings,
    mut progress: impl FnMut(&NestedRow),
) -> Result<Vec<NestedRow>> {
    cfg.validate()?;
    let mut mesh = Arc::new(Mesh::uniform_level(d, 1)?);
    let mut rows: Vec<NestedRow> = Vec::new();
    let mut prev: Option<NodalField> = None;
    for level in 1..=cfg.max_levels {
        let start = Instant::now();
        let rho = if uniform {
            RhoStrategy::Constant(super::axis_spacing(level).powf(regularization.rho_exponent()))
        } else {
            RhoStrategy::Local
        };
        let problem = OcpProblem::new(mesh.clone(), regularization, rho, target.clone())?.with_amg_config(settings.amg);
        let (y0, rel_tol) = match &prev {
            None => (None, cfg.coarse_reduction),
            Some(coarse) => {
                let y0 = coarse.prolongate(problem.state_space())?.into_values();
                let factor = cfg.threshold(problem.num_state_dofs(), coarse.space().len());
                let rel = match cfg.tolerance {
                    NestedTolerance::InitialResidual => factor,
                    NestedTolerance::RightHandSide => factor * rhs_to_initial_ratio(&problem, cfg.inner, settings, &y0)?,
                };
                (Some(y0), rel)
            }
        };
        let res = problem.solve_sc_pcg_with(cfg.inner, settings, y0.as_deref(), rel_tol.min(1.0 - f64::EPSILON))?;
        let err = l2_error(&res.y, target);
        let row = NestedRow {
            level,
            vertices: mesh.num_vertices(),
            elements: mesh.num_elements(),
            state_dofs: problem.num_state_dofs(),
            l2_error: err.total,
            eoc: if uniform { rows.last().map(|r| eoc(r.l2_error, err.total)) } else { None },
            iterations: res.stats.iterations,
            converged: res.stats.converged,
            rel_tol,
            seconds: start.elapsed().as_secs_f64(),
        };
        progress(&row);
        rows.push(row);
        if level == cfg.max_levels {
            break;
        }
        let next = if uniform {
            mesh.refine_uniform()
        } else {
            let marked = maximum_marking(&err.per_element, cfg.theta);
            mesh.refine_adaptive(&marked)?
        };
        if next.num_vertices() > cfg.max_vertices {
            break;
        }
        prev = Some(res.y);
        mesh = Arc::new(next);
    }
    Ok(rows)
}

/// `||y_d||_{D^{-1}} / ||y_d - S y0||_{D^{-1}}`.
fn rhs_to_initial_ratio(problem: &OcpProblem, inner: InnerSolve, settings: &OcpSettings, y0: &[f64]) -> Result<f64> {
    let dinv = Diagonal::inverse_of(problem.lumped_mass())?;
    let b = problem.load();
    let mut r = problem.schur_apply(inner, settings, y0)?;
    r.iter_mut().zip(b).for_each(|(ri, bi)| *ri = bi - *ri);
    let nb = dot(b, &dinv.apply_vec(b)).sqrt();
    let nr = dot(&r, &dinv.apply_vec(&r)).sqrt();
    Ok(if nr > 0.0 { nb / nr } else { 1.0 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn marking_selects_by_fraction_of_max() {
        assert_eq!(maximum_marking(&[0.1, 1.0, 0.5, 0.49], 0.5), vec![1, 2]);
        assert_eq!(maximum_marking(&[0.0, 0.0], 0.5), Vec::<usize>::new());
        assert_eq!(maximum_marking(&[2.0, 2.0], 1.0), vec![0, 1]);
    }

    #[test]
    fn threshold_formula() {
        let c = AdaptivityConfig::defaults(Regularization::L2, true);
        assert!((c.threshold(8, 1) - 0.4 * 2f64.sqrt()).abs() < 1e-14);
        assert!(AdaptivityConfig { theta: 0.0, ..c }.validate().is_err());
    }

    #[test]
    fn nested_small_run_converges() {
        let t = TargetField::new(crate::targets::TargetId::Discontinuous, 1).unwrap();
        let mut cfg = AdaptivityConfig::defaults(Regularization::L2, true);
        cfg.max_levels = 3;
        let rows = run_adaptive_nested(1, Regularization::L2, &t, &cfg, true, &OcpSettings::default(), |_| {}).unwrap();
        assert_eq!(rows.len(), 3);
        assert!(rows.iter().all(|r| r.converged));
        assert!(rows[2].l2_error < rows[0].l2_error);
        let mut cfg = AdaptivityConfig::defaults(Regularization::L2, false);
        cfg.max_levels = 3;
        let rows = run_adaptive_nested(1, Regularization::L2, &t, &cfg, false, &OcpSettings::default(), |_| {}).unwrap();
        assert!(rows[1].vertices < Mesh::uniform_level(1, 2).unwrap().num_vertices());
    }
}
