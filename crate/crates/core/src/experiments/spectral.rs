//! Extreme eigenvalues of the Schur complement against the lumped mass preconditioner.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::krylov::lanczos_extreme_eigs;
use crate::ocp::{InnerSolve, OcpProblem, OcpSettings, Regularization};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpectralReport {
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// Guaranteed lower bound `1 / (d + 3)`.
    pub lower_bound: f64,
    /// `lambda_max - 1`, a lower estimate of `c` in `(B y)^T A^{-1} (B y) <= c y^T M y`.
    pub coupling_constant: f64,
    /// `c^{1/4}` (L2) or `c^{1/2}` (energy): the implied inverse-inequality constant.
    pub implied_inverse_constant: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl SpectralReport {
    pub fn lower_bound_holds(&self, slack: f64) -> bool {
        self.lambda_min >= self.lower_bound - slack
    }
}

/// Lanczos on `S y = lambda D y` with `D = lump(M)`.
pub fn verify_spectral_equivalence(
    problem: &OcpProblem,
    inner: InnerSolve,
    settings: &OcpSettings,
    iters: usize,
    seed: u64,
) -> Result<SpectralReport> {
    let s = problem.schur_operator(inner, settings)?;
    let res = lanczos_extreme_eigs(&s, problem.lumped_mass(), iters, seed)?;
    let d = problem.mesh().dim();
    let c = (res.lambda_max - 1.0).max(0.0);
    let root = match problem.regularization() {
        Regularization::L2 => 0.25,
        Regularization::Energy => 0.5,
    };
    Ok(SpectralReport {
        lambda_min: res.lambda_min,
        lambda_max: res.lambda_max,
        lower_bound: 1.0 / (d as f64 + 3.0),
        coupling_constant: c,
        implied_inverse_constant: c.powf(root),
        iterations: res.iterations,
        converged: res.converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::axis_spacing;
    use crate::mesh::Mesh;
    use crate::ocp::RhoStrategy;
    use crate::targets::{TargetField, TargetId};
    use std::sync::Arc;

    #[test]
    fn lanczos_matches_dense_generalized_eigs() {
        for reg in [Regularization::L2, Regularization::Energy] {
            let mesh = Arc::new(Mesh::uniform_level(1, 2).unwrap());
            let rho = axis_spacing(2).powf(reg.rho_exponent());
            let t = TargetField::new(TargetId::Smooth, 1).unwrap();
            let p = OcpProblem::new(mesh, reg, RhoStrategy::Constant(rho), t).unwrap();
            let settings = OcpSettings::default();
            let rep = verify_spectral_equivalence(&p, InnerSolve::Exact, &settings, 200, 3).unwrap();
            // dense D^{-1/2} S D^{-1/2}
            let n = p.num_state_dofs();
            let d = p.lumped_mass();
            let mut dense = vec![0.0; n * n];
            for j in 0..n {
                let mut e = vec![0.0; n];
                e[j] = 1.0;
                let col = p.schur_apply(InnerSolve::Exact, &settings, &e).unwrap();
                for i in 0..n {
                    dense[i * n + j] = col[i] / (d[i] * d[j]).sqrt();
                }
            }
            for i in 0..n {
                for j in 0..i {
                    let a = 0.5 * (dense[i * n + j] + dense[j * n + i]);
                    dense[i * n + j] = a;
                    dense[j * n + i] = a;
                }
            }
            let eig = crate::dense::symmetric_eigenvalues(&dense, n);
            let (lo, hi) = (eig[0], eig[n - 1]);
            assert!((rep.lambda_min - lo).abs() < 1e-6 * hi, "{reg}: {} vs {lo}", rep.lambda_min);
            assert!((rep.lambda_max - hi).abs() < 1e-6 * hi, "{reg}: {} vs {hi}", rep.lambda_max);
            assert!(rep.lower_bound_holds(1e-8));
        }
    }
}
