//! Error measurement, convergence studies, nested iteration, spectral checks
//! and the fixed-mesh regularization sweep.

mod nested;
mod spectral;
mod study;
mod sweep;

pub use nested::{maximum_marking, run_adaptive_nested, AdaptivityConfig, NestedRow, NestedTolerance};
pub use spectral::{verify_spectral_equivalence, SpectralReport};
pub use study::{axis_spacing, run_uniform_study, ConvergenceRow, SolverRun, StudyConfig};
pub use sweep::{fit_line, fit_slope, parse_rho_range, rho_powers, run_rho_sweep_1d, trusted_range, SweepConfig, SweepRow, SweepSummary};

use crate::assembly::assemble_spacetime_stiffness;
use crate::fespace::NodalField;
use crate::krylov::dot;
use crate::quadrature::SimplexRule;
use crate::targets::TargetField;

/// Global error and its element contributions.
#[derive(Clone, Debug)]
pub struct ErrorReport {
    pub total: f64,
    /// `||y - y_d||_{L^2(tau)}` per element.
    pub per_element: Vec<f64>,
}

fn element_values(field: &NodalField) -> Vec<f64> {
    field.vertex_values()
}

/// `||y - y_d||_{L^2(Q)}` with the quadrature of the target's smoothness class.
pub fn l2_error(y: &NodalField, target: &TargetField) -> ErrorReport {
    let mesh = y.space().mesh();
    let rule = target.class().quadrature().rule(mesh.st_dim());
    error_with_rule(y, target, &rule)
}

pub(crate) fn error_with_rule(y: &NodalField, target: &TargetField, rule: &SimplexRule) -> ErrorReport {
    let mesh = y.space().mesh();
    let n = mesh.st_dim();
    let vals = element_values(y);
    let mut per_element = Vec::with_capacity(mesh.num_elements());
    let mut x = [0.0; 3];
    for e in 0..mesh.num_elements() {
        let pts = mesh.element_points(e);
        let verts = mesh.element_vertices(e);
        let vol = mesh.geometry(e).volume;
        let mut s = 0.0;
        for (lam, &w) in rule.points.iter().zip(&rule.weights) {
            let mut yh = 0.0;
            for k in 0..n {
                x[k] = (0..=n).map(|a| lam[a] * pts[a][k]).sum();
            }
            for a in 0..=n {
                yh += lam[a] * vals[verts[a] as usize];
            }
            let diff = yh - target.eval(&x[..n]);
            s += w * diff * diff;
        }
        per_element.push((s * vol).max(0.0).sqrt());
    }
    let total = per_element.iter().map(|v| v * v).sum::<f64>().sqrt();
    ErrorReport { total, per_element }
}

/// `|v|_{H^1(Q)} = sqrt(v^T K v)` with the unweighted space-time stiffness.
pub fn h1_seminorm(field: &NodalField) -> f64 {
    let k = assemble_spacetime_stiffness(field.space(), None).expect("unweighted stiffness");
    dot(field.values(), &k.mul_vec(field.values())).max(0.0).sqrt()
}

/// `|y - y_d|_{H^1(Q)}` using the analytic target gradient; `None` without one.
pub fn h1_error(y: &NodalField, target: &TargetField) -> Option<f64> {
    if !target.has_gradient() {
        return None;
    }
    let mesh = y.space().mesh();
    let n = mesh.st_dim();
    let rule = SimplexRule::grundmann_moeller(n, 2);
    let vals = element_values(y);
    let mut total = 0.0;
    let mut x = [0.0; 3];
    let mut g = [0.0; 3];
    for e in 0..mesh.num_elements() {
        let pts = mesh.element_points(e);
        let verts = mesh.element_vertices(e);
        let geo = mesh.geometry(e);
        let mut gh = [0.0; 3];
        for a in 0..=n {
            for k in 0..n {
                gh[k] += vals[verts[a] as usize] * geo.grads[a][k];
            }
        }
        let mut s = 0.0;
        for (lam, &w) in rule.points.iter().zip(&rule.weights) {
            for k in 0..n {
                x[k] = (0..=n).map(|a| lam[a] * pts[a][k]).sum();
            }
            target.gradient(&x[..n], &mut g[..n])?;
            s += w * (0..n).map(|k| (gh[k] - g[k]).powi(2)).sum::<f64>();
        }
        total += s * geo.volume;
    }
    Some(total.sqrt())
}

/// `log2(e_prev / e_cur)` for a halved mesh size.
pub fn eoc(prev: f64, cur: f64) -> f64 {
    (prev / cur).log2()
}
