//! P1 finite element matrices and load vectors on the reduced dof spaces.
//!
//! All bilinear forms are integrated exactly: gradients are constant per
//! element and the local mass matrix is `|tau| (1 + delta_ab) / ((n+1)(n+2))`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fespace::{DofSpace, NO_DOF};
use crate::geometry::SimplexGeometry;
use crate::mesh::Mesh;
use crate::quadrature::SimplexRule;
use crate::sparse::{PatternBuilder, SparseMatrix};
use crate::targets::TargetField;

/// How the element-wise regularization parameter was chosen.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum RhoKind {
    Constant(f64),
    /// `rho_tau = s_tau^r` with the Kuhn-normalised element size `s_tau`.
    Local { exponent: f64 },
}

/// Piecewise-constant regularization parameter `rho_tau > 0`.
#[derive(Clone, Debug)]
pub struct RegularizationField {
    kind: RhoKind,
    values: Vec<f64>,
}

impl RegularizationField {
    pub fn constant(mesh: &Mesh, rho: f64) -> Result<Self> {
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::invalid(format!("regularization must be positive, got {rho}")));
        }
        Ok(RegularizationField { kind: RhoKind::Constant(rho), values: vec![rho; mesh.num_elements()] })
    }

    /// `rho_tau = s_tau^r`, where `s_tau` equals the axis spacing on uniform Kuhn meshes.
    pub fn local(mesh: &Mesh, exponent: f64) -> Result<Self> {
        if !(exponent > 0.0) {
            return Err(Error::invalid("local regularization exponent must be positive"));
        }
        let values = (0..mesh.num_elements()).map(|e| mesh.kuhn_size(e).powf(exponent)).collect();
        Ok(RegularizationField { kind: RhoKind::Local { exponent }, values })
    }

    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(Error::invalid("regularization values must be positive and finite"));
        }
        let kind = match values.first() {
            Some(&v) if values.iter().all(|&w| w == v) => RhoKind::Constant(v),
            _ => RhoKind::Local { exponent: f64::NAN },
        };
        Ok(RegularizationField { kind, values })
    }

    pub fn kind(&self) -> RhoKind {
        self.kind
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn constant_value(&self) -> Option<f64> {
        match self.kind {
            RhoKind::Constant(v) => Some(v),
            RhoKind::Local { .. } => None,
        }
    }

    /// Mean of `rho_tau` over the elements adjacent to each vertex.
    pub fn vertex_average(&self, mesh: &Mesh) -> Vec<f64> {
        let mut sum = vec![0.0; mesh.num_vertices()];
        let mut cnt = vec![0u32; mesh.num_vertices()];
        for e in 0..mesh.num_elements() {
            for &v in mesh.element_vertices(e) {
                sum[v as usize] += self.values[e];
                cnt[v as usize] += 1;
            }
        }
        sum.iter().zip(&cnt).map(|(&s, &c)| s / c.max(1) as f64).collect()
    }

    fn check(&self, mesh: &Mesh) -> Result<()> {
        if self.values.len() != mesh.num_elements() {
            return Err(Error::DimensionMismatch(format!(
                "{} regularization values for {} elements",
                self.values.len(),
                mesh.num_elements()
            )));
        }
        Ok(())
    }
}

type LocalMatrix = [[f64; 4]; 4];

/// Generic element loop over a pair of vertex-to-dof maps.
pub(crate) fn assemble_with_maps(
    mesh: &Mesh,
    row_map: &[u32],
    nrows: usize,
    col_map: &[u32],
    ncols: usize,
    mut local: impl FnMut(usize, &SimplexGeometry, &mut LocalMatrix),
) -> SparseMatrix {
    let k = mesh.st_dim() + 1;
    let mut pattern = PatternBuilder::new(nrows, ncols);
    for e in 0..mesh.num_elements() {
        let verts = mesh.element_vertices(e);
        for &a in verts {
            let r = row_map[a as usize];
            if r == NO_DOF {
                continue;
            }
            for &b in verts {
                let c = col_map[b as usize];
                if c != NO_DOF {
                    pattern.add(r as usize, c);
                }
            }
        }
    }
    let mut mat = pattern.build();
    let mut loc = [[0.0; 4]; 4];
    for e in 0..mesh.num_elements() {
        let verts = mesh.element_vertices(e);
        let geo = mesh.geometry(e);
        local(e, &geo, &mut loc);
        for a in 0..k {
            let r = row_map[verts[a] as usize];
            if r == NO_DOF {
                continue;
            }
            for b in 0..k {
                let c = col_map[verts[b] as usize];
                if c != NO_DOF {
                    mat.add_to(r as usize, c, loc[a][b]);
                }
            }
        }
    }
    mat
}

pub(crate) fn local_mass(geo: &SimplexGeometry, scale: f64, loc: &mut LocalMatrix) {
    let n = geo.n as f64;
    let off = scale * geo.volume / ((n + 1.0) * (n + 2.0));
    for (a, row) in loc.iter_mut().enumerate().take(geo.n + 1) {
        for (b, v) in row.iter_mut().enumerate().take(geo.n + 1) {
            *v = if a == b { 2.0 * off } else { off };
        }
    }
}

pub(crate) fn local_stiffness(geo: &SimplexGeometry, scale: f64, loc: &mut LocalMatrix) {
    for a in 0..=geo.n {
        for b in 0..=geo.n {
            loc[a][b] = scale * geo.volume * geo.grad_dot(a, b, 0..geo.n);
        }
    }
}

/// Rows are test functions, columns trial functions; time is the last axis.
pub(crate) fn local_wave(geo: &SimplexGeometry, loc: &mut LocalMatrix) {
    let d = geo.n - 1;
    for a in 0..=geo.n {
        for b in 0..=geo.n {
            loc[a][b] = geo.volume * (geo.grad_dot(a, b, 0..d) - geo.grads[a][d] * geo.grads[b][d]);
        }
    }
}

fn same_mesh(a: &DofSpace, b: &DofSpace) -> Result<()> {
    if a.same_mesh(b) {
        Ok(())
    } else {
        Err(Error::DimensionMismatch("spaces live on different meshes".into()))
    }
}

/// `B[j,k] = <grad_x phi_k, grad_x psi_j> - <d_t phi_k, d_t psi_j>`, rows in `P_h`, columns in `Y_h`.
pub fn assemble_wave(yh: &DofSpace, ph: &DofSpace) -> Result<SparseMatrix> {
    same_mesh(yh, ph)?;
    let mesh = yh.mesh();
    Ok(assemble_with_maps(mesh, ph.dof_map(), ph.len(), yh.dof_map(), yh.len(), |_, g, l| local_wave(g, l)))
}

/// Mass matrix, optionally weighted element-wise by `rho_tau` or `1 / rho_tau`.
pub fn assemble_mass(space: &DofSpace, weight: Option<&RegularizationField>, inverse_weight: bool) -> Result<SparseMatrix> {
    let mesh = space.mesh();
    if let Some(w) = weight {
        w.check(mesh)?;
    }
    let factor = |e: usize| match weight {
        None => 1.0,
        Some(w) if inverse_weight => 1.0 / w.values[e],
        Some(w) => w.values[e],
    };
    Ok(assemble_with_maps(mesh, space.dof_map(), space.len(), space.dof_map(), space.len(), |e, g, l| {
        local_mass(g, factor(e), l)
    }))
}

/// Space-time stiffness `<rho^-1 grad psi_i, grad psi_j>` (unweighted if `weight` is `None`).
pub fn assemble_spacetime_stiffness(space: &DofSpace, weight: Option<&RegularizationField>) -> Result<SparseMatrix> {
    let mesh = space.mesh();
    if let Some(w) = weight {
        w.check(mesh)?;
    }
    Ok(assemble_with_maps(mesh, space.dof_map(), space.len(), space.dof_map(), space.len(), |e, g, l| {
        local_stiffness(g, weight.map_or(1.0, |w| 1.0 / w.values[e]), l)
    }))
}

/// Diagonal of row sums. Rejects negative row sums.
pub fn lump(mass: &SparseMatrix) -> Result<Vec<f64>> {
    let d = mass.row_sums();
    if let Some(i) = d.iter().position(|&v| !(v >= 0.0)) {
        return Err(Error::invalid(format!("row {i} has negative or invalid sum {}", d[i])));
    }
    Ok(d)
}

/// `int_tau f(x) lambda_a(x)` for every local vertex `a`, using `rule`.
pub(crate) fn local_load(pts: &[[f64; 3]], geo: &SimplexGeometry, rule: &SimplexRule, f: &dyn Fn(&[f64]) -> f64, out: &mut [f64; 4]) -> Result<()> {
    let n = geo.n;
    *out = [0.0; 4];
    let mut x = [0.0; 3];
    for (lam, &w) in rule.points.iter().zip(&rule.weights) {
        for k in 0..n {
            x[k] = (0..=n).map(|a| lam[a] * pts[a][k]).sum();
        }
        let fx = f(&x[..n]);
        if !fx.is_finite() {
            return Err(Error::NonFinite(format!("target sample at {:?}", &x[..n])));
        }
        for a in 0..=n {
            out[a] += w * fx * lam[a];
        }
    }
    for v in out.iter_mut() {
        *v *= geo.volume;
    }
    Ok(())
}

pub(crate) fn load_with_map(
    mesh: &Mesh,
    map: &[u32],
    len: usize,
    rule: &SimplexRule,
    f: &dyn Fn(&[f64]) -> f64,
) -> Result<Vec<f64>> {
    let mut b = vec![0.0; len];
    let mut loc = [0.0; 4];
    for e in 0..mesh.num_elements() {
        let verts = mesh.element_vertices(e);
        let pts = mesh.element_points(e);
        local_load(&pts, &mesh.geometry(e), rule, f, &mut loc)?;
        for (a, &v) in verts.iter().enumerate() {
            let i = map[v as usize];
            if i != NO_DOF {
                b[i as usize] += loc[a];
            }
        }
    }
    Ok(b)
}

/// `(y_d, phi_l)` with the quadrature chosen by the target's smoothness class.
pub fn assemble_target_load(space: &DofSpace, target: &TargetField) -> Result<Vec<f64>> {
    let mesh = space.mesh();
    let rule = target.class().quadrature().rule(mesh.st_dim());
    load_with_map(mesh, space.dof_map(), space.len(), &rule, &|x| target.eval(x))
}
