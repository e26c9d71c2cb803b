//! Piecewise-linear spaces `Y_h` (state) and `P_h` (adjoint) with eliminated
//! homogeneous Dirichlet vertices.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{BoundaryTag, Mesh};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SpaceKind {
    /// Zero on the lateral boundary and at `t = 0`.
    StateY,
    /// Zero on the lateral boundary and at `t = T`.
    AdjointP,
}

impl SpaceKind {
    pub fn masks(self, tag: BoundaryTag) -> bool {
        match self {
            SpaceKind::StateY => matches!(tag, BoundaryTag::Lateral | BoundaryTag::Bottom),
            SpaceKind::AdjointP => matches!(tag, BoundaryTag::Lateral | BoundaryTag::Top),
        }
    }
}

#[derive(Debug)]
pub struct DofSpace {
    mesh: Arc<Mesh>,
    kind: SpaceKind,
    free_dofs: Vec<u32>,
    dirichlet_mask: Vec<bool>,
    dof_of_vertex: Vec<u32>,
}

pub const NO_DOF: u32 = u32::MAX;

impl DofSpace {
    /// Masks every vertex of a facet whose tag is essential for `kind`.
    pub fn new(mesh: Arc<Mesh>, kind: SpaceKind) -> Result<Arc<DofSpace>> {
        if mesh.facet_tags().is_empty() {
            return Err(Error::invalid("mesh carries no boundary tags"));
        }
        let nv = mesh.num_vertices();
        let mut mask = vec![false; nv];
        for (facet, &tag) in mesh.facet_tags() {
            if kind.masks(tag) {
                for &v in facet.iter().take(mesh.st_dim()) {
                    mask[v as usize] = true;
                }
            }
        }
        let mut free_dofs = Vec::new();
        let mut dof_of_vertex = vec![NO_DOF; nv];
        for v in 0..nv {
            if !mask[v] {
                dof_of_vertex[v] = free_dofs.len() as u32;
                free_dofs.push(v as u32);
            }
        }
        Ok(Arc::new(DofSpace { mesh, kind, free_dofs, dirichlet_mask: mask, dof_of_vertex }))
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn kind(&self) -> SpaceKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.free_dofs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.free_dofs.is_empty()
    }

    pub fn free_dofs(&self) -> &[u32] {
        &self.free_dofs
    }

    pub fn dirichlet_mask(&self) -> &[bool] {
        &self.dirichlet_mask
    }

    /// Dof index of a vertex, or [`NO_DOF`] if masked.
    #[inline]
    pub fn dof_raw(&self, v: usize) -> u32 {
        self.dof_of_vertex[v]
    }

    pub fn dof(&self, v: usize) -> Option<usize> {
        match self.dof_of_vertex[v] {
            NO_DOF => None,
            d => Some(d as usize),
        }
    }

    /// Vertex-to-dof map with [`NO_DOF`] at masked vertices.
    pub fn dof_map(&self) -> &[u32] {
        &self.dof_of_vertex
    }

    pub fn same_mesh(&self, other: &DofSpace) -> bool {
        Arc::ptr_eq(&self.mesh, &other.mesh) || self.mesh.id() == other.mesh.id()
    }
}

/// Coefficient vector on the free dofs of a space; masked vertices are zero.
#[derive(Clone, Debug)]
pub struct NodalField {
    space: Arc<DofSpace>,
    values: Vec<f64>,
}

impl NodalField {
    pub fn new(space: Arc<DofSpace>, values: Vec<f64>) -> Result<Self> {
        if values.len() != space.len() {
            return Err(Error::DimensionMismatch(format!("{} values for {} dofs", values.len(), space.len())));
        }
        Ok(NodalField { space, values })
    }

    pub fn zeros(space: Arc<DofSpace>) -> Self {
        let n = space.len();
        NodalField { space, values: vec![0.0; n] }
    }

    /// Nodal interpolation at the free vertices.
    pub fn interpolate(space: Arc<DofSpace>, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let mesh = space.mesh();
        let n = mesh.st_dim();
        let mut values = Vec::with_capacity(space.len());
        for &v in space.free_dofs() {
            let x = &mesh.vertices()[v as usize].coords[..n];
            let fx = f(x);
            if !fx.is_finite() {
                return Err(Error::NonFinite(format!("interpolant at vertex {v}")));
            }
            values.push(fx);
        }
        Ok(NodalField { space, values })
    }

    pub fn space(&self) -> &Arc<DofSpace> {
        &self.space
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Values on all vertices, zero at masked ones.
    pub fn vertex_values(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.space.mesh().num_vertices()];
        for (&v, &x) in self.space.free_dofs().iter().zip(&self.values) {
            out[v as usize] = x;
        }
        out
    }

    /// Piecewise-linear evaluation of the field at the vertices of a refined mesh.
    pub fn prolongate(&self, fine: &Arc<DofSpace>) -> Result<NodalField> {
        if fine.kind() != self.space.kind() {
            return Err(Error::invalid("prolongation between different space kinds"));
        }
        let coarse_mesh = self.space.mesh();
        let fine_mesh = fine.mesh();
        let full = if fine_mesh.id() == coarse_mesh.id() {
            self.vertex_values()
        } else {
            let lin = fine_mesh
                .lineage()
                .filter(|l| l.parent_id == coarse_mesh.id() && l.parent_vertex_count == coarse_mesh.num_vertices())
                .ok_or_else(|| Error::invalid("fine mesh is not a refinement of the coarse mesh"))?;
            let mut full = self.vertex_values();
            full.reserve(lin.midpoint_parents.len());
            for &[a, b] in &lin.midpoint_parents {
                full.push(0.5 * (full[a as usize] + full[b as usize]));
            }
            full
        };
        let values = fine.free_dofs().iter().map(|&v| full[v as usize]).collect();
        Ok(NodalField { space: fine.clone(), values })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn masks_on_3x3_grid() {
        let mesh = Arc::new(Mesh::build_initial(1, 3).unwrap());
        let y = DofSpace::new(mesh.clone(), SpaceKind::StateY).unwrap();
        assert_eq!(y.len(), 2);
        assert_eq!(y.dirichlet_mask().iter().filter(|&&m| m).count(), 7);
        // remaining: (0.5, 0.5) and (0.5, 1)
        let free: Vec<[f64; 2]> = y
            .free_dofs()
            .iter()
            .map(|&v| {
                let c = mesh.vertices()[v as usize].coords;
                [c[0], c[1]]
            })
            .collect();
        assert_eq!(free, vec![[0.5, 0.5], [0.5, 1.0]]);
        let p = DofSpace::new(mesh, SpaceKind::AdjointP).unwrap();
        assert_eq!(p.len(), 2);
    }

    #[test]
    fn untagged_mesh_rejected() {
        let mesh = Arc::new(Mesh::build_initial(1, 3).unwrap().without_tags());
        assert!(DofSpace::new(mesh, SpaceKind::StateY).is_err());
    }

    /// Evaluate a P1 field at a point by locating it in the coarse mesh.
    pub(crate) fn evaluate_by_search(field: &NodalField, x: &[f64]) -> f64 {
        let mesh = field.space().mesh();
        let full = field.vertex_values();
        let n = mesh.st_dim();
        for e in 0..mesh.num_elements() {
            let g = mesh.geometry(e);
            let pts = mesh.element_points(e);
            let lam: Vec<f64> = (0..=n)
                .map(|a| {
                    let b = (a + 1) % (n + 1);
                    // lambda_a(x) = lambda_a(x_b) + grad . (x - x_b), with lambda_a(x_b) = 0
                    (0..n).map(|k| g.grads[a][k] * (x[k] - pts[b][k])).sum::<f64>()
                })
                .collect();
            if lam.iter().all(|&l| l >= -1e-12) {
                let verts = mesh.element_vertices(e);
                return (0..=n).map(|a| lam[a] * full[verts[a] as usize]).sum();
            }
        }
        panic!("point {x:?} outside the mesh");
    }

    #[test]
    fn prolongation_is_linear_interpolation() {
        let coarse = Arc::new(Mesh::build_initial(1, 3).unwrap());
        let once = Arc::new(coarse.refine_adaptive(&[0, 3, 5]).unwrap());
        let fine = Arc::new(once.refine_uniform());
        let yc = DofSpace::new(coarse.clone(), SpaceKind::StateY).unwrap();
        let y1 = DofSpace::new(once.clone(), SpaceKind::StateY).unwrap();
        let yf = DofSpace::new(fine.clone(), SpaceKind::StateY).unwrap();
        let f = NodalField::new(yc, vec![1.0, -0.5]).unwrap();
        let g = f.prolongate(&y1).unwrap().prolongate(&yf).unwrap();
        for (&v, &val) in yf.free_dofs().iter().zip(g.values()) {
            let c = fine.vertices()[v as usize].coords;
            let expect = evaluate_by_search(&f, &c[..2]);
            assert!((val - expect).abs() < 1e-14, "at {c:?}: {val} vs {expect}");
        }
        // skipping a generation is rejected, as are unrelated meshes
        assert!(f.prolongate(&yf).is_err());
        let other = Arc::new(Mesh::build_initial(1, 3).unwrap().refine_uniform());
        let yo = DofSpace::new(other, SpaceKind::StateY).unwrap();
        assert!(f.prolongate(&yo).is_err());
    }
}
