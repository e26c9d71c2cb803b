//! Simplicial meshes of the space-time cylinder `Q = (0,1)^d x (0,1)`.
//!
//! Coordinates are stored as `[f64; 3]` with the spatial components first and
//! time at index `d`; for `d = 1` the last slot is unused and zero. Elements
//! keep their vertices in the order used by bisection (see [`refine`]).

mod refine;

use std::collections::{BTreeMap, HashMap};
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geometry::{aspect_ratio, SimplexGeometry};

pub use refine::MAX_CLOSURE_SWEEPS;

/// Coordinate tolerance for boundary predicates.
pub const COORD_TOL: f64 = 1e-12;

static NEXT_MESH_ID: AtomicU64 = AtomicU64::new(1);

fn fresh_id() -> u64 {
    NEXT_MESH_ID.fetch_add(1, Ordering::Relaxed)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Vertex {
    pub coords: [f64; 3],
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Element {
    /// Vertex ids; the first `d + 2` entries are used.
    pub vertex_ids: [u32; 4],
    /// `|tau|^(1/(d+1))`.
    pub h_tau: f64,
    pub generation: u16,
    /// Bisection tag `k`: the refinement edge joins local vertices 0 and `k`.
    pub refinement_edge: u8,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BoundaryTag {
    Lateral,
    Bottom,
    Top,
    Interior,
}

/// Sorted vertex ids of a facet, padded with `u32::MAX` for `d = 1`.
pub type Facet = [u32; 3];

/// Provenance of a mesh produced by refinement: new vertices are edge midpoints.
#[derive(Clone, Debug)]
pub struct Lineage {
    pub parent_id: u64,
    pub parent_vertex_count: usize,
    /// Endpoints of the bisected edge for every vertex `>= parent_vertex_count`.
    pub midpoint_parents: Vec<[u32; 2]>,
}

#[derive(Clone, Debug)]
pub struct Mesh {
    dim: usize,
    vertices: Vec<Vertex>,
    elements: Vec<Element>,
    facet_tags: BTreeMap<Facet, BoundaryTag>,
    id: u64,
    lineage: Option<Lineage>,
}

impl Mesh {
    /// Structured Kuhn mesh with `n_per_axis` vertices per axis.
    ///
    /// Each cube is split into `(d+1)!` simplices sharing its main diagonal;
    /// vertices are ordered along the monotone lattice path, which makes every
    /// element compatible with bisection and with Bey's refinement.
    pub fn build_initial(d: usize, n_per_axis: usize) -> Result<Mesh> {
        if !(1..=2).contains(&d) {
            return Err(Error::invalid(format!("spatial dimension d={d} is not supported (expected 1 or 2)")));
        }
        if n_per_axis < 2 {
            return Err(Error::invalid(format!("n_per_axis must be at least 2, got {n_per_axis}")));
        }
        let n = d + 1;
        let m = n_per_axis;
        let cells = m - 1;
        let total = m.pow(n as u32);
        let index = |ijk: [usize; 3]| -> u32 {
            let mut id = 0;
            for k in (0..n).rev() {
                id = id * m + ijk[k];
            }
            id as u32
        };
        let mut vertices = Vec::with_capacity(total);
        for id in 0..total {
            let mut coords = [0.0; 3];
            let mut rest = id;
            for c in coords.iter_mut().take(n) {
                *c = (rest % m) as f64 / cells as f64;
                rest /= m;
            }
            vertices.push(Vertex { coords });
        }
        let perms = permutations(n);
        let mut elements = Vec::with_capacity(cells.pow(n as u32) * perms.len());
        for cell in 0..cells.pow(n as u32) {
            let mut base = [0usize; 3];
            let mut rest = cell;
            for b in base.iter_mut().take(n) {
                *b = rest % cells;
                rest /= cells;
            }
            for perm in &perms {
                let mut ids = [u32::MAX; 4];
                let mut cur = base;
                ids[0] = index(cur);
                for (k, &axis) in perm.iter().enumerate() {
                    cur[axis] += 1;
                    ids[k + 1] = index(cur);
                }
                elements.push(Element { vertex_ids: ids, h_tau: 0.0, generation: 0, refinement_edge: n as u8 });
            }
        }
        Mesh::from_parts(d, vertices, elements, None)
    }

    /// Assemble a mesh from raw parts; computes sizes and boundary tags.
    pub fn from_parts(d: usize, vertices: Vec<Vertex>, mut elements: Vec<Element>, lineage: Option<Lineage>) -> Result<Mesh> {
        if !(1..=2).contains(&d) {
            return Err(Error::invalid(format!("spatial dimension d={d} is not supported")));
        }
        let nv = vertices.len();
        for (e, el) in elements.iter_mut().enumerate() {
            let verts = &el.vertex_ids[..d + 2];
            if verts.iter().any(|&v| v as usize >= nv) {
                return Err(Error::invalid(format!("element {e} references a missing vertex")));
            }
            let pts: Vec<[f64; 3]> = verts.iter().map(|&v| vertices[v as usize].coords).collect();
            let geo = SimplexGeometry::new(&pts, d + 1);
            if !(geo.volume > 0.0) || !geo.volume.is_finite() {
                return Err(Error::DegenerateElement { element: e, volume: geo.volume });
            }
            el.h_tau = geo.volume.powf(1.0 / (d as f64 + 1.0));
        }
        let mut mesh = Mesh { dim: d, vertices, elements, facet_tags: BTreeMap::new(), id: fresh_id(), lineage };
        mesh.facet_tags = mesh.tag_boundary_facets();
        Ok(mesh)
    }

    /// Same mesh without any facet tags (used to exercise tag validation).
    pub fn without_tags(&self) -> Mesh {
        Mesh { facet_tags: BTreeMap::new(), id: fresh_id(), lineage: None, ..self.clone() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Space-time dimension `n = d + 1`.
    pub fn st_dim(&self) -> usize {
        self.dim + 1
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn lineage(&self) -> Option<&Lineage> {
        self.lineage.as_ref()
    }

    pub fn facet_tags(&self) -> &BTreeMap<Facet, BoundaryTag> {
        &self.facet_tags
    }

    pub fn facet_tag(&self, facet: &Facet) -> BoundaryTag {
        self.facet_tags.get(facet).copied().unwrap_or(BoundaryTag::Interior)
    }

    #[inline]
    pub fn element_vertices(&self, e: usize) -> &[u32] {
        &self.elements[e].vertex_ids[..self.dim + 2]
    }

    #[inline]
    pub fn element_points(&self, e: usize) -> [[f64; 3]; 4] {
        let mut pts = [[0.0; 3]; 4];
        for (k, &v) in self.element_vertices(e).iter().enumerate() {
            pts[k] = self.vertices[v as usize].coords;
        }
        pts
    }

    pub fn geometry(&self, e: usize) -> SimplexGeometry {
        SimplexGeometry::new(&self.element_points(e)[..self.dim + 2], self.dim + 1)
    }

    /// Time coordinate of a vertex.
    #[inline]
    pub fn time(&self, v: usize) -> f64 {
        self.vertices[v].coords[self.dim]
    }

    pub fn element_size_field(&self) -> Vec<f64> {
        self.elements.iter().map(|e| e.h_tau).collect()
    }

    /// Size normalised so that a Kuhn simplex cut from a cube of edge `h` has size `h`.
    pub fn kuhn_size(&self, e: usize) -> f64 {
        let n = self.dim + 1;
        let nf: f64 = (1..=n).map(|i| i as f64).product();
        nf.powf(1.0 / n as f64) * self.elements[e].h_tau
    }

    pub fn volumes(&self) -> Vec<f64> {
        (0..self.elements.len()).map(|e| self.geometry(e).volume).collect()
    }

    pub fn total_volume(&self) -> f64 {
        self.volumes().iter().sum()
    }

    /// Largest scaled circumradius/inradius ratio over all elements.
    pub fn max_aspect_ratio(&self) -> f64 {
        (0..self.elements.len())
            .map(|e| aspect_ratio(&self.element_points(e)[..self.dim + 2], self.dim + 1))
            .fold(0.0, f64::max)
    }

    /// Which boundary part a point set lies on, judged from coordinates alone.
    pub fn classify_points(&self, pts: &[[f64; 3]]) -> BoundaryTag {
        let d = self.dim;
        for axis in 0..=d {
            for side in [0.0, 1.0] {
                if pts.iter().all(|p| (p[axis] - side).abs() <= COORD_TOL) {
                    return if axis < d {
                        BoundaryTag::Lateral
                    } else if side == 0.0 {
                        BoundaryTag::Bottom
                    } else {
                        BoundaryTag::Top
                    };
                }
            }
        }
        BoundaryTag::Interior
    }

    /// Boundary parts a vertex belongs to: (lateral, bottom, top).
    pub fn vertex_boundary(&self, v: usize) -> (bool, bool, bool) {
        let c = &self.vertices[v].coords;
        let on = |x: f64, s: f64| (x - s).abs() <= COORD_TOL;
        let lateral = (0..self.dim).any(|k| on(c[k], 0.0) || on(c[k], 1.0));
        (lateral, on(c[self.dim], 0.0), on(c[self.dim], 1.0))
    }

    fn tag_boundary_facets(&self) -> BTreeMap<Facet, BoundaryTag> {
        let n = self.dim + 1;
        let mut tags = BTreeMap::new();
        for e in 0..self.elements.len() {
            let verts = self.element_vertices(e);
            for skip in 0..=n {
                let pts: Vec<[f64; 3]> =
                    (0..=n).filter(|&i| i != skip).map(|i| self.vertices[verts[i] as usize].coords).collect();
                let tag = self.classify_points(&pts);
                if tag != BoundaryTag::Interior {
                    tags.insert(make_facet(verts, skip), tag);
                }
            }
        }
        tags
    }

    /// Conformity check: each facet is shared by at most two elements and
    /// facets owned by a single element lie on the boundary.
    pub fn check_conformity(&self) -> Result<()> {
        let n = self.dim + 1;
        let mut count: HashMap<Facet, u8> = HashMap::new();
        for e in 0..self.elements.len() {
            let verts = self.element_vertices(e);
            for skip in 0..=n {
                *count.entry(make_facet(verts, skip)).or_insert(0) += 1;
            }
        }
        for (facet, c) in &count {
            if *c > 2 {
                return Err(Error::NonConforming(format!("facet {facet:?} shared by {c} elements")));
            }
            if *c == 1 {
                let pts: Vec<[f64; 3]> = facet
                    .iter()
                    .take(n)
                    .map(|&v| self.vertices[v as usize].coords)
                    .collect();
                if self.classify_points(&pts) == BoundaryTag::Interior {
                    return Err(Error::NonConforming(format!("unmatched interior facet {facet:?}")));
                }
            }
        }
        Ok(())
    }

    /// Number of distinct edges.
    pub fn num_edges(&self) -> usize {
        let n = self.dim + 1;
        let mut edges = std::collections::HashSet::new();
        for e in 0..self.elements.len() {
            let v = self.element_vertices(e);
            for a in 0..=n {
                for b in a + 1..=n {
                    edges.insert((v[a].min(v[b]), v[a].max(v[b])));
                }
            }
        }
        edges.len()
    }

    /// SHA-256 over coordinates and connectivity.
    pub fn checksum(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.dim as u64).to_le_bytes());
        for v in &self.vertices {
            for c in &v.coords[..self.dim + 1] {
                h.update(c.to_le_bytes());
            }
        }
        for e in 0..self.elements.len() {
            for &v in self.element_vertices(e) {
                h.update(v.to_le_bytes());
            }
        }
        hex::encode(h.finalize())
    }

    pub fn refine_uniform(&self) -> Mesh {
        refine::uniform(self)
    }

    pub fn refine_adaptive(&self, marked: &[usize]) -> Result<Mesh> {
        refine::adaptive(self, marked, MAX_CLOSURE_SWEEPS)
    }

    pub fn refine_adaptive_with_budget(&self, marked: &[usize], max_sweeps: usize) -> Result<Mesh> {
        refine::adaptive(self, marked, max_sweeps)
    }

    /// Uniform level `l` mesh: `2^(l+1) + 1` vertices per axis (level 1 is the initial mesh).
    pub fn uniform_level(d: usize, level: usize) -> Result<Mesh> {
        if level == 0 {
            return Err(Error::invalid("levels start at 1"));
        }
        let mut mesh = Mesh::build_initial(d, 5)?;
        for _ in 1..level {
            mesh = mesh.refine_uniform();
        }
        Ok(mesh)
    }

    pub(crate) fn into_parts(self) -> (usize, Vec<Vertex>, Vec<Element>) {
        (self.dim, self.vertices, self.elements)
    }
}

pub(crate) fn make_facet(verts: &[u32], skip: usize) -> Facet {
    let mut f = [u32::MAX; 3];
    let mut k = 0;
    for (i, &v) in verts.iter().enumerate() {
        if i != skip {
            f[k] = v;
            k += 1;
        }
    }
    f[..k].sort_unstable();
    f
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, left: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if left.is_empty() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..left.len() {
            let x = left.remove(i);
            prefix.push(x);
            rec(prefix, left, out);
            prefix.pop();
            left.insert(i, x);
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut (0..n).collect(), &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn initial_mesh_counts() {
        let m = Mesh::build_initial(2, 5).unwrap();
        assert_eq!((m.num_vertices(), m.num_elements()), (125, 384));
        let m = Mesh::build_initial(1, 2).unwrap();
        assert_eq!((m.num_vertices(), m.num_elements()), (4, 2));
        // the 4 outer edges are tagged; the diagonal is interior
        assert_eq!(m.facet_tags().len(), 4);
        let m = Mesh::build_initial(1, 3).unwrap();
        assert_eq!((m.num_vertices(), m.num_elements()), (9, 8));
        // Euler characteristic of a disk: V - E + F = 1
        assert_eq!(9 - m.num_edges() as i64 + 8, 1);
    }

    #[test]
    fn unsupported_dimension_is_rejected() {
        assert!(Mesh::build_initial(3, 3).is_err());
        assert!(Mesh::build_initial(0, 3).is_err());
        assert!(Mesh::build_initial(1, 1).is_err());
    }

    #[test]
    fn sizes_and_volumes() {
        let m = Mesh::build_initial(1, 2).unwrap();
        for h in m.element_size_field() {
            assert!((h - 0.5f64.sqrt()).abs() < 1e-15);
        }
        let m = Mesh::build_initial(2, 2).unwrap();
        for h in m.element_size_field() {
            assert!((h - (1.0f64 / 6.0).powf(1.0 / 3.0)).abs() < 1e-15);
        }
        assert!((m.total_volume() - 1.0).abs() < 1e-14);
        assert!((m.kuhn_size(0) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn tags_partition_the_boundary() {
        let m = Mesh::build_initial(2, 3).unwrap();
        let mut counts = BTreeMap::new();
        for tag in m.facet_tags().values() {
            *counts.entry(*tag).or_insert(0) += 1;
        }
        // 2x2 cells per face, 2 triangles each
        assert_eq!(counts[&BoundaryTag::Bottom], 8);
        assert_eq!(counts[&BoundaryTag::Top], 8);
        assert_eq!(counts[&BoundaryTag::Lateral], 32);
        m.check_conformity().unwrap();
    }
}
