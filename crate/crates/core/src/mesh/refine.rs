//! Uniform (red / Bey) and adaptive (bisection with closure) refinement.
//!
//! Bisection follows Maubach's tagged scheme: an element `(x0, ..., xn)` with
//! tag `k` is cut at the midpoint `z` of the edge `x0 xk` into
//! `(x0, ..., x(k-1), z, x(k+1), ..., xn)` and `(x1, ..., xk, z, x(k+1), ..., xn)`,
//! both tagged `k - 1` (or `n` when `k = 1`). For triangles this is
//! newest-vertex bisection. Kuhn elements in path order with tag `n`, as
//! produced by [`Mesh::build_initial`] and by Bey's rule, are compatible.

use std::collections::HashMap;

use super::{Element, Lineage, Mesh, Vertex};
use crate::error::{Error, Result};
use crate::quadrature::{edge_pairs, red_children};

/// Default closure sweep budget.
pub const MAX_CLOSURE_SWEEPS: usize = 200;

struct Midpoints {
    map: HashMap<(u32, u32), u32>,
    parents: Vec<[u32; 2]>,
}

impl Midpoints {
    fn new() -> Self {
        Midpoints { map: HashMap::new(), parents: Vec::new() }
    }

    fn get(&mut self, verts: &mut Vec<Vertex>, a: u32, b: u32) -> u32 {
        let key = (a.min(b), a.max(b));
        if let Some(&m) = self.map.get(&key) {
            return m;
        }
        let (pa, pb) = (verts[a as usize].coords, verts[b as usize].coords);
        let id = verts.len() as u32;
        verts.push(Vertex { coords: [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1]), 0.5 * (pa[2] + pb[2])] });
        self.map.insert(key, id);
        self.parents.push([key.0, key.1]);
        id
    }

    fn contains(&self, a: u32, b: u32) -> bool {
        self.map.contains_key(&(a.min(b), a.max(b)))
    }
}

pub(super) fn uniform(mesh: &Mesh) -> Mesh {
    let n = mesh.st_dim();
    let parent_id = mesh.id();
    let parent_vertex_count = mesh.num_vertices();
    let (d, mut verts, elems) = mesh.clone().into_parts();
    let pairs = edge_pairs(n);
    let children = red_children(n);
    let mut mids = Midpoints::new();
    let mut out = Vec::with_capacity(elems.len() * children.len());
    let mut local = [0u32; 10];
    for el in &elems {
        local[..=n].copy_from_slice(&el.vertex_ids[..=n]);
        for (k, &(a, b)) in pairs.iter().enumerate() {
            local[n + 1 + k] = mids.get(&mut verts, el.vertex_ids[a], el.vertex_ids[b]);
        }
        for c in &children {
            let mut ids = [u32::MAX; 4];
            for (slot, &li) in c.iter().enumerate() {
                ids[slot] = local[li];
            }
            out.push(Element { vertex_ids: ids, h_tau: 0.0, generation: el.generation + 1, refinement_edge: n as u8 });
        }
    }
    let lineage = Lineage { parent_id, parent_vertex_count, midpoint_parents: mids.parents };
    Mesh::from_parts(d, verts, out, Some(lineage)).expect("red refinement of a valid mesh is valid")
}

fn bisect(el: &Element, n: usize, verts: &mut Vec<Vertex>, mids: &mut Midpoints) -> [Element; 2] {
    let k = el.refinement_edge as usize;
    let v = &el.vertex_ids;
    let z = mids.get(verts, v[0], v[k]);
    let mut c1 = [u32::MAX; 4];
    let mut c2 = [u32::MAX; 4];
    for i in 0..k {
        c1[i] = v[i];
        c2[i] = v[i + 1];
    }
    c1[k] = z;
    c2[k] = z;
    for i in k + 1..=n {
        c1[i] = v[i];
        c2[i] = v[i];
    }
    let tag = if k > 1 { k - 1 } else { n } as u8;
    let g = el.generation + 1;
    [
        Element { vertex_ids: c1, h_tau: 0.0, generation: g, refinement_edge: tag },
        Element { vertex_ids: c2, h_tau: 0.0, generation: g, refinement_edge: tag },
    ]
}

pub(super) fn adaptive(mesh: &Mesh, marked: &[usize], max_sweeps: usize) -> Result<Mesh> {
    let ne = mesh.num_elements();
    if let Some(&bad) = marked.iter().find(|&&e| e >= ne) {
        return Err(Error::invalid(format!("marked element {bad} out of range (mesh has {ne})")));
    }
    if marked.is_empty() {
        return Ok(mesh.clone());
    }
    let n = mesh.st_dim();
    let parent_id = mesh.id();
    let parent_vertex_count = mesh.num_vertices();
    let (d, mut verts, mut elems) = mesh.clone().into_parts();
    let mut flags = vec![false; ne];
    for &e in marked {
        flags[e] = true;
    }
    let pairs = edge_pairs(n);
    let mut mids = Midpoints::new();
    let mut sweeps = 0;
    loop {
        let mut next = Vec::with_capacity(elems.len() + 2 * flags.iter().filter(|&&f| f).count());
        for (el, &f) in elems.iter().zip(&flags) {
            if f {
                next.extend_from_slice(&bisect(el, n, &mut verts, &mut mids));
            } else {
                next.push(*el);
            }
        }
        elems = next;
        flags = elems
            .iter()
            .map(|el| pairs.iter().any(|&(a, b)| mids.contains(el.vertex_ids[a], el.vertex_ids[b])))
            .collect();
        if !flags.iter().any(|&f| f) {
            break;
        }
        sweeps += 1;
        if sweeps > max_sweeps {
            return Err(Error::ClosureBudget { sweeps: max_sweeps });
        }
    }
    log::debug!("bisection closure finished after {sweeps} extra sweeps");
    let lineage = Lineage { parent_id, parent_vertex_count, midpoint_parents: mids.parents };
    Mesh::from_parts(d, verts, elems, Some(lineage))
}
