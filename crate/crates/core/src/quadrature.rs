//! Quadrature on simplices in barycentric form.
//!
//! Rules are stored with barycentric points and weights normalised to sum to
//! one, so `sum_q w_q f(x_q) * |tau|` approximates the integral over `tau`.

use serde::{Deserialize, Serialize};

/// Red refinement child tables. Local indices `0..=n` are the vertices,
/// followed by the edge midpoints in the order of [`edge_pairs`].
pub(crate) const RED_CHILDREN_2: [[usize; 3]; 4] = [[0, 3, 4], [3, 1, 5], [4, 5, 2], [3, 4, 5]];
/// Bey's refinement of a tetrahedron.
pub(crate) const RED_CHILDREN_3: [[usize; 4]; 8] = [
    [0, 4, 5, 6],
    [4, 1, 7, 8],
    [5, 7, 2, 9],
    [6, 8, 9, 3],
    [4, 5, 6, 8],
    [4, 5, 7, 8],
    [5, 6, 8, 9],
    [5, 7, 8, 9],
];

/// Local edges `(a, b)` with `a < b` in lexicographic order.
pub(crate) fn edge_pairs(n: usize) -> &'static [(usize, usize)] {
    match n {
        2 => &[(0, 1), (0, 2), (1, 2)],
        3 => &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)],
        _ => panic!("simplex dimension {n} not supported"),
    }
}

/// Children of the red (Bey) refinement as local index lists.
pub(crate) fn red_children(n: usize) -> Vec<Vec<usize>> {
    match n {
        2 => RED_CHILDREN_2.iter().map(|c| c.to_vec()).collect(),
        3 => RED_CHILDREN_3.iter().map(|c| c.to_vec()).collect(),
        _ => panic!("simplex dimension {n} not supported"),
    }
}

#[derive(Clone, Debug)]
pub struct SimplexRule {
    pub n: usize,
    pub points: Vec<[f64; 4]>,
    pub weights: Vec<f64>,
}

impl SimplexRule {
    /// Grundmann-Möller rule of degree `2s + 1`.
    pub fn grundmann_moeller(n: usize, s: usize) -> Self {
        let d = 2 * s + 1;
        let nf = factorial(n);
        let mut points = Vec::new();
        let mut weights = Vec::new();
        for i in 0..=s {
            let denom = (d + n - 2 * i) as f64;
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            let w = sign * 2f64.powi(-2 * s as i32) * denom.powi(d as i32)
                / (factorial(i) * factorial(d + n - i));
            for beta in compositions(s - i, n + 1) {
                let mut p = [0.0; 4];
                for (k, b) in beta.iter().enumerate() {
                    p[k] = (2 * b + 1) as f64 / denom;
                }
                points.push(p);
                weights.push(w * nf);
            }
        }
        SimplexRule { n, points, weights }
    }

    /// Symmetric `n + 1` point rule exact for quadratics.
    pub fn degree2(n: usize) -> Self {
        let nf = n as f64;
        let b = (nf + 2.0 - (nf + 2.0).sqrt()) / ((nf + 1.0) * (nf + 2.0));
        let a = 1.0 - nf * b;
        let points = (0..=n)
            .map(|k| {
                let mut p = [0.0; 4];
                for (j, pj) in p.iter_mut().enumerate().take(n + 1) {
                    *pj = if j == k { a } else { b };
                }
                p
            })
            .collect();
        SimplexRule { n, points, weights: vec![1.0 / (nf + 1.0); n + 1] }
    }

    pub fn centroid(n: usize) -> Self {
        let mut p = [0.0; 4];
        for pj in p.iter_mut().take(n + 1) {
            *pj = 1.0 / (n as f64 + 1.0);
        }
        SimplexRule { n, points: vec![p], weights: vec![1.0] }
    }

    /// Composite rule on `levels` rounds of uniform red subdivision.
    pub fn subdivided(&self, levels: usize) -> Self {
        let n = self.n;
        let mut simplices: Vec<Vec<[f64; 4]>> = vec![(0..=n)
            .map(|k| {
                let mut p = [0.0; 4];
                p[k] = 1.0;
                p
            })
            .collect()];
        let children = red_children(n);
        for _ in 0..levels {
            let mut next = Vec::with_capacity(simplices.len() * children.len());
            for s in &simplices {
                let mut local = s.clone();
                for &(a, b) in edge_pairs(n) {
                    let mut m = [0.0; 4];
                    for k in 0..4 {
                        m[k] = 0.5 * (s[a][k] + s[b][k]);
                    }
                    local.push(m);
                }
                for c in &children {
                    next.push(c.iter().map(|&i| local[i]).collect());
                }
            }
            simplices = next;
        }
        let scale = 1.0 / simplices.len() as f64;
        let mut points = Vec::new();
        let mut weights = Vec::new();
        for s in &simplices {
            for (q, w) in self.points.iter().zip(&self.weights) {
                let mut p = [0.0; 4];
                for (a, vert) in s.iter().enumerate() {
                    for k in 0..4 {
                        p[k] += q[a] * vert[k];
                    }
                }
                points.push(p);
                weights.push(w * scale);
            }
        }
        SimplexRule { n, points, weights }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Quadrature chosen by the regularity of the integrand.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum QuadraturePolicy {
    /// Degree-5 Grundmann-Möller rule (at least degree 4).
    Smooth,
    /// Two levels of subdivision with a degree-2 rule.
    Kinked,
    /// Three levels of subdivision with the centroid rule.
    Discontinuous,
}

impl QuadraturePolicy {
    pub fn rule(self, n: usize) -> SimplexRule {
        match self {
            QuadraturePolicy::Smooth => SimplexRule::grundmann_moeller(n, 2),
            QuadraturePolicy::Kinked => SimplexRule::degree2(n).subdivided(2),
            QuadraturePolicy::Discontinuous => SimplexRule::centroid(n).subdivided(3),
        }
    }
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// All vectors of `parts` non-negative integers summing to `total`.
fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    if parts == 1 {
        return vec![vec![total]];
    }
    let mut out = Vec::new();
    for first in (0..=total).rev() {
        for mut rest in compositions(total - first, parts - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}
