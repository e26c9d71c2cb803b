//! Affine simplex geometry: volume and barycentric gradients.

/// Geometry of a straight simplex with `n + 1` vertices in `R^n`, `n` in {2, 3}.
#[derive(Clone, Copy, Debug)]
pub struct SimplexGeometry {
    pub n: usize,
    /// Unsigned volume.
    pub volume: f64,
    /// Determinant of the map from the reference simplex.
    pub det: f64,
    /// Gradient of the barycentric coordinate of each vertex; only the first
    /// `n` components and `n + 1` rows are meaningful.
    pub grads: [[f64; 3]; 4],
}

impl SimplexGeometry {
    pub fn new(points: &[[f64; 3]], n: usize) -> Self {
        let mut grads = [[0.0; 3]; 4];
        let (det, volume);
        match n {
            2 => {
                let (a, b) = (sub(points[1], points[0]), sub(points[2], points[0]));
                det = a[0] * b[1] - a[1] * b[0];
                volume = det.abs() / 2.0;
                // rows of J^{-1} with J = [a b]
                grads[1] = [b[1] / det, -b[0] / det, 0.0];
                grads[2] = [-a[1] / det, a[0] / det, 0.0];
            }
            3 => {
                let a = sub(points[1], points[0]);
                let b = sub(points[2], points[0]);
                let c = sub(points[3], points[0]);
                let bc = cross(b, c);
                det = dot(a, bc);
                volume = det.abs() / 6.0;
                let ca = cross(c, a);
                let ab = cross(a, b);
                for k in 0..3 {
                    grads[1][k] = bc[k] / det;
                    grads[2][k] = ca[k] / det;
                    grads[3][k] = ab[k] / det;
                }
            }
            _ => panic!("simplex dimension {n} not supported"),
        }
        for k in 0..n {
            grads[0][k] = -(1..=n).map(|a| grads[a][k]).sum::<f64>();
        }
        SimplexGeometry { n, volume, det, grads }
    }

    #[inline]
    pub fn grad_dot(&self, a: usize, b: usize, comps: std::ops::Range<usize>) -> f64 {
        comps.map(|k| self.grads[a][k] * self.grads[b][k]).sum()
    }
}

/// Ratio of circumradius to inradius, scaled so that the regular simplex has ratio 1.
pub fn aspect_ratio(points: &[[f64; 3]], n: usize) -> f64 {
    let geo = SimplexGeometry::new(points, n);
    // inradius = n V / (sum of facet measures)
    let mut facet_sum = 0.0;
    for skip in 0..=n {
        let f: Vec<[f64; 3]> = (0..=n).filter(|&i| i != skip).map(|i| points[i]).collect();
        facet_sum += if n == 2 {
            norm(sub(f[1], f[0]))
        } else {
            0.5 * norm(cross(sub(f[1], f[0]), sub(f[2], f[0])))
        };
    }
    let r_in = n as f64 * geo.volume / facet_sum;
    // circumcentre c solves 2 (x_k - x_0) . c = |x_k|^2 - |x_0|^2
    let mut m = [[0.0; 3]; 3];
    let mut rhs = [0.0; 3];
    for k in 1..=n {
        for j in 0..n {
            m[k - 1][j] = 2.0 * (points[k][j] - points[0][j]);
        }
        rhs[k - 1] = dot(points[k], points[k]) - dot(points[0], points[0]);
    }
    let c = solve_small(&m, &rhs, n);
    let r_out = norm(sub(c, points[0]));
    r_out / (n as f64 * r_in)
}

fn solve_small(m: &[[f64; 3]; 3], rhs: &[f64; 3], n: usize) -> [f64; 3] {
    let mut a = *m;
    let mut b = *rhs;
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x
}

#[inline]
fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}
#[inline]
fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}
#[inline]
fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}
fn norm(a: [f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_triangle() {
        let g = SimplexGeometry::new(&[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]], 2);
        assert!((g.volume - 0.5).abs() < 1e-15);
        assert_eq!(&g.grads[0][..2], &[-1.0, -1.0]);
        assert_eq!(&g.grads[1][..2], &[1.0, 0.0]);
        assert_eq!(&g.grads[2][..2], &[0.0, 1.0]);
    }

    #[test]
    fn barycentric_gradients_reproduce_linears() {
        let p = [[0.1, 0.2, 0.0], [1.3, 0.1, 0.4], [0.2, 0.9, 0.3], [0.4, 0.5, 1.2]];
        let g = SimplexGeometry::new(&p, 3);
        // sum_a x_a grad(lambda_a) = identity
        for i in 0..3 {
            for j in 0..3 {
                let s: f64 = (0..4).map(|a| p[a][i] * g.grads[a][j]).sum();
                assert!((s - if i == j { 1.0 } else { 0.0 }).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn regular_simplex_has_unit_aspect_ratio() {
        let s3 = 3f64.sqrt();
        let tri = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.5, s3 / 2.0, 0.0]];
        assert!((aspect_ratio(&tri, 2) - 1.0).abs() < 1e-12);
        let tet = [[1.0, 1.0, 1.0], [1.0, -1.0, -1.0], [-1.0, 1.0, -1.0], [-1.0, -1.0, 1.0]];
        assert!((aspect_ratio(&tet, 3) - 1.0).abs() < 1e-12);
    }
}
