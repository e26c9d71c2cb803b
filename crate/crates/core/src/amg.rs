//! Classical Ruge-Stüben algebraic multigrid.
//!
//! Strength of connection with threshold `theta`, two-pass C/F splitting,
//! direct interpolation, Galerkin coarse operators and a dense Cholesky solve
//! on the coarsest level. Smoothing is forward Gauss-Seidel before and
//! backward Gauss-Seidel after the coarse correction, so a fixed number of
//! V-cycles from zero is a symmetric positive definite map.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dense::Cholesky;
use crate::error::{Error, Result};
use crate::krylov::LinearOperator;
use crate::sparse::SparseMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AmgConfig {
    pub strength_threshold: f64,
    pub pre_smooth: usize,
    pub post_smooth: usize,
    /// V-cycles per preconditioner application.
    pub cycles: usize,
    pub max_coarse_size: usize,
    pub max_levels: usize,
    /// Backward sweeps after the coarse correction (forward otherwise).
    pub symmetric_smoothing: bool,
}

impl Default for AmgConfig {
    fn default() -> Self {
        AmgConfig {
            strength_threshold: 0.25,
            pre_smooth: 2,
            post_smooth: 2,
            cycles: 1,
            max_coarse_size: 64,
            max_levels: 30,
            symmetric_smoothing: true,
        }
    }
}

#[derive(Clone, Debug)]
struct Level {
    a: SparseMatrix,
    diag: Vec<f64>,
    /// Interpolation to this level from the next coarser one.
    p: Option<SparseMatrix>,
    r: Option<SparseMatrix>,
}

#[derive(Clone, Debug)]
pub struct AmgHierarchy {
    levels: Vec<Level>,
    coarse: Cholesky,
    config: AmgConfig,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AmgStats {
    pub level_sizes: Vec<usize>,
    pub level_nnz: Vec<usize>,
    pub operator_complexity: f64,
    pub grid_complexity: f64,
}

/// Strong connections `j` of each row `i`: `-a_ij >= theta max_k (-a_ik)`.
fn strength(a: &SparseMatrix, theta: f64) -> Vec<Vec<u32>> {
    (0..a.nrows())
        .map(|i| {
            let (cols, vals) = a.row(i);
            let m = cols
                .iter()
                .zip(vals)
                .filter(|(&c, _)| c as usize != i)
                .map(|(_, &v)| -v)
                .fold(0.0f64, f64::max);
            if m <= 0.0 {
                return Vec::new();
            }
            cols.iter()
                .zip(vals)
                .filter(|(&c, &v)| c as usize != i && -v >= theta * m)
                .map(|(&c, _)| c)
                .collect()
        })
        .collect()
}

fn transpose_graph(s: &[Vec<u32>]) -> Vec<Vec<u32>> {
    let mut t = vec![Vec::new(); s.len()];
    for (i, row) in s.iter().enumerate() {
        for &j in row {
            t[j as usize].push(i as u32);
        }
    }
    t
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Mark {
    Undecided,
    C,
    F,
}

/// Two-pass Ruge-Stüben splitting; `true` marks coarse points.
fn split(s: &[Vec<u32>]) -> Vec<bool> {
    let n = s.len();
    let st = transpose_graph(s);
    let mut mark = vec![Mark::Undecided; n];
    let mut lambda: Vec<u32> = st.iter().map(|r| r.len() as u32).collect();
    // points nobody depends on and that depend on nobody need no coarse representative
    for i in 0..n {
        if s[i].is_empty() && st[i].is_empty() {
            mark[i] = Mark::F;
        }
    }
    let mut heap: BinaryHeap<(u32, Reverse<u32>)> =
        (0..n).filter(|&i| mark[i] == Mark::Undecided).map(|i| (lambda[i], Reverse(i as u32))).collect();
    while let Some((l, Reverse(i))) = heap.pop() {
        let i = i as usize;
        if mark[i] != Mark::Undecided || l != lambda[i] {
            continue;
        }
        mark[i] = Mark::C;
        for &j in &st[i] {
            let j = j as usize;
            if mark[j] == Mark::Undecided {
                mark[j] = Mark::F;
                for &k in &s[j] {
                    let k = k as usize;
                    if mark[k] == Mark::Undecided {
                        lambda[k] += 1;
                        heap.push((lambda[k], Reverse(k as u32)));
                    }
                }
            }
        }
        for &k in &s[i] {
            let k = k as usize;
            if mark[k] == Mark::Undecided && lambda[k] > 0 {
                lambda[k] -= 1;
                heap.push((lambda[k], Reverse(k as u32)));
            }
        }
    }
    let mut is_c: Vec<bool> = mark.iter().map(|&m| m == Mark::C).collect();
    // second pass: strongly connected F points must share a strong C point
    let mut stamp = vec![u32::MAX; n];
    for i in 0..n {
        if is_c[i] {
            continue;
        }
        let mut tentative: Option<usize> = None;
        let mut j_idx = 0;
        while j_idx < s[i].len() {
            let j = s[i][j_idx] as usize;
            j_idx += 1;
            if is_c[j] {
                continue;
            }
            for &k in &s[i] {
                if is_c[k as usize] {
                    stamp[k as usize] = i as u32;
                }
            }
            if s[j].iter().any(|&k| stamp[k as usize] == i as u32) {
                continue;
            }
            match tentative {
                None => {
                    tentative = Some(j);
                    is_c[j] = true;
                }
                Some(t) => {
                    // two violations: promote i instead
                    is_c[t] = false;
                    is_c[i] = true;
                    tentative = None;
                    break;
                }
            }
        }
        let _ = tentative;
    }
    is_c
}

/// Direct interpolation with separate treatment of negative and positive couplings.
fn interpolation(a: &SparseMatrix, s: &[Vec<u32>], is_c: &[bool]) -> SparseMatrix {
    let n = a.nrows();
    let mut cindex = vec![u32::MAX; n];
    let mut nc = 0u32;
    for i in 0..n {
        if is_c[i] {
            cindex[i] = nc;
            nc += 1;
        }
    }
    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut col_idx = Vec::new();
    let mut values = Vec::new();
    row_ptr.push(0);
    let mut strong = vec![false; n];
    for i in 0..n {
        if is_c[i] {
            col_idx.push(cindex[i]);
            values.push(1.0);
            row_ptr.push(col_idx.len());
            continue;
        }
        for &j in &s[i] {
            strong[j as usize] = true;
        }
        let (cols, vals) = a.row(i);
        let (mut diag, mut neg_all, mut pos_all, mut neg_c, mut pos_c) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (&c, &v) in cols.iter().zip(vals) {
            let c = c as usize;
            if c == i {
                diag += v;
                continue;
            }
            if v < 0.0 {
                neg_all += v;
            } else {
                pos_all += v;
            }
            if is_c[c] && strong[c] {
                if v < 0.0 {
                    neg_c += v;
                } else {
                    pos_c += v;
                }
            }
        }
        if pos_c == 0.0 {
            diag += pos_all;
        }
        let alpha = if neg_c != 0.0 { neg_all / neg_c } else { 0.0 };
        let beta = if pos_c != 0.0 { pos_all / pos_c } else { 0.0 };
        let mut entries: Vec<(u32, f64)> = Vec::new();
        for (&c, &v) in cols.iter().zip(vals) {
            let cu = c as usize;
            if cu != i && is_c[cu] && strong[cu] {
                let w = if v < 0.0 { -alpha * v / diag } else { -beta * v / diag };
                entries.push((cindex[cu], w));
            }
        }
        entries.sort_by_key(|e| e.0);
        for (c, w) in entries {
            col_idx.push(c);
            values.push(w);
        }
        row_ptr.push(col_idx.len());
        for &j in &s[i] {
            strong[j as usize] = false;
        }
    }
    SparseMatrix::new(n, nc as usize, row_ptr, col_idx, values).expect("interpolation pattern is sorted")
}

fn galerkin(a: &SparseMatrix, p: &SparseMatrix) -> Result<(SparseMatrix, SparseMatrix)> {
    let r = p.transpose();
    let ap = a.matmul(p)?;
    Ok((r.matmul(&ap)?, r))
}

impl AmgHierarchy {
    pub fn setup(a: &SparseMatrix, config: AmgConfig) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::DimensionMismatch("AMG needs a square matrix".into()));
        }
        if !(config.strength_threshold > 0.0 && config.strength_threshold < 1.0) {
            return Err(Error::invalid("strength threshold must lie in (0, 1)"));
        }
        let mut levels = Vec::new();
        let mut current = a.clone();
        let mut positive_offdiag = false;
        loop {
            let diag = current.diagonal();
            if let Some(i) = diag.iter().position(|&v| !(v > 0.0)) {
                return Err(Error::NotSpd(format!("non-positive diagonal entry at row {i} on level {}", levels.len())));
            }
            let n = current.nrows();
            if n <= config.max_coarse_size || levels.len() + 1 >= config.max_levels {
                levels.push(Level { a: current, diag, p: None, r: None });
                break;
            }
            if !positive_offdiag {
                positive_offdiag = (0..n).any(|i| {
                    let (c, v) = current.row(i);
                    c.iter().zip(v).any(|(&c, &v)| c as usize != i && v > 1e-12 * diag[i])
                });
            }
            let s = strength(&current, config.strength_threshold);
            let is_c = split(&s);
            let nc = is_c.iter().filter(|&&c| c).count();
            if nc == 0 || nc as f64 > 0.95 * n as f64 {
                log::debug!("amg: coarsening stagnated at {n} unknowns");
                levels.push(Level { a: current, diag, p: None, r: None });
                break;
            }
            let p = interpolation(&current, &s, &is_c);
            let (coarse, r) = galerkin(&current, &p)?;
            levels.push(Level { a: current, diag, p: Some(p), r: Some(r) });
            current = coarse;
        }
        if positive_offdiag {
            log::warn!("amg: input has positive off-diagonal entries; not an M-matrix");
        }
        let last = &levels.last().unwrap().a;
        if last.nrows() > 8192 {
            return Err(Error::SolverFailure(format!("coarsest level too large for a dense solve ({})", last.nrows())));
        }
        let dense: Vec<f64> = last.to_dense().concat();
        let coarse = Cholesky::new(&dense, last.nrows()).map_err(|e| Error::Singular(format!("coarsest matrix: {e}")))?;
        let h = AmgHierarchy { levels, coarse, config };
        log::debug!("amg: levels {:?}", h.stats().level_sizes);
        Ok(h)
    }

    pub fn config(&self) -> &AmgConfig {
        &self.config
    }

    pub fn dim(&self) -> usize {
        self.levels[0].a.nrows()
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn matrix(&self, level: usize) -> &SparseMatrix {
        &self.levels[level].a
    }

    pub fn interpolation(&self, level: usize) -> Option<&SparseMatrix> {
        self.levels[level].p.as_ref()
    }

    pub fn stats(&self) -> AmgStats {
        let level_sizes: Vec<usize> = self.levels.iter().map(|l| l.a.nrows()).collect();
        let level_nnz: Vec<usize> = self.levels.iter().map(|l| l.a.nnz()).collect();
        let operator_complexity = level_nnz.iter().sum::<usize>() as f64 / level_nnz[0] as f64;
        let grid_complexity = level_sizes.iter().sum::<usize>() as f64 / level_sizes[0] as f64;
        AmgStats { level_sizes, level_nnz, operator_complexity, grid_complexity }
    }

    fn gauss_seidel(level: &Level, b: &[f64], x: &mut [f64], forward: bool) {
        let n = level.a.nrows();
        let step = |i: usize, x: &mut [f64]| {
            let (cols, vals) = level.a.row(i);
            let mut s = b[i];
            for (&c, &v) in cols.iter().zip(vals) {
                s -= v * x[c as usize];
            }
            x[i] += s / level.diag[i];
        };
        if forward {
            for i in 0..n {
                step(i, x);
            }
        } else {
            for i in (0..n).rev() {
                step(i, x);
            }
        }
    }

    fn cycle(&self, lvl: usize, b: &[f64], x: &mut [f64]) {
        let level = &self.levels[lvl];
        let Some(p) = level.p.as_ref() else {
            x.copy_from_slice(b);
            self.coarse.solve_in_place(x);
            return;
        };
        let r_op = level.r.as_ref().unwrap();
        for _ in 0..self.config.pre_smooth {
            Self::gauss_seidel(level, b, x, true);
        }
        let mut r = b.to_vec();
        let ax = level.a.mul_vec(x);
        for (ri, ai) in r.iter_mut().zip(&ax) {
            *ri -= ai;
        }
        let rc = r_op.mul_vec(&r);
        let mut ec = vec![0.0; rc.len()];
        self.cycle(lvl + 1, &rc, &mut ec);
        let corr = p.mul_vec(&ec);
        for (xi, ci) in x.iter_mut().zip(&corr) {
            *xi += ci;
        }
        for _ in 0..self.config.post_smooth {
            Self::gauss_seidel(level, b, x, !self.config.symmetric_smoothing);
        }
    }

    /// One V-cycle step `x <- x + B (b - A x)`.
    pub fn vcycle_step(&self, b: &[f64], x: &mut [f64]) {
        let a = &self.levels[0].a;
        let mut r = b.to_vec();
        let ax = a.mul_vec(x);
        for (ri, ai) in r.iter_mut().zip(&ax) {
            *ri -= ai;
        }
        let mut e = vec![0.0; r.len()];
        self.cycle(0, &r, &mut e);
        for (xi, ei) in x.iter_mut().zip(&e) {
            *xi += ei;
        }
    }

    /// `count` V-cycles from a zero initial guess: `(I - E^count) A^{-1} b`.
    pub fn vcycles(&self, b: &[f64], count: usize) -> Vec<f64> {
        let mut x = vec![0.0; b.len()];
        if count == 0 {
            return x;
        }
        self.cycle(0, b, &mut x);
        for _ in 1..count {
            self.vcycle_step(b, &mut x);
        }
        x
    }

    /// Error propagation `E e = e - B A e` of one V-cycle.
    pub fn error_propagation(&self, e: &[f64]) -> Vec<f64> {
        let ae = self.levels[0].a.mul_vec(e);
        let be = self.vcycles(&ae, 1);
        e.iter().zip(&be).map(|(a, b)| a - b).collect()
    }

    /// Estimate of `||E||_A` by Lanczos in the `A` inner product (in which `E`
    /// is self-adjoint), maximised over `probes` random starts.
    pub fn estimate_contraction(&self, probes: usize, iters: usize, seed: u64) -> f64 {
        let a = &self.levels[0].a;
        let n = a.nrows();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut eta = 0.0f64;
        for _ in 0..probes.max(1) {
            let start: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            eta = eta.max(self.lanczos_energy(start, iters.max(1)));
        }
        eta
    }

    fn lanczos_energy(&self, start: Vec<f64>, iters: usize) -> f64 {
        let a = &self.levels[0].a;
        let dot = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(x, y)| x * y).sum::<f64>();
        let mut q = start;
        let mut aq = a.mul_vec(&q);
        let nq = dot(&q, &aq).max(0.0).sqrt();
        if nq == 0.0 {
            return 0.0;
        }
        q.iter_mut().for_each(|v| *v /= nq);
        aq.iter_mut().for_each(|v| *v /= nq);
        let (mut basis, mut abasis) = (Vec::new(), Vec::new());
        let (mut alpha, mut beta) = (Vec::new(), Vec::new());
        for _ in 0..iters {
            let mut w = self.error_propagation(&q);
            alpha.push(dot(&w, &aq));
            basis.push(q);
            abasis.push(aq);
            for _ in 0..2 {
                for (v, av) in basis.iter().zip(&abasis) {
                    let c = dot(&w, av);
                    w.iter_mut().zip(v).for_each(|(x, y)| *x -= c * y);
                }
            }
            let aw = a.mul_vec(&w);
            let b = dot(&w, &aw).max(0.0).sqrt();
            if b <= 1e-14 || basis.len() == iters {
                break;
            }
            beta.push(b);
            q = w.iter().map(|v| v / b).collect();
            aq = aw.iter().map(|v| v / b).collect();
        }
        let k = alpha.len();
        match crate::dense::tridiagonal_eigen(&alpha, &beta[..k - 1]) {
            Ok((vals, _)) => vals.iter().fold(0.0f64, |m, v| m.max(v.abs())),
            Err(_) => alpha.iter().fold(0.0f64, |m, v| m.max(v.abs())),
        }
    }
}

/// `z = c * (count V-cycles from zero)(r)`; as a preconditioner this applies
/// `c (I - E^count) A^{-1}`.
#[derive(Clone, Debug)]
pub struct AmgPreconditioner<'a> {
    pub hierarchy: &'a AmgHierarchy,
    pub cycles: usize,
    pub scale: f64,
}

impl<'a> AmgPreconditioner<'a> {
    pub fn new(hierarchy: &'a AmgHierarchy, cycles: usize) -> Self {
        AmgPreconditioner { hierarchy, cycles, scale: 1.0 }
    }

    /// Inverse of the scaled preconditioner `delta (1 - eta^i) A (I - E^i)^{-1}`,
    /// which lies strictly below `A` for `delta < 1`.
    pub fn scaled_block(hierarchy: &'a AmgHierarchy, delta: f64, cycles: usize, eta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::invalid(format!("delta must lie in (0, 1), got {delta}")));
        }
        if !(0.0..1.0).contains(&eta) {
            return Err(Error::invalid(format!("contraction estimate {eta} is not below 1")));
        }
        if cycles == 0 {
            return Err(Error::invalid("at least one V-cycle is required"));
        }
        let c = delta * (1.0 - eta.powi(cycles as i32));
        Ok(AmgPreconditioner { hierarchy, cycles, scale: 1.0 / c })
    }
}

impl LinearOperator for AmgPreconditioner<'_> {
    fn nrows(&self) -> usize {
        self.hierarchy.dim()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let v = self.hierarchy.vcycles(x, self.cycles);
        for (yi, vi) in y.iter_mut().zip(&v) {
            *yi = self.scale * vi;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};

    pub(crate) fn laplace_1d(n: usize) -> SparseMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i > 0 {
                t.push((i, i - 1, -1.0));
                t.push((i - 1, i, -1.0));
            }
        }
        SparseMatrix::from_triplets(n, n, &t).unwrap()
    }

    fn laplace_2d(m: usize) -> SparseMatrix {
        let n = m * m;
        let mut t = Vec::new();
        for i in 0..m {
            for j in 0..m {
                let k = i * m + j;
                t.push((k, k, 4.0));
                if i > 0 {
                    t.push((k, k - m, -1.0));
                }
                if i + 1 < m {
                    t.push((k, k + m, -1.0));
                }
                if j > 0 {
                    t.push((k, k - 1, -1.0));
                }
                if j + 1 < m {
                    t.push((k, k + 1, -1.0));
                }
            }
        }
        SparseMatrix::from_triplets(n, n, &t).unwrap()
    }

    #[test]
    fn one_dimensional_laplacian_coarsens_by_half() {
        let h = AmgHierarchy::setup(&laplace_1d(63), AmgConfig { max_coarse_size: 4, ..Default::default() }).unwrap();
        let sizes = h.stats().level_sizes;
        assert!(sizes.len() >= 3);
        for w in sizes.windows(2) {
            let ratio = w[1] as f64 / w[0] as f64;
            assert!((0.4..=0.6).contains(&ratio), "{sizes:?}");
        }
    }

    #[test]
    fn small_input_is_single_level() {
        let h = AmgHierarchy::setup(&laplace_1d(30), AmgConfig::default()).unwrap();
        assert_eq!(h.num_levels(), 1);
        let id = SparseMatrix::identity(100);
        let h = AmgHierarchy::setup(&id, AmgConfig { max_coarse_size: 4, ..Default::default() }).unwrap();
        let b: Vec<f64> = (0..100).map(|i| i as f64).collect();
        assert_eq!(h.vcycles(&b, 1), b);
        assert_eq!(h.estimate_contraction(2, 5, 1), 0.0);
    }

    #[test]
    fn galerkin_product_matches_dense() {
        let a = laplace_2d(12);
        let h = AmgHierarchy::setup(&a, AmgConfig { max_coarse_size: 10, ..Default::default() }).unwrap();
        for l in 0..h.num_levels() - 1 {
            let af = DMatrix::from_row_slice(h.matrix(l).nrows(), h.matrix(l).ncols(), &h.matrix(l).to_dense().concat());
            let p = h.interpolation(l).unwrap();
            let pd = DMatrix::from_row_slice(p.nrows(), p.ncols(), &p.to_dense().concat());
            let ac = pd.transpose() * af * &pd;
            let stored = DMatrix::from_row_slice(ac.nrows(), ac.ncols(), &h.matrix(l + 1).to_dense().concat());
            assert!((ac - &stored).norm() <= 1e-12 * stored.norm());
        }
    }

    #[test]
    fn many_cycles_reach_direct_solution() {
        let a = laplace_1d(63);
        let h = AmgHierarchy::setup(&a, AmgConfig { max_coarse_size: 4, ..Default::default() }).unwrap();
        let b: Vec<f64> = (0..63).map(|i| ((i * 13) % 7) as f64).collect();
        let x = h.vcycles(&b, 60);
        let exact = DMatrix::from_row_slice(63, 63, &a.to_dense().concat()).lu().solve(&DVector::from_vec(b)).unwrap();
        let diff = (DVector::from_vec(x) - exact).norm();
        assert!(diff <= 1e-10, "{diff}");
        assert!(h.vcycles(&vec![0.0; 63], 3).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn contraction_of_1d_laplacian() {
        let h = AmgHierarchy::setup(&laplace_1d(255), AmgConfig::default()).unwrap();
        let eta = h.estimate_contraction(3, 30, 4);
        assert!(eta < 0.3, "{eta}");
    }

    #[test]
    fn two_level_contraction_matches_dense_norm() {
        // with max_coarse_size above the first coarse size there are exactly two levels
        let a = laplace_2d(10);
        let h = AmgHierarchy::setup(&a, AmgConfig { max_coarse_size: 60, ..Default::default() }).unwrap();
        assert_eq!(h.num_levels(), 2);
        let n = a.nrows();
        let ad = DMatrix::from_row_slice(n, n, &a.to_dense().concat());
        // dense error propagation E, then ||E||_A = ||A^{1/2} E A^{-1/2}||_2
        let mut e = DMatrix::zeros(n, n);
        for j in 0..n {
            let mut unit = vec![0.0; n];
            unit[j] = 1.0;
            let col = h.error_propagation(&unit);
            for i in 0..n {
                e[(i, j)] = col[i];
            }
        }
        let eig = ad.clone().symmetric_eigen();
        let sqrt = &eig.eigenvectors * DMatrix::from_diagonal(&eig.eigenvalues.map(|v| v.sqrt())) * eig.eigenvectors.transpose();
        let isqrt = &eig.eigenvectors * DMatrix::from_diagonal(&eig.eigenvalues.map(|v| 1.0 / v.sqrt())) * eig.eigenvectors.transpose();
        let m = &sqrt * e * isqrt;
        let exact = m.singular_values().max();
        let est = h.estimate_contraction(2, 60, 9);
        assert!((est - exact).abs() < 1e-6, "{est} vs {exact}");
    }

    #[test]
    fn scaled_block_rejects_bad_parameters() {
        let h = AmgHierarchy::setup(&laplace_1d(10), AmgConfig::default()).unwrap();
        assert!(AmgPreconditioner::scaled_block(&h, 1.0, 2, 0.1).is_err());
        assert!(AmgPreconditioner::scaled_block(&h, 0.25, 2, 1.0).is_err());
        assert!(AmgPreconditioner::scaled_block(&h, 0.25, 2, 0.1).is_ok());
    }
}
