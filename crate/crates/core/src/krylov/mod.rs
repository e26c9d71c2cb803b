//! Linear operators and Krylov solvers.

mod cg;
mod gmres;
mod lanczos;

pub use cg::pcg;
pub use gmres::{gmres, GmresMetric};
pub use lanczos::{lanczos_extreme_eigs, LanczosResult};

use serde::{Deserialize, Serialize};

use crate::sparse::SparseMatrix;

/// A linear map `x -> y`; preconditioners are operators applying `P^{-1}`.
pub trait LinearOperator {
    fn nrows(&self) -> usize;

    fn ncols(&self) -> usize {
        self.nrows()
    }

    /// Overwrites `y` with the image of `x`.
    fn apply(&self, x: &[f64], y: &mut [f64]);

    fn apply_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows()];
        self.apply(x, &mut y);
        y
    }
}

impl LinearOperator for SparseMatrix {
    fn nrows(&self) -> usize {
        SparseMatrix::nrows(self)
    }

    fn ncols(&self) -> usize {
        SparseMatrix::ncols(self)
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.matvec(x, y)
    }
}

impl<T: LinearOperator + ?Sized> LinearOperator for &T {
    fn nrows(&self) -> usize {
        (**self).nrows()
    }

    fn ncols(&self) -> usize {
        (**self).ncols()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        (**self).apply(x, y)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Identity(pub usize);

impl LinearOperator for Identity {
    fn nrows(&self) -> usize {
        self.0
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        y.copy_from_slice(x)
    }
}

/// Multiplication by a diagonal.
#[derive(Clone, Debug)]
pub struct Diagonal(pub Vec<f64>);

impl Diagonal {
    /// The operator `diag(d)^{-1}`; rejects non-positive entries.
    pub fn inverse_of(d: &[f64]) -> crate::Result<Self> {
        if let Some(i) = d.iter().position(|&v| !(v > 0.0)) {
            return Err(crate::Error::NotSpd(format!("diagonal entry {i} is {}", d[i])));
        }
        Ok(Diagonal(d.iter().map(|v| 1.0 / v).collect()))
    }
}

impl LinearOperator for Diagonal {
    fn nrows(&self) -> usize {
        self.0.len()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for ((yi, xi), di) in y.iter_mut().zip(x).zip(&self.0) {
            *yi = di * xi;
        }
    }
}

/// Operator defined by a closure.
pub struct FnOperator<F: Fn(&[f64], &mut [f64])> {
    rows: usize,
    cols: usize,
    f: F,
}

impl<F: Fn(&[f64], &mut [f64])> FnOperator<F> {
    pub fn new(rows: usize, cols: usize, f: F) -> Self {
        FnOperator { rows, cols, f }
    }

    pub fn square(n: usize, f: F) -> Self {
        FnOperator { rows: n, cols: n, f }
    }
}

impl<F: Fn(&[f64], &mut [f64])> LinearOperator for FnOperator<F> {
    fn nrows(&self) -> usize {
        self.rows
    }

    fn ncols(&self) -> usize {
        self.cols
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        (self.f)(x, y)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    Converged,
    /// Right-hand side (or initial residual) was exactly zero.
    ZeroResidual,
    MaxIterations,
    /// `p . A p <= 0` or `r . z <= 0` during PCG.
    IndefiniteOperator,
    /// Happy breakdown in Arnoldi (solution exact in the current space).
    LuckyBreakdown,
    NonFinite,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolveStats {
    pub iterations: usize,
    /// Stopping-norm values, starting with the initial one.
    pub residual_history: Vec<f64>,
    pub converged: bool,
    pub stop_reason: StopReason,
    /// `||b - A x|| / ||b||` of the returned iterate (Euclidean), when computed.
    pub true_relative_residual: Option<f64>,
}

impl SolveStats {
    pub(crate) fn new(initial: f64) -> Self {
        SolveStats {
            iterations: 0,
            residual_history: vec![initial],
            converged: false,
            stop_reason: StopReason::MaxIterations,
            true_relative_residual: None,
        }
    }

    pub(crate) fn finish(mut self, reason: StopReason) -> Self {
        self.converged = matches!(reason, StopReason::Converged | StopReason::ZeroResidual | StopReason::LuckyBreakdown);
        self.stop_reason = reason;
        self
    }

    pub fn final_relative(&self) -> f64 {
        let first = self.residual_history[0];
        if first == 0.0 {
            0.0
        } else {
            self.residual_history.last().unwrap() / first
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub rel_tol: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { rel_tol: 1e-11, max_iter: 5000 }
    }
}

impl SolverOptions {
    pub fn new(rel_tol: f64, max_iter: usize) -> Self {
        SolverOptions { rel_tol, max_iter }
    }

    pub(crate) fn validate(&self) -> crate::Result<()> {
        if !(self.rel_tol > 0.0 && self.rel_tol < 1.0) {
            return Err(crate::Error::invalid(format!("relative tolerance {} outside (0, 1)", self.rel_tol)));
        }
        Ok(())
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y += alpha x`
pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub(crate) fn check_dims(op: &dyn LinearOperator, pre: &dyn LinearOperator, b: &[f64]) -> crate::Result<()> {
    let n = b.len();
    if op.nrows() != n || op.ncols() != n || pre.nrows() != n || pre.ncols() != n {
        return Err(crate::Error::DimensionMismatch(format!(
            "operator {}x{}, preconditioner {}x{}, rhs {}",
            op.nrows(),
            op.ncols(),
            pre.nrows(),
            pre.ncols(),
            n
        )));
    }
    Ok(())
}

/// `||b - A x|| / ||b||`
pub fn relative_residual(op: &dyn LinearOperator, x: &[f64], b: &[f64]) -> f64 {
    let ax = op.apply_vec(x);
    let r: f64 = ax.iter().zip(b).map(|(a, b)| (b - a).powi(2)).sum::<f64>().sqrt();
    let nb = norm(b);
    if nb == 0.0 {
        r
    } else {
        r / nb
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn operators_are_linear() {
        let a = SparseMatrix::from_dense(&[vec![2.0, -1.0, 0.0], vec![-1.0, 2.0, -1.0], vec![0.0, -1.0, 2.0]]);
        let d = Diagonal(vec![1.0, 2.0, 3.0]);
        let comp = FnOperator::square(3, |x, y| {
            let t = a.apply_vec(x);
            d.apply(&t, y)
        });
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let ops: [&dyn LinearOperator; 3] = [&a, &d, &comp];
        for op in ops {
            let u: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let v: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let alpha = 1.7;
            let w: Vec<f64> = u.iter().zip(&v).map(|(a, b)| alpha * a + b).collect();
            let lhs = op.apply_vec(&w);
            let (au, av) = (op.apply_vec(&u), op.apply_vec(&v));
            for i in 0..3 {
                assert!((lhs[i] - alpha * au[i] - av[i]).abs() <= 1e-10 * (1.0 + lhs[i].abs()));
            }
        }
        assert!(Diagonal::inverse_of(&[1.0, 0.0]).is_err());
    }
}
