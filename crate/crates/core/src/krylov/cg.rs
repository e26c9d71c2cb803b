use super::{axpy, check_dims, dot, relative_residual, LinearOperator, SolveStats, SolverOptions, StopReason};
use crate::error::{Error, Result};

/// Preconditioned conjugate gradients.
///
/// Stops when `sqrt(r . z) <= rel_tol * sqrt(r0 . z0)` with `z = C r`.
pub fn pcg(
    op: &dyn LinearOperator,
    precond: &dyn LinearOperator,
    b: &[f64],
    x0: Option<&[f64]>,
    opts: SolverOptions,
) -> Result<(Vec<f64>, SolveStats)> {
    check_dims(op, precond, b)?;
    opts.validate()?;
    let n = b.len();
    let mut x = match x0 {
        Some(x0) if x0.len() == n => x0.to_vec(),
        Some(x0) => return Err(Error::DimensionMismatch(format!("initial guess has {} entries, need {n}", x0.len()))),
        None => vec![0.0; n],
    };
    let mut r = b.to_vec();
    let mut q = vec![0.0; n];
    if x0.is_some() {
        op.apply(&x, &mut q);
        axpy(-1.0, &q, &mut r);
    }
    let mut z = vec![0.0; n];
    precond.apply(&r, &mut z);
    let mut rz = dot(&r, &z);
    if !rz.is_finite() {
        return Ok((x, SolveStats::new(f64::NAN).finish(StopReason::NonFinite)));
    }
    if rz < 0.0 {
        return Ok((x, SolveStats::new(f64::NAN).finish(StopReason::IndefiniteOperator)));
    }
    let first = rz.sqrt();
    let mut stats = SolveStats::new(first);
    if first == 0.0 {
        stats.true_relative_residual = Some(relative_residual(op, &x, b));
        return Ok((x, stats.finish(StopReason::ZeroResidual)));
    }
    let target = opts.rel_tol * first;
    let mut p = z.clone();
    let mut reason = StopReason::MaxIterations;
    for _ in 0..opts.max_iter {
        op.apply(&p, &mut q);
        let pq = dot(&p, &q);
        if !(pq > 0.0) {
            reason = if pq.is_finite() { StopReason::IndefiniteOperator } else { StopReason::NonFinite };
            break;
        }
        let alpha = rz / pq;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &q, &mut r);
        precond.apply(&r, &mut z);
        let rz_new = dot(&r, &z);
        stats.iterations += 1;
        if !rz_new.is_finite() {
            reason = StopReason::NonFinite;
            break;
        }
        if rz_new < 0.0 {
            reason = StopReason::IndefiniteOperator;
            break;
        }
        stats.residual_history.push(rz_new.sqrt());
        if rz_new.sqrt() <= target {
            reason = StopReason::Converged;
            break;
        }
        let beta = rz_new / rz;
        rz = rz_new;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
    }
    stats.true_relative_residual = Some(relative_residual(op, &x, b));
    Ok((x, stats.finish(reason)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::krylov::{Diagonal, Identity};
    use crate::sparse::SparseMatrix;
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn trivial_systems_converge_in_one_step() {
        let b = [1.0, -2.0, 3.0];
        let (x, s) = pcg(&Identity(3), &Identity(3), &b, None, SolverOptions::default()).unwrap();
        assert_eq!(s.iterations, 1);
        assert_eq!(x, b.to_vec());
        let a = SparseMatrix::from_diagonal(&[2.0, 1.0]);
        let pre = Diagonal(vec![0.5, 1.0]);
        let (x, s) = pcg(&a, &pre, &[1.0, 1.0], None, SolverOptions::default()).unwrap();
        assert_eq!(s.iterations, 1);
        assert!((x[0] - 0.5).abs() < 1e-15 && (x[1] - 1.0).abs() < 1e-15);
        let (_, s) = pcg(&a, &pre, &[0.0, 0.0], None, SolverOptions::default()).unwrap();
        assert_eq!((s.iterations, s.stop_reason), (0, StopReason::ZeroResidual));
    }

    #[test]
    fn random_spd_matches_dense_solve_and_energy_error_decreases() {
        let n = 50;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let r = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let spd = &r * r.transpose() + DMatrix::identity(n, n) * 0.1;
        let rows: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| spd[(i, j)]).collect()).collect();
        let a = SparseMatrix::from_dense(&rows);
        let pre = Diagonal::inverse_of(&a.diagonal()).unwrap();
        let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let exact = spd.clone().lu().solve(&DVector::from_vec(b.clone())).unwrap();
        let (x, s) = pcg(&a, &pre, &b, None, SolverOptions::new(1e-12, 1000)).unwrap();
        assert!(s.converged);
        assert_eq!(s.residual_history.len(), s.iterations + 1);
        let cond = {
            let ev = spd.symmetric_eigen().eigenvalues;
            ev.max() / ev.min()
        };
        let err = (DVector::from_vec(x) - &exact).norm() / exact.norm();
        assert!(err <= 1e-12 * cond * 10.0, "err {err}, cond {cond}");
        // the A-norm of the error is monotone along the iteration
        let mut last = f64::INFINITY;
        for k in 1..=s.iterations {
            let (xk, _) = pcg(&a, &pre, &b, None, SolverOptions::new(1e-300, k)).unwrap();
            let e: Vec<f64> = xk.iter().zip(exact.iter()).map(|(a, b)| a - b).collect();
            let en = dot(&e, &a.mul_vec(&e)).sqrt();
            assert!(en <= last * (1.0 + 1e-10) + 1e-14);
            last = en;
        }
    }

    #[test]
    fn indefinite_operator_is_reported() {
        let a = SparseMatrix::from_diagonal(&[1.0, -1.0]);
        let (_, s) = pcg(&a, &Identity(2), &[1.0, 1.0], None, SolverOptions::default()).unwrap();
        assert_eq!(s.stop_reason, StopReason::IndefiniteOperator);
        assert!(!s.converged);
    }
}
