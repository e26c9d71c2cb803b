use super::{axpy, check_dims, dot, norm, relative_residual, LinearOperator, SolveStats, SolverOptions, StopReason};
use crate::error::{Error, Result};

/// Inner product used by the Arnoldi process of left-preconditioned GMRES.
#[derive(Clone, Debug)]
pub enum GmresMetric {
    Euclidean,
    /// `<u, v> = sum_i w_i u_i v_i` with positive weights.
    Weighted(Vec<f64>),
    /// `<u, v> = u^T C^{-1} v` for the preconditioner `C`; the residual norm
    /// becomes `sqrt(r . C r)`. Keeps a second basis `C^{-1} V`, obtained from
    /// the unpreconditioned products, so `C^{-1}` is never applied.
    PreconditionerInverse,
}

/// Full (unrestarted) GMRES on `C A x = C b`.
///
/// The residual norm in the chosen metric is reduced by `rel_tol`.
pub fn gmres(
    op: &dyn LinearOperator,
    precond: &dyn LinearOperator,
    b: &[f64],
    x0: Option<&[f64]>,
    metric: &GmresMetric,
    opts: SolverOptions,
) -> Result<(Vec<f64>, SolveStats)> {
    check_dims(op, precond, b)?;
    opts.validate()?;
    let n = b.len();
    if let GmresMetric::Weighted(w) = metric {
        if w.len() != n || w.iter().any(|&v| !(v > 0.0)) {
            return Err(Error::invalid("GMRES weights must be positive, one per unknown"));
        }
    }
    let dual = matches!(metric, GmresMetric::PreconditionerInverse);
    let inner = |u: &[f64], v: &[f64], pv: Option<&[f64]>| -> f64 {
        match metric {
            GmresMetric::Euclidean => dot(u, v),
            GmresMetric::Weighted(w) => u.iter().zip(v).zip(w).map(|((a, b), c)| a * b * c).sum(),
            GmresMetric::PreconditionerInverse => dot(u, pv.expect("dual basis")),
        }
    };
    let mut x = match x0 {
        Some(x0) if x0.len() == n => x0.to_vec(),
        Some(_) => return Err(Error::DimensionMismatch("initial guess length".into())),
        None => vec![0.0; n],
    };
    let mut r = b.to_vec();
    let mut tmp = vec![0.0; n];
    if x0.is_some() {
        op.apply(&x, &mut tmp);
        axpy(-1.0, &tmp, &mut r);
    }
    let mut z = vec![0.0; n];
    precond.apply(&r, &mut z);
    let beta2 = inner(&z, &z, Some(&r));
    if !beta2.is_finite() {
        return Ok((x, SolveStats::new(f64::NAN).finish(StopReason::NonFinite)));
    }
    if beta2 < 0.0 {
        return Err(Error::NotSpd("preconditioner is not positive definite (r . C r < 0)".into()));
    }
    let beta = beta2.sqrt();
    let mut stats = SolveStats::new(beta);
    if beta == 0.0 {
        stats.true_relative_residual = Some(relative_residual(op, &x, b));
        return Ok((x, stats.finish(StopReason::ZeroResidual)));
    }
    let target = opts.rel_tol * beta;
    let mut basis: Vec<Vec<f64>> = vec![z.iter().map(|v| v / beta).collect()];
    let mut dual_basis: Vec<Vec<f64>> = if dual { vec![r.iter().map(|v| v / beta).collect()] } else { Vec::new() };
    // Hessenberg columns after rotation (upper triangular R)
    let mut hess: Vec<Vec<f64>> = Vec::new();
    let (mut cs, mut sn): (Vec<f64>, Vec<f64>) = (Vec::new(), Vec::new());
    let mut g = vec![beta];
    let mut reason = StopReason::MaxIterations;
    let mut w = vec![0.0; n];
    for k in 0..opts.max_iter {
        op.apply(&basis[k], &mut tmp);
        precond.apply(&tmp, &mut w);
        let mut pw = if dual { Some(tmp.clone()) } else { None };
        let mut h = Vec::with_capacity(k + 2);
        for i in 0..=k {
            let hik = inner(&w, &basis[i], dual_basis.get(i).map(|v| v.as_slice()));
            axpy(-hik, &basis[i], &mut w);
            if let Some(pw) = pw.as_mut() {
                axpy(-hik, &dual_basis[i], pw);
            }
            h.push(hik);
        }
        let hn2 = inner(&w, &w, pw.as_deref());
        let hnext = hn2.max(0.0).sqrt();
        if !hnext.is_finite() {
            reason = StopReason::NonFinite;
            break;
        }
        h.push(hnext);
        for i in 0..k {
            let (a, b) = (h[i], h[i + 1]);
            h[i] = cs[i] * a + sn[i] * b;
            h[i + 1] = -sn[i] * a + cs[i] * b;
        }
        let rad = h[k].hypot(h[k + 1]);
        let (c, s) = if rad == 0.0 { (1.0, 0.0) } else { (h[k] / rad, h[k + 1] / rad) };
        h[k] = rad;
        h[k + 1] = 0.0;
        cs.push(c);
        sn.push(s);
        let gk = g[k];
        g[k] = c * gk;
        g.push(-s * gk);
        hess.push(h);
        stats.iterations += 1;
        let res = g[k + 1].abs();
        stats.residual_history.push(res);
        if res <= target {
            reason = StopReason::Converged;
            break;
        }
        if hnext <= 1e-14 * beta {
            reason = StopReason::LuckyBreakdown;
            break;
        }
        basis.push(w.iter().map(|v| v / hnext).collect());
        if let Some(pw) = pw {
            dual_basis.push(pw.iter().map(|v| v / hnext).collect());
        }
    }
    // back substitution R y = g
    let m = hess.len();
    let mut y = vec![0.0; m];
    for i in (0..m).rev() {
        let mut s = g[i];
        for j in i + 1..m {
            s -= hess[j][i] * y[j];
        }
        y[i] = s / hess[i][i];
    }
    for (yi, v) in y.iter().zip(&basis) {
        axpy(*yi, v, &mut x);
    }
    drop(basis);
    drop(dual_basis);
    // true residual in both the stopping norm and the plain preconditioned 2-norm
    op.apply(&x, &mut tmp);
    for (ti, bi) in tmp.iter_mut().zip(b) {
        *ti = bi - *ti;
    }
    precond.apply(&tmp, &mut z);
    let stop_norm = match metric {
        GmresMetric::Euclidean => norm(&z),
        GmresMetric::Weighted(wt) => z.iter().zip(wt).map(|(a, c)| a * a * c).sum::<f64>().sqrt(),
        GmresMetric::PreconditionerInverse => dot(&z, &tmp).max(0.0).sqrt(),
    };
    log::debug!(
        "gmres: {} iterations, true stopping-norm ratio {:.3e}, preconditioned 2-norm {:.3e}",
        stats.iterations,
        stop_norm / beta,
        norm(&z)
    );
    stats.true_relative_residual = Some(relative_residual(op, &x, b));
    Ok((x, stats.finish(reason)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::krylov::{pcg, Diagonal, Identity};
    use crate::sparse::SparseMatrix;
    use nalgebra::{DMatrix, DVector};

    fn laplace(n: usize) -> SparseMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0 + 0.01 * i as f64));
            if i > 0 {
                t.push((i, i - 1, -1.0));
                t.push((i - 1, i, -1.0));
            }
        }
        SparseMatrix::from_triplets(n, n, &t).unwrap()
    }

    #[test]
    fn identity_converges_in_one_step() {
        let b = [3.0, 4.0];
        let (x, s) = gmres(&Identity(2), &Identity(2), &b, None, &GmresMetric::Euclidean, SolverOptions::default()).unwrap();
        assert_eq!(s.iterations, 1);
        assert!((x[0] - 3.0).abs() < 1e-15 && (x[1] - 4.0).abs() < 1e-15);
    }

    #[test]
    fn skew_perturbed_matches_dense() {
        let rows = vec![
            vec![4.0, 1.0, 0.0, 0.5],
            vec![-1.0, 3.0, 1.0, 0.0],
            vec![0.0, -1.0, 5.0, 1.0],
            vec![-0.5, 0.0, -1.0, 2.0],
        ];
        let a = SparseMatrix::from_dense(&rows);
        let b = [1.0, 2.0, 3.0, 4.0];
        let exact = DMatrix::from_row_slice(4, 4, &rows.concat()).lu().solve(&DVector::from_row_slice(&b)).unwrap();
        for metric in [GmresMetric::Euclidean, GmresMetric::Weighted(vec![1.0, 2.0, 0.5, 1.0]), GmresMetric::PreconditionerInverse] {
            let pre = Diagonal::inverse_of(&a.diagonal()).unwrap();
            let (x, s) = gmres(&a, &pre, &b, None, &metric, SolverOptions::default()).unwrap();
            assert!(s.converged);
            let err = (DVector::from_vec(x) - &exact).norm() / exact.norm();
            assert!(err <= 1e-9, "{metric:?}: {err}");
            assert!(s.residual_history.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
        }
    }

    #[test]
    fn spd_iteration_count_tracks_cg() {
        for n in [20, 40, 60] {
            let a = laplace(n);
            let pre = Diagonal::inverse_of(&a.diagonal()).unwrap();
            let b: Vec<f64> = (0..n).map(|i| ((i * 7) % 5) as f64 - 2.0).collect();
            let opts = SolverOptions::new(1e-8, 500);
            let (_, sc) = pcg(&a, &pre, &b, None, opts).unwrap();
            let (_, sg) = gmres(&a, &pre, &b, None, &GmresMetric::PreconditionerInverse, opts).unwrap();
            assert!((sc.iterations as i64 - sg.iterations as i64).abs() <= 2, "{} vs {}", sc.iterations, sg.iterations);
        }
    }

    #[test]
    fn initial_guess_is_used() {
        let a = laplace(10);
        let b = vec![1.0; 10];
        let x0 = vec![0.5; 10];
        let r0: Vec<f64> = a.mul_vec(&x0).iter().zip(&b).map(|(ax, b)| b - ax).collect();
        let (x, s) = gmres(&a, &Identity(10), &b, Some(&x0), &GmresMetric::Euclidean, SolverOptions::default()).unwrap();
        assert!((s.residual_history[0] - norm(&r0)).abs() < 1e-14);
        assert!(relative_residual(&a, &x, &b) < 1e-10);
    }
}
