use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{axpy, dot, norm, LinearOperator};
use crate::dense::tridiagonal_eigen;
use crate::error::{Error, Result};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LanczosResult {
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// Ritz residual norms `|beta_k s_k|`, bounding the distance to the spectrum.
    pub residual_min: f64,
    pub residual_max: f64,
    pub iterations: usize,
    /// Both Ritz residuals below `1e-6` relative to the estimate.
    pub converged: bool,
}

/// Extreme eigenvalues of the pencil `(A, diag(b))` by Lanczos with full
/// reorthogonalization on `diag(b)^{-1/2} A diag(b)^{-1/2}`.
pub fn lanczos_extreme_eigs(op: &dyn LinearOperator, b: &[f64], iters: usize, seed: u64) -> Result<LanczosResult> {
    let n = b.len();
    if op.nrows() != n || op.ncols() != n {
        return Err(Error::DimensionMismatch("operator and diagonal differ in size".into()));
    }
    if n == 0 || iters == 0 {
        return Err(Error::invalid("Lanczos needs a non-empty problem and at least one iteration"));
    }
    if let Some(i) = b.iter().position(|&v| !(v > 0.0)) {
        return Err(Error::NotSpd(format!("diagonal entry {i} is {}", b[i])));
    }
    let isq: Vec<f64> = b.iter().map(|v| 1.0 / v.sqrt()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut q: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let qn = norm(&q);
    q.iter_mut().for_each(|v| *v /= qn);
    let m = iters.min(n);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m);
    let (mut alpha, mut beta) = (Vec::with_capacity(m), Vec::with_capacity(m));
    let mut tmp = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut last_beta = 0.0;
    for k in 0..m {
        let scaled: Vec<f64> = q.iter().zip(&isq).map(|(a, s)| a * s).collect();
        op.apply(&scaled, &mut tmp);
        for i in 0..n {
            w[i] = tmp[i] * isq[i];
        }
        let a = dot(&w, &q);
        alpha.push(a);
        basis.push(q.clone());
        // two passes of classical Gram-Schmidt against the whole basis
        for _ in 0..2 {
            for v in &basis {
                let c = dot(&w, v);
                axpy(-c, v, &mut w);
            }
        }
        let bk = norm(&w);
        last_beta = bk;
        if k + 1 == m || bk <= 1e-13 * a.abs().max(1e-300) {
            break;
        }
        beta.push(bk);
        q = w.iter().map(|v| v / bk).collect();
    }
    let k = alpha.len();
    let (vals, vecs) = tridiagonal_eigen(&alpha, &beta[..k - 1])?;
    let res = |j: usize| (last_beta * vecs[j][k - 1]).abs();
    let (lmin, lmax) = (vals[0], vals[k - 1]);
    let (rmin, rmax) = (res(0), res(k - 1));
    let converged = rmin <= 1e-6 * lmin.abs().max(1e-300) && rmax <= 1e-6 * lmax.abs();
    if !converged {
        log::warn!("lanczos: extreme Ritz values not converged after {k} steps (residuals {rmin:.2e}, {rmax:.2e})");
    }
    Ok(LanczosResult { lambda_min: lmin, lambda_max: lmax, residual_min: rmin, residual_max: rmax, iterations: k, converged })
}
