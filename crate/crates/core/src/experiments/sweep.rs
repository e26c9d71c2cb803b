//! Fixed-mesh sweep over the regularization parameter for `d = 1`.
//!
//! The L2 optimality system is solved by a banded LU of the symmetric
//! scaling `[[M, sqrt(rho) B], [sqrt(rho) B^T, -M]] [p / sqrt(rho); y] = [0; -y_d]`,
//! which stays well conditioned far below `rho = h^4` where the Schur
//! complement iteration loses robustness.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{h1_error, h1_seminorm, l2_error};
use crate::dense::BandedLu;
use crate::error::{Error, Result};
use crate::fespace::NodalField;
use crate::mesh::Mesh;
use crate::ocp::{OcpProblem, Regularization, RhoStrategy};
use crate::targets::TargetField;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepConfig {
    /// Vertices per axis of the fixed structured mesh.
    pub n_per_axis: usize,
    /// Regularization parameters in decreasing order.
    pub rhos: Vec<f64>,
    /// Minimal relative decrease of the L2 error between neighbouring `rho`.
    pub saturation_drop: f64,
    /// Iterative refinement steps after the factorization.
    pub refinement_steps: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig { n_per_axis: 129, rhos: rho_powers(2.0, 14, 23), saturation_drop: 0.05, refinement_steps: 2 }
    }
}

/// `base^{-k}` for `k` in `from..=to`.
pub fn rho_powers(base: f64, from: i32, to: i32) -> Vec<f64> {
    (from..=to).map(|k| base.powi(-k)).collect()
}

/// Parses `b^-i..b^-j` (or a single `b^-i`) into [`rho_powers`].
pub fn parse_rho_range(s: &str) -> Result<Vec<f64>> {
    let bad = || Error::invalid(format!("rho range '{s}' is not of the form b^-i..b^-j"));
    let term = |t: &str| -> Result<(f64, i32)> {
        let (b, e) = t.trim().split_once("^-").ok_or_else(bad)?;
        Ok((b.parse().map_err(|_| bad())?, e.parse().map_err(|_| bad())?))
    };
    let (lo, hi) = match s.split_once("..") {
        Some((a, b)) => (term(a)?, term(b)?),
        None => (term(s)?, term(s)?),
    };
    if lo.0 != hi.0 || lo.0 <= 1.0 || lo.1 > hi.1 {
        return Err(bad());
    }
    Ok(rho_powers(lo.0, lo.1, hi.1))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepRow {
    pub rho: f64,
    pub l2_error: f64,
    pub h1_error: f64,
    pub adjoint_h1: f64,
    /// Relative residual of the scaled system after refinement.
    pub residual: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepSummary {
    pub rows: Vec<SweepRow>,
    /// Indices `[first, last]` of the rows used for the fits.
    pub trusted: (usize, usize),
    pub slope_l2: f64,
    pub slope_h1: f64,
    pub slope_adjoint: f64,
    /// First `rho` whose L2 error no longer drops by the configured fraction.
    pub saturation_rho: Option<f64>,
    /// Knee of the L2 curve: where the fitted power law meets the smallest observed error.
    /// Only set when saturation was detected.
    pub knee_rho: Option<f64>,
    /// `h^4` of the mesh with `h` the axis spacing.
    pub h4: f64,
}

/// Least-squares slope of `log y` against `log x`.
pub fn fit_slope(x: &[f64], y: &[f64]) -> f64 {
    fit_line(x, y).0
}

/// Least-squares `(slope, intercept)` of `log y = intercept + slope log x`.
pub fn fit_line(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Rows in decreasing `rho` up to, not including, the first drop below `min_drop`.
pub fn trusted_range(errors: &[f64], min_drop: f64) -> (usize, usize) {
    let mut last = 0;
    for k in 1..errors.len() {
        if errors[k] > (1.0 - min_drop) * errors[k - 1] {
            break;
        }
        last = k;
    }
    (0, last)
}

pub fn run_rho_sweep_1d(target: &TargetField, cfg: &SweepConfig, mut progress: impl FnMut(&SweepRow)) -> Result<SweepSummary> {
    if cfg.rhos.is_empty() || cfg.rhos.windows(2).any(|w| !(w[1] < w[0])) || cfg.rhos.iter().any(|r| !(*r > 0.0)) {
        return Err(Error::invalid("rho list must be positive and strictly decreasing"));
    }
    let mesh = Arc::new(Mesh::build_initial(1, cfg.n_per_axis)?);
    let base = OcpProblem::new(mesh.clone(), Regularization::L2, RhoStrategy::Constant(1.0), target.clone())?;
    let (yh, ph) = (base.state_space().clone(), base.adjoint_space().clone());
    // interleave unknowns vertex by vertex to keep the band narrow
    let mut p_index = vec![usize::MAX; ph.len()];
    let mut y_index = vec![usize::MAX; yh.len()];
    let mut owner = Vec::new();
    for v in 0..mesh.num_vertices() {
        if let Some(i) = ph.dof(v) {
            p_index[i] = owner.len();
            owner.push((true, i));
        }
        if let Some(i) = yh.dof(v) {
            y_index[i] = owner.len();
            owner.push((false, i));
        }
    }
    let n = owner.len();
    let (mp, b, m) = (base.a(), base.b(), base.m());
    let bt = b.transpose();
    let mut bw = 0usize;
    for (row, &(is_p, i)) in owner.iter().enumerate() {
        let cols: Vec<usize> = if is_p {
            mp.row(i).0.iter().map(|&j| p_index[j as usize]).chain(b.row(i).0.iter().map(|&j| y_index[j as usize])).collect()
        } else {
            bt.row(i).0.iter().map(|&j| p_index[j as usize]).chain(m.row(i).0.iter().map(|&j| y_index[j as usize])).collect()
        };
        for c in cols {
            bw = bw.max(c.abs_diff(row));
        }
    }
    let mut rhs = vec![0.0; n];
    for (i, &v) in base.load().iter().enumerate() {
        rhs[y_index[i]] = -v;
    }
    let apply = |s: f64, x: &[f64], out: &mut [f64]| {
        for (row, &(is_p, i)) in owner.iter().enumerate() {
            let mut acc = 0.0;
            if is_p {
                let (c, v) = mp.row(i);
                acc += c.iter().zip(v).map(|(&j, a)| a * x[p_index[j as usize]]).sum::<f64>();
                let (c, v) = b.row(i);
                acc += s * c.iter().zip(v).map(|(&j, a)| a * x[y_index[j as usize]]).sum::<f64>();
            } else {
                let (c, v) = bt.row(i);
                acc += s * c.iter().zip(v).map(|(&j, a)| a * x[p_index[j as usize]]).sum::<f64>();
                let (c, v) = m.row(i);
                acc -= c.iter().zip(v).map(|(&j, a)| a * x[y_index[j as usize]]).sum::<f64>();
            }
            out[row] = acc;
        }
    };
    let rhs_norm = crate::krylov::norm(&rhs);
    let mut rows = Vec::new();
    for &rho in &cfg.rhos {
        let s = rho.sqrt();
        let lu = BandedLu::new(n, bw, bw, |row, put| {
            let (is_p, i) = owner[row];
            if is_p {
                let (c, v) = mp.row(i);
                c.iter().zip(v).for_each(|(&j, &a)| put(p_index[j as usize], a));
                let (c, v) = b.row(i);
                c.iter().zip(v).for_each(|(&j, &a)| put(y_index[j as usize], s * a));
            } else {
                let (c, v) = bt.row(i);
                c.iter().zip(v).for_each(|(&j, &a)| put(p_index[j as usize], s * a));
                let (c, v) = m.row(i);
                c.iter().zip(v).for_each(|(&j, &a)| put(y_index[j as usize], -a));
            }
        })?;
        let mut x = lu.solve(&rhs);
        let mut r = vec![0.0; n];
        for _ in 0..=cfg.refinement_steps {
            apply(s, &x, &mut r);
            r.iter_mut().zip(&rhs).for_each(|(ri, bi)| *ri = bi - *ri);
            if cfg.refinement_steps == 0 {
                break;
            }
            let dx = lu.solve(&r);
            x.iter_mut().zip(&dx).for_each(|(xi, di)| *xi += di);
        }
        apply(s, &x, &mut r);
        r.iter_mut().zip(&rhs).for_each(|(ri, bi)| *ri = bi - *ri);
        let residual = crate::krylov::norm(&r) / rhs_norm;
        let y = NodalField::new(yh.clone(), (0..yh.len()).map(|i| x[y_index[i]]).collect())?;
        let p = NodalField::new(ph.clone(), (0..ph.len()).map(|i| s * x[p_index[i]]).collect())?;
        let row = SweepRow {
            rho,
            l2_error: l2_error(&y, target).total,
            h1_error: h1_error(&y, target).ok_or_else(|| Error::invalid("sweep target needs an analytic gradient"))?,
            adjoint_h1: h1_seminorm(&p),
            residual,
        };
        progress(&row);
        rows.push(row);
    }
    let errors: Vec<f64> = rows.iter().map(|r| r.l2_error).collect();
    let trusted = trusted_range(&errors, cfg.saturation_drop);
    let saturation_rho = rows.get(trusted.1 + 1).map(|r| r.rho);
    let sel = &rows[trusted.0..=trusted.1];
    let rho: Vec<f64> = sel.iter().map(|r| r.rho).collect();
    let slope = |f: fn(&SweepRow) -> f64| {
        if sel.len() < 2 {
            f64::NAN
        } else {
            fit_slope(&rho, &sel.iter().map(f).collect::<Vec<_>>())
        }
    };
    let knee_rho = saturation_rho.filter(|_| sel.len() >= 2).map(|_| {
        let (s, c) = fit_line(&rho, &sel.iter().map(|r| r.l2_error).collect::<Vec<_>>());
        let plateau = errors.iter().cloned().fold(f64::INFINITY, f64::min);
        ((plateau.ln() - c) / s).exp()
    });
    let h = 1.0 / (cfg.n_per_axis - 1) as f64;
    Ok(SweepSummary {
        slope_l2: slope(|r| r.l2_error),
        slope_h1: slope(|r| r.h1_error),
        slope_adjoint: slope(|r| r.adjoint_h1),
        rows,
        trusted,
        saturation_rho,
        knee_rho,
        h4: h.powi(4),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ocp::{InnerSolve, OcpSettings};
    use crate::targets::TargetId;

    #[test]
    fn slope_of_power_law() {
        let x = [1.0, 0.5, 0.25, 0.125];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(0.75)).collect();
        assert!((fit_slope(&x, &y) - 0.75).abs() < 1e-12);
        assert!((fit_line(&x, &y).1 - 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn rho_range_parsing() {
        assert_eq!(parse_rho_range("2^-14..2^-16").unwrap(), vec![2f64.powi(-14), 2f64.powi(-15), 2f64.powi(-16)]);
        assert_eq!(parse_rho_range("10^-3").unwrap(), vec![1e-3]);
        assert!(parse_rho_range("2^-3..10^-4").is_err());
        assert!(parse_rho_range("2^-5..2^-3").is_err());
        assert!(parse_rho_range("junk").is_err());
    }

    #[test]
    fn trusted_range_stops_at_plateau() {
        assert_eq!(trusted_range(&[1.0, 0.7, 0.5, 0.49, 0.3], 0.05), (0, 2));
        assert_eq!(trusted_range(&[1.0, 1.0], 0.05), (0, 0));
    }

    #[test]
    fn banded_solution_matches_schur_iteration() {
        let t = TargetField::new(TargetId::Appendix2, 1).unwrap();
        let cfg = SweepConfig { n_per_axis: 9, rhos: vec![2f64.powi(-8)], ..Default::default() };
        let sum = run_rho_sweep_1d(&t, &cfg, |_| {}).unwrap();
        assert!(sum.rows[0].residual < 1e-13);
        let mesh = Arc::new(Mesh::build_initial(1, 9).unwrap());
        let p = OcpProblem::new(mesh, Regularization::L2, RhoStrategy::Constant(2f64.powi(-8)), t.clone()).unwrap();
        let res = p.solve_sc_pcg(InnerSolve::Exact, &OcpSettings::default(), None).unwrap();
        let e = l2_error(&res.y, &t).total;
        assert!((e - sum.rows[0].l2_error).abs() < 1e-8 * e);
        let ph = h1_seminorm(&res.p);
        assert!((ph - sum.rows[0].adjoint_h1).abs() < 1e-7 * ph);
    }
}
