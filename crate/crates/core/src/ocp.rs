//! Optimality system of the tracking problem and its solvers.
//!
//! The reduced system is
//!
//! ```text
//! [ A   B ] [p]   [   0  ]
//! [ B^T -M] [y] = [ -y_d ]
//! ```
//!
//! with `A` the `rho^-1`-weighted mass (L2) or space-time stiffness (energy)
//! matrix on the adjoint space, `B` the wave matrix and `M` the state mass
//! matrix. Eliminating `p` gives the Schur complement system
//! `(B^T A^{-1} B + M) y = y_d`.

use std::cell::Cell;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, OnceLock};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::amg::{AmgConfig, AmgHierarchy, AmgPreconditioner};
use crate::assembly::{
    assemble_mass, assemble_spacetime_stiffness, assemble_target_load, assemble_wave, lump, RegularizationField,
};
use crate::dense::Lu;
use crate::error::{Error, Result};
use crate::fespace::{DofSpace, NodalField, SpaceKind};
use crate::krylov::{
    dot, gmres, pcg, Diagonal, FnOperator, GmresMetric, LinearOperator, SolveStats,
    SolverOptions, StopReason,
};
use crate::mesh::Mesh;
use crate::sparse::SparseMatrix;
use crate::targets::TargetField;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regularization {
    L2,
    Energy,
}

impl Regularization {
    /// Exponent `r` in the mesh-dependent choice `rho = h^r`.
    pub fn rho_exponent(self) -> f64 {
        match self {
            Regularization::L2 => 4.0,
            Regularization::Energy => 2.0,
        }
    }
}

impl fmt::Display for Regularization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regularization::L2 => "l2",
            Regularization::Energy => "energy",
        })
    }
}

impl FromStr for Regularization {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l2" => Ok(Regularization::L2),
            "energy" | "h1" => Ok(Regularization::Energy),
            _ => Err(Error::invalid(format!("unknown regularization '{s}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum RhoStrategy {
    Constant(f64),
    /// `rho_tau = s_tau^r` element-wise, `r` from the regularization.
    Local,
}

/// How `A^{-1}` is applied inside the Schur complement.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum InnerSolve {
    /// Inner PCG to the configured tolerance.
    Exact,
    /// Inverse of the lumped weighted mass matrix (L2 only).
    Lumped,
    /// A fixed number of AMG V-cycles from zero (energy only).
    Amg(usize),
}

impl fmt::Display for InnerSolve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InnerSolve::Exact => f.write_str("exact"),
            InnerSolve::Lumped => f.write_str("lumped"),
            InnerSolve::Amg(i) => write!(f, "amg{i}"),
        }
    }
}

impl FromStr for InnerSolve {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.to_ascii_lowercase();
        match s.as_str() {
            "exact" => Ok(InnerSolve::Exact),
            "lumped" => Ok(InnerSolve::Lumped),
            _ => match s.strip_prefix("amg").map(|n| n.parse::<usize>()) {
                Some(Ok(i)) if i > 0 => Ok(InnerSolve::Amg(i)),
                _ => Err(Error::invalid(format!("unknown inner solve '{s}'"))),
            },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SolverKind {
    SchurPcg(InnerSolve),
    BramblePasciak,
    Gmres,
    /// Dense LU of the full system; small problems only.
    Dense,
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolverKind::SchurPcg(i) => write!(f, "sc-{i}"),
            SolverKind::BramblePasciak => f.write_str("bp"),
            SolverKind::Gmres => f.write_str("gmres"),
            SolverKind::Dense => f.write_str("dense"),
        }
    }
}

impl FromStr for SolverKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.to_ascii_lowercase();
        match s.as_str() {
            "sc" => Ok(SolverKind::SchurPcg(InnerSolve::Exact)),
            "bp" => Ok(SolverKind::BramblePasciak),
            "gmres" | "pgmres" => Ok(SolverKind::Gmres),
            "dense" => Ok(SolverKind::Dense),
            _ => match s.strip_prefix("sc-") {
                Some(inner) => Ok(SolverKind::SchurPcg(inner.parse()?)),
                None => Err(Error::invalid(format!("unknown solver '{s}'"))),
            },
        }
    }
}

/// Solver parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OcpSettings {
    pub tol: f64,
    pub max_iter: usize,
    pub inner_tol: f64,
    pub inner_max_iter: usize,
    /// Hierarchy parameters; problems pick them up through [`OcpProblem::with_amg_config`].
    pub amg: AmgConfig,
    /// Scaling `delta` of the block preconditioner for L2 Bramble-Pasciak.
    pub bp_delta_l2: f64,
    /// Scaling `delta` of the AMG block preconditioner for energy Bramble-Pasciak.
    pub bp_delta_energy: f64,
    /// V-cycles inside the energy Bramble-Pasciak block preconditioner.
    pub bp_cycles: usize,
    /// Lower constant `c` of `c lump(M) <= M`; `None` uses `1 / (d + 3)`.
    pub lumping_constant: Option<f64>,
    /// Inflation of the measured AMG contraction.
    pub eta_safety: f64,
    /// V-cycles in the GMRES block preconditioner for energy regularization.
    pub gmres_cycles: usize,
}

impl Default for OcpSettings {
    fn default() -> Self {
        OcpSettings {
            tol: 1e-11,
            max_iter: 5000,
            inner_tol: 1e-12,
            inner_max_iter: 2000,
            amg: AmgConfig::default(),
            bp_delta_l2: 0.98,
            bp_delta_energy: 0.25,
            bp_cycles: 2,
            lumping_constant: None,
            eta_safety: 1.05,
            gmres_cycles: 2,
        }
    }
}

impl OcpSettings {
    fn outer(&self) -> SolverOptions {
        SolverOptions::new(self.tol, self.max_iter)
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct InnerStats {
    pub calls: usize,
    pub total_iterations: usize,
    pub min_iterations: usize,
    pub max_iterations: usize,
    pub failures: usize,
}

#[derive(Clone, Debug)]
pub struct SolveResult {
    pub y: NodalField,
    pub p: NodalField,
    /// Control `-rho^{-1} p` (L2 only).
    pub u: Option<NodalField>,
    pub stats: SolveStats,
    pub inner: Option<InnerStats>,
    pub solver: SolverKind,
    pub seconds: f64,
}

impl SolveResult {
    pub fn ensure_converged(&self) -> Result<()> {
        if self.stats.converged {
            Ok(())
        } else {
            Err(Error::SolverFailure(format!(
                "{} stopped with {:?} after {} iterations",
                self.solver, self.stats.stop_reason, self.stats.iterations
            )))
        }
    }
}

#[derive(Debug)]
pub struct OcpProblem {
    mesh: Arc<Mesh>,
    yh: Arc<DofSpace>,
    ph: Arc<DofSpace>,
    regularization: Regularization,
    rho: RegularizationField,
    target: TargetField,
    b: SparseMatrix,
    m: SparseMatrix,
    d: Vec<f64>,
    a: SparseMatrix,
    load: Vec<f64>,
    amg_config: AmgConfig,
    amg: OnceLock<AmgHierarchy>,
    eta: OnceLock<f64>,
    lumped_a: OnceLock<Vec<f64>>,
}

impl OcpProblem {
    pub fn new(mesh: Arc<Mesh>, regularization: Regularization, rho: RhoStrategy, target: TargetField) -> Result<Self> {
        let field = match rho {
            RhoStrategy::Constant(v) => RegularizationField::constant(&mesh, v)?,
            RhoStrategy::Local => RegularizationField::local(&mesh, regularization.rho_exponent())?,
        };
        Self::with_field(mesh, regularization, field, target)
    }

    pub fn with_field(mesh: Arc<Mesh>, regularization: Regularization, rho: RegularizationField, target: TargetField) -> Result<Self> {
        let yh = DofSpace::new(mesh.clone(), SpaceKind::StateY)?;
        let ph = DofSpace::new(mesh.clone(), SpaceKind::AdjointP)?;
        if yh.is_empty() || ph.is_empty() {
            return Err(Error::invalid("mesh has no free dofs"));
        }
        let b = assemble_wave(&yh, &ph)?;
        let m = assemble_mass(&yh, None, false)?;
        let d = lump(&m)?;
        let a = match regularization {
            Regularization::L2 => assemble_mass(&ph, Some(&rho), true)?,
            Regularization::Energy => assemble_spacetime_stiffness(&ph, Some(&rho))?,
        };
        let load = assemble_target_load(&yh, &target)?;
        Ok(OcpProblem {
            mesh,
            yh,
            ph,
            regularization,
            rho,
            target,
            b,
            m,
            d,
            a,
            load,
            amg_config: AmgConfig::default(),
            amg: OnceLock::new(),
            eta: OnceLock::new(),
            lumped_a: OnceLock::new(),
        })
    }

    pub fn with_amg_config(mut self, config: AmgConfig) -> Self {
        self.amg_config = config;
        self.amg = OnceLock::new();
        self.eta = OnceLock::new();
        self
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn state_space(&self) -> &Arc<DofSpace> {
        &self.yh
    }

    pub fn adjoint_space(&self) -> &Arc<DofSpace> {
        &self.ph
    }

    pub fn regularization(&self) -> Regularization {
        self.regularization
    }

    pub fn rho(&self) -> &RegularizationField {
        &self.rho
    }

    pub fn target(&self) -> &TargetField {
        &self.target
    }

    /// Wave matrix, `m_h x n_h`.
    pub fn b(&self) -> &SparseMatrix {
        &self.b
    }

    /// State mass matrix `M_h`.
    pub fn m(&self) -> &SparseMatrix {
        &self.m
    }

    /// `lump(M_h)`.
    pub fn lumped_mass(&self) -> &[f64] {
        &self.d
    }

    /// Regularization matrix on the adjoint space.
    pub fn a(&self) -> &SparseMatrix {
        &self.a
    }

    pub fn load(&self) -> &[f64] {
        &self.load
    }

    pub fn num_state_dofs(&self) -> usize {
        self.yh.len()
    }

    pub fn num_adjoint_dofs(&self) -> usize {
        self.ph.len()
    }

    /// `lump(A)`; only meaningful for L2 regularization.
    pub fn lumped_a(&self) -> Result<&[f64]> {
        if self.regularization != Regularization::L2 {
            return Err(Error::Unsupported("lumping the stiffness matrix is not a valid preconditioner".into()));
        }
        if self.lumped_a.get().is_none() {
            let _ = self.lumped_a.set(lump(&self.a)?);
        }
        Ok(self.lumped_a.get().unwrap())
    }

    /// AMG hierarchy for `A` (built on first use).
    pub fn amg(&self) -> Result<&AmgHierarchy> {
        if self.amg.get().is_none() {
            let h = AmgHierarchy::setup(&self.a, self.amg_config)?;
            let _ = self.amg.set(h);
        }
        Ok(self.amg.get().unwrap())
    }

    /// Measured V-cycle contraction `||E||_A` (computed on first use).
    pub fn amg_contraction(&self) -> Result<f64> {
        if let Some(&e) = self.eta.get() {
            return Ok(e);
        }
        let eta = self.amg()?.estimate_contraction(2, 20, 0x5eed);
        log::debug!("amg contraction estimate {eta:.4}");
        let _ = self.eta.set(eta);
        Ok(eta)
    }

    fn check_inner(&self, inner: InnerSolve) -> Result<()> {
        match (inner, self.regularization) {
            (InnerSolve::Lumped, Regularization::Energy) => {
                Err(Error::Unsupported("lumped inner solve requires L2 regularization".into()))
            }
            (InnerSolve::Amg(_), Regularization::L2) => {
                Err(Error::Unsupported("AMG inner solve requires energy regularization".into()))
            }
            _ => Ok(()),
        }
    }

    fn fields(&self, p: Vec<f64>, y: Vec<f64>) -> Result<(NodalField, NodalField, Option<NodalField>)> {
        let p = NodalField::new(self.ph.clone(), p)?;
        let y = NodalField::new(self.yh.clone(), y)?;
        let u = match self.regularization {
            Regularization::L2 => Some(self.recover_control(&p)?),
            Regularization::Energy => None,
        };
        Ok((p, y, u))
    }

    /// Control `u = -rho^{-1} p` with vertex values of `rho` averaged over adjacent elements.
    pub fn recover_control(&self, p: &NodalField) -> Result<NodalField> {
        if self.regularization != Regularization::L2 {
            return Err(Error::Unsupported("the energy-regularized control is not a function".into()));
        }
        if !Arc::ptr_eq(p.space(), &self.ph) && p.space().len() != self.ph.len() {
            return Err(Error::DimensionMismatch("adjoint field does not belong to this problem".into()));
        }
        let values = match self.rho.constant_value() {
            Some(r) => p.values().iter().map(|v| -v / r).collect(),
            None => {
                let rv = self.rho.vertex_average(&self.mesh);
                self.ph.free_dofs().iter().zip(p.values()).map(|(&v, pv)| -pv / rv[v as usize]).collect()
            }
        };
        NodalField::new(self.ph.clone(), values)
    }

    /// Relative block residuals `||A p + B y|| / ||y_d||` and `||B^T p - M y + y_d|| / ||y_d||`.
    pub fn block_residual(&self, p: &[f64], y: &[f64]) -> (f64, f64) {
        let scale = crate::krylov::norm(&self.load).max(f64::MIN_POSITIVE);
        let mut r1 = self.a.mul_vec(p);
        let by = self.b.mul_vec(y);
        r1.iter_mut().zip(&by).for_each(|(a, b)| *a += b);
        let mut r2 = self.b.mul_vec_transpose(p);
        let my = self.m.mul_vec(y);
        for i in 0..r2.len() {
            r2[i] += self.load[i] - my[i];
        }
        (crate::krylov::norm(&r1) / scale, crate::krylov::norm(&r2) / scale)
    }

    pub fn solve(&self, kind: SolverKind, settings: &OcpSettings) -> Result<SolveResult> {
        match kind {
            SolverKind::SchurPcg(inner) => self.solve_sc_pcg(inner, settings, None),
            SolverKind::BramblePasciak => self.solve_bp_pcg(settings),
            SolverKind::Gmres => self.solve_pgmres(settings),
            SolverKind::Dense => self.solve_dense(),
        }
    }

    fn inner_solver(&self, mode: InnerSolve, settings: &OcpSettings) -> Result<InnerSolver<'_>> {
        self.check_inner(mode)?;
        let (jacobi, lumped_inv, amg) = match (mode, self.regularization) {
            (InnerSolve::Exact, Regularization::L2) => (Some(Diagonal::inverse_of(&self.a.diagonal())?), None, None),
            (InnerSolve::Exact, Regularization::Energy) | (InnerSolve::Amg(_), _) => (None, None, Some(self.amg()?)),
            (InnerSolve::Lumped, _) => (None, Some(Diagonal::inverse_of(self.lumped_a()?)?), None),
        };
        Ok(InnerSolver {
            a: &self.a,
            mode,
            jacobi,
            lumped_inv,
            amg,
            opts: SolverOptions::new(settings.inner_tol, settings.inner_max_iter),
            stats: Cell::new(InnerStats { min_iterations: usize::MAX, ..Default::default() }),
        })
    }

    /// PCG on the Schur complement preconditioned by `lump(M_h)`; `y0` is an optional initial guess.
    pub fn solve_sc_pcg(&self, inner: InnerSolve, settings: &OcpSettings, y0: Option<&[f64]>) -> Result<SolveResult> {
        self.solve_sc_pcg_with(inner, settings, y0, settings.tol)
    }

    pub fn solve_sc_pcg_with(
        &self,
        inner: InnerSolve,
        settings: &OcpSettings,
        y0: Option<&[f64]>,
        rel_tol: f64,
    ) -> Result<SolveResult> {
        let start = Instant::now();
        let solver = self.inner_solver(inner, settings)?;
        let ny = self.yh.len();
        let np = self.ph.len();
        let schur = FnOperator::square(ny, |y: &[f64], out: &mut [f64]| {
            let mut by = vec![0.0; np];
            self.b.matvec(y, &mut by);
            let w = solver.solve(&by);
            self.b.matvec_transpose(&w, out);
            let my = self.m.mul_vec(y);
            out.iter_mut().zip(&my).for_each(|(o, m)| *o += m);
        });
        let pre = Diagonal::inverse_of(&self.d)?;
        let (y, stats) = pcg(&schur, &pre, &self.load, y0, SolverOptions::new(rel_tol, settings.max_iter))?;
        let by = self.b.mul_vec(&y);
        let p: Vec<f64> = solver.solve(&by).iter().map(|v| -v).collect();
        let inner_stats = solver.finish();
        let (p, y, u) = self.fields(p, y)?;
        Ok(SolveResult {
            y,
            p,
            u,
            stats,
            inner: Some(inner_stats),
            solver: SolverKind::SchurPcg(inner),
            seconds: start.elapsed().as_secs_f64(),
        })
    }

    /// Bramble-Pasciak CG. `A_hat = delta c lump(A)` (L2) or the scaled AMG
    /// operator `delta (1 - eta^i) A (I - E^i)^{-1}` (energy).
    pub fn solve_bp_pcg(&self, settings: &OcpSettings) -> Result<SolveResult> {
        let start = Instant::now();
        let ahat = self.bp_block(settings)?;
        let (p, y, stats) = bramble_pasciak(&self.a, &self.b, &self.m, &self.d, ahat.as_ref(), &self.load, settings.outer())?;
        let (p, y, u) = self.fields(p, y)?;
        Ok(SolveResult { y, p, u, stats, inner: None, solver: SolverKind::BramblePasciak, seconds: start.elapsed().as_secs_f64() })
    }

    /// Operator applying `A_hat^{-1}` for Bramble-Pasciak.
    pub fn bp_block(&self, settings: &OcpSettings) -> Result<Box<dyn LinearOperator + '_>> {
        match self.regularization {
            Regularization::L2 => {
                let delta = settings.bp_delta_l2;
                if !(delta > 0.0 && delta < 1.0) {
                    return Err(Error::invalid(format!("delta must lie in (0, 1), got {delta}")));
                }
                let c = settings.lumping_constant.unwrap_or(1.0 / (self.mesh.dim() as f64 + 3.0));
                let scale = 1.0 / (delta * c);
                let diag = self.lumped_a()?.iter().map(|v| scale / v).collect();
                Ok(Box::new(Diagonal(diag)))
            }
            Regularization::Energy => {
                let eta = (self.amg_contraction()? * settings.eta_safety).min(0.999);
                Ok(Box::new(AmgPreconditioner::scaled_block(self.amg()?, settings.bp_delta_energy, settings.bp_cycles, eta)?))
            }
        }
    }

    /// Left-preconditioned GMRES on `[[A, B], [-B^T, M]] [p; y] = [0; y_d]` with
    /// block-diagonal preconditioner `diag(A_hat^{-1}, lump(M)^{-1})`.
    pub fn solve_pgmres(&self, settings: &OcpSettings) -> Result<SolveResult> {
        let start = Instant::now();
        let (np, ny) = (self.ph.len(), self.yh.len());
        let op = FnOperator::square(np + ny, |x: &[f64], out: &mut [f64]| {
            let (p, y) = x.split_at(np);
            let (o1, o2) = out.split_at_mut(np);
            self.a.matvec(p, o1);
            let by = self.b.mul_vec(y);
            o1.iter_mut().zip(&by).for_each(|(a, b)| *a += b);
            self.m.matvec(y, o2);
            let btp = self.b.mul_vec_transpose(p);
            o2.iter_mut().zip(&btp).for_each(|(a, b)| *a -= b);
        });
        let dinv: Vec<f64> = self.d.iter().map(|v| 1.0 / v).collect();
        let mut rhs = vec![0.0; np + ny];
        rhs[np..].copy_from_slice(&self.load);
        let opts = settings.outer();
        let (x, stats) = match self.regularization {
            Regularization::L2 => {
                let la = self.lumped_a()?;
                let mut diag: Vec<f64> = la.iter().map(|v| 1.0 / v).collect();
                diag.extend_from_slice(&dinv);
                let mut weights = la.to_vec();
                weights.extend_from_slice(&self.d);
                gmres(&op, &Diagonal(diag), &rhs, None, &GmresMetric::Weighted(weights), opts)?
            }
            Regularization::Energy => {
                let amg = AmgPreconditioner::new(self.amg()?, settings.gmres_cycles);
                let pre = FnOperator::square(np + ny, |x: &[f64], out: &mut [f64]| {
                    let (o1, o2) = out.split_at_mut(np);
                    amg.apply(&x[..np], o1);
                    for i in 0..ny {
                        o2[i] = dinv[i] * x[np + i];
                    }
                });
                gmres(&op, &pre, &rhs, None, &GmresMetric::PreconditionerInverse, opts)?
            }
        };
        let (p, y) = x.split_at(np);
        let (p, y, u) = self.fields(p.to_vec(), y.to_vec())?;
        Ok(SolveResult { y, p, u, stats, inner: None, solver: SolverKind::Gmres, seconds: start.elapsed().as_secs_f64() })
    }

    /// Dense LU of the full symmetric indefinite system (at most 6000 unknowns).
    pub fn solve_dense(&self) -> Result<SolveResult> {
        let start = Instant::now();
        let (np, ny) = (self.ph.len(), self.yh.len());
        let n = np + ny;
        if n > 6000 {
            return Err(Error::Unsupported(format!("dense solve of {n} unknowns is too large")));
        }
        let mut k = vec![0.0; n * n];
        for i in 0..np {
            let (c, v) = self.a.row(i);
            for (&c, &v) in c.iter().zip(v) {
                k[i * n + c as usize] = v;
            }
            let (c, v) = self.b.row(i);
            for (&c, &v) in c.iter().zip(v) {
                k[i * n + np + c as usize] = v;
                k[(np + c as usize) * n + i] = v;
            }
        }
        for i in 0..ny {
            let (c, v) = self.m.row(i);
            for (&c, &v) in c.iter().zip(v) {
                k[(np + i) * n + np + c as usize] = -v;
            }
        }
        let mut rhs = vec![0.0; n];
        for i in 0..ny {
            rhs[np + i] = -self.load[i];
        }
        let x = Lu::new(&k, n)?.solve(&rhs);
        let mut stats = SolveStats::new(0.0).finish(StopReason::Converged);
        stats.residual_history.clear();
        stats.residual_history.push(0.0);
        let (p, y) = x.split_at(np);
        let (p, y, u) = self.fields(p.to_vec(), y.to_vec())?;
        Ok(SolveResult { y, p, u, stats, inner: None, solver: SolverKind::Dense, seconds: start.elapsed().as_secs_f64() })
    }

    /// Schur complement `S y = B^T A^{-1} B y + M y` with the given inner solve.
    pub fn schur_apply(&self, inner: InnerSolve, settings: &OcpSettings, y: &[f64]) -> Result<Vec<f64>> {
        let solver = self.inner_solver(inner, settings)?;
        let w = solver.solve(&self.b.mul_vec(y));
        let mut out = self.b.mul_vec_transpose(&w);
        let my = self.m.mul_vec(y);
        out.iter_mut().zip(&my).for_each(|(o, m)| *o += m);
        Ok(out)
    }

    /// `S` as a linear operator (inner solver statistics are discarded).
    pub fn schur_operator<'a>(&'a self, inner: InnerSolve, settings: &OcpSettings) -> Result<impl LinearOperator + 'a> {
        let solver = self.inner_solver(inner, settings)?;
        let ny = self.yh.len();
        Ok(FnOperator::square(ny, move |y: &[f64], out: &mut [f64]| {
            let w = solver.solve(&self.b.mul_vec(y));
            self.b.matvec_transpose(&w, out);
            let my = self.m.mul_vec(y);
            out.iter_mut().zip(&my).for_each(|(o, m)| *o += m);
        }))
    }
}

/// Applies `A^{-1}` according to the inner mode.
struct InnerSolver<'a> {
    a: &'a SparseMatrix,
    mode: InnerSolve,
    jacobi: Option<Diagonal>,
    lumped_inv: Option<Diagonal>,
    amg: Option<&'a AmgHierarchy>,
    opts: SolverOptions,
    stats: Cell<InnerStats>,
}

impl InnerSolver<'_> {
    fn record(&self, iterations: usize, ok: bool) {
        let mut s = self.stats.take();
        s.calls += 1;
        s.total_iterations += iterations;
        s.min_iterations = s.min_iterations.min(iterations);
        s.max_iterations = s.max_iterations.max(iterations);
        if !ok {
            s.failures += 1;
        }
        self.stats.set(s);
    }

    fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        match self.mode {
            InnerSolve::Lumped => self.lumped_inv.as_ref().unwrap().apply_vec(rhs),
            InnerSolve::Amg(i) => {
                self.record(i, true);
                self.amg.unwrap().vcycles(rhs, i)
            }
            InnerSolve::Exact => {
                let result = match (&self.jacobi, self.amg) {
                    (Some(j), _) => pcg(self.a, j, rhs, None, self.opts),
                    (None, Some(h)) => pcg(self.a, &AmgPreconditioner::new(h, 1), rhs, None, self.opts),
                    _ => unreachable!("exact inner solve without preconditioner"),
                };
                match result {
                    Ok((x, s)) => {
                        if !s.converged {
                            log::warn!("inner solve stopped with {:?} after {} iterations", s.stop_reason, s.iterations);
                        }
                        self.record(s.iterations, s.converged);
                        x
                    }
                    Err(e) => {
                        log::error!("inner solve failed: {e}");
                        self.record(0, false);
                        vec![f64::NAN; rhs.len()]
                    }
                }
            }
        }
    }

    fn finish(&self) -> InnerStats {
        let mut s = self.stats.take();
        if s.calls == 0 {
            s.min_iterations = 0;
        }
        s
    }
}

/// Bramble-Pasciak CG for `[[A, B], [B^T, -M]] [p; y] = [0; -y_d]`.
///
/// CG runs on the transformed SPD system with matrix
/// `[[A Ah^-1 A - A, (A Ah^-1 - I) B], [B^T (Ah^-1 A - I), B^T Ah^-1 B + M]]`,
/// right-hand side `[0; y_d]` and preconditioner `diag(A - Ah, D)`. The first
/// preconditioned residual block is tracked directly: `r_1 = (A - Ah) s`, so
/// `(A - Ah)^{-1}` is never needed. One application of `Ah^{-1}` per step.
pub fn bramble_pasciak(
    a: &SparseMatrix,
    b: &SparseMatrix,
    m: &SparseMatrix,
    d: &[f64],
    ahat_inv: &dyn LinearOperator,
    yd: &[f64],
    opts: SolverOptions,
) -> Result<(Vec<f64>, Vec<f64>, SolveStats)> {
    opts.validate()?;
    let (np, ny) = (a.nrows(), m.nrows());
    if b.nrows() != np || b.ncols() != ny || d.len() != ny || yd.len() != ny || ahat_inv.nrows() != np {
        return Err(Error::DimensionMismatch("Bramble-Pasciak block sizes".into()));
    }
    let mut xp = vec![0.0; np];
    let mut xy = vec![0.0; ny];
    // residual: r_1 = 0 (s = 0), r_2 = y_d
    let mut s = vec![0.0; np];
    let mut r1 = vec![0.0; np];
    let mut r2 = yd.to_vec();
    let mut z2: Vec<f64> = r2.iter().zip(d).map(|(r, d)| r / d).collect();
    let mut rz = dot(&r2, &z2);
    let first = rz.max(0.0).sqrt();
    let mut stats = SolveStats::new(first);
    if first == 0.0 {
        return Ok((xp, xy, stats.finish(StopReason::ZeroResidual)));
    }
    let target = opts.rel_tol * first;
    let mut dp = s.clone();
    let mut dy = z2.clone();
    let mut g = vec![0.0; np];
    let mut w = vec![0.0; np];
    let mut aw = vec![0.0; np];
    let mut kd2 = vec![0.0; ny];
    let mut reason = StopReason::MaxIterations;
    for _ in 0..opts.max_iter {
        // g = A d_p + B d_y, w = Ah^{-1} g
        a.matvec(&dp, &mut g);
        let bdy = b.mul_vec(&dy);
        g.iter_mut().zip(&bdy).for_each(|(x, y)| *x += y);
        ahat_inv.apply(&g, &mut w);
        a.matvec(&w, &mut aw);
        // (K d)_1 = A w - g = (A - Ah) w ; (K d)_2 = B^T (w - d_p) + M d_y
        let kd1: Vec<f64> = aw.iter().zip(&g).map(|(x, y)| x - y).collect();
        let diff: Vec<f64> = w.iter().zip(&dp).map(|(x, y)| x - y).collect();
        b.matvec_transpose(&diff, &mut kd2);
        let mdy = m.mul_vec(&dy);
        kd2.iter_mut().zip(&mdy).for_each(|(x, y)| *x += y);
        let dkd = dot(&dp, &kd1) + dot(&dy, &kd2);
        if !(dkd > 0.0) {
            reason = if dkd.is_finite() { StopReason::IndefiniteOperator } else { StopReason::NonFinite };
            break;
        }
        let alpha = rz / dkd;
        crate::krylov::axpy(alpha, &dp, &mut xp);
        crate::krylov::axpy(alpha, &dy, &mut xy);
        crate::krylov::axpy(-alpha, &w, &mut s);
        crate::krylov::axpy(-alpha, &kd2, &mut r2);
        // z_1 = s, z_2 = D^{-1} r_2
        for i in 0..ny {
            z2[i] = r2[i] / d[i];
        }
        crate::krylov::axpy(-alpha, &kd1, &mut r1);
        stats.iterations += 1;
        let rz_new = dot(&r1, &s) + dot(&r2, &z2);
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
        for i in 0..np {
            dp[i] = s[i] + beta * dp[i];
        }
        for i in 0..ny {
            dy[i] = z2[i] + beta * dy[i];
        }
    }
    Ok((xp, xy, stats.finish(reason)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::targets::TargetId;
    use nalgebra::{DMatrix, DVector};

    fn problem(d: usize, n: usize, reg: Regularization, rho: f64, target: TargetId) -> OcpProblem {
        let mesh = Arc::new(Mesh::build_initial(d, n).unwrap());
        OcpProblem::new(mesh, reg, RhoStrategy::Constant(rho), TargetField::new(target, d).unwrap()).unwrap()
    }

    /// Independent dense solve of the saddle point system.
    fn oracle(prob: &OcpProblem) -> (Vec<f64>, Vec<f64>) {
        let (np, ny) = (prob.num_adjoint_dofs(), prob.num_state_dofs());
        let n = np + ny;
        let mut k = DMatrix::zeros(n, n);
        let (a, b, m) = (prob.a().to_dense(), prob.b().to_dense(), prob.m().to_dense());
        for i in 0..np {
            for j in 0..np {
                k[(i, j)] = a[i][j];
            }
            for j in 0..ny {
                k[(i, np + j)] = b[i][j];
                k[(np + j, i)] = b[i][j];
            }
        }
        for i in 0..ny {
            for j in 0..ny {
                k[(np + i, np + j)] = -m[i][j];
            }
        }
        let mut rhs = DVector::zeros(n);
        for i in 0..ny {
            rhs[np + i] = -prob.load()[i];
        }
        let x = k.lu().solve(&rhs).unwrap();
        (x.rows(0, np).iter().copied().collect(), x.rows(np, ny).iter().copied().collect())
    }

    fn rel(a: &[f64], b: &[f64]) -> f64 {
        let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        num / b.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    #[test]
    fn all_solvers_agree_with_dense_oracle() {
        let cases = [
            (1, 5, Regularization::L2, 1e-3, TargetId::Smooth),
            (1, 7, Regularization::Energy, 1e-2, TargetId::Discontinuous),
            (2, 4, Regularization::L2, 0.5f64.powi(8), TargetId::Continuous),
            (2, 4, Regularization::Energy, 0.0625, TargetId::Smooth),
        ];
        let settings = OcpSettings::default();
        for (d, n, reg, rho, t) in cases {
            let prob = problem(d, n, reg, rho, t);
            let (p_ref, y_ref) = oracle(&prob);
            let mut kinds = vec![SolverKind::SchurPcg(InnerSolve::Exact), SolverKind::BramblePasciak, SolverKind::Gmres, SolverKind::Dense];
            if reg == Regularization::Energy {
                // enough V-cycles make the inexact Schur complement exact to rounding
                kinds.push(SolverKind::SchurPcg(InnerSolve::Amg(40)));
            }
            for kind in kinds {
                let r = prob.solve(kind, &settings).unwrap();
                r.ensure_converged().unwrap();
                let ey = rel(r.y.values(), &y_ref);
                let ep = rel(r.p.values(), &p_ref);
                assert!(ey < 1e-8 && ep < 1e-7, "{kind} d={d} {reg}: state {ey:.2e}, adjoint {ep:.2e}");
                if kind != SolverKind::SchurPcg(InnerSolve::Amg(40)) {
                    let (r1, r2) = prob.block_residual(r.p.values(), r.y.values());
                    assert!(r1 < 1e-8 && r2 < 1e-8, "{kind}: {r1:.2e} {r2:.2e}");
                }
            }
        }
    }

    #[test]
    fn zero_target_gives_zero_solution() {
        let mesh = Arc::new(Mesh::build_initial(1, 5).unwrap());
        let prob = OcpProblem::new(mesh, Regularization::L2, RhoStrategy::Constant(0.01), TargetField::constant(0.0)).unwrap();
        let r = prob.solve_sc_pcg(InnerSolve::Exact, &OcpSettings::default(), None).unwrap();
        assert_eq!(r.stats.iterations, 0);
        assert!(r.y.values().iter().chain(r.p.values()).all(|&v| v == 0.0));
    }

    #[test]
    fn control_is_scaled_adjoint() {
        let prob = problem(1, 6, Regularization::L2, 0.01, TargetId::Smooth);
        let r = prob.solve_sc_pcg(InnerSolve::Lumped, &OcpSettings::default(), None).unwrap();
        let u = r.u.unwrap();
        let mp = assemble_mass(prob.adjoint_space(), None, false).unwrap();
        let l2 = |v: &[f64]| dot(v, &mp.mul_vec(v)).sqrt();
        assert!((0.01 * l2(u.values()) - l2(r.p.values())).abs() < 1e-12 * l2(r.p.values()));
        let zero = NodalField::zeros(prob.adjoint_space().clone());
        assert!(prob.recover_control(&zero).unwrap().values().iter().all(|&v| v == 0.0));
        let e = problem(1, 4, Regularization::Energy, 0.1, TargetId::Smooth);
        assert!(e.recover_control(&NodalField::zeros(e.adjoint_space().clone())).is_err());
    }

    #[test]
    fn inner_modes_are_checked() {
        let prob = problem(1, 4, Regularization::L2, 0.01, TargetId::Smooth);
        assert!(prob.solve_sc_pcg(InnerSolve::Amg(2), &OcpSettings::default(), None).is_err());
        let prob = problem(1, 4, Regularization::Energy, 0.01, TargetId::Smooth);
        assert!(prob.solve_sc_pcg(InnerSolve::Lumped, &OcpSettings::default(), None).is_err());
        assert_eq!("sc-amg3".parse::<SolverKind>().unwrap(), SolverKind::SchurPcg(InnerSolve::Amg(3)));
        assert_eq!("sc-lumped".parse::<SolverKind>().unwrap().to_string(), "sc-lumped");
    }

    #[test]
    fn stability_identity_holds_for_constant_rho() {
        // rho^-1 p^T Mbar p rho + y^T M y = y_d^T y, i.e. p^T A p + y^T M y = y_d . y
        let prob = problem(2, 4, Regularization::L2, 1e-3, TargetId::Continuous);
        let r = prob.solve_dense().unwrap();
        let (p, y) = (r.p.values(), r.y.values());
        let lhs = dot(p, &prob.a().mul_vec(p)) + dot(y, &prob.m().mul_vec(y));
        let rhs = dot(prob.load(), y);
        assert!((lhs - rhs).abs() <= 1e-8 * rhs.abs());
    }
}
