//! Subcommand implementations.

use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use anyhow::{anyhow, bail, Result};
use log::info;
use serde_json::json;
use stocp_core::assembly::assemble_mass;
use stocp_core::experiments::{
    axis_spacing, h1_error, l2_error, parse_rho_range, run_adaptive_nested, run_rho_sweep_1d, run_uniform_study,
    verify_spectral_equivalence, AdaptivityConfig, ConvergenceRow, NestedTolerance, StudyConfig, SweepConfig,
};
use stocp_core::io::{fmt_f64, write_snapshot, write_vtk, CsvTable};
use stocp_core::ocp::OcpSettings;
use stocp_core::{AmgConfig, InnerSolve, Mesh, NodalField, OcpProblem, Regularization, RhoStrategy, SolverKind, TargetField, TargetId};

use crate::config::{parse_list, ConfigFile};
use crate::output::OutputDir;
use crate::Shared;

pub enum Outcome {
    Success,
    SolverFailure(String),
}

impl Outcome {
    fn from_failures(failures: Vec<String>) -> Outcome {
        if failures.is_empty() {
            Outcome::Success
        } else {
            Outcome::SolverFailure(failures.join("; "))
        }
    }
}

/// Shared options after merging flags, config file and defaults.
struct Resolved {
    file: ConfigFile,
    out: PathBuf,
    jobs: usize,
    d: usize,
    reg: Regularization,
    settings: OcpSettings,
}

impl Resolved {
    fn new(s: &Shared) -> Result<Self> {
        let file = match &s.config {
            Some(p) => ConfigFile::load(p)?,
            None => ConfigFile::default(),
        };
        let defaults = OcpSettings::default();
        let amg_default = AmgConfig::default();
        let amg = AmgConfig {
            strength_threshold: file.pick(s.amg_strength, "amg-strength", amg_default.strength_threshold)?,
            pre_smooth: file.pick(s.amg_pre_smooth, "amg-pre-smooth", amg_default.pre_smooth)?,
            post_smooth: file.pick(s.amg_post_smooth, "amg-post-smooth", amg_default.post_smooth)?,
            max_coarse_size: file.pick(s.amg_max_coarse, "amg-max-coarse", amg_default.max_coarse_size)?,
            ..amg_default
        };
        let settings = OcpSettings {
            tol: file.pick(s.tol, "tol", defaults.tol)?,
            max_iter: file.pick(s.max_iter, "max-iter", defaults.max_iter)?,
            inner_tol: file.pick(s.inner_tol, "inner-tol", defaults.inner_tol)?,
            amg,
            bp_delta_l2: file.pick(s.bp_delta_l2, "bp-delta-l2", defaults.bp_delta_l2)?,
            bp_delta_energy: file.pick(s.bp_delta_energy, "bp-delta-energy", defaults.bp_delta_energy)?,
            bp_cycles: file.pick(s.bp_cycles, "bp-cycles", defaults.bp_cycles)?,
            gmres_cycles: file.pick(s.gmres_cycles, "gmres-cycles", defaults.gmres_cycles)?,
            lumping_constant: file.pick_opt(s.lumping_constant, "lumping-constant")?,
            ..defaults
        };
        if !(settings.tol > 0.0 && settings.tol < 1.0) {
            bail!("tol must lie in (0, 1)");
        }
        let d = file.pick(s.d, "d", 2usize)?;
        if !(1..=2).contains(&d) {
            bail!("d must be 1 or 2");
        }
        let reg = file.pick(s.reg.clone(), "reg", "l2".to_string())?.parse::<Regularization>()?;
        let jobs = file.pick(s.jobs, "jobs", 1usize)?.max(1);
        let out = file.pick(s.out.as_ref().map(|p| p.display().to_string()), "out", "out".to_string())?.into();
        Ok(Resolved { file, out, jobs, d, reg, settings })
    }

    fn config_json(&self, extra: serde_json::Value) -> Result<serde_json::Value> {
        let mut v = json!({
            "d": self.d,
            "regularization": self.reg.to_string(),
            "settings": serde_json::to_value(self.settings)?,
        });
        if let (Some(obj), serde_json::Value::Object(more)) = (v.as_object_mut(), extra) {
            obj.extend(more);
        }
        Ok(v)
    }

    fn target(&self, flag: Option<String>, default: &str, d: usize) -> Result<TargetField> {
        let name = self.file.pick(flag, "target", default.to_string())?;
        let id: TargetId = name.parse()?;
        Ok(TargetField::new(id, d)?)
    }
}

/// Runs `f` on every item with at most `jobs` threads; results keep the item order.
fn run_cells<T: Sync, R: Send>(items: &[T], jobs: usize, f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<R>>> = Mutex::new((0..items.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..jobs.min(items.len()).max(1) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= items.len() {
                    break;
                }
                let r = f(&items[i]);
                slots.lock().unwrap()[i] = Some(r);
            });
        }
    });
    slots.into_inner().unwrap().into_iter().map(|r| r.expect("every cell ran")).collect()
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

pub fn mesh(shared: &Shared, level: Option<usize>, vtk: bool) -> Result<Outcome> {
    let r = Resolved::new(shared)?;
    let level = r.file.pick(level, "level", 3usize)?;
    let vtk = r.file.switch(vtk, "vtk")?;
    let mesh = Mesh::uniform_level(r.d, level)?;
    let mut out = OutputDir::create(&r.out, "mesh", r.config_json(json!({ "level": level }))?)?;
    let mut t = CsvTable::new(["d", "Level", "#Vertices", "#Elements", "#Edges", "max_aspect_ratio", "total_volume", "checksum"]);
    let checksum = mesh.checksum();
    t.push(vec![
        r.d.to_string(),
        level.to_string(),
        mesh.num_vertices().to_string(),
        mesh.num_elements().to_string(),
        mesh.num_edges().to_string(),
        fmt_f64(mesh.max_aspect_ratio()),
        fmt_f64(mesh.total_volume()),
        checksum.clone(),
    ])?;
    let stem = format!("mesh_d{}_l{level}", r.d);
    out.csv(&format!("{stem}.csv"), &t)?;
    if vtk {
        let p = out.path(&format!("{stem}.vtk"));
        write_vtk(&p, &mesh, &[])?;
        out.record(&p)?;
    }
    out.manifest_mut().mesh_checksums.push(checksum);
    out.finish()?;
    Ok(Outcome::Success)
}

pub struct SolveArgs {
    pub target: Option<String>,
    pub level: Option<usize>,
    pub solver: Option<String>,
    pub rho: Option<f64>,
    pub rho_local: bool,
    pub vtk: bool,
    pub snapshot: bool,
}

pub fn solve(shared: &Shared, a: SolveArgs) -> Result<Outcome> {
    let r = Resolved::new(shared)?;
    let target = r.target(a.target, "smooth", r.d)?;
    let level = r.file.pick(a.level, "level", 3usize)?;
    let solver: SolverKind = r.file.pick(a.solver, "solver", "sc-exact".to_string())?.parse()?;
    let local = r.file.switch(a.rho_local, "rho-local")?;
    let rho_value = r.file.pick(a.rho, "rho", axis_spacing(level).powf(r.reg.rho_exponent()))?;
    let rho = if local { RhoStrategy::Local } else { RhoStrategy::Constant(rho_value) };
    let vtk = r.file.switch(a.vtk, "vtk")?;
    let snapshot = r.file.switch(a.snapshot, "snapshot")?;
    let mesh = Arc::new(Mesh::uniform_level(r.d, level)?);
    let problem = OcpProblem::new(mesh.clone(), r.reg, rho, target.clone())?.with_amg_config(r.settings.amg);
    let config = r.config_json(json!({
        "target": target.label(), "level": level, "solver": solver.to_string(),
        "rho": if local { json!("local") } else { json!(rho_value) },
    }))?;
    let mut out = OutputDir::create(&r.out, "solve", config)?;
    out.manifest_mut().mesh_checksums.push(mesh.checksum());
    let res = problem.solve(solver, &r.settings)?;
    let err = l2_error(&res.y, &target).total;
    let h1 = h1_error(&res.y, &target);
    let stem = format!("solve_d{}_{}_{}_l{level}_{solver}", r.d, r.reg, target.label());
    let mut t = CsvTable::new([
        "solver", "Level", "#Vertices", "#StateDofs", "rho", "iterations", "converged", "final_relative_residual",
        "||y_rho_h-y_d||", "|y_rho_h-y_d|_H1",
    ]);
    t.push(vec![
        solver.to_string(),
        level.to_string(),
        mesh.num_vertices().to_string(),
        problem.num_state_dofs().to_string(),
        if local { "local".into() } else { fmt_f64(rho_value) },
        res.stats.iterations.to_string(),
        res.stats.converged.to_string(),
        fmt_f64(res.stats.final_relative()),
        fmt_f64(err),
        opt(h1),
    ])?;
    out.csv(&format!("{stem}.csv"), &t)?;
    let mut timing = CsvTable::new(["solver", "seconds"]);
    timing.push(vec![solver.to_string(), format!("{:.3}", res.seconds)])?;
    out.csv(&format!("{stem}_timings.csv"), &timing)?;
    println!("{solver}: {} iterations, ||y - y_d|| = {}", res.stats.iterations, fmt_f64(err));
    if vtk {
        let y = res.y.vertex_values();
        let p = res.p.vertex_values();
        let yd: Vec<f64> = mesh.vertices().iter().map(|v| target.eval(&v.coords[..mesh.st_dim()])).collect();
        let u = res.u.as_ref().map(NodalField::vertex_values);
        let mut fields: Vec<(&str, &[f64])> = vec![("y", &y), ("p", &p), ("y_d", &yd)];
        if let Some(u) = &u {
            fields.push(("u", u));
        }
        let path = out.path(&format!("{stem}.vtk"));
        write_vtk(&path, &mesh, &fields)?;
        out.record(&path)?;
    }
    if snapshot {
        for (name, field) in [("y", &res.y), ("p", &res.p)] {
            let path = out.path(&format!("{stem}_{name}.bin"));
            write_snapshot(&path, field.values())?;
            out.record(&path)?;
        }
    }
    out.finish()?;
    Ok(if res.stats.converged {
        Outcome::Success
    } else {
        Outcome::SolverFailure(format!("{solver} stopped with {:?}", res.stats.stop_reason))
    })
}

fn study_tables(rows: &[ConvergenceRow], solvers: &[SolverKind]) -> Result<(CsvTable, CsvTable)> {
    let mut header: Vec<String> =
        ["Level", "#Vertices", "h", "rho", "||y_rho_h-y_d||", "EOC"].iter().map(|s| s.to_string()).collect();
    let mut timing_header = vec!["Level".to_string()];
    for s in solvers {
        header.push(format!("{s} iterations"));
        header.push(format!("{s} ||y_rho_h-y_d||"));
        timing_header.push(format!("{s} seconds"));
        timing_header.push(format!("{s} inner mean"));
    }
    let mut t = CsvTable::new(header);
    let mut tt = CsvTable::new(timing_header);
    for row in rows {
        let mut cells = vec![
            row.level.to_string(),
            row.vertices.to_string(),
            fmt_f64(row.h),
            fmt_f64(row.rho),
            fmt_f64(row.l2_error),
            row.eoc.map(|e| format!("{e:.4}")).unwrap_or_else(|| "-".into()),
        ];
        let mut timing = vec![row.level.to_string()];
        for run in &row.runs {
            cells.push(run.iterations.to_string());
            cells.push(fmt_f64(run.l2_error));
            timing.push(format!("{:.3}", run.seconds));
            timing.push(run.inner_mean.map(|v| format!("{v:.2}")).unwrap_or_default());
        }
        t.push(cells)?;
        tt.push(timing)?;
    }
    Ok((t, tt))
}

pub fn study(
    shared: &Shared,
    targets: Option<String>,
    levels: Option<usize>,
    solvers: Option<String>,
    lumped: bool,
) -> Result<Outcome> {
    let r = Resolved::new(shared)?;
    let targets = match r.file.pick_opt(targets, "targets")? {
        Some(t) => t,
        None => r.file.pick(None, "target", "smooth,continuous,discontinuous".to_string())?,
    };
    let targets: Vec<TargetId> = parse_list(&targets)?;
    let levels = r.file.pick(levels, "levels", 4usize)?;
    let mut solvers: Vec<SolverKind> = parse_list(&r.file.pick(solvers, "solvers", "sc-exact,bp,gmres".to_string())?)?;
    if r.file.switch(lumped, "lumped")? {
        if r.reg != Regularization::L2 {
            bail!("--lumped requires L2 regularization");
        }
        solvers.push(SolverKind::SchurPcg(InnerSolve::Lumped));
    }
    if solvers.is_empty() || targets.is_empty() || levels == 0 {
        bail!("study needs at least one target, one solver and one level");
    }
    let config = r.config_json(json!({
        "targets": targets.iter().map(|t| t.name()).collect::<Vec<_>>(),
        "levels": levels,
        "solvers": solvers.iter().map(|s| s.to_string()).collect::<Vec<_>>(),
    }))?;
    let mut out = OutputDir::create(&r.out, "study", config)?;
    let cells: Vec<StudyConfig> = targets
        .iter()
        .map(|&id| -> Result<StudyConfig> {
            Ok(StudyConfig {
                d: r.d,
                regularization: r.reg,
                target: TargetField::new(id, r.d)?,
                levels: (1..=levels).collect(),
                solvers: solvers.clone(),
                settings: r.settings,
            })
        })
        .collect::<Result<_>>()?;
    let results = run_cells(&cells, r.jobs, |cfg| {
        run_uniform_study(cfg, |row| {
            info!("{} level {}: error {:e}", cfg.target.label(), row.level, row.l2_error);
        })
    });
    let mut failures = Vec::new();
    for (cfg, res) in cells.iter().zip(results) {
        let stem = format!("study_d{}_{}_{}", r.d, r.reg, cfg.target.label());
        match res {
            Ok(rows) => {
                let (t, tt) = study_tables(&rows, &solvers)?;
                out.csv(&format!("{stem}.csv"), &t)?;
                out.csv(&format!("{stem}_timings.csv"), &tt)?;
                for row in &rows {
                    for run in row.runs.iter().filter(|run| !run.converged) {
                        failures.push(format!("{} level {} {}", cfg.target.label(), row.level, run.solver));
                    }
                }
            }
            Err(e) => failures.push(format!("{}: {e}", cfg.target.label())),
        }
    }
    out.finish()?;
    Ok(Outcome::from_failures(failures))
}

pub struct NestedArgs {
    pub target: Option<String>,
    pub levels: Option<usize>,
    pub adaptive: bool,
    pub theta: Option<f64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub nested_tolerance: Option<String>,
    pub inner: Option<String>,
}

pub fn nested(shared: &Shared, a: NestedArgs) -> Result<Outcome> {
    let r = Resolved::new(shared)?;
    let target = r.target(a.target, "discontinuous", r.d)?;
    let adaptive = r.file.switch(a.adaptive, "adaptive")?;
    let defaults = AdaptivityConfig::defaults(r.reg, !adaptive);
    let tolerance = match r.file.pick(a.nested_tolerance, "nested-tolerance", "initial".to_string())?.as_str() {
        "initial" => NestedTolerance::InitialResidual,
        "rhs" => NestedTolerance::RightHandSide,
        other => bail!("nested-tolerance must be 'initial' or 'rhs', got '{other}'"),
    };
    let inner = match r.file.pick_opt(a.inner, "inner")? {
        Some(s) => s.parse::<InnerSolve>()?,
        None => defaults.inner,
    };
    let cfg = AdaptivityConfig {
        theta: r.file.pick(a.theta, "theta", defaults.theta)?,
        alpha: r.file.pick(a.alpha, "alpha", defaults.alpha)?,
        beta: r.file.pick(a.beta, "beta", defaults.beta)?,
        max_levels: r.file.pick(a.levels, "levels", 5usize)?,
        tolerance,
        inner,
        ..defaults
    };
    let config = r.config_json(json!({
        "target": target.label(), "adaptive": adaptive, "theta": cfg.theta, "alpha": cfg.alpha,
        "beta": cfg.beta, "levels": cfg.max_levels, "inner": inner.to_string(),
        "nested_tolerance": format!("{tolerance:?}"),
    }))?;
    let mut out = OutputDir::create(&r.out, "nested", config)?;
    let rows = run_adaptive_nested(r.d, r.reg, &target, &cfg, !adaptive, &r.settings, |row| {
        info!("level {}: {} vertices, error {:e}, {} iterations", row.level, row.vertices, row.l2_error, row.iterations);
    })?;
    let kind = if adaptive { "adaptive" } else { "uniform" };
    let stem = format!("nested_d{}_{}_{}_{kind}", r.d, r.reg, target.label());
    let mut t = CsvTable::new(["Level", "#Vertices", "#Elements", "||y_rho_h-y_d||", "EOC", "SC-PCG", "rel_tol", "converged"]);
    let mut tt = CsvTable::new(["Level", "seconds"]);
    for row in &rows {
        t.push(vec![
            row.level.to_string(),
            row.vertices.to_string(),
            row.elements.to_string(),
            fmt_f64(row.l2_error),
            row.eoc.map(|e| format!("{e:.4}")).unwrap_or_else(|| "-".into()),
            row.iterations.to_string(),
            fmt_f64(row.rel_tol),
            row.converged.to_string(),
        ])?;
        tt.push(vec![row.level.to_string(), format!("{:.3}", row.seconds)])?;
    }
    out.csv(&format!("{stem}.csv"), &t)?;
    out.csv(&format!("{stem}_timings.csv"), &tt)?;
    out.finish()?;
    let failures = rows.iter().filter(|r| !r.converged).map(|r| format!("level {}", r.level)).collect();
    Ok(Outcome::from_failures(failures))
}

pub struct VerifyArgs {
    pub levels: Option<usize>,
    pub target: Option<String>,
    pub spectral: bool,
    pub inexact: bool,
    pub dense: bool,
    pub lanczos_iterations: Option<usize>,
    pub inner: Option<String>,
}

pub fn verify(shared: &Shared, a: VerifyArgs) -> Result<Outcome> {
    let r = Resolved::new(shared)?;
    let levels = r.file.pick(a.levels, "levels", 4usize)?;
    let target = r.target(a.target, "smooth", r.d)?;
    let mut spectral = r.file.switch(a.spectral, "spectral")?;
    let inexact = r.file.switch(a.inexact, "inexact")?;
    let dense = r.file.switch(a.dense, "dense")?;
    if !(spectral || inexact || dense) {
        spectral = true;
    }
    let lanczos = r.file.pick(a.lanczos_iterations, "lanczos-iterations", 100usize)?;
    let inner = match r.file.pick_opt(a.inner, "inner")? {
        Some(s) => s.parse::<InnerSolve>()?,
        None => match r.reg {
            Regularization::L2 => InnerSolve::Lumped,
            Regularization::Energy => InnerSolve::Amg(3),
        },
    };
    let config = r.config_json(json!({
        "levels": levels, "target": target.label(), "spectral": spectral, "inexact": inexact,
        "dense": dense, "lanczos_iterations": lanczos, "inner": inner.to_string(),
    }))?;
    let mut out = OutputDir::create(&r.out, "verify", config)?;
    out.manifest_mut().seeds.push(SPECTRAL_SEED);
    let mut failures = Vec::new();
    let problem_at = |level: usize, target: &TargetField| -> Result<OcpProblem> {
        let mesh = Arc::new(Mesh::uniform_level(r.d, level)?);
        let rho = axis_spacing(level).powf(r.reg.rho_exponent());
        Ok(OcpProblem::new(mesh, r.reg, RhoStrategy::Constant(rho), target.clone())?.with_amg_config(r.settings.amg))
    };
    if spectral {
        let mut t = CsvTable::new([
            "Level", "#Vertices", "lambda_min", "lambda_max", "lower_bound", "bound_holds", "coupling_constant",
            "implied_inverse_constant", "lanczos_iterations", "lanczos_converged",
        ]);
        for level in 1..=levels {
            let p = problem_at(level, &target)?;
            let rep = verify_spectral_equivalence(&p, InnerSolve::Exact, &r.settings, lanczos, SPECTRAL_SEED)?;
            let holds = rep.lower_bound_holds(1e-8);
            if !holds {
                failures.push(format!("spectral lower bound violated at level {level}"));
            }
            t.push(vec![
                level.to_string(),
                p.mesh().num_vertices().to_string(),
                fmt_f64(rep.lambda_min),
                fmt_f64(rep.lambda_max),
                fmt_f64(rep.lower_bound),
                holds.to_string(),
                fmt_f64(rep.coupling_constant),
                fmt_f64(rep.implied_inverse_constant),
                rep.iterations.to_string(),
                rep.converged.to_string(),
            ])?;
        }
        out.csv(&format!("verify_spectral_d{}_{}.csv", r.d, r.reg), &t)?;
    }
    if inexact {
        let mut t = CsvTable::new([
            "Level", "#Vertices", "||y-y_d||", "||y_inexact-y||", "ratio", "exact iterations", "inexact iterations",
        ]);
        for level in 1..=levels {
            let p = problem_at(level, &target)?;
            let exact = p.solve_sc_pcg(InnerSolve::Exact, &r.settings, None)?;
            let approx = p.solve_sc_pcg(inner, &r.settings, None)?;
            let err = l2_error(&exact.y, &target).total;
            let m = assemble_mass(p.state_space(), None, false)?;
            let diff: Vec<f64> = approx.y.values().iter().zip(exact.y.values()).map(|(a, b)| a - b).collect();
            let dist = diff.iter().zip(m.mul_vec(&diff)).map(|(a, b)| a * b).sum::<f64>().max(0.0).sqrt();
            if dist > err {
                failures.push(format!("inexact state farther than the discretization error at level {level}"));
            }
            t.push(vec![
                level.to_string(),
                p.mesh().num_vertices().to_string(),
                fmt_f64(err),
                fmt_f64(dist),
                fmt_f64(dist / err),
                exact.stats.iterations.to_string(),
                approx.stats.iterations.to_string(),
            ])?;
        }
        out.csv(&format!("verify_inexact_d{}_{}_{}_{inner}.csv", r.d, r.reg, target.label()), &t)?;
    }
    if dense {
        let mut t = CsvTable::new(["Level", "target", "solver", "iterations", "relative_state_difference"]);
        let solvers = [SolverKind::SchurPcg(InnerSolve::Exact), SolverKind::BramblePasciak, SolverKind::Gmres];
        for level in 1..=levels {
            for id in [TargetId::Smooth, TargetId::Continuous, TargetId::Discontinuous] {
                let tf = TargetField::new(id, r.d)?;
                let p = problem_at(level, &tf)?;
                let reference = match p.solve_dense() {
                    Ok(res) => res,
                    Err(e) => {
                        info!("skipping level {level}: {e}");
                        continue;
                    }
                };
                let norm = reference.y.values().iter().map(|v| v * v).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
                for s in solvers {
                    let res = p.solve(s, &r.settings)?;
                    let diff = res.y.values().iter().zip(reference.y.values()).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                    if diff / norm > 1e-7 || !res.stats.converged {
                        failures.push(format!("{s} disagrees with the dense solve at level {level} ({id})"));
                    }
                    t.push(vec![level.to_string(), id.name().into(), s.to_string(), res.stats.iterations.to_string(), fmt_f64(diff / norm)])?;
                }
            }
        }
        out.csv(&format!("verify_dense_d{}_{}.csv", r.d, r.reg), &t)?;
    }
    out.finish()?;
    Ok(Outcome::from_failures(failures))
}

const SPECTRAL_SEED: u64 = 7;

pub fn sweep(shared: &Shared, target: Option<String>, rho: Option<String>, n_per_axis: Option<usize>) -> Result<Outcome> {
    let r = Resolved::new(shared)?;
    let target = r.target(target, "appendix2", 1)?;
    let range = r.file.pick(rho, "rho", "2^-14..2^-23".to_string())?;
    let cfg = SweepConfig {
        n_per_axis: r.file.pick(n_per_axis, "n-per-axis", 129usize)?,
        rhos: parse_rho_range(&range)?,
        ..SweepConfig::default()
    };
    if cfg.n_per_axis < 3 {
        return Err(anyhow!("n-per-axis must be at least 3"));
    }
    let config = json!({
        "d": 1, "regularization": "l2", "target": target.label(), "rho": range, "n_per_axis": cfg.n_per_axis,
        "saturation_drop": cfg.saturation_drop, "refinement_steps": cfg.refinement_steps,
    });
    let mut out = OutputDir::create(&r.out, "sweep", config)?;
    out.manifest_mut().mesh_checksums.push(Mesh::build_initial(1, cfg.n_per_axis)?.checksum());
    let sum = run_rho_sweep_1d(&target, &cfg, |row| info!("rho {:e}: L2 error {:e}", row.rho, row.l2_error))?;
    let stem = format!("sweep_{}_{}", target.label(), range.replace("..", "_").replace('^', ""));
    let mut t = CsvTable::new(["rho", "||y_d-y_rho||_L2", "|y_d-y_rho|_H1", "|p_rho|_H1", "residual"]);
    for row in &sum.rows {
        t.push(vec![fmt_f64(row.rho), fmt_f64(row.l2_error), fmt_f64(row.h1_error), fmt_f64(row.adjoint_h1), fmt_f64(row.residual)])?;
    }
    out.csv(&format!("{stem}.csv"), &t)?;
    // fewer than two trusted rows leave the fit undefined
    let slope = |v: f64| if v.is_finite() { format!("{v:.4}") } else { "-".into() };
    let mut s = CsvTable::new([
        "trusted_first_rho", "trusted_last_rho", "slope_L2", "slope_H1", "slope_p_H1", "saturation_rho", "knee_rho", "h4",
    ]);
    s.push(vec![
        fmt_f64(sum.rows[sum.trusted.0].rho),
        fmt_f64(sum.rows[sum.trusted.1].rho),
        slope(sum.slope_l2),
        slope(sum.slope_h1),
        slope(sum.slope_adjoint),
        opt(sum.saturation_rho),
        opt(sum.knee_rho),
        fmt_f64(sum.h4),
    ])?;
    out.csv(&format!("{stem}_summary.csv"), &s)?;
    let saturation = match (sum.saturation_rho, sum.knee_rho) {
        (Some(r), Some(k)) => format!("saturation at rho = {r:e}, knee at rho = {k:e}"),
        (Some(r), None) => format!("saturation at rho = {r:e}"),
        _ => "saturation not reached".into(),
    };
    println!("slopes: L2 {:.3}, H1 {:.3}, |p|_H1 {:.3}; {saturation}", sum.slope_l2, sum.slope_h1, sum.slope_adjoint);
    out.finish()?;
    Ok(Outcome::Success)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cells_keep_order() {
        let items: Vec<usize> = (0..17).collect();
        for jobs in [1, 3, 40] {
            assert_eq!(run_cells(&items, jobs, |&i| i * i), items.iter().map(|i| i * i).collect::<Vec<_>>());
        }
    }
}
