//! Randomized invariants shared by the property tests and the acceptance harness.

use std::sync::Arc;

use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};
use stocp_core::assembly::{assemble_mass, assemble_spacetime_stiffness, lump};
use stocp_core::experiments::{l2_error, maximum_marking};
use stocp_core::ocp::OcpSettings;
use stocp_core::{
    AmgConfig, AmgHierarchy, DofSpace, InnerSolve, Mesh, NodalField, OcpProblem, Regularization, RhoStrategy,
    SolverKind, SpaceKind, SparseMatrix, TargetField, TargetId,
};

pub const CASES: u32 = 100;

type Check = std::result::Result<(), TestCaseError>;

/// A coarse mesh refined adaptively at pseudo-random elements.
fn random_mesh(d: usize, n: usize, rounds: &[Vec<u16>]) -> Mesh {
    let mut mesh = Mesh::build_initial(d, n).unwrap();
    for marks in rounds {
        mesh = mesh.refine_adaptive(&pick(marks, mesh.num_elements())).unwrap();
    }
    mesh
}

fn pick(marks: &[u16], ne: usize) -> Vec<usize> {
    let mut marked: Vec<usize> = marks.iter().map(|&m| m as usize % ne).collect();
    marked.sort_unstable();
    marked.dedup();
    marked
}

pub fn mesh_strategy() -> impl Strategy<Value = Mesh> {
    (1usize..=2, 2usize..=3, prop::collection::vec(prop::collection::vec(any::<u16>(), 1..6), 0..3))
        .prop_map(|(d, n, rounds)| random_mesh(d, n, &rounds))
}

fn quad(m: &SparseMatrix, v: &[f64]) -> f64 {
    v.iter().zip(m.mul_vec(v)).map(|(a, b)| a * b).sum()
}

pub fn check_mesh(mesh: &Mesh) -> Check {
    prop_assert!(mesh.check_conformity().is_ok());
    prop_assert!((mesh.total_volume() - 1.0).abs() < 1e-12);
    prop_assert!(mesh.volumes().iter().all(|&v| v > 0.0));
    Ok(())
}

pub fn lumping_input() -> impl Strategy<Value = (Mesh, Vec<f64>)> {
    (mesh_strategy(), prop::collection::vec(-1.0f64..1.0, 64))
}

/// `lump(M) / (d + 3) <= M <= lump(M)` in the quadratic-form sense.
pub fn check_lumping((mesh, seed): &(Mesh, Vec<f64>)) -> Check {
    let d = mesh.dim();
    let space = DofSpace::new(Arc::new(mesh.clone()), SpaceKind::StateY).unwrap();
    if space.is_empty() {
        return Ok(());
    }
    let m = assemble_mass(&space, None, false).unwrap();
    let dl = lump(&m).unwrap();
    let v: Vec<f64> = (0..space.len()).map(|i| seed[i % seed.len()] + 1e-3 * i as f64).collect();
    let vm = quad(&m, &v);
    let vd: f64 = dl.iter().zip(&v).map(|(a, b)| a * b * b).sum();
    let lower = 1.0 / (d as f64 + 3.0);
    prop_assert!(vm <= vd * (1.0 + 1e-12), "{} > {}", vm, vd);
    prop_assert!(vm >= lower * vd * (1.0 - 1e-12), "{} < {} * {}", vm, lower, vd);
    Ok(())
}

pub fn marking_input() -> impl Strategy<Value = (Vec<f64>, f64)> {
    (prop::collection::vec(0.0f64..10.0, 1..200), 0.0f64..=1.0)
}

/// Exactly the elements with indicator at least `theta` times the maximum.
pub fn check_marking((ind, theta): &(Vec<f64>, f64)) -> Check {
    let marked = maximum_marking(ind, *theta);
    let max = ind.iter().cloned().fold(0.0, f64::max);
    let expect: Vec<usize> =
        if max > 0.0 { (0..ind.len()).filter(|&e| ind[e] >= theta * max).collect() } else { Vec::new() };
    prop_assert_eq!(&marked, &expect);
    if max > 0.0 {
        prop_assert!(marked.iter().any(|&e| ind[e] == max));
    }
    Ok(())
}

pub fn prolongation_input() -> impl Strategy<Value = (Mesh, Vec<u16>, f64, f64, u64)> {
    (mesh_strategy(), prop::collection::vec(any::<u16>(), 1..8), -2.0f64..2.0, -2.0f64..2.0, 0u64..1000)
}

/// Prolongation is linear and leaves the function, hence its L2 norm, unchanged.
pub fn check_prolongation((mesh, marks, a, b, seed): &(Mesh, Vec<u16>, f64, f64, u64)) -> Check {
    let coarse = Arc::new(mesh.clone());
    let fine = Arc::new(coarse.refine_adaptive(&pick(marks, coarse.num_elements())).unwrap());
    let yc = DofSpace::new(coarse, SpaceKind::StateY).unwrap();
    let yf = DofSpace::new(fine, SpaceKind::StateY).unwrap();
    if yc.is_empty() {
        return Ok(());
    }
    let n = yc.len();
    let f: Vec<f64> = (0..n).map(|i| (((i as u64 + seed) * 2654435761) % 1000) as f64 / 500.0 - 1.0).collect();
    let g: Vec<f64> = (0..n).map(|i| (((i as u64 * 7 + seed) * 40503) % 997) as f64 / 498.0 - 1.0).collect();
    let combo: Vec<f64> = f.iter().zip(&g).map(|(x, y)| a * x + b * y).collect();
    let prolong = |v: Vec<f64>| NodalField::new(yc.clone(), v).unwrap().prolongate(&yf).unwrap();
    let (pf, pg, pc) = (prolong(f.clone()), prolong(g), prolong(combo));
    for ((c, x), y) in pc.values().iter().zip(pf.values()).zip(pg.values()) {
        prop_assert!((c - (a * x + b * y)).abs() <= 1e-12 * (1.0 + c.abs()));
    }
    let mc = assemble_mass(&yc, None, false).unwrap();
    let mf = assemble_mass(&yf, None, false).unwrap();
    let (nc, nf) = (quad(&mc, &f), quad(&mf, pf.values()));
    prop_assert!((nc - nf).abs() <= 1e-12 * nc.max(1e-300), "{} vs {}", nc, nf);
    Ok(())
}

pub fn amg_input() -> impl Strategy<Value = (Mesh, f64, usize, Vec<f64>)> {
    (mesh_strategy(), 0.1f64..0.5, 2usize..20, prop::collection::vec(-1.0f64..1.0, 32))
}

/// Symmetric positive definite Galerkin levels and an energy-norm contraction.
pub fn check_amg((mesh, strength, max_coarse, seed): &(Mesh, f64, usize, Vec<f64>)) -> Check {
    let space = DofSpace::new(Arc::new(mesh.clone()), SpaceKind::AdjointP).unwrap();
    if space.len() < 3 {
        return Ok(());
    }
    let k = assemble_spacetime_stiffness(&space, None).unwrap();
    let cfg = AmgConfig { strength_threshold: *strength, max_coarse_size: *max_coarse, ..AmgConfig::default() };
    let h = AmgHierarchy::setup(&k, cfg).unwrap();
    for l in 0..h.num_levels() {
        let a = h.matrix(l);
        prop_assert!(a.symmetry_defect() <= 1e-12 * a.frobenius_norm());
        let v: Vec<f64> = (0..a.nrows()).map(|i| seed[i % seed.len()] + 0.01).collect();
        prop_assert!(quad(a, &v) > 0.0);
        if let Some(p) = h.interpolation(l) {
            let galerkin = p.transpose().matmul(&a.matmul(p).unwrap()).unwrap();
            let diff = galerkin.sub(h.matrix(l + 1)).unwrap().frobenius_norm();
            prop_assert!(diff <= 1e-10 * galerkin.frobenius_norm(), "Galerkin defect {}", diff);
        }
    }
    let e: Vec<f64> = (0..k.nrows()).map(|i| seed[(3 * i) % seed.len()] + 0.1).collect();
    let ee = h.error_propagation(&e);
    prop_assert!(quad(&k, &ee) < quad(&k, &e));
    Ok(())
}

pub fn bound_input() -> impl Strategy<Value = (usize, usize, usize, bool, f64, bool)> {
    (1usize..=2, 1usize..=2, 0usize..3, any::<bool>(), -12.0f64..0.0, any::<bool>())
}

/// `||y_rho_h - y_d|| <= ||y_d||`: the zero control is admissible.
pub fn check_bound(&(d, level, target, energy, log_rho, local): &(usize, usize, usize, bool, f64, bool)) -> Check {
    let id = [TargetId::Smooth, TargetId::Continuous, TargetId::Discontinuous][target];
    let tf = TargetField::new(id, d).unwrap();
    let reg = if energy { Regularization::Energy } else { Regularization::L2 };
    let rho = if local { RhoStrategy::Local } else { RhoStrategy::Constant(10f64.powf(log_rho)) };
    let mesh = Arc::new(Mesh::uniform_level(d, level).unwrap());
    let p = OcpProblem::new(mesh, reg, rho, tf.clone()).unwrap();
    let res = p.solve(SolverKind::SchurPcg(InnerSolve::Exact), &OcpSettings::default()).unwrap();
    prop_assert!(res.stats.converged);
    let err = l2_error(&res.y, &tf).total;
    let norm = l2_error(&NodalField::zeros(p.state_space().clone()), &tf).total;
    prop_assert!(err <= norm * (1.0 + 1e-9), "{} > {}", err, norm);
    Ok(())
}

fn run<S: Strategy>(strategy: S, check: impl Fn(&S::Value) -> Check) -> Result<(), String> {
    let mut runner = TestRunner::new(Config { cases: CASES, failure_persistence: None, ..Config::default() });
    runner.run(&strategy, |v| check(&v)).map_err(|e| e.to_string())
}

/// Every suite with its outcome.
pub fn run_all() -> Vec<(&'static str, Result<(), String>)> {
    vec![
        ("mesh conformity and volume", run(mesh_strategy(), check_mesh)),
        ("mass-lumping eigen-bounds", run(lumping_input(), check_lumping)),
        ("maximum-marking definition", run(marking_input(), check_marking)),
        ("prolongation linearity", run(prolongation_input(), check_prolongation)),
        ("AMG SPD/Galerkin/contraction", run(amg_input(), check_amg)),
        ("a-priori bound", run(bound_input(), check_bound)),
    ]
}
