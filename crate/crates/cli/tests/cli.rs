//! End-to-end runs of the `stocp` binary.

use std::path::Path;
use std::process::Command;

use stocp_core::io::Manifest;

fn stocp(dir: &Path, args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_stocp")).args(args).arg("--out").arg(dir).output().expect("binary runs")
}

#[test]
fn study_csv_is_deterministic_and_manifested() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["study", "--d", "1", "--levels", "2", "--targets", "smooth,discontinuous", "--lumped", "--jobs", "2"];
    assert!(stocp(a.path(), &args).status.success());
    assert!(stocp(b.path(), &args).status.success());
    for name in ["study_d1_l2_smooth.csv", "study_d1_l2_discontinuous.csv"] {
        let x = std::fs::read(a.path().join(name)).unwrap();
        assert_eq!(x, std::fs::read(b.path().join(name)).unwrap(), "{name} differs between runs");
        let text = String::from_utf8(x).unwrap();
        let header = text.lines().next().unwrap();
        assert!(header.starts_with("Level,#Vertices,h,rho,||y_rho_h-y_d||,EOC,sc-exact iterations"));
        assert_eq!(text.lines().count(), 3);
    }
    let manifest = Manifest::read(&a.path().join("study.manifest.json")).unwrap();
    assert_eq!(manifest.files.len(), 4);
    manifest.verify(a.path()).unwrap();
    let other = Manifest::read(&b.path().join("study.manifest.json")).unwrap();
    assert_eq!(manifest.config_hash, other.config_hash);
}

#[test]
fn config_file_is_merged_under_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# small solve\nd = 1\nlevel = 2\nsolver = bp\n").unwrap();
    let out = stocp(dir.path(), &["solve", "--config", cfg.to_str().unwrap(), "--solver", "gmres"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("solve_d1_l2_smooth_l2_gmres.csv").exists());
    std::fs::write(&cfg, "levle = 2\n").unwrap();
    let out = stocp(dir.path(), &["solve", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn non_converged_solve_exits_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = stocp(dir.path(), &["solve", "--d", "1", "--level", "2", "--max-iter", "1"]);
    assert_eq!(out.status.code(), Some(2));
    // partial outputs are still written
    assert!(dir.path().join("solve.manifest.json").exists());
}

#[test]
fn mesh_and_vtk_outputs() {
    let dir = tempfile::tempdir().unwrap();
    assert!(stocp(dir.path(), &["mesh", "--d", "2", "--level", "1", "--vtk"]).status.success());
    let csv = std::fs::read_to_string(dir.path().join("mesh_d2_l1.csv")).unwrap();
    let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(&row[..4], &["2", "1", "125", "384"]);
    let vtk = std::fs::read_to_string(dir.path().join("mesh_d2_l1.vtk")).unwrap();
    assert!(vtk.starts_with("# vtk DataFile Version"));
    assert!(vtk.contains("CELLS 384 1920"));
}

#[test]
fn verify_dense_reports_agreement() {
    let dir = tempfile::tempdir().unwrap();
    let out = stocp(dir.path(), &["verify", "--d", "1", "--levels", "2", "--dense"]);
    assert!(out.status.success());
    let csv = std::fs::read_to_string(dir.path().join("verify_dense_d1_l2.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * 3 * 3);
}
