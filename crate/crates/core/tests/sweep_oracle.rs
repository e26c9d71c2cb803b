//! The fixed-mesh regularization sweep against the closed-form continuous solution.

mod support {
    pub mod closed_form;
}

use std::f64::consts::PI;
use stocp_core::experiments::{run_rho_sweep_1d, SweepConfig};
use stocp_core::{TargetField, TargetId};
use support::closed_form::{ClosedForm, Profile};

#[test]
fn closed_form_satisfies_boundary_conditions() {
    for profile in [Profile::SinT, Profile::TSquared] {
        for k in [6, 20, 40] {
            let cf = ClosedForm::new(2f64.powi(-k), profile);
            assert!(cf.y(0.0, 0).abs() < 1e-9 && cf.y(0.0, 1).abs() < 1e-7, "{profile:?} 2^-{k}");
            let scale = 1.0 + cf.y(1.0, 2).abs();
            assert!((cf.y(1.0, 2) + PI * PI * cf.y(1.0, 0)).abs() < 1e-7 * scale, "{profile:?} 2^-{k}");
        }
    }
}

#[test]
fn closed_form_residual_of_fourth_order_equation() {
    // rho L L y + y = g checked by central differences of L y at interior points
    let rho = 2f64.powi(-8);
    let cf = ClosedForm::new(rho, Profile::TSquared);
    let ly = |t: f64| cf.y(t, 2) + PI * PI * cf.y(t, 0);
    let h = 1e-3;
    for t in [0.2, 0.5, 0.8] {
        let llyy = (ly(t + h) - 2.0 * ly(t) + ly(t - h)) / (h * h) + PI * PI * ly(t);
        let res = rho * llyy + cf.y(t, 0) - t * t;
        assert!(res.abs() < 1e-5, "residual {res} at t = {t}");
    }
}

#[test]
fn fine_mesh_sweep_matches_continuous_solution() {
    let cases = [(TargetId::Appendix2, Profile::SinT), (TargetId::Appendix3, Profile::TSquared)];
    for (id, profile) in cases {
        let target = TargetField::new(id, 1).unwrap();
        let rhos = vec![2f64.powi(-8), 2f64.powi(-11)];
        let cfg = SweepConfig { n_per_axis: 65, rhos: rhos.clone(), ..Default::default() };
        let sum = run_rho_sweep_1d(&target, &cfg, |_| {}).unwrap();
        for (row, &rho) in sum.rows.iter().zip(&rhos) {
            let (l2, h1, ph) = ClosedForm::new(rho, profile).norms();
            let rel = |a: f64, b: f64| (a - b).abs() / b;
            assert!(rel(row.l2_error, l2) < 0.01, "{id} L2 {} vs {l2}", row.l2_error);
            assert!(rel(row.h1_error, h1) < 0.02, "{id} H1 {} vs {h1}", row.h1_error);
            assert!(rel(row.adjoint_h1, ph) < 0.02, "{id} p {} vs {ph}", row.adjoint_h1);
        }
    }
}
