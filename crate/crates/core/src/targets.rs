//! Desired states `y_d` used by the experiments.
//!
//! Points are passed as `[x_1, ..., x_d, t]`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::QuadraturePolicy;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TargetId {
    /// `t^2 prod sin(pi x_i)`.
    Smooth,
    /// Product of hat functions supported on `[0.25, 0.75]`.
    Continuous,
    /// Indicator of `(0.25, 0.75)^(d+1)`.
    Discontinuous,
    /// Compactly supported piecewise polynomial times `sin(pi x)` (d = 1).
    Appendix1,
    /// `sin(pi x) sin(pi t)` (d = 1).
    Appendix2,
    /// `t^2 sin(pi x)` (d = 1).
    Appendix3,
}

impl TargetId {
    pub const ALL: [TargetId; 6] = [
        TargetId::Smooth,
        TargetId::Continuous,
        TargetId::Discontinuous,
        TargetId::Appendix1,
        TargetId::Appendix2,
        TargetId::Appendix3,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TargetId::Smooth => "smooth",
            TargetId::Continuous => "continuous",
            TargetId::Discontinuous => "discontinuous",
            TargetId::Appendix1 => "appendix1",
            TargetId::Appendix2 => "appendix2",
            TargetId::Appendix3 => "appendix3",
        }
    }

    pub fn is_appendix(self) -> bool {
        matches!(self, TargetId::Appendix1 | TargetId::Appendix2 | TargetId::Appendix3)
    }
}

impl fmt::Display for TargetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TargetId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "smooth" | "1" => Ok(TargetId::Smooth),
            "continuous" | "kinked" | "2" => Ok(TargetId::Continuous),
            "discontinuous" | "3" => Ok(TargetId::Discontinuous),
            "appendix1" => Ok(TargetId::Appendix1),
            "appendix2" => Ok(TargetId::Appendix2),
            "appendix3" => Ok(TargetId::Appendix3),
            _ => Err(Error::invalid(format!("unknown target '{s}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SmoothnessClass {
    Smooth,
    Kinked,
    Discontinuous,
}

impl SmoothnessClass {
    pub fn quadrature(self) -> QuadraturePolicy {
        match self {
            SmoothnessClass::Smooth => QuadraturePolicy::Smooth,
            SmoothnessClass::Kinked => QuadraturePolicy::Kinked,
            SmoothnessClass::Discontinuous => QuadraturePolicy::Discontinuous,
        }
    }
}

type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type GradFn = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;

#[derive(Clone)]
pub struct TargetField {
    label: String,
    id: Option<TargetId>,
    class: SmoothnessClass,
    value: ScalarFn,
    grad: Option<GradFn>,
}

impl fmt::Debug for TargetField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TargetField").field("label", &self.label).field("class", &self.class).finish()
    }
}

/// Hat on `[0.25, 0.75]` with peak 1 at 0.5.
pub fn hat(s: f64) -> f64 {
    (1.0 - 4.0 * (s - 0.5).abs()).max(0.0)
}

fn hat_slope(s: f64) -> f64 {
    if s <= 0.25 || s >= 0.75 {
        0.0
    } else if s < 0.5 {
        4.0
    } else {
        -4.0
    }
}

impl TargetField {
    pub fn new(id: TargetId, d: usize) -> Result<Self> {
        if id.is_appendix() && d != 1 {
            return Err(Error::Unsupported(format!("target {id} is defined for d = 1 only")));
        }
        let (class, value, grad): (SmoothnessClass, ScalarFn, Option<GradFn>) = match id {
            TargetId::Smooth => (
                SmoothnessClass::Smooth,
                Arc::new(move |x: &[f64]| {
                    let t = x[d];
                    t * t * x[..d].iter().map(|&s| (PI * s).sin()).product::<f64>()
                }),
                Some(Arc::new(move |x: &[f64], g: &mut [f64]| {
                    let t = x[d];
                    let s: Vec<f64> = x[..d].iter().map(|&s| (PI * s).sin()).collect();
                    for i in 0..d {
                        let others: f64 = (0..d).filter(|&j| j != i).map(|j| s[j]).product();
                        g[i] = t * t * PI * (PI * x[i]).cos() * others;
                    }
                    g[d] = 2.0 * t * s.iter().product::<f64>();
                })),
            ),
            TargetId::Continuous => (
                SmoothnessClass::Kinked,
                Arc::new(move |x: &[f64]| x[..=d].iter().map(|&s| hat(s)).product()),
                Some(Arc::new(move |x: &[f64], g: &mut [f64]| {
                    for i in 0..=d {
                        let others: f64 = (0..=d).filter(|&j| j != i).map(|j| hat(x[j])).product();
                        g[i] = hat_slope(x[i]) * others;
                    }
                })),
            ),
            TargetId::Discontinuous => (
                SmoothnessClass::Discontinuous,
                Arc::new(move |x: &[f64]| {
                    if x[..=d].iter().all(|&s| s > 0.25 && s < 0.75) {
                        1.0
                    } else {
                        0.0
                    }
                }),
                None,
            ),
            TargetId::Appendix1 => (
                SmoothnessClass::Smooth,
                Arc::new(|x: &[f64]| {
                    let (s, t) = (x[0], x[1]);
                    let a = 6.0 * t - 3.0 * s - 2.0;
                    let b = 3.0 * s - 6.0 * t;
                    if s <= 2.0 * t && a <= 0.0 {
                        0.5 * a.powi(3) * b.powi(3) * (PI * s).sin()
                    } else {
                        0.0
                    }
                }),
                Some(Arc::new(|x: &[f64], g: &mut [f64]| {
                    let (s, t) = (x[0], x[1]);
                    let a = 6.0 * t - 3.0 * s - 2.0;
                    let b = 3.0 * s - 6.0 * t;
                    if s <= 2.0 * t && a <= 0.0 {
                        let sn = (PI * s).sin();
                        let poly = 0.5 * a.powi(3) * b.powi(3);
                        // da/ds = -3, db/ds = 3, da/dt = 6, db/dt = -6
                        let dpa = 1.5 * a * a * b.powi(3);
                        let dpb = 1.5 * a.powi(3) * b * b;
                        g[0] = (-3.0 * dpa + 3.0 * dpb) * sn + poly * PI * (PI * s).cos();
                        g[1] = (6.0 * dpa - 6.0 * dpb) * sn;
                    } else {
                        g[0] = 0.0;
                        g[1] = 0.0;
                    }
                })),
            ),
            TargetId::Appendix2 => (
                SmoothnessClass::Smooth,
                Arc::new(|x: &[f64]| (PI * x[0]).sin() * (PI * x[1]).sin()),
                Some(Arc::new(|x: &[f64], g: &mut [f64]| {
                    g[0] = PI * (PI * x[0]).cos() * (PI * x[1]).sin();
                    g[1] = PI * (PI * x[0]).sin() * (PI * x[1]).cos();
                })),
            ),
            TargetId::Appendix3 => (
                SmoothnessClass::Smooth,
                Arc::new(|x: &[f64]| x[1] * x[1] * (PI * x[0]).sin()),
                Some(Arc::new(|x: &[f64], g: &mut [f64]| {
                    g[0] = x[1] * x[1] * PI * (PI * x[0]).cos();
                    g[1] = 2.0 * x[1] * (PI * x[0]).sin();
                })),
            ),
        };
        Ok(TargetField { label: id.name().to_string(), id: Some(id), class, value, grad })
    }

    /// Custom target without an analytic gradient.
    pub fn custom(label: &str, class: SmoothnessClass, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        TargetField { label: label.to_string(), id: None, class, value: Arc::new(f), grad: None }
    }

    pub fn constant(c: f64) -> Self {
        Self::custom(&format!("constant({c})"), SmoothnessClass::Smooth, move |_| c)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn id(&self) -> Option<TargetId> {
        self.id
    }

    pub fn class(&self) -> SmoothnessClass {
        self.class
    }

    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.value)(x)
    }

    pub fn has_gradient(&self) -> bool {
        self.grad.is_some()
    }

    /// Gradient `(grad_x, d/dt)`; `None` if not available.
    pub fn gradient(&self, x: &[f64], g: &mut [f64]) -> Option<()> {
        self.grad.as_ref().map(|f| f(x, g))
    }

    /// Exact `||y_d||_{L^2(Q)}` where a closed form is known.
    pub fn exact_l2_norm(&self, d: usize) -> Option<f64> {
        let df = d as f64;
        match self.id? {
            // int t^4 = 1/5, int sin^2 = 1/2
            TargetId::Smooth => Some((0.2 * 0.5f64.powf(df)).sqrt()),
            // int hat^2 = 1/6
            TargetId::Continuous => Some((1.0f64 / 6.0).powf((df + 1.0) / 2.0)),
            TargetId::Discontinuous => Some(0.5f64.powf((df + 1.0) / 2.0)),
            TargetId::Appendix2 => Some(0.5),
            TargetId::Appendix3 => Some((0.2f64 * 0.5).sqrt()),
            TargetId::Appendix1 => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smooth_vanishes_on_essential_boundary() {
        let y = TargetField::new(TargetId::Smooth, 2).unwrap();
        for s in [0.0, 0.3, 0.7, 1.0] {
            for r in [0.0, 0.4, 1.0] {
                assert!(y.eval(&[0.0, s, r]).abs() < 1e-15);
                assert!(y.eval(&[1.0, s, r]).abs() < 1e-15);
                assert!(y.eval(&[s, 1.0, r]).abs() < 1e-15);
                assert!(y.eval(&[s, r, 0.0]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn discontinuous_is_open_indicator() {
        let y = TargetField::new(TargetId::Discontinuous, 1).unwrap();
        assert_eq!(y.eval(&[0.5, 0.5]), 1.0);
        assert_eq!(y.eval(&[0.25, 0.5]), 0.0);
        assert_eq!(y.eval(&[0.5, 0.8]), 0.0);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let pts = [[0.31, 0.47], [0.6, 0.55], [0.2, 0.9], [0.45, 0.38]];
        for id in [TargetId::Smooth, TargetId::Appendix1, TargetId::Appendix2, TargetId::Appendix3] {
            let y = TargetField::new(id, 1).unwrap();
            for p in pts {
                let mut g = [0.0; 2];
                y.gradient(&p, &mut g).unwrap();
                for k in 0..2 {
                    let eps = 1e-6;
                    let (mut a, mut b) = (p, p);
                    a[k] += eps;
                    b[k] -= eps;
                    let fd = (y.eval(&a) - y.eval(&b)) / (2.0 * eps);
                    assert!((fd - g[k]).abs() < 1e-6 * (1.0 + g[k].abs()), "{id} {p:?} {k}: {fd} vs {}", g[k]);
                }
            }
        }
    }

    #[test]
    fn appendix_targets_require_d1() {
        assert!(TargetField::new(TargetId::Appendix2, 2).is_err());
        assert_eq!("kinked".parse::<TargetId>().unwrap(), TargetId::Continuous);
    }
}
