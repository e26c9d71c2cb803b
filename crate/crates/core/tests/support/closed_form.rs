//! Closed-form solution of the L2-regularized problem for targets of the form
//! `g(t) sin(pi x)` with `d = 1`.
//!
//! Every field is a multiple of `sin(pi x)`, so the optimality system reduces to
//! `rho L L y + y = g` on `(0, 1)` with `L = d^2/dt^2 + pi^2`, `y(0) = y'(0) = 0`
//! and the natural conditions `L y (1) = (L y)'(1) = 0`. The homogeneous part
//! uses the roots of `rho (l^2 + pi^2)^2 + 1 = 0`, each anchored at the end
//! where it decays so the 4x4 system stays well scaled for tiny `rho`.

use num_complex::Complex64 as C;
use std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Profile {
    /// `g = sin(pi t)`.
    SinT,
    /// `g = t^2`.
    TSquared,
}

pub struct ClosedForm {
    rho: f64,
    profile: Profile,
    lam: [C; 4],
    anchor: [f64; 4],
    coef: [C; 4],
    a: f64,
    b: f64,
}

impl ClosedForm {
    pub fn new(rho: f64, profile: Profile) -> Self {
        let mut lam = [C::new(0.0, 0.0); 4];
        let mut k = 0;
        for s in [1.0, -1.0] {
            let r = C::new(-PI * PI, s / rho.sqrt()).sqrt();
            lam[k] = r;
            lam[k + 1] = -r;
            k += 2;
        }
        let anchor = lam.map(|l| if l.re > 0.0 { 1.0 } else { 0.0 });
        let (a, b) = match profile {
            Profile::SinT => (0.0, 0.0),
            Profile::TSquared => {
                let a = 1.0 / (rho * PI.powi(4) + 1.0);
                (a, -4.0 * a * PI * PI * rho / (rho * PI.powi(4) + 1.0))
            }
        };
        let mut cf = ClosedForm { rho, profile, lam, anchor, coef: [C::new(0.0, 0.0); 4], a, b };
        let mut m = [[C::new(0.0, 0.0); 5]; 4];
        for j in 0..4 {
            m[0][j] = cf.basis(j, 0.0, 0);
            m[1][j] = cf.basis(j, 0.0, 1);
            m[2][j] = cf.basis(j, 1.0, 2) + PI * PI * cf.basis(j, 1.0, 0);
            m[3][j] = cf.basis(j, 1.0, 3) + PI * PI * cf.basis(j, 1.0, 1);
        }
        m[0][4] = C::from(-cf.particular(0.0, 0));
        m[1][4] = C::from(-cf.particular(0.0, 1));
        m[2][4] = C::from(-(cf.particular(1.0, 2) + PI * PI * cf.particular(1.0, 0)));
        m[3][4] = C::from(-(cf.particular(1.0, 3) + PI * PI * cf.particular(1.0, 1)));
        cf.coef = solve4(m);
        cf
    }

    fn basis(&self, j: usize, t: f64, d: i32) -> C {
        self.lam[j].powi(d) * (self.lam[j] * (t - self.anchor[j])).exp()
    }

    fn particular(&self, t: f64, d: i32) -> f64 {
        match self.profile {
            Profile::SinT => {
                let (s, c) = (PI * t).sin_cos();
                [s, PI * c, -PI * PI * s, -PI.powi(3) * c][d as usize]
            }
            Profile::TSquared => [self.a * t * t + self.b, 2.0 * self.a * t, 2.0 * self.a, 0.0][d as usize],
        }
    }

    fn target(&self, t: f64, d: i32) -> f64 {
        match self.profile {
            Profile::SinT => self.particular(t, d),
            Profile::TSquared => [t * t, 2.0 * t, 2.0, 0.0][d as usize],
        }
    }

    /// `d`-th time derivative of the state profile.
    pub fn y(&self, t: f64, d: i32) -> f64 {
        self.particular(t, d) + (0..4).map(|j| self.coef[j] * self.basis(j, t, d)).sum::<C>().re
    }

    /// `(||y_d - y||_{L2(Q)}, |y_d - y|_{H1(Q)}, |p|_{H1(Q)})` with `p = -rho L y`.
    pub fn norms(&self) -> (f64, f64, f64) {
        // sin(pi x) contributes 1/2 to L2 and pi^2/2 to the x-derivative part
        let (mut l2, mut h1, mut ph) = (0.0, 0.0, 0.0);
        let cells = 4096;
        for c in 0..cells {
            let (t0, w) = (c as f64 / cells as f64, 1.0 / cells as f64);
            for (xi, wi) in GAUSS5 {
                let t = t0 + 0.5 * w * (xi + 1.0);
                let wq = 0.5 * w * wi;
                let e = self.y(t, 0) - self.target(t, 0);
                let et = self.y(t, 1) - self.target(t, 1);
                let u = self.y(t, 2) + PI * PI * self.y(t, 0);
                let ut = self.y(t, 3) + PI * PI * self.y(t, 1);
                l2 += wq * 0.5 * e * e;
                h1 += wq * (0.5 * PI * PI * e * e + 0.5 * et * et);
                ph += wq * self.rho * self.rho * (0.5 * PI * PI * u * u + 0.5 * ut * ut);
            }
        }
        (l2.sqrt(), h1.sqrt(), ph.sqrt())
    }
}

const GAUSS5: [(f64, f64); 5] = [
    (0.0, 0.5688888888888889),
    (-0.5384693101056831, 0.47862867049936647),
    (0.5384693101056831, 0.47862867049936647),
    (-0.906179845938664, 0.23692688505618908),
    (0.906179845938664, 0.23692688505618908),
];

fn solve4(mut m: [[C; 5]; 4]) -> [C; 4] {
    for k in 0..4 {
        let p = (k..4).max_by(|&i, &j| m[i][k].norm().total_cmp(&m[j][k].norm())).unwrap();
        m.swap(k, p);
        for i in k + 1..4 {
            let f = m[i][k] / m[k][k];
            for j in k..5 {
                let v = m[k][j];
                m[i][j] -= f * v;
            }
        }
    }
    let mut x = [C::new(0.0, 0.0); 4];
    for k in (0..4).rev() {
        let mut s = m[k][4];
        for j in k + 1..4 {
            s -= m[k][j] * x[j];
        }
        x[k] = s / m[k][k];
    }
    x
}
