//! Built-in test problems for `i u_t + u_xx + f(|u|^2) u = 0` with periodic
//! boundary conditions.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::operator::NonlinearTerm;
use crate::projection::SmoothFunction;

type C = Complex64;
type SpaceTime = Arc<dyn Fn(f64, f64) -> C + Send + Sync>;

/// A problem with initial data, an optional exact solution and its
/// nonlinearity.
#[derive(Clone)]
pub struct BuiltinProblem {
    pub id: &'static str,
    pub domain: (f64, f64),
    pub notes: &'static str,
    f: Option<fn(f64) -> f64>,
    /// `u(x, t)` and `u_x(x, t)`; for problems without a closed form this is
    /// only the initial profile at `t = 0`
    u: SpaceTime,
    ux: SpaceTime,
    exact: bool,
}

impl fmt::Debug for BuiltinProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BuiltinProblem")
            .field("id", &self.id)
            .field("domain", &self.domain)
            .field("exact", &self.exact)
            .finish()
    }
}

fn cubic_quintic(s: f64) -> f64 {
    s + s * s
}

fn focusing_cubic(s: f64) -> f64 {
    2.0 * s
}

/// `A exp(i (c x - w t))` with `w = c^2 - f(|A|^2)`.
fn plane_wave(a: f64, c: f64, f: Option<fn(f64) -> f64>) -> (SpaceTime, SpaceTime) {
    let w = c * c - f.map_or(0.0, |f| f(a * a));
    (
        Arc::new(move |x, t| C::new(0.0, c * x - w * t).exp() * a),
        Arc::new(move |x, t| C::new(0.0, c) * C::new(0.0, c * x - w * t).exp() * a),
    )
}

/// One soliton `sech(x - x0 - v t) exp(i (v/2 (x - x0) + (1 - v^2/4) t))` of
/// `i u_t + u_xx + 2 |u|^2 u = 0`.
fn soliton(x: f64, t: f64, x0: f64, v: f64) -> (C, C) {
    let z = x - x0 - v * t;
    let sech = 1.0 / z.cosh();
    let phase = C::new(0.0, 0.5 * v * (x - x0) + (1.0 - 0.25 * v * v) * t).exp();
    let u = phase * sech;
    let ux = phase * (C::new(0.0, 0.5 * v) * sech - sech * z.tanh());
    (u, ux)
}

impl BuiltinProblem {
    /// `u = exp(i (x - t))` for the linear equation on `[0, 2 pi]`.
    pub fn linear_plane_wave() -> Self {
        let (u, ux) = plane_wave(1.0, 1.0, None);
        Self {
            id: "linear_plane_wave",
            domain: (0.0, 2.0 * PI),
            notes: "i u_t + u_xx = 0, u = exp(i(x - t))",
            f: None,
            u,
            ux,
            exact: true,
        }
    }

    /// Cubic-quintic equation `f(s) = s + s^2` with `u = exp(i (x + t))`.
    pub fn nls_plane_wave() -> Self {
        let (u, ux) = plane_wave(1.0, 1.0, Some(cubic_quintic));
        Self {
            id: "nls_plane_wave",
            domain: (0.0, 2.0 * PI),
            notes: "i u_t + u_xx + (|u|^2 + |u|^4) u = 0, u = exp(i(x - w t)), w = c^2 - |A|^2 - |A|^4",
            f: Some(cubic_quintic),
            u,
            ux,
            exact: true,
        }
    }

    /// One right-moving soliton of the focusing cubic equation on `[-25, 25]`.
    pub fn single_soliton() -> Self {
        Self {
            id: "single_soliton",
            domain: (-25.0, 25.0),
            notes: "i u_t + u_xx + 2|u|^2 u = 0, sech(x + 10 - 4t) exp(i(2(x + 10) - 3t)); exact on the line",
            f: Some(focusing_cubic),
            u: Arc::new(|x, t| soliton(x, t, -10.0, 4.0).0),
            ux: Arc::new(|x, t| soliton(x, t, -10.0, 4.0).1),
            exact: true,
        }
    }

    /// Two solitons launched at `-10` and `10` towards each other; they meet
    /// at `t = 2.5`. The superposition is the initial profile only.
    pub fn double_soliton() -> Self {
        let both = |x: f64, t: f64| {
            let (a, ax) = soliton(x, t, -10.0, 4.0);
            let (b, bx) = soliton(x, t, 10.0, -4.0);
            (a + b, ax + bx)
        };
        Self {
            id: "double_soliton",
            domain: (-25.0, 25.0),
            notes: "i u_t + u_xx + 2|u|^2 u = 0, two solitons with speeds +-4 colliding at t = 2.5",
            f: Some(focusing_cubic),
            u: Arc::new(move |x, t| both(x, t).0),
            ux: Arc::new(move |x, t| both(x, t).1),
            exact: false,
        }
    }

    pub fn by_id(id: &str) -> Result<Self> {
        match id {
            "linear_plane_wave" => Ok(Self::linear_plane_wave()),
            "nls_plane_wave" => Ok(Self::nls_plane_wave()),
            "single_soliton" => Ok(Self::single_soliton()),
            "double_soliton" => Ok(Self::double_soliton()),
            _ => Err(Error::Config(format!(
                "unknown problem '{id}', expected one of {}",
                Self::ids().join(", ")
            ))),
        }
    }

    pub fn ids() -> &'static [&'static str] {
        &[
            "linear_plane_wave",
            "nls_plane_wave",
            "single_soliton",
            "double_soliton",
        ]
    }

    pub fn has_exact_solution(&self) -> bool {
        self.exact
    }

    pub fn f(&self, s: f64) -> f64 {
        self.f.map_or(0.0, |f| f(s))
    }

    pub fn nonlinear_term(&self) -> NonlinearTerm {
        self.f.map_or_else(NonlinearTerm::zero, NonlinearTerm::new)
    }

    pub fn initial(&self) -> SmoothFunction {
        self.at(0.0)
    }

    /// The stored profile at time `t` (the exact solution when one exists).
    fn at(&self, t: f64) -> SmoothFunction {
        let (u, ux) = (self.u.clone(), self.ux.clone());
        SmoothFunction::new(move |x| u(x, t), move |x| ux(x, t))
    }

    pub fn exact(&self, t: f64) -> Option<SmoothFunction> {
        self.exact.then(|| self.at(t))
    }

    pub fn value(&self, x: f64, t: f64) -> C {
        (self.u)(x, t)
    }

    /// `|i u_t + u_xx + f(|u|^2) u|` at `(x, t)` by fourth-order central
    /// differences with step `d`.
    pub fn pde_residual(&self, x: f64, t: f64, d: f64) -> f64 {
        let u = |x, t| (self.u)(x, t);
        let ut = (u(x, t - 2.0 * d) - u(x, t - d) * 8.0 + u(x, t + d) * 8.0 - u(x, t + 2.0 * d)) / (12.0 * d);
        let uxx = (-u(x - 2.0 * d, t) + u(x - d, t) * 16.0 - u(x, t) * 30.0 + u(x + d, t) * 16.0
            - u(x + 2.0 * d, t))
            / (12.0 * d * d);
        let v = u(x, t);
        (C::new(0.0, 1.0) * ut + uxx + v * self.f(v.norm_sqr())).norm()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn samples(n: usize) -> Vec<(f64, f64)> {
        let mut s = 12345u64;
        let mut next = || {
            s = s
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (s >> 11) as f64 / (1u64 << 53) as f64
        };
        (0..n).map(|_| (next(), next())).collect()
    }

    #[test]
    fn exact_solutions_satisfy_the_equation() {
        for p in [
            BuiltinProblem::linear_plane_wave(),
            BuiltinProblem::nls_plane_wave(),
            BuiltinProblem::single_soliton(),
        ] {
            let (a, b) = p.domain;
            for (sx, st) in samples(50) {
                let x = a + (b - a) * sx;
                let r = p.pde_residual(x, 3.0 * st, 1e-3);
                assert!(r <= 1e-8, "{} at ({x}, {st}): {r}", p.id);
            }
        }
    }

    #[test]
    fn superposition_is_not_exact() {
        let p = BuiltinProblem::double_soliton();
        assert!(p.exact(1.0).is_none());
        // the overlap at the collision makes the residual large
        assert!(p.pde_residual(0.0, 2.5, 1e-3) > 1e-2);
        let u0 = p.initial();
        assert!((u0.value(-10.0).norm() - 1.0).abs() < 1e-7);
        assert!((u0.value(10.0).norm() - 1.0).abs() < 1e-7);
        assert!(u0.value(0.0).norm() < 2e-4);
    }

    #[test]
    fn derivatives_match() {
        for id in BuiltinProblem::ids() {
            let p = BuiltinProblem::by_id(id).unwrap();
            let (a, b) = p.domain;
            assert!(p.initial().check_derivative(a, b, 40).is_ok(), "{id}");
        }
        assert!(BuiltinProblem::by_id("nope").is_err());
    }

    #[test]
    fn nonlinearities() {
        assert!(BuiltinProblem::linear_plane_wave().nonlinear_term().is_zero());
        let nt = BuiltinProblem::nls_plane_wave().nonlinear_term();
        assert_eq!(nt.eval(2.0), 6.0);
        assert_eq!(BuiltinProblem::double_soliton().f(1.5), 3.0);
    }
}
