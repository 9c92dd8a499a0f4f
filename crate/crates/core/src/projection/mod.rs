//! Projections onto the broken polynomial space: L2, the one-sided `P1`/`P2`,
//! and the flux-adapted `P*` that makes the numerical-flux errors vanish at
//! every interface.

mod global;

use std::fmt;
use std::sync::Arc;

use nalgebra::Matrix2;
use num_complex::Complex64;

use crate::basis::Basis;
use crate::diagnostics::{diagnose_mesh, local_gamma, ProjectionCase, LOCAL_TOL};
use crate::error::{Error, Result};
use crate::field::DGFunction;
use crate::flux::{FluxParams, RealFlux};
use crate::mesh::Mesh1D;

pub use global::{
    apply_circulant, assemble_global_system, dense_oracle, dense_oracle_with_cap, solve_structured,
    GlobalSystem, DENSE_CAP,
};

type RealFn = dyn Fn(f64) -> Complex64 + Send + Sync;

/// A function with its analytic derivative.
#[derive(Clone)]
pub struct SmoothFunction {
    value: Arc<RealFn>,
    derivative: Arc<RealFn>,
}

impl fmt::Debug for SmoothFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("SmoothFunction")
    }
}

impl SmoothFunction {
    pub fn new<F, G>(value: F, derivative: G) -> Self
    where
        F: Fn(f64) -> Complex64 + Send + Sync + 'static,
        G: Fn(f64) -> Complex64 + Send + Sync + 'static,
    {
        Self {
            value: Arc::new(value),
            derivative: Arc::new(derivative),
        }
    }

    /// Real-valued function and derivative.
    pub fn real<F, G>(value: F, derivative: G) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
        G: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self::new(
            move |x| Complex64::new(value(x), 0.0),
            move |x| Complex64::new(derivative(x), 0.0),
        )
    }

    pub fn constant(c: Complex64) -> Self {
        Self::new(move |_| c, |_| Complex64::new(0.0, 0.0))
    }

    pub fn cos() -> Self {
        Self::real(f64::cos, |x| -x.sin())
    }

    /// `e^{cos x}`
    pub fn exp_cos() -> Self {
        Self::real(|x| x.cos().exp(), |x| -x.sin() * x.cos().exp())
    }

    /// `e^{i m x}`
    pub fn plane_wave(m: f64) -> Self {
        Self::new(
            move |x| Complex64::new(0.0, m * x).exp(),
            move |x| Complex64::new(0.0, m) * Complex64::new(0.0, m * x).exp(),
        )
    }

    pub fn value(&self, x: f64) -> Complex64 {
        (self.value)(x)
    }

    pub fn derivative(&self, x: f64) -> Complex64 {
        (self.derivative)(x)
    }

    /// Compares the derivative against central differences at `samples`
    /// evenly spread points of `[a, b]`.
    pub fn check_derivative(&self, a: f64, b: f64, samples: usize) -> Result<()> {
        for s in 0..samples {
            let x = a + (b - a) * (s as f64 + 0.5) / samples as f64;
            let eps = 1e-5 * (1.0 + x.abs());
            let fd = (self.value(x + eps) - self.value(x - eps)) / (2.0 * eps);
            let d = self.derivative(x);
            if (fd - d).norm() > 1e-6 * (1.0 + d.norm()) {
                return Err(Error::InvalidArgument(format!(
                    "derivative mismatch at x = {x}: analytic {d}, difference quotient {fd}"
                )));
            }
        }
        Ok(())
    }
}

/// Per-cell Legendre moments `gamma_{j,l}` of `u` for `l <= upto`.
fn fill_l2_modes(out: &mut DGFunction, u: &SmoothFunction, basis: &Basis, upto: usize) {
    let mesh = out.mesh().clone();
    for j in 0..mesh.n_cells() {
        let vals: Vec<Complex64> = basis
            .quad_nodes()
            .iter()
            .map(|&xi| u.value(mesh.map_to_cell(j, xi)))
            .collect();
        let c = out.cell_mut(j);
        for (l, cl) in c.iter_mut().enumerate().take(upto + 1) {
            let s: Complex64 = (0..basis.n_quad())
                .map(|q| vals[q] * (basis.quad_weights()[q] * basis.phi(q)[l]))
                .sum();
            *cl = s / Basis::norm2(l);
        }
    }
}

/// L2 projection by `k + 3` point Gauss quadrature in each cell.
pub fn l2_project(u: &SmoothFunction, mesh: &Arc<Mesh1D>, k: usize) -> Result<DGFunction> {
    let basis = Basis::new(k)?;
    let mut out = DGFunction::zeros(mesh.clone(), k);
    fill_l2_modes(&mut out, u, &basis, k);
    Ok(out)
}

/// A linear endpoint condition `w_u e + w_x e_x = 0` on `e = P u - u`.
#[derive(Debug, Clone, Copy)]
struct EndCondition {
    w_u: f64,
    w_x: f64,
}

/// Fills the top two modes of every cell from one condition at the left end
/// and one at the right end; modes `l <= k - 2` are taken as already set.
fn solve_cellwise(
    out: &mut DGFunction,
    u: &SmoothFunction,
    left: EndCondition,
    right: EndCondition,
) -> Result<()> {
    let mesh = out.mesh().clone();
    let k = out.k();
    for j in 0..mesh.n_cells() {
        let s = 2.0 / mesh.cell_size(j);
        let row = |c: EndCondition, side: f64, l: usize| {
            c.w_u * Basis::end_value(l, side) + c.w_x * s * Basis::end_deriv(l, side)
        };
        let m = Matrix2::new(
            row(left, -1.0, k - 1),
            row(left, -1.0, k),
            row(right, 1.0, k - 1),
            row(right, 1.0, k),
        );
        let xl = mesh.left(j);
        let xr = mesh.right(j);
        let cell = out.cell(j);
        let mut fl = left.w_u * u.value(xl) + left.w_x * u.derivative(xl);
        let mut fr = right.w_u * u.value(xr) + right.w_x * u.derivative(xr);
        for (l, &g) in cell.iter().enumerate().take(k - 1) {
            fl -= g * row(left, -1.0, l);
            fr -= g * row(right, 1.0, l);
        }
        let inv = m
            .try_inverse()
            .ok_or_else(|| Error::Singular(format!("endpoint system of cell {j} is singular")))?;
        let c = out.cell_mut(j);
        c[k - 1] = fl * inv[(0, 0)] + fr * inv[(0, 1)];
        c[k] = fl * inv[(1, 0)] + fr * inv[(1, 1)];
    }
    Ok(())
}

fn one_sided(
    u: &SmoothFunction,
    mesh: &Arc<Mesh1D>,
    k: usize,
    left: EndCondition,
    right: EndCondition,
) -> Result<DGFunction> {
    let basis = Basis::new(k)?;
    let mut out = DGFunction::zeros(mesh.clone(), k);
    if k >= 2 {
        fill_l2_modes(&mut out, u, &basis, k - 2);
    }
    solve_cellwise(&mut out, u, left, right)?;
    Ok(out)
}

/// `P1 u`: moments up to degree `k - 2`, value at the right end of each cell
/// and derivative at the left end.
pub fn project_p1(u: &SmoothFunction, mesh: &Arc<Mesh1D>, k: usize) -> Result<DGFunction> {
    one_sided(
        u,
        mesh,
        k,
        EndCondition { w_u: 0.0, w_x: 1.0 },
        EndCondition { w_u: 1.0, w_x: 0.0 },
    )
}

/// `P2 u`: value at the left end, derivative at the right end.
pub fn project_p2(u: &SmoothFunction, mesh: &Arc<Mesh1D>, k: usize) -> Result<DGFunction> {
    one_sided(
        u,
        mesh,
        k,
        EndCondition { w_u: 1.0, w_x: 0.0 },
        EndCondition { w_u: 0.0, w_x: 1.0 },
    )
}

/// Decoupled endpoint conditions of the local family.
///
/// On `alpha1^2 + beta1 beta2 = 1/4` the two interface conditions factor
/// into one condition on each side of the interface.
fn local_conditions(p: &RealFlux, h: f64) -> (EndCondition, EndCondition) {
    let (a, b1, b2) = (p.alpha1, p.beta1, p.beta2);
    if b1 == 0.0 && b2 == 0.0 {
        return if a > 0.0 {
            (
                EndCondition { w_u: 0.0, w_x: 1.0 },
                EndCondition { w_u: 1.0, w_x: 0.0 },
            )
        } else {
            (
                EndCondition { w_u: 1.0, w_x: 0.0 },
                EndCondition { w_u: 0.0, w_x: 1.0 },
            )
        };
    }
    if b1.abs() * h >= b2.abs() / h {
        (
            EndCondition {
                w_u: 1.0,
                w_x: (0.5 + a) / b1,
            },
            EndCondition {
                w_u: 1.0,
                w_x: -(0.5 - a) / b1,
            },
        )
    } else {
        (
            EndCondition {
                w_u: (0.5 - a) / b2,
                w_x: 1.0,
            },
            EndCondition {
                w_u: -(0.5 + a) / b2,
                w_x: 1.0,
            },
        )
    }
}

/// Local `P* u` for parameters on `alpha1^2 + beta1 beta2 = 1/4`.
pub fn project_star_local(
    u: &SmoothFunction,
    p: &FluxParams,
    mesh: &Arc<Mesh1D>,
    k: usize,
) -> Result<DGFunction> {
    let r = p.as_real()?;
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    if r.local_defect().abs() > LOCAL_TOL {
        return Err(Error::InvalidArgument(
            "parameters are not in the local family".into(),
        ));
    }
    if r.beta1 != 0.0 || r.beta2 != 0.0 {
        for (j, &hj) in mesh.cell_sizes().iter().enumerate() {
            let k2 = (k * k) as f64;
            let scale = r.beta1.abs() + k2 / hj + r.beta2.abs() * k2 * (k2 - 1.0) / (hj * hj);
            if local_gamma(&r, k, hj).abs() <= 1e-12 * scale {
                return Err(Error::NonExistent(format!(
                    "Gamma_j = 0 on cell {j} (h_j = {hj})"
                )));
            }
        }
    }
    let basis = Basis::new(k)?;
    let mut out = DGFunction::zeros(mesh.clone(), k);
    if k >= 2 {
        fill_l2_modes(&mut out, u, &basis, k - 2);
    }
    // the branch choice only affects conditioning, so one global choice is enough
    let (left, right) = local_conditions(&r, mesh.h());
    solve_cellwise(&mut out, u, left, right)?;
    Ok(out)
}

/// `P* u`, routed to the local or the global construction.
pub fn project_star(u: &SmoothFunction, p: &FluxParams, mesh: &Arc<Mesh1D>, k: usize) -> Result<DGFunction> {
    let d = diagnose_mesh(p, k, mesh)?;
    if !d.exists {
        return Err(Error::NonExistent(
            d.note.unwrap_or_else(|| format!("{} verdict", d.case)),
        ));
    }
    if d.case == ProjectionCase::Local {
        return project_star_local(u, p, mesh, k);
    }
    let sys = assemble_global_system(u, p, mesh, k)?;
    let x = solve_structured(&sys.a, &sys.b, sys.n, &sys.rhs, &d)?;
    Ok(sys.into_function(&x))
}

/// Largest violations of the defining relations of `P*`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DefiningResiduals {
    /// `max |hat(P* u) - u|` over interfaces
    pub flux_value: f64,
    /// `max |tilde(P* u)_x - u_x|` over interfaces
    pub flux_derivative: f64,
    /// largest `|∫ (P* u - u) P_l| / h_j` for `l <= k - 2`
    pub moments: f64,
    /// `max(1, max |u|, max |u_x|)` at the interfaces
    pub scale: f64,
}

pub fn defining_residuals(f: &DGFunction, u: &SmoothFunction, p: &FluxParams) -> Result<DefiningResiduals> {
    let mesh = f.mesh().clone();
    let k = f.k();
    let n = mesh.n_cells();
    let mut res = DefiningResiduals {
        flux_value: 0.0,
        flux_derivative: 0.0,
        moments: 0.0,
        scale: 1.0,
    };
    for i in 0..n {
        let x = mesh.left(i);
        let t = f.traces(i);
        let uh = t.average() + p.alpha2 * t.jump() + p.beta2 * t.jump_x();
        let uxt = t.average_x() + p.alpha1 * t.jump_x() + p.beta1 * t.jump();
        let (ux, dux) = (u.value(x), u.derivative(x));
        res.flux_value = res.flux_value.max((uh - ux).norm());
        res.flux_derivative = res.flux_derivative.max((uxt - dux).norm());
        res.scale = res.scale.max(ux.norm()).max(dux.norm());
    }
    if k >= 2 {
        let basis = Basis::new(k)?;
        for j in 0..n {
            for l in 0..=(k - 2) {
                let s: Complex64 = (0..basis.n_quad())
                    .map(|q| {
                        let xi = basis.quad_nodes()[q];
                        let e = f.eval_in_cell(j, xi).0 - u.value(mesh.map_to_cell(j, xi));
                        e * (basis.quad_weights()[q] * basis.phi(q)[l])
                    })
                    .sum();
                res.moments = res.moments.max(0.5 * s.norm());
            }
        }
    }
    Ok(res)
}

impl DefiningResiduals {
    /// Worst interface residual relative to `scale`.
    pub fn relative(&self) -> f64 {
        self.flux_value.max(self.flux_derivative) / self.scale
    }
}
