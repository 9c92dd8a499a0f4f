//! Implicit-explicit Runge-Kutta integration of `c' = L c + N(c)`, with `L`
//! taken implicitly and the nonlinear term explicitly.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::basis::Basis;
use crate::error::{Error, Result};
use crate::field::DGFunction;
use crate::operator::{nonlinear_modes, LinearOperator, NonlinearTerm};

type C = Complex64;

const ORDER_TOL: f64 = 1e-14;
/// Largest system solved by dense LU.
pub const DENSE_LIMIT: usize = 64;
/// Largest system for which a failed block elimination falls back to dense LU.
const DENSE_FALLBACK: usize = 4096;
const RESIDUAL_TOL: f64 = 1e-10;

/// Additive Runge-Kutta tableau pair.
#[derive(Debug, Clone, PartialEq)]
pub struct IMEXTableau {
    name: String,
    implicit: Vec<Vec<f64>>,
    explicit: Vec<Vec<f64>>,
    b_implicit: Vec<f64>,
    b_explicit: Vec<f64>,
    c: Vec<f64>,
    order: usize,
}

/// Root of `x^3 - 3x^2 + 3x/2 - 1/6` in `(1/3, 1/2)`, the diagonal of the
/// third-order L-stable SDIRK.
fn sdirk3_gamma() -> f64 {
    let mut x = 0.4358665215;
    for _ in 0..20 {
        let f = ((x - 3.0) * x + 1.5) * x - 1.0 / 6.0;
        let d = (3.0 * x - 6.0) * x + 1.5;
        x -= f / d;
    }
    x
}

impl IMEXTableau {
    /// Builds a tableau and checks its order conditions.
    pub fn new(
        name: impl Into<String>,
        implicit: Vec<Vec<f64>>,
        explicit: Vec<Vec<f64>>,
        b_implicit: Vec<f64>,
        b_explicit: Vec<f64>,
        c: Vec<f64>,
        order: usize,
    ) -> Result<Self> {
        let s = c.len();
        let square = |a: &Vec<Vec<f64>>| a.len() == s && a.iter().all(|r| r.len() == s);
        if !square(&implicit) || !square(&explicit) || b_implicit.len() != s || b_explicit.len() != s {
            return Err(Error::InvalidArgument("tableau dimensions disagree".into()));
        }
        for i in 0..s {
            if explicit[i][i..].iter().any(|&x| x != 0.0) || implicit[i][i + 1..].iter().any(|&x| x != 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "tableau row {i} is not (strictly) lower triangular"
                )));
            }
        }
        let t = Self {
            name: name.into(),
            implicit,
            explicit,
            b_implicit,
            b_explicit,
            c,
            order,
        };
        let worst = t.order_defect();
        if worst > ORDER_TOL {
            return Err(Error::InvalidArgument(format!(
                "tableau {} misses its order-{} conditions by {worst:.3e}",
                t.name, t.order
            )));
        }
        Ok(t)
    }

    /// The four-stage, third-order pair ARS(3,4,3) of Ascher, Ruuth and
    /// Spiteri. The implicit part is stiffly accurate and L-stable.
    pub fn ars343() -> Self {
        let g = sdirk3_gamma();
        let b1 = -1.5 * g * g + 4.0 * g - 0.25;
        let b2 = 1.5 * g * g - 5.0 * g + 1.25;
        let c3 = 0.5 * (1.0 + g);
        let t = 0.5529291479;
        let e32 = (1.0 / 6.0 - g * t * (g + c3)) / (b2 * g);
        let implicit = vec![
            vec![0.0, 0.0, 0.0, 0.0],
            vec![0.0, g, 0.0, 0.0],
            vec![0.0, 0.5 * (1.0 - g), g, 0.0],
            vec![0.0, b1, b2, g],
        ];
        let explicit = vec![
            vec![0.0, 0.0, 0.0, 0.0],
            vec![g, 0.0, 0.0, 0.0],
            vec![c3 - e32, e32, 0.0, 0.0],
            vec![1.0 - 2.0 * t, t, t, 0.0],
        ];
        let b = vec![0.0, b1, b2, g];
        Self::new(
            "ARS(3,4,3)",
            implicit,
            explicit,
            b.clone(),
            b,
            vec![0.0, g, c3, 1.0],
            3,
        )
        .expect("built-in tableau satisfies its order conditions")
    }

    /// Implicit-explicit midpoint rule ARS(1,2,2), second order.
    pub fn ars122() -> Self {
        Self::new(
            "ARS(1,2,2)",
            vec![vec![0.0, 0.0], vec![0.0, 0.5]],
            vec![vec![0.0, 0.0], vec![0.5, 0.0]],
            vec![0.0, 1.0],
            vec![0.0, 1.0],
            vec![0.0, 0.5],
            2,
        )
        .expect("built-in tableau satisfies its order conditions")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn stages(&self) -> usize {
        self.c.len()
    }

    pub fn implicit(&self) -> &[Vec<f64>] {
        &self.implicit
    }

    pub fn explicit(&self) -> &[Vec<f64>] {
        &self.explicit
    }

    pub fn b_implicit(&self) -> &[f64] {
        &self.b_implicit
    }

    pub fn b_explicit(&self) -> &[f64] {
        &self.b_explicit
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }

    /// True when the last implicit row equals the implicit weights.
    pub fn is_stiffly_accurate(&self) -> bool {
        let last = self.implicit.last().expect("non-empty tableau");
        last.iter()
            .zip(&self.b_implicit)
            .all(|(a, b)| (a - b).abs() <= ORDER_TOL)
    }

    /// Largest violation of the row-sum and order conditions up to `order`.
    pub fn order_defect(&self) -> f64 {
        let s = self.stages();
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        let mat_vec = |a: &[Vec<f64>], v: &[f64]| (0..s).map(|i| dot(&a[i], v)).collect::<Vec<_>>();
        let ones = vec![1.0; s];
        let mut worst = 0.0f64;
        for a in [&self.implicit, &self.explicit] {
            for (r, c) in mat_vec(a, &ones).iter().zip(&self.c) {
                worst = worst.max((r - c).abs());
            }
        }
        let c2: Vec<f64> = self.c.iter().map(|x| x * x).collect();
        for b in [&self.b_implicit, &self.b_explicit] {
            worst = worst.max((dot(b, &ones) - 1.0).abs());
            if self.order >= 2 {
                worst = worst.max((dot(b, &self.c) - 0.5).abs());
            }
            if self.order >= 3 {
                worst = worst.max((dot(b, &c2) - 1.0 / 3.0).abs());
                for a in [&self.implicit, &self.explicit] {
                    worst = worst.max((dot(b, &mat_vec(a, &self.c)) - 1.0 / 6.0).abs());
                }
            }
        }
        worst
    }
}

enum Factor {
    Dense(nalgebra::LU<C, nalgebra::Dyn, nalgebra::Dyn>),
    Banded(Banded),
}

/// Block elimination of the non-periodic part `T` of `I - mu L`, with the
/// two corner blocks folded back in by a Woodbury correction. Small blocks
/// are kept as explicit row-major inverses.
struct Banded {
    m: usize,
    n: usize,
    /// `S_j = -mu sub_j`
    sub: Vec<C>,
    /// inverses of the eliminated diagonal blocks
    dinv: Vec<C>,
    /// `G_j = D'_j^{-1} U_j`
    g: Vec<C>,
    /// `T^{-1} U_c`, `dim x 2m` row-major
    z: Vec<C>,
    /// `(I + V^T T^{-1} U_c)^{-1}`
    cap_inv: Vec<C>,
}

fn singular(what: &str) -> Error {
    Error::Singular(format!("shifted system I - mu L: {what}"))
}

fn row_major(a: &DMatrix<C>) -> Vec<C> {
    a.transpose().as_slice().to_vec()
}

/// `y -= A x` for an `m x m` row-major block.
fn sub_matvec(y: &mut [C], a: &[C], x: &[C]) {
    let m = y.len();
    for (r, yr) in y.iter_mut().enumerate() {
        let row = &a[r * m..(r + 1) * m];
        *yr -= row.iter().zip(x).map(|(p, q)| p * q).sum::<C>();
    }
}

fn matvec(a: &[C], x: &[C], m: usize) -> Vec<C> {
    (0..m)
        .map(|r| a[r * m..(r + 1) * m].iter().zip(x).map(|(p, q)| p * q).sum())
        .collect()
}

impl Banded {
    fn factor(op: &LinearOperator, mu: C) -> Result<Self> {
        let m = op.k() + 1;
        let n = op.n_cells();
        let eye = DMatrix::<C>::identity(m, m);
        let mut sub = Vec::with_capacity(n * m * m);
        let mut dinv = Vec::with_capacity(n * m * m);
        let mut g = Vec::with_capacity(n * m * m);
        let mut g_prev: Option<DMatrix<C>> = None;
        for j in 0..n {
            let s = op.sub(j) * (-mu);
            let mut d = &eye - op.diag(j) * mu;
            if let Some(gp) = &g_prev {
                d -= &s * gp;
            }
            let inv = d.try_inverse().ok_or_else(|| singular("zero block pivot"))?;
            let gj = &inv * (op.sup(j) * (-mu));
            sub.extend(row_major(&s));
            dinv.extend(row_major(&inv));
            g.extend(row_major(&gj));
            g_prev = Some(gj);
        }
        let mut b = Self {
            m,
            n,
            sub,
            dinv,
            g,
            z: Vec::new(),
            cap_inv: Vec::new(),
        };
        let dim = n * m;
        let corner_lo = row_major(&(op.sub(0) * (-mu)));
        let corner_hi = row_major(&(op.sup(n - 1) * (-mu)));
        let mut z = vec![C::new(0.0, 0.0); dim * 2 * m];
        for col in 0..2 * m {
            let mut v = vec![C::new(0.0, 0.0); dim];
            if col < m {
                for r in 0..m {
                    v[r] = corner_lo[r * m + col];
                }
            } else {
                for r in 0..m {
                    v[dim - m + r] = corner_hi[r * m + col - m];
                }
            }
            b.solve_tridiagonal(&mut v);
            for (r, x) in v.into_iter().enumerate() {
                z[r * 2 * m + col] = x;
            }
        }
        // V^T x = (x_{N-1}, x_0)
        let mut cap = DMatrix::<C>::identity(2 * m, 2 * m);
        for r in 0..m {
            for c in 0..2 * m {
                cap[(r, c)] += z[(dim - m + r) * 2 * m + c];
                cap[(m + r, c)] += z[r * 2 * m + c];
            }
        }
        let cap_inv = cap
            .try_inverse()
            .ok_or_else(|| singular("periodic correction is singular"))?;
        b.z = z;
        b.cap_inv = row_major(&cap_inv);
        Ok(b)
    }

    fn solve_tridiagonal(&self, x: &mut [C]) {
        let (m, n) = (self.m, self.n);
        let mm = m * m;
        let mut tmp = vec![C::new(0.0, 0.0); m];
        for j in 0..n {
            if j > 0 {
                let (done, rest) = x.split_at_mut(m * j);
                sub_matvec(
                    &mut rest[..m],
                    &self.sub[j * mm..(j + 1) * mm],
                    &done[m * (j - 1)..],
                );
            }
            tmp.copy_from_slice(&x[m * j..m * (j + 1)]);
            let y = matvec(&self.dinv[j * mm..(j + 1) * mm], &tmp, m);
            x[m * j..m * (j + 1)].copy_from_slice(&y);
        }
        for j in (0..n - 1).rev() {
            let (head, tail) = x.split_at_mut(m * (j + 1));
            sub_matvec(&mut head[m * j..], &self.g[j * mm..(j + 1) * mm], &tail[..m]);
        }
    }

    fn solve(&self, b: &[C]) -> Vec<C> {
        let m = self.m;
        let dim = self.n * m;
        let mut y = b.to_vec();
        self.solve_tridiagonal(&mut y);
        let vy: Vec<C> = y[dim - m..].iter().chain(&y[..m]).copied().collect();
        let w = matvec(&self.cap_inv, &vy, 2 * m);
        for (r, yr) in y.iter_mut().enumerate() {
            let zr = &self.z[r * 2 * m..(r + 1) * 2 * m];
            *yr -= zr.iter().zip(&w).map(|(p, q)| p * q).sum::<C>();
        }
        y
    }
}

fn dense_factor(op: &LinearOperator, mu: C) -> Result<Factor> {
    let a = DMatrix::<C>::identity(op.dim(), op.dim()) - op.to_dense() * mu;
    let lu = a.lu();
    if !lu.is_invertible() {
        return Err(singular("dense LU found a zero pivot"));
    }
    Ok(Factor::Dense(lu))
}

/// Solver for `(I - mu L) x = b` that keeps the factorization of the most
/// recent shifts.
pub struct ShiftedSolver<'a> {
    op: &'a LinearOperator,
    cache: Vec<(C, Factor)>,
    force_banded: bool,
}

impl<'a> ShiftedSolver<'a> {
    pub fn new(op: &'a LinearOperator) -> Self {
        Self {
            op,
            cache: Vec::new(),
            force_banded: false,
        }
    }

    /// Uses the banded path whatever the size.
    pub fn banded(op: &'a LinearOperator) -> Self {
        Self {
            op,
            cache: Vec::new(),
            force_banded: true,
        }
    }

    pub fn operator(&self) -> &LinearOperator {
        self.op
    }

    fn factor(&mut self, mu: C) -> Result<&Factor> {
        if let Some(i) = self.cache.iter().position(|(s, _)| *s == mu) {
            return Ok(&self.cache[i].1);
        }
        let dim = self.op.dim();
        let f = if !self.force_banded && dim <= DENSE_LIMIT {
            dense_factor(self.op, mu)?
        } else {
            match Banded::factor(self.op, mu) {
                Ok(b) => Factor::Banded(b),
                // a zero pivot in the open chain does not make the periodic
                // system singular
                Err(_) if !self.force_banded && dim <= DENSE_FALLBACK => dense_factor(self.op, mu)?,
                Err(e) => return Err(e),
            }
        };
        // A run uses one shift plus possibly a truncated last step.
        if self.cache.len() >= 4 {
            self.cache.remove(0);
        }
        self.cache.push((mu, f));
        Ok(&self.cache.last().expect("just pushed").1)
    }

    fn raw_solve(&mut self, mu: C, b: &[C]) -> Result<Vec<C>> {
        match self.factor(mu)? {
            Factor::Dense(lu) => {
                let x = lu
                    .solve(&DMatrix::from_column_slice(b.len(), 1, b))
                    .ok_or_else(|| singular("dense LU found a zero pivot"))?;
                Ok(x.as_slice().to_vec())
            }
            Factor::Banded(f) => Ok(f.solve(b)),
        }
    }

    fn residual(&self, mu: C, x: &[C], b: &[C]) -> Vec<C> {
        let lx = self.op.apply(x);
        b.iter()
            .zip(x)
            .zip(&lx)
            .map(|((bi, xi), li)| bi - (xi - mu * li))
            .collect()
    }

    /// Solves `(I - mu L) x = b`, refining once if the residual is above
    /// `1e-10 |b|_inf`.
    pub fn solve(&mut self, mu: C, b: &[C]) -> Result<Vec<C>> {
        if b.len() != self.op.dim() {
            return Err(Error::InvalidArgument(format!(
                "right side has length {}, expected {}",
                b.len(),
                self.op.dim()
            )));
        }
        if mu == C::new(0.0, 0.0) {
            return Ok(b.to_vec());
        }
        let bnorm = inf_norm(b);
        if bnorm == 0.0 {
            return Ok(vec![C::new(0.0, 0.0); b.len()]);
        }
        let mut x = self.raw_solve(mu, b)?;
        for attempt in 0..2 {
            let r = self.residual(mu, &x, b);
            let rn = inf_norm(&r);
            if !rn.is_finite() {
                return Err(Error::IllConditioned(
                    "shifted solve produced non-finite values".into(),
                ));
            }
            if rn <= RESIDUAL_TOL * bnorm {
                return Ok(x);
            }
            if attempt == 1 {
                return Err(Error::IllConditioned(format!(
                    "shifted solve residual {rn:.3e} exceeds {:.1e} |b| after refinement",
                    RESIDUAL_TOL
                )));
            }
            let dx = self.raw_solve(mu, &r)?;
            for (xi, di) in x.iter_mut().zip(dx) {
                *xi += di;
            }
        }
        unreachable!("loop returns on its second pass")
    }
}

fn inf_norm(v: &[C]) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// One-off solve of `(I - mu L) x = b`.
pub fn solve_shifted(l: &LinearOperator, mu: C, b: &[C]) -> Result<Vec<C>> {
    ShiftedSolver::new(l).solve(mu, b)
}

/// Time stepper holding the operator, the nonlinearity and cached solves.
pub struct Integrator<'a> {
    solver: ShiftedSolver<'a>,
    nt: NonlinearTerm,
    tab: IMEXTableau,
    basis: Basis,
}

impl<'a> Integrator<'a> {
    pub fn new(op: &'a LinearOperator, nt: NonlinearTerm, tab: IMEXTableau) -> Result<Self> {
        let basis = nt.basis(op.k())?;
        Ok(Self {
            solver: ShiftedSolver::new(op),
            nt,
            tab,
            basis,
        })
    }

    pub fn tableau(&self) -> &IMEXTableau {
        &self.tab
    }

    fn op(&self) -> &'a LinearOperator {
        self.solver.op
    }

    /// Advances the coefficient vector `u` by `dt`.
    pub fn step_coeffs(&mut self, u: &[C], dt: f64) -> Result<Vec<C>> {
        if dt == 0.0 {
            return Ok(u.to_vec());
        }
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "time step must be positive, got {dt}"
            )));
        }
        let s = self.tab.stages();
        let k = self.op().k();
        let mut lin: Vec<Option<Vec<C>>> = vec![None; s];
        let mut non: Vec<Option<Vec<C>>> = vec![None; s];
        let dim = u.len();
        for i in 0..s {
            let mut rhs = u.to_vec();
            for j in 0..i {
                let (ai, ae) = (self.tab.implicit[i][j], self.tab.explicit[i][j]);
                if ai != 0.0 {
                    axpy(&mut rhs, dt * ai, lin[j].as_ref().expect("stage computed"));
                }
                if ae != 0.0 {
                    if let Some(nj) = &non[j] {
                        axpy(&mut rhs, dt * ae, nj);
                    }
                }
            }
            let aii = self.tab.implicit[i][i];
            let stage = if aii != 0.0 {
                let x = self.solver.solve(C::new(dt * aii, 0.0), &rhs)?;
                let inv = 1.0 / (dt * aii);
                lin[i] = Some(x.iter().zip(&rhs).map(|(a, b)| (a - b) * inv).collect());
                x
            } else {
                let needed =
                    self.tab.b_implicit[i] != 0.0 || (i + 1..s).any(|r| self.tab.implicit[r][i] != 0.0);
                if needed {
                    lin[i] = Some(self.op().apply(&rhs));
                }
                rhs
            };
            let needed = self.tab.b_explicit[i] != 0.0 || (i + 1..s).any(|r| self.tab.explicit[r][i] != 0.0);
            if needed && !self.nt.is_zero() {
                non[i] = Some(nonlinear_modes(&stage, k, &self.nt, &self.basis));
            }
        }
        let mut out = u.to_vec();
        for i in 0..s {
            if self.tab.b_implicit[i] != 0.0 {
                axpy(
                    &mut out,
                    dt * self.tab.b_implicit[i],
                    lin[i].as_ref().expect("stage computed"),
                );
            }
            if let Some(ni) = &non[i] {
                axpy(&mut out, dt * self.tab.b_explicit[i], ni);
            }
        }
        debug_assert_eq!(out.len(), dim);
        Ok(out)
    }

    pub fn step(&mut self, state: &DGFunction, dt: f64) -> Result<DGFunction> {
        let next = self.step_coeffs(state.coeffs(), dt)?;
        DGFunction::from_coeffs(state.mesh().clone(), state.k(), next)
    }

    /// Integrates from `t = 0` to `t_end`, shortening the final step to land
    /// on `t_end`. The energy is recorded after every step; a snapshot is
    /// kept at the step nearest to each requested time.
    pub fn evolve(
        &mut self,
        init: &DGFunction,
        t_end: f64,
        dt: f64,
        snapshot_times: &[f64],
    ) -> Result<(EvolutionRecord, DGFunction)> {
        if !(t_end > 0.0) || !(dt > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "need T > 0 and dt > 0, got T = {t_end}, dt = {dt}"
            )));
        }
        let full = (t_end / dt + 1e-9).floor() as usize;
        let rest = t_end - full as f64 * dt;
        let n_steps = if rest > 1e-12 * t_end { full + 1 } else { full };
        let mut rec = EvolutionRecord {
            times: Vec::with_capacity(n_steps + 1),
            energy_trace: Vec::with_capacity(n_steps + 1),
            snapshots: Vec::new(),
        };
        let mut wanted: Vec<f64> = snapshot_times.to_vec();
        wanted.sort_by(f64::total_cmp);
        let mut next_snap = 0;
        let mesh = init.mesh().clone();
        let k = init.k();
        let mut u = init.coeffs().to_vec();
        let mut take = |t: f64, dt_now: f64, u: &[C], rec: &mut EvolutionRecord| -> Result<()> {
            let e = energy_of(&mesh, k, u);
            if !e.is_finite() {
                return Err(Error::Diverged(format!("energy is not finite at t = {t}")));
            }
            rec.times.push(t);
            rec.energy_trace.push(e);
            while next_snap < wanted.len() && (wanted[next_snap] - t) <= 0.5 * dt_now + 1e-12 {
                rec.snapshots
                    .push((t, DGFunction::from_coeffs(mesh.clone(), k, u.to_vec())?));
                next_snap += 1;
            }
            Ok(())
        };
        let step_len = |n: usize| if n == full { t_end - n as f64 * dt } else { dt };
        // a snapshot time is served once the next step would move away from it
        let ahead = |n: usize| if n < n_steps { step_len(n) } else { f64::INFINITY };
        take(0.0, ahead(0), &u, &mut rec)?;
        for n in 0..n_steps {
            u = self.step_coeffs(&u, step_len(n))?;
            let t = if n + 1 == n_steps {
                t_end
            } else {
                (n + 1) as f64 * dt
            };
            take(t, ahead(n + 1), &u, &mut rec)?;
        }
        let last = DGFunction::from_coeffs(mesh.clone(), k, u)?;
        Ok((rec, last))
    }
}

fn axpy(y: &mut [C], a: f64, x: &[C]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += xi * a;
    }
}

fn energy_of(mesh: &crate::mesh::Mesh1D, k: usize, u: &[C]) -> f64 {
    let m = k + 1;
    let mut s = 0.0;
    for j in 0..mesh.n_cells() {
        let hj = mesh.cell_size(j);
        for l in 0..m {
            s += hj / (2 * l + 1) as f64 * u[j * m + l].norm_sqr();
        }
    }
    s
}

/// One IMEX step with a fresh solver.
pub fn step(
    state: &DGFunction,
    dt: f64,
    l: &LinearOperator,
    nt: &NonlinearTerm,
    tab: &IMEXTableau,
) -> Result<DGFunction> {
    Integrator::new(l, nt.clone(), tab.clone())?.step(state, dt)
}

/// Integrates `init` to `t_end`; see [`Integrator::evolve`].
pub fn evolve(
    init: &DGFunction,
    t_end: f64,
    dt: f64,
    l: &LinearOperator,
    nt: &NonlinearTerm,
    tab: &IMEXTableau,
    snapshot_times: &[f64],
) -> Result<(EvolutionRecord, DGFunction)> {
    Integrator::new(l, nt.clone(), tab.clone())?.evolve(init, t_end, dt, snapshot_times)
}

/// Energy history of a run.
#[derive(Debug, Clone, Serialize)]
pub struct EvolutionRecord {
    pub times: Vec<f64>,
    pub energy_trace: Vec<f64>,
    #[serde(skip)]
    pub snapshots: Vec<(f64, DGFunction)>,
}

impl EvolutionRecord {
    /// `|E(T) - E(0)|`.
    pub fn energy_change(&self) -> f64 {
        match (self.energy_trace.first(), self.energy_trace.last()) {
            (Some(a), Some(b)) => (b - a).abs(),
            _ => 0.0,
        }
    }

    /// Writes `t, energy, energy_delta` rows, keeping every `every`-th step
    /// and the last one.
    pub fn write_energy_csv<W: std::io::Write>(&self, w: W, every: usize) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["t", "energy", "energy_delta"])?;
        let e0 = self.energy_trace.first().copied().unwrap_or(0.0);
        let n = self.times.len();
        for i in 0..n {
            if i % every.max(1) == 0 || i + 1 == n {
                out.write_record([
                    format!("{:.6e}", self.times[i]),
                    format!("{:.12e}", self.energy_trace[i]),
                    format!("{:.6e}", self.energy_trace[i] - e0),
                ])?;
            }
        }
        out.flush()?;
        Ok(())
    }
}

/// Writes `x, re, im, abs` rows sampled at `p` uniform points per cell.
pub fn write_snapshot_csv<W: std::io::Write>(f: &DGFunction, p: usize, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["x", "re", "im", "abs"])?;
    for (x, u) in f.sample(p) {
        out.write_record([
            format!("{x:.6e}"),
            format!("{:.6e}", u.re),
            format!("{:.6e}", u.im),
            format!("{:.6e}", u.norm()),
        ])?;
    }
    out.flush()?;
    Ok(())
}
