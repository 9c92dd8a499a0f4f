//! The coupled `2N x 2N` system for the top two modes of every cell.
//!
//! Row `j` is written at the interface `x_{j+1/2}`: `A x_j + B x_{j+1} = f_j`
//! with `x_j = (gamma_{j,k-1}, gamma_{j,k})`.

use std::sync::Arc;

use nalgebra::{DMatrix, Matrix2, Vector2};
use num_complex::Complex64;
use rayon::prelude::*;

use super::{fill_l2_modes, SmoothFunction};
use crate::basis::Basis;
use crate::diagnostics::{
    assemble_interface_blocks, minus_weights, plus_weights, ProjectionCase, ProjectionDiagnostics,
};
use crate::error::{Error, Result};
use crate::field::DGFunction;
use crate::flux::FluxParams;
use crate::mesh::Mesh1D;

/// Default limit on the number of unknowns the dense oracle will accept.
pub const DENSE_CAP: usize = 6000;

/// Refuse structured solves with `|1 - lambda^N|` below this.
const COND_TOL: f64 = 1e-8;

type C = Complex64;

/// Block-circulant system `circ(A, B, 0, ..., 0) x = rhs`.
#[derive(Debug, Clone)]
pub struct GlobalSystem {
    pub a: Matrix2<f64>,
    pub b: Matrix2<f64>,
    pub n: usize,
    pub rhs: Vec<Vector2<C>>,
    /// Field holding the L2 modes `l <= k - 2`; the top two are zero.
    pub lower: DGFunction,
}

impl GlobalSystem {
    /// Writes the solved top modes into the lower-mode field.
    pub fn into_function(self, x: &[Vector2<C>]) -> DGFunction {
        let mut f = self.lower;
        let k = f.k();
        for (j, xj) in x.iter().enumerate() {
            let c = f.cell_mut(j);
            c[k - 1] = xj[0];
            c[k] = xj[1];
        }
        f
    }
}

fn lower_traces(f: &DGFunction, j: usize, side: f64) -> Vector2<C> {
    let k = f.k();
    let s = 2.0 / f.mesh().cell_size(j);
    let c = f.cell(j);
    let mut v = Vector2::new(C::new(0.0, 0.0), C::new(0.0, 0.0));
    for (l, &g) in c.iter().enumerate().take(k - 1) {
        v[0] += g * Basis::end_value(l, side);
        v[1] += g * (s * Basis::end_deriv(l, side));
    }
    v
}

/// Assembles `(A, B)` and the right-hand side, including the corrections
/// from the L2 modes `l <= k - 2` of both neighbouring cells.
pub fn assemble_global_system(
    u: &SmoothFunction,
    p: &FluxParams,
    mesh: &Arc<Mesh1D>,
    k: usize,
) -> Result<GlobalSystem> {
    let r = p.as_real()?;
    if !mesh.is_uniform() {
        return Err(Error::InvalidMesh(
            "the global projection needs a uniform mesh".into(),
        ));
    }
    let h = mesh.h();
    let (a, b) = assemble_interface_blocks(&r, k, h)?;
    let basis = Basis::new(k)?;
    let mut lower = DGFunction::zeros(mesh.clone(), k);
    if k >= 2 {
        fill_l2_modes(&mut lower, u, &basis, k - 2);
    }
    let wm = minus_weights(&r).map(|x| C::new(x, 0.0));
    let wp = plus_weights(&r).map(|x| C::new(x, 0.0));
    let n = mesh.n_cells();
    let rhs = (0..n)
        .map(|j| {
            let x = mesh.right(j);
            let data = Vector2::new(u.value(x), u.derivative(x));
            data - wm * lower_traces(&lower, j, 1.0) - wp * lower_traces(&lower, (j + 1) % n, -1.0)
        })
        .collect();
    Ok(GlobalSystem { a, b, n, rhs, lower })
}

/// `circ(A, B, 0, ..., 0) x`.
pub fn apply_circulant(a: &Matrix2<f64>, b: &Matrix2<f64>, x: &[Vector2<C>]) -> Vec<Vector2<C>> {
    let n = x.len();
    let ac = a.map(|v| C::new(v, 0.0));
    let bc = b.map(|v| C::new(v, 0.0));
    (0..n).map(|j| ac * x[j] + bc * x[(j + 1) % n]).collect()
}

/// Unit null vector of a singular 2x2 matrix.
fn null_vector(m: &Matrix2<C>) -> Vector2<C> {
    let r0 = Vector2::new(-m[(0, 1)], m[(0, 0)]);
    let r1 = Vector2::new(-m[(1, 1)], m[(1, 0)]);
    let v = if r0.norm() >= r1.norm() { r0 } else { r1 };
    v / C::new(v.norm(), 0.0)
}

/// Solves `circ(A, B, 0, ..., 0) x = rhs`.
///
/// The inverse is `circ(r_0, ..., r_{N-1}) A^{-1}` with
/// `r_j = Q^j (I - Q^N)^{-1}` and `Q = -A^{-1} B`. With distinct eigenvalues
/// `lambda_s lambda_l = 1`, `|lambda_s| <= 1`, this is applied in the
/// eigenbasis of the pencil `lambda A + B`: writing
/// `x_m = a_m v_s + b_m v_l` and `f_m = A v_s g_m + B v_l h_m` gives
/// `a_m = sum_j d^j g_{m+j}` and `b_m = sum_j d^j h_{m-1-j}` with
/// `d^j = lambda_s^j / (1 - lambda_s^N)`. Only decaying powers appear and
/// `A^{-1}`, which blows up near the local family, is never formed.
/// A repeated eigenvalue uses the Jordan form of `Q`.
pub fn solve_structured(
    a: &Matrix2<f64>,
    b: &Matrix2<f64>,
    n: usize,
    rhs: &[Vector2<C>],
    d: &ProjectionDiagnostics,
) -> Result<Vec<Vector2<C>>> {
    if rhs.len() != n {
        return Err(Error::InvalidArgument(format!(
            "rhs has {} blocks, expected {n}",
            rhs.len()
        )));
    }
    if !d.exists {
        return Err(Error::NonExistent(
            d.note.clone().unwrap_or_else(|| format!("{} verdict", d.case)),
        ));
    }
    let ac = a.map(|v| C::new(v, 0.0));
    let bc = b.map(|v| C::new(v, 0.0));
    let one = C::new(1.0, 0.0);
    match d.case {
        ProjectionCase::Case1 | ProjectionCase::Case3 => {
            let (l1, l2) = (d.lambda1, d.lambda2);
            let (ls, ll) = if l1.norm() <= l2.norm() {
                (l1, l2)
            } else {
                (l2, l1)
            };
            let ln = ls.powu(n as u32);
            let gap = (one - ln).norm();
            if gap < COND_TOL {
                return Err(Error::IllConditioned(format!(
                    "|1 - lambda^N| = {gap:.3e} for N = {n}"
                )));
            }
            let vs = null_vector(&(ac * ls + bc));
            let vl = null_vector(&(ac * ll + bc));
            let w = Matrix2::from_columns(&[ac * vs, bc * vl]);
            let winv = w.try_inverse().ok_or_else(|| {
                Error::IllConditioned("eigenvectors of the transfer matrix coincide".into())
            })?;
            let gh: Vec<Vector2<C>> = rhs.iter().map(|f| winv * f).collect();
            let dpow: Vec<C> = (0..n).map(|j| ls.powu(j as u32) / (one - ln)).collect();
            let x = (0..n)
                .into_par_iter()
                .map(|m| {
                    let mut am = C::new(0.0, 0.0);
                    let mut bm = C::new(0.0, 0.0);
                    for (j, &dj) in dpow.iter().enumerate() {
                        am += dj * gh[(m + j) % n][0];
                        bm += dj * gh[(m + 2 * n - 1 - j) % n][1];
                    }
                    vs * am + vl * bm
                })
                .collect();
            Ok(x)
        }
        ProjectionCase::Case2 => {
            let ainv = ac
                .try_inverse()
                .ok_or_else(|| Error::Singular("interface block A is singular".into()))?;
            let id = Matrix2::<C>::identity();
            // Q = -I + E with E nilpotent
            let e = -ainv * bc + id;
            let r: Vec<Matrix2<C>> = (0..n)
                .map(|j| {
                    let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                    (id * C::new(0.5, 0.0) - e * C::new((2.0 * j as f64 - n as f64) / 4.0, 0.0))
                        * C::new(sign, 0.0)
                })
                .collect();
            let g: Vec<Vector2<C>> = rhs.iter().map(|f| ainv * f).collect();
            let x = (0..n)
                .into_par_iter()
                .map(|m| {
                    let mut acc = Vector2::new(C::new(0.0, 0.0), C::new(0.0, 0.0));
                    for (j, rj) in r.iter().enumerate() {
                        acc += rj * g[(m + j) % n];
                    }
                    acc
                })
                .collect();
            Ok(x)
        }
        ProjectionCase::Local => Err(Error::LocalDegenerate),
    }
}

/// Dense pivoted-LU solve of the materialized block-circulant matrix.
pub fn dense_oracle(
    a: &Matrix2<f64>,
    b: &Matrix2<f64>,
    n: usize,
    rhs: &[Vector2<C>],
) -> Result<Vec<Vector2<C>>> {
    dense_oracle_with_cap(a, b, n, rhs, DENSE_CAP)
}

pub fn dense_oracle_with_cap(
    a: &Matrix2<f64>,
    b: &Matrix2<f64>,
    n: usize,
    rhs: &[Vector2<C>],
    cap: usize,
) -> Result<Vec<Vector2<C>>> {
    let dim = 2 * n;
    if dim > cap {
        return Err(Error::InvalidArgument(format!(
            "dense oracle limited to {cap} unknowns, got {dim}"
        )));
    }
    if rhs.len() != n {
        return Err(Error::InvalidArgument(format!(
            "rhs has {} blocks, expected {n}",
            rhs.len()
        )));
    }
    let mut m = DMatrix::<f64>::zeros(dim, dim);
    for j in 0..n {
        let jn = (j + 1) % n;
        for r in 0..2 {
            for c in 0..2 {
                m[(2 * j + r, 2 * j + c)] += a[(r, c)];
                m[(2 * j + r, 2 * jn + c)] += b[(r, c)];
            }
        }
    }
    let lu = m.lu();
    let u = lu.u();
    let diag: Vec<f64> = (0..dim).map(|i| u[(i, i)].abs()).collect();
    let dmax = diag.iter().cloned().fold(0.0, f64::max);
    let dmin = diag.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(dmin > 1e-10 * dmax) {
        return Err(Error::Singular(format!(
            "block-circulant matrix is singular (pivot ratio {:.3e})",
            dmin / dmax
        )));
    }
    let mut b2 = DMatrix::<f64>::zeros(dim, 2);
    for (j, v) in rhs.iter().enumerate() {
        for r in 0..2 {
            b2[(2 * j + r, 0)] = v[r].re;
            b2[(2 * j + r, 1)] = v[r].im;
        }
    }
    let sol = lu
        .solve(&b2)
        .ok_or_else(|| Error::Singular("zero pivot in dense solve".into()))?;
    Ok((0..n)
        .map(|j| {
            Vector2::new(
                C::new(sol[(2 * j, 0)], sol[(2 * j, 1)]),
                C::new(sol[(2 * j + 1, 0)], sol[(2 * j + 1, 1)]),
            )
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::diagnose;
    use std::f64::consts::PI;

    fn random_blocks(n: usize, seed: u64) -> Vec<Vector2<C>> {
        let mut s = seed;
        let mut next = || {
            s = s
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        (0..n)
            .map(|_| Vector2::new(C::new(next(), next()), C::new(next(), next())))
            .collect()
    }

    fn max_diff(x: &[Vector2<C>], y: &[Vector2<C>]) -> f64 {
        x.iter()
            .zip(y)
            .map(|(a, b)| (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max))
            .fold(0.0, f64::max)
    }

    fn max_abs(x: &[Vector2<C>]) -> f64 {
        x.iter()
            .flat_map(|a| a.iter().map(|z| z.norm()))
            .fold(0.0, f64::max)
    }

    #[test]
    fn structured_matches_dense_small() {
        let cases = [
            (FluxParams::central(), 1, 3),
            (FluxParams::central(), 1, 7),
            (FluxParams::central(), 2, 8),
            (FluxParams::real(0.25, 2.0, 0.01), 3, 10),
            (FluxParams::real(0.25, -30.0, 0.005), 2, 12),
        ];
        for (p, k, n) in cases {
            let h = 2.0 * PI / n as f64;
            let r = p.as_real().unwrap();
            let (a, b) = assemble_interface_blocks(&r, k, h).unwrap();
            let d = diagnose(&p, k, h, n).unwrap();
            assert!(d.exists, "{p:?} {k} {n}");
            let rhs = random_blocks(n, 7 + n as u64);
            let xs = solve_structured(&a, &b, n, &rhs, &d).unwrap();
            let xd = dense_oracle(&a, &b, n, &rhs).unwrap();
            assert!(max_diff(&xs, &xd) <= 1e-10 * max_abs(&xd), "{:?} {k} {n}", d.case);
            let back = apply_circulant(&a, &b, &xs);
            assert!(max_diff(&back, &rhs) <= 1e-10 * max_abs(&rhs));
        }
    }

    #[test]
    fn dense_detects_singularity() {
        let id = Matrix2::identity();
        let rhs = random_blocks(2, 1);
        assert!(matches!(dense_oracle(&id, &id, 2, &rhs), Err(Error::Singular(_))));
        let r = FluxParams::central().as_real().unwrap();
        let h = 2.0 * PI / 10.0;
        let (a, b) = assemble_interface_blocks(&r, 1, h).unwrap();
        let rhs = random_blocks(10, 3);
        assert!(matches!(dense_oracle(&a, &b, 10, &rhs), Err(Error::Singular(_))));
        assert!(dense_oracle_with_cap(&a, &b, 10, &rhs, 8).is_err());
    }

    #[test]
    fn constant_is_reproduced() {
        let m = Arc::new(Mesh1D::uniform(0.0, 2.0 * PI, 9).unwrap());
        let u = SmoothFunction::constant(C::new(1.0, 0.0));
        let sys = assemble_global_system(&u, &FluxParams::central(), &m, 1).unwrap();
        for f in &sys.rhs {
            assert!((f[0] - C::new(1.0, 0.0)).norm() < 1e-15 && f[1].norm() < 1e-15);
        }
        let d = diagnose(&FluxParams::central(), 1, m.h(), 9).unwrap();
        let x = solve_structured(&sys.a, &sys.b, 9, &sys.rhs, &d).unwrap();
        let f = sys.into_function(&x);
        for j in 0..9 {
            assert!((f.cell(j)[0] - C::new(1.0, 0.0)).norm() < 1e-12);
            assert!(f.cell(j)[1].norm() < 1e-12);
        }
    }

    #[test]
    fn rejects_graded_mesh() {
        let m = Arc::new(Mesh1D::graded(0.0, 2.0 * PI, 10, 1.5).unwrap());
        let r = assemble_global_system(&SmoothFunction::cos(), &FluxParams::central(), &m, 2);
        assert!(matches!(r, Err(Error::InvalidMesh(_))));
    }
}
