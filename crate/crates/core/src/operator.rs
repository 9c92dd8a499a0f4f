//! Semi-discrete ultra-weak DG system `d/dt c = L c + N(c)` for
//! `i u_t + u_xx + f(|u|^2) u = 0` on a periodic mesh.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::basis::Basis;
use crate::error::{Error, Result};
use crate::field::DGFunction;
use crate::flux::FluxParams;
use crate::mesh::Mesh1D;

type C = Complex64;

/// Linear part `L` of the modal system, stored as periodic block-tridiagonal
/// `(k+1) x (k+1)` blocks with the inverse mass matrix folded in.
///
/// Row block `j` reads `(L c)_j = sub_j c_{j-1} + diag_j c_j + sup_j c_{j+1}`.
#[derive(Debug, Clone)]
pub struct LinearOperator {
    mesh: Arc<Mesh1D>,
    k: usize,
    params: FluxParams,
    sub: Vec<DMatrix<C>>,
    diag: Vec<DMatrix<C>>,
    sup: Vec<DMatrix<C>>,
}

/// Interface weights of `hat u` and `tilde u_x` on the traces of the cell on
/// the minus side (`side = 1`) or the plus side (`side = -1`).
fn flux_rows(p: &FluxParams, k: usize, h: f64, side: f64) -> (Vec<C>, Vec<C>) {
    let s = 2.0 / h;
    let half = C::new(0.5, 0.0);
    (0..=k)
        .map(|m| {
            let v = Basis::end_value(m, side);
            let d = s * Basis::end_deriv(m, side);
            if side > 0.0 {
                (
                    (half - p.alpha2) * v - p.beta2 * d,
                    (half - p.alpha1) * d - p.beta1 * v,
                )
            } else {
                (
                    (half + p.alpha2) * v + p.beta2 * d,
                    (half + p.alpha1) * d + p.beta1 * v,
                )
            }
        })
        .unzip()
}

/// Assembles `L` for the flux `p`.
pub fn assemble_linear(p: &FluxParams, mesh: &Arc<Mesh1D>, k: usize) -> Result<LinearOperator> {
    let n = mesh.n_cells();
    if n < 3 {
        return Err(Error::InvalidMesh(format!(
            "the operator needs at least 3 cells, got {n}"
        )));
    }
    let basis = Basis::new(k)?;
    let m = k + 1;
    let mut sub = Vec::with_capacity(n);
    let mut diag = Vec::with_capacity(n);
    let mut sup = Vec::with_capacity(n);
    for j in 0..n {
        let hj = mesh.cell_size(j);
        let hl = mesh.cell_size(j + n - 1);
        let hr = mesh.cell_size(j + 1);
        let s = 2.0 / hj;
        let (hat_m_self, til_m_self) = flux_rows(p, k, hj, 1.0);
        let (hat_p_self, til_p_self) = flux_rows(p, k, hj, -1.0);
        let (hat_p_right, til_p_right) = flux_rows(p, k, hr, -1.0);
        let (hat_m_left, til_m_left) = flux_rows(p, k, hl, 1.0);
        let mut bs = DMatrix::<C>::zeros(m, m);
        let mut bd = DMatrix::<C>::zeros(m, m);
        let mut bu = DMatrix::<C>::zeros(m, m);
        for l in 0..m {
            // -hat u (v_x)^- + tilde u_x v^- at x_{j+1/2}
            let th_r = -s * Basis::end_deriv(l, 1.0);
            let tt_r = Basis::end_value(l, 1.0);
            // +hat u (v_x)^+ - tilde u_x v^+ at x_{j-1/2}
            let th_l = s * Basis::end_deriv(l, -1.0);
            let tt_l = -Basis::end_value(l, -1.0);
            let scale = C::new(0.0, (2 * l + 1) as f64 / hj);
            for mm in 0..m {
                let d = th_r * hat_m_self[mm]
                    + tt_r * til_m_self[mm]
                    + th_l * hat_p_self[mm]
                    + tt_l * til_p_self[mm]
                    + s * basis.stiff2(l, mm);
                bd[(l, mm)] = scale * d;
                bu[(l, mm)] = scale * (th_r * hat_p_right[mm] + tt_r * til_p_right[mm]);
                bs[(l, mm)] = scale * (th_l * hat_m_left[mm] + tt_l * til_m_left[mm]);
            }
        }
        sub.push(bs);
        diag.push(bd);
        sup.push(bu);
    }
    Ok(LinearOperator {
        mesh: mesh.clone(),
        k,
        params: *p,
        sub,
        diag,
        sup,
    })
}

impl LinearOperator {
    pub fn mesh(&self) -> &Arc<Mesh1D> {
        &self.mesh
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn params(&self) -> &FluxParams {
        &self.params
    }

    pub fn n_cells(&self) -> usize {
        self.diag.len()
    }

    /// Number of unknowns `N (k + 1)`.
    pub fn dim(&self) -> usize {
        self.n_cells() * (self.k + 1)
    }

    pub fn sub(&self, j: usize) -> &DMatrix<C> {
        &self.sub[j]
    }

    pub fn diag(&self, j: usize) -> &DMatrix<C> {
        &self.diag[j]
    }

    pub fn sup(&self, j: usize) -> &DMatrix<C> {
        &self.sup[j]
    }

    /// `L c` on a flat coefficient vector.
    pub fn apply(&self, c: &[C]) -> Vec<C> {
        let m = self.k + 1;
        let n = self.n_cells();
        assert_eq!(c.len(), n * m, "coefficient vector has the wrong length");
        let mut out = vec![C::new(0.0, 0.0); n * m];
        for_each_cell(&mut out, m, |j, o| {
            let l = (j + n - 1) % n;
            let r = (j + 1) % n;
            for (row, oi) in o.iter_mut().enumerate() {
                let mut s = C::new(0.0, 0.0);
                for col in 0..m {
                    s += self.sub[j][(row, col)] * c[l * m + col]
                        + self.diag[j][(row, col)] * c[j * m + col]
                        + self.sup[j][(row, col)] * c[r * m + col];
                }
                *oi = s;
            }
        });
        out
    }

    /// Dense `N(k+1)` square matrix of `L`.
    pub fn to_dense(&self) -> DMatrix<C> {
        let m = self.k + 1;
        let n = self.n_cells();
        let mut a = DMatrix::<C>::zeros(n * m, n * m);
        for j in 0..n {
            let l = (j + n - 1) % n;
            let r = (j + 1) % n;
            for row in 0..m {
                for col in 0..m {
                    a[(j * m + row, l * m + col)] += self.sub[j][(row, col)];
                    a[(j * m + row, j * m + col)] += self.diag[j][(row, col)];
                    a[(j * m + row, r * m + col)] += self.sup[j][(row, col)];
                }
            }
        }
        a
    }

    /// `Re <M L c, c>`; the rate of change of the energy under `c' = L c` is
    /// twice this value.
    pub fn energy_form(&self, c: &[C]) -> f64 {
        let lc = self.apply(c);
        mass_inner(&self.mesh, self.k, &lc, c).re
    }
}

/// `<a, b>_M = sum conj(b) M a` with the diagonal mass matrix.
pub fn mass_inner(mesh: &Mesh1D, k: usize, a: &[C], b: &[C]) -> C {
    let m = k + 1;
    let mut s = C::new(0.0, 0.0);
    for j in 0..mesh.n_cells() {
        let hj = mesh.cell_size(j);
        for l in 0..m {
            let w = hj / (2 * l + 1) as f64;
            s += a[j * m + l] * b[j * m + l].conj() * w;
        }
    }
    s
}

/// The real function `f` of the nonlinearity `f(|u|^2) u`.
#[derive(Clone)]
pub struct NonlinearTerm {
    f: Option<Arc<dyn Fn(f64) -> f64 + Send + Sync>>,
    n_quad: Option<usize>,
}

impl fmt::Debug for NonlinearTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NonlinearTerm")
            .field("zero", &self.f.is_none())
            .field("n_quad", &self.n_quad)
            .finish()
    }
}

impl NonlinearTerm {
    pub fn new<F>(f: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            f: Some(Arc::new(f)),
            n_quad: None,
        }
    }

    /// `f = 0`, the linear equation.
    pub fn zero() -> Self {
        Self {
            f: None,
            n_quad: None,
        }
    }

    /// Quadrature points per cell; the default is `k + 3`.
    pub fn with_quadrature(mut self, n_quad: usize) -> Self {
        self.n_quad = Some(n_quad);
        self
    }

    pub fn is_zero(&self) -> bool {
        self.f.is_none()
    }

    pub fn eval(&self, s: f64) -> f64 {
        self.f.as_ref().map_or(0.0, |f| f(s))
    }
}

/// Modal right-hand side of the nonlinear term: `i f(|u|^2) u` tested
/// against each mode by quadrature and divided by the mass.
pub fn apply_nonlinear(state: &DGFunction, nt: &NonlinearTerm) -> Vec<C> {
    let k = state.k();
    if nt.is_zero() {
        return vec![C::new(0.0, 0.0); state.coeffs().len()];
    }
    let basis = nt.basis(k).expect("field degree is at least one");
    nonlinear_modes(state.coeffs(), k, nt, &basis)
}

impl NonlinearTerm {
    /// Quadrature basis used by [`nonlinear_modes`].
    pub fn basis(&self, k: usize) -> Result<Basis> {
        Basis::with_quadrature(k, self.n_quad.unwrap_or(k + 3))
    }
}

/// [`apply_nonlinear`] on a flat coefficient vector with a prepared basis.
pub fn nonlinear_modes(coeffs: &[C], k: usize, nt: &NonlinearTerm, basis: &Basis) -> Vec<C> {
    let m = k + 1;
    let mut out = vec![C::new(0.0, 0.0); coeffs.len()];
    if nt.is_zero() {
        return out;
    }
    for_each_cell(&mut out, m, |j, o| {
        let c = &coeffs[j * m..(j + 1) * m];
        for q in 0..basis.n_quad() {
            let phi = basis.phi(q);
            let u: C = c.iter().zip(phi).map(|(a, p)| a * p).sum();
            let g = u * nt.eval(u.norm_sqr()) * basis.quad_weights()[q];
            for (l, ol) in o.iter_mut().enumerate() {
                *ol += g * phi[l];
            }
        }
        for (l, ol) in o.iter_mut().enumerate() {
            *ol *= C::new(0.0, (2 * l + 1) as f64 / 2.0);
        }
    });
    out
}

// Small meshes stay serial: thread hand-off costs more than the work.
const PAR_CELLS: usize = 256;

fn for_each_cell<F>(out: &mut [C], m: usize, f: F)
where
    F: Fn(usize, &mut [C]) + Sync,
{
    if out.len() / m >= PAR_CELLS {
        out.par_chunks_mut(m).enumerate().for_each(|(j, o)| f(j, o));
    } else {
        out.chunks_mut(m).enumerate().for_each(|(j, o)| f(j, o));
    }
}

/// `∫ |u_h|^2 dx`.
pub fn energy(state: &DGFunction) -> f64 {
    state.l2_norm_squared()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::projection::{l2_project, SmoothFunction};
    use std::f64::consts::PI;

    fn mesh(n: usize) -> Arc<Mesh1D> {
        Arc::new(Mesh1D::uniform(0.0, 2.0 * PI, n).unwrap())
    }

    fn random_coeffs(len: usize, seed: u64) -> Vec<C> {
        let mut s = seed;
        let mut next = || {
            s = s
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        (0..len).map(|_| C::new(next(), next())).collect()
    }

    #[test]
    fn rejects_two_cells() {
        let m = Arc::new(Mesh1D::uniform(0.0, 1.0, 2).unwrap());
        assert!(assemble_linear(&FluxParams::central(), &m, 1).is_err());
    }

    #[test]
    fn consistency_with_second_derivative() {
        for (a1, b1, b2) in [(0.0, 0.0, 0.0), (0.25, 1.0, 1.0), (0.5, 0.0, 0.0)] {
            let u = SmoothFunction::plane_wave(1.0);
            let mut errs = vec![];
            for n in [20, 40] {
                let m = mesh(n);
                let h = m.h();
                let p = FluxParams::real(a1, b1 / h, b2 * h);
                let k = 3;
                let f = l2_project(&u, &m, k).unwrap();
                let op = assemble_linear(&p, &m, k).unwrap();
                let lc = op.apply(f.coeffs());
                // i u_xx = -i u for e^{ix}
                let target: Vec<C> = f.coeffs().iter().map(|c| c * C::new(0.0, -1.0)).collect();
                let diff: Vec<C> = lc.iter().zip(&target).map(|(a, b)| a - b).collect();
                errs.push(mass_inner(&m, k, &diff, &diff).re.sqrt());
            }
            // projection jumps are O(h^{k+1}), divided by h^2 in the fluxes
            assert!((errs[0] / errs[1]).log2() > 1.8, "{errs:?}");
        }
    }

    #[test]
    fn star_projection_is_exactly_consistent() {
        use crate::projection::project_star;
        for (k, a1, b1, b2) in [(1, 0.0, 0.0, 0.0), (2, 0.25, 1.0, 1.0), (3, 0.0, 0.0, 0.0)] {
            let u = SmoothFunction::plane_wave(2.0);
            let mut errs = vec![];
            for n in [21, 41] {
                let m = mesh(n);
                let h = m.h();
                let p = FluxParams::real(a1, b1 / h, b2 * h);
                let f = project_star(&u, &p, &m, k).unwrap();
                let op = assemble_linear(&p, &m, k).unwrap();
                let lc = op.apply(f.coeffs());
                let target: Vec<C> = f.coeffs().iter().map(|c| c * C::new(0.0, -4.0)).collect();
                let diff: Vec<C> = lc.iter().zip(&target).map(|(a, b)| a - b).collect();
                errs.push(mass_inner(&m, k, &diff, &diff).re.sqrt());
            }
            let rate = (errs[0] / errs[1]).ln() / (41.0f64 / 21.0).ln();
            assert!(rate > k as f64 + 0.8, "k={k} {errs:?} {rate}");
        }
    }

    #[test]
    fn conservative_form_vanishes() {
        let m = Arc::new(Mesh1D::graded(0.0, 2.0 * PI, 17, 1.4).unwrap());
        for p in [
            FluxParams::central(),
            FluxParams::alternating(1.0),
            FluxParams::real(0.25, 1.0, 1.0),
            FluxParams::real(-0.1, 3.0, -0.2),
        ] {
            let op = assemble_linear(&p, &m, 3).unwrap();
            for seed in 0..20 {
                let c = random_coeffs(op.dim(), seed);
                let scale = mass_inner(&m, 3, &op.apply(&c), &op.apply(&c)).re.sqrt()
                    * mass_inner(&m, 3, &c, &c).re.sqrt();
                assert!(op.energy_form(&c).abs() <= 1e-11 * scale);
            }
        }
    }

    #[test]
    fn dissipative_form_is_negative() {
        let p = FluxParams::new(
            C::new(0.25, 0.0),
            C::new(-0.25, 0.0),
            C::new(1.0, -1.0),
            C::new(1.0, 1.0),
        );
        let m = mesh(12);
        let op = assemble_linear(&p, &m, 2).unwrap();
        for seed in 0..20 {
            let c = random_coeffs(op.dim(), seed);
            assert!(op.energy_form(&c) <= 1e-12);
        }
    }

    #[test]
    fn stencil_is_nearest_neighbour() {
        let op = assemble_linear(&FluxParams::real(0.3, 1.0, 0.5), &mesh(6), 1).unwrap();
        let d = op.to_dense();
        for row in 0..d.nrows() {
            for col in 0..d.ncols() {
                let (cr, cc) = (row / 2, col / 2);
                let dist = (cr as i64 - cc as i64)
                    .rem_euclid(6)
                    .min((cc as i64 - cr as i64).rem_euclid(6));
                if dist > 1 {
                    assert_eq!(d[(row, col)], C::new(0.0, 0.0));
                }
            }
        }
    }

    #[test]
    fn nonlinear_term() {
        let m = mesh(8);
        let mut f = DGFunction::zeros(m.clone(), 2);
        for j in 0..8 {
            f.cell_mut(j)[0] = C::new(0.5, 0.2);
        }
        let z = apply_nonlinear(&f, &NonlinearTerm::zero());
        assert!(z.iter().all(|x| *x == C::new(0.0, 0.0)));
        let r = apply_nonlinear(&f, &NonlinearTerm::new(|_| 3.0));
        for j in 0..8 {
            assert!((r[j * 3] - C::new(0.0, 3.0) * C::new(0.5, 0.2)).norm() < 1e-14);
            assert!(r[j * 3 + 1].norm() < 1e-14);
        }
        // on |u| = 1 data, f(s) = s + s^2 is 2
        let u = SmoothFunction::plane_wave(1.0);
        let g = l2_project(&u, &mesh(64), 3).unwrap();
        let a = apply_nonlinear(&g, &NonlinearTerm::new(|s| s + s * s));
        let b: Vec<C> = g.coeffs().iter().map(|c| c * C::new(0.0, 2.0)).collect();
        let diff = a.iter().zip(&b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        assert!(diff < 1e-6, "{diff}");
    }

    #[test]
    fn energy_of_fields() {
        let m = mesh(40);
        let mut f = DGFunction::zeros(m.clone(), 2);
        for j in 0..40 {
            f.cell_mut(j)[0] = C::new(1.0, 0.0);
        }
        assert!((energy(&f) - 2.0 * PI).abs() < 1e-12);
        for c in f.coeffs_mut() {
            *c *= 2.0;
        }
        assert!((energy(&f) - 8.0 * PI).abs() < 1e-11);
        let w = l2_project(&SmoothFunction::plane_wave(1.0), &m, 2).unwrap();
        assert!((energy(&w) - 2.0 * PI).abs() < 1e-5);
    }
}
