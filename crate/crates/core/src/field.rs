use std::sync::Arc;

use num_complex::Complex64;

use crate::basis::{legendre_with_derivs, Basis};
use crate::error::{Error, Result};
use crate::mesh::Mesh1D;

/// One-sided traces at an interface: `(u-, u+, u_x-, u_x+)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Traces {
    pub u_minus: Complex64,
    pub u_plus: Complex64,
    pub ux_minus: Complex64,
    pub ux_plus: Complex64,
}

impl Traces {
    /// `[u] = u+ - u-`
    pub fn jump(&self) -> Complex64 {
        self.u_plus - self.u_minus
    }

    pub fn jump_x(&self) -> Complex64 {
        self.ux_plus - self.ux_minus
    }

    /// `{u} = (u+ + u-) / 2`
    pub fn average(&self) -> Complex64 {
        0.5 * (self.u_plus + self.u_minus)
    }

    pub fn average_x(&self) -> Complex64 {
        0.5 * (self.ux_plus + self.ux_minus)
    }
}

/// Piecewise polynomial of degree `k` stored as Legendre coefficients
/// `coeffs[j * (k + 1) + l] = gamma_{j,l}`.
#[derive(Debug, Clone)]
pub struct DGFunction {
    mesh: Arc<Mesh1D>,
    k: usize,
    coeffs: Vec<Complex64>,
}

impl DGFunction {
    pub fn zeros(mesh: Arc<Mesh1D>, k: usize) -> Self {
        let n = mesh.n_cells() * (k + 1);
        Self {
            mesh,
            k,
            coeffs: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    pub fn from_coeffs(mesh: Arc<Mesh1D>, k: usize, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != mesh.n_cells() * (k + 1) {
            return Err(Error::InvalidArgument(format!(
                "expected {} coefficients for N = {} and k = {k}, got {}",
                mesh.n_cells() * (k + 1),
                mesh.n_cells(),
                coeffs.len()
            )));
        }
        Ok(Self { mesh, k, coeffs })
    }

    pub fn mesh(&self) -> &Arc<Mesh1D> {
        &self.mesh
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n_modes(&self) -> usize {
        self.k + 1
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    /// Coefficients of cell `j`.
    pub fn cell(&self, j: usize) -> &[Complex64] {
        let m = self.k + 1;
        &self.coeffs[j * m..(j + 1) * m]
    }

    pub fn cell_mut(&mut self, j: usize) -> &mut [Complex64] {
        let m = self.k + 1;
        &mut self.coeffs[j * m..(j + 1) * m]
    }

    /// Value and derivative on cell `j` at reference point `xi`.
    pub fn eval_in_cell(&self, j: usize, xi: f64) -> (Complex64, Complex64) {
        let (p, d, _) = legendre_with_derivs(self.k, xi);
        let c = self.cell(j);
        let scale = 2.0 / self.mesh.cell_size(j);
        let mut u = Complex64::new(0.0, 0.0);
        let mut ux = Complex64::new(0.0, 0.0);
        for l in 0..=self.k {
            u += c[l] * p[l];
            ux += c[l] * d[l];
        }
        (u, ux * scale)
    }

    pub fn evaluate(&self, x: f64) -> Result<Complex64> {
        let (j, xi) = self.mesh.locate(x)?;
        Ok(self.eval_in_cell(j, xi).0)
    }

    pub fn evaluate_derivative(&self, x: f64) -> Result<Complex64> {
        let (j, xi) = self.mesh.locate(x)?;
        Ok(self.eval_in_cell(j, xi).1)
    }

    /// Traces at interface `i`, between cell `i - 1` (minus side) and cell `i`
    /// (plus side), with periodic wrap.
    pub fn traces(&self, i: usize) -> Traces {
        let n = self.mesh.n_cells();
        let right = i % n;
        let left = (i + n - 1) % n;
        let cl = self.cell(left);
        let cr = self.cell(right);
        let sl = 2.0 / self.mesh.cell_size(left);
        let sr = 2.0 / self.mesh.cell_size(right);
        let mut t = Traces {
            u_minus: Complex64::new(0.0, 0.0),
            u_plus: Complex64::new(0.0, 0.0),
            ux_minus: Complex64::new(0.0, 0.0),
            ux_plus: Complex64::new(0.0, 0.0),
        };
        for l in 0..=self.k {
            t.u_minus += cl[l] * Basis::end_value(l, 1.0);
            t.ux_minus += cl[l] * (Basis::end_deriv(l, 1.0) * sl);
            t.u_plus += cr[l] * Basis::end_value(l, -1.0);
            t.ux_plus += cr[l] * (Basis::end_deriv(l, -1.0) * sr);
        }
        t
    }

    /// Samples `(x, u)` at `p` uniformly spaced points per cell, including
    /// both cell endpoints.
    pub fn sample(&self, p: usize) -> Vec<(f64, Complex64)> {
        let p = p.max(2);
        let mut out = Vec::with_capacity(self.mesh.n_cells() * p);
        for j in 0..self.mesh.n_cells() {
            for s in 0..p {
                let xi = -1.0 + 2.0 * s as f64 / (p - 1) as f64;
                out.push((self.mesh.map_to_cell(j, xi), self.eval_in_cell(j, xi).0));
            }
        }
        out
    }

    /// `∫ |u|^2 dx` through the diagonal mass matrix.
    pub fn l2_norm_squared(&self) -> f64 {
        let m = self.k + 1;
        let mut s = 0.0;
        for j in 0..self.mesh.n_cells() {
            let hj = self.mesh.cell_size(j);
            for l in 0..m {
                s += 0.5 * hj * Basis::norm2(l) * self.coeffs[j * m + l].norm_sqr();
            }
        }
        s
    }
}
