//! Legendre modal basis on the reference element `[-1, 1]` and Gauss–Legendre
//! quadrature.

use crate::error::{Error, Result};

/// `P_l(xi)` by the three-term recurrence.
pub fn legendre_eval(l: usize, xi: f64) -> f64 {
    legendre_all(l, xi)[l]
}

/// `P_l'(xi)`.
pub fn legendre_deriv(l: usize, xi: f64) -> f64 {
    legendre_with_derivs(l, xi).1[l]
}

/// `P_l''(xi)`.
pub fn legendre_deriv2(l: usize, xi: f64) -> f64 {
    legendre_with_derivs(l, xi).2[l]
}

/// Values `P_0(xi) ..= P_l(xi)`.
pub fn legendre_all(l: usize, xi: f64) -> Vec<f64> {
    let mut p = Vec::with_capacity(l + 1);
    p.push(1.0);
    if l >= 1 {
        p.push(xi);
    }
    for m in 1..l {
        let mf = m as f64;
        p.push(((2.0 * mf + 1.0) * xi * p[m] - mf * p[m - 1]) / (mf + 1.0));
    }
    p
}

/// Values, first and second derivatives of `P_0 ..= P_l` at `xi`.
///
/// Derivatives come from differentiating the recurrence, so the endpoints
/// `xi = ±1` need no special case.
pub fn legendre_with_derivs(l: usize, xi: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let p = legendre_all(l, xi);
    let mut d = vec![0.0; l + 1];
    let mut d2 = vec![0.0; l + 1];
    if l >= 1 {
        d[1] = 1.0;
    }
    for m in 1..l {
        let mf = m as f64;
        let a = 2.0 * mf + 1.0;
        d[m + 1] = (a * (p[m] + xi * d[m]) - mf * d[m - 1]) / (mf + 1.0);
        d2[m + 1] = (a * (2.0 * d[m] + xi * d2[m]) - mf * d2[m - 1]) / (mf + 1.0);
    }
    (p, d, d2)
}

/// Gauss–Legendre nodes (ascending) and weights on `[-1, 1]`.
pub fn gauss_nodes(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "Gauss rule needs at least one node".into(),
        ));
    }
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        // Chebyshev-like initial guess for the i-th largest root
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d, _) = legendre_with_derivs(n, x);
            dp = d[n];
            let dx = p[n] / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d, _) = legendre_with_derivs(n, x);
        dp = if d[n] != 0.0 { d[n] } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Ok((nodes, weights))
}

/// Degree-`k` modal basis with tabulated values at the quadrature nodes.
#[derive(Debug, Clone)]
pub struct Basis {
    k: usize,
    quad_nodes: Vec<f64>,
    quad_weights: Vec<f64>,
    /// `phi[q][l] = P_l(xi_q)`
    phi: Vec<Vec<f64>>,
    /// `dphi[q][l] = P_l'(xi_q)`
    dphi: Vec<Vec<f64>>,
    /// `stiff2[l][m] = ∫ P_m P_l'' dxi`
    stiff2: Vec<Vec<f64>>,
}

impl Basis {
    /// Basis with the default `k + 3` point rule.
    pub fn new(k: usize) -> Result<Self> {
        Self::with_quadrature(k, k + 3)
    }

    pub fn with_quadrature(k: usize, n_quad: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidArgument(
                "degree k must be at least 1 (k = 0 gives an inconsistent scheme)".into(),
            ));
        }
        let (quad_nodes, quad_weights) = gauss_nodes(n_quad)?;
        let mut phi = Vec::with_capacity(n_quad);
        let mut dphi = Vec::with_capacity(n_quad);
        let mut d2phi = Vec::with_capacity(n_quad);
        for &x in &quad_nodes {
            let (p, d, d2) = legendre_with_derivs(k, x);
            phi.push(p);
            dphi.push(d);
            d2phi.push(d2);
        }
        let mut stiff2 = vec![vec![0.0; k + 1]; k + 1];
        for (l, row) in stiff2.iter_mut().enumerate() {
            for (m, s) in row.iter_mut().enumerate() {
                *s = (0..n_quad)
                    .map(|q| quad_weights[q] * phi[q][m] * d2phi[q][l])
                    .sum();
            }
        }
        Ok(Self {
            k,
            quad_nodes,
            quad_weights,
            phi,
            dphi,
            stiff2,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n_modes(&self) -> usize {
        self.k + 1
    }

    pub fn n_quad(&self) -> usize {
        self.quad_nodes.len()
    }

    pub fn quad_nodes(&self) -> &[f64] {
        &self.quad_nodes
    }

    pub fn quad_weights(&self) -> &[f64] {
        &self.quad_weights
    }

    pub fn phi(&self, q: usize) -> &[f64] {
        &self.phi[q]
    }

    pub fn dphi(&self, q: usize) -> &[f64] {
        &self.dphi[q]
    }

    pub fn stiff2(&self, l: usize, m: usize) -> f64 {
        self.stiff2[l][m]
    }

    /// `∫_{-1}^{1} P_l^2 dxi = 2 / (2l + 1)`.
    pub fn norm2(l: usize) -> f64 {
        2.0 / (2 * l + 1) as f64
    }

    /// `P_l(±1)`.
    pub fn end_value(l: usize, side: f64) -> f64 {
        if side > 0.0 || l % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// `P_l'(±1) = ½ (±1)^{l-1} l (l+1)`.
    pub fn end_deriv(l: usize, side: f64) -> f64 {
        let s = if side > 0.0 || l % 2 == 1 { 1.0 } else { -1.0 };
        0.5 * s * (l * (l + 1)) as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoint_identities() {
        assert_eq!(legendre_eval(3, 1.0), 1.0);
        assert_eq!(legendre_eval(3, -1.0), -1.0);
        assert!((legendre_deriv(2, -1.0) + 3.0).abs() < 1e-15);
        assert!((legendre_eval(1, 0.3) - 0.3).abs() < 1e-16);
        for l in 0..=10 {
            for s in [-1.0, 1.0] {
                assert!((legendre_eval(l, s) - Basis::end_value(l, s)).abs() < 1e-13);
                assert!((legendre_deriv(l, s) - Basis::end_deriv(l, s)).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn second_derivative_matches_closed_forms() {
        // P_3 = (5 xi^3 - 3 xi)/2, P_3'' = 15 xi
        assert!((legendre_deriv2(3, 0.4) - 6.0).abs() < 1e-14);
        // P_2'' = 3
        assert!((legendre_deriv2(2, -0.7) - 3.0).abs() < 1e-14);
    }

    #[test]
    fn small_gauss_rules() {
        let (x, w) = gauss_nodes(1).unwrap();
        assert_eq!(x, vec![0.0]);
        assert!((w[0] - 2.0).abs() < 1e-15);
        let (x, w) = gauss_nodes(2).unwrap();
        let r = 1.0 / 3f64.sqrt();
        assert!((x[0] + r).abs() < 1e-15 && (x[1] - r).abs() < 1e-15);
        assert!((w[0] - 1.0).abs() < 1e-15 && (w[1] - 1.0).abs() < 1e-15);
        assert!(gauss_nodes(0).is_err());
    }

    #[test]
    fn gauss_exactness() {
        let (x, w) = gauss_nodes(4).unwrap();
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(6)).sum();
        assert!((s - 2.0 / 7.0).abs() < 1e-15);
        for n in 1..=12 {
            let (x, w) = gauss_nodes(n).unwrap();
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13);
            for d in 0..(2 * n) {
                let exact = if d % 2 == 1 { 0.0 } else { 2.0 / (d as f64 + 1.0) };
                let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(d as i32)).sum();
                assert!((s - exact).abs() < 1e-13, "n={n} d={d}");
            }
        }
    }

    #[test]
    fn orthogonality() {
        let b = Basis::with_quadrature(6, 9).unwrap();
        for l in 0..=6 {
            for m in 0..=6 {
                let s: f64 = (0..b.n_quad())
                    .map(|q| b.quad_weights()[q] * b.phi(q)[l] * b.phi(q)[m])
                    .sum();
                let e = if l == m { Basis::norm2(l) } else { 0.0 };
                assert!((s - e).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn second_derivative_stiffness() {
        // ∫ P_m P_l'' = P_m P_l' |  - ∫ P_m' P_l' ; oracle by integration by parts
        let b = Basis::new(4).unwrap();
        for l in 0..=4 {
            for m in 0..=4 {
                let bd = Basis::end_value(m, 1.0) * Basis::end_deriv(l, 1.0)
                    - Basis::end_value(m, -1.0) * Basis::end_deriv(l, -1.0);
                let inner: f64 = (0..b.n_quad())
                    .map(|q| b.quad_weights()[q] * b.dphi(q)[m] * b.dphi(q)[l])
                    .sum();
                assert!((b.stiff2(l, m) - (bd - inner)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_degree_zero() {
        assert!(Basis::new(0).is_err());
    }
}
