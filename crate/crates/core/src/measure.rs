//! Error norms and observed convergence orders.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::basis::Basis;
use crate::field::DGFunction;
use crate::projection::SmoothFunction;

/// L1, L2 and L-infinity norms of `u_h - u` over the whole domain.
///
/// Integrals use `k + 3` Gauss points per cell; the maximum is taken over
/// the same points and the cell endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub l1: f64,
    pub l2: f64,
    pub linf: f64,
}

/// Observed orders between two consecutive meshes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderTriple {
    pub l1: f64,
    pub l2: f64,
    pub linf: f64,
}

pub fn measure_error(f: &DGFunction, u: &SmoothFunction) -> ErrorReport {
    measure_error_with(f, |x| u.value(x))
}

/// Same as [`measure_error`] against an arbitrary exact solution.
pub fn measure_error_with<F>(f: &DGFunction, exact: F) -> ErrorReport
where
    F: Fn(f64) -> Complex64,
{
    let mesh = f.mesh();
    let k = f.k();
    let basis = Basis::new(k).expect("field degree is at least one");
    let (mut l1, mut l2, mut linf) = (0.0, 0.0, 0.0f64);
    for j in 0..mesh.n_cells() {
        let half = 0.5 * mesh.cell_size(j);
        for (q, &xi) in basis.quad_nodes().iter().enumerate() {
            let e = (f.eval_in_cell(j, xi).0 - exact(mesh.map_to_cell(j, xi))).norm();
            let w = half * basis.quad_weights()[q];
            l1 += w * e;
            l2 += w * e * e;
            linf = linf.max(e);
        }
        for xi in [-1.0, 1.0] {
            let e = (f.eval_in_cell(j, xi).0 - exact(mesh.map_to_cell(j, xi))).norm();
            linf = linf.max(e);
        }
    }
    ErrorReport {
        l1,
        l2: l2.sqrt(),
        linf,
    }
}

fn rate(e0: f64, e1: f64, h0: f64, h1: f64) -> f64 {
    (e0 / e1).ln() / (h0 / h1).ln()
}

/// Orders `log(e_i / e_{i+1}) / log(h_i / h_{i+1})` between consecutive
/// entries of `(h, report)`.
pub fn measure_order(runs: &[(f64, ErrorReport)]) -> Vec<OrderTriple> {
    runs.windows(2)
        .map(|w| {
            let (h0, e0) = w[0];
            let (h1, e1) = w[1];
            OrderTriple {
                l1: rate(e0.l1, e1.l1, h0, h1),
                l2: rate(e0.l2, e1.l2, h0, h1),
                linf: rate(e0.linf, e1.linf, h0, h1),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Mesh1D;
    use std::f64::consts::PI;
    use std::sync::Arc;

    #[test]
    fn zero_error_for_exact_data() {
        let m = Arc::new(Mesh1D::uniform(0.0, 2.0 * PI, 6).unwrap());
        let f = DGFunction::zeros(m, 2);
        let e = measure_error_with(&f, |_| Complex64::new(0.0, 0.0));
        assert_eq!(
            e,
            ErrorReport {
                l1: 0.0,
                l2: 0.0,
                linf: 0.0
            }
        );
    }

    #[test]
    fn constant_error_norms() {
        let m = Arc::new(Mesh1D::uniform(0.0, 2.0 * PI, 6).unwrap());
        let f = DGFunction::zeros(m, 1);
        let e = measure_error_with(&f, |_| Complex64::new(0.0, 2.0));
        assert!((e.l1 - 4.0 * PI).abs() < 1e-12);
        assert!((e.l2 - 2.0 * (2.0 * PI).sqrt()).abs() < 1e-12);
        assert!((e.linf - 2.0).abs() < 1e-15);
    }

    #[test]
    fn orders_from_power_law() {
        let runs: Vec<(f64, ErrorReport)> = [0.1, 0.05, 1.0 / 60.0]
            .iter()
            .map(|&h: &f64| {
                (
                    h,
                    ErrorReport {
                        l1: h.powi(2),
                        l2: 3.0 * h.powi(3),
                        linf: h,
                    },
                )
            })
            .collect();
        let o = measure_order(&runs);
        assert_eq!(o.len(), 2);
        for t in o {
            assert!((t.l1 - 2.0).abs() < 1e-12);
            assert!((t.l2 - 3.0).abs() < 1e-12);
            assert!((t.linf - 1.0).abs() < 1e-12);
        }
    }
}
