//! Periodic one-dimensional cell partitions.
//!
//! Cells are indexed `0..N`; cell `j` spans `[interfaces[j], interfaces[j + 1]]`.
//! Interface `i` sits between cell `i - 1` and cell `i` (indices wrap modulo
//! `N`), so interface `N` is the same point as interface `0` on the periodic
//! domain.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Mesh1D {
    a: f64,
    b: f64,
    interfaces: Vec<f64>,
    cell_sizes: Vec<f64>,
    h: f64,
    sigma: f64,
    uniform: bool,
}

impl Mesh1D {
    /// Builds a mesh from an explicit list of interface points.
    pub fn from_interfaces(interfaces: Vec<f64>) -> Result<Self> {
        if interfaces.len() < 3 {
            return Err(Error::InvalidMesh(format!(
                "need at least two cells, got {} interfaces",
                interfaces.len()
            )));
        }
        if interfaces.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidMesh("non-finite interface".into()));
        }
        let cell_sizes: Vec<f64> = interfaces.windows(2).map(|w| w[1] - w[0]).collect();
        if cell_sizes.iter().any(|&hj| hj <= 0.0) {
            return Err(Error::InvalidMesh(
                "interfaces must be strictly increasing".into(),
            ));
        }
        let h = cell_sizes.iter().cloned().fold(0.0, f64::max);
        let hmin = cell_sizes.iter().cloned().fold(f64::INFINITY, f64::min);
        let sigma = h / hmin;
        let uniform = sigma - 1.0 <= 1e-12;
        Ok(Self {
            a: interfaces[0],
            b: *interfaces.last().unwrap(),
            interfaces,
            cell_sizes,
            h,
            sigma,
            uniform,
        })
    }

    /// Uniform partition of `[a, b]` into `n` cells.
    pub fn uniform(a: f64, b: f64, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidMesh(format!("need N >= 2 cells, got {n}")));
        }
        if !(b > a) {
            return Err(Error::InvalidMesh(format!("need b > a, got [{a}, {b}]")));
        }
        let h = (b - a) / n as f64;
        let mut interfaces: Vec<f64> = (0..=n).map(|i| a + i as f64 * h).collect();
        interfaces[n] = b;
        let cell_sizes = vec![h; n];
        Ok(Self {
            a,
            b,
            interfaces,
            cell_sizes,
            h,
            sigma: 1.0,
            uniform: true,
        })
    }

    /// Alternating two-size mesh with `max h_j / min h_j = ratio`.
    ///
    /// Even-indexed cells get the small size, odd-indexed cells the large one.
    pub fn graded(a: f64, b: f64, n: usize, ratio: f64) -> Result<Self> {
        if !(ratio >= 1.0) || !ratio.is_finite() {
            return Err(Error::InvalidMesh(format!("ratio must be >= 1, got {ratio}")));
        }
        if n < 2 {
            return Err(Error::InvalidMesh(format!("need N >= 2 cells, got {n}")));
        }
        if !(b > a) {
            return Err(Error::InvalidMesh(format!("need b > a, got [{a}, {b}]")));
        }
        if ratio == 1.0 {
            return Self::uniform(a, b, n);
        }
        let n_small = n.div_ceil(2);
        let n_large = n / 2;
        let small = (b - a) / (n_small as f64 + ratio * n_large as f64);
        let mut interfaces = Vec::with_capacity(n + 1);
        let mut x = a;
        interfaces.push(x);
        for j in 0..n {
            x += if j % 2 == 0 { small } else { small * ratio };
            interfaces.push(x);
        }
        interfaces[n] = b;
        Self::from_interfaces(interfaces)
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn length(&self) -> f64 {
        self.b - self.a
    }

    /// Number of cells `N`.
    pub fn n_cells(&self) -> usize {
        self.cell_sizes.len()
    }

    pub fn interfaces(&self) -> &[f64] {
        &self.interfaces
    }

    pub fn cell_sizes(&self) -> &[f64] {
        &self.cell_sizes
    }

    pub fn cell_size(&self, j: usize) -> f64 {
        self.cell_sizes[j % self.n_cells()]
    }

    /// Largest cell size.
    pub fn h(&self) -> f64 {
        self.h
    }

    /// Regularity constant `max h_j / min h_j`.
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn is_uniform(&self) -> bool {
        self.uniform
    }

    /// Left endpoint of cell `j`.
    pub fn left(&self, j: usize) -> f64 {
        self.interfaces[j % self.n_cells()]
    }

    /// Right endpoint of cell `j`.
    pub fn right(&self, j: usize) -> f64 {
        self.interfaces[j % self.n_cells() + 1]
    }

    pub fn center(&self, j: usize) -> f64 {
        0.5 * (self.left(j) + self.right(j))
    }

    /// Physical point of reference coordinate `xi` in cell `j`.
    pub fn map_to_cell(&self, j: usize, xi: f64) -> f64 {
        self.center(j) + 0.5 * self.cell_size(j) * xi
    }

    /// Cell containing `x` and the reference coordinate of `x` in it.
    /// Interior interfaces belong to the cell on their right; `b` belongs to
    /// the last cell.
    pub fn locate(&self, x: f64) -> Result<(usize, f64)> {
        if !(x >= self.a && x <= self.b) {
            return Err(Error::OutsideDomain {
                x,
                a: self.a,
                b: self.b,
            });
        }
        let n = self.n_cells();
        let j = match self.interfaces.binary_search_by(|p| p.partial_cmp(&x).unwrap()) {
            Ok(i) => i.min(n - 1),
            Err(i) => (i - 1).min(n - 1),
        };
        let xi = (2.0 * (x - self.center(j)) / self.cell_size(j)).clamp(-1.0, 1.0);
        Ok((j, xi))
    }
}
