//! Lattice field containers and the discrete Hitchin residuals.
//!
//! Site indices `(j, k)` are 1-based with `1 <= j <= n2` and
//! `1 <= k <= n1`; storage is 0-based, so site `(j, k)` lives at
//! `(j - 1, k - 1)`. In zero-padded mode `F` has extent `n2 x (n1 - 1)` and
//! `G` has extent `(n2 - 1) x n1`; in periodic mode both cover the full
//! `n2 x n1` torus.

mod gauge;
mod grid;
mod instanton;
mod residual;

pub use gauge::{gauge_transform, gauge_transform_with_tolerance, DEFAULT_UNITARY_TOLERANCE};
pub use grid::Grid;
pub use instanton::InstantonData;
pub use residual::{
    discrete_cr_residual, holomorphic_residual, moment_residual, residual_report, BoundaryTerms,
    ResidualReport, DEFAULT_TOLERANCE,
};

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Boundary {
    /// Out-of-range factors are the zero matrix (instanton data).
    ZeroPadded,
    /// Indices wrap modulo the lattice extents.
    Periodic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LatticeShape {
    /// Extent of the second index `k`.
    pub n1: usize,
    /// Extent of the first index `j`.
    pub n2: usize,
    /// Matrix size of every site variable.
    pub p: usize,
    pub boundary: Boundary,
}

impl LatticeShape {
    pub fn new(n1: usize, n2: usize, p: usize, boundary: Boundary) -> Result<Self> {
        if n1 == 0 || n2 == 0 || p == 0 {
            return Err(Error::InvalidShape(format!(
                "n1={n1}, n2={n2}, p={p}: all extents must be >= 1"
            )));
        }
        Ok(Self {
            n1,
            n2,
            p,
            boundary,
        })
    }

    pub fn zero_padded(n1: usize, n2: usize, p: usize) -> Result<Self> {
        Self::new(n1, n2, p, Boundary::ZeroPadded)
    }

    pub fn periodic(n1: usize, n2: usize, p: usize) -> Result<Self> {
        Self::new(n1, n2, p, Boundary::Periodic)
    }

    /// `(rows, cols)` of the `F` grid.
    pub fn f_extent(&self) -> (usize, usize) {
        match self.boundary {
            Boundary::ZeroPadded => (self.n2, self.n1 - 1),
            Boundary::Periodic => (self.n2, self.n1),
        }
    }

    /// `(rows, cols)` of the `G` grid.
    pub fn g_extent(&self) -> (usize, usize) {
        match self.boundary {
            Boundary::ZeroPadded => (self.n2 - 1, self.n1),
            Boundary::Periodic => (self.n2, self.n1),
        }
    }

    /// Sites where all four factors of the holomorphic equation exist.
    pub fn holomorphic_extent(&self) -> (usize, usize) {
        match self.boundary {
            Boundary::ZeroPadded => (self.n2 - 1, self.n1 - 1),
            Boundary::Periodic => (self.n2, self.n1),
        }
    }

    pub fn site_extent(&self) -> (usize, usize) {
        (self.n2, self.n1)
    }

    /// The same lattice with `n1` and `n2` exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            n1: self.n2,
            n2: self.n1,
            ..*self
        }
    }
}

/// Complex `p x p` matrices on the links of a two-dimensional lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixLatticeField {
    shape: LatticeShape,
    f: Grid<CMat>,
    g: Grid<CMat>,
}

impl MatrixLatticeField {
    pub fn new(shape: LatticeShape, f: Grid<CMat>, g: Grid<CMat>) -> Result<Self> {
        check_grid("F", &f, shape.f_extent(), shape.p)?;
        check_grid("G", &g, shape.g_extent(), shape.p)?;
        Ok(Self { shape, f, g })
    }

    pub fn from_fn(
        shape: LatticeShape,
        mut f: impl FnMut(usize, usize) -> CMat,
        mut g: impl FnMut(usize, usize) -> CMat,
    ) -> Result<Self> {
        let (fr, fc) = shape.f_extent();
        let (gr, gc) = shape.g_extent();
        Self::new(
            shape,
            Grid::from_fn(fr, fc, &mut f),
            Grid::from_fn(gr, gc, &mut g),
        )
    }

    /// Entries with independent standard complex Gaussian components.
    pub fn random(shape: LatticeShape, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (fr, fc) = shape.f_extent();
        let (gr, gc) = shape.g_extent();
        let f = Grid::from_fn(fr, fc, |_, _| linalg::random_complex(shape.p, &mut rng));
        let g = Grid::from_fn(gr, gc, |_, _| linalg::random_complex(shape.p, &mut rng));
        Self { shape, f, g }
    }

    /// `F = c I`, `G = d I` everywhere.
    pub fn constant(shape: LatticeShape, f: Complex64, g: Complex64) -> Self {
        let (fr, fc) = shape.f_extent();
        let (gr, gc) = shape.g_extent();
        Self {
            shape,
            f: Grid::filled(fr, fc, linalg::scalar(f, shape.p)),
            g: Grid::filled(gr, gc, linalg::scalar(g, shape.p)),
        }
    }

    /// Real `p = 1` field from scalar grids.
    pub fn from_real(shape: LatticeShape, f: &Grid<f64>, g: &Grid<f64>) -> Result<Self> {
        if shape.p != 1 {
            return Err(Error::InvalidShape("scalar grids need p = 1".into()));
        }
        Self::new(
            shape,
            f.map(|&v| linalg::real_scalar(v, 1)),
            g.map(|&v| linalg::real_scalar(v, 1)),
        )
    }

    pub fn shape(&self) -> &LatticeShape {
        &self.shape
    }

    pub fn f(&self) -> &Grid<CMat> {
        &self.f
    }

    pub fn g(&self) -> &Grid<CMat> {
        &self.g
    }

    pub fn into_parts(self) -> (LatticeShape, Grid<CMat>, Grid<CMat>) {
        (self.shape, self.f, self.g)
    }

    /// `F` at signed 0-based site `(j, k)`; `None` means a zero-padded factor.
    pub fn f_at(&self, j: isize, k: isize) -> Option<&CMat> {
        match self.shape.boundary {
            Boundary::Periodic => Some(self.f.get_wrapped(j, k)),
            Boundary::ZeroPadded => self.f.get_signed(j, k),
        }
    }

    pub fn g_at(&self, j: isize, k: isize) -> Option<&CMat> {
        match self.shape.boundary {
            Boundary::Periodic => Some(self.g.get_wrapped(j, k)),
            Boundary::ZeroPadded => self.g.get_signed(j, k),
        }
    }

    /// Every link variable multiplied by `lambda`.
    pub fn scaled(&self, lambda: f64) -> Self {
        Self {
            shape: self.shape,
            f: self.f.map(|m| m * Complex64::new(lambda, 0.0)),
            g: self.g.map(|m| m * Complex64::new(lambda, 0.0)),
        }
    }

    /// Largest Frobenius norm over all link variables.
    pub fn max_norm(&self) -> f64 {
        self.f
            .iter()
            .chain(self.g.iter())
            .fold(0.0, |m, x| m.max(linalg::frobenius(x)))
    }

    /// Replaces one `F` entry; used to build perturbed data.
    pub fn with_f(mut self, j: usize, k: usize, value: CMat) -> Result<Self> {
        let p = self.shape.p;
        if value.shape() != (p, p) {
            return Err(Error::ShapeMismatch(format!("F entry must be {p}x{p}")));
        }
        let slot = self
            .f
            .get_mut(j, k)
            .ok_or_else(|| Error::ShapeMismatch(format!("F has no site ({j}, {k})")))?;
        *slot = value;
        Ok(self)
    }

    pub fn with_g(mut self, j: usize, k: usize, value: CMat) -> Result<Self> {
        let p = self.shape.p;
        if value.shape() != (p, p) {
            return Err(Error::ShapeMismatch(format!("G entry must be {p}x{p}")));
        }
        let slot = self
            .g
            .get_mut(j, k)
            .ok_or_else(|| Error::ShapeMismatch(format!("G has no site ({j}, {k})")))?;
        *slot = value;
        Ok(self)
    }
}

fn check_grid(name: &str, grid: &Grid<CMat>, extent: (usize, usize), p: usize) -> Result<()> {
    if grid.dims() != extent {
        return Err(Error::ShapeMismatch(format!(
            "{name} grid is {}x{}, expected {}x{}",
            grid.rows(),
            grid.cols(),
            extent.0,
            extent.1
        )));
    }
    if let Some(((j, k), m)) = grid.indexed_iter().find(|(_, m)| m.shape() != (p, p)) {
        return Err(Error::ShapeMismatch(format!(
            "{name}[{}, {}] is {}x{}, expected {p}x{p}",
            j + 1,
            k + 1,
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}
