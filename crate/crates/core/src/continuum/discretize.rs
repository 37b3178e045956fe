use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::hitchin::{hitchin_residual, Derivatives, SampleGrid};
use super::ContinuumField;
use crate::error::{Error, Result};
use crate::fit::{loglog_order, ConvergenceOrder};
use crate::lattice::{
    holomorphic_residual, moment_residual, Grid, LatticeShape, MatrixLatticeField,
};
use crate::linalg::{self, CMat};

/// Where the `n x n` lattice sits in the plane. Site `(j, k)` (0-based) is
/// sampled at `(x0 + j/n, y0 + k/n)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Sampling {
    /// Unit torus at the origin; the field must be 1-periodic in both directions.
    Periodic,
    /// Unit square at `(x0, y0)`. Residuals are only meaningful on the
    /// interior sites `1..=n-2` where no wrap-around enters.
    Window { x0: f64, y0: f64 },
}

impl Sampling {
    fn origin(&self) -> (f64, f64) {
        match *self {
            Sampling::Periodic => (0.0, 0.0),
            Sampling::Window { x0, y0 } => (x0, y0),
        }
    }
}

/// `G = n - A_x + i Phi_1`, `F = n - A_y + i Phi_2` sampled on a periodic
/// `n x n` lattice.
pub fn discretize(cf: &ContinuumField, n: usize, sampling: Sampling) -> Result<MatrixLatticeField> {
    let shape = LatticeShape::periodic(n, n, cf.p())?;
    let (x0, y0) = sampling.origin();
    let nf = n as f64;
    let i = Complex64::new(0.0, 1.0);
    let level = linalg::real_scalar(nf, cf.p());
    let mut f = Vec::with_capacity(n * n);
    let mut g = Vec::with_capacity(n * n);
    for j in 0..n {
        for k in 0..n {
            let s = cf.sample(x0 + j as f64 / nf, y0 + k as f64 / nf)?;
            g.push(&level - &s.ax + &s.phi1 * i);
            f.push(&level - &s.ay + &s.phi2 * i);
        }
    }
    let take = |v: Vec<CMat>| {
        let mut it = v.into_iter();
        Grid::from_fn(n, n, |_, _| it.next().expect("n x n samples"))
    };
    MatrixLatticeField::new(shape, take(f), take(g))
}

/// Largest Frobenius norm of either lattice residual, restricted to the
/// interior sites for windowed sampling.
pub fn interior_residual_max(field: &MatrixLatticeField, sampling: Sampling) -> Result<f64> {
    let r1 = holomorphic_residual(field);
    let r2 = moment_residual(field, None)?;
    let (rows, cols) = r2.dims();
    let inside = |j: usize, k: usize| match sampling {
        Sampling::Periodic => true,
        Sampling::Window { .. } => j >= 1 && k >= 1 && j + 2 <= rows && k + 2 <= cols,
    };
    let max = |g: &Grid<CMat>| {
        g.indexed_iter()
            .filter(|((j, k), _)| inside(*j, *k))
            .map(|(_, m)| m.norm())
            .fold(0.0, f64::max)
    };
    Ok(max(&r1).max(max(&r2)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub max_residual: f64,
    /// `max_residual / n`, the residual relative to the field scale.
    pub scaled_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
    /// Decay order of the scaled residual.
    pub order: ConvergenceOrder,
    /// Decay order of the unscaled residual; about zero for a non-solution.
    pub raw_order: ConvergenceOrder,
    /// Largest continuum residual on a coarse grid over the sampled square.
    pub continuum_residual: f64,
}

/// Discretizes `cf` at every `n` and fits how fast the lattice residual
/// decays.
pub fn lattice_to_continuum_rate(
    cf: &ContinuumField,
    ns: &[usize],
    sampling: Sampling,
) -> Result<ConvergenceTable> {
    if ns.len() < 3 {
        return Err(Error::TooFewSizes {
            needed: 3,
            got: ns.len(),
        });
    }
    let mut rows = Vec::with_capacity(ns.len());
    for &n in ns {
        let field = discretize(cf, n, sampling)?;
        let max_residual = interior_residual_max(&field, sampling)?;
        rows.push(ConvergenceRow {
            n,
            max_residual,
            scaled_residual: max_residual / n as f64,
        });
    }
    let xs: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
    let scaled: Vec<f64> = rows.iter().map(|r| r.scaled_residual).collect();
    let raw: Vec<f64> = rows.iter().map(|r| r.max_residual).collect();
    let (x0, y0) = sampling.origin();
    let probe = SampleGrid::uniform((x0 + 0.1, x0 + 0.9), (y0 + 0.1, y0 + 0.9), 5, 5);
    let continuum_residual = hitchin_residual(cf, &probe, Derivatives::Auto)?.max_norm();
    Ok(ConvergenceTable {
        order: loglog_order(&xs, &scaled)?,
        raw_order: loglog_order(&xs, &raw)?,
        rows,
        continuum_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::continuum::HiggsSample;
    use std::sync::Arc;

    #[test]
    fn zero_field_gives_constant_solution() {
        for n in [3, 8, 17] {
            let cf = ContinuumField::zero(2, [0.0, 1.0, 0.0, 1.0]);
            let field = discretize(&cf, n, Sampling::Periodic).unwrap();
            for m in field.f().iter().chain(field.g().iter()) {
                assert_eq!(*m, linalg::real_scalar(n as f64, 2));
            }
            assert_eq!(
                interior_residual_max(&field, Sampling::Periodic).unwrap(),
                0.0
            );
        }
    }

    #[test]
    fn substitution_is_exact() {
        let cf = ContinuumField::new(
            1,
            [0.0, 2.0, 0.0, 2.0],
            Arc::new(|x: f64, y: f64| {
                let c = |v: f64| linalg::scalar(Complex64::new(0.0, v), 1);
                HiggsSample {
                    ax: c(x + y),
                    ay: c(x * y),
                    phi1: c(x - y),
                    phi2: c(y),
                }
            }),
        );
        let n = 6;
        let field = discretize(&cf, n, Sampling::Window { x0: 0.5, y0: 0.25 }).unwrap();
        let i = Complex64::new(0.0, 1.0);
        for j in 0..n {
            for k in 0..n {
                let (x, y) = (0.5 + j as f64 / 6.0, 0.25 + k as f64 / 6.0);
                let s = cf.sample(x, y).unwrap();
                let back = &field.g()[(j, k)] + &s.ax - &s.phi1 * i;
                assert_eq!(back[(0, 0)], Complex64::new(n as f64, 0.0));
                let back = &field.f()[(j, k)] + &s.ay - &s.phi2 * i;
                assert_eq!(back[(0, 0)], Complex64::new(n as f64, 0.0));
            }
        }
    }

    #[test]
    fn linear_family_residuals() {
        // h = z: G = n - y, F = n - x, so R1 = (y - x)/n and R2 = 0
        let cf = ContinuumField::holomorphic_u1(
            |z| z,
            |_| Complex64::new(1.0, 0.0),
            [0.0, 2.0, 0.0, 2.0],
        );
        let n = 10;
        let field = discretize(&cf, n, Sampling::Window { x0: 0.0, y0: 0.0 }).unwrap();
        let r1 = holomorphic_residual(&field);
        for j in 1..n - 1 {
            for k in 1..n - 1 {
                let want = (k as f64 - j as f64) / (n * n) as f64;
                assert!((r1[(j, k)][(0, 0)].re - want).abs() < 1e-13);
            }
        }
        let got = interior_residual_max(&field, Sampling::Window { x0: 0.0, y0: 0.0 }).unwrap();
        assert!((got - 7.0 / 100.0).abs() < 1e-13);
    }

    #[test]
    fn too_few_sizes() {
        let cf = ContinuumField::zero(1, [0.0, 1.0, 0.0, 1.0]);
        assert!(matches!(
            lattice_to_continuum_rate(&cf, &[4, 8], Sampling::Periodic),
            Err(Error::TooFewSizes { needed: 3, got: 2 })
        ));
    }

    #[test]
    fn zero_field_rate_is_exact() {
        let cf = ContinuumField::zero(1, [0.0, 1.0, 0.0, 1.0]);
        let t = lattice_to_continuum_rate(&cf, &[4, 8, 16], Sampling::Periodic).unwrap();
        assert_eq!(t.order, ConvergenceOrder::Exact);
    }
}
