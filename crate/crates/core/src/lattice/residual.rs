use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{Boundary, Grid, MatrixLatticeField};
use crate::error::{Error, Result};
use crate::linalg::{self, CMat};

/// Default threshold for "residual vanishes" checks on `scaled_max`.
pub const DEFAULT_TOLERANCE: f64 = 1e-12;

/// Instanton boundary data entering the moment equation at the corner sites.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryTerms {
    pub a0: CMat,
    pub b0: CMat,
}

impl BoundaryTerms {
    pub fn scalar(a0: f64, b0: f64, p: usize) -> Self {
        Self {
            a0: linalg::real_scalar(a0, p),
            b0: linalg::real_scalar(b0, p),
        }
    }
}

/// `R1(j,k) = F(j+1,k) G(j,k) - G(j,k+1) F(j,k)`.
///
/// Zero-padded fields give an `(n2-1) x (n1-1)` grid; periodic fields give the
/// whole torus with wrapped indices.
pub fn holomorphic_residual(field: &MatrixLatticeField) -> Grid<CMat> {
    let (rows, cols) = field.shape().holomorphic_extent();
    Grid::from_fn(rows, cols, |j, k| {
        let (j, k) = (j as isize, k as isize);
        let f_up = field.f_at(j + 1, k).expect("F(j+1,k) in range");
        let g = field.g_at(j, k).expect("G(j,k) in range");
        let g_right = field.g_at(j, k + 1).expect("G(j,k+1) in range");
        let f = field.f_at(j, k).expect("F(j,k) in range");
        f_up * g - g_right * f
    })
}

/// `R2(j,k) = F(j,k-1)F*(j,k-1) - F*(j,k)F(j,k) + G(j-1,k)G*(j-1,k) - G*(j,k)G(j,k)`
/// over every site, with `-a0* a0` added at `(n2, n1)` and `+b0 b0*` at `(1, 1)`
/// when boundary terms are supplied. Missing zero-padded factors contribute nothing.
pub fn moment_residual(
    field: &MatrixLatticeField,
    boundary: Option<&BoundaryTerms>,
) -> Result<Grid<CMat>> {
    let shape = field.shape();
    if boundary.is_some() && shape.boundary == Boundary::Periodic {
        return Err(Error::BoundaryTermsOnPeriodic);
    }
    let p = shape.p;
    if let Some(bt) = boundary {
        if bt.a0.shape() != (p, p) || bt.b0.shape() != (p, p) {
            return Err(Error::ShapeMismatch(format!(
                "boundary terms must be {p}x{p}"
            )));
        }
    }
    let (n2, n1) = shape.site_extent();
    Ok(Grid::from_fn(n2, n1, |j, k| {
        let (js, ks) = (j as isize, k as isize);
        let mut out = linalg::zeros(p);
        if let Some(f) = field.f_at(js, ks - 1) {
            out += f * f.adjoint();
        }
        if let Some(f) = field.f_at(js, ks) {
            out -= f.adjoint() * f;
        }
        if let Some(g) = field.g_at(js - 1, ks) {
            out += g * g.adjoint();
        }
        if let Some(g) = field.g_at(js, ks) {
            out -= g.adjoint() * g;
        }
        if let Some(bt) = boundary {
            if j == n2 - 1 && k == n1 - 1 {
                out -= bt.a0.adjoint() * &bt.a0;
            }
            if j == 0 && k == 0 {
                out += &bt.b0 * bt.b0.adjoint();
            }
        }
        out
    }))
}

/// Per-site Frobenius norms of both residuals plus aggregates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub r1: Grid<f64>,
    pub r2: Grid<f64>,
    pub max_abs: f64,
    /// `max_abs / (1 + m^2)` with `m` the largest field norm (boundary terms included).
    pub scaled_max: f64,
    pub field_scale: f64,
}

impl ResidualReport {
    pub fn from_residuals(r1: &Grid<CMat>, r2: &Grid<CMat>, field_scale: f64) -> Self {
        let r1 = r1.map(linalg::frobenius);
        let r2 = r2.map(linalg::frobenius);
        let max_abs = r1.max_abs().max(r2.max_abs());
        Self {
            scaled_max: max_abs / (1.0 + field_scale * field_scale),
            r1,
            r2,
            max_abs,
            field_scale,
        }
    }

    pub fn is_within(&self, tolerance: f64) -> bool {
        self.scaled_max <= tolerance
    }

    /// 1-based sites whose norm exceeds `threshold`, tagged by equation.
    pub fn offending_sites(&self, threshold: f64) -> Vec<(&'static str, usize, usize, f64)> {
        let mut out = Vec::new();
        for (name, grid) in [("holomorphic", &self.r1), ("moment", &self.r2)] {
            for ((j, k), &v) in grid.indexed_iter() {
                if v > threshold {
                    out.push((name, j + 1, k + 1, v));
                }
            }
        }
        out
    }
}

/// Evaluates both residuals and summarizes them.
pub fn residual_report(
    field: &MatrixLatticeField,
    boundary: Option<&BoundaryTerms>,
) -> Result<ResidualReport> {
    let r1 = holomorphic_residual(field);
    let r2 = moment_residual(field, boundary)?;
    let mut scale = field.max_norm();
    if let Some(bt) = boundary {
        scale = scale
            .max(linalg::frobenius(&bt.a0))
            .max(linalg::frobenius(&bt.b0));
    }
    Ok(ResidualReport::from_residuals(&r1, &r2, scale))
}

fn positive_entry(name: &'static str, j: usize, k: usize, m: &CMat) -> Result<f64> {
    let z: Complex64 = m[(0, 0)];
    if z.re > 0.0 && z.im.abs() <= 1e-12 * z.re.max(1.0) && z.re.is_finite() {
        Ok(z.re)
    } else {
        Err(Error::NonPositive {
            name,
            j: j + 1,
            k: k + 1,
            value: z.re,
        })
    }
}

/// Log/difference form of the U(1) equations for positive real fields:
/// `(D+x log F - D+y log G, D-y F^2 + D-x G^2)`, with `x` the first index.
///
/// The first grid covers the holomorphic domain, the second every site; the
/// second grid equals `-R2` without boundary terms.
pub fn discrete_cr_residual(field: &MatrixLatticeField) -> Result<(Grid<f64>, Grid<f64>)> {
    let shape = field.shape();
    if shape.p != 1 {
        return Err(Error::InvalidShape(
            "discrete Cauchy-Riemann form needs p = 1".into(),
        ));
    }
    let mut fv = Vec::with_capacity(field.f().len());
    for ((j, k), m) in field.f().indexed_iter() {
        fv.push(positive_entry("F", j, k, m)?);
    }
    let mut gv = Vec::with_capacity(field.g().len());
    for ((j, k), m) in field.g().indexed_iter() {
        gv.push(positive_entry("G", j, k, m)?);
    }
    let (fr, fc) = field.f().dims();
    let (gr, gc) = field.g().dims();
    let f = Grid::from_fn(fr, fc, |j, k| fv[j * fc + k]);
    let g = Grid::from_fn(gr, gc, |j, k| gv[j * gc + k]);
    let periodic = shape.boundary == Boundary::Periodic;
    let at = |grid: &Grid<f64>, j: isize, k: isize| -> Option<f64> {
        if periodic {
            Some(*grid.get_wrapped(j, k))
        } else {
            grid.get_signed(j, k).copied()
        }
    };

    let (hr, hc) = shape.holomorphic_extent();
    let log_form = Grid::from_fn(hr, hc, |j, k| {
        let (j, k) = (j as isize, k as isize);
        let dx_log_f = at(&f, j + 1, k).unwrap().ln() - at(&f, j, k).unwrap().ln();
        let dy_log_g = at(&g, j, k + 1).unwrap().ln() - at(&g, j, k).unwrap().ln();
        dx_log_f - dy_log_g
    });
    let (n2, n1) = shape.site_extent();
    let sq = |v: Option<f64>| v.map_or(0.0, |x| x * x);
    let quad_form = Grid::from_fn(n2, n1, |j, k| {
        let (j, k) = (j as isize, k as isize);
        (sq(at(&f, j, k)) - sq(at(&f, j, k - 1))) + (sq(at(&g, j, k)) - sq(at(&g, j - 1, k)))
    });
    Ok((log_form, quad_form))
}
