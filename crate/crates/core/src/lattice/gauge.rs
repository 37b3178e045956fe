use super::{Grid, MatrixLatticeField};
use crate::error::{Error, Result};
use crate::linalg::{self, CMat};

/// Allowed Frobenius deviation of `L* L` from the identity.
pub const DEFAULT_UNITARY_TOLERANCE: f64 = 1e-10;

/// Lattice gauge action `G'(j,k) = L(j+1,k) G(j,k) L(j,k)^-1`,
/// `F'(j,k) = L(j,k+1) F(j,k) L(j,k)^-1`.
///
/// `lambda` lives on the `n2 x n1` sites. In zero-padded mode every index the
/// rule touches already lies inside that rectangle.
pub fn gauge_transform(
    field: &MatrixLatticeField,
    lambda: &Grid<CMat>,
) -> Result<MatrixLatticeField> {
    gauge_transform_with_tolerance(field, lambda, DEFAULT_UNITARY_TOLERANCE)
}

pub fn gauge_transform_with_tolerance(
    field: &MatrixLatticeField,
    lambda: &Grid<CMat>,
    tolerance: f64,
) -> Result<MatrixLatticeField> {
    let shape = *field.shape();
    if lambda.dims() != shape.site_extent() {
        return Err(Error::ShapeMismatch(format!(
            "gauge grid is {}x{}, expected {}x{}",
            lambda.rows(),
            lambda.cols(),
            shape.n2,
            shape.n1
        )));
    }
    for ((j, k), m) in lambda.indexed_iter() {
        let deviation = linalg::unitarity_deviation(m);
        if m.shape() != (shape.p, shape.p) || deviation > tolerance {
            return Err(Error::NotUnitary {
                j: j + 1,
                k: k + 1,
                deviation,
            });
        }
    }
    let lam = |j: usize, k: usize| lambda.get_wrapped(j as isize, k as isize);
    let (fr, fc) = field.f().dims();
    let (gr, gc) = field.g().dims();
    let f = Grid::from_fn(fr, fc, |j, k| {
        lam(j, k + 1) * &field.f()[(j, k)] * lam(j, k).adjoint()
    });
    let g = Grid::from_fn(gr, gc, |j, k| {
        lam(j + 1, k) * &field.g()[(j, k)] * lam(j, k).adjoint()
    });
    MatrixLatticeField::new(shape, f, g)
}
