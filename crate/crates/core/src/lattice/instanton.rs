use serde::{Deserialize, Serialize};

use super::{
    residual_report, BoundaryTerms, Grid, LatticeShape, MatrixLatticeField, ResidualReport,
};
use crate::error::{Error, Result};

/// Positive real unknowns `F`, `G`, `a0`, `b0` of the torus-symmetric
/// instanton equations on a zero-padded `p = 1` lattice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstantonData {
    n1: usize,
    n2: usize,
    f: Grid<f64>,
    g: Grid<f64>,
    a0: f64,
    b0: f64,
}

impl InstantonData {
    pub fn new(n1: usize, n2: usize, f: Grid<f64>, g: Grid<f64>, a0: f64, b0: f64) -> Result<Self> {
        let shape = LatticeShape::zero_padded(n1, n2, 1)?;
        if f.dims() != shape.f_extent() {
            return Err(Error::ShapeMismatch(format!(
                "F is {}x{}, expected {}x{}",
                f.rows(),
                f.cols(),
                shape.f_extent().0,
                shape.f_extent().1
            )));
        }
        if g.dims() != shape.g_extent() {
            return Err(Error::ShapeMismatch(format!(
                "G is {}x{}, expected {}x{}",
                g.rows(),
                g.cols(),
                shape.g_extent().0,
                shape.g_extent().1
            )));
        }
        for (name, grid) in [("F", &f), ("G", &g)] {
            if let Some(((j, k), &v)) = grid
                .indexed_iter()
                .find(|(_, &v)| !(v > 0.0 && v.is_finite()))
            {
                return Err(Error::NonPositive {
                    name,
                    j: j + 1,
                    k: k + 1,
                    value: v,
                });
            }
        }
        for (name, v) in [("a0", a0), ("b0", b0)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::NonPositive {
                    name,
                    j: 0,
                    k: 0,
                    value: v,
                });
            }
        }
        Ok(Self {
            n1,
            n2,
            f,
            g,
            a0,
            b0,
        })
    }

    /// Every unknown equal to `value`.
    pub fn constant(n1: usize, n2: usize, value: f64) -> Result<Self> {
        let shape = LatticeShape::zero_padded(n1, n2, 1)?;
        let (fr, fc) = shape.f_extent();
        let (gr, gc) = shape.g_extent();
        Self::new(
            n1,
            n2,
            Grid::filled(fr, fc, value),
            Grid::filled(gr, gc, value),
            value,
            value,
        )
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn n2(&self) -> usize {
        self.n2
    }

    pub fn f(&self) -> &Grid<f64> {
        &self.f
    }

    pub fn g(&self) -> &Grid<f64> {
        &self.g
    }

    pub fn a0(&self) -> f64 {
        self.a0
    }

    pub fn b0(&self) -> f64 {
        self.b0
    }

    pub fn shape(&self) -> LatticeShape {
        LatticeShape::zero_padded(self.n1, self.n2, 1).expect("validated at construction")
    }

    /// Number of scalar unknowns, `2 n1 n2 - n1 - n2 + 2`.
    pub fn unknown_count(&self) -> usize {
        self.f.len() + self.g.len() + 2
    }

    /// Number of scalar equations, `2 n1 n2 - n1 - n2 + 1`.
    pub fn equation_count(&self) -> usize {
        let shape = self.shape();
        let (hr, hc) = shape.holomorphic_extent();
        hr * hc + self.n1 * self.n2
    }

    pub fn to_field(&self) -> MatrixLatticeField {
        MatrixLatticeField::from_real(self.shape(), &self.f, &self.g)
            .expect("validated at construction")
    }

    pub fn boundary_terms(&self) -> BoundaryTerms {
        BoundaryTerms::scalar(self.a0, self.b0, 1)
    }

    /// Residual report including the corner delta terms.
    pub fn residual_report(&self) -> ResidualReport {
        residual_report(&self.to_field(), Some(&self.boundary_terms())).expect("zero-padded shape")
    }

    /// All unknowns multiplied by `lambda > 0`.
    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        Self::new(
            self.n1,
            self.n2,
            self.f.map(|v| v * lambda),
            self.g.map(|v| v * lambda),
            self.a0 * lambda,
            self.b0 * lambda,
        )
    }

    /// Largest unknown.
    pub fn max_value(&self) -> f64 {
        self.f
            .iter()
            .chain(self.g.iter())
            .fold(self.a0.max(self.b0), |m, &v| m.max(v))
    }

    pub fn sum_of_squares(&self) -> f64 {
        self.f
            .iter()
            .chain(self.g.iter())
            .map(|v| v * v)
            .sum::<f64>()
            + self.a0 * self.a0
            + self.b0 * self.b0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_nonpositive_entries() {
        let f = Grid::from_rows(vec![vec![1.0], vec![0.0]]).unwrap();
        let g = Grid::from_rows(vec![vec![1.0, 1.0]]).unwrap();
        assert!(matches!(
            InstantonData::new(2, 2, f, g, 1.0, 1.0),
            Err(Error::NonPositive {
                name: "F",
                j: 2,
                k: 1,
                ..
            })
        ));
    }

    #[test]
    fn rejects_wrong_extent() {
        let f = Grid::filled(2, 2, 1.0);
        let g = Grid::filled(1, 2, 1.0);
        assert!(InstantonData::new(2, 2, f, g, 1.0, 1.0).is_err());
    }

    #[test]
    fn counting_formula() {
        for n1 in 1..9 {
            for n2 in 1..9 {
                let d = InstantonData::constant(n1, n2, 1.0).unwrap();
                assert_eq!(d.unknown_count(), 2 * n1 * n2 - n1 - n2 + 2);
                assert_eq!(d.equation_count(), 2 * n1 * n2 - n1 - n2 + 1);
            }
        }
    }
}
