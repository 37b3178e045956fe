//! Lattice Lax pair
//!
//! ```text
//! (d1 v)(j,k) = G*_{j,k} v(j+1,k) + zeta F_{j,k-1} v(j,k-1)
//! (d2 v)(j,k) = F*_{j,k} v(j,k+1) - zeta G_{j-1,k} v(j-1,k)
//! ```
//!
//! on a periodic lattice. Expanding the composition gives
//! `[d1, d2] v = c0 v(j+1,k+1) + zeta c1 v(j,k) + zeta^2 c2 v(j-1,k-1)`.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{Boundary, Grid, MatrixLatticeField};
use crate::linalg::{self, CMat};

pub type CVec = DVector<Complex64>;

/// A lattice field of `p`-vectors.
pub type VectorField = Grid<CVec>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    /// First index `j`.
    X,
    /// Second index `k`.
    Y,
}

impl Axis {
    fn step(self) -> (isize, isize) {
        match self {
            Axis::X => (1, 0),
            Axis::Y => (0, 1),
        }
    }
}

/// `(L v)(s) = forward(s) v(s + e_a) + zeta backward(s) v(s - e_b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LaxOperator {
    pub zeta: Complex64,
    pub forward: Grid<CMat>,
    pub forward_axis: Axis,
    pub backward: Grid<CMat>,
    pub backward_axis: Axis,
}

fn require_periodic(field: &MatrixLatticeField) -> Result<()> {
    if field.shape().boundary != Boundary::Periodic {
        return Err(Error::RequiresPeriodic);
    }
    Ok(())
}

impl LaxOperator {
    /// `d1`: `G*` with the forward `X` shift, `F_{j,k-1}` with the backward `Y` shift.
    pub fn first(field: &MatrixLatticeField, zeta: Complex64) -> Result<Self> {
        require_periodic(field)?;
        let (f, g) = (field.f(), field.g());
        let (rows, cols) = f.dims();
        Ok(Self {
            zeta,
            forward: g.map(|m| m.adjoint()),
            forward_axis: Axis::X,
            backward: Grid::from_fn(rows, cols, |j, k| {
                f.get_wrapped(j as isize, k as isize - 1).clone()
            }),
            backward_axis: Axis::Y,
        })
    }

    /// `d2`: `F*` with the forward `Y` shift, `-G_{j-1,k}` with the backward `X` shift.
    pub fn second(field: &MatrixLatticeField, zeta: Complex64) -> Result<Self> {
        require_periodic(field)?;
        let (f, g) = (field.f(), field.g());
        let (rows, cols) = f.dims();
        Ok(Self {
            zeta,
            forward: f.map(|m| m.adjoint()),
            forward_axis: Axis::Y,
            backward: Grid::from_fn(rows, cols, |j, k| {
                -g.get_wrapped(j as isize - 1, k as isize)
            }),
            backward_axis: Axis::X,
        })
    }

    pub fn apply(&self, v: &VectorField) -> Result<VectorField> {
        if v.dims() != self.forward.dims() {
            return Err(Error::ShapeMismatch(format!(
                "vector field is {:?}, operator acts on {:?}",
                v.dims(),
                self.forward.dims()
            )));
        }
        let p = self.forward.as_slice().first().map_or(0, |m| m.nrows());
        if v.iter().any(|x| x.len() != p) {
            return Err(Error::ShapeMismatch(format!(
                "vectors must have length {p}"
            )));
        }
        let (fa, fb) = self.forward_axis.step();
        let (ba, bb) = self.backward_axis.step();
        Ok(Grid::from_fn(v.rows(), v.cols(), |j, k| {
            let (j, k) = (j as isize, k as isize);
            let ahead = v.get_wrapped(j + fa, k + fb);
            let behind = v.get_wrapped(j - ba, k - bb);
            let site = (j as usize, k as usize);
            &self.forward[site] * ahead + (&self.backward[site] * behind) * self.zeta
        }))
    }
}

/// `[d1, d2] v` by composing the two operators.
pub fn commutator_apply(
    field: &MatrixLatticeField,
    zeta: Complex64,
    v: &VectorField,
) -> Result<VectorField> {
    let d1 = LaxOperator::first(field, zeta)?;
    let d2 = LaxOperator::second(field, zeta)?;
    let a = d1.apply(&d2.apply(v)?)?;
    let b = d2.apply(&d1.apply(v)?)?;
    Ok(Grid::from_fn(v.rows(), v.cols(), |j, k| {
        &a[(j, k)] - &b[(j, k)]
    }))
}

/// Coefficients of `zeta^0`, `zeta^1`, `zeta^2` in the commutator.
#[derive(Debug, Clone, PartialEq)]
pub struct CommutatorCoefficients {
    /// Attached to the `(+1, +1)` shift.
    pub c0: Grid<CMat>,
    /// Diagonal.
    pub c1: Grid<CMat>,
    /// Attached to the `(-1, -1)` shift.
    pub c2: Grid<CMat>,
}

impl CommutatorCoefficients {
    /// Largest Frobenius norm in each coefficient grid.
    pub fn max_norms(&self) -> [f64; 3] {
        let m = |g: &Grid<CMat>| g.iter().map(|x| x.norm()).fold(0.0, f64::max);
        [m(&self.c0), m(&self.c1), m(&self.c2)]
    }

    /// `[c0, c1, c2] v` contracted with the shifts (periodic wrap).
    pub fn contract(&self, zeta: Complex64, v: &VectorField) -> VectorField {
        Grid::from_fn(v.rows(), v.cols(), |j, k| {
            let (js, ks) = (j as isize, k as isize);
            &self.c0[(j, k)] * v.get_wrapped(js + 1, ks + 1)
                + (&self.c1[(j, k)] * &v[(j, k)]) * zeta
                + (&self.c2[(j, k)] * v.get_wrapped(js - 1, ks - 1)) * (zeta * zeta)
        })
    }
}

/// Commutator coefficients on every site. Periodic fields wrap; zero-padded
/// fields treat missing factors as zero, so the corner entries of `c1`
/// carry `+a0 a0*` and `-b0 b0*` for instanton data.
pub fn commutator_coefficients(field: &MatrixLatticeField) -> CommutatorCoefficients {
    let (n2, n1) = field.shape().site_extent();
    let p = field.shape().p;
    let zero = linalg::zeros(p);
    let f = |j: isize, k: isize| field.f_at(j, k).unwrap_or(&zero);
    let g = |j: isize, k: isize| field.g_at(j, k).unwrap_or(&zero);
    let c0 = Grid::from_fn(n2, n1, |j, k| {
        let (j, k) = (j as isize, k as isize);
        g(j, k).adjoint() * f(j + 1, k).adjoint() - f(j, k).adjoint() * g(j, k + 1).adjoint()
    });
    let c1 = Grid::from_fn(n2, n1, |j, k| {
        let (j, k) = (j as isize, k as isize);
        let (fl, gu) = (f(j, k - 1), g(j - 1, k));
        let (fs, gs) = (f(j, k), g(j, k));
        fl * fl.adjoint() - fs.adjoint() * fs + gu * gu.adjoint() - gs.adjoint() * gs
    });
    let c2 = Grid::from_fn(n2, n1, |j, k| {
        let (j, k) = (j as isize, k as isize);
        g(j - 1, k) * f(j - 1, k - 1) - f(j, k - 1) * g(j - 1, k - 1)
    });
    CommutatorCoefficients { c0, c1, c2 }
}

/// Standard complex Gaussian vector field.
pub fn random_vector_field<R: Rng + ?Sized>(
    rows: usize,
    cols: usize,
    p: usize,
    rng: &mut R,
) -> VectorField {
    Grid::from_fn(rows, cols, |_, _| {
        CVec::from_fn(p, |_, _| {
            Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        })
    })
}

pub fn vector_field_norm(v: &VectorField) -> f64 {
    v.iter().map(|x| x.norm_squared()).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZetaCertificate {
    pub zeta: Complex64,
    /// Largest `||[d1, d2] v|| / ||v||` over the trial vectors.
    pub ratio: f64,
    /// `max|c0| + |zeta| max|c1| + |zeta|^2 max|c2|`, an upper bound on `ratio`.
    pub bound: f64,
    /// Largest discrepancy between the composed and contracted commutator,
    /// relative to `||v||`.
    pub expansion_mismatch: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegrabilityReport {
    pub per_zeta: Vec<ZetaCertificate>,
    /// Largest norms of `c0, c1, c2`.
    pub coefficient_norms: [f64; 3],
    /// Largest site norm of `F` or `G`.
    pub field_scale: f64,
    pub trials: usize,
}

impl IntegrabilityReport {
    pub fn max_ratio(&self) -> f64 {
        self.per_zeta.iter().map(|z| z.ratio).fold(0.0, f64::max)
    }

    pub fn max_coefficient(&self) -> f64 {
        self.coefficient_norms.into_iter().fold(0.0, f64::max)
    }

    /// True when every certificate sits below `tolerance * scale^2` and
    /// under its coefficient bound.
    pub fn certifies(&self, tolerance: f64) -> bool {
        let limit = tolerance * self.field_scale.max(1.0).powi(2);
        self.max_ratio() <= limit
            && self.max_coefficient() <= limit
            && self
                .per_zeta
                .iter()
                .all(|z| z.ratio <= z.bound * (1.0 + 1e-12) + limit)
    }
}

/// Applies `[d1, d2]` to `trials` random vector fields for every `zeta` and
/// compares with the coefficient expansion.
pub fn integrability_certificate(
    field: &MatrixLatticeField,
    zetas: &[Complex64],
    trials: usize,
    seed: u64,
) -> Result<IntegrabilityReport> {
    require_periodic(field)?;
    if zetas.is_empty() {
        return Err(Error::EmptyZetas);
    }
    if trials == 0 {
        return Err(Error::InvalidConfig("trials must be >= 1".into()));
    }
    let coeffs = commutator_coefficients(field);
    let norms = coeffs.max_norms();
    let (rows, cols) = field.shape().site_extent();
    let p = field.shape().p;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vs: Vec<VectorField> = (0..trials)
        .map(|_| random_vector_field(rows, cols, p, &mut rng))
        .collect();
    let mut per_zeta = Vec::with_capacity(zetas.len());
    for &zeta in zetas {
        let mut ratio: f64 = 0.0;
        let mut mismatch: f64 = 0.0;
        for v in &vs {
            let nv = vector_field_norm(v);
            let composed = commutator_apply(field, zeta, v)?;
            let contracted = coeffs.contract(zeta, v);
            let diff = Grid::from_fn(rows, cols, |j, k| &composed[(j, k)] - &contracted[(j, k)]);
            ratio = ratio.max(vector_field_norm(&composed) / nv);
            mismatch = mismatch.max(vector_field_norm(&diff) / nv);
        }
        let z = zeta.norm();
        per_zeta.push(ZetaCertificate {
            zeta,
            ratio,
            bound: norms[0] + z * norms[1] + z * z * norms[2],
            expansion_mismatch: mismatch,
        });
    }
    Ok(IntegrabilityReport {
        per_zeta,
        coefficient_norms: norms,
        field_scale: field.max_norm(),
        trials,
    })
}

/// Parses one complex number: `2`, `-1.5`, `i`, `-i`, `3i`, `2+3i`, `1-0.5i`.
pub fn parse_complex(text: &str) -> Result<Complex64> {
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || Error::InvalidConfig(format!("cannot parse {text:?} as a complex number"));
    if s.is_empty() {
        return Err(bad());
    }
    let imag = |t: &str| -> Result<f64> {
        match t {
            "" | "+" => Ok(1.0),
            "-" => Ok(-1.0),
            t => t.parse::<f64>().map_err(|_| bad()),
        }
    };
    let z = match s.strip_suffix(['i', 'j']) {
        None => Complex64::new(s.parse::<f64>().map_err(|_| bad())?, 0.0),
        Some(body) => {
            // Split at the last sign that is neither leading nor an exponent sign.
            let bytes = body.as_bytes();
            let split = (1..bytes.len()).rev().find(|&i| {
                (bytes[i] == b'+' || bytes[i] == b'-') && !matches!(bytes[i - 1], b'e' | b'E')
            });
            match split {
                Some(i) => Complex64::new(
                    body[..i].parse::<f64>().map_err(|_| bad())?,
                    imag(&body[i..])?,
                ),
                None => Complex64::new(0.0, imag(body)?),
            }
        }
    };
    if z.re.is_finite() && z.im.is_finite() {
        Ok(z)
    } else {
        Err(bad())
    }
}

/// Comma-separated list of [`parse_complex`] values.
pub fn parse_zetas(text: &str) -> Result<Vec<Complex64>> {
    let zetas = text
        .split(',')
        .map(parse_complex)
        .collect::<Result<Vec<_>>>()?;
    if zetas.is_empty() {
        return Err(Error::EmptyZetas);
    }
    Ok(zetas)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{holomorphic_residual, moment_residual, LatticeShape};
    use crate::solver::closed_form;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_field(n1: usize, n2: usize, p: usize, seed: u64) -> MatrixLatticeField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shape = LatticeShape::periodic(n1, n2, p).unwrap();
        let mut f = || linalg::random_complex(p, &mut rng);
        let fs = Grid::from_fn(n2, n1, |_, _| f());
        let gs = Grid::from_fn(n2, n1, |_, _| f());
        MatrixLatticeField::new(shape, fs, gs).unwrap()
    }

    #[test]
    fn constant_field_zeta_zero() {
        let shape = LatticeShape::periodic(3, 3, 1).unwrap();
        let field = MatrixLatticeField::constant(shape, c(1.0, 0.0), c(1.0, 0.0));
        let v = Grid::filled(3, 3, CVec::from_element(1, c(1.0, 0.0)));
        let out = LaxOperator::first(&field, c(0.0, 0.0))
            .unwrap()
            .apply(&v)
            .unwrap();
        assert!(out.iter().all(|x| x[0] == c(1.0, 0.0)));
    }

    #[test]
    fn zeta_zero_is_forward_shift() {
        let field = random_field(4, 3, 2, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let v = random_vector_field(3, 4, 2, &mut rng);
        let out = LaxOperator::first(&field, c(0.0, 0.0))
            .unwrap()
            .apply(&v)
            .unwrap();
        for j in 0..3 {
            for k in 0..4 {
                let want = field.g()[(j, k)].adjoint() * v.get_wrapped(j as isize + 1, k as isize);
                assert!((&out[(j, k)] - want).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn composition_matches_expansion() {
        for (seed, p) in [(3, 1), (4, 2), (5, 3)] {
            let field = random_field(4, 4, p, seed);
            let coeffs = commutator_coefficients(&field);
            let mut rng = ChaCha8Rng::seed_from_u64(seed + 10);
            let v = random_vector_field(4, 4, p, &mut rng);
            for zeta in [c(0.0, 0.0), c(1.0, 0.0), c(-0.5, 2.0)] {
                let a = commutator_apply(&field, zeta, &v).unwrap();
                let b = coeffs.contract(zeta, &v);
                for (x, y) in a.iter().zip(b.iter()) {
                    assert!((x - y).norm() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn coefficients_are_lattice_residuals() {
        let field = random_field(5, 4, 2, 8);
        let coeffs = commutator_coefficients(&field);
        let r1 = holomorphic_residual(&field);
        let r2 = moment_residual(&field, None).unwrap();
        for j in 0..4 {
            for k in 0..5 {
                assert!((&coeffs.c0[(j, k)] - r1[(j, k)].adjoint()).norm() < 1e-15);
                assert!((&coeffs.c1[(j, k)] - &r2[(j, k)]).norm() < 1e-15);
                let prev = r1.get_wrapped(j as isize - 1, k as isize - 1);
                assert!((&coeffs.c2[(j, k)] + prev).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn zero_padded_corners_carry_boundary_terms() {
        let data = closed_form(2, 4, 1.0).unwrap();
        let coeffs = commutator_coefficients(&data.to_field());
        let (n2, n1) = (4, 2);
        let a0 = data.a0();
        let b0 = data.b0();
        assert!((coeffs.c1[(n2 - 1, n1 - 1)][(0, 0)] - c(a0 * a0, 0.0)).norm() < 1e-13);
        assert!((coeffs.c1[(0, 0)][(0, 0)] - c(-b0 * b0, 0.0)).norm() < 1e-13);
        let [m0, _, m2] = coeffs.max_norms();
        assert!(m0 < 1e-14 && m2 < 1e-14);
    }

    #[test]
    fn operators_need_periodic_field() {
        let data = closed_form(2, 2, 1.0).unwrap();
        assert!(matches!(
            LaxOperator::first(&data.to_field(), c(1.0, 0.0)),
            Err(Error::RequiresPeriodic)
        ));
    }

    #[test]
    fn empty_zetas_rejected() {
        let field = random_field(3, 3, 1, 0);
        assert!(matches!(
            integrability_certificate(&field, &[], 1, 0),
            Err(Error::EmptyZetas)
        ));
    }

    #[test]
    fn constant_solution_is_certified() {
        let shape = LatticeShape::periodic(4, 5, 1).unwrap();
        let field = MatrixLatticeField::constant(shape, c(1.5, 0.0), c(0.5, 0.0));
        let zetas = [c(0.0, 0.0), c(1.0, 0.0), c(0.0, 1.0)];
        let r = integrability_certificate(&field, &zetas, 3, 1).unwrap();
        assert!(r.certifies(1e-12), "{r:?}");
    }

    #[test]
    fn random_field_is_not_certified() {
        let field = random_field(3, 3, 2, 4);
        let r = integrability_certificate(&field, &[c(1.0, 0.0)], 2, 1).unwrap();
        assert!(r.max_ratio() > 1e-3);
        assert!(r.per_zeta[0].ratio <= r.per_zeta[0].bound);
        assert!(r.per_zeta[0].expansion_mismatch < 1e-13);
    }

    #[test]
    fn zeta_zero_sees_only_c0() {
        // one row, F growing along k, G = 1: c0 = 0 but c1 != 0
        let shape = LatticeShape::periodic(4, 1, 1).unwrap();
        let f = Grid::from_fn(1, 4, |_, k| linalg::real_scalar(1.0 + k as f64, 1));
        let g = Grid::filled(1, 4, linalg::real_scalar(1.0, 1));
        let field = MatrixLatticeField::new(shape, f, g).unwrap();
        let [m0, m1, _] = commutator_coefficients(&field).max_norms();
        assert_eq!(m0, 0.0);
        assert!(m1 > 0.1);
        let r = integrability_certificate(&field, &[c(0.0, 0.0)], 2, 3).unwrap();
        assert_eq!(r.per_zeta[0].bound, 0.0);
        assert!(r.per_zeta[0].ratio < 1e-15);
        let r = integrability_certificate(&field, &[c(1.0, 0.0)], 2, 3).unwrap();
        assert!(r.per_zeta[0].ratio > 0.1);
    }

    #[test]
    fn complex_syntax() {
        let cases = [
            ("0", c(0.0, 0.0)),
            ("1", c(1.0, 0.0)),
            ("-2.5", c(-2.5, 0.0)),
            ("i", c(0.0, 1.0)),
            ("-i", c(0.0, -1.0)),
            ("+i", c(0.0, 1.0)),
            ("3i", c(0.0, 3.0)),
            ("2+3i", c(2.0, 3.0)),
            ("2-i", c(2.0, -1.0)),
            ("-1e-3+2e+1i", c(-1e-3, 20.0)),
            (" 1 - 0.5 i ", c(1.0, -0.5)),
        ];
        for (text, z) in cases {
            assert_eq!(parse_complex(text).unwrap(), z, "{text}");
        }
        for text in ["", "x", "1+", "2+3", "i2", "1++i", "nan", "inf"] {
            assert!(parse_complex(text).is_err(), "{text}");
        }
        assert_eq!(parse_zetas("0,1,i,2+3i").unwrap().len(), 4);
        assert!(parse_zetas("0,,1").is_err());
    }
}
