//! ADHM matrices of torus-symmetric instanton data and the Donaldson
//! equations.
//!
//! Site `(j, k)` (0-based) is basis vector `i = j * n1 + k`. Then `alpha1`
//! sends `e_(j,k)` to `F_{j,k} e_(j,k+1)`, `alpha2` sends `e_(j,k)` to
//! `G_{j,k} e_(j+1,k)`, `a` has `a0` in its bottom-right entry and `b` has
//! `b0` in its top-left entry.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{Boundary, InstantonData, MatrixLatticeField};
use crate::linalg::CMat;

/// Relative singular-value threshold for the rank test.
pub const RANK_THRESHOLD: f64 = 1e-10;

/// The four ADHM matrices: `alpha1, alpha2` are `N x N`, `a` is `2 x N`,
/// `b` is `N x 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct ADHMData {
    pub alpha1: CMat,
    pub alpha2: CMat,
    pub a: CMat,
    pub b: CMat,
}

impl ADHMData {
    /// Checks the dimensions and returns `N`.
    pub fn new(alpha1: CMat, alpha2: CMat, a: CMat, b: CMat) -> Result<Self> {
        let d = Self {
            alpha1,
            alpha2,
            a,
            b,
        };
        d.check()?;
        Ok(d)
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            alpha1: CMat::zeros(n, n),
            alpha2: CMat::zeros(n, n),
            a: CMat::zeros(2, n),
            b: CMat::zeros(n, 2),
        }
    }

    pub fn dim(&self) -> usize {
        self.alpha1.nrows()
    }

    fn check(&self) -> Result<usize> {
        let n = self.alpha1.nrows();
        let ok = self.alpha1.shape() == (n, n)
            && self.alpha2.shape() == (n, n)
            && self.a.shape() == (2, n)
            && self.b.shape() == (n, 2);
        if !ok {
            return Err(Error::ShapeMismatch(format!(
                "alpha1 {:?}, alpha2 {:?}, a {:?}, b {:?} are not N x N, N x N, 2 x N, N x 2",
                self.alpha1.shape(),
                self.alpha2.shape(),
                self.a.shape(),
                self.b.shape()
            )));
        }
        Ok(n)
    }
}

/// `E_j` (diagonal unit) for `j = 1..=n` and `E_j^-` (unit at row `j+1`,
/// column `j`) for `j = 1..n`, as 0-based lists.
pub fn basis_matrices(n: usize) -> (Vec<DMatrix<f64>>, Vec<DMatrix<f64>>) {
    let diag = (0..n)
        .map(|j| {
            let mut m = DMatrix::zeros(n, n);
            m[(j, j)] = 1.0;
            m
        })
        .collect();
    let sub = (0..n.saturating_sub(1))
        .map(|j| {
            let mut m = DMatrix::zeros(n, n);
            m[(j + 1, j)] = 1.0;
            m
        })
        .collect();
    (diag, sub)
}

/// ADHM matrices of positive instanton data.
pub fn assemble(data: &InstantonData) -> ADHMData {
    let c = |v: f64| Complex64::new(v, 0.0);
    assemble_with(
        data.n1(),
        data.n2(),
        |j, k| c(data.f()[(j, k)]),
        |j, k| c(data.g()[(j, k)]),
        c(data.a0()),
        c(data.b0()),
    )
}

/// ADHM matrices of scalar (`p = 1`) zero-padded lattice data with complex
/// boundary values.
pub fn assemble_field(
    field: &MatrixLatticeField,
    a0: Complex64,
    b0: Complex64,
) -> Result<ADHMData> {
    let shape = field.shape();
    if shape.p != 1 || shape.boundary != Boundary::ZeroPadded {
        return Err(Error::InvalidShape(
            "ADHM assembly needs scalar zero-padded data".into(),
        ));
    }
    Ok(assemble_with(
        shape.n1,
        shape.n2,
        |j, k| field.f()[(j, k)][(0, 0)],
        |j, k| field.g()[(j, k)][(0, 0)],
        a0,
        b0,
    ))
}

fn assemble_with(
    n1: usize,
    n2: usize,
    f: impl Fn(usize, usize) -> Complex64,
    g: impl Fn(usize, usize) -> Complex64,
    a0: Complex64,
    b0: Complex64,
) -> ADHMData {
    let n = n1 * n2;
    let idx = |j: usize, k: usize| j * n1 + k;
    let mut out = ADHMData::zeros(n);
    for j in 0..n2 {
        for k in 0..n1.saturating_sub(1) {
            out.alpha1[(idx(j, k + 1), idx(j, k))] = f(j, k);
        }
    }
    for j in 0..n2.saturating_sub(1) {
        for k in 0..n1 {
            out.alpha2[(idx(j + 1, k), idx(j, k))] = g(j, k);
        }
    }
    out.a[(1, n - 1)] = a0;
    out.b[(0, 0)] = b0;
    out
}

/// `op(x)` for the sparse product below.
#[derive(Clone, Copy)]
enum Op {
    Plain,
    Adjoint,
}

fn op_entry(m: &CMat, op: Op, r: usize, c: usize) -> Complex64 {
    match op {
        Op::Plain => m[(r, c)],
        Op::Adjoint => m[(c, r)].conj(),
    }
}

fn op_shape(m: &CMat, op: Op) -> (usize, usize) {
    match op {
        Op::Plain => m.shape(),
        Op::Adjoint => (m.ncols(), m.nrows()),
    }
}

/// `op(x) op(y)` touching only the nonzero entries of `op(x)`; the ADHM
/// matrices have at most one nonzero per column, so this is `O(N^2)`.
fn sparse_mul(x: &CMat, ox: Op, y: &CMat, oy: Op) -> CMat {
    let (rows, inner) = op_shape(x, ox);
    let (_, cols) = op_shape(y, oy);
    let mut out = CMat::zeros(rows, cols);
    let zero = Complex64::new(0.0, 0.0);
    for (c, col) in x.column_iter().enumerate() {
        for (r, &v) in col.iter().enumerate() {
            if v == zero {
                continue;
            }
            // entry (r, c) of x is entry (row, m) of op(x)
            let (row, m, val) = match ox {
                Op::Plain => (r, c, v),
                Op::Adjoint => (c, r, v.conj()),
            };
            debug_assert!(m < inner);
            for k in 0..cols {
                let w = op_entry(y, oy, m, k);
                if w != zero {
                    out[(row, k)] += val * w;
                }
            }
        }
    }
    out
}

/// `[alpha1, alpha2] + b a`.
pub fn donaldson_residual1(adhm: &ADHMData) -> Result<CMat> {
    adhm.check()?;
    let p = Op::Plain;
    Ok(
        sparse_mul(&adhm.alpha1, p, &adhm.alpha2, p) - sparse_mul(&adhm.alpha2, p, &adhm.alpha1, p)
            + sparse_mul(&adhm.b, p, &adhm.a, p),
    )
}

/// `[alpha1, alpha1*] + [alpha2, alpha2*] + b b* - a* a`.
pub fn donaldson_residual2(adhm: &ADHMData) -> Result<CMat> {
    adhm.check()?;
    let (p, s) = (Op::Plain, Op::Adjoint);
    let comm = |m: &CMat| sparse_mul(m, p, m, s) - sparse_mul(m, s, m, p);
    Ok(
        comm(&adhm.alpha1) + comm(&adhm.alpha2) + sparse_mul(&adhm.b, p, &adhm.b, s)
            - sparse_mul(&adhm.a, s, &adhm.a, p),
    )
}

/// True iff every nonzero entry sits where the torus-symmetric ansatz allows.
pub fn check_equivariant_pattern(adhm: &ADHMData, n1: usize, n2: usize) -> bool {
    let n = n1 * n2;
    if adhm.check().ok() != Some(n) || n == 0 {
        return false;
    }
    let site = |i: usize| (i / n1, i % n1);
    let zero = Complex64::new(0.0, 0.0);
    let all = |m: &CMat, allowed: &dyn Fn(usize, usize) -> bool| {
        m.column_iter().enumerate().all(|(c, col)| {
            col.iter()
                .enumerate()
                .all(|(r, &v)| v == zero || allowed(r, c))
        })
    };
    let alpha1_ok = all(&adhm.alpha1, &|r, c| {
        let ((jr, kr), (jc, kc)) = (site(r), site(c));
        jr == jc && kr == kc + 1
    });
    let alpha2_ok = all(&adhm.alpha2, &|r, c| {
        let ((jr, kr), (jc, kc)) = (site(r), site(c));
        kr == kc && jr == jc + 1
    });
    let a_ok = all(&adhm.a, &|r, c| r == 1 && c == n - 1);
    let b_ok = all(&adhm.b, &|r, c| r == 0 && c == 0);
    alpha1_ok && alpha2_ok && a_ok && b_ok
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenericityReport {
    pub passed: bool,
    pub samples: usize,
    /// Smallest `sigma_min / sigma_max` met over both operators and all points.
    pub worst_ratio: f64,
    /// First point at which a rank condition failed.
    pub failing_point: Option<(Complex64, Complex64)>,
}

/// Smallest over largest singular value; zero for rank-deficient input.
fn rank_ratio(m: CMat) -> f64 {
    let sv = m.singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if max > 0.0 {
        min / max
    } else {
        0.0
    }
}

/// Rank test of the ADHM monad at `samples` points: the first is `z = 0`,
/// the rest are complex Gaussian. At each point
/// `[alpha1 - z1; alpha2 - z2; a]` must be injective and
/// `[-(alpha2 - z2), alpha1 - z1, b]` surjective.
pub fn genericity_check(adhm: &ADHMData, samples: usize, seed: u64) -> Result<GenericityReport> {
    let n = adhm.check()?;
    if samples == 0 {
        return Err(Error::InvalidConfig(
            "genericity needs at least one sample".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut gauss = || Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
    let mut worst = f64::INFINITY;
    let mut failing_point = None;
    for s in 0..samples {
        let (z1, z2) = if s == 0 {
            (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0))
        } else {
            (gauss(), gauss())
        };
        let shift = |m: &CMat, z: Complex64| m - CMat::from_diagonal_element(n, n, z);
        let x1 = shift(&adhm.alpha1, z1);
        let x2 = shift(&adhm.alpha2, z2);
        let mut inj = CMat::zeros(2 * n + 2, n);
        inj.view_mut((0, 0), (n, n)).copy_from(&x1);
        inj.view_mut((n, 0), (n, n)).copy_from(&x2);
        inj.view_mut((2 * n, 0), (2, n)).copy_from(&adhm.a);
        let mut sur = CMat::zeros(n, 2 * n + 2);
        sur.view_mut((0, 0), (n, n)).copy_from(&(-x2));
        sur.view_mut((0, n), (n, n)).copy_from(&x1);
        sur.view_mut((0, 2 * n), (n, 2)).copy_from(&adhm.b);
        let ratio = rank_ratio(inj).min(rank_ratio(sur));
        worst = worst.min(ratio);
        if ratio < RANK_THRESHOLD && failing_point.is_none() {
            failing_point = Some((z1, z2));
        }
    }
    Ok(GenericityReport {
        passed: failing_point.is_none(),
        samples,
        worst_ratio: worst,
        failing_point,
    })
}

/// Largest mismatches between the Donaldson residuals and the lattice
/// residuals under the site correspondence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correspondence {
    /// `|D1[(j+1,k+1),(j,k)] - R1(j,k)|`.
    pub holomorphic: f64,
    /// `|D2[(j,k),(j,k)] - R2(j,k)|` with boundary terms.
    pub moment: f64,
    /// Largest entry of either Donaldson residual outside those positions.
    pub off_pattern: f64,
}

impl Correspondence {
    pub fn max(&self) -> f64 {
        self.holomorphic.max(self.moment).max(self.off_pattern)
    }
}

/// Compares the Donaldson residuals with independently computed lattice
/// residuals `r1`, `r2` (scalar, zero-padded extents).
pub fn correspondence(
    d1: &CMat,
    d2: &CMat,
    n1: usize,
    n2: usize,
    r1: impl Fn(usize, usize) -> Complex64,
    r2: impl Fn(usize, usize) -> Complex64,
) -> Correspondence {
    let idx = |j: usize, k: usize| j * n1 + k;
    let mut seen1 = DMatrix::from_element(d1.nrows(), d1.ncols(), false);
    let mut seen2 = DMatrix::from_element(d2.nrows(), d2.ncols(), false);
    let mut holomorphic: f64 = 0.0;
    let mut moment: f64 = 0.0;
    for j in 0..n2.saturating_sub(1) {
        for k in 0..n1.saturating_sub(1) {
            let pos = (idx(j + 1, k + 1), idx(j, k));
            holomorphic = holomorphic.max((d1[pos] - r1(j, k)).norm());
            seen1[pos] = true;
        }
    }
    for j in 0..n2 {
        for k in 0..n1 {
            let pos = (idx(j, k), idx(j, k));
            moment = moment.max((d2[pos] - r2(j, k)).norm());
            seen2[pos] = true;
        }
    }
    let rest = |d: &CMat, seen: &DMatrix<bool>| {
        d.iter()
            .zip(seen.iter())
            .filter(|(_, &s)| !s)
            .fold(0.0f64, |m, (v, _)| m.max(v.norm()))
    };
    Correspondence {
        holomorphic,
        moment,
        off_pattern: rest(d1, &seen1).max(rest(d2, &seen2)),
    }
}

/// Assembles `data`, evaluates both Donaldson residuals and compares them
/// with the lattice residuals.
pub fn verify_correspondence(data: &InstantonData) -> Result<Correspondence> {
    let adhm = assemble(data);
    let d1 = donaldson_residual1(&adhm)?;
    let d2 = donaldson_residual2(&adhm)?;
    let field = data.to_field();
    let r1 = crate::lattice::holomorphic_residual(&field);
    let r2 = crate::lattice::moment_residual(&field, Some(&data.boundary_terms()))?;
    Ok(correspondence(
        &d1,
        &d2,
        data.n1(),
        data.n2(),
        |j, k| r1[(j, k)][(0, 0)],
        |j, k| r2[(j, k)][(0, 0)],
    ))
}
