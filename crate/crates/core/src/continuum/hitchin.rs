use num_complex::Complex64;

use super::{ContinuumField, HiggsSample};
use crate::error::{Error, Result};
use crate::lattice::Grid;
use crate::linalg::{commutator, CMat};

/// Tensor-product evaluation points; results are indexed `[ix][iy]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleGrid {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
}

impl SampleGrid {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Self {
        Self { xs, ys }
    }

    /// `nx x ny` equally spaced points including both ends.
    pub fn uniform(x: (f64, f64), y: (f64, f64), nx: usize, ny: usize) -> Self {
        let lin = |(a, b): (f64, f64), m: usize| -> Vec<f64> {
            if m == 1 {
                return vec![0.5 * (a + b)];
            }
            (0..m)
                .map(|i| a + (b - a) * i as f64 / (m - 1) as f64)
                .collect()
        };
        Self::new(lin(x, nx), lin(y, ny))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Derivatives {
    /// Use the analytic derivative sampler, falling back to the default step.
    Auto,
    Analytic,
    /// Centred differences with step `h`.
    FiniteDifference {
        h: f64,
    },
}

pub const DEFAULT_STEP: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq)]
pub struct HitchinResidual {
    pub e1: Grid<CMat>,
    pub e2: Grid<CMat>,
    pub e3: Grid<CMat>,
    /// Largest change of any residual entry when the step is halved; only set
    /// for finite differences.
    pub richardson_difference: Option<f64>,
}

impl HitchinResidual {
    /// Largest Frobenius norm of each of the three residuals.
    pub fn max_norms(&self) -> [f64; 3] {
        let m = |g: &Grid<CMat>| g.iter().map(|x| x.norm()).fold(0.0, f64::max);
        [m(&self.e1), m(&self.e2), m(&self.e3)]
    }

    pub fn max_norm(&self) -> f64 {
        self.max_norms().into_iter().fold(0.0, f64::max)
    }
}

type Weights = [f64; 3];

fn check_step(h: f64, x: f64, y: f64) -> Result<()> {
    if !(h.is_finite() && h > 0.0) || h < 1e-8 * 1f64.max(x.abs()).max(y.abs()) {
        return Err(Error::StepTooSmall(h));
    }
    Ok(())
}

fn raw_sample(cf: &ContinuumField, x: f64, y: f64) -> Result<HiggsSample> {
    let s = (cf.sampler)(x, y);
    cf.validate(x, y, &s)?;
    Ok(s)
}

fn finite_difference(
    cf: &ContinuumField,
    x: f64,
    y: f64,
    h: f64,
) -> Result<(HiggsSample, HiggsSample)> {
    check_step(h, x, y)?;
    let inv = 0.5 / h;
    let dx = raw_sample(cf, x + h, y)?.combine(&raw_sample(cf, x - h, y)?, inv, -inv);
    let dy = raw_sample(cf, x, y + h)?.combine(&raw_sample(cf, x, y - h)?, inv, -inv);
    Ok((dx, dy))
}

fn residual_at(s: &HiggsSample, dx: &HiggsSample, dy: &HiggsSample, w: Weights) -> [CMat; 3] {
    let c = |v: f64| Complex64::new(v, 0.0);
    let curvature = &dx.ay - &dy.ax + commutator(&s.ax, &s.ay);
    let d1 = |dphi: &CMat, phi: &CMat| dphi + commutator(&s.ax, phi);
    let d2 = |dphi: &CMat, phi: &CMat| dphi + commutator(&s.ay, phi);
    let e1 = curvature - commutator(&s.phi1, &s.phi2) * c(w[0]);
    let e2 = d1(&dx.phi1, &s.phi1) + d2(&dy.phi2, &s.phi2) * c(w[1]);
    let e3 = d1(&dx.phi2, &s.phi2) - d2(&dy.phi1, &s.phi1) * c(w[2]);
    [e1, e2, e3]
}

fn evaluate(
    cf: &ContinuumField,
    grid: &SampleGrid,
    derivatives: Derivatives,
    weights: impl Fn(f64, f64) -> Result<Weights>,
) -> Result<HitchinResidual> {
    let step = match derivatives {
        Derivatives::Analytic if !cf.has_analytic_derivatives() => {
            return Err(Error::InvalidConfig(
                "field has no analytic derivatives".into(),
            ))
        }
        Derivatives::Analytic => None,
        Derivatives::Auto if cf.has_analytic_derivatives() => None,
        Derivatives::Auto => Some(DEFAULT_STEP),
        Derivatives::FiniteDifference { h } => Some(h),
    };
    let (nx, ny) = (grid.xs.len(), grid.ys.len());
    let mut out: [Vec<CMat>; 3] = Default::default();
    let mut richardson: f64 = 0.0;
    for &x in &grid.xs {
        for &y in &grid.ys {
            let w = weights(x, y)?;
            let s = cf.sample(x, y)?;
            let r = match step {
                None => {
                    let (dx, dy) = cf.analytic_derivatives(x, y).expect("checked above")?;
                    residual_at(&s, &dx, &dy, w)
                }
                Some(h) => {
                    let (dx, dy) = finite_difference(cf, x, y, h)?;
                    let coarse = residual_at(&s, &dx, &dy, w);
                    let (dx2, dy2) = finite_difference(cf, x, y, 0.5 * h)?;
                    let fine = residual_at(&s, &dx2, &dy2, w);
                    for (a, b) in coarse.iter().zip(&fine) {
                        richardson = richardson.max((a - b).norm());
                    }
                    coarse
                }
            };
            for (slot, m) in out.iter_mut().zip(r) {
                slot.push(m);
            }
        }
    }
    let [e1, e2, e3] = out.map(|v| {
        let mut it = v.into_iter();
        Grid::from_fn(nx, ny, |_, _| it.next().expect("grid size"))
    });
    Ok(HitchinResidual {
        e1,
        e2,
        e3,
        richardson_difference: step.map(|_| richardson),
    })
}

/// Residuals of the flat Hitchin equations
/// `F - [Phi_1, Phi_2]`, `D_x Phi_1 + D_y Phi_2`, `D_x Phi_2 - D_y Phi_1`.
pub fn hitchin_residual(
    cf: &ContinuumField,
    grid: &SampleGrid,
    derivatives: Derivatives,
) -> Result<HitchinResidual> {
    evaluate(cf, grid, derivatives, |_, _| Ok([1.0; 3]))
}

/// Residuals of the curved variant on the quarter plane with coordinates
/// `(x, y) = (r1, r2)`:
/// `F - [Phi_1, Phi_2] / (r1 r2)`, `D_1 Phi_1 + (r1/r2) D_2 Phi_2`,
/// `D_1 Phi_2 - (r2/r1) D_2 Phi_1`.
pub fn curved_hitchin_residual(
    cf: &ContinuumField,
    grid: &SampleGrid,
    derivatives: Derivatives,
) -> Result<HitchinResidual> {
    evaluate(cf, grid, derivatives, |r1, r2| {
        if !(r1 > 0.0 && r2 > 0.0) {
            return Err(Error::SingularRadius { r1, r2 });
        }
        Ok([1.0 / (r1 * r2), r1 / r2, r2 / r1])
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg;
    use std::sync::Arc;

    fn ci(v: f64) -> CMat {
        linalg::scalar(Complex64::new(0.0, v), 1)
    }

    /// Abelian non-solution with known derivatives.
    fn smooth_abelian() -> ContinuumField {
        let s = |x: f64, y: f64| HiggsSample {
            ax: ci(x * y),
            ay: ci(x.sin()),
            phi1: ci((x + 2.0 * y).cos()),
            phi2: ci(x * x - y),
        };
        let d = |x: f64, y: f64| {
            (
                HiggsSample {
                    ax: ci(y),
                    ay: ci(x.cos()),
                    phi1: ci(-(x + 2.0 * y).sin()),
                    phi2: ci(2.0 * x),
                },
                HiggsSample {
                    ax: ci(x),
                    ay: ci(0.0),
                    phi1: ci(-2.0 * (x + 2.0 * y).sin()),
                    phi2: ci(-1.0),
                },
            )
        };
        ContinuumField::new(1, [-3.0, 3.0, -3.0, 3.0], Arc::new(s)).with_derivatives(Arc::new(d))
    }

    #[test]
    fn holomorphic_family_solves_flat_equations() {
        let cf = ContinuumField::holomorphic_u1(|z| z.exp(), |z| z.exp(), [-1.0, 1.0, -1.0, 1.0]);
        let grid = SampleGrid::uniform((-0.5, 0.5), (-0.5, 0.5), 5, 5);
        let r = hitchin_residual(&cf, &grid, Derivatives::Analytic).unwrap();
        assert!(r.max_norm() < 1e-15);
        let r = hitchin_residual(&cf, &grid, Derivatives::FiniteDifference { h: 1e-4 }).unwrap();
        assert!(r.max_norm() < 1e-7);
    }

    #[test]
    fn abelian_first_residual_is_curl() {
        let cf = smooth_abelian();
        let grid = SampleGrid::uniform((-1.0, 1.0), (-1.0, 1.0), 4, 3);
        let r = hitchin_residual(&cf, &grid, Derivatives::Analytic).unwrap();
        for (ix, &x) in grid.xs.iter().enumerate() {
            for (iy, _) in grid.ys.iter().enumerate() {
                // curl = d_x A_y - d_y A_x = i (cos x - x)
                let want = Complex64::new(0.0, x.cos() - x);
                assert!((r.e1[(ix, iy)][(0, 0)] - want).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn finite_differences_converge_at_second_order() {
        let cf = smooth_abelian();
        let grid = SampleGrid::uniform((-1.0, 1.0), (-1.0, 1.0), 3, 3);
        let exact = hitchin_residual(&cf, &grid, Derivatives::Analytic).unwrap();
        assert!(exact.max_norm() > 0.1);
        let err = |h: f64| {
            let r = hitchin_residual(&cf, &grid, Derivatives::FiniteDifference { h }).unwrap();
            let d = |a: &Grid<CMat>, b: &Grid<CMat>| {
                a.iter()
                    .zip(b.iter())
                    .map(|(p, q)| (p - q).norm())
                    .fold(0.0, f64::max)
            };
            d(&r.e1, &exact.e1)
                .max(d(&r.e2, &exact.e2))
                .max(d(&r.e3, &exact.e3))
        };
        let (e1, e2) = (err(1e-2), err(5e-3));
        let order = (e1 / e2).log2();
        assert!((order - 2.0).abs() < 0.05, "order {order}");
    }

    #[test]
    fn richardson_difference_reported() {
        let cf = smooth_abelian();
        let grid = SampleGrid::uniform((0.0, 1.0), (0.0, 1.0), 2, 2);
        let r = hitchin_residual(&cf, &grid, Derivatives::Auto).unwrap();
        assert!(r.richardson_difference.is_none());
        let r = hitchin_residual(&cf, &grid, Derivatives::FiniteDifference { h: 1e-3 }).unwrap();
        let d = r.richardson_difference.unwrap();
        assert!(d > 0.0 && d < 1e-5);
    }

    #[test]
    fn tiny_step_rejected() {
        let cf = smooth_abelian();
        let grid = SampleGrid::uniform((0.0, 1.0), (0.0, 1.0), 2, 2);
        assert!(matches!(
            hitchin_residual(&cf, &grid, Derivatives::FiniteDifference { h: 1e-12 }),
            Err(Error::StepTooSmall(_))
        ));
    }

    #[test]
    fn zero_field_gives_zero() {
        let cf = ContinuumField::zero(3, [0.1, 2.0, 0.1, 2.0]);
        let grid = SampleGrid::uniform((0.2, 1.8), (0.2, 1.8), 3, 3);
        assert_eq!(
            hitchin_residual(&cf, &grid, Derivatives::Auto)
                .unwrap()
                .max_norm(),
            0.0
        );
        assert_eq!(
            curved_hitchin_residual(&cf, &grid, Derivatives::Auto)
                .unwrap()
                .max_norm(),
            0.0
        );
    }

    #[test]
    fn curved_rejects_axis() {
        let cf = ContinuumField::zero(1, [0.0, 1.0, 0.0, 1.0]);
        let grid = SampleGrid::uniform((0.0, 1.0), (0.5, 1.0), 2, 2);
        assert!(matches!(
            curved_hitchin_residual(&cf, &grid, Derivatives::Auto),
            Err(Error::SingularRadius { .. })
        ));
    }
}
