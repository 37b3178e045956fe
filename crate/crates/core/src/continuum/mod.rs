//! Continuum limits of the lattice system: the flat Hitchin equations, their
//! curved variant on the `(r1, r2)` quarter plane, and the Nahm limit of
//! `(2, n)` instanton data.

mod discretize;
mod hitchin;
mod nahm;

pub use discretize::{
    discretize, interior_residual_max, lattice_to_continuum_rate, ConvergenceRow, ConvergenceTable,
    Sampling,
};
pub use hitchin::{
    curved_hitchin_residual, hitchin_residual, Derivatives, HitchinResidual, SampleGrid,
};
pub use nahm::{
    calibrate_nahm, nahm_deviation_profile, nahm_limit_compare, nahm_limit_sweep,
    nahm_profile_closed_form, nahm_profile_derivatives, NahmCalibration, NahmComparison,
    NahmDeviation, NahmProfile, NahmSweep, INNER_FRACTION,
};

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat};

/// Gauge potential and Higgs fields at one point, all antihermitian `p x p`.
#[derive(Debug, Clone, PartialEq)]
pub struct HiggsSample {
    pub ax: CMat,
    pub ay: CMat,
    pub phi1: CMat,
    pub phi2: CMat,
}

impl HiggsSample {
    pub fn zeros(p: usize) -> Self {
        Self {
            ax: linalg::zeros(p),
            ay: linalg::zeros(p),
            phi1: linalg::zeros(p),
            phi2: linalg::zeros(p),
        }
    }

    fn components(&self) -> [&CMat; 4] {
        [&self.ax, &self.ay, &self.phi1, &self.phi2]
    }

    fn combine(&self, other: &Self, a: f64, b: f64) -> Self {
        let (a, b) = (Complex64::new(a, 0.0), Complex64::new(b, 0.0));
        Self {
            ax: &self.ax * a + &other.ax * b,
            ay: &self.ay * a + &other.ay * b,
            phi1: &self.phi1 * a + &other.phi1 * b,
            phi2: &self.phi2 * a + &other.phi2 * b,
        }
    }

    fn max_abs(&self) -> f64 {
        self.components()
            .iter()
            .flat_map(|m| m.iter())
            .fold(0.0, |acc, z| acc.max(z.norm()))
    }
}

pub type Sampler = Arc<dyn Fn(f64, f64) -> HiggsSample + Send + Sync>;
/// Returns `(d/dx, d/dy)` of every component.
pub type DerivativeSampler = Arc<dyn Fn(f64, f64) -> (HiggsSample, HiggsSample) + Send + Sync>;

/// Tolerance for the antihermiticity check on sampled values.
pub const ANTIHERMITIAN_TOLERANCE: f64 = 1e-12;

/// A smooth configuration `(A_x, A_y, Phi_1, Phi_2)` on a rectangle.
#[derive(Clone)]
pub struct ContinuumField {
    p: usize,
    domain: [f64; 4],
    sampler: Sampler,
    derivatives: Option<DerivativeSampler>,
}

impl fmt::Debug for ContinuumField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ContinuumField")
            .field("p", &self.p)
            .field("domain", &self.domain)
            .field("analytic_derivatives", &self.derivatives.is_some())
            .finish()
    }
}

impl ContinuumField {
    /// `domain` is `[x_min, x_max, y_min, y_max]`.
    pub fn new(p: usize, domain: [f64; 4], sampler: Sampler) -> Self {
        Self {
            p,
            domain,
            sampler,
            derivatives: None,
        }
    }

    pub fn with_derivatives(mut self, derivatives: DerivativeSampler) -> Self {
        self.derivatives = Some(derivatives);
        self
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn domain(&self) -> [f64; 4] {
        self.domain
    }

    pub fn has_analytic_derivatives(&self) -> bool {
        self.derivatives.is_some()
    }

    fn contains(&self, x: f64, y: f64) -> bool {
        let [x0, x1, y0, y1] = self.domain;
        x >= x0 && x <= x1 && y >= y0 && y <= y1
    }

    fn validate(&self, x: f64, y: f64, s: &HiggsSample) -> Result<()> {
        for m in s.components() {
            if m.shape() != (self.p, self.p) {
                return Err(Error::Sampler {
                    x,
                    y,
                    reason: format!("expected {0}x{0} matrices", self.p),
                });
            }
            if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::Sampler {
                    x,
                    y,
                    reason: "non-finite value".into(),
                });
            }
        }
        Ok(())
    }

    /// Samples the field, checking shape, finiteness and antihermiticity.
    pub fn sample(&self, x: f64, y: f64) -> Result<HiggsSample> {
        if !self.contains(x, y) {
            return Err(Error::Sampler {
                x,
                y,
                reason: "point outside the domain".into(),
            });
        }
        let s = (self.sampler)(x, y);
        self.validate(x, y, &s)?;
        let dev = s
            .components()
            .iter()
            .map(|m| linalg::antihermitian_deviation(m))
            .fold(0.0, f64::max);
        if dev > ANTIHERMITIAN_TOLERANCE * (1.0 + s.max_abs()) {
            return Err(Error::Sampler {
                x,
                y,
                reason: format!("field is not antihermitian (deviation {dev:.3e})"),
            });
        }
        Ok(s)
    }

    fn analytic_derivatives(&self, x: f64, y: f64) -> Option<Result<(HiggsSample, HiggsSample)>> {
        self.derivatives.as_ref().map(|d| {
            let (dx, dy) = d(x, y);
            self.validate(x, y, &dx)?;
            self.validate(x, y, &dy)?;
            Ok((dx, dy))
        })
    }

    /// The zero configuration.
    pub fn zero(p: usize, domain: [f64; 4]) -> Self {
        Self::new(p, domain, Arc::new(move |_, _| HiggsSample::zeros(p))).with_derivatives(
            Arc::new(move |_, _| (HiggsSample::zeros(p), HiggsSample::zeros(p))),
        )
    }

    /// U(1) solution with `A = 0` and `Phi_1 - i Phi_2 = h(x + i y)` for
    /// holomorphic `h`; `dh` is its complex derivative.
    pub fn holomorphic_u1<H, D>(h: H, dh: D, domain: [f64; 4]) -> Self
    where
        H: Fn(Complex64) -> Complex64 + Send + Sync + 'static,
        D: Fn(Complex64) -> Complex64 + Send + Sync + 'static,
    {
        let i = Complex64::new(0.0, 1.0);
        let sc = |z: Complex64| linalg::scalar(z, 1);
        let sampler = move |x: f64, y: f64| {
            let w = h(Complex64::new(x, y));
            HiggsSample {
                ax: linalg::zeros(1),
                ay: linalg::zeros(1),
                phi1: sc(i * w.im),
                phi2: sc(i * w.re),
            }
        };
        let derivs = move |x: f64, y: f64| {
            let d = dh(Complex64::new(x, y));
            let dx = HiggsSample {
                ax: linalg::zeros(1),
                ay: linalg::zeros(1),
                phi1: sc(i * d.im),
                phi2: sc(i * d.re),
            };
            let dy = HiggsSample {
                ax: linalg::zeros(1),
                ay: linalg::zeros(1),
                phi1: sc(i * d.re),
                phi2: sc(-i * d.im),
            };
            (dx, dy)
        };
        Self::new(1, domain, Arc::new(sampler)).with_derivatives(Arc::new(derivs))
    }
}

/// Holomorphic test functions `h` for [`ContinuumField::holomorphic_u1`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HolomorphicFamily {
    /// `h = z`
    Linear,
    /// `h = z^2`
    Quadratic,
    /// `h = exp(z)`
    Exponential,
}

impl HolomorphicFamily {
    pub fn field(self, domain: [f64; 4]) -> ContinuumField {
        match self {
            HolomorphicFamily::Linear => {
                ContinuumField::holomorphic_u1(|z| z, |_| Complex64::new(1.0, 0.0), domain)
            }
            HolomorphicFamily::Quadratic => {
                ContinuumField::holomorphic_u1(|z| z * z, |z| 2.0 * z, domain)
            }
            HolomorphicFamily::Exponential => {
                ContinuumField::holomorphic_u1(|z| z.exp(), |z| z.exp(), domain)
            }
        }
    }
}

impl std::str::FromStr for HolomorphicFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(Self::Linear),
            "quadratic" => Ok(Self::Quadratic),
            "exp" | "exponential" => Ok(Self::Exponential),
            other => Err(Error::InvalidConfig(format!(
                "unknown family {other:?}; expected linear, quadratic or exp"
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_hermitian_sample() {
        let cf = ContinuumField::new(
            1,
            [0.0, 1.0, 0.0, 1.0],
            Arc::new(|_, _| HiggsSample {
                ax: linalg::real_scalar(1.0, 1),
                ..HiggsSample::zeros(1)
            }),
        );
        assert!(matches!(cf.sample(0.5, 0.5), Err(Error::Sampler { .. })));
    }

    #[test]
    fn rejects_points_outside_domain() {
        let cf = ContinuumField::zero(2, [0.0, 1.0, 0.0, 1.0]);
        assert!(cf.sample(1.5, 0.0).is_err());
        assert!(cf.sample(1.0, 0.0).is_ok());
    }

    #[test]
    fn holomorphic_sample_values() {
        let cf = ContinuumField::holomorphic_u1(|z| z * z, |z| 2.0 * z, [-2.0, 2.0, -2.0, 2.0]);
        let s = cf.sample(1.0, 1.0).unwrap();
        // (1+i)^2 = 2i: Phi_1 = i Im = 2i, Phi_2 = i Re = 0
        assert!((s.phi1[(0, 0)] - Complex64::new(0.0, 2.0)).norm() < 1e-15);
        assert!(s.phi2[(0, 0)].norm() < 1e-15);
    }
}
