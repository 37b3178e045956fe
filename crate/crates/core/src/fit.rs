//! Least-squares line fits used by the convergence studies.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares `y = intercept + slope x`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<LineFit> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::TooFewSizes {
            needed: 2,
            got: xs.len().min(ys.len()),
        });
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        (sxy * sxy) / (sxx * syy)
    };
    Ok(LineFit {
        slope,
        intercept,
        r_squared,
    })
}

/// Observed order of decay of `errors` against resolution `ns`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ConvergenceOrder {
    /// Every error is exactly zero.
    Exact,
    Fitted {
        order: f64,
        r_squared: f64,
    },
}

impl ConvergenceOrder {
    /// Order as a number; `Exact` maps to infinity.
    pub fn value(&self) -> f64 {
        match *self {
            ConvergenceOrder::Exact => f64::INFINITY,
            ConvergenceOrder::Fitted { order, .. } => order,
        }
    }
}

impl std::fmt::Display for ConvergenceOrder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ConvergenceOrder::Exact => write!(f, "exact"),
            ConvergenceOrder::Fitted { order, r_squared } => {
                write!(f, "{order:.4} (r^2 = {r_squared:.4})")
            }
        }
    }
}

/// Fits `log(error) = c - order * log(n)`; at least three sizes required.
pub fn loglog_order(ns: &[f64], errors: &[f64]) -> Result<ConvergenceOrder> {
    if ns.len() < 3 || errors.len() != ns.len() {
        return Err(Error::TooFewSizes {
            needed: 3,
            got: ns.len().min(errors.len()),
        });
    }
    if errors.iter().all(|&e| e == 0.0) {
        return Ok(ConvergenceOrder::Exact);
    }
    // an exact zero among nonzero errors would poison the logarithm
    let floor = errors
        .iter()
        .filter(|&&e| e > 0.0)
        .fold(f64::INFINITY, |m, &e| m.min(e))
        * 1e-3;
    let lx: Vec<f64> = ns.iter().map(|n| n.ln()).collect();
    let ly: Vec<f64> = errors.iter().map(|e| e.max(floor).ln()).collect();
    let fit = linear_fit(&lx, &ly)?;
    Ok(ConvergenceOrder::Fitted {
        order: -fit.slope,
        r_squared: fit.r_squared,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_power_law() {
        let ns = [16.0, 32.0, 64.0, 128.0];
        let errs: Vec<f64> = ns.iter().map(|n: &f64| 3.0 * n.powf(-1.7)).collect();
        match loglog_order(&ns, &errs).unwrap() {
            ConvergenceOrder::Fitted { order, r_squared } => {
                assert!((order - 1.7).abs() < 1e-12);
                assert!((r_squared - 1.0).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn zero_errors_are_exact() {
        assert_eq!(
            loglog_order(&[1.0, 2.0, 4.0], &[0.0, 0.0, 0.0]).unwrap(),
            ConvergenceOrder::Exact
        );
    }

    #[test]
    fn needs_three_points() {
        assert!(matches!(
            loglog_order(&[1.0, 2.0], &[1.0, 0.5]),
            Err(Error::TooFewSizes { needed: 3, got: 2 })
        ));
    }

    #[test]
    fn line_fit_exact() {
        let fit = linear_fit(&[0.0, 1.0, 2.0], &[1.0, 3.0, 5.0]).unwrap();
        assert!((fit.slope - 2.0).abs() < 1e-15);
        assert!((fit.intercept - 1.0).abs() < 1e-15);
    }
}
