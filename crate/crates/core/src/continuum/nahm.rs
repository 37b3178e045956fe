//! Nahm limit of `(2, n)` instanton data.
//!
//! Along a `(2, n)` lattice the data obey `G_{j,1}^2 + G_{j,2}^2 = b0^2`
//! exactly, so the two `G` columns sit at a common level `b0 / sqrt(2)` up to
//! an `O(1)` split. With lattice spacing `delta` in `s`, that level is
//! `1/delta`, `F_j ~ f(s_j)`, `G_{j,1} ~ 1/delta + g`, `G_{j,2} ~ 1/delta + h`.
//! The spacing `delta = 2/(n + beta)` and the centre offset `tau` are fitted
//! once at the coarsest size and then frozen.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{loglog_order, ConvergenceOrder};
use crate::lattice::InstantonData;
use crate::solver::{solve, SolverConfig};

/// Fraction of `(-1, 1)` kept in comparisons, away from the poles.
pub const INNER_FRACTION: f64 = 0.8;

/// Scaled residual above which data are not accepted as a solution.
const SOLVED_TOLERANCE: f64 = 1e-8;

/// Values of the closed-form Nahm profile at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NahmProfile {
    pub s: f64,
    pub f: f64,
    pub g: f64,
    pub h: f64,
}

/// `f = (pi/2) sec(pi s/2)`, `g = -(pi/4) tan(pi s/2) = -h`.
pub fn nahm_profile_closed_form(s: f64) -> Result<NahmProfile> {
    if !(s.abs() < 1.0) {
        return Err(Error::OutsideInterval(s));
    }
    let t = FRAC_PI_2 * s;
    let h = FRAC_PI_4 * t.tan();
    Ok(NahmProfile {
        s,
        f: FRAC_PI_2 / t.cos(),
        g: -h,
        h,
    })
}

/// Analytic `(f', g', h')`.
pub fn nahm_profile_derivatives(s: f64) -> Result<(f64, f64, f64)> {
    nahm_profile_closed_form(s)?;
    let t = FRAC_PI_2 * s;
    let sec = 1.0 / t.cos();
    let df = FRAC_PI_2 * FRAC_PI_2 * sec * t.tan();
    let dh = FRAC_PI_4 * FRAC_PI_2 * sec * sec;
    Ok((df, -dh, dh))
}

/// Frozen affine index map: `F_j` sits at `s = (2j - n - 1)/(n + beta) + tau`
/// (1-based `j`), `G_j` half a step further.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NahmCalibration {
    pub beta: f64,
    pub tau: f64,
    /// Size the calibration was fitted at.
    pub fitted_at: usize,
}

impl NahmCalibration {
    pub fn identity() -> Self {
        Self {
            beta: 0.0,
            tau: 0.0,
            fitted_at: 0,
        }
    }

    pub fn spacing(&self, n: usize) -> f64 {
        2.0 / (n as f64 + self.beta)
    }

    pub fn f_site(&self, j: usize, n: usize) -> f64 {
        (2.0 * j as f64 - n as f64 - 1.0) / (n as f64 + self.beta) + self.tau
    }

    pub fn g_site(&self, j: usize, n: usize) -> f64 {
        self.f_site(j, n) + 0.5 * self.spacing(n)
    }

    /// Factor bringing `data` to the common level `b0 = sqrt(2) / delta`.
    pub fn scale(&self, data: &InstantonData) -> f64 {
        SQRT_2 / (self.spacing(data.n2()) * data.b0())
    }
}

/// 1-based indices of the `F` sites (or `G` links) whose calibrated position
/// lies in the inner band.
fn inner(cal: &NahmCalibration, n: usize, link: bool) -> Vec<usize> {
    let count = if link { n - 1 } else { n };
    (1..=count)
        .filter(|&j| {
            let s = if link {
                cal.g_site(j, n)
            } else {
                cal.f_site(j, n)
            };
            s.abs() <= INNER_FRACTION
        })
        .collect()
}

fn check_input(data: &InstantonData) -> Result<()> {
    if data.n1() != 2 || data.n2() < 2 {
        return Err(Error::InvalidShape(format!(
            "Nahm comparison needs (2, n) data, got ({}, {})",
            data.n1(),
            data.n2()
        )));
    }
    let scaled = data.residual_report().scaled_max;
    if !(scaled <= SOLVED_TOLERANCE) {
        return Err(Error::NotASolution(format!("scaled residual {scaled:.3e}")));
    }
    Ok(())
}

fn f_residuals(data: &InstantonData, beta: f64, tau: f64) -> Result<Vec<f64>> {
    let cal = NahmCalibration {
        beta,
        tau,
        fitted_at: 0,
    };
    let n = data.n2();
    let lambda = cal.scale(data);
    // index set frozen while the map moves
    inner(&NahmCalibration::identity(), n, false)
        .into_iter()
        .map(|j| Ok(lambda * data.f()[(j - 1, 0)] - nahm_profile_closed_form(cal.f_site(j, n))?.f))
        .collect()
}

/// Least-squares fit of `(beta, tau)` so that the scaled `F` column matches
/// `f` on the inner sites.
pub fn calibrate_nahm(data: &InstantonData) -> Result<NahmCalibration> {
    check_input(data)?;
    let n = data.n2();
    let (mut beta, mut tau) = (2.0, 0.0);
    let cost = |r: &[f64]| r.iter().map(|x| x * x).sum::<f64>();
    let mut r = f_residuals(data, beta, tau)?;
    // Gauss-Newton with forward-difference Jacobian and step halving
    for _ in 0..100 {
        let eps = 1e-7;
        let rb = f_residuals(data, beta + eps, tau)?;
        let rt = f_residuals(data, beta, tau + eps)?;
        let (mut a11, mut a12, mut a22, mut g1, mut g2) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for i in 0..r.len() {
            let jb = (rb[i] - r[i]) / eps;
            let jt = (rt[i] - r[i]) / eps;
            a11 += jb * jb;
            a12 += jb * jt;
            a22 += jt * jt;
            g1 += jb * r[i];
            g2 += jt * r[i];
        }
        let det = a11 * a22 - a12 * a12;
        if det.abs() < 1e-300 {
            break;
        }
        let db = -(a22 * g1 - a12 * g2) / det;
        let dt = -(a11 * g2 - a12 * g1) / det;
        let mut t = 1.0;
        let c0 = cost(&r);
        let mut accepted = false;
        while t > 1e-6 {
            if let Ok(trial) = f_residuals(data, beta + t * db, tau + t * dt) {
                if cost(&trial) <= c0 {
                    beta += t * db;
                    tau += t * dt;
                    r = trial;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted || (t * db).abs().max((t * dt).abs()) < 1e-13 {
            break;
        }
    }
    Ok(NahmCalibration {
        beta,
        tau,
        fitted_at: n,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NahmComparison {
    pub n: usize,
    pub scale: f64,
    /// Largest `|F_j - f(s_j)|` over the inner sites.
    pub f_error: f64,
    /// Largest `|G_{j,1} - 1/delta - g|`.
    pub g_error: f64,
    /// Largest `|G_{j,2} - 1/delta - h|`.
    pub h_error: f64,
    pub max_error: f64,
    /// Scaled `F` at the middle of the column (mean of the two middle sites
    /// for even `n`).
    pub central_f: f64,
    pub central_error: f64,
}

/// Signed deviation of one lattice value from the profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NahmDeviation {
    /// `'f'`, `'g'` or `'h'`.
    pub component: char,
    /// 1-based site (for `f`) or link (for `g`, `h`) index.
    pub j: usize,
    pub s: f64,
    pub deviation: f64,
}

/// Deviations at every site of the inner band, in calibrated coordinates.
pub fn nahm_deviation_profile(
    data: &InstantonData,
    calibration: &NahmCalibration,
) -> Result<Vec<NahmDeviation>> {
    check_input(data)?;
    let n = data.n2();
    let lambda = calibration.scale(data);
    let level = 1.0 / calibration.spacing(n);
    let mut out = Vec::new();
    for j in inner(calibration, n, false) {
        let s = calibration.f_site(j, n);
        let p = nahm_profile_closed_form(s)?;
        out.push(NahmDeviation {
            component: 'f',
            j,
            s,
            deviation: lambda * data.f()[(j - 1, 0)] - p.f,
        });
    }
    for j in inner(calibration, n, true) {
        let s = calibration.g_site(j, n);
        let p = nahm_profile_closed_form(s)?;
        for (component, col, target) in [('g', 0, p.g), ('h', 1, p.h)] {
            out.push(NahmDeviation {
                component,
                j,
                s,
                deviation: lambda * data.g()[(j - 1, col)] - level - target,
            });
        }
    }
    Ok(out)
}

/// Compares solved `(2, n)` data with the closed-form profile.
pub fn nahm_limit_compare(
    data: &InstantonData,
    calibration: &NahmCalibration,
) -> Result<NahmComparison> {
    let profile = nahm_deviation_profile(data, calibration)?;
    let worst = |c: char| {
        profile
            .iter()
            .filter(|d| d.component == c)
            .fold(0.0f64, |m, d| m.max(d.deviation.abs()))
    };
    let (f_error, g_error, h_error) = (worst('f'), worst('g'), worst('h'));
    let n = data.n2();
    let lambda = calibration.scale(data);
    let central_f = if n % 2 == 1 {
        lambda * data.f()[((n - 1) / 2, 0)]
    } else {
        0.5 * lambda * (data.f()[(n / 2 - 1, 0)] + data.f()[(n / 2, 0)])
    };
    Ok(NahmComparison {
        n,
        scale: lambda,
        f_error,
        g_error,
        h_error,
        max_error: f_error.max(g_error).max(h_error),
        central_f,
        central_error: (central_f - FRAC_PI_2).abs(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NahmSweep {
    pub calibration: NahmCalibration,
    pub rows: Vec<NahmComparison>,
    /// Decay order of `max_error`.
    pub order: ConvergenceOrder,
}

/// Solves `(2, n)` for every `n`, calibrates at the smallest and compares.
pub fn nahm_limit_sweep(ns: &[usize], config: &SolverConfig) -> Result<NahmSweep> {
    if ns.len() < 3 {
        return Err(Error::TooFewSizes {
            needed: 3,
            got: ns.len(),
        });
    }
    let mut data = Vec::with_capacity(ns.len());
    for &n in ns {
        data.push(solve(2, n, config)?.data);
    }
    let coarsest = data
        .iter()
        .min_by_key(|d| d.n2())
        .expect("at least three sizes");
    let calibration = calibrate_nahm(coarsest)?;
    let rows = data
        .iter()
        .map(|d| nahm_limit_compare(d, &calibration))
        .collect::<Result<Vec<_>>>()?;
    let xs: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
    let errs: Vec<f64> = rows.iter().map(|r| r.max_error).collect();
    Ok(NahmSweep {
        calibration,
        order: loglog_order(&xs, &errs)?,
        rows,
    })
}
