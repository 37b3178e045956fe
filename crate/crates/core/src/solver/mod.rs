//! Positive solutions of the torus-symmetric instanton equations.
//!
//! The unknowns are parametrized by their logarithms, so positivity holds by
//! construction. The one-parameter scale family is fixed by one extra
//! normalization equation and the square system is solved by a damped
//! Gauss-Newton (Levenberg-Marquardt) iteration whose normal equations are
//! banded. Larger lattices can be seeded by continuation from smaller ones.

pub mod banded;
mod closed_form;
pub mod spectrum;
pub mod system;

pub use closed_form::{closed_form, swap as verify_swap};
pub use spectrum::{JacobianDiagnostics, KERNEL_THRESHOLD};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{Grid, InstantonData, ResidualReport};
use system::InstantonSystem;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Normalization {
    /// `b0 = 1`.
    FixB0,
    /// Sum of squares of all unknowns equal to the given positive constant.
    FixSumSquares(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum InitialGuess {
    /// Every log-variable zero.
    Ones,
    /// Solve a ladder of smaller lattices first and interpolate upward.
    Continuation,
    Custom(InstantonData),
}

/// Levenberg-Marquardt damping schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Damping {
    /// Initial damping relative to the largest diagonal entry of `J^T J`.
    pub initial: f64,
    /// Steps shorter than this (relative to `1 + |u|`) count as a stall.
    pub min_step: f64,
    /// Damping beyond which the iteration is declared stalled.
    pub max_damping: f64,
}

impl Default for Damping {
    fn default() -> Self {
        Self {
            initial: 1e-3,
            min_step: 1e-15,
            max_damping: 1e16,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Target for `ResidualReport::scaled_max`.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub normalization: Normalization,
    pub initial_guess: InitialGuess,
    pub damping: Damping,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-12,
            max_iterations: 500,
            normalization: Normalization::FixB0,
            initial_guess: InitialGuess::Ones,
            damping: Damping::default(),
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidConfig("tolerance must be positive".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig("max_iterations must be >= 1".into()));
        }
        if let Normalization::FixSumSquares(c) = self.normalization {
            if !(c > 0.0 && c.is_finite()) {
                return Err(Error::NormalizationInfeasible(format!(
                    "sum of squares must be positive, got {c}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveOutcome {
    pub data: InstantonData,
    pub report: ResidualReport,
    pub iterations: usize,
    /// Smallest over largest singular value of the unnormalized Jacobian.
    pub jacobian_rank_gap: f64,
    pub jacobian: JacobianDiagnostics,
}

/// Rescales all unknowns by the unique `lambda > 0` meeting the convention.
pub fn normalize(data: &InstantonData, normalization: Normalization) -> Result<InstantonData> {
    let lambda = match normalization {
        Normalization::FixB0 => 1.0 / data.b0(),
        Normalization::FixSumSquares(c) => {
            if !(c > 0.0 && c.is_finite()) {
                return Err(Error::NormalizationInfeasible(format!(
                    "sum of squares must be positive, got {c}"
                )));
            }
            (c / data.sum_of_squares()).sqrt()
        }
    };
    if lambda == 1.0 {
        return Ok(data.clone());
    }
    data.scaled(lambda)
}

/// Random positive data with log-variables uniform in `[-spread, spread]`.
pub fn random_start(n1: usize, n2: usize, spread: f64, seed: u64) -> Result<InstantonData> {
    let sys = InstantonSystem::new(n1, n2);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u: Vec<f64> = (0..sys.unknowns())
        .map(|_| rng.random_range(-spread..=spread))
        .collect();
    sys.from_log(&u)
}

/// Normalization equation in log coordinates: residual and dense gradient.
fn normalization_equation(
    norm: Normalization,
    sys: &InstantonSystem,
    u: &[f64],
) -> (f64, Vec<f64>) {
    let mut grad = vec![0.0; u.len()];
    match norm {
        Normalization::FixB0 => {
            grad[sys.b0_index()] = 1.0;
            (u[sys.b0_index()], grad)
        }
        Normalization::FixSumSquares(c) => {
            let sq: Vec<f64> = u.iter().map(|x| (2.0 * x).exp()).collect();
            let total: f64 = sq.iter().sum();
            for (gi, s) in grad.iter_mut().zip(&sq) {
                *gi = 2.0 * s / total;
            }
            (total.ln() - c.ln(), grad)
        }
    }
}

fn scaled_residual(res: &[f64], u: &[f64]) -> f64 {
    let max_abs = res.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    let max_val = u.iter().fold(f64::NEG_INFINITY, |m, &x| m.max(x)).exp();
    max_abs / (1.0 + max_val * max_val)
}

/// Solves for positive instanton data on the `(n1, n2)` lattice.
pub fn solve(n1: usize, n2: usize, config: &SolverConfig) -> Result<SolveOutcome> {
    config.validate()?;
    if n1 == 0 || n2 == 0 {
        return Err(Error::InvalidShape(format!(
            "n1={n1}, n2={n2} must be >= 1"
        )));
    }
    let sys = InstantonSystem::new(n1, n2);
    let start = match &config.initial_guess {
        InitialGuess::Ones => vec![0.0; sys.unknowns()],
        InitialGuess::Custom(d) => {
            if (d.n1(), d.n2()) != (n1, n2) {
                return Err(Error::ShapeMismatch(format!(
                    "initial guess is ({}, {}), expected ({n1}, {n2})",
                    d.n1(),
                    d.n2()
                )));
            }
            sys.to_log(d)
        }
        InitialGuess::Continuation => {
            let ladder = continuation_ladder(n1, n2);
            if ladder.len() > 1 {
                let coarse = continuation_solve(&ladder[..ladder.len() - 1], config)?;
                let prev = &coarse.last().expect("non-empty ladder").data;
                sys.to_log(&interpolate(prev, n1, n2, config.normalization)?)
            } else {
                vec![0.0; sys.unknowns()]
            }
        }
    };
    solve_from(&sys, start, config)
}

/// Sizes visited when continuing up to `(n1, n2)`: halve until both are at most 8.
pub fn continuation_ladder(n1: usize, n2: usize) -> Vec<(usize, usize)> {
    let mut ladder = vec![(n1, n2)];
    let (mut a, mut b) = (n1, n2);
    while a > 8 || b > 8 {
        a = if a > 8 { a.div_ceil(2) } else { a };
        b = if b > 8 { b.div_ceil(2) } else { b };
        ladder.push((a, b));
    }
    ladder.reverse();
    ladder
}

/// Solves each target in turn, seeding every solve after the first by
/// bilinear interpolation of the previous solution's log-variables.
pub fn continuation_solve(
    targets: &[(usize, usize)],
    config: &SolverConfig,
) -> Result<Vec<SolveOutcome>> {
    config.validate()?;
    let mut out: Vec<SolveOutcome> = Vec::with_capacity(targets.len());
    for &(n1, n2) in targets {
        let guess = match out.last() {
            None => InitialGuess::Ones,
            Some(prev) => {
                InitialGuess::Custom(interpolate(&prev.data, n1, n2, config.normalization)?)
            }
        };
        let cfg = SolverConfig {
            initial_guess: guess,
            ..config.clone()
        };
        let outcome = solve(n1, n2, &cfg).map_err(|e| match e {
            Error::NonConvergence { .. } => e,
            other => {
                Error::InvalidConfig(format!("continuation step ({n1}, {n2}) failed: {other}"))
            }
        })?;
        out.push(outcome);
    }
    Ok(out)
}

/// Bilinear interpolation of log-values. Positions are fractions of the
/// lattice extent: sites sit at `(i + 1/2) / n`, links between sites `i` and
/// `i + 1` at `(i + 1) / n`.
fn interpolate(
    prev: &InstantonData,
    n1: usize,
    n2: usize,
    norm: Normalization,
) -> Result<InstantonData> {
    let sample =
        |grid: &Grid<f64>, row_link: bool, u: f64, v: f64, pn2: usize, pn1: usize| -> f64 {
            let (rows, cols) = grid.dims();
            let rj = if row_link {
                u * pn2 as f64 - 1.0
            } else {
                u * pn2 as f64 - 0.5
            };
            let ck = if row_link {
                v * pn1 as f64 - 0.5
            } else {
                v * pn1 as f64 - 1.0
            };
            let lerp_index = |x: f64, len: usize| -> (usize, usize, f64) {
                let x = x.clamp(0.0, (len - 1) as f64);
                let i0 = x.floor() as usize;
                let i1 = (i0 + 1).min(len - 1);
                (i0, i1, x - i0 as f64)
            };
            let (j0, j1, tj) = lerp_index(rj, rows);
            let (k0, k1, tk) = lerp_index(ck, cols);
            let l = |j: usize, k: usize| grid[(j, k)].ln();
            let top = l(j0, k0) * (1.0 - tk) + l(j0, k1) * tk;
            let bot = l(j1, k0) * (1.0 - tk) + l(j1, k1) * tk;
            (top * (1.0 - tj) + bot * tj).exp()
        };
    let (pn1, pn2) = (prev.n1(), prev.n2());
    let mean = (prev.a0() * prev.b0()).sqrt();
    let f = Grid::from_fn(n2, n1 - 1, |j, k| {
        if prev.f().is_empty() {
            mean
        } else {
            sample(
                prev.f(),
                false,
                (j as f64 + 0.5) / n2 as f64,
                (k as f64 + 1.0) / n1 as f64,
                pn2,
                pn1,
            )
        }
    });
    let g = Grid::from_fn(n2 - 1, n1, |j, k| {
        if prev.g().is_empty() {
            mean
        } else {
            sample(
                prev.g(),
                true,
                (j as f64 + 1.0) / n2 as f64,
                (k as f64 + 0.5) / n1 as f64,
                pn2,
                pn1,
            )
        }
    });
    let data = InstantonData::new(n1, n2, f, g, prev.a0(), prev.b0())?;
    normalize(&data, norm)
}

fn solve_from(
    sys: &InstantonSystem,
    mut u: Vec<f64>,
    config: &SolverConfig,
) -> Result<SolveOutcome> {
    let (n1, n2) = (sys.n1(), sys.n2());
    let norm = config.normalization;
    let cost_of = |u: &[f64]| -> (Vec<f64>, system::SparseRows, f64, Vec<f64>, f64) {
        let (r, jac) = sys.evaluate(u);
        let (rn, wn) = normalization_equation(norm, sys, u);
        let cost = 0.5 * (r.iter().map(|x| x * x).sum::<f64>() + rn * rn);
        (r, jac, rn, wn, cost)
    };

    let (mut r, mut jac, mut rn, mut wn, mut cost) = cost_of(&u);
    let mut mu = -1.0;
    let mut nu = 2.0;
    let mut best = f64::INFINITY;
    let mut iterations = 0;
    loop {
        let scaled = scaled_residual(&r, &u);
        best = best.min(scaled);
        if scaled <= config.tolerance && rn.abs() <= 1e-10 {
            let data = normalize(&sys.from_log(&u)?, norm)?;
            let report = data.residual_report();
            if report.scaled_max <= config.tolerance {
                let (_, unnormalized) = sys.evaluate(&sys.to_log(&data));
                let jacobian = spectrum::diagnose(&unnormalized);
                return Ok(SolveOutcome {
                    data,
                    report,
                    iterations,
                    jacobian_rank_gap: jacobian.rank_gap(),
                    jacobian,
                });
            }
        }
        if iterations >= config.max_iterations {
            break;
        }
        iterations += 1;

        let a = jac.normal_matrix();
        let mut grad = jac.tr_mul_vec(&r);
        for (g, w) in grad.iter_mut().zip(&wn) {
            *g += w * rn;
        }
        let diag: Vec<f64> = a
            .diagonal()
            .iter()
            .zip(&wn)
            .map(|(d, w)| d + w * w)
            .collect();
        let dmax = diag.iter().fold(0.0f64, |m, &d| m.max(d));
        let scale: Vec<f64> = diag
            .iter()
            .map(|&d| d.max(1e-12 * dmax).max(f64::MIN_POSITIVE))
            .collect();
        if mu < 0.0 {
            mu = config.damping.initial * dmax.max(1.0);
        }

        let mut accepted = false;
        while mu <= config.damping.max_damping * dmax.max(1.0) {
            let mut damped = a.clone();
            damped.add_diagonal(&scale.iter().map(|s| mu * s).collect::<Vec<_>>());
            let Some(chol) = damped.cholesky() else {
                mu *= nu;
                nu *= 2.0;
                continue;
            };
            // (A + mu D + w w^T) step = -grad, via Sherman-Morrison on the dense row
            let neg_grad: Vec<f64> = grad.iter().map(|g| -g).collect();
            let y = chol.solve(&neg_grad);
            let z = chol.solve(&wn);
            let wy: f64 = wn.iter().zip(&y).map(|(a, b)| a * b).sum();
            let wz: f64 = wn.iter().zip(&z).map(|(a, b)| a * b).sum();
            let step: Vec<f64> = y
                .iter()
                .zip(&z)
                .map(|(yi, zi)| yi - zi * wy / (1.0 + wz))
                .collect();

            let step_norm = step.iter().map(|s| s * s).sum::<f64>().sqrt();
            let u_norm = u.iter().map(|s| s * s).sum::<f64>().sqrt();
            if step_norm < config.damping.min_step * (1.0 + u_norm) {
                return Err(Error::NonConvergence {
                    n1,
                    n2,
                    iterations,
                    best_residual: best,
                });
            }
            let trial: Vec<f64> = u.iter().zip(&step).map(|(a, b)| a + b).collect();
            let (tr, tjac, trn, twn, tcost) = cost_of(&trial);
            // predicted decrease of the Gauss-Newton model: (mu h^T D h - h^T grad) / 2
            let predicted: f64 = 0.5
                * step
                    .iter()
                    .zip(&grad)
                    .zip(&scale)
                    .map(|((h, g), d)| mu * d * h * h - h * g)
                    .sum::<f64>();
            let rho = (cost - tcost) / predicted;
            if tcost.is_finite() && rho > 0.0 {
                u = trial;
                r = tr;
                jac = tjac;
                rn = trn;
                wn = twn;
                cost = tcost;
                mu *= (1.0f64 / 3.0).max(1.0 - (2.0 * rho - 1.0).powi(3));
                nu = 2.0;
                accepted = true;
                break;
            }
            mu *= nu;
            nu *= 2.0;
        }
        if !accepted {
            return Err(Error::NonConvergence {
                n1,
                n2,
                iterations,
                best_residual: best,
            });
        }
    }
    Err(Error::NonConvergence {
        n1,
        n2,
        iterations,
        best_residual: best,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solve_two_by_two() {
        let out = solve(2, 2, &SolverConfig::default()).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        for &v in out.data.f().iter().chain(out.data.g().iter()) {
            assert!((v - h).abs() < 1e-12);
        }
        assert!((out.data.a0() - 1.0).abs() < 1e-12);
        assert_eq!(out.data.b0(), 1.0);
        assert_eq!(out.jacobian.near_zero_count, 1);
    }

    #[test]
    fn normalize_conventions() {
        let d = closed_form(2, 2, 3.0).unwrap();
        let n = normalize(&d, Normalization::FixB0).unwrap();
        assert!((n.b0() - 1.0).abs() < 1e-15);
        assert!((n.f()[(0, 0)] - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        assert_eq!(normalize(&n, Normalization::FixB0).unwrap(), n);
        let s = normalize(&d, Normalization::FixSumSquares(1.0)).unwrap();
        assert!((s.sum_of_squares() - 1.0).abs() < 1e-14);
        assert!(normalize(&d, Normalization::FixSumSquares(-1.0)).is_err());
    }

    #[test]
    fn config_validation() {
        let bad = SolverConfig {
            tolerance: 0.0,
            ..Default::default()
        };
        assert!(solve(2, 2, &bad).is_err());
        let bad = SolverConfig {
            max_iterations: 0,
            ..Default::default()
        };
        assert!(matches!(solve(2, 2, &bad), Err(Error::InvalidConfig(_))));
        let bad = SolverConfig {
            normalization: Normalization::FixSumSquares(0.0),
            ..Default::default()
        };
        assert!(matches!(
            solve(2, 2, &bad),
            Err(Error::NormalizationInfeasible(_))
        ));
    }

    #[test]
    fn iteration_budget_exhaustion_reports_best() {
        let cfg = SolverConfig {
            max_iterations: 1,
            initial_guess: InitialGuess::Custom(random_start(5, 5, 1.0, 3).unwrap()),
            ..Default::default()
        };
        match solve(5, 5, &cfg) {
            Err(Error::NonConvergence {
                best_residual,
                iterations,
                ..
            }) => {
                assert!(best_residual > 0.0);
                assert_eq!(iterations, 1);
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn ladder_halves_to_small_sizes() {
        assert_eq!(continuation_ladder(4, 3), vec![(4, 3)]);
        assert_eq!(
            continuation_ladder(50, 50),
            vec![(7, 7), (13, 13), (25, 25), (50, 50)]
        );
    }

    #[test]
    fn sum_squares_normalization_solves() {
        let cfg = SolverConfig {
            normalization: Normalization::FixSumSquares(2.0),
            ..Default::default()
        };
        let out = solve(3, 4, &cfg).unwrap();
        assert!((out.data.sum_of_squares() - 2.0).abs() < 1e-12);
    }
}
