//! Singular-value diagnostics of the unnormalized Jacobian at a solution.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::system::SparseRows;

/// Relative threshold below which a singular value counts as zero.
pub const KERNEL_THRESHOLD: f64 = 1e-8;

/// Above this many unknowns the spectrum is estimated with band solves
/// instead of a dense SVD.
pub const DENSE_SVD_LIMIT: usize = 600;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JacobianDiagnostics {
    pub equations: usize,
    pub unknowns: usize,
    pub sigma_max: f64,
    /// Smallest singular value of the (wide) Jacobian itself.
    pub sigma_min: f64,
    /// Singular values below `KERNEL_THRESHOLD * sigma_max` after padding the
    /// Jacobian to a square matrix; one for a one-parameter family.
    pub near_zero_count: usize,
    /// Sine of the angle between the numerical kernel and the all-ones
    /// direction (an upper bound on the estimated path).
    pub kernel_misalignment: f64,
    pub dense: bool,
}

impl JacobianDiagnostics {
    pub fn rank_gap(&self) -> f64 {
        if self.sigma_max > 0.0 {
            self.sigma_min / self.sigma_max
        } else {
            0.0
        }
    }
}

pub fn diagnose(jac: &SparseRows) -> JacobianDiagnostics {
    if jac.ncols <= DENSE_SVD_LIMIT {
        diagnose_dense(jac)
    } else {
        diagnose_banded(jac)
    }
}

/// Full SVD of the Jacobian padded with zero rows to a square matrix.
pub fn diagnose_dense(jac: &SparseRows) -> JacobianDiagnostics {
    let m = jac.nrows();
    let n = jac.ncols;
    let mut padded = DMatrix::<f64>::zeros(n.max(m), n);
    let dense = jac.to_dense();
    padded.view_mut((0, 0), (m, n)).copy_from(&dense);
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let sv: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let sigma_max = sv[0];
    let near_zero_count = sv
        .iter()
        .filter(|&&s| s < KERNEL_THRESHOLD * sigma_max)
        .count();
    // thin spectrum of the m x n Jacobian: the largest min(m, n) values
    let sigma_min = sv[m.min(n) - 1];
    let kernel = v_t.row(*order.last().unwrap());
    let e = 1.0 / (n as f64).sqrt();
    let ones_dot: f64 = kernel.iter().sum::<f64>() * e;
    let kernel_misalignment = kernel
        .iter()
        .map(|v| (v - ones_dot * e).powi(2))
        .sum::<f64>()
        .sqrt();
    JacobianDiagnostics {
        equations: m,
        unknowns: n,
        sigma_max,
        sigma_min,
        near_zero_count,
        kernel_misalignment,
        dense: true,
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(v: &mut [f64]) -> f64 {
    let n = dot(v, v).sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    n
}

/// Extreme singular values from power and inverse iteration on `J J^T`.
pub fn diagnose_banded(jac: &SparseRows) -> JacobianDiagnostics {
    let m = jac.nrows();
    let n = jac.ncols;
    let jt = jac.transpose();
    let gram = jt.normal_matrix(); // (J^T)^T J^T = J J^T
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let start: Vec<f64> = (0..m).map(|_| rng.random::<f64>() - 0.5).collect();

    let mut v = start.clone();
    normalize(&mut v);
    let mut lambda_max = 0.0;
    for _ in 0..500 {
        let mut w = gram.mul_vec(&v);
        let est = dot(&v, &w);
        normalize(&mut w);
        v = w;
        if (est - lambda_max).abs() <= 1e-12 * est {
            lambda_max = est;
            break;
        }
        lambda_max = est;
    }

    let (lambda_min, near_zero_count) = match gram.cholesky() {
        None => (0.0, 2),
        Some(chol) => {
            let mut v = start;
            normalize(&mut v);
            let mut lambda_min = f64::INFINITY;
            for _ in 0..2000 {
                let mut w = chol.solve(&v);
                let inv = dot(&v, &w);
                normalize(&mut w);
                v = w;
                let est = 1.0 / inv;
                if (est - lambda_min).abs() <= 1e-10 * est {
                    lambda_min = est;
                    break;
                }
                lambda_min = est;
            }
            let gap = (lambda_min / lambda_max).sqrt();
            (lambda_min, if gap < KERNEL_THRESHOLD { 2 } else { 1 })
        }
    };
    let sigma_max = lambda_max.sqrt();
    let sigma_min = lambda_min.max(0.0).sqrt();
    let u = vec![1.0 / (n as f64).sqrt(); n];
    let ju = jac.mul_vec(&u);
    let kernel_misalignment = if sigma_min > 0.0 {
        (dot(&ju, &ju).sqrt() / sigma_min).min(1.0)
    } else {
        1.0
    };
    JacobianDiagnostics {
        equations: m,
        unknowns: n,
        sigma_max,
        sigma_min,
        near_zero_count,
        kernel_misalignment,
        dense: false,
    }
}
