//! The instanton equations in logarithmic coordinates.
//!
//! Unknowns are `u = log(value)`, ordered `b0`, then site-major over `(j, k)`
//! with `F(j,k)` before `G(j,k)`, then `a0`. Equations are ordered site-major
//! with the holomorphic equation of a site before its moment equation. Both
//! orderings keep the normal matrices banded.

use super::banded::BandMatrix;
use crate::error::Result;
use crate::lattice::{Grid, InstantonData};

/// Row-compressed sparse matrix.
#[derive(Debug, Clone, Default)]
pub struct SparseRows {
    pub rows: Vec<Vec<(usize, f64)>>,
    pub ncols: usize,
}

impl SparseRows {
    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|row| row.iter().map(|&(c, v)| v * x[c]).sum())
            .collect()
    }

    pub fn tr_mul_vec(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.ncols];
        for (row, &yi) in self.rows.iter().zip(y) {
            for &(c, v) in row {
                out[c] += v * yi;
            }
        }
        out
    }

    /// Bandwidth of `J^T J`.
    pub fn normal_bandwidth(&self) -> usize {
        self.rows
            .iter()
            .filter(|r| !r.is_empty())
            .map(|r| {
                let lo = r.iter().map(|e| e.0).min().unwrap();
                let hi = r.iter().map(|e| e.0).max().unwrap();
                hi - lo
            })
            .max()
            .unwrap_or(0)
    }

    /// `J^T J` in band storage.
    pub fn normal_matrix(&self) -> BandMatrix {
        let mut a = BandMatrix::zeros(self.ncols, self.normal_bandwidth());
        for row in &self.rows {
            for (ia, &(p, vp)) in row.iter().enumerate() {
                // column indices within a row are distinct
                for &(q, vq) in &row[..=ia] {
                    a.add(p, q, vp * vq);
                }
            }
        }
        a
    }

    pub fn transpose(&self) -> SparseRows {
        let mut rows = vec![Vec::new(); self.ncols];
        for (r, row) in self.rows.iter().enumerate() {
            for &(c, v) in row {
                rows[c].push((r, v));
            }
        }
        SparseRows {
            rows,
            ncols: self.nrows(),
        }
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.nrows(), self.ncols);
        for (r, row) in self.rows.iter().enumerate() {
            for &(c, v) in row {
                m[(r, c)] += v;
            }
        }
        m
    }
}

#[derive(Debug, Clone)]
pub struct InstantonSystem {
    n1: usize,
    n2: usize,
    f_var: Grid<usize>,
    g_var: Grid<usize>,
    a0_var: usize,
    b0_var: usize,
    nvars: usize,
}

impl InstantonSystem {
    pub fn new(n1: usize, n2: usize) -> Self {
        let mut f_var = Grid::filled(n2, n1.saturating_sub(1), usize::MAX);
        let mut g_var = Grid::filled(n2.saturating_sub(1), n1, usize::MAX);
        let mut next = 1;
        for j in 0..n2 {
            for k in 0..n1 {
                if k + 1 < n1 {
                    f_var[(j, k)] = next;
                    next += 1;
                }
                if j + 1 < n2 {
                    g_var[(j, k)] = next;
                    next += 1;
                }
            }
        }
        Self {
            n1,
            n2,
            f_var,
            g_var,
            a0_var: next,
            b0_var: 0,
            nvars: next + 1,
        }
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn n2(&self) -> usize {
        self.n2
    }

    pub fn unknowns(&self) -> usize {
        self.nvars
    }

    pub fn equations(&self) -> usize {
        (self.n2 - 1) * (self.n1 - 1) + self.n1 * self.n2
    }

    pub fn b0_index(&self) -> usize {
        self.b0_var
    }

    pub fn a0_index(&self) -> usize {
        self.a0_var
    }

    pub fn to_log(&self, data: &InstantonData) -> Vec<f64> {
        let mut u = vec![0.0; self.nvars];
        for ((j, k), &v) in data.f().indexed_iter() {
            u[self.f_var[(j, k)]] = v.ln();
        }
        for ((j, k), &v) in data.g().indexed_iter() {
            u[self.g_var[(j, k)]] = v.ln();
        }
        u[self.a0_var] = data.a0().ln();
        u[self.b0_var] = data.b0().ln();
        u
    }

    pub fn from_log(&self, u: &[f64]) -> Result<InstantonData> {
        let f = self.f_var.map(|&i| u[i].exp());
        let g = self.g_var.map(|&i| u[i].exp());
        InstantonData::new(
            self.n1,
            self.n2,
            f,
            g,
            u[self.a0_var].exp(),
            u[self.b0_var].exp(),
        )
    }

    /// Residuals (boundary terms included) and their Jacobian with respect to `u`.
    pub fn evaluate(&self, u: &[f64]) -> (Vec<f64>, SparseRows) {
        let (n1, n2) = (self.n1, self.n2);
        let ex = |i: usize| u[i].exp();
        let f = |j: isize, k: isize| -> Option<usize> {
            if j < 0 || k < 0 {
                None
            } else {
                self.f_var.get(j as usize, k as usize).copied()
            }
        };
        let g = |j: isize, k: isize| -> Option<usize> {
            if j < 0 || k < 0 {
                None
            } else {
                self.g_var.get(j as usize, k as usize).copied()
            }
        };
        let mut res = Vec::with_capacity(self.equations());
        let mut rows = Vec::with_capacity(self.equations());
        for j in 0..n2 {
            for k in 0..n1 {
                let (js, ks) = (j as isize, k as isize);
                if j + 1 < n2 && k + 1 < n1 {
                    // F(j+1,k) G(j,k) - G(j,k+1) F(j,k)
                    let (fa, ga) = (f(js + 1, ks).unwrap(), g(js, ks).unwrap());
                    let (gb, fb) = (g(js, ks + 1).unwrap(), f(js, ks).unwrap());
                    let t1 = (u[fa] + u[ga]).exp();
                    let t2 = (u[gb] + u[fb]).exp();
                    res.push(t1 - t2);
                    let mut row = vec![(fa, t1), (ga, t1), (gb, -t2), (fb, -t2)];
                    row.sort_by_key(|e| e.0);
                    rows.push(row);
                }
                let mut r = 0.0;
                let mut row = Vec::with_capacity(6);
                let mut term = |idx: Option<usize>, sign: f64| {
                    if let Some(i) = idx {
                        let sq = ex(i) * ex(i);
                        r += sign * sq;
                        row.push((i, 2.0 * sign * sq));
                    }
                };
                term(f(js, ks - 1), 1.0);
                term(f(js, ks), -1.0);
                term(g(js - 1, ks), 1.0);
                term(g(js, ks), -1.0);
                if j == n2 - 1 && k == n1 - 1 {
                    term(Some(self.a0_var), -1.0);
                }
                if j == 0 && k == 0 {
                    term(Some(self.b0_var), 1.0);
                }
                row.sort_by_key(|e| e.0);
                res.push(r);
                rows.push(row);
            }
        }
        (
            res,
            SparseRows {
                rows,
                ncols: self.nvars,
            },
        )
    }
}
