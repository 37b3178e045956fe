use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

/// Dense row-major 2-D array addressed by `(j, k)`, 0-based.
///
/// `j` is the first lattice index (extent `n2` for full site grids) and `k`
/// the second (extent `n1`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T> Grid<T> {
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for j in 0..rows {
            for k in 0..cols {
                data.push(f(j, k));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a grid from row vectors; fails if rows have unequal lengths.
    pub fn from_rows(rows: Vec<Vec<T>>) -> Option<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != ncols) {
            return None;
        }
        let data: Vec<T> = rows.into_iter().flatten().collect();
        Some(Self {
            rows: nrows,
            cols: if nrows == 0 { 0 } else { ncols },
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn get(&self, j: usize, k: usize) -> Option<&T> {
        if j < self.rows && k < self.cols {
            Some(&self.data[j * self.cols + k])
        } else {
            None
        }
    }

    pub fn get_mut(&mut self, j: usize, k: usize) -> Option<&mut T> {
        if j < self.rows && k < self.cols {
            Some(&mut self.data[j * self.cols + k])
        } else {
            None
        }
    }

    /// Lookup with signed indices; `None` outside the grid.
    pub fn get_signed(&self, j: isize, k: isize) -> Option<&T> {
        if j < 0 || k < 0 {
            return None;
        }
        self.get(j as usize, k as usize)
    }

    /// Lookup with indices reduced modulo the grid extents.
    pub fn get_wrapped(&self, j: isize, k: isize) -> &T {
        let jj = j.rem_euclid(self.rows as isize) as usize;
        let kk = k.rem_euclid(self.cols as isize) as usize;
        &self.data[jj * self.cols + kk]
    }

    pub fn iter(&self) -> impl Iterator<Item = &T> {
        self.data.iter()
    }

    /// Iterates `((j, k), value)` in row-major order.
    pub fn indexed_iter(&self) -> impl Iterator<Item = ((usize, usize), &T)> {
        let cols = self.cols.max(1);
        self.data
            .iter()
            .enumerate()
            .map(move |(i, v)| ((i / cols, i % cols), v))
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> Grid<U> {
        Grid {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(f).collect(),
        }
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<T>>
    where
        T: Clone,
    {
        (0..self.rows)
            .map(|j| self.data[j * self.cols..(j + 1) * self.cols].to_vec())
            .collect()
    }
}

impl<T: Clone> Grid<T> {
    pub fn filled(rows: usize, cols: usize, value: T) -> Self {
        Self {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    /// Transposed copy: entry `(j, k)` moves to `(k, j)`.
    pub fn transposed(&self) -> Self {
        Grid::from_fn(self.cols, self.rows, |j, k| {
            self.data[k * self.cols + j].clone()
        })
    }
}

impl Grid<f64> {
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl<T> Index<(usize, usize)> for Grid<T> {
    type Output = T;

    fn index(&self, (j, k): (usize, usize)) -> &T {
        assert!(
            j < self.rows && k < self.cols,
            "grid index ({j}, {k}) out of range {}x{}",
            self.rows,
            self.cols
        );
        &self.data[j * self.cols + k]
    }
}

impl<T> IndexMut<(usize, usize)> for Grid<T> {
    fn index_mut(&mut self, (j, k): (usize, usize)) -> &mut T {
        assert!(
            j < self.rows && k < self.cols,
            "grid index ({j}, {k}) out of range {}x{}",
            self.rows,
            self.cols
        );
        &mut self.data[j * self.cols + k]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn row_major_layout() {
        let g = Grid::from_fn(2, 3, |j, k| 10 * j + k);
        assert_eq!(g.as_slice(), &[0, 1, 2, 10, 11, 12]);
        assert_eq!(g[(1, 2)], 12);
        assert_eq!(*g.get_wrapped(-1, 3), 10);
        assert!(g.get_signed(-1, 0).is_none());
    }

    #[test]
    fn ragged_rows_rejected() {
        assert!(Grid::from_rows(vec![vec![1, 2], vec![3]]).is_none());
        let g = Grid::from_rows(vec![vec![1, 2], vec![3, 4]]).unwrap();
        assert_eq!(g.transposed()[(0, 1)], 3);
    }

    #[test]
    fn empty_grid() {
        let g: Grid<f64> = Grid::from_fn(0, 4, |_, _| 1.0);
        assert!(g.is_empty());
        assert_eq!(g.max_abs(), 0.0);
        assert_eq!(g.indexed_iter().count(), 0);
    }
}
