//! Dense lower-triangular storage for kernel arrays.

use crate::{Error, Result};

/// Row `n` (1-based, `1 <= n <= N`) holds entries `j = 0..n`.
///
/// Entry `(n, j)` is the weight `x^{(n)}_j` attached to history index
/// `k = n - j`.
#[derive(Debug, Clone, PartialEq)]
pub struct Triangle {
    levels: usize,
    data: Vec<f64>,
}

fn offset(n: usize) -> usize {
    n * (n - 1) / 2
}

impl Triangle {
    pub fn zeros(levels: usize) -> Self {
        Triangle { levels, data: vec![0.0; levels * (levels + 1) / 2] }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let levels = rows.len();
        let mut data = Vec::with_capacity(levels * (levels + 1) / 2);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != i + 1 {
                return Err(Error::SizeMismatch { expected: i + 1, found: row.len() });
            }
            data.extend(row);
        }
        Ok(Triangle { levels, data })
    }

    /// Number of levels `N`.
    pub fn levels(&self) -> usize {
        self.levels
    }

    #[inline]
    pub fn get(&self, n: usize, j: usize) -> f64 {
        debug_assert!(n >= 1 && n <= self.levels && j < n);
        self.data[offset(n) + j]
    }

    #[inline]
    pub fn set(&mut self, n: usize, j: usize, value: f64) {
        debug_assert!(n >= 1 && n <= self.levels && j < n);
        self.data[offset(n) + j] = value;
    }

    pub fn row(&self, n: usize) -> &[f64] {
        &self.data[offset(n)..offset(n) + n]
    }

    pub fn row_mut(&mut self, n: usize) -> &mut [f64] {
        &mut self.data[offset(n)..offset(n) + n]
    }

    /// Iterates `(n, j, value)` in lexicographic order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (1..=self.levels).flat_map(move |n| (0..n).map(move |j| (n, j, self.get(n, j))))
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Leading `levels` rows.
    pub fn truncated(&self, levels: usize) -> Triangle {
        let levels = levels.min(self.levels);
        Triangle { levels, data: self.data[..levels * (levels + 1) / 2].to_vec() }
    }
}
