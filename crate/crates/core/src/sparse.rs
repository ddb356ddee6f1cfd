//! Compressed sparse column storage for the problem matrices.

use crate::error::{Error, Result};

/// A sparse vector with sorted, unique indices.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseVector {
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl SparseVector {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn unit(i: usize, value: f64) -> Self {
        Self {
            indices: vec![i],
            values: vec![value],
        }
    }

    /// Builds from a dense slice, dropping exact zeros.
    pub fn from_dense(x: &[f64]) -> Self {
        let mut out = Self::new();
        for (i, &v) in x.iter().enumerate() {
            if v != 0.0 {
                out.indices.push(i);
                out.values.push(v);
            }
        }
        out
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices.iter().copied().zip(self.values.iter().copied())
    }

    pub fn to_dense(&self, len: usize) -> Vec<f64> {
        let mut x = vec![0.0; len];
        for (i, v) in self.iter() {
            x[i] = v;
        }
        x
    }

    pub fn dot_dense(&self, x: &[f64]) -> f64 {
        self.iter().map(|(i, v)| v * x[i]).sum()
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        Self {
            indices: self.indices.clone(),
            values: self.values.iter().map(|v| v * alpha).collect(),
        }
    }

    pub fn norm_inf(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Sparse matrix in compressed column form.
///
/// Entries are canonical: within each column row indices are strictly
/// increasing and no stored value is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            col_ptr: vec![0; ncols + 1],
            row_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            nrows: n,
            ncols: n,
            col_ptr: (0..=n).collect(),
            row_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    /// Builds from `(row, col, value)` triplets. Duplicate positions and
    /// out-of-range indices are rejected; zeros and non-finite values too
    /// (zeros are silently dropped, non-finite values are errors).
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        Self::assemble(nrows, ncols, triplets, false)
    }

    /// Like [`SparseMatrix::from_triplets`] but sums duplicate entries.
    pub fn from_triplets_summed(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        Self::assemble(nrows, ncols, triplets, true)
    }

    fn assemble(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)], sum: bool) -> Result<Self> {
        let mut t: Vec<(usize, usize, f64)> = Vec::with_capacity(triplets.len());
        for &(r, c, v) in triplets {
            if r >= nrows || c >= ncols {
                return Err(Error::InvalidProblem(format!(
                    "entry ({r},{c}) out of range for {nrows}x{ncols} matrix"
                )));
            }
            if !v.is_finite() {
                return Err(Error::InvalidProblem(format!("entry ({r},{c}) is not finite")));
            }
            t.push((r, c, v));
        }
        t.sort_by(|a, b| (a.1, a.0).cmp(&(b.1, b.0)));
        let mut merged: Vec<(usize, usize, f64)> = Vec::with_capacity(t.len());
        for (r, c, v) in t {
            match merged.last_mut() {
                Some(last) if last.0 == r && last.1 == c => {
                    if !sum {
                        return Err(Error::InvalidProblem(format!("duplicate entry ({r},{c})")));
                    }
                    last.2 += v;
                }
                _ => merged.push((r, c, v)),
            }
        }
        let mut col_ptr = vec![0usize; ncols + 1];
        let mut row_idx = Vec::with_capacity(merged.len());
        let mut values = Vec::with_capacity(merged.len());
        for (r, c, v) in merged {
            if v == 0.0 {
                continue;
            }
            col_ptr[c + 1] += 1;
            row_idx.push(r);
            values.push(v);
        }
        for c in 0..ncols {
            col_ptr[c + 1] += col_ptr[c];
        }
        Ok(Self {
            nrows,
            ncols,
            col_ptr,
            row_idx,
            values,
        })
    }

    /// Builds from a dense row-major matrix, dropping zeros.
    pub fn from_dense(rows: &[Vec<f64>]) -> Self {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.len());
        let mut t = Vec::new();
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), ncols, "ragged dense matrix");
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    t.push((i, j, v));
                }
            }
        }
        Self::from_triplets(nrows, ncols, &t).expect("dense input is well formed")
    }

    /// Builds from sparse columns (each with indices below `nrows`).
    pub fn from_columns(nrows: usize, cols: &[SparseVector]) -> Self {
        let mut col_ptr = Vec::with_capacity(cols.len() + 1);
        col_ptr.push(0);
        let mut row_idx = Vec::new();
        let mut values = Vec::new();
        for col in cols {
            let mut entries: Vec<(usize, f64)> = col.iter().filter(|&(_, v)| v != 0.0).collect();
            entries.sort_by_key(|e| e.0);
            for (i, v) in entries {
                assert!(i < nrows, "column index out of range");
                row_idx.push(i);
                values.push(v);
            }
            col_ptr.push(row_idx.len());
        }
        Self {
            nrows,
            ncols: cols.len(),
            col_ptr,
            row_idx,
            values,
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Number of stored entries with magnitude above `threshold`.
    pub fn nnz_above(&self, threshold: f64) -> usize {
        self.values.iter().filter(|v| v.abs() > threshold).count()
    }

    pub fn col(&self, j: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.col_ptr[j]..self.col_ptr[j + 1];
        self.row_idx[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    pub fn col_vector(&self, j: usize) -> SparseVector {
        let range = self.col_ptr[j]..self.col_ptr[j + 1];
        SparseVector {
            indices: self.row_idx[range.clone()].to_vec(),
            values: self.values[range].to_vec(),
        }
    }

    pub fn col_nnz(&self, j: usize) -> usize {
        self.col_ptr[j + 1] - self.col_ptr[j]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let range = self.col_ptr[j]..self.col_ptr[j + 1];
        match self.row_idx[range.clone()].binary_search(&i) {
            Ok(k) => self.values[range.start + k],
            Err(_) => 0.0,
        }
    }

    /// All stored entries as `(row, col, value)`, column-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.ncols).flat_map(move |j| self.col(j).map(move |(i, v)| (i, j, v)))
    }

    pub fn transpose(&self) -> Self {
        let t: Vec<_> = self.triplets().map(|(i, j, v)| (j, i, v)).collect();
        Self::from_triplets(self.ncols, self.nrows, &t).expect("transpose of canonical matrix")
    }

    /// `y = self * x`.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols);
        let mut y = vec![0.0; self.nrows];
        for (j, &xj) in x.iter().enumerate() {
            if xj == 0.0 {
                continue;
            }
            for (i, v) in self.col(j) {
                y[i] += v * xj;
            }
        }
        y
    }

    /// `y = selfᵀ * x`.
    pub fn tr_mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.nrows);
        (0..self.ncols)
            .map(|j| self.col(j).map(|(i, v)| v * x[i]).sum())
            .collect()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.ncols]; self.nrows];
        for (i, j, v) in self.triplets() {
            d[i][j] = v;
        }
        d
    }

    pub fn to_nalgebra(&self) -> nalgebra::DMatrix<f64> {
        let mut d = nalgebra::DMatrix::zeros(self.nrows, self.ncols);
        for (i, j, v) in self.triplets() {
            d[(i, j)] = v;
        }
        d
    }

    /// Builds from a dense nalgebra matrix, dropping entries with magnitude
    /// at or below `drop_tol`.
    pub fn from_nalgebra(m: &nalgebra::DMatrix<f64>, drop_tol: f64) -> Self {
        let mut t = Vec::new();
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                let v = m[(i, j)];
                if v.abs() > drop_tol {
                    t.push((i, j, v));
                }
            }
        }
        Self::from_triplets(m.nrows(), m.ncols(), &t).expect("dense input is well formed")
    }

    pub fn norm_inf(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.nrows == self.ncols && self.triplets().all(|(i, j, v)| (self.get(j, i) - v).abs() <= tol)
    }

    /// Dense copy of row `i` (row access is column-scan; fine for the
    /// occasional use outside hot loops).
    pub fn row_dense(&self, i: usize) -> Vec<f64> {
        let mut r = vec![0.0; self.ncols];
        for (j, slot) in r.iter_mut().enumerate() {
            *slot = self.get(i, j);
        }
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_are_canonicalized() {
        let m = SparseMatrix::from_triplets(2, 2, &[(1, 0, 2.0), (0, 0, 1.0), (0, 1, 0.0)]).unwrap();
        assert_eq!(m.nnz(), 2);
        assert_eq!(m.get(1, 0), 2.0);
        assert_eq!(m.get(0, 1), 0.0);
    }

    #[test]
    fn duplicates_rejected_unless_summed() {
        let t = [(0, 0, 1.0), (0, 0, 2.0)];
        assert!(SparseMatrix::from_triplets(1, 1, &t).is_err());
        let m = SparseMatrix::from_triplets_summed(1, 1, &t).unwrap();
        assert_eq!(m.get(0, 0), 3.0);
    }

    #[test]
    fn out_of_range_rejected() {
        assert!(SparseMatrix::from_triplets(1, 1, &[(1, 0, 1.0)]).is_err());
    }

    #[test]
    fn products_match_dense() {
        let m = SparseMatrix::from_dense(&[vec![2.0, 4.0], vec![-1.0, -5.0]]);
        assert_eq!(m.mul_vec(&[1.0, 0.0]), vec![2.0, -1.0]);
        assert_eq!(m.tr_mul_vec(&[1.0, 1.0]), vec![1.0, -1.0]);
        assert_eq!(m.transpose().to_dense(), vec![vec![2.0, -1.0], vec![4.0, -5.0]]);
    }
}
