//! Compressed-row sparse matrices.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Rectangular CSR matrix; used for the difference factors `D_j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CsrMatrix {
    pub rows: usize,
    pub cols: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from `(row, col, value)` triplets; duplicates are summed and
    /// explicit zeros dropped.
    pub fn from_triplets(rows: usize, cols: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; rows + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        let mut row_of = Vec::with_capacity(triplets.len());
        for (r, c, v) in triplets {
            assert!(r < rows && c < cols, "triplet ({r}, {c}) outside {rows} x {cols}");
            if last == Some((r, c)) {
                *values.last_mut().expect("previous entry") += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_of.push(r);
                last = Some((r, c));
            }
        }
        // drop zeros created by cancellation or given explicitly
        let keep: Vec<usize> = (0..values.len()).filter(|&i| values[i] != 0.0).collect();
        let col_idx: Vec<usize> = keep.iter().map(|&i| col_idx[i]).collect();
        let row_of: Vec<usize> = keep.iter().map(|&i| row_of[i]).collect();
        let values: Vec<f64> = keep.iter().map(|&i| values[i]).collect();
        for &r in &row_of {
            row_ptr[r + 1] += 1;
        }
        for r in 0..rows {
            row_ptr[r + 1] += row_ptr[r];
        }
        Self { rows, cols, row_ptr, col_idx, values }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.row_ptr[r], self.row_ptr[r + 1]);
        (&self.col_idx[a..b], &self.values[a..b])
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let (cols, vals) = self.row(r);
        cols.binary_search(&c).map(|i| vals[i]).unwrap_or(0.0)
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.cols);
        assert_eq!(y.len(), self.rows);
        y.par_iter_mut().enumerate().for_each(|(r, out)| {
            let (cols, vals) = self.row(r);
            *out = cols.iter().zip(vals).map(|(c, v)| v * x[*c]).sum();
        });
    }

    /// Triplets of `A^T A`.
    pub fn gram_triplets(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for r in 0..self.rows {
            let (cols, vals) = self.row(r);
            for (a, va) in cols.iter().zip(vals) {
                for (b, vb) in cols.iter().zip(vals) {
                    out.push((*a, *b, va * vb));
                }
            }
        }
        out
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.rows * self.cols];
        for r in 0..self.rows {
            let (cols, vals) = self.row(r);
            for (c, v) in cols.iter().zip(vals) {
                d[r * self.cols + c] = *v;
            }
        }
        d
    }
}

/// Square CSR matrix expected to be symmetric.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparseSymmetricOperator {
    inner: CsrMatrix,
}

impl SparseSymmetricOperator {
    pub fn from_triplets(dim: usize, triplets: Vec<(usize, usize, f64)>) -> Self {
        Self { inner: CsrMatrix::from_triplets(dim, dim, triplets) }
    }

    pub fn diagonal_matrix(diag: &[f64]) -> Self {
        Self::from_triplets(diag.len(), diag.iter().enumerate().map(|(i, v)| (i, i, *v)).collect())
    }

    pub fn dim(&self) -> usize {
        self.inner.rows
    }

    pub fn nnz(&self) -> usize {
        self.inner.nnz()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.inner.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.inner.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.inner.values
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.inner.get(r, c)
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        self.inner.matvec(x, y)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.get(i, i)).collect()
    }

    /// `max |A_ij - A_ji|`, including entries present on one side only.
    pub fn symmetry_defect(&self) -> f64 {
        (0..self.dim())
            .into_par_iter()
            .map(|r| {
                let (cols, vals) = self.inner.row(r);
                cols.iter().zip(vals).map(|(c, v)| (v - self.get(*c, r)).abs()).fold(0.0, f64::max)
            })
            .reduce(|| 0.0, f64::max)
    }

    /// Gershgorin interval containing the spectrum.
    pub fn gershgorin_bounds(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for r in 0..self.dim() {
            let (cols, vals) = self.inner.row(r);
            let mut d = 0.0;
            let mut off = 0.0;
            for (c, v) in cols.iter().zip(vals) {
                if *c == r {
                    d = *v;
                } else {
                    off += v.abs();
                }
            }
            lo = lo.min(d - off);
            hi = hi.max(d + off);
        }
        (lo, hi)
    }

    pub fn to_dense(&self) -> Vec<f64> {
        self.inner.to_dense()
    }

    /// Principal submatrix on the sorted index set `keep`.
    pub fn restrict(&self, keep: &[usize]) -> Self {
        let mut map = vec![usize::MAX; self.dim()];
        for (new, &old) in keep.iter().enumerate() {
            map[old] = new;
        }
        let mut trip = Vec::new();
        for (new_r, &old_r) in keep.iter().enumerate() {
            let (cols, vals) = self.inner.row(old_r);
            for (c, v) in cols.iter().zip(vals) {
                if map[*c] != usize::MAX {
                    trip.push((new_r, map[*c], *v));
                }
            }
        }
        Self::from_triplets(keep.len(), trip)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_are_summed_and_sorted() {
        let a = CsrMatrix::from_triplets(2, 3, vec![(1, 2, 1.0), (0, 1, 2.0), (1, 2, 3.0), (0, 0, 0.0)]);
        assert_eq!(a.row_ptr, vec![0, 1, 2]);
        assert_eq!(a.get(1, 2), 4.0);
        assert_eq!(a.get(0, 0), 0.0);
        let mut y = vec![0.0; 2];
        a.matvec(&[1.0, 1.0, 2.0], &mut y);
        assert_eq!(y, vec![2.0, 8.0]);
    }

    #[test]
    fn gram_is_symmetric() {
        let d = CsrMatrix::from_triplets(3, 3, vec![(0, 0, 1.0), (0, 1, -1.0), (1, 1, 2.0), (2, 0, 0.5), (2, 2, 1.0)]);
        let g = SparseSymmetricOperator::from_triplets(3, d.gram_triplets());
        assert_eq!(g.symmetry_defect(), 0.0);
        assert_eq!(g.get(0, 0), 1.25);
        assert_eq!(g.get(0, 1), -1.0);
    }

    #[test]
    fn asymmetry_detected() {
        let a = SparseSymmetricOperator::from_triplets(2, vec![(0, 1, 1.0), (0, 0, 1.0), (1, 1, 1.0)]);
        assert_eq!(a.symmetry_defect(), 1.0);
    }

    #[test]
    fn restriction_keeps_principal_block() {
        let a = SparseSymmetricOperator::from_triplets(
            3,
            vec![(0, 0, 1.0), (1, 1, 2.0), (2, 2, 3.0), (0, 2, 5.0), (2, 0, 5.0), (0, 1, 7.0), (1, 0, 7.0)],
        );
        let r = a.restrict(&[0, 2]);
        assert_eq!(r.to_dense(), vec![1.0, 5.0, 5.0, 3.0]);
        assert_eq!(a.gershgorin_bounds(), (-11.0, 13.0));
    }
}
