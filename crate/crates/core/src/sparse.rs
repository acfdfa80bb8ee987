//! Compressed sparse row storage for the global complex matrices.

use faer::sparse::{SparseColMat, SymbolicSparseColMat};

use crate::dense::DenseMatrix;
use crate::C64;

/// Complex matrix in CSR form with sorted, unique column indices per row.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<C64>,
}

impl SparseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            row_ptr: vec![0; rows + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            rows: n,
            cols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![C64::new(1.0, 0.0); n],
        }
    }

    /// Dense to sparse, dropping exact zeros.
    pub fn from_dense(a: &DenseMatrix<f64>) -> Self {
        let mut b = TripletBuilder::new(a.rows(), a.cols());
        for i in 0..a.rows() {
            for j in 0..a.cols() {
                if a[(i, j)] != C64::new(0.0, 0.0) {
                    b.push(i, j, a[(i, j)]);
                }
            }
        }
        b.build()
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[C64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &self.values[r])
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(k) => vals[k],
            Err(_) => C64::new(0.0, 0.0),
        }
    }

    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|i| {
                let (cols, vals) = self.row(i);
                cols.iter()
                    .zip(vals)
                    .fold(C64::new(0.0, 0.0), |acc, (&j, &v)| acc + v * x[j])
            })
            .collect()
    }

    /// Plain transpose.
    pub fn transpose(&self) -> Self {
        let mut count = vec![0usize; self.cols + 1];
        for &j in &self.col_idx {
            count[j + 1] += 1;
        }
        for j in 0..self.cols {
            count[j + 1] += count[j];
        }
        let row_ptr = count.clone();
        let mut next = count;
        let mut col_idx = vec![0; self.nnz()];
        let mut values = vec![C64::new(0.0, 0.0); self.nnz()];
        for i in 0..self.rows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                let k = next[j];
                col_idx[k] = i;
                values[k] = v;
                next[j] += 1;
            }
        }
        Self {
            rows: self.cols,
            cols: self.rows,
            row_ptr,
            col_idx,
            values,
        }
    }

    /// `alpha * self + beta * other` on the union of both patterns.
    pub fn lin_comb(&self, alpha: C64, other: &Self, beta: C64) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut row_ptr = Vec::with_capacity(self.rows + 1);
        let mut col_idx = Vec::with_capacity(self.nnz().max(other.nnz()));
        let mut values = Vec::with_capacity(self.nnz().max(other.nnz()));
        row_ptr.push(0);
        for i in 0..self.rows {
            let (ca, va) = self.row(i);
            let (cb, vb) = other.row(i);
            let (mut p, mut q) = (0, 0);
            while p < ca.len() || q < cb.len() {
                let ja = ca.get(p).copied().unwrap_or(usize::MAX);
                let jb = cb.get(q).copied().unwrap_or(usize::MAX);
                if ja == jb {
                    col_idx.push(ja);
                    values.push(alpha * va[p] + beta * vb[q]);
                    p += 1;
                    q += 1;
                } else if ja < jb {
                    col_idx.push(ja);
                    values.push(alpha * va[p]);
                    p += 1;
                } else {
                    col_idx.push(jb);
                    values.push(beta * vb[q]);
                    q += 1;
                }
            }
            row_ptr.push(col_idx.len());
        }
        Self {
            rows: self.rows,
            cols: self.cols,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    /// Largest `|a_ij - a_ji|` over the stored pattern.
    pub fn symmetry_defect(&self) -> f64 {
        let t = self.transpose();
        self.lin_comb(C64::new(1.0, 0.0), &t, C64::new(-1.0, 0.0)).max_abs()
    }

    /// Whether the pattern of `(i, j)` implies that of `(j, i)`.
    pub fn is_structurally_symmetric(&self) -> bool {
        let t = self.transpose();
        self.row_ptr == t.row_ptr && self.col_idx == t.col_idx
    }

    /// Frobenius norm.
    pub fn norm_fro(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn to_dense(&self) -> DenseMatrix<f64> {
        let mut d = DenseMatrix::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                d[(i, j)] = v;
            }
        }
        d
    }

    /// Column-compressed copy in faer's format.
    pub fn to_faer(&self) -> SparseColMat<usize, C64> {
        let t = self.transpose();
        let symbolic = SymbolicSparseColMat::new_checked(
            self.rows,
            self.cols,
            t.row_ptr,
            None,
            t.col_idx,
        );
        SparseColMat::new(symbolic, t.values)
    }

    /// Submatrix on the given rows and columns (in the given order).
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Self {
        let mut inv = vec![usize::MAX; self.cols];
        for (k, &j) in cols.iter().enumerate() {
            inv[j] = k;
        }
        let mut b = TripletBuilder::new(rows.len(), cols.len());
        for (r, &i) in rows.iter().enumerate() {
            let (cs, vs) = self.row(i);
            for (&j, &v) in cs.iter().zip(vs) {
                if inv[j] != usize::MAX {
                    b.push(r, inv[j], v);
                }
            }
        }
        b.build()
    }
}

/// Coordinate-format accumulator. Duplicates are summed in insertion order,
/// so the result depends only on the sequence of pushes.
#[derive(Clone, Debug)]
pub struct TripletBuilder {
    rows: usize,
    cols: usize,
    entries: Vec<(usize, usize, C64)>,
}

impl TripletBuilder {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            entries: Vec::new(),
        }
    }

    pub fn with_capacity(rows: usize, cols: usize, cap: usize) -> Self {
        Self {
            rows,
            cols,
            entries: Vec::with_capacity(cap),
        }
    }

    pub fn push(&mut self, i: usize, j: usize, v: C64) {
        debug_assert!(i < self.rows && j < self.cols);
        self.entries.push((i, j, v));
    }

    /// Scatters a dense block: entry `(a, b)` goes to `(rows[a], cols[b])`.
    pub fn add_block(&mut self, rows: &[usize], cols: &[usize], block: &DenseMatrix<f64>) {
        assert_eq!((rows.len(), cols.len()), (block.rows(), block.cols()));
        for (a, &i) in rows.iter().enumerate() {
            for (b, &j) in cols.iter().enumerate() {
                let v = block[(a, b)];
                if v != C64::new(0.0, 0.0) {
                    self.push(i, j, v);
                }
            }
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn build(mut self) -> SparseMatrix {
        // stable: equal (row, col) keep insertion order
        self.entries.sort_by_key(|&(i, j, _)| (i, j));
        let mut row_ptr = vec![0usize; self.rows + 1];
        let mut col_idx = Vec::with_capacity(self.entries.len());
        let mut values: Vec<C64> = Vec::with_capacity(self.entries.len());
        let mut last: Option<(usize, usize)> = None;
        for &(i, j, v) in &self.entries {
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(j);
                values.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..self.rows {
            row_ptr[i + 1] += row_ptr[i];
        }
        SparseMatrix {
            rows: self.rows,
            cols: self.cols,
            row_ptr,
            col_idx,
            values,
        }
    }
}

pub fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).fold(C64::new(0.0, 0.0), |s, (x, y)| s + x * y)
}

pub fn norm2(a: &[C64]) -> f64 {
    a.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn duplicates_are_summed() {
        let mut b = TripletBuilder::new(2, 2);
        b.push(1, 0, c(1.0, 0.0));
        b.push(0, 1, c(2.0, 1.0));
        b.push(1, 0, c(0.5, -1.0));
        let m = b.build();
        assert_eq!(m.nnz(), 2);
        assert_eq!(m.get(1, 0), c(1.5, -1.0));
        assert_eq!(m.get(0, 0), c(0.0, 0.0));
        assert!(!m.is_structurally_symmetric() || m.symmetry_defect() > 0.0);
    }

    #[test]
    fn empty_rows_are_kept() {
        let mut b = TripletBuilder::new(4, 4);
        b.push(3, 3, c(1.0, 0.0));
        let m = b.build();
        assert_eq!(m.row_ptr(), &[0, 0, 0, 0, 1]);
    }

    #[test]
    fn faer_roundtrip_matvec() {
        let mut b = TripletBuilder::new(3, 3);
        b.push(0, 0, c(2.0, 0.0));
        b.push(0, 2, c(0.0, 1.0));
        b.push(2, 1, c(-1.0, 3.0));
        let m = b.build();
        let f = m.to_faer();
        for i in 0..3 {
            for j in 0..3 {
                let v = f.get(i, j).copied().unwrap_or(c(0.0, 0.0));
                assert_eq!(v, m.get(i, j));
            }
        }
    }

    fn random_dense(n: usize, seed: &[f64]) -> DenseMatrix<f64> {
        DenseMatrix::from_fn(n, n, |i, j| {
            let v = seed[(i * n + j) % seed.len()];
            if v.abs() < 0.3 {
                c(0.0, 0.0)
            } else {
                c(v, 0.5 * v * (i as f64 - j as f64))
            }
        })
    }

    proptest! {
        #[test]
        fn dense_roundtrip_and_transpose(seed in proptest::collection::vec(-1.0f64..1.0, 1..40), n in 1usize..8) {
            let d = random_dense(n, &seed);
            let s = SparseMatrix::from_dense(&d);
            prop_assert_eq!(s.to_dense(), d.clone());
            prop_assert_eq!(s.transpose().to_dense(), d.transpose());
            let x: Vec<C64> = (0..n).map(|i| c(i as f64, 1.0)).collect();
            prop_assert_eq!(s.matvec(&x), d.matvec(&x));
        }

        #[test]
        fn lin_comb_matches_dense(seed in proptest::collection::vec(-1.0f64..1.0, 1..40), n in 1usize..8) {
            let a = random_dense(n, &seed);
            let b = a.transpose();
            let (al, be) = (c(1.5, -0.5), c(-2.0, 0.25));
            let s = SparseMatrix::from_dense(&a).lin_comb(al, &SparseMatrix::from_dense(&b), be);
            let d = &a.scale(al) + &b.scale(be);
            prop_assert!(s.to_dense().max_abs_diff(&d) < 1e-14);
        }

        #[test]
        fn build_is_insertion_order_deterministic(vals in proptest::collection::vec((0usize..5, 0usize..5, -1.0f64..1.0), 1..60)) {
            let build = || {
                let mut b = TripletBuilder::new(5, 5);
                for &(i, j, v) in &vals {
                    b.push(i, j, c(v, v * 0.1));
                }
                b.build()
            };
            prop_assert_eq!(build(), build());
        }
    }
}
