//! Compressed-sparse-row matrices, the algebra the assemblies need
//! (transpose, product, triple products `DᵀWD`), and a direct sparse solve.
//!
//! Matrices are immutable after construction and safe to share across
//! threads. All products accumulate through dense per-row workspaces in a
//! fixed order, so repeated runs produce bit-identical results; the direct
//! solver is likewise pinned to sequential execution.

use std::io::Write as IoWrite;
use std::sync::Once;

use faer::prelude::*;
use faer::sparse::{SparseColMat, Triplet};

use crate::{Error, Result};

/// A real sparse matrix in compressed-sparse-row form.
///
/// Rows are sorted by column index and hold no explicit zeros; duplicate
/// triplets are summed during construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseOperator {
    /// Build from `(row, col, value)` triplets. Duplicates are summed;
    /// entries that sum to exactly zero are dropped.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self> {
        for &(r, c, _) in triplets {
            if r >= nrows || c >= ncols {
                return Err(Error::InvalidArgument(format!(
                    "triplet ({r}, {c}) outside {nrows}×{ncols} matrix"
                )));
            }
        }
        // Bucket by row, then sort each row by column and merge duplicates.
        let mut counts = vec![0usize; nrows + 1];
        for &(r, _, _) in triplets {
            counts[r + 1] += 1;
        }
        for r in 0..nrows {
            counts[r + 1] += counts[r];
        }
        let mut bucketed: Vec<(usize, f64)> = vec![(0, 0.0); triplets.len()];
        let mut cursor = counts.clone();
        for &(r, c, v) in triplets {
            bucketed[cursor[r]] = (c, v);
            cursor[r] += 1;
        }
        let mut row_ptr = Vec::with_capacity(nrows + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for r in 0..nrows {
            let row = &mut bucketed[counts[r]..counts[r + 1]];
            row.sort_by_key(|&(c, _)| c);
            let mut k = 0;
            while k < row.len() {
                let c = row[k].0;
                let mut sum = 0.0;
                while k < row.len() && row[k].0 == c {
                    sum += row[k].1;
                    k += 1;
                }
                if sum != 0.0 {
                    col_idx.push(c);
                    values.push(sum);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Ok(Self {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        })
    }

    /// The `n × n` identity.
    pub fn identity(n: usize) -> Self {
        Self {
            nrows: n,
            ncols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    /// Square diagonal matrix from a weight vector (zeros are dropped).
    pub fn from_diagonal(diag: &[f64]) -> Self {
        let triplets: Vec<_> = diag
            .iter()
            .enumerate()
            .map(|(i, &v)| (i, i, v))
            .collect();
        Self::from_triplets(diag.len(), diag.len(), &triplets)
            .expect("diagonal triplets are always in range")
    }

    /// Number of rows.
    pub fn nrows(&self) -> usize {
        self.nrows
    }

    /// Number of columns.
    pub fn ncols(&self) -> usize {
        self.ncols
    }

    /// Number of stored entries.
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Column indices and values of row `r`.
    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        (&self.col_idx[span.clone()], &self.values[span])
    }

    /// Iterate all stored entries as `(row, col, value)`.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |r| {
            let (cols, vals) = self.row(r);
            cols.iter().zip(vals).map(move |(&c, &v)| (r, c, v))
        })
    }

    /// Largest entry magnitude (0 for an empty matrix).
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Matrix–vector product `A x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols, "apply: vector length mismatch");
        let mut y = vec![0.0; self.nrows];
        for r in 0..self.nrows {
            let (cols, vals) = self.row(r);
            y[r] = cols.iter().zip(vals).map(|(&c, &v)| v * x[c]).sum();
        }
        y
    }

    /// Structural transpose.
    pub fn transpose(&self) -> Self {
        let mut counts = vec![0usize; self.ncols + 1];
        for &c in &self.col_idx {
            counts[c + 1] += 1;
        }
        for c in 0..self.ncols {
            counts[c + 1] += counts[c];
        }
        let mut col_idx = vec![0usize; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        let mut cursor = counts.clone();
        for r in 0..self.nrows {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                col_idx[cursor[c]] = r;
                values[cursor[c]] = v;
                cursor[c] += 1;
            }
        }
        Self {
            nrows: self.ncols,
            ncols: self.nrows,
            row_ptr: counts,
            col_idx,
            values,
        }
    }

    /// Scale every entry by `s`.
    pub fn scale(&self, s: f64) -> Self {
        let mut out = self.clone();
        for v in &mut out.values {
            *v *= s;
        }
        if s == 0.0 {
            // Keep the no-explicit-zeros invariant.
            return Self::from_triplets(self.nrows, self.ncols, &[])
                .expect("empty triplet list is valid");
        }
        out
    }

    /// Scale row `r` by `w[r]` (left-multiplication by `diag(w)`).
    pub fn scale_rows(&self, w: &[f64]) -> Result<Self> {
        if w.len() != self.nrows {
            return Err(Error::DimensionMismatch(format!(
                "scale_rows: {} weights for {} rows",
                w.len(),
                self.nrows
            )));
        }
        let triplets: Vec<_> = self.entries().map(|(r, c, v)| (r, c, w[r] * v)).collect();
        Self::from_triplets(self.nrows, self.ncols, &triplets)
    }

    /// Sum `A + B`.
    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.nrows != other.nrows || self.ncols != other.ncols {
            return Err(Error::DimensionMismatch(format!(
                "add: {}×{} vs {}×{}",
                self.nrows, self.ncols, other.nrows, other.ncols
            )));
        }
        let triplets: Vec<_> = self.entries().chain(other.entries()).collect();
        Self::from_triplets(self.nrows, self.ncols, &triplets)
    }

    /// Sparse product `A · B` (Gustavson's algorithm with a dense, stamped
    /// workspace; deterministic accumulation order).
    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.ncols != other.nrows {
            return Err(Error::DimensionMismatch(format!(
                "matmul: {}×{} times {}×{}",
                self.nrows, self.ncols, other.nrows, other.ncols
            )));
        }
        let m = other.ncols;
        let mut acc = vec![0.0f64; m];
        let mut stamp = vec![usize::MAX; m];
        let mut touched: Vec<usize> = Vec::new();
        let mut row_ptr = Vec::with_capacity(self.nrows + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for r in 0..self.nrows {
            touched.clear();
            let (a_cols, a_vals) = self.row(r);
            for (&k, &a) in a_cols.iter().zip(a_vals) {
                let (b_cols, b_vals) = other.row(k);
                for (&j, &b) in b_cols.iter().zip(b_vals) {
                    if stamp[j] != r {
                        stamp[j] = r;
                        acc[j] = 0.0;
                        touched.push(j);
                    }
                    acc[j] += a * b;
                }
            }
            touched.sort_unstable();
            for &j in &touched {
                if acc[j] != 0.0 {
                    col_idx.push(j);
                    values.push(acc[j]);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Ok(Self {
            nrows: self.nrows,
            ncols: m,
            row_ptr,
            col_idx,
            values,
        })
    }

    /// Drop entries smaller than `rel_tol · max|entry|` in magnitude.
    pub fn drop_below(&self, rel_tol: f64) -> Self {
        let cut = rel_tol * self.max_abs();
        let triplets: Vec<_> = self.entries().filter(|&(_, _, v)| v.abs() > cut).collect();
        Self::from_triplets(self.nrows, self.ncols, &triplets)
            .expect("retained triplets stay in range")
    }

    /// Dense copy, for small-matrix oracles and debugging.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut dense = vec![vec![0.0; self.ncols]; self.nrows];
        for (r, c, v) in self.entries() {
            dense[r][c] = v;
        }
        dense
    }

    /// Write in MatrixMarket coordinate text format (1-based indices).
    pub fn write_matrix_market(&self, out: &mut dyn IoWrite) -> std::io::Result<()> {
        writeln!(out, "%%MatrixMarket matrix coordinate real general")?;
        writeln!(out, "{} {} {}", self.nrows, self.ncols, self.nnz())?;
        for (r, c, v) in self.entries() {
            writeln!(out, "{} {} {:.16e}", r + 1, c + 1, v)?;
        }
        Ok(())
    }
}

/// Triple product `Dᵀ W D` with diagonal weights `w` (one weight per row of
/// `D`). `dt` must be the transpose of `d`; the result is symmetrized by
/// averaging with its transpose, and entries below `1e-13` of the largest
/// magnitude are dropped.
pub fn triple_product(dt: &SparseOperator, w: &[f64], d: &SparseOperator) -> Result<SparseOperator> {
    if dt.ncols() != d.nrows() || w.len() != d.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "triple_product: Dᵀ is {}×{}, W has {} weights, D is {}×{}",
            dt.nrows(),
            dt.ncols(),
            w.len(),
            d.nrows(),
            d.ncols()
        )));
    }
    let wd = d.scale_rows(w)?;
    let s = dt.matmul(&wd)?;
    let sym = s.add(&s.transpose())?.scale(0.5);
    Ok(sym.drop_below(1e-13))
}

/// How a linear system was solved.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    /// Sparse LU factorization with partial pivoting.
    Direct,
    /// An iterative method (reserved; the default path is direct).
    Iterative,
}

/// Outcome of a linear solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveReport {
    /// Relative residual `‖Ax − b‖₂ / ‖b‖₂` (absolute when `b = 0`).
    pub residual_norm: f64,
    /// Algorithm used.
    pub method: SolveMethod,
    /// Iteration count; 0 for a direct solve.
    pub iterations: usize,
}

/// Default relative-residual tolerance for [`solve`].
pub const DEFAULT_SOLVE_TOL: f64 = 1e-12;

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn force_sequential() {
    static ONCE: Once = Once::new();
    ONCE.call_once(|| {
        // Bit-identical reruns: keep every factorization single-threaded.
        faer::set_global_parallelism(Par::Seq);
    });
}

/// Solve `A x = b` by sparse LU, enforcing `‖Ax − b‖₂ ≤ tol · ‖b‖₂`.
///
/// Fails with [`Error::SingularMatrix`] when the factorization breaks down
/// and with [`Error::SolveTolerance`] when the residual contract is missed.
pub fn solve(a: &SparseOperator, b: &[f64], tol: f64) -> Result<(Vec<f64>, SolveReport)> {
    if a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "solve needs a square matrix, got {}×{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if b.len() != a.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "solve: rhs length {} for {} unknowns",
            b.len(),
            a.nrows()
        )));
    }
    force_sequential();
    let n = a.nrows();
    let triplets: Vec<Triplet<usize, usize, f64>> = a
        .entries()
        .map(|(r, c, v)| Triplet::new(r, c, v))
        .collect();
    let mat = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &triplets)
        .map_err(|_| Error::SingularMatrix)?;
    let lu = mat.sp_lu().map_err(|_| Error::SingularMatrix)?;
    let mut rhs = Mat::<f64>::zeros(n, 1);
    for (i, &bi) in b.iter().enumerate() {
        rhs[(i, 0)] = bi;
    }
    let sol = lu.solve(&rhs);
    let x: Vec<f64> = (0..n).map(|i| sol[(i, 0)]).collect();
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularMatrix);
    }
    let ax = a.apply(&x);
    let resid: Vec<f64> = ax.iter().zip(b).map(|(p, q)| p - q).collect();
    let b_norm = norm2(b);
    let relative = if b_norm > 0.0 {
        norm2(&resid) / b_norm
    } else {
        norm2(&resid)
    };
    if relative > tol {
        return Err(Error::SolveTolerance {
            residual: relative,
            tol,
        });
    }
    Ok((
        x,
        SolveReport {
            residual_norm: relative,
            method: SolveMethod::Direct,
            iterations: 0,
        },
    ))
}
