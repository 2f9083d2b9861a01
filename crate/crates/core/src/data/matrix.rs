use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use super::BlockPartition;
use crate::error::{invalid, Result};
use crate::math::{axpy, dot};

/// Largest number of entries [`DataMatrix::to_dense`] materializes by default.
pub const DENSE_ENTRY_CAP: usize = 100_000_000;

/// Row-major dense matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "DenseRepr"))]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

#[cfg(feature = "serde")]
#[derive(Deserialize)]
struct DenseRepr {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

#[cfg(feature = "serde")]
impl TryFrom<DenseRepr> for DenseMatrix {
    type Error = crate::Error;
    fn try_from(r: DenseRepr) -> Result<Self> {
        DenseMatrix::new(r.rows, r.cols, r.data)
    }
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows.checked_mul(cols) != Some(data.len()) {
            return Err(invalid(format!(
                "dense matrix {rows}x{cols} needs {} entries, got {}",
                rows.saturating_mul(cols),
                data.len()
            )));
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        DenseMatrix { rows, cols, data }
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != cols) {
            return Err(invalid("ragged rows"));
        }
        Ok(DenseMatrix {
            rows: rows.len(),
            cols,
            data: rows.iter().flat_map(|r| r.iter().copied()).collect(),
        })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn transpose(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != other.rows {
            return Err(invalid(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let orow = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a != 0.0 {
                    axpy(a, other.row(k), orow);
                }
            }
        }
        Ok(out)
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn max_asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in i + 1..self.cols {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    fn mul_vec(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = dot(self.row(i), x);
        }
    }

    fn mul_t_vec(&self, y: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for (i, &yi) in y.iter().enumerate() {
            if yi != 0.0 {
                axpy(yi, self.row(i), out);
            }
        }
    }
}

/// One compressed axis (CSR or CSC).
#[derive(Debug, Clone, PartialEq)]
struct Compressed {
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl Compressed {
    #[inline]
    fn lane(&self, k: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.indptr[k], self.indptr[k + 1]);
        (&self.indices[a..b], &self.values[a..b])
    }

    fn transpose(&self, outer: usize, inner: usize) -> Compressed {
        let mut counts = vec![0usize; inner + 1];
        for &j in &self.indices {
            counts[j + 1] += 1;
        }
        for k in 0..inner {
            counts[k + 1] += counts[k];
        }
        let indptr = counts.clone();
        let mut next = counts;
        let mut indices = vec![0usize; self.indices.len()];
        let mut values = vec![0.0; self.values.len()];
        for i in 0..outer {
            let (idx, val) = self.lane(i);
            for (&j, &v) in idx.iter().zip(val) {
                let slot = next[j];
                indices[slot] = i;
                values[slot] = v;
                next[j] += 1;
            }
        }
        Compressed {
            indptr,
            indices,
            values,
        }
    }
}

/// Sparse matrix holding both row-compressed and column-compressed indices, so
/// that rows and columns can both be traversed in `O(nnz)` of the lane.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "CsrRepr", into = "CsrRepr"))]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    csr: Compressed,
    csc: Compressed,
}

#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[derive(Clone)]
#[allow(dead_code)]
struct CsrRepr {
    rows: usize,
    cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl From<SparseMatrix> for CsrRepr {
    fn from(m: SparseMatrix) -> Self {
        CsrRepr {
            rows: m.rows,
            cols: m.cols,
            indptr: m.csr.indptr,
            indices: m.csr.indices,
            values: m.csr.values,
        }
    }
}

impl TryFrom<CsrRepr> for SparseMatrix {
    type Error = crate::Error;
    fn try_from(r: CsrRepr) -> Result<Self> {
        SparseMatrix::from_csr(r.rows, r.cols, r.indptr, r.indices, r.values)
    }
}

impl SparseMatrix {
    /// Builds from CSR arrays. Column indices must be strictly increasing
    /// within each row.
    pub fn from_csr(
        rows: usize,
        cols: usize,
        indptr: Vec<usize>,
        indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if indptr.len() != rows + 1 || indptr[0] != 0 {
            return Err(invalid("indptr must have rows + 1 entries starting at 0"));
        }
        if indices.len() != values.len() || *indptr.last().unwrap() != indices.len() {
            return Err(invalid("indptr, indices and values disagree on nnz"));
        }
        for i in 0..rows {
            let (a, b) = (indptr[i], indptr[i + 1]);
            if a > b {
                return Err(invalid(format!("indptr decreases at row {i}")));
            }
            let lane = &indices[a..b];
            if lane.iter().any(|&j| j >= cols) {
                return Err(invalid(format!("column index out of range in row {i}")));
            }
            if lane.windows(2).any(|w| w[0] >= w[1]) {
                return Err(invalid(format!(
                    "column indices not strictly increasing in row {i}"
                )));
            }
        }
        let csr = Compressed {
            indptr,
            indices,
            values,
        };
        let csc = csr.transpose(rows, cols);
        Ok(SparseMatrix {
            rows,
            cols,
            csr,
            csc,
        })
    }

    /// Builds from `(row, col, value)` triplets. Duplicates are summed and
    /// explicit zeros dropped.
    pub fn from_triplets(rows: usize, cols: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut t: Vec<(usize, usize, f64)> = triplets.to_vec();
        if t.iter().any(|&(i, j, _)| i >= rows || j >= cols) {
            return Err(invalid("triplet index out of range"));
        }
        t.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut indptr = vec![0usize; rows + 1];
        let mut indices = Vec::with_capacity(t.len());
        let mut values: Vec<f64> = Vec::with_capacity(t.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in t {
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
                continue;
            }
            indices.push(j);
            values.push(v);
            indptr[i + 1] += 1;
            last = Some((i, j));
        }
        for i in 0..rows {
            indptr[i + 1] += indptr[i];
        }
        let m = SparseMatrix::from_csr(rows, cols, indptr, indices, values)?;
        Ok(m.pruned())
    }

    pub fn from_dense(d: &DenseMatrix) -> Self {
        let mut trip = Vec::new();
        for i in 0..d.rows() {
            for (j, &v) in d.row(i).iter().enumerate() {
                if v != 0.0 {
                    trip.push((i, j, v));
                }
            }
        }
        // indices come out sorted and distinct, so construction cannot fail
        SparseMatrix::from_triplets(d.rows(), d.cols(), &trip).expect("valid triplets")
    }

    fn pruned(self) -> Self {
        if self.csr.values.iter().all(|&v| v != 0.0) {
            return self;
        }
        let mut trip = Vec::new();
        for i in 0..self.rows {
            let (idx, val) = self.csr.lane(i);
            for (&j, &v) in idx.iter().zip(val) {
                if v != 0.0 {
                    trip.push((i, j, v));
                }
            }
        }
        SparseMatrix::from_triplets(self.rows, self.cols, &trip).expect("valid triplets")
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.csr.values.len()
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        self.csr.lane(i)
    }

    /// Row indices and values of column `j`.
    pub fn col(&self, j: usize) -> (&[usize], &[f64]) {
        self.csc.lane(j)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (idx, val) = self.csr.lane(i);
        match idx.binary_search(&j) {
            Ok(k) => val[k],
            Err(_) => 0.0,
        }
    }

    pub fn csr_arrays(&self) -> (&[usize], &[usize], &[f64]) {
        (&self.csr.indptr, &self.csr.indices, &self.csr.values)
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut d = DenseMatrix::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            let (idx, val) = self.csr.lane(i);
            for (&j, &v) in idx.iter().zip(val) {
                d.set(i, j, v);
            }
        }
        d
    }
}

/// Low-rank storage `A = U V` with `U: n×d`, `V: d×p`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "FactorRepr", into = "FactorRepr"))]
pub struct FactorizedMatrix {
    u: DenseMatrix,
    v: DenseMatrix,
    /// `Vᵀ` kept so that columns of `V` are contiguous.
    v_t: DenseMatrix,
}

#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[allow(dead_code)]
struct FactorRepr {
    u: DenseMatrix,
    v: DenseMatrix,
}

impl From<FactorizedMatrix> for FactorRepr {
    fn from(f: FactorizedMatrix) -> Self {
        FactorRepr { u: f.u, v: f.v }
    }
}

impl TryFrom<FactorRepr> for FactorizedMatrix {
    type Error = crate::Error;
    fn try_from(r: FactorRepr) -> Result<Self> {
        FactorizedMatrix::new(r.u, r.v)
    }
}

impl FactorizedMatrix {
    pub fn new(u: DenseMatrix, v: DenseMatrix) -> Result<Self> {
        if u.cols() != v.rows() {
            return Err(invalid(format!(
                "factor inner dimensions differ: U is {}x{}, V is {}x{}",
                u.rows(),
                u.cols(),
                v.rows(),
                v.cols()
            )));
        }
        let v_t = v.transpose();
        Ok(FactorizedMatrix { u, v, v_t })
    }

    pub fn u(&self) -> &DenseMatrix {
        &self.u
    }

    pub fn v(&self) -> &DenseMatrix {
        &self.v
    }

    /// Inner dimension `d`.
    pub fn rank(&self) -> usize {
        self.u.cols()
    }

    /// Row `i` of `U`.
    #[inline]
    pub fn u_row(&self, i: usize) -> &[f64] {
        self.u.row(i)
    }

    /// Column `j` of `V`.
    #[inline]
    pub fn v_col(&self, j: usize) -> &[f64] {
        self.v_t.row(j)
    }

    pub fn materialize(&self) -> DenseMatrix {
        self.u.matmul(&self.v).expect("conforming factors")
    }
}

/// The `n × p` design matrix in one of three storage layouts.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "storage", rename_all = "snake_case"))]
pub enum DataMatrix {
    Dense(DenseMatrix),
    Sparse(SparseMatrix),
    Factorized(FactorizedMatrix),
}

impl From<DenseMatrix> for DataMatrix {
    fn from(m: DenseMatrix) -> Self {
        DataMatrix::Dense(m)
    }
}

impl From<SparseMatrix> for DataMatrix {
    fn from(m: SparseMatrix) -> Self {
        DataMatrix::Sparse(m)
    }
}

impl From<FactorizedMatrix> for DataMatrix {
    fn from(m: FactorizedMatrix) -> Self {
        DataMatrix::Factorized(m)
    }
}

impl DataMatrix {
    pub fn rows(&self) -> usize {
        match self {
            DataMatrix::Dense(m) => m.rows(),
            DataMatrix::Sparse(m) => m.rows(),
            DataMatrix::Factorized(m) => m.u.rows(),
        }
    }

    pub fn cols(&self) -> usize {
        match self {
            DataMatrix::Dense(m) => m.cols(),
            DataMatrix::Sparse(m) => m.cols(),
            DataMatrix::Factorized(m) => m.v.cols(),
        }
    }

    pub fn as_factorized(&self) -> Option<&FactorizedMatrix> {
        match self {
            DataMatrix::Factorized(f) => Some(f),
            _ => None,
        }
    }

    pub fn storage_name(&self) -> &'static str {
        match self {
            DataMatrix::Dense(_) => "dense",
            DataMatrix::Sparse(_) => "sparse",
            DataMatrix::Factorized(_) => "factorized",
        }
    }

    fn check_len(&self, what: &str, got: usize, want: usize) -> Result<()> {
        if got != want {
            return Err(invalid(format!(
                "{what}: expected length {want}, got {got} for a {}x{} matrix",
                self.rows(),
                self.cols()
            )));
        }
        Ok(())
    }

    /// `A x`.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_len("apply", x.len(), self.cols())?;
        let mut out = vec![0.0; self.rows()];
        self.apply_into(x, &mut out);
        Ok(out)
    }

    /// `Aᵀ y`.
    pub fn apply_transpose(&self, y: &[f64]) -> Result<Vec<f64>> {
        self.check_len("apply_transpose", y.len(), self.rows())?;
        let mut out = vec![0.0; self.cols()];
        self.apply_transpose_into(y, &mut out);
        Ok(out)
    }

    pub(crate) fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        match self {
            DataMatrix::Dense(m) => m.mul_vec(x, out),
            DataMatrix::Sparse(m) => {
                for (i, o) in out.iter_mut().enumerate() {
                    let (idx, val) = m.row(i);
                    *o = idx.iter().zip(val).map(|(&j, &v)| v * x[j]).sum();
                }
            }
            DataMatrix::Factorized(f) => {
                let mut vx = vec![0.0; f.rank()];
                f.v.mul_vec(x, &mut vx);
                f.u.mul_vec(&vx, out);
            }
        }
    }

    pub(crate) fn apply_transpose_into(&self, y: &[f64], out: &mut [f64]) {
        match self {
            DataMatrix::Dense(m) => m.mul_t_vec(y, out),
            DataMatrix::Sparse(m) => {
                for (j, o) in out.iter_mut().enumerate() {
                    let (idx, val) = m.col(j);
                    *o = idx.iter().zip(val).map(|(&i, &v)| v * y[i]).sum();
                }
            }
            DataMatrix::Factorized(f) => {
                let mut uty = vec![0.0; f.rank()];
                f.u.mul_t_vec(y, &mut uty);
                f.v.mul_t_vec(&uty, out);
            }
        }
    }

    /// `⟨A_i, x⟩` for row `i`.
    pub fn row_dot(&self, i: usize, x: &[f64]) -> Result<f64> {
        if i >= self.rows() {
            return Err(invalid(format!("row {i} out of range ({} rows)", self.rows())));
        }
        self.check_len("row_dot", x.len(), self.cols())?;
        Ok(self.row_dot_unchecked(i, x))
    }

    /// `⟨A^j, y⟩` for column `j`.
    pub fn col_dot(&self, j: usize, y: &[f64]) -> Result<f64> {
        if j >= self.cols() {
            return Err(invalid(format!("column {j} out of range ({} cols)", self.cols())));
        }
        self.check_len("col_dot", y.len(), self.rows())?;
        Ok(self.col_dot_unchecked(j, y))
    }

    #[inline]
    pub(crate) fn row_dot_unchecked(&self, i: usize, x: &[f64]) -> f64 {
        match self {
            DataMatrix::Dense(m) => dot(m.row(i), x),
            DataMatrix::Sparse(m) => {
                let (idx, val) = m.row(i);
                idx.iter().zip(val).map(|(&j, &v)| v * x[j]).sum()
            }
            DataMatrix::Factorized(f) => {
                let ui = f.u_row(i);
                (0..f.cols_len())
                    .map(|j| dot(ui, f.v_col(j)) * x[j])
                    .sum()
            }
        }
    }

    #[inline]
    pub(crate) fn col_dot_unchecked(&self, j: usize, y: &[f64]) -> f64 {
        match self {
            DataMatrix::Dense(m) => {
                let c = m.cols();
                m.data[j..]
                    .iter()
                    .step_by(c)
                    .zip(y)
                    .map(|(a, b)| a * b)
                    .sum()
            }
            DataMatrix::Sparse(m) => {
                let (idx, val) = m.col(j);
                idx.iter().zip(val).map(|(&i, &v)| v * y[i]).sum()
            }
            DataMatrix::Factorized(f) => {
                let vj = f.v_col(j);
                (0..f.u.rows()).map(|i| dot(f.u_row(i), vj) * y[i]).sum()
            }
        }
    }

    /// `out += alpha · A_i`.
    pub(crate) fn axpy_row(&self, i: usize, alpha: f64, out: &mut [f64]) {
        match self {
            DataMatrix::Dense(m) => axpy(alpha, m.row(i), out),
            DataMatrix::Sparse(m) => {
                let (idx, val) = m.row(i);
                for (&j, &v) in idx.iter().zip(val) {
                    out[j] += alpha * v;
                }
            }
            DataMatrix::Factorized(f) => {
                for (k, &uik) in f.u_row(i).iter().enumerate() {
                    if uik != 0.0 {
                        axpy(alpha * uik, f.v.row(k), out);
                    }
                }
            }
        }
    }

    /// `out += alpha · A^j`.
    pub(crate) fn axpy_col(&self, j: usize, alpha: f64, out: &mut [f64]) {
        match self {
            DataMatrix::Dense(m) => {
                let c = m.cols();
                for (o, a) in out.iter_mut().zip(m.data[j..].iter().step_by(c)) {
                    *o += alpha * a;
                }
            }
            DataMatrix::Sparse(m) => {
                let (idx, val) = m.col(j);
                for (&i, &v) in idx.iter().zip(val) {
                    out[i] += alpha * v;
                }
            }
            DataMatrix::Factorized(f) => {
                let vj = f.v_col(j);
                for (i, o) in out.iter_mut().enumerate() {
                    *o += alpha * dot(f.u_row(i), vj);
                }
            }
        }
    }

    /// Entry `A_i^j`.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        match self {
            DataMatrix::Dense(m) => m.get(i, j),
            DataMatrix::Sparse(m) => m.get(i, j),
            DataMatrix::Factorized(f) => dot(f.u_row(i), f.v_col(j)),
        }
    }

    /// Multiply-adds needed to traverse row `i` once.
    pub(crate) fn row_cost(&self, i: usize) -> u64 {
        match self {
            DataMatrix::Dense(m) => m.cols() as u64,
            DataMatrix::Sparse(m) => m.row(i).0.len() as u64,
            DataMatrix::Factorized(f) => (f.rank() * f.v.cols()) as u64,
        }
    }

    /// Multiply-adds needed to traverse column `j` once.
    pub(crate) fn col_cost(&self, j: usize) -> u64 {
        match self {
            DataMatrix::Dense(m) => m.rows() as u64,
            DataMatrix::Sparse(m) => m.col(j).0.len() as u64,
            DataMatrix::Factorized(f) => (f.rank() * f.u.rows()) as u64,
        }
    }

    pub fn row_norm_sq(&self, i: usize) -> f64 {
        match self {
            DataMatrix::Dense(m) => m.row(i).iter().map(|v| v * v).sum(),
            DataMatrix::Sparse(m) => m.row(i).1.iter().map(|v| v * v).sum(),
            DataMatrix::Factorized(f) => {
                let ui = f.u_row(i);
                (0..f.v.cols())
                    .map(|j| {
                        let a = dot(ui, f.v_col(j));
                        a * a
                    })
                    .sum()
            }
        }
    }

    /// `A_i^j x_j` for dual block `i` and primal block `j`.
    pub fn block_apply(
        &self,
        partition: &BlockPartition,
        i: usize,
        j: usize,
        x_j: &[f64],
    ) -> Result<Vec<f64>> {
        partition.check_matrix(self)?;
        let (rows, cols) = partition.block_ranges(i, j)?;
        self.check_len("block_apply", x_j.len(), cols.len())?;
        Ok(rows
            .map(|r| {
                cols.clone()
                    .zip(x_j)
                    .map(|(c, &xc)| self.entry(r, c) * xc)
                    .sum()
            })
            .collect())
    }

    /// `(A_i^j)ᵀ y_i` for dual block `i` and primal block `j`.
    pub fn block_apply_transpose(
        &self,
        partition: &BlockPartition,
        i: usize,
        j: usize,
        y_i: &[f64],
    ) -> Result<Vec<f64>> {
        partition.check_matrix(self)?;
        let (rows, cols) = partition.block_ranges(i, j)?;
        self.check_len("block_apply_transpose", y_i.len(), rows.len())?;
        Ok(cols
            .map(|c| {
                rows.clone()
                    .zip(y_i)
                    .map(|(r, &yr)| self.entry(r, c) * yr)
                    .sum()
            })
            .collect())
    }

    /// Materializes the matrix, refusing when it has more than `cap` entries.
    pub fn to_dense_capped(&self, cap: usize) -> Result<DenseMatrix> {
        let entries = self.rows().saturating_mul(self.cols());
        if entries > cap {
            return Err(invalid(format!(
                "refusing to materialize {entries} entries (cap {cap})"
            )));
        }
        Ok(match self {
            DataMatrix::Dense(m) => m.clone(),
            DataMatrix::Sparse(m) => m.to_dense(),
            DataMatrix::Factorized(f) => f.materialize(),
        })
    }

    pub fn to_dense(&self) -> Result<DenseMatrix> {
        self.to_dense_capped(DENSE_ENTRY_CAP)
    }
}

impl FactorizedMatrix {
    #[inline]
    fn cols_len(&self) -> usize {
        self.v.cols()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn rel_err(a: &[f64], b: &[f64]) -> f64 {
        let scale = b.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        a.iter()
            .zip(b)
            .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
            / scale
    }

    #[test]
    fn identity_apply() {
        let a = DataMatrix::from(DenseMatrix::identity(3));
        assert_eq!(a.apply(&[1.0, 2.0, 3.0]).unwrap(), vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn col_dot_example() {
        let a = DataMatrix::from(DenseMatrix::from_rows(&[&[1.0, 2.0], &[3.0, 4.0]]).unwrap());
        assert_eq!(a.col_dot(1, &[1.0, 1.0]).unwrap(), 6.0);
        assert_eq!(a.row_dot(1, &[1.0, 1.0]).unwrap(), 7.0);
    }

    #[test]
    fn factorized_matches_materialized_product() {
        let u = DenseMatrix::from_rows(&[&[1.0], &[2.0]]).unwrap();
        let v = DenseMatrix::from_rows(&[&[3.0, 4.0]]).unwrap();
        let f = FactorizedMatrix::new(u, v).unwrap();
        let expected = DenseMatrix::from_rows(&[&[3.0, 4.0], &[6.0, 8.0]]).unwrap();
        assert_eq!(f.materialize(), expected);
        let a = DataMatrix::from(f);
        assert_eq!(a.apply(&[1.0, 0.0]).unwrap(), vec![3.0, 6.0]);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let a = DataMatrix::from(DenseMatrix::identity(3));
        assert!(a.apply(&[1.0, 2.0]).is_err());
        assert!(a.apply_transpose(&[1.0]).is_err());
        assert!(a.row_dot(3, &[0.0; 3]).is_err());
        assert!(a.col_dot(0, &[0.0; 4]).is_err());
    }

    #[test]
    fn sparse_rejects_unsorted_rows() {
        let err = SparseMatrix::from_csr(1, 3, vec![0, 2], vec![2, 0], vec![1.0, 1.0]);
        assert!(err.is_err());
    }

    #[test]
    fn block_products_match_dense_slices() {
        let a = DenseMatrix::from_fn(3, 4, |i, j| (i * 4 + j) as f64);
        let part = BlockPartition::new(vec![1, 3], vec![2, 1]).unwrap();
        let dm = DataMatrix::from(a.clone());
        let out = dm.block_apply(&part, 0, 1, &[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(out, vec![1.0 + 2.0 + 3.0, 5.0 + 6.0 + 7.0]);
        let out_t = dm.block_apply_transpose(&part, 1, 0, &[2.0]).unwrap();
        assert_eq!(out_t, vec![16.0]);
    }

    fn random_dense(rows: usize, cols: usize, seed: u64, density: f64) -> DenseMatrix {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        DenseMatrix::from_fn(rows, cols, |_, _| {
            if rng.random::<f64>() < density {
                rng.random_range(-2.0..2.0)
            } else {
                0.0
            }
        })
    }

    proptest! {
        #[test]
        fn storage_layouts_agree(rows in 1usize..9, cols in 1usize..9, seed in 0u64..1000) {
            let d = random_dense(rows, cols, seed, 0.6);
            let s = SparseMatrix::from_dense(&d);
            prop_assert_eq!(s.to_dense(), d.clone());
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed + 1);
            let x: Vec<f64> = (0..cols).map(|_| rng.random_range(-1.0..1.0)).collect();
            let y: Vec<f64> = (0..rows).map(|_| rng.random_range(-1.0..1.0)).collect();
            let dense = DataMatrix::from(d.clone());
            let sparse = DataMatrix::from(s);
            prop_assert!(rel_err(&sparse.apply(&x).unwrap(), &dense.apply(&x).unwrap()) <= 1e-12);
            prop_assert!(rel_err(&sparse.apply_transpose(&y).unwrap(), &dense.apply_transpose(&y).unwrap()) <= 1e-12);
            for i in 0..rows {
                let a = sparse.row_dot(i, &x).unwrap();
                let b = dense.row_dot(i, &x).unwrap();
                prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
            }
            for j in 0..cols {
                let a = sparse.col_dot(j, &y).unwrap();
                let b = dense.col_dot(j, &y).unwrap();
                prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
            }

            // factorized against its materialization
            let k = 1 + (seed as usize % 3);
            let u = random_dense(rows, k, seed + 2, 1.0);
            let v = random_dense(k, cols, seed + 3, 1.0);
            let f = FactorizedMatrix::new(u, v).unwrap();
            let mat = DataMatrix::from(f.materialize());
            let fac = DataMatrix::from(f);
            prop_assert!(rel_err(&fac.apply(&x).unwrap(), &mat.apply(&x).unwrap()) <= 1e-12);
            prop_assert!(rel_err(&fac.apply_transpose(&y).unwrap(), &mat.apply_transpose(&y).unwrap()) <= 1e-12);
            for i in 0..rows {
                for j in 0..cols {
                    prop_assert!((fac.entry(i, j) - mat.entry(i, j)).abs() <= 1e-12);
                }
            }
        }
    }
}
