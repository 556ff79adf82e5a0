//! Dense third-order tensors and matrices in double precision.
//!
//! Storage is column-major throughout: a [`DenseMatrix`] keeps column `c` contiguous, and a
//! [`DenseTensor3`] stores entry `(i, j, k)` at `i + n1 * (j + n2 * k)` (mode-1 fastest). With
//! that layout the mode-1 unfolding of a tensor is its raw buffer, and unfoldings follow the
//! Kolda column ordering.

use crate::error::{CfError, Result};

/// One of the three tensor modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    One,
    Two,
    Three,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::One, Mode::Two, Mode::Three];

    /// Zero-based axis index.
    pub fn axis(self) -> usize {
        match self {
            Mode::One => 0,
            Mode::Two => 1,
            Mode::Three => 2,
        }
    }

    /// Parses a one-based mode number.
    pub fn from_number(n: usize) -> Result<Mode> {
        match n {
            1 => Ok(Mode::One),
            2 => Ok(Mode::Two),
            3 => Ok(Mode::Three),
            _ => Err(CfError::arg(format!("mode must be 1, 2 or 3, got {n}"))),
        }
    }
}

/// Real matrix, column-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_col_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(CfError::shape(format!(
                "{} values cannot fill a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from row slices; all rows must share one length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(CfError::shape("ragged rows"));
        }
        Ok(Self::from_fn(r, c, |i, j| rows[i][j]))
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for c in 0..cols {
            for r in 0..rows {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    pub fn diag(values: &[f64]) -> Self {
        let n = values.len();
        Self::from_fn(n, n, |i, j| if i == j { values[i] } else { 0.0 })
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
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r + self.rows * c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r + self.rows * c] = v;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn column(&self, c: usize) -> &[f64] {
        &self.data[c * self.rows..(c + 1) * self.rows]
    }

    pub fn row(&self, r: usize) -> Vec<f64> {
        (0..self.cols).map(|c| self.get(r, c)).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != other.rows {
            return Err(CfError::shape(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        gemm(
            self.rows,
            self.cols,
            other.cols,
            1.0,
            &self.data,
            [1, self.rows],
            &other.data,
            [1, other.rows],
            0.0,
            &mut out.data,
            [1, self.rows],
        );
        Ok(out)
    }

    /// Leading `cols` columns.
    pub fn leading_columns(&self, cols: usize) -> DenseMatrix {
        let cols = cols.min(self.cols);
        DenseMatrix {
            rows: self.rows,
            cols,
            data: self.data[..self.rows * cols].to_vec(),
        }
    }

    /// Widens to `cols` columns, zero-filling the new ones.
    pub fn pad_columns(&self, cols: usize) -> DenseMatrix {
        let mut data = self.data.clone();
        data.resize(self.rows * cols.max(self.cols), 0.0);
        DenseMatrix {
            rows: self.rows,
            cols: cols.max(self.cols),
            data,
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Sum of absolute values of all entries.
    pub fn entrywise_l1(&self) -> f64 {
        self.data.iter().map(|v| v.abs()).sum()
    }

    pub fn scale(&self, s: f64) -> DenseMatrix {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Real third-order tensor with mode-1-fastest storage.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor3 {
    dims: [usize; 3],
    data: Vec<f64>,
}

impl DenseTensor3 {
    pub fn zeros(dims: [usize; 3]) -> Self {
        Self {
            dims,
            data: vec![0.0; dims[0] * dims[1] * dims[2]],
        }
    }

    pub fn filled(dims: [usize; 3], value: f64) -> Self {
        Self {
            dims,
            data: vec![value; dims[0] * dims[1] * dims[2]],
        }
    }

    pub fn from_vec(dims: [usize; 3], data: Vec<f64>) -> Result<Self> {
        if data.len() != dims[0] * dims[1] * dims[2] {
            return Err(CfError::shape(format!(
                "{} values cannot fill a {}x{}x{} tensor",
                data.len(),
                dims[0],
                dims[1],
                dims[2]
            )));
        }
        Ok(Self { dims, data })
    }

    pub fn from_fn(dims: [usize; 3], mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(dims[0] * dims[1] * dims[2]);
        for k in 0..dims[2] {
            for j in 0..dims[1] {
                for i in 0..dims[0] {
                    data.push(f(i, j, k));
                }
            }
        }
        Self { dims, data }
    }

    #[inline]
    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn offset(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[self.offset(i, j, k)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, v: f64) {
        let o = self.offset(i, j, k);
        self.data[o] = v;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    /// Frontal slice `(:, :, k)` as an `n1 x n2` matrix.
    pub fn frontal_slice(&self, k: usize) -> DenseMatrix {
        let n = self.dims[0] * self.dims[1];
        DenseMatrix {
            rows: self.dims[0],
            cols: self.dims[1],
            data: self.data[k * n..(k + 1) * n].to_vec(),
        }
    }

    pub fn slice_data(&self, k: usize) -> &[f64] {
        let n = self.dims[0] * self.dims[1];
        &self.data[k * n..(k + 1) * n]
    }

    pub fn slice_data_mut(&mut self, k: usize) -> &mut [f64] {
        let n = self.dims[0] * self.dims[1];
        &mut self.data[k * n..(k + 1) * n]
    }

    pub fn set_frontal_slice(&mut self, k: usize, m: &DenseMatrix) -> Result<()> {
        if m.rows != self.dims[0] || m.cols != self.dims[1] {
            return Err(CfError::shape("slice shape does not match tensor"));
        }
        self.slice_data_mut(k).copy_from_slice(&m.data);
        Ok(())
    }

    /// Copy of the leading `r1 x r2 x r3` block.
    pub fn leading_block(&self, r: [usize; 3]) -> Result<DenseTensor3> {
        if (0..3).any(|a| r[a] > self.dims[a]) {
            return Err(CfError::dim(format!(
                "block {:?} exceeds tensor dims {:?}",
                r, self.dims
            )));
        }
        let mut out = DenseTensor3::zeros(r);
        for k in 0..r[2] {
            for j in 0..r[1] {
                let src = self.offset(0, j, k);
                let dst = out.offset(0, j, k);
                out.data[dst..dst + r[0]].copy_from_slice(&self.data[src..src + r[0]]);
            }
        }
        Ok(out)
    }

    /// Adds `block` into the leading corner of `self`.
    pub fn add_leading_block(&mut self, block: &DenseTensor3) -> Result<()> {
        let r = block.dims;
        if (0..3).any(|a| r[a] > self.dims[a]) {
            return Err(CfError::dim("block exceeds tensor dims"));
        }
        for k in 0..r[2] {
            for j in 0..r[1] {
                let dst = self.offset(0, j, k);
                let src = block.offset(0, j, k);
                for i in 0..r[0] {
                    self.data[dst + i] += block.data[src + i];
                }
            }
        }
        Ok(())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> DenseTensor3 {
        DenseTensor3 {
            dims: self.dims,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(
        &self,
        other: &DenseTensor3,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<DenseTensor3> {
        self.check_same(other)?;
        Ok(DenseTensor3 {
            dims: self.dims,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn add(&self, other: &DenseTensor3) -> Result<DenseTensor3> {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &DenseTensor3) -> Result<DenseTensor3> {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn scale(&self, s: f64) -> DenseTensor3 {
        self.map(|v| v * s)
    }

    /// `self += alpha * other`.
    pub fn axpy(&mut self, alpha: f64, other: &DenseTensor3) -> Result<()> {
        self.check_same(other)?;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += alpha * b;
        }
        Ok(())
    }

    pub fn dot(&self, other: &DenseTensor3) -> Result<f64> {
        self.check_same(other)?;
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum())
    }

    pub fn frobenius_norm(&self) -> f64 {
        frobenius_norm(self)
    }

    pub fn entrywise_l1(&self) -> f64 {
        self.data.iter().map(|v| v.abs()).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub(crate) fn check_same(&self, other: &DenseTensor3) -> Result<()> {
        if self.dims != other.dims {
            return Err(CfError::shape(format!(
                "tensor dims {:?} vs {:?}",
                self.dims, other.dims
            )));
        }
        Ok(())
    }
}

/// Thin wrapper over `matrixmultiply::dgemm`: `C = alpha * A * B + beta * C` with explicit
/// `[row_stride, col_stride]` pairs for each operand.
#[allow(clippy::too_many_arguments)]
pub(crate) fn gemm(
    m: usize,
    k: usize,
    n: usize,
    alpha: f64,
    a: &[f64],
    sa: [usize; 2],
    b: &[f64],
    sb: [usize; 2],
    beta: f64,
    c: &mut [f64],
    sc: [usize; 2],
) {
    if m == 0 || n == 0 {
        return;
    }
    if k == 0 {
        if beta == 0.0 {
            for r in 0..m {
                for col in 0..n {
                    c[r * sc[0] + col * sc[1]] = 0.0;
                }
            }
        }
        return;
    }
    debug_assert!((m - 1) * sa[0] + (k - 1) * sa[1] < a.len());
    debug_assert!((k - 1) * sb[0] + (n - 1) * sb[1] < b.len());
    debug_assert!((m - 1) * sc[0] + (n - 1) * sc[1] < c.len());
    // SAFETY: the debug assertions above spell out the bounds every caller upholds: the
    // largest offset touched in each operand lies inside its slice.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            alpha,
            a.as_ptr(),
            sa[0] as isize,
            sa[1] as isize,
            b.as_ptr(),
            sb[0] as isize,
            sb[1] as isize,
            beta,
            c.as_mut_ptr(),
            sc[0] as isize,
            sc[1] as isize,
        );
    }
}

/// Mode-`n` unfolding with Kolda column ordering.
pub fn unfold(t: &DenseTensor3, mode: Mode) -> DenseMatrix {
    let [n1, n2, n3] = t.dims;
    match mode {
        Mode::One => DenseMatrix {
            rows: n1,
            cols: n2 * n3,
            data: t.data.clone(),
        },
        Mode::Two => {
            // column index = i + n1 * k
            let mut m = DenseMatrix::zeros(n2, n1 * n3);
            for k in 0..n3 {
                for j in 0..n2 {
                    for i in 0..n1 {
                        m.set(j, i + n1 * k, t.get(i, j, k));
                    }
                }
            }
            m
        }
        Mode::Three => {
            // column index = i + n1 * j
            let plane = n1 * n2;
            let mut m = DenseMatrix::zeros(n3, plane);
            for k in 0..n3 {
                for p in 0..plane {
                    m.data[k + n3 * p] = t.data[p + plane * k];
                }
            }
            m
        }
    }
}

/// Inverse of [`unfold`].
pub fn fold(m: &DenseMatrix, mode: Mode, dims: [usize; 3]) -> Result<DenseTensor3> {
    let [n1, n2, n3] = dims;
    let a = mode.axis();
    let expected_cols = dims[0] * dims[1] * dims[2] / dims[a].max(1);
    if m.rows != dims[a] || m.cols * m.rows != n1 * n2 * n3 || m.cols != expected_cols {
        return Err(CfError::shape(format!(
            "{}x{} matrix cannot fold into {:?} along mode {}",
            m.rows,
            m.cols,
            dims,
            a + 1
        )));
    }
    let mut t = DenseTensor3::zeros(dims);
    match mode {
        Mode::One => t.data.copy_from_slice(&m.data),
        Mode::Two => {
            for k in 0..n3 {
                for j in 0..n2 {
                    for i in 0..n1 {
                        t.set(i, j, k, m.get(j, i + n1 * k));
                    }
                }
            }
        }
        Mode::Three => {
            let plane = n1 * n2;
            for k in 0..n3 {
                for p in 0..plane {
                    t.data[p + plane * k] = m.data[k + n3 * p];
                }
            }
        }
    }
    Ok(t)
}

/// Mode-`n` product `t x_n a`, where `a` has `dims[n]` columns.
pub fn mode_product(t: &DenseTensor3, a: &DenseMatrix, mode: Mode) -> Result<DenseTensor3> {
    let [n1, n2, n3] = t.dims;
    let ax = mode.axis();
    if a.cols != t.dims[ax] {
        return Err(CfError::shape(format!(
            "mode-{} product needs {} columns, matrix has {}",
            ax + 1,
            t.dims[ax],
            a.cols
        )));
    }
    let mut dims = t.dims;
    dims[ax] = a.rows;
    let mut out = DenseTensor3::zeros(dims);
    let m = a.rows;
    match mode {
        Mode::One => {
            // (m x n1) * (n1 x n2n3)
            gemm(
                m,
                n1,
                n2 * n3,
                1.0,
                &a.data,
                [1, m],
                &t.data,
                [1, n1],
                0.0,
                &mut out.data,
                [1, m],
            );
        }
        Mode::Two => {
            // per slice: (n1 x n2) * (n2 x m)
            for k in 0..n3 {
                let src = &t.data[k * n1 * n2..(k + 1) * n1 * n2];
                let dst = &mut out.data[k * n1 * m..(k + 1) * n1 * m];
                gemm(
                    n1,
                    n2,
                    m,
                    1.0,
                    src,
                    [1, n1],
                    &a.data,
                    [m, 1],
                    0.0,
                    dst,
                    [1, n1],
                );
            }
        }
        Mode::Three => {
            // (n1n2 x n3) * (n3 x m)
            let plane = n1 * n2;
            gemm(
                plane,
                n3,
                m,
                1.0,
                &t.data,
                [1, plane],
                &a.data,
                [m, 1],
                0.0,
                &mut out.data,
                [1, plane],
            );
        }
    }
    Ok(out)
}

/// `a_(n) * b_(n)^T` for two tensors that agree on every mode except `mode`.
///
/// This is the contraction that yields factor-matrix gradients in a Tucker model.
pub fn unfold_product(a: &DenseTensor3, b: &DenseTensor3, mode: Mode) -> Result<DenseMatrix> {
    let ax = mode.axis();
    for other in 0..3 {
        if other != ax && a.dims[other] != b.dims[other] {
            return Err(CfError::shape(format!(
                "tensors {:?} and {:?} disagree off mode {}",
                a.dims,
                b.dims,
                ax + 1
            )));
        }
    }
    let ra = a.dims[ax];
    let rb = b.dims[ax];
    let mut out = DenseMatrix::zeros(ra, rb);
    match mode {
        Mode::One => {
            let inner = a.dims[1] * a.dims[2];
            gemm(
                ra,
                inner,
                rb,
                1.0,
                &a.data,
                [1, ra],
                &b.data,
                [rb, 1],
                0.0,
                &mut out.data,
                [1, ra],
            );
        }
        Mode::Two => {
            let n1 = a.dims[0];
            for k in 0..a.dims[2] {
                let sa = &a.data[k * n1 * ra..(k + 1) * n1 * ra];
                let sb = &b.data[k * n1 * rb..(k + 1) * n1 * rb];
                gemm(
                    ra,
                    n1,
                    rb,
                    1.0,
                    sa,
                    [n1, 1],
                    sb,
                    [1, n1],
                    if k == 0 { 0.0 } else { 1.0 },
                    &mut out.data,
                    [1, ra],
                );
            }
        }
        Mode::Three => {
            let plane = a.dims[0] * a.dims[1];
            gemm(
                ra,
                plane,
                rb,
                1.0,
                &a.data,
                [plane, 1],
                &b.data,
                [1, plane],
                0.0,
                &mut out.data,
                [1, ra],
            );
        }
    }
    Ok(out)
}

pub fn frobenius_norm(t: &DenseTensor3) -> f64 {
    t.data.iter().map(|v| v * v).sum::<f64>().sqrt()
}

const JACOBI_MAX_SWEEPS: usize = 100;
const JACOBI_REL_TOL: f64 = 1e-14;
const SINGULAR_CLAMP: f64 = 1e-13;

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
///
/// Returns eigenvalues (unsorted) and the matching eigenvectors as columns.
pub fn symmetric_eigen(g: &DenseMatrix) -> Result<(Vec<f64>, DenseMatrix)> {
    let n = g.rows;
    if g.cols != n {
        return Err(CfError::shape("eigensolver needs a square matrix"));
    }
    let mut a = g.clone();
    let mut v = DenseMatrix::identity(n);
    let norm = a.frobenius_norm();
    let tol = JACOBI_REL_TOL * norm;
    let off = |a: &DenseMatrix| -> f64 {
        let mut s = 0.0;
        for c in 0..n {
            for r in 0..n {
                if r != c {
                    s += a.get(r, c) * a.get(r, c);
                }
            }
        }
        s.sqrt()
    };
    let mut sweeps = 0;
    loop {
        let o = off(&a);
        if o <= tol {
            break;
        }
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(CfError::NonConvergence { sweeps, off: o });
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a.get(p, q);
                if apq == 0.0 {
                    continue;
                }
                let app = a.get(p, p);
                let aqq = a.get(q, q);
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // A <- J^T A J on rows/cols p and q
                for k in 0..n {
                    let akp = a.get(k, p);
                    let akq = a.get(k, q);
                    a.set(k, p, c * akp - s * akq);
                    a.set(k, q, s * akp + c * akq);
                }
                for k in 0..n {
                    let apk = a.get(p, k);
                    let aqk = a.get(q, k);
                    a.set(p, k, c * apk - s * aqk);
                    a.set(q, k, s * apk + c * aqk);
                }
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, c * vkp - s * vkq);
                    v.set(k, q, s * vkp + c * vkq);
                }
            }
        }
    }
    let eig = (0..n).map(|i| a.get(i, i)).collect();
    Ok((eig, v))
}

/// Singular values in descending order.
///
/// The Gram matrix of the shorter side is diagonalised by cyclic Jacobi; each singular value
/// is then read off as the norm of the matrix applied to the corresponding eigenvector, which
/// keeps small singular values accurate to working precision instead of its square root.
/// Values below `1e-13 * sigma_max` are reported as zero.
pub fn singular_values(m: &DenseMatrix) -> Result<Vec<f64>> {
    if !m.is_finite() {
        return Err(CfError::NonFinite("singular_values input".into()));
    }
    let (r, c) = (m.rows, m.cols);
    if r == 0 || c == 0 {
        return Ok(Vec::new());
    }
    let short = r.min(c);
    let mut gram = DenseMatrix::zeros(short, short);
    if r <= c {
        // M M^T
        gemm(r, c, r, 1.0, &m.data, [1, r], &m.data, [r, 1], 0.0, &mut gram.data, [1, r]);
    } else {
        // M^T M
        gemm(c, r, c, 1.0, &m.data, [r, 1], &m.data, [1, r], 0.0, &mut gram.data, [1, c]);
    }
    let (_, vecs) = symmetric_eigen(&gram)?;
    // Project: rows-side eigenvectors through M^T, cols-side through M.
    let long = r.max(c);
    let mut proj = vec![0.0; long * short];
    if r <= c {
        gemm(c, r, r, 1.0, &m.data, [r, 1], &vecs.data, [1, r], 0.0, &mut proj, [1, c]);
    } else {
        gemm(r, c, c, 1.0, &m.data, [1, r], &vecs.data, [1, c], 0.0, &mut proj, [1, r]);
    }
    let mut sv: Vec<f64> = proj
        .chunks(long)
        .map(|col| col.iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    let smax = sv[0];
    for s in &mut sv {
        if *s < SINGULAR_CLAMP * smax {
            *s = 0.0;
        }
    }
    Ok(sv)
}

pub fn nuclear_norm(m: &DenseMatrix) -> Result<f64> {
    Ok(singular_values(m)?.iter().sum())
}

/// Per-mode count of singular values of the unfoldings above `tol * sigma_max`.
pub fn numerical_tucker_rank(t: &DenseTensor3, tol: f64) -> Result<[usize; 3]> {
    if tol <= 0.0 {
        return Err(CfError::arg("rank tolerance must be positive"));
    }
    let mut ranks = [0; 3];
    for mode in Mode::ALL {
        let sv = singular_values(&unfold(t, mode))?;
        let smax = sv.first().copied().unwrap_or(0.0);
        ranks[mode.axis()] = if smax == 0.0 {
            0
        } else {
            sv.iter().filter(|&&s| s > tol * smax).count()
        };
    }
    Ok(ranks)
}

/// Per-mode count of singular values above fixed absolute thresholds.
pub fn tucker_rank_above(t: &DenseTensor3, thresholds: [f64; 3]) -> Result<[usize; 3]> {
    let mut ranks = [0; 3];
    for mode in Mode::ALL {
        let sv = singular_values(&unfold(t, mode))?;
        ranks[mode.axis()] = sv.iter().filter(|&&s| s > thresholds[mode.axis()]).count();
    }
    Ok(ranks)
}
