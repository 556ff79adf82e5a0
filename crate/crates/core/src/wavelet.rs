//! Single-level 2-D Haar wavelet transform, matrix-wise and frontal-slice-wise.
//!
//! With `W_n = [H; G]` the orthogonal Haar analysis matrix, the forward transform of a matrix
//! is `W A W^T` split into the four blocks `[B1 B2; B3 B4]` (approximation, horizontal,
//! vertical, diagonal) and the inverse is `W^T B W`. Both directions are evaluated with the
//! equivalent 2x2 butterfly so the cost is linear in the number of entries.

use crate::error::{CfError, Result};
use crate::tensor::{DenseMatrix, DenseTensor3};

/// The four coefficient tensors of one transform level, each `n1/2 x n2/2 x n3`.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletBlocks {
    pub blocks: [DenseTensor3; 4],
}

impl WaveletBlocks {
    pub fn new(blocks: [DenseTensor3; 4]) -> Result<Self> {
        let d = blocks[0].dims();
        if blocks.iter().any(|b| b.dims() != d) {
            return Err(CfError::shape("wavelet blocks must share dims"));
        }
        Ok(Self { blocks })
    }

    pub fn zeros(block_dims: [usize; 3]) -> Self {
        Self {
            blocks: std::array::from_fn(|_| DenseTensor3::zeros(block_dims)),
        }
    }

    /// Dims of each block.
    pub fn block_dims(&self) -> [usize; 3] {
        self.blocks[0].dims()
    }

    /// Dims of the tensor the blocks reconstruct.
    pub fn image_dims(&self) -> [usize; 3] {
        let [h1, h2, n3] = self.block_dims();
        [2 * h1, 2 * h2, n3]
    }

    pub fn approximation(&self) -> &DenseTensor3 {
        &self.blocks[0]
    }

    /// Sum of squared Frobenius norms over the four blocks.
    pub fn energy(&self) -> f64 {
        self.blocks.iter().map(|b| b.frobenius_norm().powi(2)).sum()
    }
}

/// `n x n` Haar analysis matrix stacking `H_{n/2}` over `G_{n/2}`.
pub fn haar_matrix(n: usize) -> Result<DenseMatrix> {
    if n == 0 || !n.is_multiple_of(2) {
        return Err(CfError::dim(format!("Haar matrix size must be even and positive, got {n}")));
    }
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let half = n / 2;
    let mut w = DenseMatrix::zeros(n, n);
    for r in 0..half {
        w.set(r, 2 * r, h);
        w.set(r, 2 * r + 1, h);
        w.set(half + r, 2 * r, h);
        w.set(half + r, 2 * r + 1, -h);
    }
    Ok(w)
}

fn check_even(n1: usize, n2: usize) -> Result<()> {
    if n1 == 0 || n2 == 0 || !n1.is_multiple_of(2) || !n2.is_multiple_of(2) {
        return Err(CfError::dim(format!(
            "spatial dims must be even and positive, got {n1}x{n2}"
        )));
    }
    Ok(())
}

// Butterfly on one 2x2 cell (a00 a01; a10 a11), rows first index.
#[inline]
fn analyse(a00: f64, a01: f64, a10: f64, a11: f64) -> [f64; 4] {
    [
        0.5 * (a00 + a01 + a10 + a11),
        0.5 * (a00 - a01 + a10 - a11),
        0.5 * (a00 + a01 - a10 - a11),
        0.5 * (a00 - a01 - a10 + a11),
    ]
}

#[inline]
fn synthesise(b: [f64; 4]) -> [f64; 4] {
    let [b1, b2, b3, b4] = b;
    [
        0.5 * (b1 + b2 + b3 + b4),
        0.5 * (b1 - b2 + b3 - b4),
        0.5 * (b1 + b2 - b3 - b4),
        0.5 * (b1 - b2 - b3 + b4),
    ]
}

fn analyse_slice(src: &[f64], n1: usize, n2: usize, out: &mut [&mut [f64]; 4]) {
    let h1 = n1 / 2;
    for j in 0..n2 / 2 {
        for i in 0..h1 {
            let a00 = src[2 * i + n1 * 2 * j];
            let a10 = src[2 * i + 1 + n1 * 2 * j];
            let a01 = src[2 * i + n1 * (2 * j + 1)];
            let a11 = src[2 * i + 1 + n1 * (2 * j + 1)];
            let b = analyse(a00, a01, a10, a11);
            for s in 0..4 {
                out[s][i + h1 * j] = b[s];
            }
        }
    }
}

/// 2-D HWT of a matrix: `(H A H^T, H A G^T, G A H^T, G A G^T)`.
pub fn hwt2(a: &DenseMatrix) -> Result<[DenseMatrix; 4]> {
    let (n1, n2) = (a.rows(), a.cols());
    check_even(n1, n2)?;
    let (h1, h2) = (n1 / 2, n2 / 2);
    let mut bufs: [Vec<f64>; 4] = std::array::from_fn(|_| vec![0.0; h1 * h2]);
    {
        let [b1, b2, b3, b4] = &mut bufs;
        let mut out = [&mut b1[..], &mut b2[..], &mut b3[..], &mut b4[..]];
        analyse_slice(a.data(), n1, n2, &mut out);
    }
    let [b1, b2, b3, b4] = bufs;
    Ok([
        DenseMatrix::from_col_major(h1, h2, b1)?,
        DenseMatrix::from_col_major(h1, h2, b2)?,
        DenseMatrix::from_col_major(h1, h2, b3)?,
        DenseMatrix::from_col_major(h1, h2, b4)?,
    ])
}

/// Inverse of [`hwt2`].
pub fn ihwt2(b: &[DenseMatrix; 4]) -> Result<DenseMatrix> {
    let (h1, h2) = (b[0].rows(), b[0].cols());
    if b.iter().any(|m| m.rows() != h1 || m.cols() != h2) {
        return Err(CfError::shape("wavelet blocks must share dims"));
    }
    let n1 = 2 * h1;
    let mut a = DenseMatrix::zeros(n1, 2 * h2);
    let out = a.data_mut();
    for j in 0..h2 {
        for i in 0..h1 {
            let [a00, a01, a10, a11] =
                synthesise(std::array::from_fn(|s| b[s].data()[i + h1 * j]));
            out[2 * i + n1 * 2 * j] = a00;
            out[2 * i + 1 + n1 * 2 * j] = a10;
            out[2 * i + n1 * (2 * j + 1)] = a01;
            out[2 * i + 1 + n1 * (2 * j + 1)] = a11;
        }
    }
    Ok(a)
}

/// Frontal-slice-wise HWT of a tensor; the third mode is untouched.
pub fn hwt(a: &DenseTensor3) -> Result<WaveletBlocks> {
    let [n1, n2, n3] = a.dims();
    check_even(n1, n2)?;
    let bd = [n1 / 2, n2 / 2, n3];
    let mut out = WaveletBlocks::zeros(bd);
    for k in 0..n3 {
        let [b1, b2, b3, b4] = &mut out.blocks;
        let mut slices = [
            b1.slice_data_mut(k),
            b2.slice_data_mut(k),
            b3.slice_data_mut(k),
            b4.slice_data_mut(k),
        ];
        analyse_slice(a.slice_data(k), n1, n2, &mut slices);
    }
    Ok(out)
}

/// Frontal-slice-wise inverse HWT.
pub fn ihwt(b: &WaveletBlocks) -> Result<DenseTensor3> {
    let d = b.block_dims();
    if b.blocks.iter().any(|x| x.dims() != d) {
        return Err(CfError::shape("inconsistent wavelet block dims"));
    }
    let [h1, h2, n3] = d;
    let n1 = 2 * h1;
    let mut a = DenseTensor3::zeros([n1, 2 * h2, n3]);
    for k in 0..n3 {
        let src: [&[f64]; 4] = std::array::from_fn(|s| b.blocks[s].slice_data(k));
        let out = a.slice_data_mut(k);
        for j in 0..h2 {
            for i in 0..h1 {
                let [a00, a01, a10, a11] = synthesise(std::array::from_fn(|s| src[s][i + h1 * j]));
                out[2 * i + n1 * 2 * j] = a00;
                out[2 * i + 1 + n1 * 2 * j] = a10;
                out[2 * i + n1 * (2 * j + 1)] = a01;
                out[2 * i + 1 + n1 * (2 * j + 1)] = a11;
            }
        }
    }
    Ok(a)
}
