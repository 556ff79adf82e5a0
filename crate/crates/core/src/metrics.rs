//! Reconstruction quality metrics. Data are assumed scaled to `[0, 1]`.

use crate::error::{CfError, Result};
use crate::tensor::DenseTensor3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsReport {
    pub psnr: f64,
    pub ssim: f64,
    pub nrmse: f64,
}

impl MetricsReport {
    /// PSNR, SSIM (when both spatial dims are at least 11; NaN otherwise) and NRMSE.
    pub fn compute(reference: &DenseTensor3, estimate: &DenseTensor3) -> Result<Self> {
        let [n1, n2, _] = reference.dims();
        Ok(Self {
            psnr: psnr(reference, estimate)?,
            ssim: if n1 >= SSIM_WIN && n2 >= SSIM_WIN {
                ssim(reference, estimate)?
            } else {
                f64::NAN
            },
            nrmse: nrmse(reference, estimate)?,
        })
    }

    /// Flat `key=value` lines.
    pub fn to_key_values(&self) -> String {
        format!(
            "psnr={}\nssim={:.12}\nnrmse={:.12e}\n",
            format_db(self.psnr),
            self.ssim,
            self.nrmse
        )
    }
}

/// Decibel value with fixed precision, or `Inf`.
pub fn format_db(v: f64) -> String {
    if v.is_infinite() && v > 0.0 {
        "Inf".to_string()
    } else {
        format!("{v:.10}")
    }
}

fn check_pair(reference: &DenseTensor3, estimate: &DenseTensor3) -> Result<()> {
    reference.check_same(estimate)?;
    if !reference.is_finite() || !estimate.is_finite() {
        return Err(CfError::NonFinite("metric input contains NaN or Inf".into()));
    }
    Ok(())
}

/// Peak-1 PSNR computed per frontal slice and averaged. Slices reproduced exactly are left
/// out of the mean; the result is `+inf` only when every slice is exact.
pub fn psnr(reference: &DenseTensor3, estimate: &DenseTensor3) -> Result<f64> {
    check_pair(reference, estimate)?;
    let [n1, n2, n3] = reference.dims();
    let plane = (n1 * n2) as f64;
    let mut acc = 0.0;
    let mut count = 0usize;
    for k in 0..n3 {
        let mse = reference
            .slice_data(k)
            .iter()
            .zip(estimate.slice_data(k))
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            / plane;
        if mse > 0.0 {
            acc += -10.0 * mse.log10();
            count += 1;
        }
    }
    Ok(if count == 0 {
        f64::INFINITY
    } else {
        acc / count as f64
    })
}

/// Peak-1 PSNR from the mean squared error over the whole tensor.
pub fn psnr_global(reference: &DenseTensor3, estimate: &DenseTensor3) -> Result<f64> {
    check_pair(reference, estimate)?;
    let mse = reference
        .data()
        .iter()
        .zip(estimate.data())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / reference.len() as f64;
    Ok(if mse == 0.0 {
        f64::INFINITY
    } else {
        -10.0 * mse.log10()
    })
}

/// `||reference - estimate||_F / ||reference||_F`.
pub fn nrmse(reference: &DenseTensor3, estimate: &DenseTensor3) -> Result<f64> {
    check_pair(reference, estimate)?;
    let denom = reference.frobenius_norm();
    if denom == 0.0 {
        return Err(CfError::arg("NRMSE is undefined for a zero reference"));
    }
    Ok(reference.sub(estimate)?.frobenius_norm() / denom)
}

const SSIM_WIN: usize = 11;
const SSIM_SIGMA: f64 = 1.5;
const SSIM_K1: f64 = 0.01;
const SSIM_K2: f64 = 0.03;

fn gaussian_window() -> [f64; SSIM_WIN] {
    let mut w = [0.0; SSIM_WIN];
    let c = (SSIM_WIN / 2) as f64;
    for (i, x) in w.iter_mut().enumerate() {
        let d = i as f64 - c;
        *x = (-d * d / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
    }
    let s: f64 = w.iter().sum();
    w.map(|x| x / s)
}

// valid-mode separable filtering of an n1 x n2 column-major slice
fn filter_valid(src: &[f64], n1: usize, n2: usize, w: &[f64; SSIM_WIN]) -> Vec<f64> {
    let o1 = n1 + 1 - SSIM_WIN;
    let o2 = n2 + 1 - SSIM_WIN;
    let mut tmp = vec![0.0; o1 * n2];
    for j in 0..n2 {
        for i in 0..o1 {
            tmp[i + o1 * j] = (0..SSIM_WIN).map(|t| w[t] * src[i + t + n1 * j]).sum();
        }
    }
    let mut out = vec![0.0; o1 * o2];
    for j in 0..o2 {
        for i in 0..o1 {
            out[i + o1 * j] = (0..SSIM_WIN).map(|t| w[t] * tmp[i + o1 * (j + t)]).sum();
        }
    }
    out
}

/// Single-scale SSIM with an 11x11 Gaussian window (sigma 1.5), `K1 = 0.01`, `K2 = 0.03`,
/// dynamic range 1, averaged over the valid region of each slice and then over slices.
pub fn ssim(reference: &DenseTensor3, estimate: &DenseTensor3) -> Result<f64> {
    check_pair(reference, estimate)?;
    let [n1, n2, n3] = reference.dims();
    if n1 < SSIM_WIN || n2 < SSIM_WIN {
        return Err(CfError::dim(format!(
            "SSIM needs spatial dims of at least {SSIM_WIN}, got {n1}x{n2}"
        )));
    }
    let w = gaussian_window();
    let c1 = SSIM_K1 * SSIM_K1;
    let c2 = SSIM_K2 * SSIM_K2;
    let mut total = 0.0;
    for k in 0..n3 {
        let x = reference.slice_data(k);
        let y = estimate.slice_data(k);
        let xx: Vec<f64> = x.iter().map(|v| v * v).collect();
        let yy: Vec<f64> = y.iter().map(|v| v * v).collect();
        let xy: Vec<f64> = x.iter().zip(y).map(|(a, b)| a * b).collect();
        let mx = filter_valid(x, n1, n2, &w);
        let my = filter_valid(y, n1, n2, &w);
        let sxx = filter_valid(&xx, n1, n2, &w);
        let syy = filter_valid(&yy, n1, n2, &w);
        let sxy = filter_valid(&xy, n1, n2, &w);
        let mut acc = 0.0;
        for p in 0..mx.len() {
            let (a, b) = (mx[p], my[p]);
            let vx = sxx[p] - a * a;
            let vy = syy[p] - b * b;
            let cxy = sxy[p] - a * b;
            acc += ((2.0 * a * b + c1) * (2.0 * cxy + c2))
                / ((a * a + b * b + c1) * (vx + vy + c2));
        }
        total += acc / mx.len() as f64;
    }
    Ok(total / n3 as f64)
}
