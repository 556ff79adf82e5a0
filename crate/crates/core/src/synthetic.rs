//! Deterministic test data with known structure.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{CfError, Result};
use crate::tensor::{mode_product, DenseMatrix, DenseTensor3, Mode};

/// A colour-like texture in `[0, 1]`: a smooth gradient, a fine vertical grating, a small
/// checkerboard and a disc with a sharp edge. Channels differ in phase and grating strength.
pub fn textured_image(n1: usize, n2: usize, n3: usize, seed: u64) -> DenseTensor3 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let phases: Vec<f64> = (0..n3).map(|_| rng.gen_range(0.0..2.0 * PI)).collect();
    let (cx, cy) = (
        rng.gen_range(0.35..0.65) * n1 as f64,
        rng.gen_range(0.35..0.65) * n2 as f64,
    );
    let radius2 = (0.25 * n1.min(n2) as f64).powi(2);
    DenseTensor3::from_fn([n1, n2, n3], |i, j, c| {
        let (x, y) = (i as f64, j as f64);
        let base = 0.5 + 0.2 * (0.05 * x + 0.03 * y + phases[c]).sin();
        let grating = 0.1 * (2.0 * PI * x / 4.0).cos() * (1.0 + c as f64) / n3.max(1) as f64;
        let checker = if (i / 3 + j / 5) % 2 == 0 { 0.08 } else { -0.08 };
        let disc = if (x - cx).powi(2) + (y - cy).powi(2) < radius2 {
            0.1
        } else {
            0.0
        };
        (base + grating + checker + disc).clamp(0.0, 1.0)
    })
}

/// Smooth nonnegative factor: a positive mix of low-frequency cosines.
fn smooth_factor(rng: &mut ChaCha8Rng, n: usize, r: usize) -> DenseMatrix {
    let params: Vec<(f64, f64, f64)> = (0..r)
        .map(|_| {
            (
                rng.gen_range(0.5..2.5),
                rng.gen_range(0.0..2.0 * PI),
                rng.gen_range(0.2..0.9),
            )
        })
        .collect();
    DenseMatrix::from_fn(n, r, |i, c| {
        let (f, ph, amp) = params[c];
        let t = i as f64 / n.max(2) as f64;
        1.0 + amp * (2.0 * PI * f * t + ph).cos()
    })
}

/// Tucker tensor with exact multilinear rank `ranks` (generically), smooth positive factors
/// and a positive core, scaled so its maximum is 1.
pub fn smooth_tucker(dims: [usize; 3], ranks: [usize; 3], seed: u64) -> Result<DenseTensor3> {
    if (0..3).any(|a| ranks[a] == 0 || ranks[a] > dims[a]) {
        return Err(CfError::arg(format!("ranks {ranks:?} incompatible with dims {dims:?}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let core = DenseTensor3::from_fn(ranks, |_, _, _| rng.gen_range(0.1..1.0));
    let u = smooth_factor(&mut rng, dims[0], ranks[0]);
    let v = smooth_factor(&mut rng, dims[1], ranks[1]);
    let w = DenseMatrix::from_fn(dims[2], ranks[2], |_, _| rng.gen_range(0.2..1.0));
    let t = mode_product(&mode_product(&mode_product(&core, &w, Mode::Three)?, &v, Mode::Two)?, &u, Mode::One)?;
    let max = t.max_abs();
    Ok(t.scale(1.0 / max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::numerical_tucker_rank;

    #[test]
    fn texture_in_unit_range() {
        let t = textured_image(32, 32, 3, 1);
        assert!(t.data().iter().all(|v| (0.0..=1.0).contains(v)));
        assert_eq!(t, textured_image(32, 32, 3, 1));
    }

    #[test]
    fn tucker_has_requested_rank() {
        let t = smooth_tucker([24, 20, 8], [5, 5, 3], 2).unwrap();
        assert_eq!(numerical_tucker_rank(&t, 1e-9).unwrap(), [5, 5, 3]);
        assert!((t.max_abs() - 1.0).abs() < 1e-15);
        assert!(t.data().iter().all(|&v| v > 0.0));
    }
}
