//! Synthetic degradations: Gaussian noise, sparse impulses, stripes and deadlines.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{CfError, Result};
use crate::tensor::DenseTensor3;

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSpec {
    /// Standard deviation of additive i.i.d. Gaussian noise.
    pub sigma: f64,
    /// Fraction of entries replaced by uniform values in `[-1, 1]` on every band.
    pub sparse_rate: f64,
    /// Impulse rate range applied to a third of the bands, drawn per band.
    pub band_sparse: Option<(f64, f64)>,
    /// Fraction range of columns per affected band receiving a constant offset in
    /// `[-0.5, 0.5]`, on a third of the bands.
    pub stripes: Option<(f64, f64)>,
    /// Fraction range of columns per affected band that are zeroed, on a third of the bands.
    pub deadlines: Option<(f64, f64)>,
    pub seed: u64,
}

/// Noisy tensor and, when deadlines were added, the mask of entries that survived.
#[derive(Debug, Clone)]
pub struct NoisyData {
    pub noisy: DenseTensor3,
    pub mask: Option<Vec<bool>>,
    /// Number of entries hit by impulses.
    pub impulses: usize,
    /// `(band, column, offset)` for every stripe.
    pub stripes: Vec<(usize, usize, f64)>,
}

impl NoiseSpec {
    pub fn clean(seed: u64) -> Self {
        Self {
            sigma: 0.0,
            sparse_rate: 0.0,
            band_sparse: None,
            stripes: None,
            deadlines: None,
            seed,
        }
    }

    /// The five mixed-noise cases: Gaussian `sigma = 0.2` plus
    /// 1) impulses at rate 0.1; 2) impulses at 30-60% on a third of the bands;
    /// 3) stripes on 10-20% of columns of a third of the bands; 4) deadlines likewise;
    /// 5) the impulses, stripes and deadlines of cases 2-4 together.
    pub fn case(n: u8, seed: u64) -> Result<Self> {
        let mut s = Self {
            sigma: 0.2,
            ..Self::clean(seed)
        };
        match n {
            1 => s.sparse_rate = 0.1,
            2 => s.band_sparse = Some((0.3, 0.6)),
            3 => s.stripes = Some((0.1, 0.2)),
            4 => s.deadlines = Some((0.1, 0.2)),
            5 => {
                s.band_sparse = Some((0.3, 0.6));
                s.stripes = Some((0.1, 0.2));
                s.deadlines = Some((0.1, 0.2));
            }
            _ => return Err(CfError::arg(format!("noise case must be 1-5, got {n}"))),
        }
        Ok(s)
    }

    fn validate(&self) -> Result<()> {
        let rate_ok = |r: f64| (0.0..=1.0).contains(&r);
        let range_ok = |r: Option<(f64, f64)>| r.is_none_or(|(a, b)| rate_ok(a) && rate_ok(b) && a <= b);
        if !(self.sigma >= 0.0) || !self.sigma.is_finite() {
            return Err(CfError::arg("sigma must be finite and nonnegative"));
        }
        if !rate_ok(self.sparse_rate)
            || !range_ok(self.band_sparse)
            || !range_ok(self.stripes)
            || !range_ok(self.deadlines)
        {
            return Err(CfError::arg("noise rates must lie in [0, 1]"));
        }
        Ok(())
    }
}

fn affected_bands(rng: &mut ChaCha8Rng, n3: usize) -> Vec<usize> {
    let count = n3.div_ceil(3);
    let mut b = sample(rng, n3, count).into_vec();
    b.sort_unstable();
    b
}

fn draw_rate(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.gen_range(lo..=hi)
    } else {
        lo
    }
}

/// Applies `spec` to `clean`; deterministic given the seed.
pub fn synthesize_noise(clean: &DenseTensor3, spec: &NoiseSpec) -> Result<NoisyData> {
    spec.validate()?;
    let [n1, n2, n3] = clean.dims();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut out = clean.clone();
    if spec.sigma > 0.0 {
        let g = Normal::new(0.0, spec.sigma).map_err(|e| CfError::arg(e.to_string()))?;
        for v in out.data_mut() {
            *v += g.sample(&mut rng);
        }
    }
    let mut impulses = 0;
    if spec.sparse_rate > 0.0 {
        let count = (spec.sparse_rate * clean.len() as f64).round() as usize;
        for idx in sample(&mut rng, clean.len(), count) {
            out.data_mut()[idx] = rng.gen_range(-1.0..=1.0);
        }
        impulses += count;
    }
    let plane = n1 * n2;
    if let Some(range) = spec.band_sparse {
        for k in affected_bands(&mut rng, n3) {
            let rate = draw_rate(&mut rng, range);
            let count = (rate * plane as f64).round() as usize;
            for idx in sample(&mut rng, plane, count) {
                out.slice_data_mut(k)[idx] = rng.gen_range(-1.0..=1.0);
            }
            impulses += count;
        }
    }
    let mut stripes = Vec::new();
    if let Some(range) = spec.stripes {
        for k in affected_bands(&mut rng, n3) {
            let rate = draw_rate(&mut rng, range);
            let count = (rate * n2 as f64).round() as usize;
            let mut cols = sample(&mut rng, n2, count).into_vec();
            cols.sort_unstable();
            for j in cols {
                let offset = rng.gen_range(-0.5..=0.5);
                for i in 0..n1 {
                    let idx = out.offset(i, j, k);
                    out.data_mut()[idx] += offset;
                }
                stripes.push((k, j, offset));
            }
        }
    }
    let mut mask = None;
    if let Some(range) = spec.deadlines {
        let mut m = vec![true; clean.len()];
        for k in affected_bands(&mut rng, n3) {
            let rate = draw_rate(&mut rng, range);
            let count = (rate * n2 as f64).round() as usize;
            for j in sample(&mut rng, n2, count) {
                for i in 0..n1 {
                    let idx = out.offset(i, j, k);
                    out.data_mut()[idx] = 0.0;
                    m[idx] = false;
                }
            }
        }
        mask = Some(m);
    }
    Ok(NoisyData {
        noisy: out,
        mask,
        impulses,
        stripes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn smooth(dims: [usize; 3]) -> DenseTensor3 {
        DenseTensor3::from_fn(dims, |i, j, k| 0.5 + 0.1 * ((i + 2 * j + k) as f64 / 9.0).sin())
    }

    #[test]
    fn clean_spec_is_identity() {
        let a = smooth([8, 8, 3]);
        let n = synthesize_noise(&a, &NoiseSpec::clean(1)).unwrap();
        assert_eq!(n.noisy, a);
        assert!(n.mask.is_none());
    }

    #[test]
    fn deterministic() {
        let a = smooth([8, 8, 6]);
        for c in 1..=5 {
            let s = NoiseSpec::case(c, 9).unwrap();
            assert_eq!(
                synthesize_noise(&a, &s).unwrap().noisy,
                synthesize_noise(&a, &s).unwrap().noisy
            );
        }
        assert!(NoiseSpec::case(6, 0).is_err());
    }

    #[test]
    fn impulse_count_within_binomial_band() {
        let a = DenseTensor3::filled([100, 100, 100], 0.5);
        let spec = NoiseSpec {
            sparse_rate: 0.1,
            ..NoiseSpec::clean(3)
        };
        let n = synthesize_noise(&a, &spec).unwrap();
        let changed = n
            .noisy
            .data()
            .iter()
            .filter(|&&v| v != 0.5)
            .count() as f64;
        let total = 1e6;
        let sd = (total * 0.1 * 0.9f64).sqrt();
        assert!((changed - 0.1 * total).abs() <= 3.0 * sd, "{changed}");
    }

    #[test]
    fn stripes_are_constant_offsets() {
        let a = smooth([12, 20, 6]);
        let spec = NoiseSpec {
            stripes: Some((0.1, 0.2)),
            ..NoiseSpec::clean(4)
        };
        let n = synthesize_noise(&a, &spec).unwrap();
        assert!(!n.stripes.is_empty());
        for &(k, j, off) in &n.stripes {
            assert!((-0.5..=0.5).contains(&off));
            let diffs: Vec<f64> = (0..12).map(|i| n.noisy.get(i, j, k) - a.get(i, j, k)).collect();
            let mean = diffs.iter().sum::<f64>() / 12.0;
            let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / 12.0;
            assert!(var < 1e-28);
            assert!((mean - off).abs() < 1e-12);
        }
        let bands: std::collections::BTreeSet<usize> = n.stripes.iter().map(|s| s.0).collect();
        assert_eq!(bands.len(), 2);
    }

    #[test]
    fn deadlines_zero_columns_and_mask_them() {
        let a = smooth([10, 20, 3]);
        let n = synthesize_noise(&a, &NoiseSpec::case(4, 5).unwrap()).unwrap();
        let m = n.mask.unwrap();
        let missing = m.iter().filter(|&&x| !x).count();
        assert!((2 * 10..=4 * 10).contains(&missing));
        for (idx, &obs) in m.iter().enumerate() {
            if !obs {
                assert_eq!(n.noisy.data()[idx], 0.0);
            }
        }
    }
}
