//! Univariate sinusoidal MLPs `f: R -> R^r` with exact reverse-mode gradients.
//!
//! A net of depth `d` holds `d` weight matrices: `H_1` is `m x 1`, hidden layers are `m x m`
//! and `H_d` is `r x m`. Every layer except the last is followed by `sin(omega * .)`.
//! Activations are stored batch-major: one row per coordinate, one column per unit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{CfError, Result};
use crate::tensor::{gemm, DenseMatrix};

#[derive(Debug, Clone, PartialEq)]
pub struct SirenMlp {
    weights: Vec<DenseMatrix>,
    biases: Vec<Vec<f64>>,
    omega: f64,
    use_bias: bool,
}

/// Gradients shaped like a [`SirenMlp`]'s parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientBundle {
    pub weights: Vec<DenseMatrix>,
    pub biases: Vec<Vec<f64>>,
}

/// Pre- and post-activation values from a forward pass, reused by the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    coords: Vec<f64>,
    pre: Vec<DenseMatrix>,
    post: Vec<DenseMatrix>,
}

impl SirenMlp {
    /// SIREN initialisation: first layer `U(-1/in, 1/in)`, deeper layers
    /// `U(-sqrt(6/fan_in)/omega, sqrt(6/fan_in)/omega)`, zero biases.
    pub fn init(
        depth: usize,
        width: usize,
        out_dim: usize,
        omega: f64,
        use_bias: bool,
        seed: u64,
    ) -> Result<Self> {
        if depth < 2 {
            return Err(CfError::arg(format!("depth must be at least 2, got {depth}")));
        }
        if width == 0 || out_dim == 0 {
            return Err(CfError::arg("width and output dimension must be positive"));
        }
        check_omega(omega)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut weights = Vec::with_capacity(depth);
        let mut biases = Vec::with_capacity(depth);
        for q in 0..depth {
            let fan_in = if q == 0 { 1 } else { width };
            let fan_out = if q + 1 == depth { out_dim } else { width };
            let bound = if q == 0 {
                1.0 / fan_in as f64
            } else {
                (6.0 / fan_in as f64).sqrt() / omega
            };
            weights.push(DenseMatrix::from_fn(fan_out, fan_in, |_, _| {
                rng.gen_range(-bound..=bound)
            }));
            biases.push(vec![0.0; fan_out]);
        }
        Ok(Self {
            weights,
            biases,
            omega,
            use_bias,
        })
    }

    /// Builds a net from explicit layers. Shapes must chain `1 -> m -> ... -> r`.
    pub fn from_layers(
        weights: Vec<DenseMatrix>,
        biases: Vec<Vec<f64>>,
        omega: f64,
        use_bias: bool,
    ) -> Result<Self> {
        check_omega(omega)?;
        if weights.len() < 2 || biases.len() != weights.len() {
            return Err(CfError::arg("need at least two layers with one bias vector each"));
        }
        let mut fan_in = 1;
        for (w, b) in weights.iter().zip(&biases) {
            if w.cols() != fan_in || b.len() != w.rows() {
                return Err(CfError::shape("layer shapes do not chain"));
            }
            fan_in = w.rows();
        }
        Ok(Self {
            weights,
            biases,
            omega,
            use_bias,
        })
    }

    pub fn depth(&self) -> usize {
        self.weights.len()
    }

    pub fn width(&self) -> usize {
        self.weights[0].rows()
    }

    pub fn out_dim(&self) -> usize {
        self.weights.last().map_or(0, DenseMatrix::rows)
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn uses_bias(&self) -> bool {
        self.use_bias
    }

    pub fn weights(&self) -> &[DenseMatrix] {
        &self.weights
    }

    pub fn biases(&self) -> &[Vec<f64>] {
        &self.biases
    }

    /// Replaces the activation frequency; weights are kept as they are.
    pub fn set_omega(&mut self, omega: f64) -> Result<()> {
        check_omega(omega)?;
        self.omega = omega;
        Ok(())
    }

    pub fn with_omega(&self, omega: f64) -> Result<Self> {
        let mut n = self.clone();
        n.set_omega(omega)?;
        Ok(n)
    }

    pub fn num_params(&self) -> usize {
        let w: usize = self.weights.iter().map(|m| m.rows() * m.cols()).sum();
        let b: usize = if self.use_bias {
            self.biases.iter().map(Vec::len).sum()
        } else {
            0
        };
        w + b
    }

    /// Evaluates the net on every coordinate: row `i` of the result is `f(coords[i])`.
    pub fn forward_batch(&self, coords: &[f64]) -> DenseMatrix {
        self.forward_cached(coords).1
    }

    pub fn forward_cached(&self, coords: &[f64]) -> (ForwardCache, DenseMatrix) {
        let n = coords.len();
        let depth = self.depth();
        let mut pre = Vec::with_capacity(depth - 1);
        let mut post = Vec::with_capacity(depth - 1);
        let mut input = DenseMatrix::from_col_major(n, 1, coords.to_vec())
            .expect("coordinate column has n entries");
        for q in 0..depth {
            let z = self.affine(q, &input);
            if q + 1 == depth {
                return (
                    ForwardCache {
                        coords: coords.to_vec(),
                        pre,
                        post,
                    },
                    z,
                );
            }
            let w = self.omega;
            let a = DenseMatrix::from_col_major(
                z.rows(),
                z.cols(),
                z.data().iter().map(|&v| (w * v).sin()).collect(),
            )
            .expect("same shape");
            pre.push(z);
            post.push(a.clone());
            input = a;
        }
        unreachable!("depth >= 2")
    }

    // input (n x fan_in) -> input * H_q^T + b_q  (n x fan_out)
    fn affine(&self, q: usize, input: &DenseMatrix) -> DenseMatrix {
        let h = &self.weights[q];
        let (n, fan_in, fan_out) = (input.rows(), h.cols(), h.rows());
        let mut z = DenseMatrix::zeros(n, fan_out);
        gemm(
            n,
            fan_in,
            fan_out,
            1.0,
            input.data(),
            [1, n],
            h.data(),
            [fan_out, 1],
            0.0,
            z.data_mut(),
            [1, n],
        );
        if self.use_bias {
            let b = &self.biases[q];
            for (c, bc) in b.iter().enumerate() {
                for v in &mut z.data_mut()[c * n..(c + 1) * n] {
                    *v += bc;
                }
            }
        }
        z
    }

    /// Gradients of `sum_ij upstream[i,j] * output[i,j]` with respect to every parameter.
    pub fn backward_batch(&self, coords: &[f64], upstream: &DenseMatrix) -> Result<GradientBundle> {
        let (cache, _) = self.forward_cached(coords);
        self.backward_cached(&cache, upstream)
    }

    pub fn backward_cached(
        &self,
        cache: &ForwardCache,
        upstream: &DenseMatrix,
    ) -> Result<GradientBundle> {
        let n = cache.coords.len();
        if upstream.rows() != n || upstream.cols() != self.out_dim() {
            return Err(CfError::shape(format!(
                "upstream gradient is {}x{}, output is {}x{}",
                upstream.rows(),
                upstream.cols(),
                n,
                self.out_dim()
            )));
        }
        let depth = self.depth();
        let mut gw: Vec<DenseMatrix> = Vec::with_capacity(depth);
        let mut gb: Vec<Vec<f64>> = Vec::with_capacity(depth);
        let coord_col = DenseMatrix::from_col_major(n, 1, cache.coords.clone())?;
        let mut delta = upstream.clone();
        for q in (0..depth).rev() {
            let input = if q == 0 { &coord_col } else { &cache.post[q - 1] };
            let h = &self.weights[q];
            let (fan_out, fan_in) = (h.rows(), h.cols());
            // dH_q = delta^T * input   (fan_out x fan_in)
            let mut dh = DenseMatrix::zeros(fan_out, fan_in);
            gemm(
                fan_out,
                n,
                fan_in,
                1.0,
                delta.data(),
                [n, 1],
                input.data(),
                [1, n],
                0.0,
                dh.data_mut(),
                [1, fan_out],
            );
            let db: Vec<f64> = if self.use_bias {
                (0..fan_out).map(|c| delta.column(c).iter().sum()).collect()
            } else {
                vec![0.0; fan_out]
            };
            gw.push(dh);
            gb.push(db);
            if q == 0 {
                break;
            }
            // d input = delta * H_q  (n x fan_in), then through the sine
            let mut da = DenseMatrix::zeros(n, fan_in);
            gemm(
                n,
                fan_out,
                fan_in,
                1.0,
                delta.data(),
                [1, n],
                h.data(),
                [1, fan_out],
                0.0,
                da.data_mut(),
                [1, n],
            );
            let w = self.omega;
            for (d, z) in da.data_mut().iter_mut().zip(cache.pre[q - 1].data()) {
                *d *= w * (w * z).cos();
            }
            delta = da;
        }
        gw.reverse();
        gb.reverse();
        Ok(GradientBundle {
            weights: gw,
            biases: gb,
        })
    }

    /// Mutable parameter slices in declaration order: per layer, weights then bias.
    /// Biases are omitted when the net runs without them.
    pub fn param_slices_mut(&mut self) -> Vec<(&mut [f64], bool)> {
        let mut out = Vec::with_capacity(2 * self.depth());
        let use_bias = self.use_bias;
        for (w, b) in self.weights.iter_mut().zip(self.biases.iter_mut()) {
            out.push((w.data_mut(), true));
            if use_bias {
                out.push((&mut b[..], false));
            }
        }
        out
    }

    /// All stored arrays (weights and biases, biases included even when unused), for
    /// serialisation.
    pub(crate) fn arrays(&self) -> Vec<&[f64]> {
        let mut out = Vec::new();
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.push(w.data());
            out.push(&b[..]);
        }
        out
    }

    pub fn weights_mut(&mut self) -> &mut [DenseMatrix] {
        &mut self.weights
    }

    pub fn biases_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.biases
    }
}

impl GradientBundle {
    pub fn zeros_like(net: &SirenMlp) -> Self {
        Self {
            weights: net
                .weights
                .iter()
                .map(|w| DenseMatrix::zeros(w.rows(), w.cols()))
                .collect(),
            biases: net.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
        }
    }

    /// Slices matching [`SirenMlp::param_slices_mut`] order.
    pub fn slices(&self, use_bias: bool) -> Vec<&[f64]> {
        let mut out = Vec::new();
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.push(w.data());
            if use_bias {
                out.push(&b[..]);
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.weights
            .iter()
            .flat_map(|w| w.data().iter())
            .chain(self.biases.iter().flatten())
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().all(DenseMatrix::is_finite)
            && self.biases.iter().flatten().all(|v| v.is_finite())
    }
}

fn check_omega(omega: f64) -> Result<()> {
    if !(omega > 0.0) || !omega.is_finite() {
        return Err(CfError::arg(format!("omega must be positive and finite, got {omega}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn one_neuron(omega: f64) -> SirenMlp {
        SirenMlp::from_layers(
            vec![
                DenseMatrix::from_col_major(1, 1, vec![1.0]).unwrap(),
                DenseMatrix::from_col_major(1, 1, vec![1.0]).unwrap(),
            ],
            vec![vec![0.0], vec![0.0]],
            omega,
            true,
        )
        .unwrap()
    }

    #[test]
    fn init_is_deterministic() {
        let a = SirenMlp::init(3, 16, 4, 5.0, true, 42).unwrap();
        let b = SirenMlp::init(3, 16, 4, 5.0, true, 42).unwrap();
        assert_eq!(a, b);
        let c = SirenMlp::init(3, 16, 4, 5.0, true, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn init_respects_bounds() {
        let omega = 5.0;
        let net = SirenMlp::init(3, 64, 8, omega, true, 7).unwrap();
        assert!(net.weights[0].data().iter().all(|v| v.abs() <= 1.0));
        let bound = (6.0f64 / 64.0).sqrt() / omega;
        for w in &net.weights[1..] {
            assert!(w.data().iter().all(|v| v.abs() <= bound));
            // the draw actually spans most of the interval
            let max = w.data().iter().fold(0.0f64, |m, v| m.max(v.abs()));
            assert!(max > 0.9 * bound);
        }
        assert!(net.biases.iter().flatten().all(|&b| b == 0.0));
    }

    #[test]
    fn init_shapes() {
        let net = SirenMlp::init(2, 64, 1, 1.0, true, 0).unwrap();
        assert_eq!(net.weights.len(), 2);
        assert_eq!((net.weights[0].rows(), net.weights[0].cols()), (64, 1));
        assert_eq!((net.weights[1].rows(), net.weights[1].cols()), (1, 64));
        assert!(SirenMlp::init(1, 4, 1, 1.0, true, 0).is_err());
        assert!(SirenMlp::init(2, 0, 1, 1.0, true, 0).is_err());
    }

    #[test]
    fn zero_weights_give_zero_output() {
        let mut net = SirenMlp::init(3, 8, 3, 2.0, true, 1).unwrap();
        for w in net.weights_mut() {
            w.data_mut().fill(0.0);
        }
        let out = net.forward_batch(&[-1.0, 0.3, 2.0]);
        assert!(out.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn one_neuron_analytic() {
        let net = one_neuron(FRAC_PI_2);
        let out = net.forward_batch(&[1.0]);
        assert!((out.get(0, 0) - 1.0).abs() < 1e-15);
        // d out / d H_1 = omega * cos(omega) * H_2 = 0
        let g = net
            .backward_batch(&[1.0], &DenseMatrix::from_col_major(1, 1, vec![1.0]).unwrap())
            .unwrap();
        assert!(g.weights[0].get(0, 0).abs() < 1e-15);
        // d out / d H_2 = sin(omega) = 1
        assert!((g.weights[1].get(0, 0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn batch_equals_stacked_singles() {
        let net = SirenMlp::init(3, 12, 5, 3.0, true, 9).unwrap();
        let coords = [-1.0, -0.4, 0.0, 0.25, 0.9];
        let batch = net.forward_batch(&coords);
        for (i, &x) in coords.iter().enumerate() {
            let single = net.forward_batch(&[x]);
            for c in 0..5 {
                assert!((batch.get(i, c) - single.get(0, c)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn zero_upstream_zero_gradient() {
        let net = SirenMlp::init(3, 6, 2, 3.0, true, 2).unwrap();
        let g = net
            .backward_batch(&[0.1, 0.2], &DenseMatrix::zeros(2, 2))
            .unwrap();
        assert_eq!(g.max_abs(), 0.0);
    }

    #[test]
    fn backward_rejects_shape_mismatch() {
        let net = SirenMlp::init(2, 6, 2, 3.0, true, 2).unwrap();
        assert!(net.backward_batch(&[0.1, 0.2], &DenseMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn set_omega_keeps_weights() {
        let net = SirenMlp::init(2, 8, 2, 4.0, true, 3).unwrap();
        let same = net.with_omega(4.0).unwrap();
        assert_eq!(net.forward_batch(&[0.3]), same.forward_batch(&[0.3]));
        let doubled = net.with_omega(8.0).unwrap();
        assert_eq!(doubled.weights, net.weights);
        assert_eq!(doubled.biases, net.biases);
        assert!(net.with_omega(0.0).is_err());
        assert!(net.with_omega(-1.0).is_err());

        let n = one_neuron(1.0).with_omega(2.0).unwrap();
        let out = n.forward_batch(&[0.5]).get(0, 0);
        assert!((out - (0.5f64 * 2.0).sin()).abs() < 1e-15);
    }

    fn weighted_sum(net: &SirenMlp, coords: &[f64], up: &DenseMatrix) -> f64 {
        let out = net.forward_batch(coords);
        out.data().iter().zip(up.data()).map(|(a, b)| a * b).sum()
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let h = 1e-6;
        let mut worst = 0.0f64;
        for trial in 0..20u64 {
            let depth = 2 + (trial % 2) as usize;
            let width = rng.gen_range(2..=16);
            let out_dim = rng.gen_range(1..=4);
            let omega = rng.gen_range(1.0..6.0);
            let mut net = SirenMlp::init(depth, width, out_dim, omega, true, trial).unwrap();
            for b in net.biases_mut().iter_mut().flatten() {
                *b = rng.gen_range(-0.5..0.5);
            }
            let coords: Vec<f64> = (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let up = DenseMatrix::from_fn(5, out_dim, |_, _| rng.gen_range(-1.0..1.0));
            let g = net.backward_batch(&coords, &up).unwrap();
            let analytic: Vec<f64> = g.slices(true).concat();
            let mut probe = net.clone();
            let n_slices = probe.param_slices_mut().len();
            let mut flat = 0;
            for s in 0..n_slices {
                let len = probe.param_slices_mut()[s].0.len();
                for e in 0..len {
                    let orig = probe.param_slices_mut()[s].0[e];
                    probe.param_slices_mut()[s].0[e] = orig + h;
                    let fp = weighted_sum(&probe, &coords, &up);
                    probe.param_slices_mut()[s].0[e] = orig - h;
                    let fm = weighted_sum(&probe, &coords, &up);
                    probe.param_slices_mut()[s].0[e] = orig;
                    let fd = (fp - fm) / (2.0 * h);
                    let a = analytic[flat];
                    let rel = (a - fd).abs() / a.abs().max(fd.abs()).max(1e-5);
                    worst = worst.max(rel);
                    flat += 1;
                }
            }
        }
        assert!(worst < 1e-4, "worst relative error {worst}");
    }

    #[test]
    fn output_bounded_by_layer_norms() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for seed in 0..20 {
            let net = SirenMlp::init(3, 8, 3, 4.0, false, seed).unwrap();
            // hidden activations lie in [-1, 1], so the last layer's induced norm bounds the output
            let last = net.weights().last().unwrap();
            let bound = (0..last.rows())
                .map(|r| last.row(r).iter().map(|v| v.abs()).sum::<f64>())
                .fold(0.0, f64::max);
            let x: f64 = rng.gen_range(-1.0..1.0);
            let out = net.forward_batch(&[x]);
            assert!(out.data().iter().all(|v| v.abs() <= 1.01 * bound));
        }
    }

    #[test]
    fn forward_is_deterministic() {
        let a = SirenMlp::init(2, 16, 4, 3.0, true, 8).unwrap();
        let b = SirenMlp::init(2, 16, 4, 3.0, true, 8).unwrap();
        let c = [0.1, -0.7, 0.33];
        assert_eq!(a.forward_batch(&c).data(), b.forward_batch(&c).data());
    }
}
