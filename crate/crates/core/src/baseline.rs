//! Single-frequency Tucker INR on the undecomposed tensor:
//! `A = C x3 W(z) x2 V(y) x1 U(x)` with one activation frequency for every net.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{CfError, Result};
use crate::model::GridKind;
use crate::optim::{Trainable, Upstream};
use crate::siren::{ForwardCache, SirenMlp};
use crate::tensor::{mode_product, unfold_product, DenseMatrix, DenseTensor3, Mode};
use crate::wavelet::WaveletBlocks;

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineConfig {
    pub dims: [usize; 3],
    pub rank_x: usize,
    pub rank_y: usize,
    pub rank_z: usize,
    pub width: usize,
    pub depth: usize,
    pub omega: f64,
    pub omega_z: f64,
    pub use_bias: bool,
    pub grid: GridKind,
    pub core_scale: f64,
    pub seed: u64,
}

impl BaselineConfig {
    pub fn num_params(&self) -> usize {
        let net = |out: usize| {
            let w = self.width;
            let layers = w + (self.depth - 2) * w * w + out * w;
            let bias = if self.use_bias {
                w * (self.depth - 1) + out
            } else {
                0
            };
            layers + bias
        };
        self.rank_x * self.rank_y * self.rank_z
            + net(self.rank_x)
            + net(self.rank_y)
            + net(self.rank_z)
    }

    /// Sets the largest square spatial rank whose parameter count stays within `budget`.
    pub fn match_budget(mut self, budget: usize) -> Result<Self> {
        let mut best = None;
        for r in 1..=4096 {
            self.rank_x = r;
            self.rank_y = r;
            if self.num_params() > budget {
                break;
            }
            best = Some(r);
        }
        let r = best.ok_or_else(|| CfError::arg("parameter budget too small for a baseline"))?;
        self.rank_x = r;
        self.rank_y = r;
        Ok(self)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineModel {
    dims: [usize; 3],
    core: DenseTensor3,
    net_x: SirenMlp,
    net_y: SirenMlp,
    net_z: SirenMlp,
    grid: GridKind,
}

#[derive(Debug, Clone)]
pub struct BaselinePass {
    pub image: DenseTensor3,
    u: DenseMatrix,
    v: DenseMatrix,
    w: DenseMatrix,
    t: DenseTensor3,
    p: DenseTensor3,
    caches: [ForwardCache; 3],
}

impl BaselineModel {
    pub fn new(cfg: &BaselineConfig) -> Result<Self> {
        if cfg.dims.contains(&0) || cfg.rank_x == 0 || cfg.rank_y == 0 || cfg.rank_z == 0 {
            return Err(CfError::arg("dims and ranks must be positive"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let bound = cfg.core_scale / (cfg.rank_z as f64).sqrt();
        let core = DenseTensor3::from_fn([cfg.rank_x, cfg.rank_y, cfg.rank_z], |_, _, _| {
            rng.gen_range(-bound..=bound)
        });
        let mut net = |out: usize, omega: f64| {
            SirenMlp::init(cfg.depth, cfg.width, out, omega, cfg.use_bias, rng.gen())
        };
        let net_x = net(cfg.rank_x, cfg.omega)?;
        let net_y = net(cfg.rank_y, cfg.omega)?;
        let net_z = net(cfg.rank_z, cfg.omega_z)?;
        Ok(Self {
            dims: cfg.dims,
            core,
            net_x,
            net_y,
            net_z,
            grid: cfg.grid,
        })
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn num_params(&self) -> usize {
        self.core.len() + self.net_x.num_params() + self.net_y.num_params() + self.net_z.num_params()
    }

    pub fn forward(&self) -> Result<BaselinePass> {
        let [n1, n2, n3] = self.dims;
        let (cx, u) = self.net_x.forward_cached(&self.grid.grid(n1));
        let (cy, v) = self.net_y.forward_cached(&self.grid.grid(n2));
        let (cz, w) = self.net_z.forward_cached(&self.grid.grid(n3));
        let t = mode_product(&self.core, &w, Mode::Three)?;
        let p = mode_product(&t, &v, Mode::Two)?;
        let image = mode_product(&p, &u, Mode::One)?;
        Ok(BaselinePass {
            image,
            u,
            v,
            w,
            t,
            p,
            caches: [cx, cy, cz],
        })
    }

    pub fn generate_image(&self) -> Result<DenseTensor3> {
        Ok(self.forward()?.image)
    }

    /// Flat gradient of `<upstream, image>` in [`Trainable::params_mut`] order.
    pub fn backward_image(&self, pass: &BaselinePass, g: &DenseTensor3) -> Result<Vec<f64>> {
        if g.dims() != self.dims {
            return Err(CfError::shape("upstream does not match image dims"));
        }
        let du = unfold_product(g, &pass.p, Mode::One)?;
        let dp = mode_product(g, &pass.u.transpose(), Mode::One)?;
        let dv = unfold_product(&dp, &pass.t, Mode::Two)?;
        let dt = mode_product(&dp, &pass.v.transpose(), Mode::Two)?;
        let dw = unfold_product(&dt, &self.core, Mode::Three)?;
        let dc = mode_product(&dt, &pass.w.transpose(), Mode::Three)?;
        let gx = self.net_x.backward_cached(&pass.caches[0], &du)?;
        let gy = self.net_y.backward_cached(&pass.caches[1], &dv)?;
        let gz = self.net_z.backward_cached(&pass.caches[2], &dw)?;
        let mut out = Vec::with_capacity(self.num_params());
        out.extend_from_slice(dc.data());
        for (net, gb) in [(&self.net_x, &gx), (&self.net_y, &gy), (&self.net_z, &gz)] {
            for s in gb.slices(net.uses_bias()) {
                out.extend_from_slice(s);
            }
        }
        Ok(out)
    }
}

impl Trainable for BaselineModel {
    type Pass = BaselinePass;

    fn forward_pass(&self) -> Result<BaselinePass> {
        self.forward()
    }

    fn pass_image(pass: &BaselinePass) -> &DenseTensor3 {
        &pass.image
    }

    fn pass_blocks(_: &BaselinePass) -> Option<&WaveletBlocks> {
        None
    }

    fn gradient(&self, pass: &BaselinePass, upstream: &Upstream) -> Result<Vec<f64>> {
        match upstream {
            Upstream::Image(g) => self.backward_image(pass, g),
            Upstream::Blocks(_) => Err(CfError::arg("the baseline has no wavelet blocks")),
        }
    }

    fn params_mut(&mut self) -> Vec<(&mut [f64], bool)> {
        let mut out = vec![(self.core.data_mut(), false)];
        out.extend(self.net_x.param_slices_mut());
        out.extend(self.net_y.param_slices_mut());
        out.extend(self.net_z.param_slices_mut());
        out
    }

    fn num_params(&self) -> usize {
        BaselineModel::num_params(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> BaselineConfig {
        BaselineConfig {
            dims: [6, 5, 3],
            rank_x: 3,
            rank_y: 4,
            rank_z: 2,
            width: 6,
            depth: 3,
            omega: 4.0,
            omega_z: 1.0,
            use_bias: true,
            grid: GridKind::Normalized,
            core_scale: 1.0,
            seed: 1,
        }
    }

    #[test]
    fn param_count_formula() {
        let c = cfg();
        let mut m = BaselineModel::new(&c).unwrap();
        assert_eq!(c.num_params(), m.num_params());
        let slices: usize = m.params_mut().iter().map(|(s, _)| s.len()).sum();
        assert_eq!(slices, c.num_params());
    }

    #[test]
    fn budget_matching_stays_below() {
        let c = cfg().match_budget(500).unwrap();
        assert!(c.num_params() <= 500);
        let mut bigger = c.clone();
        bigger.rank_x += 1;
        bigger.rank_y += 1;
        assert!(bigger.num_params() > 500);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut m = BaselineModel::new(&cfg()).unwrap();
        let up = DenseTensor3::from_fn([6, 5, 3], |i, j, k| ((i + 2 * j + 3 * k) as f64).sin());
        let pass = m.forward().unwrap();
        let g = m.backward_image(&pass, &up).unwrap();
        let h = 1e-6;
        let f = |m: &BaselineModel| m.generate_image().unwrap().dot(&up).unwrap();
        let mut flat = 0;
        let n = m.params_mut().len();
        let mut worst = 0.0f64;
        for s in 0..n {
            let len = m.params_mut()[s].0.len();
            for e in 0..len {
                let x = m.params_mut()[s].0[e];
                m.params_mut()[s].0[e] = x + h;
                let fp = f(&m);
                m.params_mut()[s].0[e] = x - h;
                let fm = f(&m);
                m.params_mut()[s].0[e] = x;
                let fd = (fp - fm) / (2.0 * h);
                worst = worst.max((fd - g[flat]).abs() / fd.abs().max(g[flat].abs()).max(1e-5));
                flat += 1;
            }
        }
        assert!(worst < 1e-4, "{worst}");
    }
}
