//! Cross-frequency Tucker representation.
//!
//! Four wavelet blocks share one core tensor `C` and one spectral net `W(z)`; each block has
//! its own pair of spatial nets `U_s(x)`, `V_s(y)`:
//!
//! ```text
//! B_s = mask_s(C) x3 W x2 V_s x1 U_s,      image = ihwt(B_1, B_2, B_3, B_4)
//! ```
//!
//! `mask_s` keeps the leading `r_x_s x r_y_s` spatial block of the core.

use std::io::{Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{CfError, Result};
use crate::siren::{ForwardCache, GradientBundle, SirenMlp};
use crate::tensor::{mode_product, unfold_product, DenseMatrix, DenseTensor3, Mode};
use crate::wavelet::{hwt, ihwt, WaveletBlocks};

/// How integer indices are turned into network inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridKind {
    /// Index `i in 0..n` mapped linearly onto `[-1, 1]`.
    Normalized,
    /// Raw one-based indices `1..=n`.
    UnitIndex,
}

impl GridKind {
    fn code(self) -> u8 {
        match self {
            GridKind::Normalized => 0,
            GridKind::UnitIndex => 1,
        }
    }

    fn from_code(c: u8) -> Result<Self> {
        match c {
            0 => Ok(GridKind::Normalized),
            1 => Ok(GridKind::UnitIndex),
            _ => Err(CfError::Decode(format!("unknown grid code {c}"))),
        }
    }

    pub fn grid(self, n: usize) -> Vec<f64> {
        match self {
            GridKind::Normalized => coordinate_grid(n),
            GridKind::UnitIndex => (1..=n).map(|i| i as f64).collect(),
        }
    }
}

/// `n` points spread evenly over `[-1, 1]`; a single point sits at 0.
pub fn coordinate_grid(n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..n)
            .map(|i| -1.0 + 2.0 * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// Spatial core size for a rank budget: `round(0.4 * lambda)`, at least the initial
/// per-branch share and at most `lambda - 3` so every other branch can keep rank 1.
pub fn default_core_dim(lambda: usize) -> usize {
    let share = lambda.div_ceil(4);
    let c = (0.4 * lambda as f64).round() as usize;
    c.max(share).min(lambda.saturating_sub(3)).max(1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CfModelConfig {
    /// Image dims `(n1, n2, n3)`; `n1`, `n2` even.
    pub dims: [usize; 3],
    pub core_x: usize,
    pub core_y: usize,
    pub rank_z: usize,
    pub width: usize,
    pub depth: usize,
    pub ranks: [[usize; 2]; 4],
    pub omegas: [f64; 4],
    pub omega_z: f64,
    pub use_bias: bool,
    pub grid: GridKind,
    /// Half-width of the uniform core initialisation before the `1/sqrt(r_z)` scaling.
    pub core_scale: f64,
    pub seed: u64,
}

impl CfModelConfig {
    /// Defaults for a budget `(lambda_x, lambda_y, mu)`: symmetric initial ranks and
    /// frequencies, core sized by [`default_core_dim`].
    pub fn with_budgets(
        dims: [usize; 3],
        lambda_x: usize,
        lambda_y: usize,
        mu: f64,
        rank_z: usize,
    ) -> Result<Self> {
        if lambda_x < 4 || lambda_y < 4 {
            return Err(CfError::arg("rank budgets must be at least 4"));
        }
        let rx = crate::evolve::apportion(&[1.0; 4], lambda_x, default_core_dim(lambda_x))?;
        let ry = crate::evolve::apportion(&[1.0; 4], lambda_y, default_core_dim(lambda_y))?;
        let mut ranks = [[0; 2]; 4];
        for s in 0..4 {
            ranks[s] = [rx[s], ry[s]];
        }
        Ok(Self {
            dims,
            core_x: default_core_dim(lambda_x),
            core_y: default_core_dim(lambda_y),
            rank_z,
            width: 64,
            depth: 2,
            ranks,
            omegas: [mu / 4.0; 4],
            omega_z: 1.0,
            use_bias: true,
            grid: GridKind::Normalized,
            core_scale: 0.1,
            seed: 0,
        })
    }

    fn validate(&self) -> Result<()> {
        let [n1, n2, n3] = self.dims;
        if n1 == 0 || n2 == 0 || n3 == 0 || n1 % 2 == 1 || n2 % 2 == 1 {
            return Err(CfError::dim(format!(
                "image dims {:?} must be positive with even spatial sizes",
                self.dims
            )));
        }
        if self.core_x == 0 || self.core_y == 0 || self.rank_z == 0 {
            return Err(CfError::arg("core dims must be positive"));
        }
        check_ranks(&self.ranks, self.core_x, self.core_y)?;
        for &w in self.omegas.iter().chain([&self.omega_z]) {
            if !(w > 0.0) || !w.is_finite() {
                return Err(CfError::arg(format!("omega {w} must be positive")));
            }
        }
        Ok(())
    }
}

fn check_ranks(ranks: &[[usize; 2]; 4], cx: usize, cy: usize) -> Result<()> {
    for (s, r) in ranks.iter().enumerate() {
        if r[0] == 0 || r[1] == 0 || r[0] > cx || r[1] > cy {
            return Err(CfError::dim(format!(
                "branch {} ranks {:?} outside 1..=({cx}, {cy})",
                s + 1,
                r
            )));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct CfModel {
    dims: [usize; 3],
    core: DenseTensor3,
    spatial_x: Vec<SirenMlp>,
    spatial_y: Vec<SirenMlp>,
    spectral: SirenMlp,
    ranks: [[usize; 2]; 4],
    grid: GridKind,
}

/// Everything the backward pass needs from a forward pass.
#[derive(Debug, Clone)]
pub struct CfPass {
    pub blocks: WaveletBlocks,
    pub image: DenseTensor3,
    shared: DenseTensor3,
    w: DenseMatrix,
    w_cache: ForwardCache,
    u: Vec<DenseMatrix>,
    v: Vec<DenseMatrix>,
    u_cache: Vec<ForwardCache>,
    v_cache: Vec<ForwardCache>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CfGradients {
    pub core: DenseTensor3,
    pub spatial_x: Vec<GradientBundle>,
    pub spatial_y: Vec<GradientBundle>,
    pub spectral: GradientBundle,
}

impl CfModel {
    pub fn new(cfg: &CfModelConfig) -> Result<Self> {
        cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let bound = cfg.core_scale / (cfg.rank_z as f64).sqrt();
        let core = DenseTensor3::from_fn([cfg.core_x, cfg.core_y, cfg.rank_z], |_, _, _| {
            rng.gen_range(-bound..=bound)
        });
        let mut net = |out: usize, omega: f64| {
            SirenMlp::init(cfg.depth, cfg.width, out, omega, cfg.use_bias, rng.gen())
        };
        let mut spatial_x = Vec::with_capacity(4);
        let mut spatial_y = Vec::with_capacity(4);
        for s in 0..4 {
            spatial_x.push(net(cfg.core_x, cfg.omegas[s])?);
            spatial_y.push(net(cfg.core_y, cfg.omegas[s])?);
        }
        let spectral = net(cfg.rank_z, cfg.omega_z)?;
        Ok(Self {
            dims: cfg.dims,
            core,
            spatial_x,
            spatial_y,
            spectral,
            ranks: cfg.ranks,
            grid: cfg.grid,
        })
    }

    /// Assembles a model from explicit parts.
    pub fn from_parts(
        dims: [usize; 3],
        core: DenseTensor3,
        spatial_x: Vec<SirenMlp>,
        spatial_y: Vec<SirenMlp>,
        spectral: SirenMlp,
        ranks: [[usize; 2]; 4],
        grid: GridKind,
    ) -> Result<Self> {
        let [cx, cy, rz] = core.dims();
        if dims[0] % 2 == 1 || dims[1] % 2 == 1 || dims.contains(&0) {
            return Err(CfError::dim(format!("bad image dims {dims:?}")));
        }
        if spatial_x.len() != 4 || spatial_y.len() != 4 {
            return Err(CfError::arg("need four spatial nets per axis"));
        }
        if spatial_x.iter().any(|n| n.out_dim() != cx)
            || spatial_y.iter().any(|n| n.out_dim() != cy)
            || spectral.out_dim() != rz
        {
            return Err(CfError::shape("network outputs do not match core dims"));
        }
        for s in 0..4 {
            if spatial_x[s].omega() != spatial_y[s].omega() {
                return Err(CfError::arg("x and y nets of a branch must share omega"));
            }
        }
        check_ranks(&ranks, cx, cy)?;
        Ok(Self {
            dims,
            core,
            spatial_x,
            spatial_y,
            spectral,
            ranks,
            grid,
        })
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn block_dims(&self) -> [usize; 3] {
        [self.dims[0] / 2, self.dims[1] / 2, self.dims[2]]
    }

    pub fn core(&self) -> &DenseTensor3 {
        &self.core
    }

    pub fn core_mut(&mut self) -> &mut DenseTensor3 {
        &mut self.core
    }

    pub fn spatial_x(&self) -> &[SirenMlp] {
        &self.spatial_x
    }

    pub fn spatial_y(&self) -> &[SirenMlp] {
        &self.spatial_y
    }

    pub fn spatial_x_mut(&mut self) -> &mut [SirenMlp] {
        &mut self.spatial_x
    }

    pub fn spatial_y_mut(&mut self) -> &mut [SirenMlp] {
        &mut self.spatial_y
    }

    pub fn spectral(&self) -> &SirenMlp {
        &self.spectral
    }

    pub fn spectral_mut(&mut self) -> &mut SirenMlp {
        &mut self.spectral
    }

    pub fn ranks(&self) -> [[usize; 2]; 4] {
        self.ranks
    }

    pub fn grid(&self) -> GridKind {
        self.grid
    }

    pub fn omegas(&self) -> [f64; 4] {
        std::array::from_fn(|s| self.spatial_x[s].omega())
    }

    pub fn omega_z(&self) -> f64 {
        self.spectral.omega()
    }

    pub fn core_dims(&self) -> [usize; 3] {
        self.core.dims()
    }

    pub fn set_ranks(&mut self, ranks: [[usize; 2]; 4]) -> Result<()> {
        let [cx, cy, _] = self.core.dims();
        check_ranks(&ranks, cx, cy)?;
        self.ranks = ranks;
        Ok(())
    }

    pub fn set_omegas(&mut self, omegas: [f64; 4]) -> Result<()> {
        for (s, &w) in omegas.iter().enumerate() {
            self.spatial_x[s].set_omega(w)?;
            self.spatial_y[s].set_omega(w)?;
        }
        Ok(())
    }

    pub fn num_params(&self) -> usize {
        self.core.len()
            + self
                .spatial_x
                .iter()
                .chain(&self.spatial_y)
                .chain([&self.spectral])
                .map(SirenMlp::num_params)
                .sum::<usize>()
    }

    pub fn forward(&self) -> Result<CfPass> {
        let [h1, h2, n3] = self.block_dims();
        let (w_cache, w) = self.spectral.forward_cached(&self.grid.grid(n3));
        let shared = mode_product(&self.core, &w, Mode::Three)?;
        let gx = self.grid.grid(h1);
        let gy = self.grid.grid(h2);
        let mut u = Vec::with_capacity(4);
        let mut v = Vec::with_capacity(4);
        let mut u_cache = Vec::with_capacity(4);
        let mut v_cache = Vec::with_capacity(4);
        let mut blocks = Vec::with_capacity(4);
        for s in 0..4 {
            let (cu, us) = self.spatial_x[s].forward_cached(&gx);
            let (cv, vs) = self.spatial_y[s].forward_cached(&gy);
            blocks.push(branch_forward(&shared, &us, &vs, self.ranks[s])?);
            u.push(us);
            v.push(vs);
            u_cache.push(cu);
            v_cache.push(cv);
        }
        let blocks = WaveletBlocks::new(blocks.try_into().expect("four blocks"))?;
        let image = ihwt(&blocks)?;
        Ok(CfPass {
            blocks,
            image,
            shared,
            w,
            w_cache,
            u,
            v,
            u_cache,
            v_cache,
        })
    }

    pub fn generate_coefficients(&self) -> Result<WaveletBlocks> {
        Ok(self.forward()?.blocks)
    }

    pub fn generate_image(&self) -> Result<DenseTensor3> {
        Ok(self.forward()?.image)
    }

    /// Gradients of `<upstream, image>` with respect to every parameter.
    pub fn backward_image(&self, pass: &CfPass, upstream: &DenseTensor3) -> Result<CfGradients> {
        if upstream.dims() != self.dims {
            return Err(CfError::shape(format!(
                "upstream dims {:?}, image dims {:?}",
                upstream.dims(),
                self.dims
            )));
        }
        // ihwt is orthogonal, so its adjoint is hwt
        self.backward_blocks(pass, &hwt(upstream)?)
    }

    /// Gradients of `sum_s <upstream_s, B_s>` with respect to every parameter.
    pub fn backward_blocks(&self, pass: &CfPass, upstream: &WaveletBlocks) -> Result<CfGradients> {
        if upstream.block_dims() != self.block_dims() {
            return Err(CfError::shape("upstream blocks do not match model blocks"));
        }
        let [cx, cy, _] = self.core.dims();
        let mut d_shared = DenseTensor3::zeros(pass.shared.dims());
        let mut spatial_x = Vec::with_capacity(4);
        let mut spatial_y = Vec::with_capacity(4);
        for s in 0..4 {
            let [rx, ry] = self.ranks[s];
            let g = &upstream.blocks[s];
            let u = pass.u[s].leading_columns(rx);
            let v = pass.v[s].leading_columns(ry);
            let t = pass.shared.leading_block([rx, ry, pass.shared.dims()[2]])?;
            let p = mode_product(&t, &v, Mode::Two)?;
            let du = unfold_product(g, &p, Mode::One)?;
            let dp = mode_product(g, &u.transpose(), Mode::One)?;
            let dv = unfold_product(&dp, &t, Mode::Two)?;
            let dt = mode_product(&dp, &v.transpose(), Mode::Two)?;
            d_shared.add_leading_block(&dt)?;
            spatial_x.push(
                self.spatial_x[s].backward_cached(&pass.u_cache[s], &du.pad_columns(cx))?,
            );
            spatial_y.push(
                self.spatial_y[s].backward_cached(&pass.v_cache[s], &dv.pad_columns(cy))?,
            );
        }
        let dw = unfold_product(&d_shared, &self.core, Mode::Three)?;
        let core = mode_product(&d_shared, &pass.w.transpose(), Mode::Three)?;
        let spectral = self.spectral.backward_cached(&pass.w_cache, &dw)?;
        Ok(CfGradients {
            core,
            spatial_x,
            spatial_y,
            spectral,
        })
    }

    /// Parameter slices in a fixed order (core, `U_1..U_4`, `V_1..V_4`, spectral) with a
    /// flag telling whether weight decay applies.
    pub fn param_slices_mut(&mut self) -> Vec<(&mut [f64], bool)> {
        let mut out = vec![(self.core.data_mut(), false)];
        for net in self
            .spatial_x
            .iter_mut()
            .chain(self.spatial_y.iter_mut())
            .chain(std::iter::once(&mut self.spectral))
        {
            out.extend(net.param_slices_mut());
        }
        out
    }

    /// Gradients flattened in [`CfModel::param_slices_mut`] order.
    pub fn flatten_gradients(&self, g: &CfGradients) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        out.extend_from_slice(g.core.data());
        for (net, gb) in self
            .spatial_x
            .iter()
            .chain(&self.spatial_y)
            .chain([&self.spectral])
            .zip(g.spatial_x.iter().chain(&g.spatial_y).chain([&g.spectral]))
        {
            for s in gb.slices(net.uses_bias()) {
                out.extend_from_slice(s);
            }
        }
        out
    }

    pub fn save_checkpoint(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_checkpoint(&mut f)?;
        f.flush()?;
        Ok(())
    }

    pub fn load_checkpoint(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path)?;
        Self::read_checkpoint(&mut &bytes[..])
    }

    /// Layout (little endian): `"CFNR"`, version `u32`, image dims `3 x u32`, core dims
    /// `3 x u32`, width `u32`, depth `u32`, bias flag `u8`, grid code `u8`, ranks `8 x u32`,
    /// `omega_1..omega_4, omega_z` as `f64`, then the core followed by every net's weights
    /// and biases layer by layer in the order `U_1..U_4, V_1..V_4, W`.
    pub fn write_checkpoint(&self, w: &mut impl Write) -> Result<()> {
        w.write_all(CHECKPOINT_MAGIC)?;
        put_u32(w, CHECKPOINT_VERSION)?;
        for d in self.dims.iter().chain(&self.core.dims()) {
            put_u32(w, *d)?;
        }
        put_u32(w, self.spectral.width())?;
        put_u32(w, self.spectral.depth())?;
        w.write_all(&[u8::from(self.spectral.uses_bias()), self.grid.code()])?;
        for r in self.ranks.iter().flatten() {
            put_u32(w, *r)?;
        }
        for om in self.omegas().iter().chain([&self.omega_z()]) {
            w.write_all(&om.to_le_bytes())?;
        }
        put_f64s(w, self.core.data())?;
        for net in self.all_nets() {
            for a in net.arrays() {
                put_f64s(w, a)?;
            }
        }
        Ok(())
    }

    pub fn read_checkpoint(r: &mut impl Read) -> Result<Self> {
        let mut magic = [0u8; 4];
        read_exact(r, &mut magic)?;
        if &magic != CHECKPOINT_MAGIC {
            return Err(CfError::Decode("not a model checkpoint".into()));
        }
        let version = get_u32(r)?;
        if version != CHECKPOINT_VERSION {
            return Err(CfError::Decode(format!("unsupported checkpoint version {version}")));
        }
        let mut d = [0usize; 6];
        for x in &mut d {
            *x = get_u32(r)?;
        }
        let dims = [d[0], d[1], d[2]];
        let core_dims = [d[3], d[4], d[5]];
        let width = get_u32(r)?;
        let depth = get_u32(r)?;
        let mut flags = [0u8; 2];
        read_exact(r, &mut flags)?;
        let grid = GridKind::from_code(flags[1])?;
        let mut ranks = [[0usize; 2]; 4];
        for x in ranks.iter_mut().flatten() {
            *x = get_u32(r)?;
        }
        let mut omegas = [0.0; 5];
        for x in &mut omegas {
            *x = get_f64(r)?;
        }
        if depth < 2 || width == 0 || core_dims.contains(&0) {
            return Err(CfError::Decode("invalid network shape in header".into()));
        }
        let core = DenseTensor3::from_vec(core_dims, get_f64s(r, core_dims.iter().product())?)?;
        let mut read_net = |out: usize, omega: f64| -> Result<SirenMlp> {
            let mut weights = Vec::with_capacity(depth);
            let mut biases = Vec::with_capacity(depth);
            for q in 0..depth {
                let fan_in = if q == 0 { 1 } else { width };
                let fan_out = if q + 1 == depth { out } else { width };
                weights.push(DenseMatrix::from_col_major(
                    fan_out,
                    fan_in,
                    get_f64s(r, fan_out * fan_in)?,
                )?);
                biases.push(get_f64s(r, fan_out)?);
            }
            SirenMlp::from_layers(weights, biases, omega, flags[0] != 0)
                .map_err(|e| CfError::Decode(e.to_string()))
        };
        let mut sx = Vec::with_capacity(4);
        let mut sy = Vec::with_capacity(4);
        for om in &omegas[..4] {
            sx.push(read_net(core_dims[0], *om)?);
        }
        for om in &omegas[..4] {
            sy.push(read_net(core_dims[1], *om)?);
        }
        let spectral = read_net(core_dims[2], omegas[4])?;
        Self::from_parts(dims, core, sx, sy, spectral, ranks, grid)
            .map_err(|e| CfError::Decode(e.to_string()))
    }

    fn all_nets(&self) -> impl Iterator<Item = &SirenMlp> {
        self.spatial_x
            .iter()
            .chain(&self.spatial_y)
            .chain(std::iter::once(&self.spectral))
    }
}

impl CfGradients {
    pub fn is_finite(&self) -> bool {
        self.core.is_finite()
            && self
                .spatial_x
                .iter()
                .chain(&self.spatial_y)
                .chain([&self.spectral])
                .all(GradientBundle::is_finite)
    }
}

/// `shared[:rx, :ry, :] x2 V[:, :ry] x1 U[:, :rx]`.
fn branch_forward(
    shared: &DenseTensor3,
    u: &DenseMatrix,
    v: &DenseMatrix,
    ranks: [usize; 2],
) -> Result<DenseTensor3> {
    let [rx, ry] = ranks;
    let t = shared.leading_block([rx, ry, shared.dims()[2]])?;
    let p = mode_product(&t, &v.leading_columns(ry), Mode::Two)?;
    mode_product(&p, &u.leading_columns(rx), Mode::One)
}

/// Zeroes every core entry outside the leading `r_x x r_y` spatial block.
pub fn apply_rank_mask(core: &DenseTensor3, ranks: [usize; 2]) -> Result<DenseTensor3> {
    let [cx, cy, _] = core.dims();
    if ranks[0] > cx || ranks[1] > cy {
        return Err(CfError::dim(format!(
            "ranks {:?} exceed core spatial dims ({cx}, {cy})",
            ranks
        )));
    }
    Ok(DenseTensor3::from_fn(core.dims(), |i, j, k| {
        if i < ranks[0] && j < ranks[1] {
            core.get(i, j, k)
        } else {
            0.0
        }
    }))
}

/// Operation count of one image synthesis:
/// `4 m^2 d (n1/2 + n2/2 + n3) + (r + 1) n1 n2 n3`.
pub fn count_flops(dims: [usize; 3], width: usize, depth: usize, r: usize) -> u128 {
    let [n1, n2, n3] = dims.map(|x| x as u128);
    let (m, d, r) = (width as u128, depth as u128, r as u128);
    4 * m * m * d * (n1 / 2 + n2 / 2 + n3) + (r + 1) * n1 * n2 * n3
}

/// Operation count of a coordinate MLP queried at every entry: `m^2 d n1 n2 n3`.
pub fn count_flops_dense_mlp(dims: [usize; 3], width: usize, depth: usize) -> u128 {
    let [n1, n2, n3] = dims.map(|x| x as u128);
    (width as u128).pow(2) * depth as u128 * n1 * n2 * n3
}

const CHECKPOINT_MAGIC: &[u8; 4] = b"CFNR";
const CHECKPOINT_VERSION: usize = 1;

fn put_u32(w: &mut impl Write, v: usize) -> Result<()> {
    let v = u32::try_from(v).map_err(|_| CfError::arg(format!("{v} does not fit in u32")))?;
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn put_f64s(w: &mut impl Write, v: &[f64]) -> Result<()> {
    for x in v {
        w.write_all(&x.to_le_bytes())?;
    }
    Ok(())
}

fn read_exact(r: &mut impl Read, buf: &mut [u8]) -> Result<()> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => CfError::Decode("truncated checkpoint".into()),
        _ => CfError::Io(e),
    })
}

fn get_u32(r: &mut impl Read) -> Result<usize> {
    let mut b = [0u8; 4];
    read_exact(r, &mut b)?;
    Ok(u32::from_le_bytes(b) as usize)
}

fn get_f64(r: &mut impl Read) -> Result<f64> {
    let mut b = [0u8; 8];
    read_exact(r, &mut b)?;
    Ok(f64::from_le_bytes(b))
}

fn get_f64s(r: &mut impl Read, n: usize) -> Result<Vec<f64>> {
    (0..n).map(|_| get_f64(r)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::numerical_tucker_rank;

    fn small_config(seed: u64) -> CfModelConfig {
        CfModelConfig {
            dims: [8, 6, 3],
            core_x: 4,
            core_y: 3,
            rank_z: 2,
            width: 8,
            depth: 2,
            ranks: [[4, 3], [2, 2], [3, 1], [1, 3]],
            omegas: [3.0, 4.0, 5.0, 6.0],
            omega_z: 2.0,
            use_bias: true,
            grid: GridKind::Normalized,
            core_scale: 1.0,
            seed,
        }
    }

    #[test]
    fn grid_values() {
        assert_eq!(coordinate_grid(2), vec![-1.0, 1.0]);
        assert_eq!(coordinate_grid(3), vec![-1.0, 0.0, 1.0]);
        assert_eq!(coordinate_grid(1), vec![0.0]);
        let g = coordinate_grid(5);
        for i in 0..4 {
            assert!(g[i] < g[i + 1]);
        }
        for i in 0..5 {
            assert!((g[i] + g[4 - i]).abs() < 1e-15);
        }
        assert_eq!(GridKind::UnitIndex.grid(3), vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn core_dim_defaults() {
        assert_eq!(default_core_dim(512), 205);
        assert_eq!(default_core_dim(256), 102);
        assert_eq!(default_core_dim(4), 1);
        assert_eq!(default_core_dim(8), 3);
    }

    #[test]
    fn zero_core_zero_blocks() {
        let mut m = CfModel::new(&small_config(1)).unwrap();
        m.core_mut().data_mut().fill(0.0);
        let pass = m.forward().unwrap();
        assert!(pass.blocks.blocks.iter().all(|b| b.max_abs() == 0.0));
        assert_eq!(pass.image.max_abs(), 0.0);
    }

    fn tucker_oracle(m: &CfModel, s: usize, masked: bool) -> DenseTensor3 {
        let [h1, h2, n3] = m.block_dims();
        let core = if masked {
            apply_rank_mask(m.core(), m.ranks()[s]).unwrap()
        } else {
            m.core().clone()
        };
        let u = m.spatial_x()[s].forward_batch(&coordinate_grid(h1));
        let v = m.spatial_y()[s].forward_batch(&coordinate_grid(h2));
        let w = m.spectral().forward_batch(&coordinate_grid(n3));
        let [cx, cy, rz] = core.dims();
        DenseTensor3::from_fn([h1, h2, n3], |i, j, k| {
            let mut acc = 0.0;
            for a in 0..cx {
                for b in 0..cy {
                    for c in 0..rz {
                        acc += core.get(a, b, c) * u.get(i, a) * v.get(j, b) * w.get(k, c);
                    }
                }
            }
            acc
        })
    }

    #[test]
    fn full_ranks_match_unmasked_tucker() {
        let mut cfg = small_config(2);
        cfg.ranks = [[4, 3]; 4];
        let m = CfModel::new(&cfg).unwrap();
        let blocks = m.generate_coefficients().unwrap();
        for s in 0..4 {
            let oracle = tucker_oracle(&m, s, false);
            let err = blocks.blocks[s].sub(&oracle).unwrap().max_abs();
            assert!(err < 1e-13, "branch {s}: {err}");
        }
    }

    #[test]
    fn cached_shared_product_matches_mask_first() {
        let m = CfModel::new(&small_config(3)).unwrap();
        let blocks = m.generate_coefficients().unwrap();
        for s in 0..4 {
            let oracle = tucker_oracle(&m, s, true);
            assert!(blocks.blocks[s].sub(&oracle).unwrap().max_abs() < 1e-13);
        }
    }

    #[test]
    fn rank_one_branch_has_rank_one_block() {
        let mut cfg = small_config(4);
        cfg.ranks[0] = [1, 1];
        let m = CfModel::new(&cfg).unwrap();
        let b = m.generate_coefficients().unwrap();
        let r = numerical_tucker_rank(&b.blocks[0], 1e-8).unwrap();
        assert!(r[0] <= 1 && r[1] <= 1 && r[2] <= cfg.rank_z);
    }

    #[test]
    fn energy_and_reconstruction_identities() {
        let m = CfModel::new(&small_config(5)).unwrap();
        let pass = m.forward().unwrap();
        let e_img = pass.image.frobenius_norm().powi(2);
        assert!((e_img - pass.blocks.energy()).abs() < 1e-12 * e_img.max(1.0));
        let back = hwt(&pass.image).unwrap();
        for s in 0..4 {
            assert!(back.blocks[s].sub(&pass.blocks.blocks[s]).unwrap().max_abs() < 1e-12);
        }
    }

    #[test]
    fn mask_examples() {
        let core = DenseTensor3::from_fn([3, 4, 2], |i, j, k| 1.0 + (i + 3 * j + 12 * k) as f64);
        assert_eq!(apply_rank_mask(&core, [3, 4]).unwrap(), core);
        let m = apply_rank_mask(&core, [1, 1]).unwrap();
        for k in 0..2 {
            for j in 0..4 {
                for i in 0..3 {
                    let expect = if i == 0 && j == 0 { core.get(0, 0, k) } else { 0.0 };
                    assert_eq!(m.get(i, j, k), expect);
                }
            }
        }
        assert!(apply_rank_mask(&core, [4, 1]).is_err());
    }

    #[test]
    fn flop_examples() {
        assert_eq!(count_flops([2, 2, 1], 1, 1, 1), 20);
        assert!(count_flops([8, 8, 4], 4, 2, 3) > count_flops([8, 8, 2], 4, 2, 3));
        let cf = count_flops([256, 256, 31], 256, 2, 31);
        let dense = count_flops_dense_mlp([256, 256, 31], 256, 2);
        assert!(dense > 10 * cf);
    }

    #[test]
    fn zero_upstream_zero_gradients() {
        let m = CfModel::new(&small_config(6)).unwrap();
        let pass = m.forward().unwrap();
        let g = m.backward_image(&pass, &DenseTensor3::zeros(m.dims())).unwrap();
        assert!(m.flatten_gradients(&g).iter().all(|&x| x == 0.0));
    }

    #[test]
    fn masked_core_entries_get_zero_gradient() {
        let mut cfg = small_config(7);
        cfg.ranks = [[2, 2], [1, 2], [2, 1], [1, 1]];
        let m = CfModel::new(&cfg).unwrap();
        let pass = m.forward().unwrap();
        let up = DenseTensor3::from_fn(m.dims(), |i, j, k| ((i * 7 + j * 3 + k) % 5) as f64 - 2.0);
        let g = m.backward_image(&pass, &up).unwrap();
        let [cx, cy, rz] = m.core_dims();
        for k in 0..rz {
            for j in 0..cy {
                for i in 0..cx {
                    if i >= 2 || j >= 2 {
                        assert_eq!(g.core.get(i, j, k), 0.0);
                    }
                }
            }
        }
        assert!(g.core.max_abs() > 0.0);
    }

    #[test]
    fn spatial_nets_touch_only_their_branch() {
        let m = CfModel::new(&small_config(8)).unwrap();
        let before = m.generate_coefficients().unwrap();
        let mut p = m.clone();
        p.spatial_x_mut()[1].weights_mut()[0].data_mut()[0] += 0.1;
        let after = p.generate_coefficients().unwrap();
        for s in 0..4 {
            if s == 1 {
                assert_ne!(before.blocks[s], after.blocks[s]);
            } else {
                assert_eq!(before.blocks[s], after.blocks[s]);
            }
        }
        let mut q = m.clone();
        q.spectral_mut().weights_mut()[0].data_mut()[0] += 0.1;
        let after = q.generate_coefficients().unwrap();
        for s in 0..4 {
            assert_ne!(before.blocks[s], after.blocks[s]);
        }
    }

    #[test]
    fn checkpoint_round_trip_is_bit_exact() {
        let mut cfg = small_config(9);
        cfg.grid = GridKind::UnitIndex;
        let m = CfModel::new(&cfg).unwrap();
        let mut buf = Vec::new();
        m.write_checkpoint(&mut buf).unwrap();
        let back = CfModel::read_checkpoint(&mut &buf[..]).unwrap();
        assert_eq!(back, m);
        let mut again = Vec::new();
        back.write_checkpoint(&mut again).unwrap();
        assert_eq!(buf, again);

        assert!(matches!(
            CfModel::read_checkpoint(&mut &buf[..buf.len() - 1]),
            Err(CfError::Decode(_))
        ));
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(CfModel::read_checkpoint(&mut &bad[..]), Err(CfError::Decode(_))));
    }

    #[test]
    fn config_validation() {
        let mut cfg = small_config(0);
        cfg.dims = [7, 6, 3];
        assert!(CfModel::new(&cfg).is_err());
        let mut cfg = small_config(0);
        cfg.ranks[2] = [5, 1];
        assert!(CfModel::new(&cfg).is_err());
        let mut cfg = small_config(0);
        cfg.omegas[0] = 0.0;
        assert!(CfModel::new(&cfg).is_err());
    }
}
