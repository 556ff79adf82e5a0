//! Task drivers: regression, inpainting, and mixed-noise removal by plug-and-play ADMM.

use crate::baseline::{BaselineConfig, BaselineModel};
use crate::error::{CfError, Result};
use crate::evolve::{EvolutionConfig, EvolutionEvent, EvolutionState};
use crate::model::{default_core_dim, CfModel, CfModelConfig, GridKind};
use crate::optim::{
    AdamConfig, Evaluation, HistoryRecord, Objective, SquaredLoss, Trainable, Trainer, Upstream,
    WaveletSquaredLoss,
};
use crate::tensor::DenseTensor3;
use crate::wavelet::{hwt, ihwt, WaveletBlocks};

/// Model and optimisation settings shared by every task.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskConfig {
    /// Rank budgets; `None` means twice the spatial size.
    pub lambda_x: Option<usize>,
    pub lambda_y: Option<usize>,
    pub mu: f64,
    pub omega_z: f64,
    /// Spectral rank; `None` means the task default.
    pub rank_z: Option<usize>,
    pub k: f64,
    pub cadence: usize,
    pub iters: usize,
    pub width: usize,
    pub depth: usize,
    pub seed: u64,
    pub grid: GridKind,
    pub core_scale: f64,
    pub use_bias: bool,
    pub evolve_ranks: bool,
    pub evolve_omegas: bool,
    pub adam: AdamConfig,
    pub history_every: usize,
}

impl Default for TaskConfig {
    fn default() -> Self {
        Self {
            lambda_x: None,
            lambda_y: None,
            mu: 20.0,
            omega_z: 1.0,
            rank_z: None,
            k: 3.0,
            cadence: 500,
            iters: 5000,
            width: 256,
            depth: 2,
            seed: 0,
            grid: GridKind::UnitIndex,
            core_scale: 0.1,
            use_bias: true,
            evolve_ranks: true,
            evolve_omegas: true,
            adam: AdamConfig::default(),
            history_every: 50,
        }
    }
}

impl TaskConfig {
    /// Builds the model and its evolution state for data of size `dims`.
    pub fn build(&self, dims: [usize; 3], default_rank_z: usize) -> Result<(CfModel, EvolutionState)> {
        let lx = self.lambda_x.unwrap_or(2 * dims[0]);
        let ly = self.lambda_y.unwrap_or(2 * dims[1]);
        let rz = self.rank_z.unwrap_or(default_rank_z).max(1);
        let mut mc = CfModelConfig::with_budgets(dims, lx, ly, self.mu, rz)?;
        mc.width = self.width;
        mc.depth = self.depth;
        mc.omega_z = self.omega_z;
        mc.use_bias = self.use_bias;
        mc.grid = self.grid;
        mc.core_scale = self.core_scale;
        mc.seed = self.seed;
        let model = CfModel::new(&mc)?;
        let evo = EvolutionState::new(EvolutionConfig {
            k: self.k,
            cadence: self.cadence,
            cap_x: default_core_dim(lx),
            cap_y: default_core_dim(ly),
            evolve_ranks: self.evolve_ranks,
            evolve_omegas: self.evolve_omegas,
            ..EvolutionConfig::new(lx, ly, self.mu, self.depth)
        })?;
        Ok((model, evo))
    }

    fn trainer(&self, total: usize, evo: Option<EvolutionState>) -> Trainer {
        let mut t = Trainer::new(self.adam.clone(), total, evo);
        t.history_every = self.history_every.max(1);
        t
    }
}

/// Observed-entry indicator (`true` = observed), laid out like the data.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationMask {
    dims: [usize; 3],
    observed: Vec<bool>,
}

impl ObservationMask {
    pub fn new(dims: [usize; 3], observed: Vec<bool>) -> Result<Self> {
        if observed.len() != dims.iter().product::<usize>() {
            return Err(CfError::shape("mask length does not match dims"));
        }
        if !observed.iter().any(|&b| b) {
            return Err(CfError::arg("mask has no observed entries"));
        }
        Ok(Self { dims, observed })
    }

    pub fn full(dims: [usize; 3]) -> Self {
        Self {
            dims,
            observed: vec![true; dims.iter().product()],
        }
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn observed(&self) -> &[bool] {
        &self.observed
    }

    pub fn fraction(&self) -> f64 {
        self.observed.iter().filter(|&&b| b).count() as f64 / self.observed.len() as f64
    }

    /// Observed entries of `data`, zeros elsewhere.
    pub fn project(&self, data: &DenseTensor3) -> Result<DenseTensor3> {
        if data.dims() != self.dims {
            return Err(CfError::shape("mask and data dims differ"));
        }
        let mut out = data.clone();
        for (v, &o) in out.data_mut().iter_mut().zip(&self.observed) {
            if !o {
                *v = 0.0;
            }
        }
        Ok(out)
    }

    /// `observed` entries from `data`, the rest from `fill`.
    pub fn compose(&self, data: &DenseTensor3, fill: &DenseTensor3) -> Result<DenseTensor3> {
        data.check_same(fill)?;
        if data.dims() != self.dims {
            return Err(CfError::shape("mask and data dims differ"));
        }
        let mut out = fill.clone();
        for ((o, d), &m) in out.data_mut().iter_mut().zip(data.data()).zip(&self.observed) {
            if m {
                *o = *d;
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub model: CfModel,
    pub recovered: DenseTensor3,
    pub history: Vec<HistoryRecord>,
    pub events: Vec<EvolutionEvent>,
    pub final_loss: f64,
}

/// Fits the generated image to `data` under squared loss.
pub fn fit_regression(
    data: &DenseTensor3,
    cfg: &TaskConfig,
    reference: Option<&DenseTensor3>,
) -> Result<FitResult> {
    let (mut model, evo) = cfg.build(data.dims(), data.dims()[2])?;
    let mut trainer = cfg.trainer(cfg.iters, Some(evo));
    let mut loss = SquaredLoss::new(data.clone());
    let final_loss = trainer.run(&mut model, &mut loss, cfg.iters, reference)?;
    let recovered = model.generate_image()?;
    Ok(FitResult {
        model,
        recovered,
        history: trainer.history,
        events: trainer.events,
        final_loss,
    })
}

/// Fits on observed entries only; the output keeps the observations and fills the rest
/// from the model.
pub fn fit_inpainting(
    data: &DenseTensor3,
    mask: &ObservationMask,
    cfg: &TaskConfig,
    reference: Option<&DenseTensor3>,
) -> Result<FitResult> {
    if mask.dims() != data.dims() {
        return Err(CfError::shape("mask and data dims differ"));
    }
    let (mut model, evo) = cfg.build(data.dims(), data.dims()[2])?;
    let mut trainer = cfg.trainer(cfg.iters, Some(evo));
    let mut loss = SquaredLoss::masked(data.clone(), mask.observed().to_vec())?;
    let final_loss = trainer.run(&mut model, &mut loss, cfg.iters, reference)?;
    let recovered = mask.compose(data, &model.generate_image()?)?;
    Ok(FitResult {
        model,
        recovered,
        history: trainer.history,
        events: trainer.events,
        final_loss,
    })
}

/// Wavelet-domain variant: the four blocks are fitted to `hwt(data)` with one squared loss
/// per block, and the output is their inverse transform.
pub fn fit_conventional(
    data: &DenseTensor3,
    cfg: &TaskConfig,
    reference: Option<&DenseTensor3>,
) -> Result<FitResult> {
    let (mut model, evo) = cfg.build(data.dims(), data.dims()[2])?;
    let mut trainer = cfg.trainer(cfg.iters, Some(evo));
    let mut loss = WaveletSquaredLoss { target: hwt(data)? };
    let final_loss = trainer.run(&mut model, &mut loss, cfg.iters, reference)?;
    let recovered = ihwt(&model.generate_coefficients()?)?;
    Ok(FitResult {
        model,
        recovered,
        history: trainer.history,
        events: trainer.events,
        final_loss,
    })
}

#[derive(Debug, Clone)]
pub struct BaselineResult {
    pub model: BaselineModel,
    pub recovered: DenseTensor3,
    pub history: Vec<HistoryRecord>,
    pub final_loss: f64,
}

/// Single-frequency Tucker INR with at most `budget` parameters, fitted under squared loss
/// (restricted to `mask` when given). Its frequency is `mu / 4`.
pub fn fit_baseline(
    data: &DenseTensor3,
    mask: Option<&ObservationMask>,
    cfg: &TaskConfig,
    budget: usize,
    reference: Option<&DenseTensor3>,
) -> Result<BaselineResult> {
    let bc = BaselineConfig {
        dims: data.dims(),
        rank_x: 1,
        rank_y: 1,
        rank_z: cfg.rank_z.unwrap_or(data.dims()[2]).max(1),
        width: cfg.width,
        depth: cfg.depth,
        omega: cfg.mu / 4.0,
        omega_z: cfg.omega_z,
        use_bias: cfg.use_bias,
        grid: cfg.grid,
        core_scale: cfg.core_scale,
        seed: cfg.seed,
    }
    .match_budget(budget)?;
    let mut model = BaselineModel::new(&bc)?;
    let mut trainer = cfg.trainer(cfg.iters, None);
    let mut loss = match mask {
        Some(m) => SquaredLoss::masked(data.clone(), m.observed().to_vec())?,
        None => SquaredLoss::new(data.clone()),
    };
    let final_loss = trainer.run(&mut model, &mut loss, cfg.iters, reference)?;
    let mut recovered = model.generate_image()?;
    if let Some(m) = mask {
        recovered = m.compose(data, &recovered)?;
    }
    Ok(BaselineResult {
        model,
        recovered,
        history: trainer.history,
        final_loss,
    })
}

/// `sign(x) * max(|x| - tau, 0)` element-wise.
pub fn soft_threshold(t: &DenseTensor3, tau: f64) -> Result<DenseTensor3> {
    if !(tau >= 0.0) {
        return Err(CfError::arg("threshold must be nonnegative"));
    }
    Ok(t.map(|x| x.signum() * (x.abs() - tau).max(0.0)))
}

/// Closed-form minimiser of `||M(A - X - S)||^2 + rho/2 ||X - A_theta + Lambda||^2` over `X`,
/// where `M` is the observation mask (all ones when `mask` is `None`).
pub fn admm_x_update(
    data: &DenseTensor3,
    s: &DenseTensor3,
    a_theta: &DenseTensor3,
    lambda: &DenseTensor3,
    rho: f64,
    mask: Option<&ObservationMask>,
) -> Result<DenseTensor3> {
    if !(rho > 0.0) {
        return Err(CfError::arg("rho must be positive"));
    }
    for t in [s, a_theta, lambda] {
        data.check_same(t)?;
    }
    let mut x = DenseTensor3::zeros(data.dims());
    for (idx, xv) in x.data_mut().iter_mut().enumerate() {
        let w = match mask {
            Some(m) if !m.observed()[idx] => 0.0,
            _ => 2.0,
        };
        let a = data.data()[idx] - s.data()[idx];
        let b = a_theta.data()[idx] - lambda.data()[idx];
        *xv = (w * a + rho * b) / (w + rho);
    }
    Ok(x)
}

/// Anisotropic total variation over both spatial modes with Charbonnier smoothing:
/// `sum sqrt(d^2 + eps^2) - eps` over all forward differences. Returns value and gradient.
pub fn tv_charbonnier(t: &DenseTensor3, eps: f64) -> (f64, DenseTensor3) {
    let [n1, n2, n3] = t.dims();
    let mut grad = DenseTensor3::zeros(t.dims());
    let mut value = 0.0;
    let e2 = eps * eps;
    for k in 0..n3 {
        let s = t.slice_data(k);
        let g = grad.slice_data_mut(k);
        for j in 0..n2 {
            for i in 0..n1 {
                let c = i + n1 * j;
                if i + 1 < n1 {
                    let d = s[c + 1] - s[c];
                    let r = (d * d + e2).sqrt();
                    value += r - eps;
                    g[c + 1] += d / r;
                    g[c] -= d / r;
                }
                if j + 1 < n2 {
                    let d = s[c + n1] - s[c];
                    let r = (d * d + e2).sqrt();
                    value += r - eps;
                    g[c + n1] += d / r;
                    g[c] -= d / r;
                }
            }
        }
    }
    (value, grad)
}

/// `rho/2 ||target - A_theta||^2 + gamma2 TV(A_theta)` with `target = X + Lambda`.
#[derive(Debug, Clone)]
pub struct ThetaObjective {
    pub target: DenseTensor3,
    pub rho: f64,
    pub gamma2: f64,
    pub tv_eps: f64,
    /// Loss at every evaluation, in order.
    pub losses: Vec<f64>,
}

impl Objective for ThetaObjective {
    fn evaluate(&mut self, image: &DenseTensor3, _: Option<&WaveletBlocks>) -> Result<Evaluation> {
        self.target.check_same(image)?;
        let r = image.sub(&self.target)?;
        let mut loss = 0.5 * self.rho * r.dot(&r)?;
        let mut up = r.scale(self.rho);
        if self.gamma2 > 0.0 {
            let (tv, g) = tv_charbonnier(image, self.tv_eps);
            loss += self.gamma2 * tv;
            up.axpy(self.gamma2, &g)?;
        }
        self.losses.push(loss);
        Ok(Evaluation {
            loss,
            upstream: Upstream::Image(up),
        })
    }
}

/// Runs `inner_iters` Adam steps on the network subproblem; returns the losses seen.
#[allow(clippy::too_many_arguments)]
pub fn admm_theta_update<M: Trainable>(
    model: &mut M,
    trainer: &mut Trainer,
    x: &DenseTensor3,
    lambda: &DenseTensor3,
    rho: f64,
    gamma2: f64,
    tv_eps: f64,
    inner_iters: usize,
) -> Result<Vec<f64>> {
    let mut obj = ThetaObjective {
        target: x.add(lambda)?,
        rho,
        gamma2,
        tv_eps,
        losses: Vec::with_capacity(inner_iters),
    };
    trainer.run(model, &mut obj, inner_iters, None)?;
    Ok(obj.losses)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdmmConfig {
    pub gamma1: f64,
    pub gamma2: f64,
    pub rho0: f64,
    pub kappa: f64,
    pub outer: usize,
    pub inner: usize,
    pub tv_eps: f64,
}

impl Default for AdmmConfig {
    fn default() -> Self {
        Self {
            gamma1: 0.5,
            gamma2: 0.01,
            rho0: 0.1,
            kappa: 1.05,
            outer: 100,
            inner: 20,
            tv_eps: 1e-3,
        }
    }
}

impl AdmmConfig {
    fn validate(&self) -> Result<()> {
        if !(self.gamma1 >= 0.0) || !(self.gamma2 >= 0.0) {
            return Err(CfError::arg("gamma1 and gamma2 must be nonnegative"));
        }
        if !(self.rho0 > 0.0) || !(self.kappa > 1.0) {
            return Err(CfError::arg("need rho0 > 0 and kappa > 1"));
        }
        if self.outer == 0 || self.inner == 0 {
            return Err(CfError::arg("outer and inner iteration counts must be positive"));
        }
        if !(self.tv_eps > 0.0) {
            return Err(CfError::arg("TV smoothing must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdmmState {
    pub x: DenseTensor3,
    pub s: DenseTensor3,
    pub lambda: DenseTensor3,
    pub rho: f64,
    pub kappa: f64,
    pub gamma1: f64,
    pub gamma2: f64,
}

/// Per-outer-iteration diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmmRecord {
    pub outer: usize,
    /// Penalty used in this iteration.
    pub rho: f64,
    /// `||X - A_theta||_F` after the network update.
    pub residual: f64,
    /// `||Lambda_t - Lambda_{t-1}||_F`.
    pub dual_change: f64,
    pub inner_first: f64,
    pub inner_last: f64,
    pub sparse_nonzeros: usize,
}

impl AdmmRecord {
    pub fn csv_header() -> &'static str {
        "outer,rho,residual,dual_change,inner_first,inner_last,sparse_nonzeros"
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{}",
            self.outer,
            self.rho,
            self.residual,
            self.dual_change,
            self.inner_first,
            self.inner_last,
            self.sparse_nonzeros
        )
    }
}

#[derive(Debug, Clone)]
pub struct DenoiseResult {
    pub model: CfModel,
    pub recovered: DenseTensor3,
    pub state: AdmmState,
    pub outer_history: Vec<AdmmRecord>,
    pub history: Vec<HistoryRecord>,
    pub events: Vec<EvolutionEvent>,
}

/// Mixed Gaussian and sparse noise removal:
///
/// ```text
/// X      = argmin ||M(A - X - S)||^2 + rho/2 ||X - A_theta + Lambda||^2
/// theta  <- inner Adam steps on rho/2 ||X + Lambda - A_theta||^2 + gamma2 TV(A_theta)
/// S      = soft(M(A - X), gamma1 / 2)
/// Lambda = Lambda + X - A_theta;   rho = kappa rho
/// ```
///
/// Self-evolution runs on the cumulative inner-iteration count. The run aborts when the
/// residual `||X - A_theta||` reaches ten times its smallest value so far.
pub fn denoise_mixed(
    data: &DenseTensor3,
    mask: Option<&ObservationMask>,
    cfg: &TaskConfig,
    admm: &AdmmConfig,
    reference: Option<&DenseTensor3>,
) -> Result<DenoiseResult> {
    admm.validate()?;
    if let Some(m) = mask {
        if m.dims() != data.dims() {
            return Err(CfError::shape("mask and data dims differ"));
        }
    }
    let (mut model, evo) = cfg.build(data.dims(), data.dims()[2].div_ceil(2))?;
    let mut trainer = cfg.trainer(admm.outer * admm.inner, Some(evo));
    let dims = data.dims();
    let mut st = AdmmState {
        x: data.clone(),
        s: DenseTensor3::zeros(dims),
        lambda: DenseTensor3::zeros(dims),
        rho: admm.rho0,
        kappa: admm.kappa,
        gamma1: admm.gamma1,
        gamma2: admm.gamma2,
    };
    let mut a_theta = model.generate_image()?;
    let mut records = Vec::with_capacity(admm.outer);
    let mut min_residual = f64::INFINITY;
    for t in 0..admm.outer {
        st.x = admm_x_update(data, &st.s, &a_theta, &st.lambda, st.rho, mask)?;
        let losses = admm_theta_update(
            &mut model,
            &mut trainer,
            &st.x,
            &st.lambda,
            st.rho,
            st.gamma2,
            admm.tv_eps,
            admm.inner,
        )?;
        a_theta = model.generate_image()?;
        let resid = data.sub(&st.x)?;
        st.s = soft_threshold(&resid, st.gamma1 / 2.0)?;
        if let Some(m) = mask {
            st.s = m.project(&st.s)?;
        }
        let step = st.x.sub(&a_theta)?;
        st.lambda.axpy(1.0, &step)?;
        let residual = step.frobenius_norm();
        records.push(AdmmRecord {
            outer: t,
            rho: st.rho,
            residual,
            dual_change: residual,
            inner_first: losses.first().copied().unwrap_or(f64::NAN),
            inner_last: losses.last().copied().unwrap_or(f64::NAN),
            sparse_nonzeros: st.s.data().iter().filter(|&&v| v != 0.0).count(),
        });
        if let Some(r) = reference {
            log::debug!(
                "outer {t}: residual {residual:.4e}, psnr {:.3}",
                crate::metrics::psnr(r, &a_theta)?
            );
        }
        min_residual = min_residual.min(residual);
        if residual >= 10.0 * min_residual && min_residual > 0.0 {
            return Err(CfError::Diverged {
                outer: t,
                residual,
                minimum: min_residual,
            });
        }
        st.rho *= st.kappa;
    }
    Ok(DenoiseResult {
        model,
        recovered: a_theta,
        state: st,
        outer_history: records,
        history: trainer.history,
        events: trainer.events,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn soft_threshold_examples() {
        let t = DenseTensor3::from_vec([2, 1, 1], vec![0.5, -0.1]).unwrap();
        let s = soft_threshold(&t, 0.2).unwrap();
        assert!((s.data()[0] - 0.3).abs() < 1e-15);
        assert_eq!(s.data()[1], 0.0);
        assert!(soft_threshold(&t, -1.0).is_err());
    }

    #[test]
    fn soft_threshold_is_grid_argmin() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let a: f64 = rng.gen_range(-2.0..2.0);
            let tau: f64 = rng.gen_range(0.0..1.0);
            let n = 10_000;
            let step = 6.0 / n as f64;
            let (mut best, mut arg) = (f64::INFINITY, 0.0);
            for g in 0..=n {
                let s = -3.0 + g as f64 * step;
                let f = (a - s).powi(2) + 2.0 * tau * s.abs();
                if f < best {
                    best = f;
                    arg = s;
                }
            }
            let t = DenseTensor3::from_vec([1, 1, 1], vec![a]).unwrap();
            let s = soft_threshold(&t, tau).unwrap().data()[0];
            assert!((s - arg).abs() <= step);
        }
    }

    #[test]
    fn x_update_examples() {
        let d = [3, 2, 1];
        let a = DenseTensor3::filled(d, 0.4);
        let s = DenseTensor3::filled(d, 0.4);
        let at = DenseTensor3::filled(d, 1.5);
        let l = DenseTensor3::filled(d, 0.5);
        let x = admm_x_update(&a, &s, &at, &l, 2.0, None).unwrap();
        assert!(x.data().iter().all(|v| (v - 0.5).abs() < 1e-15));
        let x = admm_x_update(&a, &DenseTensor3::zeros(d), &at, &l, 1e8, None).unwrap();
        assert!(x.data().iter().all(|v| (v - 1.0).abs() < 1e-6));
    }

    #[test]
    fn x_update_is_stationary() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let d = [4, 3, 2];
        let mut r = || DenseTensor3::from_fn(d, |_, _, _| rng.gen_range(-1.0..1.0));
        let (a, s, at, l) = (r(), r(), r(), r());
        let rho = 0.7;
        let x = admm_x_update(&a, &s, &at, &l, rho, None).unwrap();
        for idx in 0..x.len() {
            let xv = x.data()[idx];
            let g = -2.0 * (a.data()[idx] - xv - s.data()[idx])
                + rho * (xv - at.data()[idx] + l.data()[idx]);
            assert!(g.abs() <= 1e-10);
        }
    }

    #[test]
    fn tv_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let t = DenseTensor3::from_fn([5, 4, 2], |_, _, _| rng.gen_range(0.0..1.0));
        let eps = 1e-3;
        let (_, g) = tv_charbonnier(&t, eps);
        let h = 1e-6;
        for idx in 0..t.len() {
            let mut p = t.clone();
            p.data_mut()[idx] += h;
            let mut m = t.clone();
            m.data_mut()[idx] -= h;
            let fd = (tv_charbonnier(&p, eps).0 - tv_charbonnier(&m, eps).0) / (2.0 * h);
            let a = g.data()[idx];
            assert!((a - fd).abs() / a.abs().max(fd.abs()).max(1e-5) < 1e-4, "{idx} {a} {fd}");
        }
        assert_eq!(tv_charbonnier(&DenseTensor3::filled([4, 4, 1], 0.3), eps).0, 0.0);
    }

    #[test]
    fn mask_compose_keeps_observations() {
        let d = [4, 4, 2];
        let data = DenseTensor3::from_fn(d, |i, j, k| (i + j + k) as f64);
        let fill = DenseTensor3::filled(d, -1.0);
        let obs: Vec<bool> = (0..32).map(|i| i % 3 == 0).collect();
        let m = ObservationMask::new(d, obs.clone()).unwrap();
        let c = m.compose(&data, &fill).unwrap();
        for i in 0..32 {
            assert_eq!(c.data()[i], if obs[i] { data.data()[i] } else { -1.0 });
        }
        assert!(ObservationMask::new(d, vec![false; 32]).is_err());
        assert!(ObservationMask::new(d, vec![true; 31]).is_err());
    }
}
