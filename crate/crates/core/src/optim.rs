//! Adam with decoupled weight decay, a cosine learning-rate schedule and the full-batch
//! training loop shared by every task.

use std::time::Instant;

use crate::error::{CfError, Result};
use crate::evolve::{EvolutionEvent, EvolutionState};
use crate::metrics::psnr;
use crate::model::{CfModel, CfPass};
use crate::tensor::DenseTensor3;
use crate::wavelet::WaveletBlocks;

#[derive(Debug, Clone, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    /// Learning rate reached at the end of the cosine schedule.
    pub lr_min: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            lr_min: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 1e-5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AdamState {
    pub t: u64,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

impl AdamState {
    pub fn new(n: usize) -> Self {
        Self {
            t: 0,
            m: vec![0.0; n],
            v: vec![0.0; n],
        }
    }
}

/// One bias-corrected Adam update at learning rate `lr`. Each slice carries a flag telling
/// whether decoupled weight decay applies to it; `grads` is their concatenation.
pub fn adam_step(
    params: Vec<(&mut [f64], bool)>,
    grads: &[f64],
    state: &mut AdamState,
    cfg: &AdamConfig,
    lr: f64,
) -> Result<()> {
    let n: usize = params.iter().map(|(p, _)| p.len()).sum();
    if n != grads.len() {
        return Err(CfError::shape(format!(
            "{} gradients for {} parameters",
            grads.len(),
            n
        )));
    }
    if state.m.len() != n || state.v.len() != n {
        if state.t != 0 {
            return Err(CfError::shape("optimizer state does not match parameters"));
        }
        *state = AdamState::new(n);
    }
    state.t += 1;
    let t = state.t as i32;
    let c1 = 1.0 - cfg.beta1.powi(t);
    let c2 = 1.0 - cfg.beta2.powi(t);
    let mut off = 0;
    for (p, decay) in params {
        let wd = if decay { cfg.weight_decay } else { 0.0 };
        for (x, ((g, m), v)) in p.iter_mut().zip(
            grads[off..]
                .iter()
                .zip(state.m[off..].iter_mut())
                .zip(state.v[off..].iter_mut()),
        ) {
            *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * g;
            *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * g * g;
            let mh = *m / c1;
            let vh = *v / c2;
            *x -= lr * mh / (vh.sqrt() + cfg.eps) + lr * wd * *x;
        }
        off += p.len();
    }
    Ok(())
}

/// Cosine decay from `lr` at `iter = 0` to `lr_min` at `iter = total`.
pub fn cosine_lr(cfg: &AdamConfig, iter: usize, total: usize) -> f64 {
    if total == 0 {
        return cfg.lr;
    }
    let x = (iter.min(total) as f64) / total as f64;
    cfg.lr_min + 0.5 * (cfg.lr - cfg.lr_min) * (1.0 + (std::f64::consts::PI * x).cos())
}

/// Gradient with respect to either the generated image or the wavelet blocks.
#[derive(Debug, Clone)]
pub enum Upstream {
    Image(DenseTensor3),
    Blocks(WaveletBlocks),
}

#[derive(Debug, Clone)]
pub struct Evaluation {
    pub loss: f64,
    pub upstream: Upstream,
}

/// A differentiable loss on the generated tensor.
pub trait Objective {
    fn evaluate(&mut self, image: &DenseTensor3, blocks: Option<&WaveletBlocks>)
        -> Result<Evaluation>;
}

/// A model the training loop can optimise.
pub trait Trainable {
    type Pass;
    fn forward_pass(&self) -> Result<Self::Pass>;
    fn pass_image(pass: &Self::Pass) -> &DenseTensor3;
    fn pass_blocks(pass: &Self::Pass) -> Option<&WaveletBlocks>;
    /// Flat gradient in [`Trainable::params_mut`] order.
    fn gradient(&self, pass: &Self::Pass, upstream: &Upstream) -> Result<Vec<f64>>;
    fn params_mut(&mut self) -> Vec<(&mut [f64], bool)>;
    fn num_params(&self) -> usize;
    fn apply_evolution(&mut self, _ranks: [[usize; 2]; 4], _omegas: [f64; 4]) -> Result<()> {
        Ok(())
    }
}

impl Trainable for CfModel {
    type Pass = CfPass;

    fn forward_pass(&self) -> Result<CfPass> {
        self.forward()
    }

    fn pass_image(pass: &CfPass) -> &DenseTensor3 {
        &pass.image
    }

    fn pass_blocks(pass: &CfPass) -> Option<&WaveletBlocks> {
        Some(&pass.blocks)
    }

    fn gradient(&self, pass: &CfPass, upstream: &Upstream) -> Result<Vec<f64>> {
        let g = match upstream {
            Upstream::Image(u) => self.backward_image(pass, u)?,
            Upstream::Blocks(b) => self.backward_blocks(pass, b)?,
        };
        Ok(self.flatten_gradients(&g))
    }

    fn params_mut(&mut self) -> Vec<(&mut [f64], bool)> {
        self.param_slices_mut()
    }

    fn num_params(&self) -> usize {
        CfModel::num_params(self)
    }

    fn apply_evolution(&mut self, ranks: [[usize; 2]; 4], omegas: [f64; 4]) -> Result<()> {
        self.set_ranks(ranks)?;
        self.set_omegas(omegas)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HistoryRecord {
    pub iter: usize,
    pub loss: f64,
    pub psnr: Option<f64>,
    pub wall_ms: f64,
}

impl HistoryRecord {
    pub fn csv_header() -> &'static str {
        "iter,loss,psnr,wall_ms"
    }

    pub fn csv_row(&self) -> String {
        let p = self
            .psnr
            .map(crate::metrics::format_db)
            .unwrap_or_default();
        format!("{},{:.12e},{},{:.3}", self.iter, self.loss, p, self.wall_ms)
    }
}

/// Optimiser state plus bookkeeping that persists across calls to [`Trainer::run`], so
/// inner solves of an outer loop share one schedule and one iteration counter.
#[derive(Debug, Clone)]
pub struct Trainer {
    pub adam: AdamConfig,
    pub state: AdamState,
    /// Cumulative iteration counter.
    pub iter: usize,
    /// Length of the learning-rate schedule.
    pub total_iters: usize,
    pub history_every: usize,
    pub evolution: Option<EvolutionState>,
    pub history: Vec<HistoryRecord>,
    pub events: Vec<EvolutionEvent>,
    started: Instant,
}

impl Trainer {
    pub fn new(adam: AdamConfig, total_iters: usize, evolution: Option<EvolutionState>) -> Self {
        Self {
            adam,
            state: AdamState::default(),
            iter: 0,
            total_iters,
            history_every: 50,
            evolution,
            history: Vec::new(),
            events: Vec::new(),
            started: Instant::now(),
        }
    }

    /// Runs `steps` full-batch iterations and returns the loss of the last one.
    pub fn run<M: Trainable>(
        &mut self,
        model: &mut M,
        objective: &mut dyn Objective,
        steps: usize,
        reference: Option<&DenseTensor3>,
    ) -> Result<f64> {
        if steps == 0 {
            return Err(CfError::arg("need at least one iteration"));
        }
        let mut last = f64::NAN;
        for _ in 0..steps {
            let mut pass = model.forward_pass()?;
            if let Some(evo) = self.evolution.as_mut() {
                if let Some(blocks) = M::pass_blocks(&pass) {
                    if let Some(ev) = evo.maybe_evolve(self.iter, blocks)? {
                        log::debug!(
                            "iter {}: omegas {:?} ranks {:?}",
                            ev.iter,
                            ev.omegas,
                            ev.ranks
                        );
                        model.apply_evolution(ev.ranks, ev.omegas)?;
                        self.events.push(ev);
                        pass = model.forward_pass()?;
                    }
                }
            }
            let eval = objective.evaluate(M::pass_image(&pass), M::pass_blocks(&pass))?;
            let grads = model.gradient(&pass, &eval.upstream)?;
            if !eval.loss.is_finite() || grads.iter().any(|g| !g.is_finite()) {
                let max_grad = grads.iter().fold(0.0f64, |m, g| m.max(g.abs()));
                return Err(CfError::TrainingAborted {
                    iteration: self.iter,
                    loss: eval.loss,
                    max_grad,
                });
            }
            if self.iter.is_multiple_of(self.history_every) {
                let p = match reference {
                    Some(r) => Some(psnr(r, M::pass_image(&pass))?),
                    None => None,
                };
                self.history.push(HistoryRecord {
                    iter: self.iter,
                    loss: eval.loss,
                    psnr: p,
                    wall_ms: self.started.elapsed().as_secs_f64() * 1e3,
                });
            }
            let lr = cosine_lr(&self.adam, self.iter, self.total_iters);
            adam_step(model.params_mut(), &grads, &mut self.state, &self.adam, lr)?;
            self.iter += 1;
            last = eval.loss;
        }
        Ok(last)
    }
}

/// `||image - target||^2`, optionally restricted to observed entries.
#[derive(Debug, Clone)]
pub struct SquaredLoss {
    pub target: DenseTensor3,
    pub mask: Option<Vec<bool>>,
}

impl SquaredLoss {
    pub fn new(target: DenseTensor3) -> Self {
        Self { target, mask: None }
    }

    pub fn masked(target: DenseTensor3, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != target.len() {
            return Err(CfError::shape("mask length differs from target"));
        }
        Ok(Self {
            target,
            mask: Some(mask),
        })
    }
}

impl Objective for SquaredLoss {
    fn evaluate(&mut self, image: &DenseTensor3, _: Option<&WaveletBlocks>) -> Result<Evaluation> {
        self.target.check_same(image)?;
        let mut loss = 0.0;
        let mut up = DenseTensor3::zeros(image.dims());
        for (idx, ((u, a), b)) in up
            .data_mut()
            .iter_mut()
            .zip(image.data())
            .zip(self.target.data())
            .enumerate()
        {
            if self.mask.as_ref().is_some_and(|m| !m[idx]) {
                continue;
            }
            let r = a - b;
            loss += r * r;
            *u = 2.0 * r;
        }
        Ok(Evaluation {
            loss,
            upstream: Upstream::Image(up),
        })
    }
}

/// `sum_s ||B_s - target_s||^2` on wavelet blocks.
#[derive(Debug, Clone)]
pub struct WaveletSquaredLoss {
    pub target: WaveletBlocks,
}

impl Objective for WaveletSquaredLoss {
    fn evaluate(
        &mut self,
        _: &DenseTensor3,
        blocks: Option<&WaveletBlocks>,
    ) -> Result<Evaluation> {
        let blocks =
            blocks.ok_or_else(|| CfError::arg("wavelet loss needs a wavelet-domain model"))?;
        let mut loss = 0.0;
        let mut up = Vec::with_capacity(4);
        for (b, t) in blocks.blocks.iter().zip(&self.target.blocks) {
            let r = b.sub(t)?;
            loss += r.dot(&r)?;
            up.push(r.scale(2.0));
        }
        Ok(Evaluation {
            loss,
            upstream: Upstream::Blocks(WaveletBlocks::new(up.try_into().expect("four"))?),
        })
    }
}
