//! Executable checks of the smoothness, Laplacian and rank results for wavelet coefficients,
//! and of the Laplacian bound for generated coefficients.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{CfError, Result};
use crate::model::{CfModel, CfModelConfig, GridKind};
use crate::siren::SirenMlp;
use crate::tensor::{mode_product, singular_values, tucker_rank_above, unfold, DenseMatrix, DenseTensor3, Mode};
use crate::wavelet::hwt;

/// Relative slack allowed before a measured value counts as a violation.
pub const RELATIVE_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothnessBounds {
    pub l1: f64,
    pub l2: f64,
    pub l3: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundCheck {
    pub claim: String,
    pub measured: f64,
    pub bound: f64,
}

impl BoundCheck {
    fn new(claim: impl Into<String>, measured: f64, bound: f64) -> Self {
        Self {
            claim: claim.into(),
            measured,
            bound,
        }
    }

    pub fn slack(&self) -> f64 {
        self.bound - self.measured
    }

    pub fn passes(&self) -> bool {
        self.measured <= self.bound * (1.0 + RELATIVE_SLACK)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BoundReport {
    pub checks: Vec<BoundCheck>,
}

impl BoundReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(BoundCheck::passes)
    }

    pub fn violations(&self) -> usize {
        self.checks.iter().filter(|c| !c.passes()).count()
    }

    /// Largest `measured / bound` over checks with a positive bound.
    pub fn tightest_ratio(&self) -> f64 {
        self.checks
            .iter()
            .filter(|c| c.bound > 0.0)
            .map(|c| c.measured / c.bound)
            .fold(0.0, f64::max)
    }

    pub fn csv_header() -> &'static str {
        "claim,measured,bound,slack,pass"
    }

    pub fn csv_rows(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            out.push_str(&format!(
                "{},{:.17e},{:.17e},{:.17e},{}\n",
                c.claim,
                c.measured,
                c.bound,
                c.slack(),
                c.passes()
            ));
        }
        out
    }
}

/// Largest absolute forward difference along `mode`; zero when that dimension is 1.
pub fn max_forward_difference(t: &DenseTensor3, mode: Mode) -> f64 {
    let [n1, n2, n3] = t.dims();
    let mut best = 0.0f64;
    let (e1, e2, e3) = match mode {
        Mode::One => (1, 0, 0),
        Mode::Two => (0, 1, 0),
        Mode::Three => (0, 0, 1),
    };
    for k in 0..n3 - e3.min(n3) {
        for j in 0..n2 - e2.min(n2) {
            for i in 0..n1 - e1.min(n1) {
                let d = (t.get(i + e1, j + e2, k + e3) - t.get(i, j, k)).abs();
                best = best.max(d);
            }
        }
    }
    best
}

/// Exact `(L1, L2, L3)`. Spatial dims must be at least 2; `L3` is zero for a single band.
pub fn smoothness_constants(t: &DenseTensor3) -> Result<SmoothnessBounds> {
    let [n1, n2, _] = t.dims();
    if n1 < 2 || n2 < 2 {
        return Err(CfError::dim(format!("smoothness needs spatial dims >= 2, got {n1}x{n2}")));
    }
    Ok(SmoothnessBounds {
        l1: max_forward_difference(t, Mode::One),
        l2: max_forward_difference(t, Mode::Two),
        l3: max_forward_difference(t, Mode::Three),
    })
}

/// Largest five-point Laplacian magnitude over interior points; zero if there are none.
pub fn max_laplacian(b: &DenseTensor3) -> f64 {
    let [n1, n2, n3] = b.dims();
    if n1 < 3 || n2 < 3 {
        return 0.0;
    }
    let mut best = 0.0f64;
    for k in 0..n3 {
        let s = b.slice_data(k);
        for j in 1..n2 - 1 {
            for i in 1..n1 - 1 {
                let c = i + n1 * j;
                best = best.max((4.0 * s[c] - s[c - 1] - s[c + 1] - s[c - n1] - s[c + n1]).abs());
            }
        }
    }
    best
}

/// The eleven difference bounds on the Haar coefficients of `t` (the z bound once per block).
pub fn check_coefficient_smoothness(t: &DenseTensor3) -> Result<BoundReport> {
    let SmoothnessBounds { l1, l2, l3 } = smoothness_constants(t)?;
    let b = hwt(t)?;
    let x_bounds = [4.0 * l1, 2.0 * (2.0 * l1).min(l2), 2.0 * l1, 2.0 * l1.min(l2)];
    let y_bounds = [4.0 * l2, 2.0 * l2, 2.0 * l1.min(2.0 * l2), 2.0 * l1.min(l2)];
    let mut checks = Vec::with_capacity(12);
    for s in 0..4 {
        checks.push(BoundCheck::new(
            format!("B{}_x", s + 1),
            max_forward_difference(&b.blocks[s], Mode::One),
            x_bounds[s],
        ));
    }
    for s in 0..4 {
        checks.push(BoundCheck::new(
            format!("B{}_y", s + 1),
            max_forward_difference(&b.blocks[s], Mode::Two),
            y_bounds[s],
        ));
    }
    for s in 0..4 {
        checks.push(BoundCheck::new(
            format!("B{}_z", s + 1),
            max_forward_difference(&b.blocks[s], Mode::Three),
            2.0 * l3,
        ));
    }
    Ok(BoundReport { checks })
}

/// Laplacian bound per coefficient block from `(L1, L2)`.
pub fn laplacian_bounds(s: &SmoothnessBounds) -> [f64; 4] {
    let (l1, l2) = (s.l1, s.l2);
    [
        8.0 * (l1 + l2),
        4.0 * (l2 + (2.0 * l1).min(l2)),
        4.0 * (l1 + l1.min(2.0 * l2)),
        8.0 * l1.min(l2),
    ]
}

/// The four Laplacian bounds plus the orderings `bound(B2) <= bound(B1)`, `bound(B4) <= bound(B3)`.
pub fn check_laplacian_bounds(t: &DenseTensor3) -> Result<BoundReport> {
    let sb = smoothness_constants(t)?;
    let bounds = laplacian_bounds(&sb);
    let b = hwt(t)?;
    let mut checks: Vec<BoundCheck> = (0..4)
        .map(|s| BoundCheck::new(format!("lap_B{}", s + 1), max_laplacian(&b.blocks[s]), bounds[s]))
        .collect();
    checks.push(BoundCheck::new("order_B2_le_B1", bounds[1], bounds[0]));
    checks.push(BoundCheck::new("order_B4_le_B3", bounds[3], bounds[2]));
    Ok(BoundReport { checks })
}

/// Per-mode ranks of every coefficient block against those of `t`, counting singular values
/// above `tol * sigma_max` of the corresponding unfolding of `t`.
pub fn check_rank_lemma(t: &DenseTensor3, tol: f64) -> Result<BoundReport> {
    if !(tol > 0.0) {
        return Err(CfError::arg("rank tolerance must be positive"));
    }
    let mut thresholds = [0.0; 3];
    for mode in Mode::ALL {
        let sv = singular_values(&unfold(t, mode))?;
        thresholds[mode.axis()] = tol * sv.first().copied().unwrap_or(0.0);
    }
    let reference = tucker_rank_above(t, thresholds)?;
    let b = hwt(t)?;
    let mut checks = Vec::with_capacity(12);
    for s in 0..4 {
        let r = tucker_rank_above(&b.blocks[s], thresholds)?;
        for n in 0..3 {
            checks.push(BoundCheck::new(
                format!("rank_B{}_mode{}", s + 1, n + 1),
                r[n] as f64,
                reference[n] as f64,
            ));
        }
    }
    Ok(BoundReport { checks })
}

fn net_eta(net: &SirenMlp) -> f64 {
    let mut eta = 0.0f64;
    for (q, w) in net.weights().iter().enumerate() {
        let bias: f64 = net.biases().get(q).map_or(0.0, |b| b.iter().map(|v| v.abs()).sum());
        eta = eta.max(w.entrywise_l1() + bias);
    }
    eta
}

/// `eta`: the largest entrywise l1 norm among the core and every layer `[H | b]` of every net.
pub fn laplacian_eta(model: &CfModel) -> f64 {
    let mut eta = model.core().entrywise_l1();
    for net in model.spatial_x().iter().chain(model.spatial_y()) {
        eta = eta.max(net_eta(net));
    }
    eta.max(net_eta(model.spectral()))
}

/// Compares the largest interior Laplacian of each generated block with
/// `C * omega_s^(2d-2)`, `C = 4 eta^(3d+1) (omega_z)^(d-1) n3 max(n1/2, n2/2)`.
/// The model must use the unit-spaced index grid.
pub fn cfinr_laplacian_bound(model: &CfModel) -> Result<BoundReport> {
    if model.grid() != GridKind::UnitIndex {
        return Err(CfError::arg("the Laplacian bound assumes the unit-index coordinate grid"));
    }
    let d = model.spectral().depth() as i32;
    let [n1, n2, n3] = model.dims();
    let eta = laplacian_eta(model);
    let c = 4.0
        * eta.powi(3 * d + 1)
        * model.omega_z().powi(d - 1)
        * n3 as f64
        * (n1 / 2).max(n2 / 2) as f64;
    let b = model.generate_coefficients()?;
    let omegas = model.omegas();
    let checks = (0..4)
        .map(|s| {
            BoundCheck::new(
                format!("cf_lap_B{}", s + 1),
                max_laplacian(&b.blocks[s]),
                c * omegas[s].powi(2 * d - 2),
            )
        })
        .collect();
    Ok(BoundReport { checks })
}

/// Outcome of a fuzz campaign.
#[derive(Debug, Clone, PartialEq)]
pub struct CampaignSummary {
    pub name: &'static str,
    pub trials: usize,
    pub checks: usize,
    pub violations: usize,
    pub tightest_ratio: f64,
    /// Every report, in trial order.
    pub reports: Vec<BoundReport>,
}

impl CampaignSummary {
    fn collect(name: &'static str, reports: Vec<BoundReport>) -> Self {
        Self {
            name,
            trials: reports.len(),
            checks: reports.iter().map(|r| r.checks.len()).sum(),
            violations: reports.iter().map(BoundReport::violations).sum(),
            tightest_ratio: reports.iter().map(BoundReport::tightest_ratio).fold(0.0, f64::max),
            reports,
        }
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

fn uniform_tensor(rng: &mut ChaCha8Rng, dims: [usize; 3]) -> DenseTensor3 {
    DenseTensor3::from_fn(dims, |_, _, _| rng.gen::<f64>())
}

/// Random 8x8x3 tensors, uniform in `[0, 1]`.
pub fn smoothness_campaign(trials: usize, seed: u64) -> Result<CampaignSummary> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let reports = (0..trials)
        .map(|_| check_coefficient_smoothness(&uniform_tensor(&mut rng, [8, 8, 3])))
        .collect::<Result<Vec<_>>>()?;
    Ok(CampaignSummary::collect("coefficient_smoothness", reports))
}

pub fn laplacian_campaign(trials: usize, seed: u64) -> Result<CampaignSummary> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let reports = (0..trials)
        .map(|_| check_laplacian_bounds(&uniform_tensor(&mut rng, [8, 8, 3])))
        .collect::<Result<Vec<_>>>()?;
    Ok(CampaignSummary::collect("laplacian_bounds", reports))
}

/// Random Tucker tensor with the given multilinear rank.
pub fn random_low_rank(rng: &mut ChaCha8Rng, dims: [usize; 3], ranks: [usize; 3]) -> Result<DenseTensor3> {
    let core = DenseTensor3::from_fn(ranks, |_, _, _| rng.gen_range(-1.0..1.0));
    let mut factor = |n: usize, r: usize| DenseMatrix::from_fn(n, r, |_, _| rng.gen_range(-1.0..1.0));
    let (u, v, w) = (factor(dims[0], ranks[0]), factor(dims[1], ranks[1]), factor(dims[2], ranks[2]));
    mode_product(&mode_product(&mode_product(&core, &u, Mode::One)?, &v, Mode::Two)?, &w, Mode::Three)
}

/// Random low-rank tensors with even spatial dims up to 12x12x6, checked at `tol`.
pub fn rank_campaign(trials: usize, tol: f64, seed: u64) -> Result<CampaignSummary> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut reports = Vec::with_capacity(trials);
    for _ in 0..trials {
        let dims = [2 * rng.gen_range(2..=6), 2 * rng.gen_range(2..=6), rng.gen_range(2..=6)];
        let ranks = [
            rng.gen_range(1..=dims[0] / 2),
            rng.gen_range(1..=dims[1] / 2),
            rng.gen_range(1..=dims[2]),
        ];
        let t = random_low_rank(&mut rng, dims, ranks)?;
        reports.push(check_rank_lemma(&t, tol)?);
    }
    Ok(CampaignSummary::collect("rank_lemma", reports))
}

/// Small random models (depth 2, width at most 8) on the unit-index grid.
pub fn cfinr_campaign(trials: usize, seed: u64) -> Result<CampaignSummary> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut reports = Vec::with_capacity(trials);
    for _ in 0..trials {
        let dims = [2 * rng.gen_range(3..=6), 2 * rng.gen_range(3..=6), rng.gen_range(1..=4)];
        let lx = rng.gen_range(4..=8);
        let ly = rng.gen_range(4..=8);
        let mut cfg = CfModelConfig::with_budgets(dims, lx, ly, rng.gen_range(4.0..30.0), rng.gen_range(1..=3))?;
        cfg.width = rng.gen_range(2..=8);
        cfg.depth = 2;
        cfg.grid = GridKind::UnitIndex;
        cfg.omega_z = rng.gen_range(0.5..4.0);
        cfg.core_scale = rng.gen_range(0.1..3.0);
        cfg.use_bias = rng.gen_bool(0.5);
        cfg.seed = rng.gen();
        let mut model = CfModel::new(&cfg)?;
        let mut omegas = [0.0; 4];
        for o in &mut omegas {
            *o = rng.gen_range(0.5..10.0);
        }
        model.set_omegas(omegas)?;
        reports.push(cfinr_laplacian_bound(&model)?);
    }
    Ok(CampaignSummary::collect("cfinr_laplacian", reports))
}

/// Exhaustive search over 4x2x1 tensors with entries in `{-3, -1, 1, 3}` for the largest
/// ratio of the first block's mode-1 difference to its bound `4 L1`.
pub fn extremal_smoothness_ratio() -> Result<(f64, DenseTensor3)> {
    const LEVELS: [f64; 4] = [-3.0, -1.0, 1.0, 3.0];
    let mut best = (0.0, DenseTensor3::zeros([4, 2, 1]));
    for code in 0..4usize.pow(8) {
        let t = DenseTensor3::from_fn([4, 2, 1], |i, j, _| LEVELS[(code >> (2 * (i + 4 * j))) & 3]);
        let l1 = max_forward_difference(&t, Mode::One);
        if l1 == 0.0 {
            continue;
        }
        let b = hwt(&t)?;
        let ratio = max_forward_difference(&b.blocks[0], Mode::One) / (4.0 * l1);
        if ratio > best.0 {
            best = (ratio, t);
        }
    }
    Ok(best)
}
