//! Periodic re-apportionment of per-branch ranks and frequencies under fixed budgets.
//!
//! Ranks follow `r_s = lambda * N_s^(1/k) / sum_t N_t^(1/k)` where `N_s` is the nuclear norm of
//! the Frobenius-normalised unfolding of block `s`. Frequencies follow
//! `omega_s = mu * L_s^(1/(2d-2)) / sum_t L_t^(1/(2d-2))` with `L_s` the mean absolute
//! discrete Laplacian of block `s`.

use crate::error::{CfError, Result};
use crate::tensor::{nuclear_norm, unfold, DenseTensor3, Mode};
use crate::wavelet::WaveletBlocks;

#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionConfig {
    pub lambda_x: usize,
    pub lambda_y: usize,
    pub mu: f64,
    pub k: f64,
    /// Net depth entering the frequency exponent `1/(2d-2)`.
    pub depth: usize,
    pub cadence: usize,
    /// Largest admissible per-branch rank (core spatial dims).
    pub cap_x: usize,
    pub cap_y: usize,
    pub evolve_ranks: bool,
    pub evolve_omegas: bool,
}

impl EvolutionConfig {
    pub fn new(lambda_x: usize, lambda_y: usize, mu: f64, depth: usize) -> Self {
        Self {
            lambda_x,
            lambda_y,
            mu,
            k: 3.0,
            depth,
            cadence: 500,
            cap_x: crate::model::default_core_dim(lambda_x),
            cap_y: crate::model::default_core_dim(lambda_y),
            evolve_ranks: true,
            evolve_omegas: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.lambda_x < 4 || self.lambda_y < 4 {
            return Err(CfError::arg("rank budgets must be at least 4"));
        }
        if self.lambda_x > 4 * self.cap_x || self.lambda_y > 4 * self.cap_y {
            return Err(CfError::arg("rank budget exceeds four times the core size"));
        }
        if !(self.mu > 0.0) || !self.mu.is_finite() {
            return Err(CfError::arg("mu must be positive"));
        }
        if !(self.k > 0.0) {
            return Err(CfError::arg("k must be positive"));
        }
        if self.depth < 2 {
            return Err(CfError::arg("depth must be at least 2"));
        }
        if self.cadence == 0 {
            return Err(CfError::arg("cadence must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionState {
    pub config: EvolutionConfig,
    pub ranks: [[usize; 2]; 4],
    pub omegas: [f64; 4],
}

/// One trigger of the schedulers, with the statistics that drove it.
#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionEvent {
    pub iter: usize,
    pub omegas: [f64; 4],
    pub ranks: [[usize; 2]; 4],
    pub laplacians: [f64; 4],
    /// Normalised nuclear norms, `[mode-1, mode-2]` per branch.
    pub nuclear: [[f64; 4]; 2],
}

impl EvolutionState {
    /// Symmetric start: `omega_s = mu/4`, ranks an exact-sum split of `lambda/4`.
    pub fn new(config: EvolutionConfig) -> Result<Self> {
        config.validate()?;
        let rx = apportion(&[1.0; 4], config.lambda_x, config.cap_x)?;
        let ry = apportion(&[1.0; 4], config.lambda_y, config.cap_y)?;
        let omegas = [config.mu / 4.0; 4];
        Ok(Self {
            ranks: std::array::from_fn(|s| [rx[s], ry[s]]),
            omegas,
            config,
        })
    }

    /// Applies both updates when `iter > 0` and `iter` is a multiple of the cadence.
    pub fn maybe_evolve(
        &mut self,
        iter: usize,
        blocks: &WaveletBlocks,
    ) -> Result<Option<EvolutionEvent>> {
        if iter == 0 || !iter.is_multiple_of(self.config.cadence) {
            return Ok(None);
        }
        self.evolve(iter, blocks).map(Some)
    }

    pub fn evolve(&mut self, iter: usize, blocks: &WaveletBlocks) -> Result<EvolutionEvent> {
        let c = &self.config;
        let laplacians: [f64; 4] = {
            let mut l = [0.0; 4];
            for (s, b) in blocks.blocks.iter().enumerate() {
                l[s] = mean_laplacian(b)?;
            }
            l
        };
        let nuclear = normalized_nuclear_norms(blocks)?;
        if c.evolve_omegas {
            if let Some(w) = evolve_omegas(laplacians, c.mu, c.depth)? {
                self.omegas = w;
            }
        }
        if c.evolve_ranks {
            let rx = ranks_from_norms(&nuclear[0], c.lambda_x, c.k, c.cap_x)?;
            let ry = ranks_from_norms(&nuclear[1], c.lambda_y, c.k, c.cap_y)?;
            self.ranks = std::array::from_fn(|s| [rx[s], ry[s]]);
        }
        Ok(EvolutionEvent {
            iter,
            omegas: self.omegas,
            ranks: self.ranks,
            laplacians,
            nuclear,
        })
    }
}

impl EvolutionEvent {
    pub fn csv_header() -> &'static str {
        "iter,omega_1,omega_2,omega_3,omega_4,rx_1,rx_2,rx_3,rx_4,ry_1,ry_2,ry_3,ry_4,\
         lap_1,lap_2,lap_3,lap_4,nuc1_1,nuc1_2,nuc1_3,nuc1_4,nuc2_1,nuc2_2,nuc2_3,nuc2_4"
    }

    pub fn csv_row(&self) -> String {
        let mut f: Vec<String> = vec![self.iter.to_string()];
        f.extend(self.omegas.iter().map(|v| format!("{v:.12e}")));
        f.extend(self.ranks.iter().map(|r| r[0].to_string()));
        f.extend(self.ranks.iter().map(|r| r[1].to_string()));
        f.extend(self.laplacians.iter().map(|v| format!("{v:.12e}")));
        f.extend(self.nuclear.iter().flatten().map(|v| format!("{v:.12e}")));
        f.join(",")
    }
}

/// Mean of `|4 b(i,j,k) - b(i-1,j,k) - b(i+1,j,k) - b(i,j-1,k) - b(i,j+1,k)|` over interior
/// spatial points of every frontal slice.
pub fn mean_laplacian(b: &DenseTensor3) -> Result<f64> {
    let [n1, n2, n3] = b.dims();
    if n1 < 3 || n2 < 3 {
        return Err(CfError::dim(format!(
            "Laplacian needs spatial dims of at least 3, got {n1}x{n2}"
        )));
    }
    let mut acc = 0.0;
    for k in 0..n3 {
        let s = b.slice_data(k);
        for j in 1..n2 - 1 {
            for i in 1..n1 - 1 {
                let c = i + n1 * j;
                acc += (4.0 * s[c] - s[c - 1] - s[c + 1] - s[c - n1] - s[c + n1]).abs();
            }
        }
    }
    Ok(acc / ((n1 - 2) * (n2 - 2) * n3) as f64)
}

/// Frequency split; `None` when every Laplacian is zero (the caller keeps its frequencies).
pub fn evolve_omegas(laplacians: [f64; 4], mu: f64, depth: usize) -> Result<Option<[f64; 4]>> {
    if depth < 2 {
        return Err(CfError::arg("depth must be at least 2"));
    }
    if !(mu > 0.0) {
        return Err(CfError::arg("mu must be positive"));
    }
    if laplacians.iter().any(|l| !(*l >= 0.0) || !l.is_finite()) {
        return Err(CfError::NonFinite("Laplacian means must be finite and nonnegative".into()));
    }
    let p = 1.0 / (2 * depth - 2) as f64;
    let roots = laplacians.map(|l| l.powf(p));
    let total: f64 = roots.iter().sum();
    if total == 0.0 {
        return Ok(None);
    }
    Ok(Some(roots.map(|r| mu * r / total)))
}

/// Nuclear norms of the mode-1 and mode-2 unfoldings of every block, each divided by its
/// own Frobenius norm. A zero block yields 0.
pub fn normalized_nuclear_norms(blocks: &WaveletBlocks) -> Result<[[f64; 4]; 2]> {
    let mut out = [[0.0; 4]; 2];
    for (s, b) in blocks.blocks.iter().enumerate() {
        for (m, mode) in [Mode::One, Mode::Two].into_iter().enumerate() {
            let u = unfold(b, mode);
            let f = u.frobenius_norm();
            out[m][s] = if f > 0.0 {
                nuclear_norm(&u.scale(1.0 / f))?
            } else {
                0.0
            };
        }
    }
    Ok(out)
}

/// Rank split for both spatial modes.
pub fn evolve_ranks(
    blocks: &WaveletBlocks,
    lambda_x: usize,
    lambda_y: usize,
    k: f64,
    caps: [usize; 2],
) -> Result<[[usize; 2]; 4]> {
    let nuc = normalized_nuclear_norms(blocks)?;
    let rx = ranks_from_norms(&nuc[0], lambda_x, k, caps[0])?;
    let ry = ranks_from_norms(&nuc[1], lambda_y, k, caps[1])?;
    Ok(std::array::from_fn(|s| [rx[s], ry[s]]))
}

fn ranks_from_norms(norms: &[f64; 4], lambda: usize, k: f64, cap: usize) -> Result<Vec<usize>> {
    if norms.iter().any(|v| !v.is_finite()) {
        return Err(CfError::NonFinite("nuclear norm is not finite".into()));
    }
    let w: Vec<f64> = norms.iter().map(|v| v.max(0.0).powf(1.0 / k)).collect();
    apportion(&w, lambda, cap)
}

/// Splits the integer `total` in proportion to `weights` with every part in `1..=cap`.
///
/// Real-valued shares are `clamp(t * w_s, 1, cap)` with `t` chosen so they sum to `total`;
/// they are then rounded by largest remainder, ties going to the lower index. When the
/// positive weights saturate at `cap`, the rest is split evenly over zero-weight parts.
pub fn apportion(weights: &[f64], total: usize, cap: usize) -> Result<Vec<usize>> {
    let n = weights.len();
    if n == 0 || cap == 0 || total < n || total > n * cap {
        return Err(CfError::arg(format!(
            "cannot split {total} into {n} parts within 1..={cap}"
        )));
    }
    if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
        return Err(CfError::arg("apportionment weights must be finite and nonnegative"));
    }
    let capf = cap as f64;
    let positive = weights.iter().filter(|&&w| w > 0.0).count();
    let shares: Vec<f64> = if positive == 0 {
        vec![total as f64 / n as f64; n]
    } else if (positive * cap + (n - positive)) as f64 <= total as f64 {
        let zeros = n - positive;
        let rest = if zeros > 0 {
            (total - positive * cap) as f64 / zeros as f64
        } else {
            0.0
        };
        weights
            .iter()
            .map(|&w| if w > 0.0 { capf } else { rest })
            .collect()
    } else {
        let share = |t: f64| -> Vec<f64> {
            weights.iter().map(|&w| (t * w).clamp(1.0, capf)).collect()
        };
        let min_w = weights
            .iter()
            .filter(|&&w| w > 0.0)
            .fold(f64::INFINITY, |m, &w| m.min(w));
        let (mut lo, mut hi) = (0.0, capf / min_w);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if share(mid).iter().sum::<f64>() < total as f64 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        share(hi)
    };
    let mut parts: Vec<usize> = shares
        .iter()
        .map(|&q| (q.floor() as usize).clamp(1, cap))
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        let fa = shares[a] - shares[a].floor();
        let fb = shares[b] - shares[b].floor();
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    let mut assigned: usize = parts.iter().sum();
    while assigned < total {
        for &s in &order {
            if assigned < total && parts[s] < cap {
                parts[s] += 1;
                assigned += 1;
            }
        }
    }
    while assigned > total {
        for &s in order.iter().rev() {
            if assigned > total && parts[s] > 1 {
                parts[s] -= 1;
                assigned -= 1;
            }
        }
    }
    Ok(parts)
}
