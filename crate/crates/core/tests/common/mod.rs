#![allow(dead_code)]

use cfinr::model::{CfModel, CfModelConfig, GridKind};
use cfinr::DenseTensor3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `0.5 ||G(theta) - T||^2`.
pub fn half_sq_loss(model: &CfModel, target: &DenseTensor3) -> f64 {
    let g = model.generate_image().unwrap();
    0.5 * g.sub(target).unwrap().frobenius_norm().powi(2)
}

/// Largest relative gap between the analytic gradient of [`half_sq_loss`] and a
/// Richardson-extrapolated central difference (steps `h` and `h/2`) over every parameter.
/// Entries below `floor` in both estimates are compared against `floor`.
pub fn max_gradient_error(model: &CfModel, target: &DenseTensor3, h: f64, floor: f64) -> f64 {
    let pass = model.forward().unwrap();
    let up = pass.image.sub(target).unwrap();
    let analytic = model.flatten_gradients(&model.backward_image(&pass, &up).unwrap());
    let mut probe = model.clone();
    let slices = probe.param_slices_mut().len();
    let mut flat = 0;
    let mut worst = 0.0f64;
    for s in 0..slices {
        let len = probe.param_slices_mut()[s].0.len();
        for e in 0..len {
            let orig = probe.param_slices_mut()[s].0[e];
            let mut central = |step: f64| {
                probe.param_slices_mut()[s].0[e] = orig + step;
                let fp = half_sq_loss(&probe, target);
                probe.param_slices_mut()[s].0[e] = orig - step;
                let fm = half_sq_loss(&probe, target);
                probe.param_slices_mut()[s].0[e] = orig;
                (fp - fm) / (2.0 * step)
            };
            let (d1, d2) = (central(h), central(h / 2.0));
            let fd = (4.0 * d2 - d1) / 3.0;
            let a = analytic[flat];
            worst = worst.max((a - fd).abs() / a.abs().max(fd.abs()).max(floor));
            flat += 1;
        }
    }
    assert_eq!(flat, analytic.len());
    worst
}

/// Random small model plus a target of the same size.
pub fn random_instance(seed: u64) -> (CfModel, DenseTensor3) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n1 = 2 * rng.gen_range(1..=4);
    let n2 = 2 * rng.gen_range(1..=4);
    let n3 = rng.gen_range(1..=4);
    let lx = rng.gen_range(4..=8);
    let ly = rng.gen_range(4..=8);
    let mu = rng.gen_range(4.0..20.0);
    let rz = rng.gen_range(1..=n3);
    let mut cfg = CfModelConfig::with_budgets([n1, n2, n3], lx, ly, mu, rz).unwrap();
    cfg.width = rng.gen_range(2..=16);
    cfg.depth = 2 + (seed % 2) as usize;
    cfg.grid = if seed.is_multiple_of(3) { GridKind::Normalized } else { GridKind::UnitIndex };
    cfg.omegas = std::array::from_fn(|_| rng.gen_range(0.5..6.0));
    cfg.omega_z = rng.gen_range(0.5..3.0);
    cfg.core_scale = 1.0;
    cfg.seed = seed;
    let model = CfModel::new(&cfg).unwrap();
    let target = DenseTensor3::from_fn([n1, n2, n3], |_, _, _| rng.gen_range(0.0..1.0));
    (model, target)
}
