use cfinr::evolve::apportion;
use cfinr::io::{load_tensor, save_tensor};
use cfinr::model::{CfModel, GridKind};
use cfinr::synthetic::{smooth_tucker, textured_image};
use cfinr::tasks::{fit_inpainting, fit_regression, ObservationMask, TaskConfig};
use cfinr::tensor::{nuclear_norm, singular_values, unfold};
use cfinr::wavelet::{hwt, ihwt};
use cfinr::{DenseTensor3, Mode};
use proptest::prelude::*;

fn small_config() -> TaskConfig {
    TaskConfig {
        iters: 300,
        cadence: 100,
        width: 16,
        lambda_x: Some(8),
        lambda_y: Some(8),
        history_every: 25,
        ..TaskConfig::default()
    }
}

#[test]
fn trained_checkpoint_regenerates_identical_image() {
    let data = textured_image(16, 12, 3, 1);
    let r = fit_regression(&data, &small_config(), Some(&data)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("m.cfnr");
    r.model.save_checkpoint(&p).unwrap();
    let back = CfModel::load_checkpoint(&p).unwrap();
    assert_eq!(back, r.model);
    assert_eq!(back.generate_image().unwrap(), r.recovered);

    let t = dir.path().join("rec.cft");
    save_tensor(&t, &r.recovered).unwrap();
    assert_eq!(load_tensor(&t).unwrap(), r.recovered);
}

#[test]
fn image_is_inverse_transform_of_generated_blocks() {
    let data = textured_image(8, 8, 2, 3);
    let r = fit_regression(&data, &TaskConfig { iters: 20, ..small_config() }, None).unwrap();
    let direct = r.model.generate_image().unwrap();
    let via = ihwt(&r.model.generate_coefficients().unwrap()).unwrap();
    let err = direct.sub(&via).unwrap().max_abs();
    assert!(err < 1e-12, "{err}");
}

#[test]
fn every_event_conserves_budgets() {
    let data = textured_image(16, 16, 3, 2);
    let cfg = small_config();
    let r = fit_regression(&data, &cfg, None).unwrap();
    assert_eq!(r.events.len(), 2);
    for e in &r.events {
        assert!((e.omegas.iter().sum::<f64>() - cfg.mu).abs() < 1e-9);
        assert_eq!(e.ranks.iter().map(|r| r[0]).sum::<usize>(), 8);
        assert_eq!(e.ranks.iter().map(|r| r[1]).sum::<usize>(), 8);
    }
    assert_eq!(r.model.omegas(), r.events.last().unwrap().omegas);
}

#[test]
fn frozen_evolution_keeps_initial_parameters() {
    let data = textured_image(16, 16, 1, 2);
    let cfg = TaskConfig {
        evolve_ranks: false,
        evolve_omegas: false,
        ..small_config()
    };
    let r = fit_regression(&data, &cfg, None).unwrap();
    assert_eq!(r.model.omegas(), [5.0; 4]);
    assert_eq!(r.model.ranks(), [[2, 2]; 4]);
}

#[test]
fn inpainting_keeps_observations_and_beats_zero_fill() {
    let truth = smooth_tucker([16, 16, 4], [3, 3, 2], 5).unwrap();
    let mask = cfinr::io::random_mask(truth.dims(), 0.5, 1).unwrap();
    let observed = mask.project(&truth).unwrap();
    let cfg = TaskConfig {
        iters: 400,
        width: 32,
        ..small_config()
    };
    let r = fit_inpainting(&observed, &mask, &cfg, Some(&truth)).unwrap();
    for (i, &o) in mask.observed().iter().enumerate() {
        if o {
            assert_eq!(r.recovered.data()[i].to_bits(), truth.data()[i].to_bits());
        }
    }
    let p = cfinr::metrics::psnr(&truth, &r.recovered).unwrap();
    let p0 = cfinr::metrics::psnr(&truth, &observed).unwrap();
    assert!(p > p0 + 10.0, "{p} vs {p0}");
}

#[test]
fn full_mask_inpainting_equals_regression() {
    let data = textured_image(8, 8, 2, 4);
    let cfg = TaskConfig { iters: 50, ..small_config() };
    let a = fit_regression(&data, &cfg, None).unwrap();
    let b = fit_inpainting(&data, &ObservationMask::full(data.dims()), &cfg, None).unwrap();
    assert_eq!(a.model, b.model);
}

#[test]
fn normalized_grid_runs_end_to_end() {
    let data = textured_image(8, 8, 2, 4);
    let cfg = TaskConfig {
        iters: 50,
        grid: GridKind::Normalized,
        ..small_config()
    };
    let r = fit_regression(&data, &cfg, None).unwrap();
    assert_eq!(r.model.grid(), GridKind::Normalized);
    assert!(r.final_loss.is_finite());
}

fn tensor_strategy() -> impl Strategy<Value = DenseTensor3> {
    (1usize..=6, 1usize..=6, 1usize..=4).prop_flat_map(|(a, b, c)| {
        let dims = [2 * a, 2 * b, c];
        prop::collection::vec(-10.0f64..10.0, dims[0] * dims[1] * dims[2])
            .prop_map(move |v| DenseTensor3::from_vec(dims, v).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn singular_values_match_nalgebra(t in tensor_strategy(), mode in 1usize..=3) {
        let m = unfold(&t, Mode::from_number(mode).unwrap());
        let ours = singular_values(&m).unwrap();
        let nm = nalgebra::DMatrix::from_column_slice(m.rows(), m.cols(), m.data());
        let mut theirs: Vec<f64> = nm.singular_values().iter().copied().collect();
        theirs.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let scale = theirs.first().copied().unwrap_or(0.0).max(1.0);
        for (i, want) in theirs.iter().enumerate() {
            let got = ours.get(i).copied().unwrap_or(0.0);
            prop_assert!((got - want).abs() <= 1e-9 * scale, "sv {i}: {got} vs {want}");
        }
        let nuc: f64 = theirs.iter().sum();
        prop_assert!((nuclear_norm(&m).unwrap() - nuc).abs() <= 1e-9 * scale * theirs.len() as f64);
    }

    #[test]
    fn wavelet_round_trip_and_energy(t in tensor_strategy()) {
        let b = hwt(&t).unwrap();
        let back = ihwt(&b).unwrap();
        let scale = t.max_abs().max(1.0);
        prop_assert!(back.sub(&t).unwrap().max_abs() <= 1e-12 * scale);
        let e = t.frobenius_norm().powi(2);
        prop_assert!((b.energy() - e).abs() <= 1e-12 * e.max(1.0));
    }

    #[test]
    fn apportion_hits_total_within_caps(
        w in prop::collection::vec(0.0f64..5.0, 4),
        total in 4usize..64,
    ) {
        let cap = total.div_ceil(4) + 3;
        let r = apportion(&w, total, cap).unwrap();
        prop_assert_eq!(r.iter().sum::<usize>(), total);
        prop_assert!(r.iter().all(|&x| x >= 1 && x <= cap));
    }
}
