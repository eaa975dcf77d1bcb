use phasegate::arr1::Arr1;
use phasegate::masks::{kspace_mask, KSpaceFamily, KSpaceMaskSpec, Mask};
use phasegate::mimo::{run_study, ChannelConfig, MimoStudy};
use phasegate::mri::{evaluate_mask, phantom, MultiCoilKSpace};
use phasegate::numerics::{Complex64, Grid2C, Rng};
use phasegate::phase_space::{delta_s, HusimiParams, Weighting};
use phasegate::selector::{select_mask_params, SelectionCriterion, StudySettings};
use proptest::prelude::*;

fn line_mask(rows: usize, cols: usize, family: KSpaceFamily, seed: u64) -> Mask {
    kspace_mask(&KSpaceMaskSpec {
        n_lines: cols,
        readout: rows,
        acs: 8,
        accel: 4.0,
        family,
        seed,
    })
    .unwrap()
}

#[test]
fn kspace_survives_serialization_unchanged() {
    let k = phantom(48, 40, 3, 11).unwrap();
    let m = line_mask(48, 40, KSpaceFamily::PoissonGap, 2);
    let bytes = Arr1::from_grids(k.data()).unwrap().to_bytes();
    let back = MultiCoilKSpace::new(Arr1::from_bytes(&bytes).unwrap().to_grids().unwrap()).unwrap();
    assert_eq!(back.data(), k.data());
    let mask_back = Arr1::from_bytes(&Arr1::from_mask(&m).to_bytes())
        .unwrap()
        .to_mask()
        .unwrap();
    assert_eq!(mask_back, m);
    let p = HusimiParams::new(16, 8.0, 5).unwrap();
    let a = evaluate_mask(&k, &m, &p, Weighting::Uniform).unwrap();
    let b = evaluate_mask(&back, &mask_back, &p, Weighting::Uniform).unwrap();
    assert_eq!(a, b);
}

#[test]
fn full_sampling_is_lossless() {
    let k = phantom(32, 32, 2, 3).unwrap();
    let m = Mask::full(32, 32).unwrap();
    let r = evaluate_mask(
        &k,
        &m,
        &HusimiParams::new(16, 4.0, 8).unwrap(),
        Weighting::Energy,
    )
    .unwrap();
    assert_eq!(r.abs_delta_s, 0.0);
    assert_eq!(r.kspace_l2, 0.0);
    assert!(r.psnr_db.is_infinite());
    assert!((r.ssim - 1.0).abs() < 1e-12);
}

#[test]
fn undersampling_degrades_every_metric() {
    let k = phantom(64, 64, 2, 8).unwrap();
    let p = HusimiParams::new(16, 8.0, 5).unwrap();
    for family in [
        KSpaceFamily::Periodic,
        KSpaceFamily::Random,
        KSpaceFamily::PoissonGap,
    ] {
        let r = evaluate_mask(&k, &line_mask(64, 64, family, 4), &p, Weighting::Uniform).unwrap();
        assert!(
            r.abs_delta_s > 0.0 && r.kspace_l2 > 0.0 && r.kspace_l2 < 1.0,
            "{family:?}"
        );
        assert!(r.psnr_db.is_finite() && r.ssim < 1.0, "{family:?}");
    }
}

#[test]
fn mimo_rows_depend_only_on_their_realization() {
    let study = |realizations| MimoStudy {
        channel: ChannelConfig {
            n_rx: 8,
            n_tx: 16,
            seed: 21,
            ..ChannelConfig::default()
        },
        realizations,
        intervals: vec![2, 4],
        iters: 3,
        ..MimoStudy::default()
    };
    let p = HusimiParams::mimo();
    let short = run_study(&study(2), &p).unwrap();
    let long = run_study(&study(3), &p).unwrap();
    assert_eq!(short.len(), 2 * 2 * 2);
    assert_eq!(&long[..short.len()], &short[..]);
}

#[test]
fn selection_is_reproducible() {
    let data: Vec<MultiCoilKSpace> = (0..2)
        .map(|i| phantom(40, 40, 2, 100 + i).unwrap())
        .collect();
    let ids = vec!["a".to_string(), "b".to_string()];
    let s = StudySettings {
        accel: 4.0,
        acs: 8,
        params: HusimiParams::new(16, 8.0, 6).unwrap(),
        weighting: Weighting::Uniform,
        seed: 5,
    };
    let run = || {
        select_mask_params(
            &data,
            &ids,
            &[0.0, 0.5],
            &[0.0, 2.0],
            SelectionCriterion::MinKspaceL2,
            &s,
        )
        .unwrap()
    };
    let (a, b) = (run(), run());
    assert_eq!(a, b);
    let best = a
        .score_table
        .iter()
        .map(|r| r.mean)
        .fold(f64::INFINITY, f64::min);
    let chosen = a
        .score_table
        .iter()
        .find(|r| r.alpha == a.best_alpha && r.beta == a.best_beta)
        .unwrap();
    assert_eq!(chosen.mean, best);
}

fn random_field(rows: usize, cols: usize, seed: u64) -> Grid2C {
    let mut rng = Rng::new(seed);
    Grid2C::from_fn(rows, cols, |_, _| {
        Complex64::new(1.0 + rng.gauss(), rng.gauss())
    })
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn delta_s_is_antisymmetric(seed in any::<u64>(), win in 4usize..12, hop in 1usize..6) {
        let a = random_field(24, 24, seed);
        let b = random_field(24, 24, seed ^ 0x5a5a);
        let p = HusimiParams::new(win, win as f64 / 4.0, hop.min(win)).unwrap();
        for w in [Weighting::Uniform, Weighting::Energy] {
            let ab = delta_s(&a, &b, &p, w).unwrap().delta;
            let ba = delta_s(&b, &a, &p, w).unwrap().delta;
            prop_assert!((ab + ba).abs() < 1e-12);
        }
    }

    #[test]
    fn delta_s_ignores_a_common_gain(seed in any::<u64>(), gain in 0.25f64..4.0, phase in 0.0f64..std::f64::consts::TAU) {
        let a = random_field(20, 20, seed);
        let b = random_field(20, 20, seed.wrapping_add(1));
        let g = Complex64::from_polar(gain, phase);
        let p = HusimiParams::new(8, 2.0, 4).unwrap();
        let base = delta_s(&a, &b, &p, Weighting::Uniform).unwrap().delta;
        let scaled = delta_s(&a.scale(g).unwrap(), &b.scale(g).unwrap(), &p, Weighting::Uniform).unwrap().delta;
        prop_assert!((base - scaled).abs() < 1e-10);
    }
}
