use proptest::prelude::*;

use pseudoloc_core::dyadic::DyadicCube;
use pseudoloc_core::haar::{FiniteHaarExpansion, HaarIndex};
use pseudoloc_harness::checks::{decomposition_check, symmetry_check, unconditionality_check};
use pseudoloc_harness::decay::{DecayRow, RowStatus};
use pseudoloc_harness::output::sig12;
use pseudoloc_harness::{fit_slope, gen_family, ExperimentConfig, Profile, SignVector};

#[test]
fn unconditional_at_two() {
    for seed in [1, 2, 3] {
        let u = unconditionality_check(2.0, 200, seed).unwrap();
        assert!(u.max_deviation_from_one <= 1e-10, "{u:?}");
    }
}

#[test]
fn one_coefficient_is_sign_blind() {
    let h = HaarIndex::new(DyadicCube::new(2, &[3]).unwrap(), 1).unwrap();
    let f = FiniteHaarExpansion::from_terms(1, [(h, 0.7)]).unwrap();
    for p in [1.5, 4.0] {
        for seed in 0..20 {
            let g = SignVector::new(seed).apply(&f);
            let a = pseudoloc_core::haar::synthesize(&g)
                .unwrap()
                .lp_norm(p, None)
                .unwrap();
            let b = pseudoloc_core::haar::synthesize(&f)
                .unwrap()
                .lp_norm(p, None)
                .unwrap();
            assert_eq!(a, b);
        }
    }
}

#[test]
fn unconditional_constant_at_four_is_stable() {
    let values: Vec<f64> = (1..=3)
        .map(|seed| unconditionality_check(4.0, 1000, seed).unwrap().constant)
        .collect();
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    for v in &values {
        assert!(v.is_finite() && *v >= 1.0);
        assert!((v - mean).abs() <= 0.15 * mean, "{values:?}");
    }
}

#[test]
fn decomposition_tightens_with_m() {
    let mut cfg = ExperimentConfig::default();
    cfg.family_size = 3;
    cfg.s_max = 2;
    cfg.m_radius = 16;
    let a = decomposition_check(&cfg, 20, 1e-3).unwrap();
    cfg.m_radius = 32;
    let b = decomposition_check(&cfg, 20, 1e-3).unwrap();
    assert!(a.pass && b.pass);
    for (x, y) in a.cases.iter().zip(&b.cases) {
        assert!(y.max_discrepancy <= x.max_discrepancy + 1e-9, "{x:?} {y:?}");
        assert!(y.tail_budget <= x.tail_budget);
    }
}

#[test]
fn ratios_are_dilation_and_translation_invariant() {
    let mut cfg = ExperimentConfig::default();
    cfg.family_size = 2;
    cfg.s_max = 2;
    cfg.ps = vec![2.0, 3.0];
    let (dil, tr) = symmetry_check(&cfg, 5).unwrap();
    assert!(dil <= 1e-9 && tr <= 1e-9, "{dil} {tr}");
}

#[test]
fn empty_family_is_rejected() {
    assert!(gen_family(1, 0, Profile::Bump, 1, 2.0).is_err());
}

fn row(p: f64, s: u32, ratio: f64) -> DecayRow {
    DecayRow {
        experiment: "pseudoloc",
        kernel: "hilbert1d".into(),
        n: 1,
        gamma: 1.0,
        p,
        s,
        f_id: 0,
        ratio,
        tail_budget: 0.0,
        status: RowStatus::Ok,
    }
}

proptest! {
    #[test]
    fn slope_is_recovered(slope in -3.0f64..0.5, c in -4.0f64..4.0) {
        let rows: Vec<DecayRow> = (0..9u32)
            .map(|s| row(2.0, s, (1.0 + s as f64) * 2f64.powf(c + slope * s as f64)))
            .collect();
        let fit = fit_slope(&rows, (3, 8), true).unwrap();
        prop_assert_eq!(fit.len(), 1);
        prop_assert!((fit[0].slope - slope).abs() < 1e-9);
        prop_assert!((fit[0].intercept - c).abs() < 1e-8);
    }

    #[test]
    fn sig12_keeps_twelve_digits(v in -1e20f64..1e20, e in -12i32..12) {
        let x = v * 10f64.powi(e);
        let back: f64 = sig12(x).parse().unwrap();
        prop_assert!((back - x).abs() <= 1e-11 * x.abs());
    }

    #[test]
    fn signs_are_balanced(seed in any::<u64>()) {
        let eps = SignVector::new(seed);
        let total: f64 = (0..4096i64)
            .map(|i| eps.sign(&HaarIndex::new(DyadicCube::new(6, &[i]).unwrap(), 1).unwrap()))
            .sum();
        // six standard deviations
        prop_assert!(total.abs() <= 6.0 * 64.0);
    }
}
