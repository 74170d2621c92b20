use pseudoloc_core::dyadic::DyadicCube;
use pseudoloc_core::haar::{synthesize, FiniteHaarExpansion, HaarIndex};
use pseudoloc_core::operators::restricted_lp_norm;
use pseudoloc_core::sigma::sigma_set;
use pseudoloc_harness::decay::{q_norm, q_variant, select_q_cube, RowStatus, EXPERIMENT_Q};
use pseudoloc_harness::output::rows_to_string;
use pseudoloc_harness::{gen_family, run_decay, ExperimentConfig, Profile};

fn small(profile: Profile) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.ps = vec![2.0];
    cfg.s_max = 3;
    cfg.family_size = 3;
    cfg.profile = profile;
    cfg
}

fn single() -> FiniteHaarExpansion {
    let h = HaarIndex::new(DyadicCube::new(0, &[0]).unwrap(), 1).unwrap();
    FiniteHaarExpansion::from_terms(1, [(h, 1.0)]).unwrap()
}

#[test]
fn zero_kernel_gives_zero_ratios() {
    let mut cfg = small(Profile::RandomSparse);
    cfg.set("scale", "0").unwrap();
    let run = run_decay(&cfg).unwrap();
    assert!(!run.rows.is_empty());
    for row in &run.rows {
        assert_eq!(row.status, RowStatus::Ok);
        assert_eq!(row.ratio, 0.0, "{row:?}");
    }
}

#[test]
fn single_coefficient_matches_the_restricted_norm() {
    let f = single();
    let k = ExperimentConfig::default().kernel_spec();
    let sigma = sigma_set(&f, 0).unwrap().sigma;
    let direct = restricted_lp_norm(&k, &f, &sigma, 2.0, Some(64.0), 1e-9).unwrap();

    let (norm, budget) =
        pseudoloc_harness::decay::sigma_norm(&k, &f, 0, 2.0, Some(64.0), 1e-9).unwrap();
    assert!(
        (norm - direct.norm).abs() <= budget + direct.budget(),
        "{norm} vs {}",
        direct.norm
    );
    // Σ = [-4, 5): the Hilbert kernel integrates to a logarithm outside it
    assert!(norm > 0.0 && norm < 0.2, "{norm}");
}

#[test]
fn rows_are_flagged_not_zeroed() {
    let run = run_decay(&small(Profile::Bump)).unwrap();
    assert_eq!(run.failures(), 0);
    for row in &run.rows {
        assert!(row.ratio.is_finite() && row.ratio > 0.0, "{row:?}");
        assert!(row.tail_budget >= 0.0);
    }
}

#[test]
fn csv_is_deterministic() {
    let cfg = small(Profile::AdversarialBoundary);
    let a = rows_to_string(&run_decay(&cfg).unwrap().rows).unwrap();
    let b = rows_to_string(&run_decay(&cfg).unwrap().rows).unwrap();
    assert_eq!(a, b);
    assert!(a.starts_with("experiment,kernel,n,gamma,p,s,f_id,ratio,tail_budget,status\n"));
}

#[test]
fn enlarging_sigma_never_increases_the_ratio() {
    let k = ExperimentConfig::default().kernel_spec();
    for f in gen_family(3, 4, Profile::RandomSparse, 1, 2.0).unwrap() {
        let small = sigma_set(&f, 1).unwrap().sigma;
        // one more 9-expansion of every cube
        let big = small
            .cubes()
            .iter()
            .map(|c| c.expand9())
            .fold(small.clone(), |acc, e| acc.union(&e));
        let hull = big.hull().unwrap();
        let r = 4.0 * (hull.hi()[0] - hull.lo()[0]);
        let a = restricted_lp_norm(&k, &f, &small, 2.0, Some(r), 1e-9).unwrap();
        let b = restricted_lp_norm(&k, &f, &big, 2.0, Some(r), 1e-9).unwrap();
        assert!(
            b.norm <= a.norm + a.budget() + b.budget(),
            "{} > {}",
            b.norm,
            a.norm
        );
    }
}

#[test]
fn q_ratio_shrinks_with_the_expansion_factor() {
    for f in gen_family(5, 4, Profile::RandomSparse, 1, 2.0).unwrap() {
        let q = select_q_cube(&synthesize(&f).unwrap(), 1, 2.0, 1.0).unwrap();
        let mut last = f64::INFINITY;
        let mut last_budget = 0.0;
        for factor in [1.0, 3.0, 9.0, 27.0, 81.0] {
            let r = q_norm(&f, q.center, q.side * factor, 2.0, 1e-9).unwrap();
            assert!(
                r.norm <= last + last_budget + r.budget,
                "{factor}: {} > {last}",
                r.norm
            );
            last = r.norm;
            last_budget = r.budget;
        }
    }
}

#[test]
fn q_variant_runs_through_the_grid() {
    let mut cfg = small(Profile::RandomSparse);
    cfg.q_cube = true;
    let run = run_decay(&cfg).unwrap();
    let q: Vec<_> = run
        .rows
        .iter()
        .filter(|r| r.experiment == EXPERIMENT_Q)
        .collect();
    assert_eq!(q.len(), 3 * 4);
    assert!(q.iter().all(|r| r.status == RowStatus::Ok));
    let v = q_variant(&single(), 0, 2.0, 1e-9).unwrap();
    assert!(v.factor >= 100.0);
    assert!(v.norm >= 0.0 && v.norm < 1.0);
}
