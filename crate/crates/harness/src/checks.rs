//! Invariant suites and cross-checks shared by the CLI and the acceptance run.

use std::fmt;

use pseudoloc_core::dyadic::{Aabb, DyadicCube, DyadicSet};
use pseudoloc_core::haar::{
    analyze, synthesize, FiniteHaarExpansion, HaarFunction, HaarIndex, StepFunction,
};
use pseudoloc_core::kernel::KernelSpec;
use pseudoloc_core::operators::{
    apply_t_offsupport, figiel_condition_sum, haar_pairing, opnorm_lower_bound, phi_tilde_apply,
    psi_coeff_quadrature, psi_haar_coeff, FigielSum, PsiClass, PsiEvaluator, PsiSection,
    ShiftOperator, ShiftSpec, TruncationBudget,
};
use pseudoloc_core::sigma::{omega_cubes, sigma_set};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::ExperimentConfig;
use crate::decay::sigma_norm;
use crate::error::{HarnessError, Result};
use crate::family::{gen_family, Profile};
use crate::oracle::{riemann_oracle, OracleQuery};
use crate::signs::{derive_seed, SignVector};

/// One named check: the worst observed value against its threshold.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub worst: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl Check {
    pub fn at_most(name: impl Into<String>, worst: f64, threshold: f64) -> Self {
        Check {
            name: name.into(),
            worst,
            threshold,
            pass: worst <= threshold,
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.pass { "PASS" } else { "FAIL" };
        write!(
            f,
            "{verdict} {}: worst {:.3e} (threshold {:.3e})",
            self.name, self.worst, self.threshold
        )
    }
}

pub fn random_index(
    rng: &mut ChaCha8Rng,
    n: usize,
    levels: std::ops::Range<i32>,
    spread: i64,
) -> HaarIndex {
    let k = rng.random_range(levels);
    let span = spread << k.max(0);
    let idx: Vec<i64> = (0..n)
        .map(|_| rng.random_range(-span..span.max(1)))
        .collect();
    HaarIndex::new(
        DyadicCube::new(k, &idx).expect("level window"),
        rng.random_range(1..(1u8 << n)),
    )
    .expect("signature")
}

pub fn random_expansion(
    rng: &mut ChaCha8Rng,
    n: usize,
    count: usize,
    levels: std::ops::Range<i32>,
    spread: i64,
) -> FiniteHaarExpansion {
    let mut f = FiniteHaarExpansion::new(n).expect("dimension");
    for _ in 0..count {
        f.add_term(
            random_index(rng, n, levels.clone(), spread),
            rng.random_range(-1.0..1.0),
        )
        .expect("dimension");
    }
    f
}

// ---------------------------------------------------------------- Haar suite

/// Orthonormality, Parseval, round trip, telescoping and projection algebra on
/// `instances` random expansions in one and two dimensions.
pub fn haar_suite(instances: usize, seed: u64) -> Result<Vec<Check>> {
    let per: Vec<Result<[f64; 5]>> = (0..instances)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &format!("haar/{t}")));
            let n = 1 + t % 2;
            let (levels, spread) = if n == 1 { (-1..4, 2) } else { (-1..3, 1) };
            let f = {
                let count = rng.random_range(1..=32);
                random_expansion(&mut rng, n, count, levels, spread)
            };

            let a = random_index(&mut rng, n, -1..3, 2);
            let b = if rng.random_bool(0.3) {
                a
            } else {
                random_index(&mut rng, n, -1..3, 2)
            };
            let ip = a.function().to_step().inner_haar(&b.function())?;
            let ortho = (ip - if a == b { 1.0 } else { 0.0 }).abs();

            let g = synthesize(&f)?;
            let parseval =
                (g.lp_norm(2.0, None)?.powi(2) - f.l2_norm_sq()).abs() / f.l2_norm_sq().max(1e-300);

            let (lo, hi) = (
                f.coarsest_level().unwrap_or(0),
                f.finest_level().unwrap_or(0),
            );
            let back = analyze(&g, lo, hi)?;
            let mut trip: f64 = 0.0;
            for (h, alpha) in f.iter() {
                trip = trip.max((back.get(h) - alpha).abs());
            }
            if back.len() > f.len() {
                trip = trip.max(
                    back.iter()
                        .filter(|(h, _)| f.get(h) == 0.0)
                        .map(|(_, v)| v.abs())
                        .fold(0.0, f64::max),
                );
            }

            // Σ_{k=a}^{b} D_k g = E_{b+1} g - E_a g
            let (ka, kb) = (rng.random_range(-2..2), rng.random_range(2..5));
            let mut sum = StepFunction::zero(n);
            for k in ka..=kb {
                sum = sum.add(&g.project_d(k)?)?;
            }
            let tele = sum.max_abs_diff(&g.project_e(kb + 1).sub(&g.project_e(ka))?)?;

            let (j, k) = (rng.random_range(-2..5), rng.random_range(-2..5));
            let mut algebra = 0.0;
            if f.project_e(k).project_e(j) != f.project_e(k.min(j))
                || f.project_d(k).project_d(k) != f.project_d(k)
                || (j != k && !f.project_d(k).project_d(j).is_empty())
                || (j >= k && !f.project_d(j).project_e(k).is_empty())
            {
                algebra = 1.0;
            }
            Ok([ortho, parseval, trip, tele, algebra])
        })
        .collect();
    let mut worst = [0.0f64; 5];
    for r in per {
        let r = r?;
        for i in 0..5 {
            worst[i] = worst[i].max(r[i]);
        }
    }
    let names = [
        "orthonormality",
        "parseval",
        "round-trip",
        "telescoping",
        "projection-algebra",
    ];
    Ok(names
        .iter()
        .zip(worst)
        .map(|(n, w)| {
            Check::at_most(
                *n,
                w,
                if *n == "projection-algebra" {
                    0.0
                } else {
                    1e-12
                },
            )
        })
        .collect())
}

// ---------------------------------------------------------------- Σ suite

fn interval_set(lo: i64, hi: i64) -> DyadicSet {
    DyadicSet::from_cubes(
        1,
        (lo..hi).map(|m| DyadicCube::new(0, &[m]).expect("unit cube")),
    )
    .expect("dimension")
}

/// The unit-interval examples plus minimality and monotonicity on `count` random `f`.
pub fn sigma_suite(count: usize, seed: u64) -> Result<Vec<Check>> {
    let h =
        FiniteHaarExpansion::from_terms(1, [(HaarIndex::new(DyadicCube::new(0, &[0])?, 1)?, 1.0)])?;
    let hand0 = sigma_set(&h, 0)?.sigma == interval_set(-4, 5);
    let hand1 = sigma_set(&h, 1)?.sigma == interval_set(-8, 10);
    let mut checks = vec![
        Check::at_most(
            "single coefficient, s = 0: Σ = [-4, 5)",
            if hand0 { 0.0 } else { 1.0 },
            0.0,
        ),
        Check::at_most(
            "single coefficient, s = 1: Σ = [-8, 10)",
            if hand1 { 0.0 } else { 1.0 },
            0.0,
        ),
    ];
    let per: Vec<Result<(usize, usize)>> = (0..count)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &format!("sigma/{t}")));
            let n = 1 + t % 2;
            let f = {
                let count = rng.random_range(1..=24);
                random_expansion(&mut rng, n, count, -1..4, 2)
            };
            let s = rng.random_range(0..4u32);
            let mut minimal = 0;
            for level in f.levels() {
                let k = level - s as i32;
                let cubes = omega_cubes(&f, s, k)?;
                let d = synthesize(&f.project_d(level))?;
                let covered = f
                    .cubes_at(level)
                    .iter()
                    .all(|c| cubes.iter().any(|q| q.contains(c)));
                let tight = cubes
                    .iter()
                    .all(|q| q.level() == k && d.cells().any(|(c, v)| v != 0.0 && q.contains(&c)));
                minimal += usize::from(!(covered && tight));
            }
            let full = sigma_set(&f, s)?.sigma;
            let keep: Vec<HaarIndex> = f
                .coefficients()
                .keys()
                .filter(|_| rng.random_bool(0.5))
                .copied()
                .collect();
            let part = sigma_set(&f.filter(|h| keep.contains(h)), s)?.sigma;
            let mut monotone = usize::from(!part.is_subset_of(&full));
            monotone += usize::from(!full.is_subset_of(&sigma_set(&f, s + 1)?.sigma));
            monotone += usize::from(!f.support_cover().is_subset_of(&full));
            Ok((minimal, monotone))
        })
        .collect();
    let (mut minimal, mut monotone) = (0, 0);
    for r in per {
        let (a, b) = r?;
        minimal += a;
        monotone += b;
    }
    checks.push(Check::at_most("Ω_k minimal covers", minimal as f64, 0.0));
    checks.push(Check::at_most(
        "Σ monotone in f and s, contains supp f",
        monotone as f64,
        0.0,
    ));
    Ok(checks)
}

// ---------------------------------------------------------------- oracle equivalence

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OracleCase {
    Apply,
    Cell,
    Pairing,
}

impl OracleCase {
    pub const ALL: [OracleCase; 3] = [OracleCase::Apply, OracleCase::Cell, OracleCase::Pairing];

    pub fn name(&self) -> &'static str {
        match self {
            OracleCase::Apply => "apply_t_offsupport",
            OracleCase::Cell => "cell_integral_truncated",
            OracleCase::Pairing => "haar_pairing",
        }
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-12)
}

/// A point at ℓ∞ distance between one and three sides from `c`.
fn point_near(rng: &mut ChaCha8Rng, c: &Aabb) -> f64 {
    let side = c.hi()[0] - c.lo()[0];
    if rng.random_bool(0.5) {
        c.hi()[0] + side * rng.random_range(1.0..3.0)
    } else {
        c.lo()[0] - side * rng.random_range(1.0..3.0)
    }
}

/// Worst relative disagreement with the midpoint oracle over `cases` random
/// one-dimensional configurations for the Hilbert kernel.
pub fn oracle_equivalence(case: OracleCase, cases: usize, seed: u64) -> Result<Check> {
    let k = KernelSpec::hilbert(1.0);
    let mut worst: f64 = 0.0;
    for t in 0..cases {
        let mut rng =
            ChaCha8Rng::seed_from_u64(derive_seed(seed, &format!("oracle/{}/{t}", case.name())));
        let err = match case {
            OracleCase::Apply => {
                let f = {
                    let count = rng.random_range(1..=4);
                    random_expansion(&mut rng, 1, count, 0..3, 1)
                };
                let hull = f.support_cover().hull().expect("non-empty");
                let x = [point_near(&mut rng, &hull)];
                let v = apply_t_offsupport(&k, &f, &x)?;
                let pieces = synthesize(&f)?.pieces();
                rel(
                    v,
                    riemann_oracle(
                        &k,
                        &OracleQuery::Apply {
                            x: &x,
                            pieces: &pieces,
                            eps: 0.0,
                        },
                        16,
                    )?,
                )
            }
            OracleCase::Cell => {
                let c = DyadicCube::new(rng.random_range(-1..4), &[rng.random_range(-4..4)])?;
                let x = [point_near(&mut rng, &c.aabb())];
                let v = k.cell_integral_truncated(&x, &c, 0.0)?;
                rel(
                    v,
                    riemann_oracle(
                        &k,
                        &OracleQuery::Box {
                            x: &x,
                            bx: &c.aabb(),
                            eps: 0.0,
                        },
                        20,
                    )?,
                )
            }
            OracleCase::Pairing => {
                let j = HaarFunction::Cancellative(HaarIndex::new(DyadicCube::new(0, &[0])?, 1)?);
                let level = rng.random_range(0..3);
                let x0 = point_near(&mut rng, &Aabb::interval(0.0, 1.0));
                let i = DyadicCube::containing(level, &[x0])?;
                let hi = if rng.random_bool(0.5) {
                    HaarFunction::Cancellative(HaarIndex::new(i, 1)?)
                } else {
                    HaarFunction::Average(i)
                };
                let v = haar_pairing(&k, &j, &hi, 0.0)?;
                let (a, b) = (j.pieces(), hi.pieces());
                rel(
                    v,
                    riemann_oracle(
                        &k,
                        &OracleQuery::Pairing {
                            a: &a,
                            b: &b,
                            eps: 0.0,
                        },
                        10,
                    )?,
                )
            }
        };
        worst = worst.max(err);
    }
    Ok(Check::at_most(
        format!("{} vs midpoint oracle ({cases} cases)", case.name()),
        worst,
        1e-5,
    ))
}

// ---------------------------------------------------------------- Ψ coefficients

/// `psi_haar_coeff` against quadrature of `Ψ_s h` on `per_class` random
/// configurations for each coefficient class.
pub fn psi_coefficient_check(
    kernel: &KernelSpec,
    per_class: usize,
    seed: u64,
    tol: f64,
) -> Result<Vec<Check>> {
    let classes = [
        (PsiClass::Haar11, 1u8, 1u8),
        (PsiClass::Haar01, 0, 1),
        (PsiClass::Haar10, 1, 0),
    ];
    let mut out = Vec::new();
    for (class, theta, zeta) in classes {
        let errs: Vec<Result<f64>> = (0..per_class)
            .into_par_iter()
            .map(|t| {
                let mut rng =
                    ChaCha8Rng::seed_from_u64(derive_seed(seed, &format!("psi/{class:?}/{t}")));
                let s = rng.random_range(0..3u32);
                let l = DyadicCube::new(rng.random_range(0..3), &[rng.random_range(-2..2)])?;
                let m = rng.random_range(-14i64..14) << s;
                let kc = l.translate(&[m]);
                let c = psi_haar_coeff(kernel, s, &kc, theta, &l, zeta)?;
                debug_assert_eq!(c.class, class);
                let q = psi_coeff_quadrature(kernel, s, &kc, theta, &l, zeta, 2)?;
                Ok((c.value - q).abs())
            })
            .collect();
        let mut worst: f64 = 0.0;
        for e in errs {
            worst = worst.max(e?);
        }
        out.push(Check::at_most(
            format!("{class:?} closed form vs quadrature"),
            worst,
            tol,
        ));
    }
    Ok(out)
}

// ---------------------------------------------------------------- kernel conformance

#[derive(Clone, Debug, PartialEq)]
pub struct KernelConformance {
    pub c_size: f64,
    pub c_holder: f64,
    pub normalized_scale: f64,
    pub normalized_size: f64,
    pub normalized_holder: f64,
}

pub fn kernel_conformance(
    kernel: &KernelSpec,
    samples: usize,
    seed: u64,
) -> Result<KernelConformance> {
    let v = kernel.clone().verified(samples, seed);
    let r = v.measured.clone().expect("just verified");
    let norm = v.normalize()?;
    let again = norm.verify_standard_estimates(samples, seed.wrapping_add(1));
    Ok(KernelConformance {
        c_size: r.c_size,
        c_holder: r.c_holder,
        normalized_scale: norm.scale,
        normalized_size: again.c_size,
        normalized_holder: again.c_holder,
    })
}

// ---------------------------------------------------------------- unconditionality

#[derive(Clone, Debug, PartialEq)]
pub struct UncondEstimate {
    /// `max ‖Σ ε α h‖_p / ‖f‖_p` over the draws.
    pub constant: f64,
    /// `max |ratio - 1|` (zero in exact arithmetic at `p = 2`).
    pub max_deviation_from_one: f64,
    pub trials: usize,
}

/// A lower bound for the unconditionality constant of the Haar system in `L^p`.
pub fn unconditionality_check(p: f64, trials: usize, seed: u64) -> Result<UncondEstimate> {
    if trials == 0 {
        return Err(HarnessError::InvalidArgument("at least one trial".into()));
    }
    let ratios: Vec<Result<f64>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let f = gen_family(
                derive_seed(seed, &format!("uncond/{t}")),
                1,
                Profile::RandomSparse,
                1,
                p,
            )?
            .remove(0);
            let eps = SignVector::new(derive_seed(seed, &format!("signs/{t}")));
            let a = synthesize(&eps.apply(&f))?.lp_norm(p, None)?;
            let b = synthesize(&f)?.lp_norm(p, None)?;
            Ok(a / b)
        })
        .collect();
    let mut constant: f64 = 0.0;
    let mut dev: f64 = 0.0;
    for r in ratios {
        let r = r?;
        constant = constant.max(r);
        dev = dev.max((r - 1.0).abs());
    }
    Ok(UncondEstimate {
        constant,
        max_deviation_from_one: dev,
        trials,
    })
}

// ---------------------------------------------------------------- decomposition

#[derive(Clone, Debug, PartialEq)]
pub struct CaseReport {
    pub f_id: usize,
    pub s: u32,
    pub max_discrepancy: f64,
    pub tail_budget: f64,
    pub points: usize,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecompositionReport {
    pub cases: Vec<CaseReport>,
    pub tolerance: f64,
    pub pass: bool,
}

/// `points` uniform samples of `Σ^c` inside the cube of twice the hull of `Σ`.
pub fn complement_points(sigma: &DyadicSet, points: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let hull = sigma.hull().expect("non-empty Σ");
    let n = hull.dim();
    let c = hull.center();
    let half = (0..n)
        .map(|i| 0.5 * (hull.hi()[i] - hull.lo()[i]))
        .fold(0.0, f64::max);
    let mut out = Vec::with_capacity(points);
    while out.len() < points {
        let x: Vec<f64> = (0..n)
            .map(|i| c[i] + rng.random_range(-2.0 * half..2.0 * half))
            .collect();
        if !sigma.contains_point(&x) {
            out.push(x);
        }
    }
    out
}

/// Checks `1_{Σ^c} T f = 1_{Σ^c}(Φ̃_s f + Ψ_s f)` pointwise on the random-sparse
/// family of `cfg` for `s` in its range.
pub fn decomposition_check(
    cfg: &ExperimentConfig,
    points: usize,
    tolerance: f64,
) -> Result<DecompositionReport> {
    let kernel = cfg.kernel_spec();
    let family = gen_family(
        cfg.seed,
        cfg.family_size,
        Profile::RandomSparse,
        cfg.dim,
        2.0,
    )?;
    let budget = TruncationBudget::new(cfg.m_radius);
    let jobs: Vec<(usize, u32)> = (0..family.len())
        .flat_map(|i| cfg.s_values().map(move |s| (i, s)))
        .collect();
    let cases: Vec<Result<CaseReport>> = jobs
        .par_iter()
        .map(|&(f_id, s)| {
            let f = &family[f_id];
            let sigma = sigma_set(f, s)?.sigma;
            let phi = phi_tilde_apply(&kernel, f, s, &budget)?;
            let psi = PsiEvaluator::new(&kernel, f, s)?;
            let mut rng =
                ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &format!("decompose/{f_id}/{s}")));
            let mut worst: f64 = 0.0;
            for x in complement_points(&sigma, points, &mut rng) {
                let t = apply_t_offsupport(&kernel, f, &x)?;
                let d = phi.value.eval(&x) + psi.eval(&x)?;
                worst = worst.max((t - d).abs());
            }
            Ok(CaseReport {
                f_id,
                s,
                max_discrepancy: worst,
                tail_budget: phi.tail,
                points,
                pass: worst <= phi.tail + tolerance,
            })
        })
        .collect();
    let cases = cases.into_iter().collect::<Result<Vec<_>>>()?;
    let pass = cases.iter().all(|c| c.pass);
    Ok(DecompositionReport {
        cases,
        tolerance,
        pass,
    })
}

// ---------------------------------------------------------------- symmetry

/// Worst change of the decay ratios under one dyadic dilation and under a
/// translation by `m` sides of the `s_max`-th ancestor of the coarsest cube.
pub fn symmetry_check(cfg: &ExperimentConfig, m: i64) -> Result<(f64, f64)> {
    let kernel = cfg.kernel_spec();
    let mut jobs = Vec::new();
    for &p in &cfg.ps {
        for (f_id, f) in gen_family(cfg.seed, cfg.family_size, cfg.profile, cfg.dim, p)?
            .into_iter()
            .enumerate()
        {
            for s in cfg.s_values() {
                jobs.push((p, f_id, f.clone(), s));
            }
        }
    }
    let diffs: Vec<Result<(f64, f64)>> = jobs
        .par_iter()
        .map(|(p, _, f, s)| {
            let ratio = |g: &FiniteHaarExpansion| -> Result<f64> {
                let r = crate::decay::auto_radius(g, cfg.s_max)?;
                let (norm, _) = sigma_norm(&kernel, g, *s, *p, Some(r), cfg.tol)?;
                Ok(norm / synthesize(g)?.lp_norm(*p, None)?)
            };
            let base = ratio(f)?;
            let dil = ratio(&f.dilate(1)?)?;
            // Σ is built from ancestors up to s_max levels above the coarsest cube,
            // so only shifts by their side carry Σ along
            let coarse = f.coarsest_level().unwrap_or(0) - cfg.s_max as i32;
            let mv = vec![m; f.dim()];
            let tr = ratio(&f.translate(&mv, coarse)?)?;
            Ok(((dil - base).abs() / base, (tr - base).abs() / base))
        })
        .collect();
    let (mut a, mut b): (f64, f64) = (0.0, 0.0);
    for d in diffs {
        let (x, y) = d?;
        a = a.max(x);
        b = b.max(y);
    }
    Ok((a, b))
}

// ---------------------------------------------------------------- operator-norm sweeps

/// Cancellative Haar indices (one dimension) at `levels` inside `[0, width)`.
pub fn window_basis(levels: std::ops::RangeInclusive<i32>, width: i64) -> Vec<HaarIndex> {
    let mut out = Vec::new();
    for k in levels {
        let count = if k >= 0 { width << k } else { width >> (-k) };
        for m in 0..count {
            out.push(
                HaarIndex::new(DyadicCube::new(k, &[m]).expect("level window"), 1)
                    .expect("signature"),
            );
        }
    }
    out
}

/// Eight levels on `[0, 256)`. Narrower spans saturate before `m = 64` and the
/// lower bounds then fall off as the shifted copies leave the window.
pub fn shift_basis() -> Vec<HaarIndex> {
    window_basis(-3..=4, 256)
}

pub const SHIFT_TRIALS: usize = 2;

/// Lower bounds for `‖Ψ_s‖_{2→2}` on the span of `basis`.
pub fn psi_norm_sweep(
    kernel: &KernelSpec,
    s_values: &[u32],
    basis: &[HaarIndex],
    trials: usize,
    seed: u64,
) -> Result<Vec<(u32, f64)>> {
    let mut out = Vec::new();
    for &s in s_values {
        let op = PsiSection::new(kernel, s, basis.to_vec(), 3)?;
        out.push((s, opnorm_lower_bound(&op, 2.0, trials, seed)?.value));
    }
    Ok(out)
}

/// Lower bounds for `‖U_m‖_{p→p}` on the span of `basis`.
pub fn shift_norm_sweep(
    ms: &[i64],
    basis: &[HaarIndex],
    p: f64,
    trials: usize,
    seed: u64,
) -> Result<Vec<(i64, f64)>> {
    let mut out = Vec::new();
    for &m in ms {
        let op = ShiftOperator {
            spec: ShiftSpec::u(&[m]),
            basis: basis.to_vec(),
        };
        out.push((m, opnorm_lower_bound(&op, p, trials, seed)?.value));
    }
    Ok(out)
}

/// `figiel_condition_sum` at `M` and `2M` for each `s`.
pub fn figiel_sweep(
    kernel: &KernelSpec,
    s_values: &[u32],
    m_radius: i64,
    samples: &[DyadicCube],
) -> Result<Vec<(FigielSum, FigielSum)>> {
    let mut out = Vec::new();
    for &s in s_values {
        let a = figiel_condition_sum(kernel, s, &TruncationBudget::new(m_radius), samples)?;
        let b = figiel_condition_sum(kernel, s, &TruncationBudget::new(2 * m_radius), samples)?;
        out.extend(a.into_iter().zip(b));
    }
    Ok(out)
}
