//! Acceptance run: one PASS/FAIL line per criterion, then a non-zero exit if
//! any of them failed.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use pseudoloc_core::dyadic::DyadicCube;
use pseudoloc_core::kernel::KernelSpec;
use pseudoloc_harness::checks::{
    decomposition_check, figiel_sweep, haar_suite, kernel_conformance, oracle_equivalence,
    psi_coefficient_check, psi_norm_sweep, shift_basis, shift_norm_sweep, sigma_suite,
    symmetry_check, window_basis, Check, OracleCase, SHIFT_TRIALS,
};
use pseudoloc_harness::decay::EXPERIMENT;
use pseudoloc_harness::slope::least_squares;
use pseudoloc_harness::{fit_slope, run_decay, ExperimentConfig};

const SEED: u64 = 1;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn of(pass: bool, detail: impl Into<String>) -> Self {
        Outcome {
            pass,
            detail: detail.into(),
        }
    }

    fn checks(checks: &[Check]) -> Self {
        let pass = checks.iter().all(|c| c.pass);
        let detail = checks
            .iter()
            .map(|c| format!("{} {:.2e}/{:.0e}", c.name, c.worst, c.threshold))
            .collect::<Vec<_>>()
            .join("; ");
        Outcome { pass, detail }
    }

    fn within(mut self, elapsed: Duration, limit: Duration) -> Self {
        if elapsed > limit {
            self.pass = false;
        }
        self.detail = format!("{} [{:.1?} of {:.0?}]", self.detail, elapsed, limit);
        self
    }
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let t = Instant::now();
    let v = f();
    (v, t.elapsed())
}

fn haar() -> Outcome {
    let (checks, dt) = timed(|| haar_suite(1000, SEED).expect("haar suite"));
    Outcome::checks(&checks).within(dt, Duration::from_secs(10))
}

fn sigma() -> Outcome {
    Outcome::checks(&sigma_suite(200, SEED).expect("sigma suite"))
}

fn oracle() -> Outcome {
    let (checks, dt) = timed(|| {
        OracleCase::ALL
            .iter()
            .map(|c| oracle_equivalence(*c, 100, SEED).expect("oracle run"))
            .collect::<Vec<_>>()
    });
    Outcome::checks(&checks).within(dt, Duration::from_secs(120))
}

fn decomposition() -> Outcome {
    let mut cfg = ExperimentConfig::default();
    cfg.family_size = 20;
    cfg.s_min = 0;
    cfg.s_max = 4;
    cfg.m_radius = 64;
    let (report, dt) = timed(|| decomposition_check(&cfg, 100, 1e-3).expect("decomposition"));
    let worst = report
        .cases
        .iter()
        .map(|c| c.max_discrepancy - c.tail_budget)
        .fold(f64::NEG_INFINITY, f64::max);
    Outcome::of(
        report.pass,
        format!(
            "{} cases, worst discrepancy - tail {worst:.2e} (≤ 1e-3)",
            report.cases.len()
        ),
    )
    .within(dt, Duration::from_secs(600))
}

fn psi_coefficients() -> Outcome {
    Outcome::checks(
        &psi_coefficient_check(&KernelSpec::hilbert(1.0), 50, SEED, 1e-4).expect("Ψ coefficients"),
    )
}

fn decay() -> Outcome {
    // one-sided: slope of log₂(ratio/(1+s)) over s ∈ [3, 8]
    let thresholds = [(1.5, -0.35), (2.0, -0.35), (3.0, -0.52), (4.0, -0.60)];
    let cfg = ExperimentConfig::default();
    let (run, dt) = timed(|| run_decay(&cfg).expect("decay run"));
    let fits = fit_slope(&run.rows, (3, 8), true).expect("slope fit");
    let mut pass = run.failures() == 0;
    let mut parts = Vec::new();
    for (p, limit) in thresholds {
        let fit = fits.iter().find(|f| f.experiment == EXPERIMENT && f.p == p);
        match fit {
            Some(f) => {
                pass &= f.slope <= limit;
                parts.push(format!("p={p} slope {:.3} (≤ {limit})", f.slope));
            }
            None => {
                pass = false;
                parts.push(format!("p={p} missing"));
            }
        }
    }
    parts.push(format!("{} flagged rows", run.failures()));
    Outcome::of(pass, parts.join(", ")).within(dt, Duration::from_secs(1800))
}

fn slope_without_poly(values: &[(u32, f64)]) -> f64 {
    let xs: Vec<f64> = values.iter().map(|(s, _)| *s as f64).collect();
    let ys: Vec<f64> = values
        .iter()
        .map(|(s, v)| (v / (1.0 + *s as f64)).log2())
        .collect();
    least_squares(&xs, &ys).expect("fit").0
}

fn psi_norm() -> Outcome {
    let basis = window_basis(0..=2, 2);
    let s: Vec<u32> = (0..=6).collect();
    let h = psi_norm_sweep(&KernelSpec::hilbert(1.0), &s, &basis, 8, SEED).expect("Ψ sweep");
    let w =
        psi_norm_sweep(&KernelSpec::weierstrass(0.5, 1.0), &s, &basis, 8, SEED).expect("Ψ sweep");
    let (sh, sw) = (slope_without_poly(&h), slope_without_poly(&w));
    Outcome::of(
        sh <= -0.8 && sw <= -0.3,
        format!("hilbert1d slope {sh:.3} (≤ -0.8), weierstrass1d γ=0.5 slope {sw:.3} (≤ -0.3)"),
    )
}

fn figiel() -> Outcome {
    let samples: Vec<DyadicCube> = (0..=2)
        .flat_map(|lvl| (0..(2i64 << lvl)).map(move |i| DyadicCube::new(lvl, &[i]).expect("cube")))
        .collect();
    let s: Vec<u32> = (0..=4).collect();
    let sums = figiel_sweep(&KernelSpec::hilbert(1.0), &s, 64, &samples).expect("Figiel sums");
    let mut combined: BTreeMap<u32, (f64, f64)> = BTreeMap::new();
    let mut moves_ok = true;
    let mut class_ok = true;
    for (a, b) in &sums {
        moves_ok &= (b.value - a.value).abs() <= a.tail;
        class_ok &= a.value <= 10.0 * a.bound;
        let e = combined.entry(a.s).or_insert((0.0, a.bound));
        e.0 += a.value;
    }
    let ratios: Vec<f64> = combined.values().map(|(v, b)| v / b).collect();
    let hi = ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let band = hi / lo;
    Outcome::of(
        band <= 10.0 && moves_ok && class_ok,
        format!(
            "summed over classes: ratio band {band:.2} (≤ 10), each class ≤ 10·bound: {class_ok}, \
             doubling M within tail: {moves_ok}"
        ),
    )
}

fn shift_law() -> Outcome {
    let ms: Vec<i64> = (0..=6).map(|j| 1i64 << j).collect();
    let v = shift_norm_sweep(&ms, &shift_basis(), 2.0, SHIFT_TRIALS, SEED).expect("shift sweep");
    let logs: Vec<f64> = v.iter().map(|(m, _)| (2.0 + *m as f64).ln()).collect();
    // growth exponent β in v ∝ log(2+m)^β; β ≤ 1 is domination by c·log(2+m)
    let (beta, _, _) = least_squares(
        &logs.iter().map(|l| l.ln()).collect::<Vec<_>>(),
        &v.iter().map(|(_, x)| x.ln()).collect::<Vec<_>>(),
    )
    .expect("fit");
    let c = v
        .iter()
        .zip(&logs)
        .map(|((_, x), l)| x / l)
        .fold(0.0, f64::max);
    let mut running: f64 = 0.0;
    let mut worst_drop: f64 = 0.0;
    for (_, x) in &v {
        worst_drop = worst_drop.max(1.0 - x / running.max(*x));
        running = running.max(*x);
    }
    let values = v
        .iter()
        .map(|(m, x)| format!("{m}:{x:.3}"))
        .collect::<Vec<_>>()
        .join(" ");
    Outcome::of(
        beta <= 1.0 && worst_drop <= 0.05,
        format!(
            "{values}; c = {c:.3}, growth exponent {beta:.3} (≤ 1), largest drop {:.1}% (≤ 5%)",
            100.0 * worst_drop
        ),
    )
}

fn kernel() -> Outcome {
    let k = kernel_conformance(&KernelSpec::hilbert(1.0), 512, SEED).expect("conformance");
    let pass = (k.c_size - 1.0).abs() <= 1e-9
        && k.c_holder <= 2.0 + 1e-6
        && k.normalized_size <= 1.0 + 1e-6
        && k.normalized_holder <= 1.0 + 1e-6;
    Outcome::of(
        pass,
        format!(
            "C_size {:.12}, C_hölder {:.9}; normalised {:.9} / {:.9}",
            k.c_size, k.c_holder, k.normalized_size, k.normalized_holder
        ),
    )
}

fn symmetry() -> Outcome {
    let cfg = ExperimentConfig::default();
    let (dil, tr) = symmetry_check(&cfg, 3).expect("symmetry");
    Outcome::of(
        dil <= 1e-9 && tr <= 1e-9,
        format!("dilation {dil:.1e}, translation {tr:.1e} (≤ 1e-9)"),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("1 haar invariants", haar),
        ("2 sigma construction", sigma),
        ("3 oracle equivalence", oracle),
        ("4 decomposition identity", decomposition),
        ("5 psi coefficient identities", psi_coefficients),
        ("6 decay reproduction", decay),
        ("7 psi norm decay", psi_norm),
        ("8 figiel summability", figiel),
        ("9 shift operator law", shift_law),
        ("10 kernel conformance", kernel),
        ("11 symmetry invariants", symmetry),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let o = run();
        if !o.pass {
            failed += 1;
        }
        println!(
            "{} criterion {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    println!("acceptance: {} of 11 passed", 11 - failed);
    assert_eq!(failed, 0, "{failed} acceptance criteria failed");
}
