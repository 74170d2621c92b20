//! The decay experiment: `‖1_{Σ^c} T f‖_p / ‖f‖_p` over a family and a range of `s`.

use std::fmt;

use pseudoloc_core::dyadic::DyadicSet;
use pseudoloc_core::haar::{pow_abs, synthesize, FiniteHaarExpansion, StepFunction};
use pseudoloc_core::kernel::{KernelFamily, KernelSpec};
use pseudoloc_core::operators::restricted_lp_norm;
use pseudoloc_core::quadrature::{integrate, QuadOptions};
use pseudoloc_core::sigma::{decay_exponent, q_expansion_of, sigma_set};
use pseudoloc_core::Error as CoreError;
use rayon::prelude::*;

use crate::config::{Derived, ExperimentConfig};
use crate::error::{HarnessError, Result};
use crate::family::gen_family;

pub const EXPERIMENT: &str = "pseudoloc";
pub const EXPERIMENT_Q: &str = "pseudoloc-q";
pub const EXPERIMENT_L1: &str = "prior-work-cross-check-l1";

#[derive(Clone, Debug, PartialEq)]
pub enum RowStatus {
    Ok,
    /// A quadrature or truncation budget ran out; the row carries no ratio.
    BudgetExceeded(String),
    Failed(String),
}

impl RowStatus {
    pub fn is_ok(&self) -> bool {
        matches!(self, RowStatus::Ok)
    }
}

impl fmt::Display for RowStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RowStatus::Ok => f.write_str("ok"),
            RowStatus::BudgetExceeded(m) => write!(f, "budget-exceeded: {m}"),
            RowStatus::Failed(m) => write!(f, "failed: {m}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecayRow {
    pub experiment: &'static str,
    pub kernel: String,
    pub n: usize,
    pub gamma: f64,
    pub p: f64,
    pub s: u32,
    pub f_id: usize,
    /// `NaN` unless the status is `Ok`.
    pub ratio: f64,
    pub tail_budget: f64,
    pub status: RowStatus,
}

#[derive(Clone, Debug)]
pub struct DecayRun {
    pub rows: Vec<DecayRow>,
    /// `max(C_size, C_hölder)` of the kernel, divided out of every `pseudoloc` ratio.
    pub constant: f64,
    pub derived: Vec<Derived>,
}

impl DecayRun {
    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| !r.status.is_ok()).count()
    }
}

fn status_of(e: &HarnessError) -> RowStatus {
    match e {
        HarnessError::Core(CoreError::QuadratureDepth { .. }) => {
            RowStatus::BudgetExceeded(e.to_string())
        }
        _ => RowStatus::Failed(e.to_string()),
    }
}

/// Half-side of the hull of `Σ` and its centre.
fn hull_half(sigma: &DyadicSet) -> Result<f64> {
    let hull = sigma
        .hull()
        .ok_or_else(|| HarnessError::InvalidArgument("empty Σ".into()))?;
    Ok((0..hull.dim())
        .map(|i| 0.5 * (hull.hi()[i] - hull.lo()[i]))
        .fold(0.0, f64::max))
}

/// The box radius grows by this factor until the outside bound is small.
const RADIUS_STEP: f64 = 4.0;
const MAX_RADIUS_STEPS: u32 = 12;
/// Target for `tail / norm`.
pub const TAIL_FRACTION: f64 = 1e-3;

/// `(norm, budget)` of `‖1_{Σ_{f,s}^c} T f‖_p` before normalisation. The box
/// starts at `radius` (or the library default) and is enlarged until the bound
/// for the region outside it drops below [`TAIL_FRACTION`] of the norm.
pub fn sigma_norm(
    kernel: &KernelSpec,
    f: &FiniteHaarExpansion,
    s: u32,
    p: f64,
    radius: Option<f64>,
    tol: f64,
) -> Result<(f64, f64)> {
    let sigma = sigma_set(f, s)?.sigma;
    let mut r = restricted_lp_norm(kernel, f, &sigma, p, radius, tol)?;
    for _ in 0..MAX_RADIUS_STEPS {
        if r.tail <= TAIL_FRACTION * r.norm {
            break;
        }
        r = restricted_lp_norm(kernel, f, &sigma, p, Some(r.radius * RADIUS_STEP), tol)?;
    }
    Ok((r.norm, r.budget()))
}

/// Twice the hull half-side of `Σ_{f,s}` at the largest `s`.
pub fn auto_radius(f: &FiniteHaarExpansion, s_max: u32) -> Result<f64> {
    Ok(2.0 * hull_half(&sigma_set(f, s_max)?.sigma)?)
}

struct Job {
    experiment: &'static str,
    p: f64,
    s: u32,
    f_id: usize,
}

/// Runs the grid `(experiment, p, f, s)`; rows come back in that order.
pub fn run_decay(cfg: &ExperimentConfig) -> Result<DecayRun> {
    cfg.validate()?;
    if cfg.q_cube && cfg.kernel != KernelFamily::Hilbert1d {
        return Err(HarnessError::Config(
            "the Q-cube variant is defined for hilbert1d only".into(),
        ));
    }
    let kernel = cfg.kernel_spec().verified(cfg.verify_samples, cfg.seed);
    let constant = kernel.measured_constant().expect("verified kernel");
    let gamma = cfg.gamma();

    let mut ps: Vec<(&'static str, f64)> = cfg.ps.iter().map(|&p| (EXPERIMENT, p)).collect();
    if cfg.q_cube {
        ps.extend(cfg.ps.iter().map(|&p| (EXPERIMENT_Q, p)));
    }
    if cfg.l1 {
        ps.push((EXPERIMENT_L1, 1.0));
    }
    let mut families = Vec::new();
    for &(_, p) in &ps {
        families.push(gen_family(
            cfg.seed,
            cfg.family_size,
            cfg.profile,
            cfg.dim,
            p,
        )?);
    }
    let mut jobs = Vec::new();
    for (pi, &(experiment, p)) in ps.iter().enumerate() {
        for f_id in 0..cfg.family_size {
            for s in cfg.s_values() {
                jobs.push((
                    pi,
                    Job {
                        experiment,
                        p,
                        s,
                        f_id,
                    },
                ));
            }
        }
    }
    let radii: Vec<Vec<Result<f64>>> = families
        .iter()
        .map(|fam| {
            fam.iter()
                .map(|f| {
                    cfg.radius
                        .map(Ok)
                        .unwrap_or_else(|| auto_radius(f, cfg.s_max))
                })
                .collect()
        })
        .collect();

    let rows = jobs
        .par_iter()
        .map(|(pi, job)| {
            let f = &families[*pi][job.f_id];
            let computed = (|| -> Result<(f64, f64)> {
                let fp = synthesize(f)?.lp_norm(job.p, None)?;
                match job.experiment {
                    EXPERIMENT_Q => {
                        let q = q_variant(f, job.s, job.p, cfg.tol)?;
                        Ok((q.norm / fp, q.budget / fp))
                    }
                    _ => {
                        let r = match &radii[*pi][job.f_id] {
                            Ok(r) => *r,
                            Err(e) => return Err(HarnessError::InvalidArgument(e.to_string())),
                        };
                        let (norm, budget) =
                            sigma_norm(&kernel, f, job.s, job.p, Some(r), cfg.tol)?;
                        // T ≡ 0 has constant 0 and norm 0
                        let c = if constant > 0.0 { constant } else { 1.0 };
                        Ok((norm / fp / c, budget / fp / c))
                    }
                }
            })();
            let (ratio, tail_budget, status) = match computed {
                Ok((r, b)) => (r, b, RowStatus::Ok),
                Err(e) => (f64::NAN, f64::NAN, status_of(&e)),
            };
            DecayRow {
                experiment: job.experiment,
                kernel: cfg.kernel.name().to_string(),
                n: cfg.dim,
                gamma,
                p: job.p,
                s: job.s,
                f_id: job.f_id,
                ratio,
                tail_budget,
                status,
            }
        })
        .collect();
    Ok(DecayRun {
        rows,
        constant,
        derived: cfg.derived(),
    })
}

/// A general cube `Q` together with `‖1_{Q^c} f‖_p / ‖f‖_p`.
#[derive(Clone, Debug, PartialEq)]
pub struct QCube {
    pub center: f64,
    pub side: f64,
    pub outside: f64,
}

/// The smallest cube with `‖1_{Q^c} f‖_p ≤ (1+s) 2^{-s e(p,γ)} ‖f‖_p` among
/// the dyadic intervals and their translates by half a side (one dimension).
///
/// The half-shifted grid is needed because no dyadic interval contains a
/// support that straddles a coarse dyadic point such as `0`.
pub fn select_q_cube(g: &StepFunction, s: u32, p: f64, gamma: f64) -> Result<QCube> {
    if g.dim() != 1 {
        return Err(HarnessError::InvalidArgument(
            "Q-cube selection is one-dimensional".into(),
        ));
    }
    let cells: Vec<(f64, f64, f64)> = g
        .cells()
        .filter(|(_, v)| *v != 0.0)
        .map(|(c, v)| (c.aabb().lo()[0], c.side_f64(), pow_abs(v, p) * c.side_f64()))
        .collect();
    let total: f64 = cells.iter().map(|c| c.2).sum();
    if total == 0.0 {
        return Err(HarnessError::InvalidArgument("f vanishes".into()));
    }
    let target = (1.0 + s as f64) * 2f64.powf(-(s as f64) * decay_exponent(p, gamma));
    let finest = g.level();
    for k in (finest - 64..=finest).rev() {
        let side = 2f64.powi(-k);
        let mut best: Option<(f64, f64)> = None;
        for shifted in [false, true] {
            if shifted && k == finest {
                continue;
            }
            let offset = if shifted { 0.5 * side } else { 0.0 };
            let mut mass = std::collections::BTreeMap::<i64, f64>::new();
            for &(lo, _, m) in &cells {
                let j = ((lo - offset) / side).floor() as i64;
                *mass.entry(j).or_insert(0.0) += m;
            }
            for (j, m) in mass {
                let corner = j as f64 * side + offset;
                if best.is_none_or(|(bm, _)| m > bm) {
                    best = Some((m, corner));
                }
            }
        }
        let (inside, corner) = best.expect("non-empty support");
        let outside = ((total - inside).max(0.0) / total).powf(1.0 / p);
        if outside <= target {
            return Ok(QCube {
                center: corner + 0.5 * side,
                side,
                outside,
            });
        }
    }
    Err(HarnessError::InvalidArgument(
        "no cube within 64 levels captures f".into(),
    ))
}

/// `(1/π) p.v.∫ f(y)/(x-y) dy` for a step function given as `(a, b, value)` pieces.
pub fn hilbert_pv(pieces: &[(f64, f64, f64)], x: f64) -> f64 {
    let mut s = 0.0;
    for &(a, b, v) in pieces {
        s += v * ((x - a).abs() / (x - b).abs()).ln();
    }
    s / std::f64::consts::PI
}

/// `(1/π) Σ_{k≥1} M_k / (x-c)^{k+1}` with `M_k = ∫ f(y)(y-c)^k dy`, the expansion
/// of `H f` away from the support. `M_0` is zero for a cancellative expansion and is
/// dropped: computed, it would be pure rounding and swamp the far field.
struct Multipole {
    center: f64,
    moments: Vec<f64>,
}

const MULTIPOLE_TERMS: usize = 40;

impl Multipole {
    fn new(pieces: &[(f64, f64, f64)], center: f64) -> Self {
        let moments = (1..=MULTIPOLE_TERMS)
            .map(|k| {
                let e = k as i32 + 1;
                pieces
                    .iter()
                    .map(|&(a, b, v)| v * ((b - center).powi(e) - (a - center).powi(e)) / e as f64)
                    .sum()
            })
            .collect();
        Multipole { center, moments }
    }

    fn eval(&self, x: f64) -> f64 {
        let u = 1.0 / (x - self.center);
        let mut pow = u * u;
        let mut s = 0.0;
        for m in &self.moments {
            s += m * pow;
            pow *= u;
        }
        s / std::f64::consts::PI
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QNorm {
    pub norm: f64,
    /// Quadrature error plus the bound for the region outside the box.
    pub budget: f64,
    pub factor: f64,
}

/// `‖1_{(Q*)^c} H f‖_p` with `H` the normalised Hilbert transform and `Q*` the cube
/// of the given centre and side.
pub fn q_norm(f: &FiniteHaarExpansion, center: f64, side: f64, p: f64, tol: f64) -> Result<QNorm> {
    let g = synthesize(f)?;
    let pieces: Vec<(f64, f64, f64)> = g
        .pieces()
        .iter()
        .filter(|(_, v)| *v != 0.0)
        .map(|(b, v)| (b.lo()[0], b.hi()[0], *v))
        .collect();
    if pieces.is_empty() {
        return Ok(QNorm {
            norm: 0.0,
            budget: 0.0,
            factor: 0.0,
        });
    }
    let a0 = pieces.iter().map(|t| t.0).fold(f64::INFINITY, f64::min);
    let b0 = pieces.iter().map(|t| t.1).fold(f64::NEG_INFINITY, f64::max);
    let (cf, hf) = (0.5 * (a0 + b0), 0.5 * (b0 - a0));
    let (q0, q1) = (center - 0.5 * side, center + 0.5 * side);
    // the bound below needs |x - c_f| ≥ 2 h_f; the margin keeps the tail small
    let r = 64.0 * hf.max((q0 - cf).abs()).max((q1 - cf).abs());
    let (lo, hi) = (cf - r, cf + r);
    let mut breaks: Vec<f64> = pieces.iter().flat_map(|t| [t.0, t.1]).collect();
    breaks.extend([q0, q1]);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let opts = QuadOptions {
        abs_tol: 0.0,
        rel_tol: tol,
        max_depth: 50,
        max_panels: 50_000,
    };
    let far = Multipole::new(&pieces, cf);
    let h = |x: f64| {
        let v = if (x - cf).abs() >= 4.0 * hf {
            far.eval(x)
        } else {
            hilbert_pv(&pieces, x)
        };
        pow_abs(v, p)
    };
    let mut res = integrate(h, lo, q0.max(lo).min(hi), &breaks, &opts);
    res = res.merge(integrate(h, q1.min(hi).max(lo), hi, &breaks, &opts));
    let integral = res.into_result(&opts)?;

    // |Hf(x)| ≤ (2/π) ‖f‖₁ h_f / |x - c_f|² once |x - c_f| ≥ 2 h_f (f has mean zero)
    let l1: f64 = pieces.iter().map(|t| t.2.abs() * (t.1 - t.0)).sum();
    let c = 2.0 * l1 * hf / std::f64::consts::PI;
    let outside = 2.0 * c.powf(p) * r.powf(1.0 - 2.0 * p) / (2.0 * p - 1.0);
    let norm = integral.max(0.0).powf(1.0 / p);
    let quad = (integral + res.error).max(0.0).powf(1.0 / p) - norm;
    let tail = (integral + outside).powf(1.0 / p) - norm;
    Ok(QNorm {
        norm,
        budget: quad + tail,
        factor: 0.0,
    })
}

/// The `Q_{f,s}` variant: `‖1_{(Q*)^c} H f‖_p` with `Q*` the `q_factor` expansion of `Q_{f,s}`.
pub fn q_variant(f: &FiniteHaarExpansion, s: u32, p: f64, tol: f64) -> Result<QNorm> {
    if f.dim() != 1 {
        return Err(HarnessError::InvalidArgument(
            "the Q-cube variant is one-dimensional".into(),
        ));
    }
    let q = select_q_cube(&synthesize(f)?, s, p, 1.0)?;
    let big = q_expansion_of(&[q.center], q.side, s, p, 1.0)?;
    let mut out = q_norm(f, q.center, big.side, p, tol)?;
    out.factor = big.factor;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use pseudoloc_core::dyadic::DyadicCube;
    use pseudoloc_core::haar::HaarIndex;

    fn single() -> FiniteHaarExpansion {
        FiniteHaarExpansion::from_terms(
            1,
            [(
                HaarIndex::new(DyadicCube::new(0, &[0]).unwrap(), 1).unwrap(),
                1.0,
            )],
        )
        .unwrap()
    }

    #[test]
    fn pv_of_an_interval() {
        // H 1_[0,1] (x) = (1/π) ln|x/(x-1)|
        let v = hilbert_pv(&[(0.0, 1.0, 1.0)], 0.25);
        assert!((v - (1.0f64 / 3.0).ln() / std::f64::consts::PI).abs() < 1e-15);
    }

    #[test]
    fn multipole_matches_logs() {
        let pieces = [
            (0.0, 0.5, 1.0),
            (0.5, 1.0, -1.0),
            (1.0, 1.25, 2.0),
            (1.25, 1.5, -2.0),
        ];
        let m = Multipole::new(&pieces, 0.75);
        for x in [4.0, -3.0, 12.5] {
            let (a, b) = (m.eval(x), hilbert_pv(&pieces, x));
            assert!((a - b).abs() < 1e-13 * b.abs(), "{x}: {a} {b}");
        }
    }

    #[test]
    fn q_cube_for_one_haar_function() {
        let g = synthesize(&single()).unwrap();
        // s = 0 accepts any cube: the smallest one is a single cell
        let q = select_q_cube(&g, 0, 2.0, 1.0).unwrap();
        assert_eq!(q.side, 0.5);
        // large s forces the whole support
        let q = select_q_cube(&g, 12, 2.0, 1.0).unwrap();
        assert_eq!((q.center, q.side, q.outside), (0.5, 1.0, 0.0));
    }

    #[test]
    fn q_norm_shrinks_with_the_cube() {
        let f = single();
        let a = q_norm(&f, 0.5, 4.0, 2.0, 1e-10).unwrap();
        let b = q_norm(&f, 0.5, 8.0, 2.0, 1e-10).unwrap();
        assert!(b.norm < a.norm);
        // |H h|² integrated over |x - 1/2| > 2 for h = 1_[0,1/2) - 1_[1/2,1)
        let h = |x: f64| hilbert_pv(&[(0.0, 0.5, 1.0), (0.5, 1.0, -1.0)], x).powi(2);
        let steps = 400_000;
        let mut s = 0.0;
        for i in 0..steps {
            let t = 2.0 + (i as f64 + 0.5) * (4000.0 - 2.0) / steps as f64;
            s += (h(0.5 + t) + h(0.5 - t)) * (4000.0 - 2.0) / steps as f64;
        }
        assert!(
            (a.norm - s.sqrt()).abs() < a.budget + 1e-4 * a.norm,
            "{} {} {}",
            a.norm,
            a.budget,
            s.sqrt()
        );
        assert!(a.budget < 1e-3 * a.norm);
    }
}
