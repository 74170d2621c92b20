//! Reference bounds for Haar pairings and the quantities compared against them.

use rayon::prelude::*;

use super::{check_kernel_dim, haar_pairing, TfEvaluator};
use crate::dyadic::{linf_dist_cubes, Aabb, DyadicBox, DyadicCube};
use crate::error::{Error, Result};
use crate::haar::{pow_abs, HaarFunction, HaarIndex, StepFunction};
use crate::kernel::{pair_boxes_with, KernelSpec};
use crate::quadrature::{integrate, integrate_box, QuadOptions};
use crate::sum::Neumaier;

/// The bound for `|⟨h^0_J, T h^η_I⟩|` with `ℓ(I) ≤ ℓ(J)`, `I ∩ J = ∅`, without
/// its implied constant.
pub fn haar_est_bound(i: &DyadicCube, j: &DyadicCube, gamma: f64) -> Result<f64> {
    if i.dim() != j.dim() {
        return Err(Error::DimensionMismatch {
            expected: j.dim(),
            got: i.dim(),
        });
    }
    if i.level() < j.level() {
        return Err(Error::InvalidArgument(format!("{i} is larger than {j}")));
    }
    if i.intersects(j) {
        return Err(Error::InvalidArgument(format!("{i} and {j} intersect")));
    }
    let n = i.dim() as f64;
    let (li, lj) = (i.side_f64(), j.side_f64());
    let d = linf_dist_cubes(i, j).to_f64();
    let pre = (li / lj).powf(n / 2.0);
    // I lies outside J, so dist(I, ∂J) = dist(I, J)
    Ok(pre
        * if d >= lj {
            li.powf(gamma) * lj.powf(n) * d.powf(-n - gamma)
        } else if d >= li {
            li.powf(gamma) * d.powf(-gamma)
        } else {
            1.0
        })
}

/// `|J|^{-1/2} (ℓ(I)/ℓ(J))^{min(γ,1/r)} (1 + log(ℓ(J)/ℓ(I)))^{δ/r} (1+|m|)^{-n-γ}`,
/// with `δ = 1` exactly when `γ = 1/r`.
pub fn aver_est_bound(i_level: i32, j: &DyadicCube, m: &[i64], gamma: f64, r: f64) -> Result<f64> {
    if i_level < j.level() {
        return Err(Error::InvalidArgument(format!(
            "level {i_level} is coarser than {j}"
        )));
    }
    let n = j.dim() as f64;
    let ratio = 2f64.powi(j.level() - i_level);
    let delta = if (gamma - 1.0 / r).abs() < 1e-12 {
        1.0
    } else {
        0.0
    };
    let mnorm = m.iter().map(|v| v.abs()).max().unwrap_or(0) as f64;
    Ok(j.measure().to_f64().powf(-0.5)
        * ratio.powf(gamma.min(1.0 / r))
        * (1.0 - ratio.ln()).powf(delta / r)
        * (1.0 + mnorm).powf(-n - gamma))
}

const MAX_BLOCK: usize = 1 << 16;

/// `‖Σ_{K ⊆ J, ℓ(K) = 2^{-i_level}} ⟨h^0_{J∔m}, T h^η_K⟩ h^η_K‖` in the averaged
/// `L^r(J)` norm `(|J|^{-1} ∫_J |·|^r)^{1/r}`.
pub fn aver_block_norm(
    kernel: &KernelSpec,
    i_level: i32,
    j: &DyadicCube,
    m: &[i64],
    eta: u8,
    r: f64,
) -> Result<f64> {
    check_kernel_dim(kernel, j.dim())?;
    if m.len() != j.dim() {
        return Err(Error::DimensionMismatch {
            expected: j.dim(),
            got: m.len(),
        });
    }
    if m.iter().all(|v| *v == 0) {
        return Err(Error::InvalidArgument("m = 0".into()));
    }
    if i_level < j.level() {
        return Err(Error::InvalidArgument(format!(
            "level {i_level} is coarser than {j}"
        )));
    }
    let steps = (i_level - j.level()) as u32;
    if (steps as usize) * j.dim() > MAX_BLOCK.trailing_zeros() as usize {
        return Err(Error::InvalidArgument(format!(
            "{} subcubes exceed the block limit",
            1u64 << (steps as usize * j.dim())
        )));
    }
    let target = HaarFunction::Average(j.translate(m));
    let cubes = DyadicBox::from_cube(j).refined(steps).cubes();
    let terms: Vec<f64> = cubes
        .par_iter()
        .map(|k| {
            let lam = haar_pairing(
                kernel,
                &target,
                &HaarFunction::Cancellative(HaarIndex::new(*k, eta)?),
                0.0,
            )?;
            Ok(pow_abs(lam, r) * k.measure().to_f64().powf(1.0 - r / 2.0))
        })
        .collect::<Result<_>>()?;
    let total: Neumaier = terms.into_iter().collect();
    Ok((total.value() / j.measure().to_f64()).powf(1.0 / r))
}

/// `|I|^{-1} ∫_{3I∖I} ∫_I |x - y|^{-n} dy dx`, with `|·|` the ℓ∞ norm.
pub fn three_i_minus_i(cube: &DyadicCube) -> Result<f64> {
    let n = cube.dim();
    if n > 2 {
        return Err(Error::UnsupportedDimension(n));
    }
    let opts = QuadOptions {
        abs_tol: 0.0,
        rel_tol: 1e-11,
        max_depth: 48,
        max_panels: 40_000,
    };
    let ib = cube.aabb();
    let k = |u: &[f64]| {
        u.iter()
            .fold(0.0f64, |a, v| a.max(v.abs()))
            .powi(-(n as i32))
    };
    let mut total = Neumaier::new();
    let mut offsets = vec![-1i64; n];
    loop {
        if offsets.iter().any(|v| *v != 0) {
            let q = pair_boxes_with(&k, &cube.translate(&offsets).aabb(), &ib, 0.0, &opts);
            if q.capped {
                return Err(Error::QuadratureDepth {
                    depth: opts.max_depth,
                    value: q.value,
                    error: q.error,
                });
            }
            total.add(q.value);
        }
        let mut i = 0;
        while i < n && offsets[i] == 1 {
            offsets[i] = -1;
            i += 1;
        }
        if i == n {
            break;
        }
        offsets[i] += 1;
    }
    Ok(total.value() / ib.measure())
}

#[derive(Clone, Debug, PartialEq)]
pub struct OffDiagonal {
    /// `‖1_K T f‖_p / ‖f‖_p`.
    pub ratio: f64,
    /// `ratio / (δ^{-n/p} |K|^{1/p})`.
    pub c: f64,
    /// The constant `C_size (n 2^n / (n p' - n))^{1/p'}` from the size bound and Hölder.
    pub theoretical: f64,
    pub delta: f64,
}

/// `‖1_K T f‖_p / ‖f‖_p` for `f` supported at positive distance `δ` from the box `K`.
pub fn off_diagonal_ratio(
    kernel: &KernelSpec,
    f: &StepFunction,
    k: &Aabb,
    p: f64,
    tol: f64,
) -> Result<OffDiagonal> {
    let n = f.dim();
    check_kernel_dim(kernel, n)?;
    if k.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: k.dim(),
        });
    }
    if !(p > 1.0) || !p.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "exponent p = {p} must lie in (1, ∞)"
        )));
    }
    let tf = TfEvaluator::new(kernel, f);
    let delta = tf
        .pieces()
        .iter()
        .map(|(b, _)| b.dist_box(k))
        .fold(f64::INFINITY, f64::min);
    if !(delta > 0.0) {
        return Err(Error::InvalidArgument("f must vanish near K".into()));
    }
    let fp = f.lp_norm(p, None)?;
    let opts = QuadOptions {
        abs_tol: 0.0,
        rel_tol: tol,
        max_depth: 40,
        max_panels: 20_000,
    };
    let integrand = |x: &[f64]| tf.eval_off(x).map(|v| pow_abs(v, p)).unwrap_or(f64::NAN);
    let q = if n == 1 {
        integrate(|t| integrand(&[t]), k.lo()[0], k.hi()[0], &[], &opts)
    } else {
        integrate_box(&integrand, k, &[], &opts)
    };
    if q.capped || q.value.is_nan() {
        return Err(Error::QuadratureDepth {
            depth: opts.max_depth,
            value: q.value,
            error: q.error,
        });
    }
    let ratio = q.value.max(0.0).powf(1.0 / p) / fp;
    let nf = n as f64;
    let pp = p / (p - 1.0);
    let c_size = kernel
        .measured
        .as_ref()
        .map(|r| r.c_size)
        .unwrap_or_else(|| kernel.verify_standard_estimates(256, 0).c_size);
    let theoretical = c_size * (nf * 2f64.powi(n as i32) / (nf * pp - nf)).powf(1.0 / pp);
    let c = ratio / (delta.powf(-nf / p) * k.measure().powf(1.0 / p));
    Ok(OffDiagonal {
        ratio,
        c,
        theoretical,
        delta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c1(k: i32, m: i64) -> DyadicCube {
        DyadicCube::new(k, &[m]).unwrap()
    }

    #[test]
    fn haar_est_cases() {
        let j = c1(0, 0);
        assert_eq!(haar_est_bound(&c1(2, 4), &j, 1.0).unwrap(), 0.5);
        // dist 1/4 = ℓ(I): middle case, (1/4)^{1/2} (1/4)(1/4)^{-1}
        assert_eq!(haar_est_bound(&c1(2, 5), &j, 1.0).unwrap(), 0.5);
        let far = haar_est_bound(&c1(2, 12), &j, 1.0).unwrap();
        assert!((far - 0.5 * 0.25 / 4.0).abs() < 1e-15);
        assert!(haar_est_bound(&c1(2, 1), &j, 1.0).is_err());
        assert!(haar_est_bound(&j, &c1(2, 5), 1.0).is_err());
    }

    #[test]
    fn pairings_respect_haar_est() {
        let k = KernelSpec::hilbert(1.0);
        let j = c1(0, 0);
        let mut worst: f64 = 0.0;
        for level in 0..5 {
            for idx in [-40i64, -7, -1, 1 << level, (1 << level) + 3, 9 << level] {
                let i = c1(level, idx);
                if i.intersects(&j) {
                    continue;
                }
                let v = haar_pairing(
                    &k,
                    &HaarFunction::Average(j),
                    &HaarFunction::Cancellative(HaarIndex::new(i, 1).unwrap()),
                    0.0,
                )
                .unwrap();
                worst = worst.max(v.abs() / haar_est_bound(&i, &j, 1.0).unwrap());
            }
        }
        assert!(worst > 0.0 && worst < 2.0, "{worst}");
    }

    #[test]
    fn three_i_values() {
        let v = three_i_minus_i(&c1(0, 0)).unwrap();
        assert!((v - 4.0 * 2f64.ln()).abs() < 1e-9, "{v}");
        for k in [-1, 3] {
            assert!((three_i_minus_i(&c1(k, 5)).unwrap() - v).abs() < 1e-9);
        }
        let q = DyadicCube::new(0, &[0, 0]).unwrap();
        let a = three_i_minus_i(&q).unwrap();
        let b = three_i_minus_i(&DyadicCube::new(2, &[3, -1]).unwrap()).unwrap();
        assert!(a.is_finite() && (a - b).abs() < 1e-6 * a, "{a} {b}");
    }

    #[test]
    fn averaged_block_against_bound() {
        let k = KernelSpec::hilbert(1.0);
        let j = c1(0, 0);
        for m in [1i64, -1, 3] {
            for r in [2.0, 4.0] {
                let mut ratios = Vec::new();
                for il in 0..6 {
                    let v = aver_block_norm(&k, il, &j, &[m], 1, r).unwrap();
                    ratios.push(v / aver_est_bound(il, &j, &[m], 1.0, r).unwrap());
                }
                assert!(
                    ratios.iter().all(|x| *x > 0.0 && *x < 4.0),
                    "{m} {r} {ratios:?}"
                );
            }
        }
        assert!(aver_block_norm(&k, 0, &j, &[0], 1, 2.0).is_err());
    }

    #[test]
    fn off_diagonal_single_cell() {
        let k = KernelSpec::hilbert(1.0).verified(256, 0);
        let f = HaarFunction::Average(c1(0, 0)).to_step();
        let r = off_diagonal_ratio(&k, &f, &Aabb::interval(3.0, 5.0), 2.0, 1e-12).unwrap();
        // Tf(x) = ln(x/(x-1)) for f = 1_{[0,1)}
        let steps = 200_000;
        let dx = 2.0 / steps as f64;
        let exact: f64 = (0..steps)
            .map(|i| {
                let x = 3.0 + (i as f64 + 0.5) * dx;
                (x / (x - 1.0)).ln().powi(2) * dx
            })
            .sum();
        assert!(
            (r.ratio - exact.sqrt()).abs() < 1e-8,
            "{} {}",
            r.ratio,
            exact.sqrt()
        );
        assert_eq!(r.delta, 2.0);
        assert!(r.c <= r.theoretical);
    }
}
