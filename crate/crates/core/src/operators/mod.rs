//! Calderón–Zygmund operators applied to finite Haar expansions: evaluation
//! off the support, truncated operators, Haar pairings, the decomposition
//! `1_{Σ^c} T = 1_{Σ^c}(Φ̃_s + Ψ_s)`, the shift operators and operator-norm
//! estimation.

mod conformance;
mod decomposition;
mod norm;
mod shift;

pub use conformance::{
    aver_block_norm, aver_est_bound, haar_est_bound, off_diagonal_ratio, three_i_minus_i,
    OffDiagonal,
};
pub use decomposition::{
    figiel_condition_sum, lambda, phi_tilde_apply, psi_apply, psi_coeff_quadrature, psi_haar_coeff,
    AverageExpansion, FigielClass, FigielSum, PhiTilde, PsiClass, PsiCoeff, PsiEvaluator,
};
pub use norm::{
    opnorm_lower_bound, restricted_lp_norm, IdentityOperator, Image, LinearOperator,
    OpNormEstimate, PsiSection, RestrictedNorm, ShiftOperator,
};
pub use shift::{shift_apply, ShiftKind, ShiftOutput, ShiftSpec};

use crate::dyadic::{Aabb, MAX_DIM};
use crate::error::{Error, Result};
use crate::haar::{synthesize, FiniteHaarExpansion, HaarFunction, StepFunction};
use crate::kernel::KernelSpec;
use crate::quadrature::{integrate, integrate_box, QuadOptions};

/// Truncation of the `m`-sums together with the constant used for their tails.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TruncationBudget {
    /// Largest `|m|∞` kept.
    pub m_radius: i64,
    /// Empirical decay constant `C` in `|coefficient| ≤ C (1+|m|)^{-n-γ}`.
    pub c_emp: f64,
    /// Relative tolerance of the quadratures feeding the sums.
    pub quad_tol: f64,
}

impl TruncationBudget {
    pub fn new(m_radius: i64) -> Self {
        TruncationBudget {
            m_radius,
            c_emp: 1.0,
            quad_tol: 1e-8,
        }
    }

    /// `M = 64` on the line, `16` in the plane.
    pub fn for_dim(n: usize) -> Self {
        Self::new(if n == 1 { 64 } else { 16 })
    }

    pub fn with_constant(mut self, c_emp: f64) -> Self {
        self.c_emp = c_emp;
        self
    }

    /// `C_emp · Σ_{|m|∞ > M} (1+|m|)^{-n-γ}`.
    pub fn tail(&self, n: usize, gamma: f64) -> f64 {
        self.c_emp * tail_sum(n, gamma, self.m_radius, false)
    }
}

/// An upper bound for `Σ_{|m|∞ > M} (1+|m|)^{-n-γ}`, optionally weighted by `log(2+|m|)`.
///
/// Shells `|m|∞ = j` have `(2j+1)^n - (2j-1)^n ≤ n 2^n j^{n-1}` points; the sum
/// is explicit up to `64 M` and closed by the integral bound beyond.
pub fn tail_sum(n: usize, gamma: f64, m: i64, log_weight: bool) -> f64 {
    let m = m.max(0);
    let stop = 64 * m.max(1);
    let shell = |j: i64| ((2 * j + 1) as f64).powi(n as i32) - ((2 * j - 1) as f64).powi(n as i32);
    let w = |j: f64| if log_weight { (2.0 + j).ln() } else { 1.0 };
    let mut s = 0.0;
    for j in (m + 1)..=stop {
        s += shell(j) * (1.0 + j as f64).powf(-(n as f64) - gamma) * w(j as f64);
    }
    // n 2^n j^{n-1} (1+j)^{-n-γ} ≤ n 2^n (1+j)^{-1-γ}, integrated from `stop`
    let c = n as f64 * 2f64.powi(n as i32);
    let a = 1.0 + stop as f64;
    let rest = if log_weight {
        a.powf(-gamma) * ((2f64.ln() + a.ln()) / gamma + 1.0 / (gamma * gamma))
    } else {
        a.powf(-gamma) / gamma
    };
    s + c * rest
}

/// `Tf` evaluated through the constant pieces of a step function.
#[derive(Clone, Debug)]
pub struct TfEvaluator<'a> {
    kernel: &'a KernelSpec,
    pieces: Vec<(Aabb, f64)>,
}

impl<'a> TfEvaluator<'a> {
    pub fn new(kernel: &'a KernelSpec, g: &StepFunction) -> Self {
        TfEvaluator {
            kernel,
            pieces: g.pieces(),
        }
    }

    pub fn from_expansion(kernel: &'a KernelSpec, f: &FiniteHaarExpansion) -> Result<Self> {
        check_kernel_dim(kernel, f.dim())?;
        Ok(Self::new(kernel, &synthesize(f)?))
    }

    pub fn from_pieces(kernel: &'a KernelSpec, pieces: Vec<(Aabb, f64)>) -> Self {
        TfEvaluator { kernel, pieces }
    }

    pub fn pieces(&self) -> &[(Aabb, f64)] {
        &self.pieces
    }

    /// ℓ∞ distance from `x` to the support, `+∞` for the zero function.
    pub fn support_distance(&self, x: &[f64]) -> f64 {
        self.pieces
            .iter()
            .map(|(b, _)| b.dist_point(x))
            .fold(f64::INFINITY, f64::min)
    }

    /// `Tf(x)` for `x` off the closed support.
    pub fn eval_off(&self, x: &[f64]) -> Result<f64> {
        let d = self.support_distance(x);
        if d <= 0.0 {
            return Err(Error::OnSupport { distance: d });
        }
        let mut s = 0.0;
        for (b, v) in &self.pieces {
            s += v * self.kernel.box_integral_truncated(x, b, 0.0)?;
        }
        Ok(s)
    }

    /// `T_ε f(x)`, defined everywhere.
    pub fn eval_truncated(&self, x: &[f64], eps: f64) -> Result<f64> {
        if !(eps > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "truncation radius {eps} must be positive"
            )));
        }
        let mut s = 0.0;
        for (b, v) in &self.pieces {
            s += v * self.kernel.box_integral_truncated(x, b, eps)?;
        }
        Ok(s)
    }
}

pub(crate) fn check_kernel_dim(kernel: &KernelSpec, n: usize) -> Result<()> {
    if kernel.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: kernel.dim(),
            got: n,
        });
    }
    Ok(())
}

/// `Tf(x) = ∫ K(x, y) f(y) dy` for `x` off the support of `f`.
pub fn apply_t_offsupport(kernel: &KernelSpec, f: &FiniteHaarExpansion, x: &[f64]) -> Result<f64> {
    TfEvaluator::from_expansion(kernel, f)?.eval_off(x)
}

/// `T_ε g(x) = ∫_{|y-x|∞ > ε} K(x, y) g(y) dy`.
pub fn apply_t_truncated(
    kernel: &KernelSpec,
    g: &StepFunction,
    eps: f64,
    x: &[f64],
) -> Result<f64> {
    check_kernel_dim(kernel, g.dim())?;
    TfEvaluator::new(kernel, g).eval_truncated(x, eps)
}

/// `Σ_{P,Q} a_P b_Q ∫_P ∫_{Q, |x-y|∞ > ε} K(x, y) dy dx`.
pub fn pairing_pieces(
    kernel: &KernelSpec,
    a: &[(Aabb, f64)],
    b: &[(Aabb, f64)],
    eps: f64,
) -> Result<f64> {
    let mut s = 0.0;
    for (p, vp) in a {
        for (q, vq) in b {
            if *vp != 0.0 && *vq != 0.0 {
                s += vp * vq * kernel.pair_boxes(p, q, eps)?;
            }
        }
    }
    Ok(s)
}

/// `⟨h_J, T_ε h_I⟩`, with `T_0 = T`; `ε = 0` needs disjoint supports.
pub fn haar_pairing(
    kernel: &KernelSpec,
    j: &HaarFunction,
    i: &HaarFunction,
    eps: f64,
) -> Result<f64> {
    check_kernel_dim(kernel, j.cube().dim())?;
    check_kernel_dim(kernel, i.cube().dim())?;
    if eps <= 0.0 && j.cube().intersects(&i.cube()) {
        return Err(Error::Singular(format!(
            "ε = 0 with overlapping cubes {} and {}",
            j.cube(),
            i.cube()
        )));
    }
    pairing_pieces(kernel, &j.pieces(), &i.pieces(), eps)
}

/// The same pairing as an adaptive outer integral over `J` of the exact inner
/// cell integrals.
pub fn haar_pairing_outer(
    kernel: &KernelSpec,
    j: &HaarFunction,
    i: &HaarFunction,
    eps: f64,
) -> Result<f64> {
    check_kernel_dim(kernel, j.cube().dim())?;
    if eps <= 0.0 && j.cube().intersects(&i.cube()) {
        return Err(Error::Singular(format!(
            "ε = 0 with overlapping cubes {} and {}",
            j.cube(),
            i.cube()
        )));
    }
    let n = kernel.dim();
    let ipieces = i.pieces();
    let opts = QuadOptions {
        max_depth: 48,
        max_panels: 40_000,
        ..QuadOptions::with_tol(1e-15, 1e-10)
    };
    let mut breaks: Vec<Vec<f64>> = vec![Vec::new(); n];
    for (q, _) in &ipieces {
        for (ax, br) in breaks.iter_mut().enumerate() {
            for e in [q.lo()[ax], q.hi()[ax]] {
                br.extend([e, e - eps, e + eps]);
            }
        }
    }
    let inner = |x: &[f64]| -> f64 {
        let mut s = 0.0;
        for (q, vq) in &ipieces {
            // a node on the closed support of an ε = 0 pairing only arises at a shared edge
            s += vq * kernel.box_integral_truncated(x, q, eps).unwrap_or(0.0);
        }
        s
    };
    let mut total = 0.0;
    for (p, vp) in j.pieces() {
        let r = if n == 1 {
            integrate(|t| inner(&[t]), p.lo()[0], p.hi()[0], &breaks[0], &opts)
        } else {
            integrate_box(&inner, &p, &breaks, &opts)
        };
        total += vp * r.into_result(&opts)?;
    }
    Ok(total)
}

/// Breakpoints per axis: the piece edges and the edges shifted by `±ε`.
pub(crate) fn kinks(pieces: &[(Aabb, f64)], eps: f64, n: usize) -> Vec<Vec<f64>> {
    let mut out = vec![Vec::new(); n];
    for (b, _) in pieces {
        for (ax, br) in out.iter_mut().enumerate() {
            for e in [b.lo()[ax], b.hi()[ax]] {
                br.push(e);
                if eps > 0.0 {
                    br.extend([e - eps, e + eps]);
                }
            }
        }
    }
    for br in &mut out {
        br.sort_by(f64::total_cmp);
        br.dedup();
    }
    out
}

pub(crate) fn linf_norm(m: &[i64]) -> i64 {
    m.iter().map(|v| v.abs()).max().unwrap_or(0)
}

/// All `m ∈ ℤⁿ` with `|m|∞ ≤ r`, in lexicographic order.
pub(crate) fn lattice_ball(n: usize, r: i64) -> Vec<[i64; MAX_DIM]> {
    let side = (2 * r + 1) as usize;
    let total = side.pow(n as u32);
    let mut out = Vec::with_capacity(total);
    for mut k in 0..total {
        let mut m = [0i64; MAX_DIM];
        for v in m.iter_mut().take(n) {
            *v = (k % side) as i64 - r;
            k /= side;
        }
        out.push(m);
    }
    out
}
