//! The two halves of `1_{Σ^c} T f = 1_{Σ^c}(Φ̃_s f + Ψ_s f)`, the Haar
//! coefficients of `Ψ_s` and the summability condition they feed.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Mutex;

use rayon::prelude::*;

use super::{
    check_kernel_dim, haar_pairing, kinks, lattice_ball, linf_norm, tail_sum, TfEvaluator,
    TruncationBudget,
};
use crate::dyadic::{Aabb, DyadicBox, DyadicCube, MAX_DIM};
use crate::error::{Error, Result};
use crate::haar::{
    child_sign, pow2_half, synthesize, FiniteHaarExpansion, HaarFunction, HaarIndex, StepFunction,
};
use crate::kernel::{KernelFamily, KernelSpec};
use crate::quadrature::{integrate, integrate_box, QuadOptions};

/// A finite combination `Σ c_Q h^0_Q` of normalised indicators.
#[derive(Clone, Debug, PartialEq)]
pub struct AverageExpansion {
    dim: usize,
    terms: BTreeMap<DyadicCube, f64>,
    levels: BTreeSet<i32>,
}

impl AverageExpansion {
    pub fn new(dim: usize) -> Self {
        AverageExpansion {
            dim,
            terms: BTreeMap::new(),
            levels: BTreeSet::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&DyadicCube, &f64)> {
        self.terms.iter()
    }

    pub fn get(&self, q: &DyadicCube) -> f64 {
        self.terms.get(q).copied().unwrap_or(0.0)
    }

    pub fn add_term(&mut self, q: DyadicCube, c: f64) {
        if c == 0.0 {
            return;
        }
        *self.terms.entry(q).or_insert(0.0) += c;
        self.levels.insert(q.level());
    }

    pub fn scale(&self, c: f64) -> Self {
        let mut out = self.clone();
        for v in out.terms.values_mut() {
            *v *= c;
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (q, c) in &other.terms {
            out.add_term(*q, *c);
        }
        out
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut s = 0.0;
        for &level in &self.levels {
            if let Ok(q) = DyadicCube::containing(level, &x[..self.dim]) {
                if let Some(c) = self.terms.get(&q) {
                    s += c * pow2_half(level * self.dim as i32);
                }
            }
        }
        s
    }

    /// The sum on the mesh of its finest cubes.
    pub fn to_step(&self) -> Result<StepFunction> {
        let Some(&fine) = self.levels.iter().next_back() else {
            return Ok(StepFunction::zero(self.dim));
        };
        let n = self.dim;
        let mut bx: Option<DyadicBox> = None;
        for q in self.terms.keys() {
            let b = DyadicBox::from_cube(q).refined((fine - q.level()) as u32);
            bx = Some(match bx {
                None => b,
                Some(acc) => acc.hull(&b),
            });
        }
        let bx = bx.unwrap();
        let mut stride = [0usize; MAX_DIM];
        let mut size = 1usize;
        for i in 0..n {
            stride[i] = size;
            size *= (bx.hi()[i] - bx.lo()[i]) as usize;
        }
        let mut values = vec![0.0; size];
        for (q, c) in &self.terms {
            let v = c * pow2_half(q.level() * n as i32);
            for cell in DyadicBox::from_cube(q)
                .refined((fine - q.level()) as u32)
                .cubes()
            {
                let o: usize = (0..n)
                    .map(|i| (cell.index()[i] - bx.lo()[i]) as usize * stride[i])
                    .sum();
                values[o] += v;
            }
        }
        StepFunction::from_values(&bx, values)
    }
}

/// `λ_{I,m} = ⟨h^0_{I^{(s)} ∔ m}, T h^η_I⟩`.
pub fn lambda(kernel: &KernelSpec, h: &HaarIndex, s: u32, m: &[i64]) -> Result<f64> {
    let anc = h.cube().ancestor(s)?;
    haar_pairing(
        kernel,
        &HaarFunction::Average(anc.translate(m)),
        &HaarFunction::Cancellative(*h),
        0.0,
    )
}

/// Families whose pairings are invariant under dyadic dilation.
fn dilation_invariant(family: &KernelFamily) -> bool {
    matches!(family, KernelFamily::Hilbert1d | KernelFamily::Smooth2d)
}

/// Cache key of `λ_{I,m}`: signature, level (unless dilation invariant),
/// position of `I` inside `I^{(s)}`, and `m`.
type LambdaKey = (u8, i32, [i64; MAX_DIM], [i64; MAX_DIM]);

fn lambda_key(h: &HaarIndex, s: u32, m: &[i64; MAX_DIM], invariant: bool) -> LambdaKey {
    let c = h.cube();
    let mut off = [0i64; MAX_DIM];
    for i in 0..c.dim() {
        off[i] = c.index()[i] - ((c.index()[i] >> s) << s);
    }
    (
        h.eta(),
        if invariant { i32::MIN } else { c.level() },
        off,
        *m,
    )
}

fn key_representative(key: &LambdaKey, s: u32, n: usize) -> Result<HaarIndex> {
    let level = if key.1 == i32::MIN { s as i32 } else { key.1 };
    HaarIndex::new(DyadicCube::new(level, &key.2[..n])?, key.0)
}

/// `Φ̃_s f` truncated to `0 < |m|∞ ≤ M`.
#[derive(Clone, Debug)]
pub struct PhiTilde {
    pub value: AverageExpansion,
    /// Bound for the omitted terms at any point of `Σ_{f,s}^c`.
    pub tail: f64,
    /// Measured `C` in `|λ_{I,m}| ≤ C 2^{-s(n/2+γ)} (|m|∞-1)^{-n-γ}` for `|m|∞ ≥ 2`.
    pub c_emp: f64,
    pub m_radius: i64,
    pub pairings: usize,
}

pub fn phi_tilde_apply(
    kernel: &KernelSpec,
    f: &FiniteHaarExpansion,
    s: u32,
    budget: &TruncationBudget,
) -> Result<PhiTilde> {
    let n = f.dim();
    check_kernel_dim(kernel, n)?;
    let big_m = budget.m_radius;
    if big_m < 1 {
        return Err(Error::InvalidArgument(format!(
            "m-radius {big_m} must be at least 1"
        )));
    }
    let invariant = dilation_invariant(&kernel.family);
    // the shell |m| = M + 1 only calibrates the tail constant
    let ms: Vec<[i64; MAX_DIM]> = lattice_ball(n, big_m + 1)
        .into_iter()
        .filter(|m| linf_norm(&m[..n]) != 0)
        .collect();
    let mut keys = BTreeSet::new();
    for h in f.coefficients().keys() {
        for m in &ms {
            keys.insert(lambda_key(h, s, m, invariant));
        }
    }
    let keys: Vec<LambdaKey> = keys.into_iter().collect();
    let values: Vec<Result<f64>> = keys
        .par_iter()
        .map(|key| lambda(kernel, &key_representative(key, s, n)?, s, &key.3[..n]))
        .collect();
    let mut table = HashMap::with_capacity(keys.len());
    for (key, v) in keys.iter().zip(values) {
        table.insert(*key, v?);
    }

    let gamma = kernel.gamma();
    let decay = |m: i64| {
        2f64.powf(-(s as f64) * (n as f64 / 2.0 + gamma))
            * ((m - 1) as f64).powf(-(n as f64) - gamma)
    };
    let mut c_emp: f64 = 0.0;
    for (key, v) in &table {
        let r = linf_norm(&key.3[..n]);
        if r >= 2 {
            c_emp = c_emp.max(v.abs() / decay(r));
        }
    }

    let mut out = AverageExpansion::new(n);
    let mut weight = 0.0;
    for (h, &alpha) in f.iter() {
        let anc = h.cube().ancestor(s)?;
        weight += alpha.abs() * pow2_half(anc.level() * n as i32);
        let mut own = 0.0;
        for m in &ms {
            if linf_norm(&m[..n]) > big_m {
                continue;
            }
            let c = alpha * table[&lambda_key(h, s, m, invariant)];
            out.add_term(anc.translate(&m[..n]), c);
            own -= c;
        }
        out.add_term(anc, own);
    }
    let tail = c_emp * weight * decay(big_m + 1);
    Ok(PhiTilde {
        value: out,
        tail,
        c_emp,
        m_radius: big_m,
        pairings: keys.len(),
    })
}

struct PsiLevel {
    k: i32,
    eps: f64,
    pieces: Vec<(Aabb, f64)>,
    averages: Mutex<HashMap<DyadicCube, f64>>,
}

/// Pointwise evaluation of `Ψ_s = Σ_k (Id - E_k) T_{4·2^{-k}} D_{k+s}`.
pub struct PsiEvaluator<'a> {
    kernel: &'a KernelSpec,
    dim: usize,
    levels: Vec<PsiLevel>,
}

impl<'a> PsiEvaluator<'a> {
    pub fn new(kernel: &'a KernelSpec, f: &FiniteHaarExpansion, s: u32) -> Result<Self> {
        check_kernel_dim(kernel, f.dim())?;
        let mut parts = Vec::new();
        for j in f.levels() {
            let g = synthesize(&f.project_d(j))?;
            parts.push((j - s as i32, g.pieces()));
        }
        Ok(Self::from_parts(kernel, f.dim(), parts))
    }

    /// From the pieces of `D_{k+s} f`, keyed by `k`.
    pub fn from_parts(
        kernel: &'a KernelSpec,
        dim: usize,
        parts: Vec<(i32, Vec<(Aabb, f64)>)>,
    ) -> Self {
        let levels = parts
            .into_iter()
            .map(|(k, pieces)| PsiLevel {
                k,
                eps: 4.0 * 2f64.powi(-k),
                pieces,
                averages: Mutex::new(HashMap::new()),
            })
            .collect();
        PsiEvaluator {
            kernel,
            dim,
            levels,
        }
    }

    /// `(k, T_ε D_{k+s} f(x), E_k T_ε D_{k+s} f(x))` for every active `k`.
    pub fn terms(&self, x: &[f64]) -> Result<Vec<(i32, f64, f64)>> {
        let mut out = Vec::with_capacity(self.levels.len());
        for lvl in &self.levels {
            let t = TfEvaluator::from_pieces(self.kernel, lvl.pieces.clone())
                .eval_truncated(x, lvl.eps)?;
            let cube = DyadicCube::containing(lvl.k, &x[..self.dim])?;
            out.push((lvl.k, t, self.average(lvl, &cube)?));
        }
        Ok(out)
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        let mut s = 0.0;
        for lvl in &self.levels {
            let mut t = 0.0;
            for (b, v) in &lvl.pieces {
                t += v * self.kernel.box_integral_truncated(x, b, lvl.eps)?;
            }
            let cube = DyadicCube::containing(lvl.k, &x[..self.dim])?;
            s += t - self.average(lvl, &cube)?;
        }
        Ok(s)
    }

    /// Average of `T_ε D_{k+s} f` over a level-`k` cube.
    fn average(&self, lvl: &PsiLevel, cube: &DyadicCube) -> Result<f64> {
        if let Some(v) = lvl.averages.lock().unwrap().get(cube) {
            return Ok(*v);
        }
        let a = cube.aabb();
        let mut s = 0.0;
        for (b, v) in &lvl.pieces {
            s += v * self.kernel.pair_boxes(&a, b, lvl.eps)?;
        }
        let v = s / a.measure();
        lvl.averages.lock().unwrap().insert(*cube, v);
        Ok(v)
    }

    /// Where `Ψ_s` may fail to be smooth: piece edges, the same shifted by
    /// `±ε`, and the level-`k` grid lines inside `window`.
    pub fn kinks(&self, window: &Aabb) -> Vec<Vec<f64>> {
        let mut out = vec![Vec::new(); self.dim];
        for lvl in &self.levels {
            let k = kinks(&lvl.pieces, lvl.eps, self.dim);
            let side = 2f64.powi(-lvl.k);
            for (ax, br) in out.iter_mut().enumerate() {
                br.extend(&k[ax]);
                let (lo, hi) = (window.lo()[ax], window.hi()[ax]);
                if (hi - lo) / side < 1e5 {
                    let mut t = (lo / side).floor() * side;
                    while t <= hi {
                        br.push(t);
                        t += side;
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
}

/// `Ψ_s f(x)`.
pub fn psi_apply(kernel: &KernelSpec, f: &FiniteHaarExpansion, s: u32, x: &[f64]) -> Result<f64> {
    PsiEvaluator::new(kernel, f, s)?.eval(x)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PsiClass {
    /// Both functions cancellative.
    Haar11,
    /// `θ = 0`.
    Haar01,
    /// `ζ = 0`.
    Haar10,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PsiCoeff {
    pub value: f64,
    pub class: PsiClass,
    /// Number of ancestors `J ⊋ L` visited (class `Haar10` only).
    pub ancestors: u32,
}

fn classify(kc: &DyadicCube, theta: u8, l: &DyadicCube, zeta: u8) -> Result<PsiClass> {
    if kc.dim() != l.dim() {
        return Err(Error::DimensionMismatch {
            expected: l.dim(),
            got: kc.dim(),
        });
    }
    if kc.level() != l.level() {
        return Err(Error::InvalidArgument(format!(
            "cubes {kc} and {l} have different side lengths"
        )));
    }
    match (theta, zeta) {
        (0, 0) => Err(Error::InvalidArgument(
            "at most one of the two signatures may vanish".into(),
        )),
        (0, _) => Ok(PsiClass::Haar01),
        (_, 0) => Ok(PsiClass::Haar10),
        _ => Ok(PsiClass::Haar11),
    }
}

/// `⟨h^η_J, h^0_L⟩` for `J = L^{(t)}`.
fn ancestor_coefficient(l: &DyadicCube, t: u32, eta: u8) -> f64 {
    let child = l.ancestor(t - 1).expect("inside the level window");
    let mut bits = 0usize;
    for i in 0..l.dim() {
        bits |= ((child.index()[i] & 1) as usize) << i;
    }
    child_sign(eta, bits) * pow2_half(-(t as i32) * l.dim() as i32)
}

/// `⟨h^θ_K, Ψ_s h^ζ_L⟩` for `ℓ(K) = ℓ(L)` through truncated pairings.
///
/// With `ζ = 0` the sum runs over all ancestors `J ⊋ L`; it stops at the first
/// `J` whose truncation radius exceeds every distance between `K` and `J`,
/// since all later terms vanish identically.
pub fn psi_haar_coeff(
    kernel: &KernelSpec,
    s: u32,
    kc: &DyadicCube,
    theta: u8,
    l: &DyadicCube,
    zeta: u8,
) -> Result<PsiCoeff> {
    check_kernel_dim(kernel, l.dim())?;
    let class = classify(kc, theta, l, zeta)?;
    let n = l.dim();
    let eps = 4.0 * 2f64.powi(s as i32) * l.side_f64();
    let hk = HaarFunction::from_signature(*kc, theta)?;
    let value = match class {
        PsiClass::Haar11 => {
            haar_pairing(kernel, &hk, &HaarFunction::from_signature(*l, zeta)?, eps)?
        }
        PsiClass::Haar01 => {
            let hl = HaarFunction::from_signature(*l, zeta)?;
            let big = HaarFunction::Average(kc.ancestor(s)?);
            haar_pairing(kernel, &hk, &hl, eps)?
                - pow2_half(-(n as i32) * s as i32) * haar_pairing(kernel, &big, &hl, eps)?
        }
        PsiClass::Haar10 => {
            let ka = kc.aabb();
            let mut total = 0.0;
            let mut t = 1u32;
            loop {
                let j = l.ancestor(t)?;
                let eps_j = 4.0 * 2f64.powi(s as i32) * j.side_f64();
                if ka.max_dist_box(&j.aabb()) <= eps_j {
                    break;
                }
                for eta in 1..(1u8 << n) {
                    let hj = HaarFunction::Cancellative(HaarIndex::new(j, eta)?);
                    total +=
                        haar_pairing(kernel, &hk, &hj, eps_j)? * ancestor_coefficient(l, t, eta);
                }
                t += 1;
            }
            return Ok(PsiCoeff {
                value: total,
                class,
                ancestors: t - 1,
            });
        }
    };
    Ok(PsiCoeff {
        value,
        class,
        ancestors: 0,
    })
}

/// `⟨h^θ_K, Ψ_s h^ζ_L⟩` by adaptive quadrature over `K` of the pointwise values
/// of `Ψ_s h^ζ_L`. For `ζ = 0` the martingale differences of `h^0_L` are kept
/// for `extra_levels` levels past the point where they stop reaching `K`.
pub fn psi_coeff_quadrature(
    kernel: &KernelSpec,
    s: u32,
    kc: &DyadicCube,
    theta: u8,
    l: &DyadicCube,
    zeta: u8,
    extra_levels: u32,
) -> Result<f64> {
    check_kernel_dim(kernel, l.dim())?;
    classify(kc, theta, l, zeta)?;
    let n = l.dim();
    let mut parts = Vec::new();
    if zeta != 0 {
        parts.push((
            l.level() - s as i32,
            HaarFunction::from_signature(*l, zeta)?.pieces(),
        ));
    } else {
        let ka = kc.aabb();
        let mut t = 1u32;
        let mut past = 0;
        while past <= extra_levels {
            let j = l.ancestor(t)?;
            let eps_j = 4.0 * 2f64.powi(s as i32) * j.side_f64();
            if ka.max_dist_box(&j.aabb()) <= eps_j {
                past += 1;
            }
            // D_{level(J)} h^0_L = Σ_η ⟨h^η_J, h^0_L⟩ h^η_J, constant on the children of J
            let amp = pow2_half(j.level() * n as i32);
            let mut pieces = Vec::new();
            for b in 0..1usize << n {
                let mut v = 0.0;
                for eta in 1..(1u8 << n) {
                    v += ancestor_coefficient(l, t, eta) * child_sign(eta, b) * amp;
                }
                let child = DyadicCube::new(j.level() + 1, &child_index(&j, b))?;
                pieces.push((child.aabb(), v));
            }
            parts.push((j.level() - s as i32, pieces));
            t += 1;
        }
    }
    let psi = PsiEvaluator::from_parts(kernel, n, parts);
    let hk = HaarFunction::from_signature(*kc, theta)?;
    let window = kc.aabb();
    let breaks = psi.kinks(&window);
    let opts = QuadOptions {
        max_depth: 40,
        ..QuadOptions::with_tol(1e-15, 1e-10)
    };
    let failure = Mutex::new(None);
    let g = |x: &[f64]| match psi.eval(x) {
        Ok(v) => v,
        Err(e) => {
            failure.lock().unwrap().get_or_insert(e);
            0.0
        }
    };
    let mut total = 0.0;
    for (piece, v) in hk.pieces() {
        let r = if n == 1 {
            integrate(|t| g(&[t]), piece.lo()[0], piece.hi()[0], &breaks[0], &opts)
        } else {
            integrate_box(&g, &piece, &breaks, &opts)
        };
        total += v * r.into_result(&opts)?;
    }
    if let Some(e) = failure.into_inner().unwrap() {
        return Err(e);
    }
    Ok(total)
}

fn child_index(j: &DyadicCube, bits: usize) -> Vec<i64> {
    (0..j.dim())
        .map(|i| 2 * j.index()[i] + ((bits >> i) & 1) as i64)
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FigielClass {
    /// `θ, ζ ≠ 0`.
    Cancellative,
    /// `θ = 0`, `ζ ≠ 0`.
    AverageOutput,
    /// `θ ≠ 0`, `ζ = 0`.
    AverageInput,
}

impl FigielClass {
    pub const ALL: [FigielClass; 3] = [
        FigielClass::Cancellative,
        FigielClass::AverageOutput,
        FigielClass::AverageInput,
    ];

    fn signatures(&self, n: usize) -> Vec<(u8, u8)> {
        let nz: Vec<u8> = (1..(1u8 << n)).collect();
        match self {
            FigielClass::Cancellative => nz
                .iter()
                .flat_map(|&a| nz.iter().map(move |&b| (a, b)))
                .collect(),
            FigielClass::AverageOutput => nz.iter().map(|&b| (0, b)).collect(),
            FigielClass::AverageInput => nz.iter().map(|&a| (a, 0)).collect(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            FigielClass::Cancellative => "11",
            FigielClass::AverageOutput => "01",
            FigielClass::AverageInput => "10",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FigielSum {
    pub class: FigielClass,
    pub s: u32,
    /// `Σ_{|m|∞ ≤ M_s} sup_L |⟨h^θ_{L∔m}, Ψ_s h^ζ_L⟩| log(2+|m|∞)`.
    pub value: f64,
    /// `C_emp Σ_{|m|∞ > M_s} (1+|m|)^{-n-γ} log(2+|m|)`.
    pub tail: f64,
    /// Largest `sup_L |coefficient| (1+|m|)^{n+γ}` over the outer half of the range.
    pub c_emp: f64,
    /// `(1+s) 2^{-sγ}`.
    pub bound: f64,
    /// `M_s = M · 2^s`: the coefficients live at `|m| ≳ 4·2^s`.
    pub m_radius: i64,
}

/// The summability sum with `Ψ_s` in place of `T`, per signature class.
pub fn figiel_condition_sum(
    kernel: &KernelSpec,
    s: u32,
    budget: &TruncationBudget,
    samples: &[DyadicCube],
) -> Result<Vec<FigielSum>> {
    let Some(first) = samples.first() else {
        return Err(Error::InvalidArgument("no sample cubes".into()));
    };
    let n = first.dim();
    check_kernel_dim(kernel, n)?;
    let gamma = kernel.gamma();
    let ms_radius = budget.m_radius << s;
    let ms = lattice_ball(n, ms_radius);
    let mut out = Vec::new();
    for class in FigielClass::ALL {
        let sigs = class.signatures(n);
        let sups: Vec<Result<f64>> = ms
            .par_iter()
            .map(|m| {
                let mut best: f64 = 0.0;
                for l in samples {
                    let kc = l.translate(&m[..n]);
                    for &(theta, zeta) in &sigs {
                        best =
                            best.max(psi_haar_coeff(kernel, s, &kc, theta, l, zeta)?.value.abs());
                    }
                }
                Ok(best)
            })
            .collect();
        let mut value = 0.0;
        let mut c_emp: f64 = 0.0;
        for (m, v) in ms.iter().zip(sups) {
            let v = v?;
            let r = linf_norm(&m[..n]);
            value += v * (2.0 + r as f64).ln();
            if 2 * r > ms_radius {
                c_emp = c_emp.max(v * (1.0 + r as f64).powf(n as f64 + gamma));
            }
        }
        out.push(FigielSum {
            class,
            s,
            value,
            tail: c_emp * tail_sum(n, gamma, ms_radius, true),
            c_emp,
            bound: (1.0 + s as f64) * 2f64.powf(-(s as f64) * gamma),
            m_radius: ms_radius,
        });
    }
    Ok(out)
}
