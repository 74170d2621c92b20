//! Standard Calderón–Zygmund kernels and their integrals over cells.
//!
//! Distances are ℓ∞ throughout, so the truncation region `{|y - x| > ε}`
//! intersected with a box is again a finite union of boxes.

use std::f64::consts::{LN_2, PI};
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dyadic::{Aabb, DyadicCube, MAX_DIM};
use crate::error::{Error, Result};
use crate::quadrature::{integrate, integrate_box, QuadOptions, QuadResult};

/// Terms `j = 0..=J` kept in the Weierstrass modulation.
pub const WEIERSTRASS_TERMS: u32 = 12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum KernelFamily {
    /// `1/(x - y)` on the line.
    Hilbert1d,
    /// `sgn(x-y)/|x-y| · (1 + W_γ(log₂|x-y|)/2)` with
    /// `W_γ(u) = Σ_{j≤J} 2^{-jγ} cos(2^j π u)`.
    Weierstrass1d { gamma: f64, terms: u32 },
    /// `(x₁ - y₁)/|x - y|₂³` in the plane: an odd smooth profile on the
    /// ℓ∞ sphere divided by `|x - y|∞²`.
    Smooth2d,
}

impl KernelFamily {
    pub fn weierstrass(gamma: f64) -> Self {
        KernelFamily::Weierstrass1d {
            gamma,
            terms: WEIERSTRASS_TERMS,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            KernelFamily::Hilbert1d | KernelFamily::Weierstrass1d { .. } => 1,
            KernelFamily::Smooth2d => 2,
        }
    }

    pub fn gamma(&self) -> f64 {
        match self {
            KernelFamily::Weierstrass1d { gamma, .. } => *gamma,
            _ => 1.0,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            KernelFamily::Hilbert1d => "hilbert1d",
            KernelFamily::Weierstrass1d { .. } => "weierstrass1d",
            KernelFamily::Smooth2d => "smooth2d",
        }
    }

    /// Parses a family name; `gamma` is used by the Weierstrass family only.
    pub fn parse(name: &str, gamma: f64) -> Result<Self> {
        match name.trim() {
            "hilbert1d" => Ok(KernelFamily::Hilbert1d),
            "weierstrass1d" => {
                if !(gamma > 0.0 && gamma <= 1.0) {
                    return Err(Error::InvalidArgument(format!(
                        "Hölder exponent {gamma} outside (0, 1]"
                    )));
                }
                Ok(KernelFamily::weierstrass(gamma))
            }
            "smooth2d" => Ok(KernelFamily::Smooth2d),
            other => Err(Error::Parse(format!("unknown kernel family {other:?}"))),
        }
    }

    /// Bias added to the Hölder constant for the truncated series, `2^{-Jγ}/(2^γ - 1)`.
    pub fn truncation_bias(&self) -> f64 {
        match self {
            KernelFamily::Weierstrass1d { gamma, terms } => {
                2f64.powf(-(*terms as f64) * gamma) / (2f64.powf(*gamma) - 1.0)
            }
            _ => 0.0,
        }
    }
}

impl fmt::Display for KernelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelFamily::Weierstrass1d { gamma, .. } => write!(f, "weierstrass1d(gamma={gamma})"),
            other => f.write_str(other.name()),
        }
    }
}

impl FromStr for KernelFamily {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(rest) = s
            .strip_prefix("weierstrass1d(gamma=")
            .and_then(|r| r.strip_suffix(')'))
        {
            let g: f64 = rest
                .parse()
                .map_err(|_| Error::Parse(format!("bad gamma in {s:?}")))?;
            return Self::parse("weierstrass1d", g);
        }
        Self::parse(s, 1.0)
    }
}

/// How cell integrals are evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Strategy {
    /// Closed-form primitives.
    Exact,
    /// Adaptive Gauss–Legendre on each box piece.
    Adaptive,
}

/// Measured constants of the standard estimates.
#[derive(Clone, Debug, PartialEq)]
pub struct EstimateReport {
    pub c_size: f64,
    /// Largest one-sided ratio `|K(x+h,y)-K(x,y)| |x-y|^{n+γ}/|h|^γ` (and the
    /// same in `y`), plus the series truncation bias.
    pub c_holder: f64,
    /// Largest ratio of the sum of both differences, plus the truncation bias.
    pub c_holder_sum: f64,
    pub truncation_bias: f64,
    pub samples: usize,
    pub per_scale: Vec<ScaleStat>,
    /// Set when a configured bound was exceeded.
    pub violation: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScaleStat {
    /// Lower end of the sampled distance band `[d, 2d)`.
    pub scale: f64,
    pub c_size: f64,
    pub c_holder: f64,
}

impl EstimateReport {
    pub fn constant(&self) -> f64 {
        self.c_size.max(self.c_holder)
    }

    fn scaled(&self, c: f64) -> EstimateReport {
        let mut r = self.clone();
        r.c_size *= c;
        r.c_holder *= c;
        r.c_holder_sum *= c;
        r.truncation_bias *= c;
        for s in &mut r.per_scale {
            s.c_size *= c;
            s.c_holder *= c;
        }
        r
    }
}

/// A kernel `c · K_base` with its integration settings.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelSpec {
    pub family: KernelFamily,
    pub scale: f64,
    pub strategy: Strategy,
    pub quad: QuadOptions,
    pub measured: Option<EstimateReport>,
    /// Configured constant; exceeding it during verification sets the violation flag.
    pub bound: Option<f64>,
}

impl KernelSpec {
    pub fn new(family: KernelFamily, scale: f64) -> Self {
        KernelSpec {
            family,
            scale,
            strategy: Strategy::Exact,
            quad: QuadOptions::with_rel(1e-10),
            measured: None,
            bound: None,
        }
    }

    pub fn hilbert(scale: f64) -> Self {
        Self::new(KernelFamily::Hilbert1d, scale)
    }

    pub fn weierstrass(gamma: f64, scale: f64) -> Self {
        Self::new(KernelFamily::weierstrass(gamma), scale)
    }

    pub fn smooth2d(scale: f64) -> Self {
        Self::new(KernelFamily::Smooth2d, scale)
    }

    pub fn with_strategy(mut self, strategy: Strategy) -> Self {
        self.strategy = strategy;
        self
    }

    pub fn with_quad(mut self, quad: QuadOptions) -> Self {
        self.quad = quad;
        self
    }

    pub fn dim(&self) -> usize {
        self.family.dim()
    }

    pub fn gamma(&self) -> f64 {
        self.family.gamma()
    }

    /// `max(C_size, C_hölder)` if measured.
    pub fn measured_constant(&self) -> Option<f64> {
        self.measured.as_ref().map(|m| m.constant())
    }

    /// `K(x, y)`, failing on the diagonal.
    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        let n = self.dim();
        let mut z = [0.0; MAX_DIM];
        for i in 0..n {
            z[i] = x[i] - y[i];
        }
        if z[..n].iter().all(|v| *v == 0.0) {
            return Err(Error::Diagonal);
        }
        Ok(self.scale * self.base(&z[..n]))
    }

    /// The unscaled kernel at `z = x - y ≠ 0`.
    fn base(&self, z: &[f64]) -> f64 {
        match self.family {
            KernelFamily::Hilbert1d => 1.0 / z[0],
            KernelFamily::Weierstrass1d { gamma, terms } => {
                let r = z[0].abs();
                z[0].signum() / r * (1.0 + 0.5 * weierstrass_w(gamma, terms, r.log2()))
            }
            KernelFamily::Smooth2d => {
                let r2 = z[0] * z[0] + z[1] * z[1];
                z[0] / (r2 * r2.sqrt())
            }
        }
    }

    /// `∫_{cell ∩ {|y-x|∞ > ε}} K(x, y) dy`.
    pub fn cell_integral_truncated(&self, x: &[f64], cell: &DyadicCube, eps: f64) -> Result<f64> {
        self.box_integral_truncated(x, &cell.aabb(), eps)
    }

    /// As [`cell_integral_truncated`](Self::cell_integral_truncated) for an arbitrary box.
    pub fn box_integral_truncated(&self, x: &[f64], bx: &Aabb, eps: f64) -> Result<f64> {
        if bx.is_empty() || self.scale == 0.0 {
            return Ok(0.0);
        }
        if eps > 0.0 {
            let mut total = 0.0;
            for piece in bx.minus_ball(x, eps) {
                total += self.box_integral_off(x, &piece)?;
            }
            Ok(total)
        } else {
            let d = bx.dist_point(x);
            if d <= 0.0 {
                return Err(Error::Singular(format!(
                    "ε = 0 with x on the closed cell (distance {d:e})"
                )));
            }
            self.box_integral_off(x, bx)
        }
    }

    /// Integral over a box whose interior does not contain `x`.
    fn box_integral_off(&self, x: &[f64], bx: &Aabb) -> Result<f64> {
        let v = match self.strategy {
            Strategy::Exact => match self.family {
                KernelFamily::Hilbert1d => hilbert_interval(x[0], bx.lo()[0], bx.hi()[0]),
                KernelFamily::Weierstrass1d { gamma, terms } => {
                    weierstrass_interval(gamma, terms, x[0], bx.lo()[0], bx.hi()[0])
                }
                KernelFamily::Smooth2d => riesz_rect(x, bx),
            },
            Strategy::Adaptive => {
                let n = self.dim();
                let breaks: Vec<Vec<f64>> = (0..n).map(|i| vec![x[i]]).collect();
                let r = integrate_box(
                    &|y: &[f64]| {
                        let mut z = [0.0; MAX_DIM];
                        for i in 0..n {
                            z[i] = x[i] - y[i];
                        }
                        self.base(&z[..n])
                    },
                    bx,
                    &breaks,
                    &self.quad,
                );
                r.into_result(&self.quad)?
            }
        };
        Ok(self.scale * v)
    }

    /// Seeded check of the size and smoothness estimates over `scales` dyadic
    /// distance bands, `samples` draws per band.
    pub fn verify_standard_estimates(&self, samples: usize, seed: u64) -> EstimateReport {
        let scales = 8;
        let n = self.dim();
        let gamma = self.gamma();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut c_size: f64 = 0.0;
        let mut c_holder: f64 = 0.0;
        let mut c_sum: f64 = 0.0;
        let mut per_scale = Vec::with_capacity(scales);
        let mut count = 0;
        for band in 0..scales {
            let d0 = 2f64.powi(band as i32 - 4);
            let mut s_size: f64 = 0.0;
            let mut s_holder: f64 = 0.0;
            let probe = |x: &[f64], z: &[f64], t: f64, h_dir: &[f64]| {
                // y = x - z, |z|∞ = d, h = t·d·h_dir with |h_dir|∞ = 1
                let d = linf(z);
                let mut y = [0.0; MAX_DIM];
                let mut h = [0.0; MAX_DIM];
                for i in 0..n {
                    y[i] = x[i] - z[i];
                    h[i] = t * d * h_dir[i];
                }
                let hn = linf(&h[..n]);
                let k0 = self.eval(x, &y[..n]).unwrap();
                let mut xh = [0.0; MAX_DIM];
                let mut yh = [0.0; MAX_DIM];
                for i in 0..n {
                    xh[i] = x[i] + h[i];
                    yh[i] = y[i] + h[i];
                }
                let kx = self.eval(&xh[..n], &y[..n]).unwrap();
                let ky = self.eval(x, &yh[..n]).unwrap();
                let w = d.powf(n as f64 + gamma) / hn.powf(gamma);
                let a = (kx - k0).abs() * w;
                let b = (ky - k0).abs() * w;
                (k0.abs() * d.powi(n as i32), a.max(b), a + b)
            };
            for i in 0..samples {
                let mut x = [0.0; MAX_DIM];
                let mut z = [0.0; MAX_DIM];
                let mut dir = [0.0; MAX_DIM];
                let d = d0 * (1.0 + rng.random::<f64>());
                for j in 0..n {
                    x[j] = rng.random_range(-8.0..8.0);
                    z[j] = rng.random_range(-1.0..=1.0);
                    dir[j] = rng.random_range(-1.0..=1.0);
                }
                let axis = rng.random_range(0..n);
                z[axis] = if rng.random::<bool>() { 1.0 } else { -1.0 };
                let dn = linf(&dir[..n]).max(f64::MIN_POSITIVE);
                for v in dir.iter_mut().take(n) {
                    *v /= dn;
                }
                for v in z.iter_mut().take(n) {
                    *v *= d;
                }
                // alternate between uniform |h| and |h| close to the admissible edge |x-y|/2
                let t = if i % 2 == 0 {
                    0.5 * rng.random::<f64>().max(1e-6)
                } else {
                    0.5 * (1.0 - 1e-3 * rng.random::<f64>())
                };
                let (sz, hol, sm) = probe(&x[..n], &z[..n], t, &dir[..n]);
                s_size = s_size.max(sz);
                s_holder = s_holder.max(hol);
                c_sum = c_sum.max(sm);
                count += 1;
            }
            // deterministic probes along the axes at the edge of the admissible range
            let t_edge = 0.5 * (1.0 - 1e-10);
            for axis in 0..n {
                for zs in [1.0, -1.0] {
                    for hs in [1.0, -1.0] {
                        let x = [0.37 * d0, -0.21 * d0, 0.0];
                        let mut z = [0.0; MAX_DIM];
                        let mut dir = [0.0; MAX_DIM];
                        z[axis] = zs * d0;
                        dir[axis] = hs;
                        let (sz, hol, sm) = probe(&x[..n], &z[..n], t_edge, &dir[..n]);
                        s_size = s_size.max(sz);
                        s_holder = s_holder.max(hol);
                        c_sum = c_sum.max(sm);
                        count += 1;
                    }
                }
            }
            c_size = c_size.max(s_size);
            c_holder = c_holder.max(s_holder);
            per_scale.push(ScaleStat {
                scale: d0,
                c_size: s_size,
                c_holder: s_holder,
            });
        }
        let bias = self.scale.abs() * self.family.truncation_bias();
        let c_holder = c_holder + bias;
        let c_holder_sum = c_sum + bias;
        let violation = self.bound.is_some_and(|b| c_size > b || c_holder > b);
        EstimateReport {
            c_size,
            c_holder,
            c_holder_sum,
            truncation_bias: bias,
            samples: count,
            per_scale,
            violation,
        }
    }

    /// Runs verification and stores the report.
    pub fn verified(mut self, samples: usize, seed: u64) -> Self {
        self.measured = Some(self.verify_standard_estimates(samples, seed));
        self
    }

    /// The kernel divided by its measured `max(C_size, C_hölder)`.
    pub fn normalize(&self) -> Result<KernelSpec> {
        let report = match &self.measured {
            Some(r) => r.clone(),
            None => self.verify_standard_estimates(256, 0),
        };
        let c = report.constant();
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::DegenerateKernel);
        }
        let mut out = self.clone();
        out.scale = self.scale / c;
        out.measured = Some(report.scaled(1.0 / c));
        out.bound = Some(1.0);
        Ok(out)
    }
    /// `∫_{x ∈ xb} ∫_{y ∈ yb, |x-y|∞ > ε} K(x, y) dy dx`.
    ///
    /// Closed form in one dimension under [`Strategy::Exact`]; otherwise the
    /// double integral is reduced to `∫ k(u) φ(u) du` over the difference
    /// variable, `φ` the product of the interval overlap profiles.
    pub fn pair_boxes(&self, xb: &Aabb, yb: &Aabb, eps: f64) -> Result<f64> {
        if xb.is_empty() || yb.is_empty() || self.scale == 0.0 {
            return Ok(0.0);
        }
        if eps <= 0.0 && interiors_overlap(xb, yb) {
            return Err(Error::Singular("ε = 0 with overlapping boxes".into()));
        }
        if eps > 0.0 && xb.max_dist_box(yb) <= eps {
            return Ok(0.0);
        }
        let v = match (self.strategy, self.family) {
            (Strategy::Exact, KernelFamily::Hilbert1d) => pair_intervals(
                &Radial::Hilbert,
                xb.lo()[0],
                xb.hi()[0],
                yb.lo()[0],
                yb.hi()[0],
                eps,
            ),
            (Strategy::Exact, KernelFamily::Weierstrass1d { gamma, terms }) => pair_intervals(
                &Radial::Weierstrass { gamma, terms },
                xb.lo()[0],
                xb.hi()[0],
                yb.lo()[0],
                yb.hi()[0],
                eps,
            ),
            _ => {
                let opts = QuadOptions {
                    rel_tol: self.quad.rel_tol * 1e-1,
                    ..self.quad
                };
                return Ok(self.scale
                    * pair_boxes_with(&|u: &[f64]| self.base(u), xb, yb, eps, &opts)
                        .into_result(&opts)?);
            }
        };
        Ok(self.scale * v)
    }
}

fn interiors_overlap(a: &Aabb, b: &Aabb) -> bool {
    (0..a.dim()).all(|i| a.lo()[i].max(b.lo()[i]) < a.hi()[i].min(b.hi()[i]))
}

/// Overlap length `φ(u) = |[a, b] ∩ ([c, d] + u)|` of two intervals.
#[derive(Clone, Copy, Debug)]
pub struct Overlap {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Overlap {
    pub fn eval(&self, u: f64) -> f64 {
        ((self.b).min(self.d + u) - (self.a).max(self.c + u)).max(0.0)
    }

    /// The support `[a - d, b - c]`.
    pub fn range(&self) -> (f64, f64) {
        (self.a - self.d, self.b - self.c)
    }

    /// Sorted breakpoints; `φ` is linear between consecutive ones.
    pub fn kinks(&self) -> [f64; 4] {
        let mut k = [
            self.a - self.d,
            self.a - self.c,
            self.b - self.d,
            self.b - self.c,
        ];
        k.sort_by(f64::total_cmp);
        k
    }
}

/// `∫∫_{x ∈ xb, y ∈ yb, |x-y|∞ > ε} k(x - y)` by adaptive quadrature in `u = x - y`.
///
/// In two dimensions the `u`-integral is taken in ℓ∞-polar coordinates
/// `u = r ω`, `|ω|∞ = 1`, so that `k(u) r` stays bounded at the origin when the
/// boxes touch.
pub fn pair_boxes_with<G: Fn(&[f64]) -> f64 + Sync>(
    k: &G,
    xb: &Aabb,
    yb: &Aabb,
    eps: f64,
    opts: &QuadOptions,
) -> QuadResult {
    let n = xb.dim();
    let prof: Vec<Overlap> = (0..n)
        .map(|i| Overlap {
            a: xb.lo()[i],
            b: xb.hi()[i],
            c: yb.lo()[i],
            d: yb.hi()[i],
        })
        .collect();
    let cut = eps.max(0.0);
    match n {
        1 => {
            let o = prof[0];
            let (lo, hi) = o.range();
            let mut breaks = o.kinks().to_vec();
            breaks.push(0.0);
            let f = |u: f64| {
                let w = o.eval(u);
                if w == 0.0 || u.abs() <= cut {
                    0.0
                } else {
                    w * k(&[u])
                }
            };
            let mut r = QuadResult::ZERO;
            if hi > cut {
                r = r.merge(integrate(f, lo.max(cut), hi, &breaks, opts));
            }
            if lo < -cut {
                r = r.merge(integrate(f, lo, hi.min(-cut), &breaks, opts));
            }
            r
        }
        2 => {
            let r_max = (0..2)
                .map(|i| prof[i].range().0.abs().max(prof[i].range().1.abs()))
                .fold(0.0, f64::max);
            let r_min = (0..2)
                .map(|i| {
                    let (lo, hi) = prof[i].range();
                    if lo > 0.0 {
                        lo
                    } else if hi < 0.0 {
                        -hi
                    } else {
                        0.0
                    }
                })
                .fold(0.0, f64::max);
            let r0 = r_min.max(cut);
            if !(r_max > r0) {
                return QuadResult::ZERO;
            }
            let mut r_breaks: Vec<f64> =
                prof.iter().flat_map(|o| o.kinks()).map(f64::abs).collect();
            r_breaks.push(r0);
            let inner_opts = QuadOptions {
                abs_tol: opts.abs_tol * 1e-2,
                rel_tol: opts.rel_tol * 1e-2,
                ..*opts
            };
            let flags = std::cell::Cell::new((false, 0usize, 0.0f64));
            let mut total = QuadResult::ZERO;
            for axis in 0..2 {
                let other = 1 - axis;
                for sigma in [1.0, -1.0] {
                    let face = |r: f64| {
                        let wa = prof[axis].eval(sigma * r);
                        if wa == 0.0 {
                            return 0.0;
                        }
                        let ob = prof[other];
                        let t_breaks: Vec<f64> = ob.kinks().iter().map(|kk| kk / r).collect();
                        let g = |t: f64| {
                            let wb = ob.eval(r * t);
                            if wb == 0.0 {
                                return 0.0;
                            }
                            let mut u = [0.0; 2];
                            u[axis] = sigma * r;
                            u[other] = r * t;
                            wb * k(&u) * r
                        };
                        let q = integrate(g, -1.0, 1.0, &t_breaks, &inner_opts);
                        let (c, e, err) = flags.get();
                        flags.set((c || q.capped, e + q.evaluations, err.max(q.error)));
                        wa * q.value
                    };
                    total = total.merge(integrate(face, r0, r_max, &r_breaks, opts));
                }
            }
            let (c, e, err) = flags.get();
            total.capped |= c;
            total.evaluations += e;
            total.error += err * (r_max - r0) * 4.0;
            total
        }
        _ => QuadResult {
            capped: true,
            ..QuadResult::ZERO
        },
    }
}

/// Odd radial kernels `sgn(u) g(|u|)/|u|` in one dimension.
enum Radial {
    Hilbert,
    Weierstrass { gamma: f64, terms: u32 },
}

impl Radial {
    /// `∫_{r1}^{r2} g(r)/r dr`.
    fn log_moment(&self, r1: f64, r2: f64) -> f64 {
        match *self {
            Radial::Hilbert => ((r2 - r1) / r1).ln_1p(),
            Radial::Weierstrass { gamma, terms } => weierstrass_radial(gamma, terms, r1, r2),
        }
    }

    /// `∫_0^r g`.
    fn moment0(&self, r: f64) -> f64 {
        match *self {
            Radial::Hilbert => r,
            Radial::Weierstrass { gamma, terms } => {
                let l = r.ln();
                let mut s = 0.0;
                for j in 0..=terms {
                    let f = 2f64.powi(j as i32);
                    let a = f * PI / LN_2;
                    let (sn, cs) = (a * l).sin_cos();
                    s += f.powf(-gamma) * r * (cs + a * sn) / (1.0 + a * a);
                }
                r + 0.5 * s
            }
        }
    }

    /// `∫_{r1}^{r2} (1 - r1/r) g(r) dr`.
    fn linear_moment(&self, r1: f64, r2: f64) -> f64 {
        let t = (r2 - r1) / r1;
        let base = r1 * t_minus_ln1p(t);
        match *self {
            Radial::Hilbert => base,
            Radial::Weierstrass { gamma, terms } => {
                let (l1, l2) = (r1.ln(), r2.ln());
                let mut s = 0.0;
                for j in 0..=terms {
                    let f = 2f64.powi(j as i32);
                    let a = f * PI / LN_2;
                    // ∫ cos(a ln r) dr = r (cos + a sin)(a ln r)/(1 + a²); ∫ cos(a ln r)/r dr = sin(a ln r)/a
                    let (s1, c1) = (a * l1).sin_cos();
                    let (s2, c2) = (a * l2).sin_cos();
                    let prim = (r2 * (c2 + a * s2) - r1 * (c1 + a * s1)) / (1.0 + a * a);
                    let logp = 2.0 * (0.5 * a * (l1 + l2)).cos() * (0.5 * a * (l2 - l1)).sin() / a;
                    s += f.powf(-gamma) * (prim - r1 * logp);
                }
                base + 0.5 * s
            }
        }
    }
}

/// `t - ln(1 + t)`, accurate for small `t`.
fn t_minus_ln1p(t: f64) -> f64 {
    if t.abs() < 0.1 {
        // alternating series t²/2 - t³/3 + ...
        let mut term = t * t;
        let mut s = 0.0;
        for k in 2..40 {
            let v = term / k as f64;
            s += if k % 2 == 0 { v } else { -v };
            if v.abs() < 1e-18 * s.abs() {
                break;
            }
            term *= t;
        }
        s
    } else {
        t - t.ln_1p()
    }
}

/// `∫_{x∈[a,b]} ∫_{y∈[c,d], |x-y|>ε} k(x-y) dy dx` for an odd radial kernel.
fn pair_intervals(kernel: &Radial, a: f64, b: f64, c: f64, d: f64, eps: f64) -> f64 {
    let o = Overlap { a, b, c, d };
    let k = o.kinks();
    let cut = eps.max(0.0);
    let mut total = 0.0;
    for w in k.windows(2) {
        let (u0, u1) = (w[0], w[1]);
        if !(u1 > u0) {
            continue;
        }
        let slope = (o.eval(u1) - o.eval(u0)) / (u1 - u0);
        // positive part [max(u0, cut), u1]
        let (v0, v1) = (u0.max(cut), u1);
        if v1 > v0 {
            if v0 > 0.0 {
                total +=
                    o.eval(v0) * kernel.log_moment(v0, v1) + slope * kernel.linear_moment(v0, v1);
            } else {
                // v0 = 0 only when ε = 0 and the boxes touch, so φ(0) = 0
                total += slope * kernel.moment0(v1);
            }
        }
        // negative part [u0, min(u1, -cut)], mirrored to r = -u
        let (v0, v1) = (u0, u1.min(-cut));
        if v1 > v0 {
            let (r1, r2) = (-v1, -v0);
            if r1 > 0.0 {
                total -=
                    o.eval(v1) * kernel.log_moment(r1, r2) - slope * kernel.linear_moment(r1, r2);
            } else {
                total += slope * kernel.moment0(r2);
            }
        }
    }
    total
}

pub(crate) fn linf(z: &[f64]) -> f64 {
    z.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// `W_γ(u) = Σ_{j=0}^{J} 2^{-jγ} cos(2^j π u)`.
pub fn weierstrass_w(gamma: f64, terms: u32, u: f64) -> f64 {
    let mut s = 0.0;
    for j in 0..=terms {
        let f = 2f64.powi(j as i32);
        s += f.powf(-gamma) * (f * PI * u).cos();
    }
    s
}

/// `∫_a^b dy/(x - y)` for `x` outside `(a, b)`.
fn hilbert_interval(x: f64, a: f64, b: f64) -> f64 {
    if x >= b {
        (b - a) / (x - b)
    } else {
        -(b - a) / (b - x)
    }
    .ln_1p()
}

/// `∫_{r1}^{r2} (1 + W_γ(log₂ r)/2) dr/r` for `0 < r1 ≤ r2`, via the primitive
/// `ln 2 · [u + ½ Σ 2^{-jγ} sin(2^j π u)/(2^j π)]` in `u = log₂ r`.
fn weierstrass_radial(gamma: f64, terms: u32, r1: f64, r2: f64) -> f64 {
    let du_ln = ((r2 - r1) / r1).ln_1p();
    let du = du_ln / LN_2;
    let u1 = r1.log2();
    let um = u1 + 0.5 * du;
    let mut s = 0.0;
    for j in 0..=terms {
        let f = 2f64.powi(j as i32);
        let w = f * PI;
        // sin(w u2) - sin(w u1) = 2 cos(w (u1+u2)/2) sin(w du/2)
        s += f.powf(-gamma) * 2.0 * (w * um).cos() * (0.5 * w * du).sin() / w;
    }
    du_ln + LN_2 * 0.5 * s
}

/// `∫_a^b sgn(x-y)/|x-y| (1 + W_γ(log₂|x-y|)/2) dy` for `x` outside `(a, b)`.
fn weierstrass_interval(gamma: f64, terms: u32, x: f64, a: f64, b: f64) -> f64 {
    if x >= b {
        weierstrass_radial(gamma, terms, x - b, x - a)
    } else {
        -weierstrass_radial(gamma, terms, a - x, b - x)
    }
}

/// `∫_{y ∈ bx} (x₁ - y₁)/|x - y|₂³ dy` for `x` not in the open box.
fn riesz_rect(x: &[f64], bx: &Aabb) -> f64 {
    // z = x - y ranges over [p1, q1] × [p2, q2]; F(z) = -ln(z₂ + |z|₂) has ∂₁∂₂F = z₁/|z|³.
    let (p1, q1) = (x[0] - bx.hi()[0], x[0] - bx.lo()[0]);
    let (p2, q2) = (x[1] - bx.hi()[1], x[1] - bx.lo()[1]);
    riesz_column(q1, p2, q2) - riesz_column(p1, p2, q2)
}

/// `F(z₁, b) - F(z₁, a)` with the `ln z₁²` parts cancelled analytically.
fn riesz_column(z1: f64, a: f64, b: f64) -> f64 {
    let ra = z1.hypot(a);
    let rb = z1.hypot(b);
    // for z₂ < 0, z₂ + r = z₁²/(r - z₂)
    if a >= 0.0 {
        ((a + ra) / (b + rb)).ln()
    } else if b <= 0.0 {
        ((rb - b) / (ra - a)).ln()
    } else {
        (z1 * z1).ln() - (b + rb).ln() - (ra - a).ln()
    }
}
