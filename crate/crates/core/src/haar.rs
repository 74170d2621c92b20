//! Haar functions, finite Haar expansions and piecewise-constant functions.
//!
//! `h^η_I` is the tensor product of one-dimensional profiles: the indicator
//! normalised in `L²` where `η_i = 0`, and `+1` on the left half, `-1` on the
//! right half where `η_i = 1`. On each child of `I` it is therefore a constant
//! `±|I|^{-1/2}`; the sign of the child with position bits `b` is
//! `(-1)^{popcount(η & b)}`.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use crate::dyadic::{check_dim, Aabb, DyadicBox, DyadicCube, DyadicSet, LevelWindow, MAX_DIM};
use crate::error::{Error, Result};
use crate::sum::{sum, Neumaier};

/// `2^{e/2}`, computed from an exact power of two and at most one factor √2.
pub fn pow2_half(e: i32) -> f64 {
    if e.rem_euclid(2) == 0 {
        2f64.powi(e / 2)
    } else {
        2f64.powi((e - 1).div_euclid(2)) * std::f64::consts::SQRT_2
    }
}

/// Sign of `h^η` on the child with position bits `bits`.
pub fn child_sign(eta: u8, bits: usize) -> f64 {
    if (eta as usize & bits).count_ones() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// A cancellative Haar function `h^η_I`, `η ≠ 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HaarIndex {
    cube: DyadicCube,
    eta: u8,
}

impl HaarIndex {
    pub fn new(cube: DyadicCube, eta: u8) -> Result<Self> {
        let n = cube.dim();
        if eta == 0 || (eta as usize) >= (1 << n) {
            return Err(Error::InvalidSignature { eta, dim: n });
        }
        Ok(HaarIndex { cube, eta })
    }

    pub fn cube(&self) -> DyadicCube {
        self.cube
    }

    pub fn eta(&self) -> u8 {
        self.eta
    }

    pub fn level(&self) -> i32 {
        self.cube.level()
    }

    pub fn dim(&self) -> usize {
        self.cube.dim()
    }

    pub fn with_cube(&self, cube: DyadicCube) -> Self {
        HaarIndex {
            cube,
            eta: self.eta,
        }
    }

    pub fn function(&self) -> HaarFunction {
        HaarFunction::Cancellative(*self)
    }

    /// All `2^n - 1` signatures for a cube.
    pub fn all_on(cube: DyadicCube) -> Vec<HaarIndex> {
        (1..(1u8 << cube.dim()))
            .map(|eta| HaarIndex { cube, eta })
            .collect()
    }
}

/// A Haar function, cancellative or the normalised indicator `h^0_I`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum HaarFunction {
    Cancellative(HaarIndex),
    Average(DyadicCube),
}

impl HaarFunction {
    /// `h^θ_I` with `θ = 0` meaning the average function.
    pub fn from_signature(cube: DyadicCube, theta: u8) -> Result<Self> {
        if theta == 0 {
            Ok(HaarFunction::Average(cube))
        } else {
            Ok(HaarFunction::Cancellative(HaarIndex::new(cube, theta)?))
        }
    }

    pub fn cube(&self) -> DyadicCube {
        match self {
            HaarFunction::Cancellative(h) => h.cube,
            HaarFunction::Average(c) => *c,
        }
    }

    pub fn signature(&self) -> u8 {
        match self {
            HaarFunction::Cancellative(h) => h.eta,
            HaarFunction::Average(_) => 0,
        }
    }

    pub fn is_cancellative(&self) -> bool {
        matches!(self, HaarFunction::Cancellative(_))
    }

    /// `|I|^{-1/2}`.
    pub fn amplitude(&self) -> f64 {
        let c = self.cube();
        pow2_half(c.level() * c.dim() as i32)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let c = self.cube();
        if !c.contains_point(x) {
            return 0.0;
        }
        match self {
            HaarFunction::Average(_) => self.amplitude(),
            HaarFunction::Cancellative(h) => {
                child_sign(h.eta, c.child_bits_of(x)) * self.amplitude()
            }
        }
    }

    /// The function as a list of constant boxes.
    pub fn pieces(&self) -> Vec<(Aabb, f64)> {
        let a = self.amplitude();
        match self {
            HaarFunction::Average(c) => vec![(c.aabb(), a)],
            HaarFunction::Cancellative(h) => (0..1usize << h.dim())
                .map(|b| (h.cube.child_unchecked(b).aabb(), child_sign(h.eta, b) * a))
                .collect(),
        }
    }

    pub fn to_step(&self) -> StepFunction {
        let c = self.cube();
        let level = c.level() + 1;
        let mut g = StepFunction::zeros_on(&DyadicBox::from_cube(&c).refined(1));
        let a = self.amplitude();
        for b in 0..1usize << c.dim() {
            let child = c.child_unchecked(b);
            let v = match self {
                HaarFunction::Average(_) => a,
                HaarFunction::Cancellative(h) => child_sign(h.eta, b) * a,
            };
            g.set_cell(child.index(), v);
        }
        debug_assert_eq!(g.level(), level);
        g
    }
}

/// A finite Haar expansion `f = Σ α_I h^η_I`, keyed in sorted order.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteHaarExpansion {
    dim: usize,
    coeffs: BTreeMap<HaarIndex, f64>,
}

impl FiniteHaarExpansion {
    pub fn new(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(FiniteHaarExpansion {
            dim,
            coeffs: BTreeMap::new(),
        })
    }

    pub fn from_terms<I: IntoIterator<Item = (HaarIndex, f64)>>(
        dim: usize,
        terms: I,
    ) -> Result<Self> {
        let mut f = Self::new(dim)?;
        for (h, a) in terms {
            f.add_term(h, a)?;
        }
        Ok(f)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Adds `alpha` to the coefficient of `h`; exact zeros are removed.
    pub fn add_term(&mut self, h: HaarIndex, alpha: f64) -> Result<()> {
        if h.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: h.dim(),
            });
        }
        let e = self.coeffs.entry(h).or_insert(0.0);
        *e += alpha;
        if *e == 0.0 {
            self.coeffs.remove(&h);
        }
        Ok(())
    }

    pub fn set(&mut self, h: HaarIndex, alpha: f64) -> Result<()> {
        if h.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: h.dim(),
            });
        }
        if alpha == 0.0 {
            self.coeffs.remove(&h);
        } else {
            self.coeffs.insert(h, alpha);
        }
        Ok(())
    }

    pub fn get(&self, h: &HaarIndex) -> f64 {
        self.coeffs.get(h).copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&HaarIndex, &f64)> {
        self.coeffs.iter()
    }

    pub fn coefficients(&self) -> &BTreeMap<HaarIndex, f64> {
        &self.coeffs
    }

    /// Distinct levels carrying coefficients, ascending.
    pub fn levels(&self) -> Vec<i32> {
        let mut v: Vec<i32> = self.coeffs.keys().map(|h| h.level()).collect();
        v.dedup();
        v
    }

    pub fn finest_level(&self) -> Option<i32> {
        self.coeffs.keys().map(|h| h.level()).max()
    }

    pub fn coarsest_level(&self) -> Option<i32> {
        self.coeffs.keys().next().map(|h| h.level())
    }

    /// Cubes carrying a nonzero coefficient at `level`.
    pub fn cubes_at(&self, level: i32) -> Vec<DyadicCube> {
        let mut v: Vec<DyadicCube> = self
            .coeffs
            .keys()
            .filter(|h| h.level() == level)
            .map(|h| h.cube())
            .collect();
        v.dedup();
        v
    }

    /// Union of the cubes carrying coefficients (contains `supp f`).
    pub fn support_cover(&self) -> DyadicSet {
        DyadicSet::from_cubes_unchecked(self.dim, self.coeffs.keys().map(|h| h.cube()).collect())
    }

    /// `Σ α²`, the squared `L²` norm.
    pub fn l2_norm_sq(&self) -> f64 {
        sum(self.coeffs.values().map(|a| a * a))
    }

    /// `E_k f`: coefficients on cubes of level `< k`.
    pub fn project_e(&self, k: i32) -> Self {
        self.filter(|h| h.level() < k)
    }

    /// `D_k f`: coefficients on cubes of level exactly `k`.
    pub fn project_d(&self, k: i32) -> Self {
        self.filter(|h| h.level() == k)
    }

    pub fn filter<F: Fn(&HaarIndex) -> bool>(&self, keep: F) -> Self {
        FiniteHaarExpansion {
            dim: self.dim,
            coeffs: self
                .coeffs
                .iter()
                .filter(|(h, _)| keep(h))
                .map(|(h, a)| (*h, *a))
                .collect(),
        }
    }

    pub fn map_coefficients<F: Fn(&HaarIndex, f64) -> f64>(&self, g: F) -> Self {
        FiniteHaarExpansion {
            dim: self.dim,
            coeffs: self
                .coeffs
                .iter()
                .map(|(h, a)| (*h, g(h, *a)))
                .filter(|(_, a)| *a != 0.0)
                .collect(),
        }
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map_coefficients(|_, a| c * a)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        let mut out = self.clone();
        for (h, a) in &other.coeffs {
            out.add_term(*h, *a)?;
        }
        Ok(out)
    }

    /// Moves every cube `steps` levels finer, keeping coefficients
    /// (the `L²`-normalised dilation `f ↦ 2^{n·steps/2} f(2^{steps}·)`).
    pub fn dilate(&self, steps: i32) -> Result<Self> {
        let mut out = Self::new(self.dim)?;
        for (h, a) in &self.coeffs {
            let c = h.cube();
            let level = LevelWindow::DEFAULT.check(c.level() as i64 + steps as i64)?;
            let idx = c.index().to_vec();
            out.coeffs
                .insert(h.with_cube(DyadicCube::raw(level, &idx)), *a);
        }
        Ok(out)
    }

    /// Translates `f` by `m·2^{-base_level}`; every cube must be at level `≥ base_level`.
    pub fn translate(&self, m: &[i64], base_level: i32) -> Result<Self> {
        if m.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: m.len(),
            });
        }
        let mut out = Self::new(self.dim)?;
        for (h, a) in &self.coeffs {
            let c = h.cube();
            if c.level() < base_level {
                return Err(Error::InvalidArgument(format!(
                    "cube {c} is coarser than the translation unit level {base_level}"
                )));
            }
            let f = 1i64 << (c.level() - base_level);
            let shift: Vec<i64> = m.iter().map(|mi| mi * f).collect();
            out.coeffs.insert(h.with_cube(c.translate(&shift)), *a);
        }
        Ok(out)
    }

    /// `Σ α_I h_I(x)`.
    pub fn eval(&self, x: &[f64]) -> f64 {
        sum(self.coeffs.iter().map(|(h, a)| a * h.function().eval(x)))
    }

    /// Writes one line per coefficient, `k:(m…) eta=<bits> alpha=<decimal>`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (h, a) in &self.coeffs {
            let bits: String = (0..self.dim)
                .map(|i| if (h.eta >> i) & 1 == 1 { '1' } else { '0' })
                .collect();
            s.push_str(&format!("{} eta={} alpha={}\n", h.cube, bits, a));
        }
        s
    }

    /// Parses [`to_text`](Self::to_text) output; blank lines and `#` comments are skipped.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut dim = None;
        let mut terms = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = || Error::Parse(format!("bad coefficient line {line:?}"));
            let mut parts = line.split_whitespace();
            let cube: DyadicCube = parts.next().ok_or_else(bad)?.parse()?;
            let bits = parts
                .next()
                .and_then(|t| t.strip_prefix("eta="))
                .ok_or_else(bad)?;
            let alpha: f64 = parts
                .next()
                .and_then(|t| t.strip_prefix("alpha="))
                .ok_or_else(bad)?
                .parse()
                .map_err(|_| bad())?;
            if parts.next().is_some() || bits.len() != cube.dim() {
                return Err(bad());
            }
            let mut eta = 0u8;
            for (i, ch) in bits.chars().enumerate() {
                match ch {
                    '0' => {}
                    '1' => eta |= 1 << i,
                    _ => return Err(bad()),
                }
            }
            if *dim.get_or_insert(cube.dim()) != cube.dim() {
                return Err(Error::DimensionMismatch {
                    expected: dim.unwrap(),
                    got: cube.dim(),
                });
            }
            terms.push((HaarIndex::new(cube, eta)?, alpha));
        }
        Self::from_terms(dim.unwrap_or(1), terms)
    }
}

impl fmt::Display for FiniteHaarExpansion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

impl FromStr for FiniteHaarExpansion {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::from_text(s)
    }
}

impl DyadicBox {
    /// The same region on the mesh `steps` levels finer.
    pub fn refined(&self, steps: u32) -> DyadicBox {
        let n = self.dim();
        let lo: Vec<i64> = self.lo().iter().map(|v| v << steps).collect();
        let hi: Vec<i64> = self.hi().iter().map(|v| v << steps).collect();
        DyadicBox::new(self.level() + steps as i32, &lo[..n], &hi[..n]).expect("refined box")
    }

    /// The smallest box on the level-`level` mesh covering `self` (`level ≤ self.level`).
    pub fn coarsened_to(&self, level: i32) -> DyadicBox {
        let s = (self.level() - level) as u32;
        let n = self.dim();
        let lo: Vec<i64> = self.lo().iter().map(|v| v >> s).collect();
        let hi: Vec<i64> = self.hi().iter().map(|v| ((v - 1) >> s) + 1).collect();
        DyadicBox::new(level, &lo[..n], &hi[..n]).expect("coarsened box")
    }

    /// Smallest box on the same mesh containing both.
    pub fn hull(&self, other: &DyadicBox) -> DyadicBox {
        assert_eq!(self.level(), other.level());
        let n = self.dim();
        let lo: Vec<i64> = (0..n).map(|i| self.lo()[i].min(other.lo()[i])).collect();
        let hi: Vec<i64> = (0..n).map(|i| self.hi()[i].max(other.hi()[i])).collect();
        DyadicBox::new(self.level(), &lo, &hi).expect("hull box")
    }
}

/// A piecewise-constant function on the level-`L` mesh of a dyadic box,
/// zero outside the box.
#[derive(Clone, Debug, PartialEq)]
pub struct StepFunction {
    bx: DyadicBox,
    values: Vec<f64>,
}

impl StepFunction {
    pub fn zeros_on(bx: &DyadicBox) -> Self {
        StepFunction {
            bx: *bx,
            values: vec![0.0; bx.cube_count() as usize],
        }
    }

    pub fn from_values(bx: &DyadicBox, values: Vec<f64>) -> Result<Self> {
        if values.len() as u64 != bx.cube_count() {
            return Err(Error::InvalidArgument(format!(
                "{} values for a box of {} cells",
                values.len(),
                bx.cube_count()
            )));
        }
        Ok(StepFunction { bx: *bx, values })
    }

    /// The zero function, represented on the single cell `[0,1)^n`.
    pub fn zero(dim: usize) -> Self {
        let c = DyadicCube::raw(0, &vec![0; dim]);
        Self::zeros_on(&DyadicBox::from_cube(&c))
    }

    pub fn dim(&self) -> usize {
        self.bx.dim()
    }

    pub fn level(&self) -> i32 {
        self.bx.level()
    }

    pub fn domain(&self) -> &DyadicBox {
        &self.bx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn cell_measure(&self) -> f64 {
        2f64.powi(-self.level() * self.dim() as i32)
    }

    fn offset(&self, idx: &[i64]) -> Option<usize> {
        let mut off = 0usize;
        let mut stride = 1usize;
        for i in 0..self.dim() {
            let lo = self.bx.lo()[i];
            let hi = self.bx.hi()[i];
            if idx[i] < lo || idx[i] >= hi {
                return None;
            }
            off += (idx[i] - lo) as usize * stride;
            stride *= (hi - lo) as usize;
        }
        Some(off)
    }

    fn index_of(&self, mut off: usize) -> [i64; MAX_DIM] {
        let mut idx = [0i64; MAX_DIM];
        for i in 0..self.dim() {
            let w = (self.bx.hi()[i] - self.bx.lo()[i]) as usize;
            idx[i] = self.bx.lo()[i] + (off % w) as i64;
            off /= w;
        }
        idx
    }

    pub fn cell(&self, idx: &[i64]) -> f64 {
        self.offset(idx).map(|o| self.values[o]).unwrap_or(0.0)
    }

    pub(crate) fn set_cell(&mut self, idx: &[i64], v: f64) {
        let o = self.offset(idx).expect("cell inside box");
        self.values[o] = v;
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let s = 2f64.powi(self.level());
        let idx: Vec<i64> = x[..self.dim()]
            .iter()
            .map(|&xi| (xi * s).floor() as i64)
            .collect();
        self.cell(&idx)
    }

    /// `(cube, value)` for every cell, in storage order.
    pub fn cells(&self) -> impl Iterator<Item = (DyadicCube, f64)> + '_ {
        let n = self.dim();
        let level = self.level();
        self.values
            .iter()
            .enumerate()
            .map(move |(o, &v)| (DyadicCube::raw(level, &self.index_of(o)[..n]), v))
    }

    /// Nonzero cells as constant boxes, with equal neighbours merged along the first axis.
    pub fn pieces(&self) -> Vec<(Aabb, f64)> {
        let n = self.dim();
        let h = 2f64.powi(-self.level());
        let w0 = (self.bx.hi()[0] - self.bx.lo()[0]) as usize;
        let mut out = Vec::new();
        for (row, chunk) in self.values.chunks(w0.max(1)).enumerate() {
            let base = self.index_of(row * w0);
            let mut i = 0;
            while i < chunk.len() {
                let v = chunk[i];
                let mut j = i + 1;
                while j < chunk.len() && chunk[j] == v {
                    j += 1;
                }
                if v != 0.0 {
                    let mut lo = [0.0; MAX_DIM];
                    let mut hi = [0.0; MAX_DIM];
                    lo[0] = (base[0] + i as i64) as f64 * h;
                    hi[0] = (base[0] + j as i64) as f64 * h;
                    for d in 1..n {
                        lo[d] = base[d] as f64 * h;
                        hi[d] = (base[d] + 1) as f64 * h;
                    }
                    out.push((Aabb::new(&lo[..n], &hi[..n]), v));
                }
                i = j;
            }
        }
        out
    }

    /// Union of the cells where the function is nonzero.
    pub fn support(&self) -> DyadicSet {
        DyadicSet::from_cubes_unchecked(
            self.dim(),
            self.cells()
                .filter(|(_, v)| *v != 0.0)
                .map(|(c, _)| c)
                .collect(),
        )
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| *v == 0.0)
    }

    /// The same function on a finer mesh and/or larger box.
    pub fn regrid(&self, target: &DyadicBox) -> Result<Self> {
        if target.level() < self.level() {
            return Err(Error::MeshTooCoarse {
                mesh: target.level(),
                needed: self.level(),
            });
        }
        let s = (target.level() - self.level()) as u32;
        let mut out = StepFunction::zeros_on(target);
        let n = self.dim();
        for o in 0..out.values.len() {
            let idx = out.index_of(o);
            let coarse: Vec<i64> = idx[..n].iter().map(|v| v >> s).collect();
            out.values[o] = self.cell(&coarse);
        }
        Ok(out)
    }

    fn common_grid(&self, other: &Self) -> DyadicBox {
        let level = self.level().max(other.level());
        let a = self.bx.refined((level - self.level()) as u32);
        let b = other.bx.refined((level - other.level()) as u32);
        a.hull(&b)
    }

    /// Both functions on a common mesh and box.
    pub fn align(&self, other: &Self) -> Result<(Self, Self)> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        let g = self.common_grid(other);
        Ok((self.regrid(&g)?, other.regrid(&g)?))
    }

    pub fn zip_with<F: Fn(f64, f64) -> f64>(&self, other: &Self, op: F) -> Result<Self> {
        let (mut a, b) = self.align(other)?;
        for (x, y) in a.values.iter_mut().zip(&b.values) {
            *x = op(*x, *y);
        }
        Ok(a)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, c: f64) -> Self {
        StepFunction {
            bx: self.bx,
            values: self.values.iter().map(|v| c * v).collect(),
        }
    }

    /// `∫ g₁ g₂`.
    pub fn inner(&self, other: &Self) -> Result<f64> {
        let (a, b) = self.align(other)?;
        Ok(sum(a.values.iter().zip(&b.values).map(|(x, y)| x * y)) * a.cell_measure())
    }

    /// `⟨g, h⟩` for a Haar function `h`.
    pub fn inner_haar(&self, h: &HaarFunction) -> Result<f64> {
        self.inner(&h.to_step())
    }

    /// `sup |g₁ - g₂|`.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        let (a, b) = self.align(other)?;
        Ok(a.values
            .iter()
            .zip(&b.values)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max))
    }

    /// `(∫_region |g|^p)^{1/p}`, or over all of `ℝⁿ` without a region.
    pub fn lp_norm(&self, p: f64, region: Option<&DyadicSet>) -> Result<f64> {
        if p < 1.0 || !p.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "exponent p = {p} outside [1, ∞)"
            )));
        }
        if let Some(r) = region {
            if let Some(fine) = r.finest_level() {
                if fine > self.level() {
                    let g = self.regrid(&self.bx.refined((fine - self.level()) as u32))?;
                    return g.lp_norm(p, region);
                }
            }
        }
        let mut acc = Neumaier::new();
        for (c, v) in self.cells() {
            if v == 0.0 || region.is_some_and(|r| !r.contains_cube(&c)) {
                continue;
            }
            acc.add(pow_abs(v, p));
        }
        Ok((acc.value() * self.cell_measure()).powf(1.0 / p))
    }

    /// `E_k g`, the averages over level-`k` cubes, on the level-`k` mesh
    /// (or `g` itself when `k` is at least the mesh level).
    pub fn project_e(&self, k: i32) -> Self {
        if k >= self.level() {
            return self.clone();
        }
        let target = self.bx.coarsened_to(k);
        let s = (self.level() - k) as u32;
        let n = self.dim();
        let mut sums: HashMap<[i64; MAX_DIM], Neumaier> = HashMap::new();
        for (o, &v) in self.values.iter().enumerate() {
            let idx = self.index_of(o);
            let mut key = [0i64; MAX_DIM];
            for i in 0..n {
                key[i] = idx[i] >> s;
            }
            sums.entry(key).or_default().add(v);
        }
        let scale = 2f64.powi(-(s as i32) * n as i32);
        let mut out = StepFunction::zeros_on(&target);
        for (key, acc) in sums {
            out.set_cell(&key[..n], acc.value() * scale);
        }
        out
    }

    /// `D_k g = E_{k+1} g - E_k g`.
    pub fn project_d(&self, k: i32) -> Result<Self> {
        self.project_e(k + 1).sub(&self.project_e(k))
    }
}

/// `|v|^p` with the common exponents special-cased.
pub fn pow_abs(v: f64, p: f64) -> f64 {
    let a = v.abs();
    if p == 1.0 {
        a
    } else if p == 2.0 {
        a * a
    } else {
        a.powf(p)
    }
}

/// The exact step function `Σ α_I h_I` on the mesh one level finer than the finest cube.
pub fn synthesize(f: &FiniteHaarExpansion) -> Result<StepFunction> {
    let Some(fine) = f.finest_level() else {
        return Ok(StepFunction::zero(f.dim()));
    };
    let level = LevelWindow::DEFAULT.check(fine as i64 + 1)?;
    let mut bx: Option<DyadicBox> = None;
    for h in f.coefficients().keys() {
        let c = h.cube();
        let b = DyadicBox::from_cube(&c).refined((level - c.level()) as u32);
        bx = Some(match bx {
            None => b,
            Some(acc) => acc.hull(&b),
        });
    }
    let mut g = StepFunction::zeros_on(&bx.unwrap());
    let n = f.dim();
    for (h, &alpha) in f.iter() {
        let c = h.cube();
        let steps = (level - c.level()) as u32;
        let child_shift = steps - 1;
        let amp = alpha * HaarFunction::Cancellative(*h).amplitude();
        let sub = DyadicBox::from_cube(&c).refined(steps);
        for cell in sub.cubes() {
            let mut bits = 0usize;
            for i in 0..n {
                bits |= (((cell.index()[i] >> child_shift) & 1) as usize) << i;
            }
            let o = g.offset(cell.index()).expect("cell inside hull");
            g.values[o] += child_sign(h.eta, bits) * amp;
        }
    }
    Ok(g)
}

/// Haar coefficients `⟨h^η_I, g⟩` for all cubes of levels `a..=b`.
///
/// Coefficients below the rounding level of their cube are dropped.
pub fn analyze(g: &StepFunction, a: i32, b: i32) -> Result<FiniteHaarExpansion> {
    if b + 1 > g.level() {
        return Err(Error::MeshTooCoarse {
            mesh: g.level(),
            needed: b + 1,
        });
    }
    if a > b {
        return Err(Error::InvalidArgument(format!(
            "empty level range [{a}, {b}]"
        )));
    }
    LevelWindow::DEFAULT.check(a as i64)?;
    let n = g.dim();
    let mut out = FiniteHaarExpansion::new(n)?;
    // integrals and absolute integrals of g over the cubes of the current level
    let mut level = g.level();
    let mut cur: HashMap<[i64; MAX_DIM], (f64, f64)> = HashMap::new();
    for (o, &v) in g.values.iter().enumerate() {
        if v != 0.0 {
            let m = g.cell_measure();
            cur.insert(g.index_of(o), (v * m, v.abs() * m));
        }
    }
    while level > a {
        let parent_level = level - 1;
        let mut groups: BTreeMap<[i64; MAX_DIM], Vec<(usize, f64, f64)>> = BTreeMap::new();
        for (idx, (int, abs)) in &cur {
            let mut key = [0i64; MAX_DIM];
            let mut bits = 0usize;
            for i in 0..n {
                key[i] = idx[i] >> 1;
                bits |= ((idx[i] & 1) as usize) << i;
            }
            groups.entry(key).or_default().push((bits, *int, *abs));
        }
        let mut next = HashMap::new();
        for (key, children) in groups {
            let total = sum(children.iter().map(|c| c.1));
            let mass = sum(children.iter().map(|c| c.2));
            if parent_level <= b {
                let cube = DyadicCube::raw(parent_level, &key[..n]);
                let amp = pow2_half(parent_level * n as i32);
                for eta in 1..(1u8 << n) {
                    let alpha = amp * sum(children.iter().map(|c| child_sign(eta, c.0) * c.1));
                    if alpha.abs() > 1e-14 * amp * mass {
                        out.set(HaarIndex { cube, eta }, alpha)?;
                    }
                }
            }
            next.insert(key, (total, mass));
        }
        cur = next;
        level = parent_level;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c1(k: i32, m: i64) -> DyadicCube {
        DyadicCube::new(k, &[m]).unwrap()
    }

    fn h1(k: i32, m: i64) -> HaarIndex {
        HaarIndex::new(c1(k, m), 1).unwrap()
    }

    #[test]
    fn haar_eval_examples() {
        let h = h1(0, 0).function();
        assert_eq!(h.eval(&[0.3]), 1.0);
        assert_eq!(h.eval(&[0.7]), -1.0);
        assert_eq!(
            HaarFunction::Average(c1(-1, 0)).eval(&[1.5]),
            std::f64::consts::FRAC_1_SQRT_2
        );
        let sq = HaarIndex::new(DyadicCube::unit(2).unwrap(), 0b11).unwrap();
        assert_eq!(sq.function().eval(&[0.25, 0.75]), -1.0);
        assert_eq!(h.eval(&[1.5]), 0.0);
    }

    #[test]
    fn zero_signature_is_not_cancellative() {
        assert!(HaarIndex::new(c1(0, 0), 0).is_err());
        assert!(HaarIndex::new(c1(0, 0), 2).is_err());
    }

    #[test]
    fn pow2_half_is_exact_on_even_exponents() {
        assert_eq!(pow2_half(4), 4.0);
        assert_eq!(pow2_half(-2), 0.5);
        assert_eq!(pow2_half(1), std::f64::consts::SQRT_2);
        assert_eq!(pow2_half(-1), std::f64::consts::FRAC_1_SQRT_2);
    }

    #[test]
    fn synthesize_examples() {
        let f = FiniteHaarExpansion::from_terms(1, [(h1(0, 0), 1.0)]).unwrap();
        let g = synthesize(&f).unwrap();
        assert_eq!(g.level(), 1);
        assert_eq!(g.values(), &[1.0, -1.0]);

        let empty = FiniteHaarExpansion::new(1).unwrap();
        assert!(synthesize(&empty).unwrap().is_zero());

        let f = FiniteHaarExpansion::from_terms(
            1,
            [(h1(0, 0), 1.0), (h1(1, 0), std::f64::consts::SQRT_2 * 0.25)],
        )
        .unwrap();
        let g = synthesize(&f).unwrap();
        assert_eq!(g.level(), 2);
        let expect = [1.5, 0.5, -1.0, -1.0];
        for (v, e) in g.values().iter().zip(expect) {
            assert!((v - e).abs() < 1e-15, "{v} vs {e}");
        }
    }

    #[test]
    fn analyze_examples() {
        let bx = DyadicBox::new(1, &[0], &[2]).unwrap();
        let g = StepFunction::from_values(&bx, vec![1.0, -1.0]).unwrap();
        let f = analyze(&g, -3, 0).unwrap();
        assert_eq!(f.len(), 1);
        assert_eq!(f.get(&h1(0, 0)), 1.0);

        let bx = DyadicBox::new(4, &[0], &[16]).unwrap();
        let one = StepFunction::from_values(&bx, vec![1.0; 16]).unwrap();
        let f = analyze(&one, 0, 3).unwrap();
        assert!(f.is_empty());

        assert!(matches!(
            analyze(&one, 0, 4),
            Err(Error::MeshTooCoarse { .. })
        ));
    }

    #[test]
    fn projection_examples() {
        let f = FiniteHaarExpansion::from_terms(1, [(h1(0, 0), 1.0)]).unwrap();
        assert!(f.project_e(0).is_empty());
        assert_eq!(f.project_e(1), f);
        assert_eq!(f.project_d(0), f);
    }

    #[test]
    fn inner_product_examples() {
        let a = h1(0, 0).function().to_step();
        let b = h1(0, 1).function().to_step();
        assert_eq!(a.inner(&a).unwrap(), 1.0);
        assert_eq!(a.inner(&b).unwrap(), 0.0);
        assert_eq!(a.inner_haar(&HaarFunction::Average(c1(0, 0))).unwrap(), 0.0);
    }

    #[test]
    fn lp_norm_examples() {
        let g = h1(0, 0).function().to_step();
        for p in [1.0, 1.5, 2.0, 3.7] {
            assert!((g.lp_norm(p, None).unwrap() - 1.0).abs() < 1e-15);
        }
        let g = h1(3, 2).function().to_step();
        for p in [1.0, 2.0, 3.0] {
            let expect = 2f64.powf(-3.0 * (1.0 / p - 0.5));
            assert!((g.lp_norm(p, None).unwrap() - expect).abs() < 1e-14);
        }
        let far = DyadicSet::from_cubes(1, [c1(0, 5)]).unwrap();
        assert_eq!(g.lp_norm(2.0, Some(&far)).unwrap(), 0.0);
    }

    #[test]
    fn text_format_round_trips() {
        let f = FiniteHaarExpansion::from_terms(
            2,
            [
                (
                    HaarIndex::new(DyadicCube::new(-1, &[3, -2]).unwrap(), 0b01).unwrap(),
                    0.1,
                ),
                (
                    HaarIndex::new(DyadicCube::new(2, &[0, 0]).unwrap(), 0b11).unwrap(),
                    -1.0 / 3.0,
                ),
            ],
        )
        .unwrap();
        let text = f.to_text();
        assert!(text.contains("-1:(3,-2) eta=10 alpha=0.1"));
        assert_eq!(FiniteHaarExpansion::from_text(&text).unwrap(), f);
        assert!(FiniteHaarExpansion::from_text("0:(0) eta=0 alpha=1").is_err());
    }

    #[test]
    fn translate_and_dilate() {
        let f = FiniteHaarExpansion::from_terms(1, [(h1(0, 0), 1.0), (h1(1, 1), 2.0)]).unwrap();
        let t = f.translate(&[3], 0).unwrap();
        assert_eq!(t.get(&h1(0, 3)), 1.0);
        assert_eq!(t.get(&h1(1, 7)), 2.0);
        let d = f.dilate(1).unwrap();
        assert_eq!(d.get(&h1(1, 0)), 1.0);
        assert_eq!(d.get(&h1(2, 1)), 2.0);
    }

    #[test]
    fn step_projection_averages() {
        let bx = DyadicBox::new(2, &[0], &[4]).unwrap();
        let g = StepFunction::from_values(&bx, vec![1.0, 3.0, 5.0, 7.0]).unwrap();
        let e1 = g.project_e(1);
        assert_eq!(e1.values(), &[2.0, 6.0]);
        assert_eq!(g.project_e(0).values(), &[4.0]);
        assert_eq!(g.project_e(5), g);
    }

    #[test]
    fn pieces_merge_runs() {
        let bx = DyadicBox::new(0, &[0], &[5]).unwrap();
        let g = StepFunction::from_values(&bx, vec![1.0, 1.0, 0.0, 2.0, 2.0]).unwrap();
        let p = g.pieces();
        assert_eq!(p.len(), 2);
        assert_eq!(p[0], (Aabb::interval(0.0, 2.0), 1.0));
        assert_eq!(p[1], (Aabb::interval(3.0, 5.0), 2.0));
    }
}
