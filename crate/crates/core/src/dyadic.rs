//! Exact dyadic geometry under the ℓ∞ metric.
//!
//! Cubes are `2^{-k}([0,1)^n + m)` for a level `k` and an integer index `m`.
//! All coordinates, distances and measures are dyadic rationals and are kept
//! exact; floating point only enters through [`Aabb`], which is the
//! integration-domain view used by the quadrature code.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use crate::error::{Error, Result};

/// Largest supported ambient dimension.
pub const MAX_DIM: usize = 3;

/// Admissible range of cube levels. Operations that would leave it fail.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LevelWindow {
    pub min: i32,
    pub max: i32,
}

impl LevelWindow {
    pub const DEFAULT: LevelWindow = LevelWindow { min: -16, max: 16 };

    pub fn contains(&self, level: i64) -> bool {
        level >= self.min as i64 && level <= self.max as i64
    }

    pub fn check(&self, level: i64) -> Result<i32> {
        if self.contains(level) {
            Ok(level as i32)
        } else {
            Err(Error::LevelOutOfWindow {
                level,
                min: self.min,
                max: self.max,
            })
        }
    }
}

impl Default for LevelWindow {
    fn default() -> Self {
        Self::DEFAULT
    }
}

pub(crate) fn check_dim(dim: usize) -> Result<()> {
    if (1..=MAX_DIM).contains(&dim) {
        Ok(())
    } else {
        Err(Error::UnsupportedDimension(dim))
    }
}

/// An exact dyadic rational `num · 2^exp`, kept normalised (`num` odd, or zero).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Dyadic {
    num: i128,
    exp: i32,
}

impl Dyadic {
    pub const ZERO: Dyadic = Dyadic { num: 0, exp: 0 };
    pub const ONE: Dyadic = Dyadic { num: 1, exp: 0 };

    pub fn new(num: i128, exp: i32) -> Self {
        if num == 0 {
            return Self::ZERO;
        }
        let tz = num.trailing_zeros() as i32;
        Dyadic {
            num: num >> tz,
            exp: exp + tz,
        }
    }

    pub fn int(v: i64) -> Self {
        Self::new(v as i128, 0)
    }

    pub fn pow2(e: i32) -> Self {
        Dyadic { num: 1, exp: e }
    }

    /// Every finite double is a dyadic rational; this conversion is exact.
    pub fn from_f64(x: f64) -> Option<Self> {
        if !x.is_finite() {
            return None;
        }
        if x == 0.0 {
            return Some(Self::ZERO);
        }
        let bits = x.to_bits();
        let sign: i128 = if bits >> 63 == 0 { 1 } else { -1 };
        let raw_exp = ((bits >> 52) & 0x7ff) as i32;
        let frac = (bits & 0x000f_ffff_ffff_ffff) as i128;
        let (mant, e) = if raw_exp == 0 {
            (frac, -1074)
        } else {
            (frac | (1 << 52), raw_exp - 1075)
        };
        Some(Self::new(sign * mant, e))
    }

    pub fn numerator(&self) -> i128 {
        self.num
    }

    pub fn exponent(&self) -> i32 {
        self.exp
    }

    pub fn is_zero(&self) -> bool {
        self.num == 0
    }

    pub fn abs(self) -> Self {
        Dyadic {
            num: self.num.abs(),
            exp: self.exp,
        }
    }

    pub fn to_f64(self) -> f64 {
        // i128 -> f64 rounds once; exact whenever |num| < 2^53.
        (self.num as f64) * 2f64.powi(self.exp)
    }

    fn aligned(a: Dyadic, b: Dyadic) -> (i128, i128, i32) {
        let e = a.exp.min(b.exp);
        let sa = (a.exp - e) as u32;
        let sb = (b.exp - e) as u32;
        let na = shl_checked(a.num, sa);
        let nb = shl_checked(b.num, sb);
        (na, nb, e)
    }
}

fn shl_checked(v: i128, s: u32) -> i128 {
    if v == 0 {
        return 0;
    }
    assert!(
        s < 126 && (v.unsigned_abs().leading_zeros() as u32) > s + 1,
        "dyadic arithmetic overflow"
    );
    v << s
}

impl Add for Dyadic {
    type Output = Dyadic;
    fn add(self, rhs: Dyadic) -> Dyadic {
        let (a, b, e) = Dyadic::aligned(self, rhs);
        Dyadic::new(a.checked_add(b).expect("dyadic arithmetic overflow"), e)
    }
}

impl Sub for Dyadic {
    type Output = Dyadic;
    fn sub(self, rhs: Dyadic) -> Dyadic {
        self + (-rhs)
    }
}

impl Neg for Dyadic {
    type Output = Dyadic;
    fn neg(self) -> Dyadic {
        Dyadic {
            num: -self.num,
            exp: self.exp,
        }
    }
}

impl Mul for Dyadic {
    type Output = Dyadic;
    fn mul(self, rhs: Dyadic) -> Dyadic {
        Dyadic::new(
            self.num
                .checked_mul(rhs.num)
                .expect("dyadic arithmetic overflow"),
            self.exp + rhs.exp,
        )
    }
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        let (a, b, _) = Dyadic::aligned(*self, *other);
        a.cmp(&b)
    }
}

impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.exp >= 0 {
            write!(f, "{}", shl_checked(self.num, self.exp as u32))
        } else if self.exp > -127 {
            write!(f, "{}/{}", self.num, 1u128 << (-self.exp) as u32)
        } else {
            write!(f, "{}*2^{}", self.num, self.exp)
        }
    }
}

/// Axis-aligned floating box `[lo, hi)`; the integration-domain view of cubes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Aabb {
    dim: usize,
    lo: [f64; MAX_DIM],
    hi: [f64; MAX_DIM],
}

impl Aabb {
    pub fn new(lo: &[f64], hi: &[f64]) -> Self {
        assert_eq!(lo.len(), hi.len());
        assert!(!lo.is_empty() && lo.len() <= MAX_DIM);
        let mut a = Aabb {
            dim: lo.len(),
            lo: [0.0; MAX_DIM],
            hi: [0.0; MAX_DIM],
        };
        a.lo[..lo.len()].copy_from_slice(lo);
        a.hi[..hi.len()].copy_from_slice(hi);
        a
    }

    pub fn interval(lo: f64, hi: f64) -> Self {
        Self::new(&[lo], &[hi])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo[..self.dim]
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi[..self.dim]
    }

    pub fn lo_mut(&mut self) -> &mut [f64] {
        &mut self.lo[..self.dim]
    }

    pub fn hi_mut(&mut self) -> &mut [f64] {
        &mut self.hi[..self.dim]
    }

    pub fn is_empty(&self) -> bool {
        (0..self.dim).any(|i| self.hi[i] <= self.lo[i])
    }

    pub fn measure(&self) -> f64 {
        (0..self.dim)
            .map(|i| (self.hi[i] - self.lo[i]).max(0.0))
            .product()
    }

    pub fn diameter(&self) -> f64 {
        (0..self.dim)
            .map(|i| self.hi[i] - self.lo[i])
            .fold(0.0, f64::max)
    }

    pub fn center(&self) -> [f64; MAX_DIM] {
        let mut c = [0.0; MAX_DIM];
        for i in 0..self.dim {
            c[i] = 0.5 * (self.lo[i] + self.hi[i]);
        }
        c
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        (0..self.dim).all(|i| x[i] >= self.lo[i] && x[i] < self.hi[i])
    }

    /// ℓ∞ distance from a point to the closed box.
    pub fn dist_point(&self, x: &[f64]) -> f64 {
        (0..self.dim)
            .map(|i| (self.lo[i] - x[i]).max(x[i] - self.hi[i]).max(0.0))
            .fold(0.0, f64::max)
    }

    /// ℓ∞ distance between the closures of two boxes.
    pub fn dist_box(&self, other: &Aabb) -> f64 {
        (0..self.dim)
            .map(|i| {
                (other.lo[i] - self.hi[i])
                    .max(self.lo[i] - other.hi[i])
                    .max(0.0)
            })
            .fold(0.0, f64::max)
    }

    /// Largest ℓ∞ distance between a point of `self` and a point of `other`.
    pub fn max_dist_box(&self, other: &Aabb) -> f64 {
        (0..self.dim)
            .map(|i| (other.hi[i] - self.lo[i]).max(self.hi[i] - other.lo[i]))
            .fold(0.0, f64::max)
    }

    pub fn intersect(&self, other: &Aabb) -> Aabb {
        let mut out = *self;
        for i in 0..self.dim {
            out.lo[i] = self.lo[i].max(other.lo[i]);
            out.hi[i] = self.hi[i].min(other.hi[i]);
        }
        out
    }

    /// Exact decomposition of `self ∖ [c-r, c+r]^n` into at most `2n` disjoint boxes.
    pub fn minus_ball(&self, c: &[f64], r: f64) -> Vec<Aabb> {
        let mut out = Vec::with_capacity(2 * self.dim);
        let mut rest = *self;
        for i in 0..self.dim {
            if rest.is_empty() {
                break;
            }
            let (blo, bhi) = (c[i] - r, c[i] + r);
            if rest.lo[i] < blo {
                let mut piece = rest;
                piece.hi[i] = piece.hi[i].min(blo);
                if !piece.is_empty() {
                    out.push(piece);
                }
            }
            if rest.hi[i] > bhi {
                let mut piece = rest;
                piece.lo[i] = piece.lo[i].max(bhi);
                if !piece.is_empty() {
                    out.push(piece);
                }
            }
            rest.lo[i] = rest.lo[i].max(blo);
            rest.hi[i] = rest.hi[i].min(bhi);
        }
        out
    }
}

/// A dyadic cube `2^{-level}([0,1)^n + index)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DyadicCube {
    level: i32,
    dim: u8,
    index: [i64; MAX_DIM],
}

impl DyadicCube {
    pub fn new(level: i32, index: &[i64]) -> Result<Self> {
        check_dim(index.len())?;
        LevelWindow::DEFAULT.check(level as i64)?;
        Ok(Self::raw(level, index))
    }

    pub(crate) fn raw(level: i32, index: &[i64]) -> Self {
        let mut idx = [0i64; MAX_DIM];
        idx[..index.len()].copy_from_slice(index);
        DyadicCube {
            level,
            dim: index.len() as u8,
            index: idx,
        }
    }

    /// `[0,1)^n`.
    pub fn unit(dim: usize) -> Result<Self> {
        Self::new(0, &vec![0; dim])
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    pub fn level(&self) -> i32 {
        self.level
    }

    pub fn index(&self) -> &[i64] {
        &self.index[..self.dim as usize]
    }

    pub fn side(&self) -> Dyadic {
        Dyadic::pow2(-self.level)
    }

    pub fn side_f64(&self) -> f64 {
        2f64.powi(-self.level)
    }

    pub fn measure(&self) -> Dyadic {
        Dyadic::pow2(-self.level * self.dim as i32)
    }

    pub fn lower(&self, i: usize) -> Dyadic {
        Dyadic::new(self.index[i] as i128, -self.level)
    }

    pub fn upper(&self, i: usize) -> Dyadic {
        Dyadic::new(self.index[i] as i128 + 1, -self.level)
    }

    pub fn center(&self) -> Vec<Dyadic> {
        (0..self.dim())
            .map(|i| Dyadic::new(2 * self.index[i] as i128 + 1, -self.level - 1))
            .collect()
    }

    pub fn aabb(&self) -> Aabb {
        let s = self.side_f64();
        let n = self.dim();
        let lo: Vec<f64> = self.index().iter().map(|&m| m as f64 * s).collect();
        let hi: Vec<f64> = self.index().iter().map(|&m| (m + 1) as f64 * s).collect();
        Aabb::new(&lo[..n], &hi[..n])
    }

    /// The `s`-th dyadic ancestor `I^{(s)}`.
    pub fn ancestor(&self, s: u32) -> Result<Self> {
        LevelWindow::DEFAULT.check(self.level as i64 - s as i64)?;
        Ok(self.ancestor_unchecked(s))
    }

    pub(crate) fn ancestor_unchecked(&self, s: u32) -> Self {
        let mut out = *self;
        out.level -= s as i32;
        for i in 0..self.dim() {
            out.index[i] = self.index[i] >> s;
        }
        out
    }

    pub fn parent(&self) -> Result<Self> {
        self.ancestor(1)
    }

    /// Child selected by the bit pattern `bits` (bit i set = upper half in direction i).
    pub(crate) fn child_unchecked(&self, bits: usize) -> Self {
        let mut out = *self;
        out.level += 1;
        for i in 0..self.dim() {
            out.index[i] = 2 * self.index[i] + ((bits >> i) & 1) as i64;
        }
        out
    }

    /// The `2^n` children, ordered by their position bits.
    pub fn children(&self) -> Result<Vec<Self>> {
        LevelWindow::DEFAULT.check(self.level as i64 + 1)?;
        Ok((0..1usize << self.dim())
            .map(|b| self.child_unchecked(b))
            .collect())
    }

    /// `I ∔ m = I + ℓ(I) m`.
    pub fn translate(&self, m: &[i64]) -> Self {
        let mut out = *self;
        for i in 0..self.dim() {
            out.index[i] += m[i];
        }
        out
    }

    /// Whether `other ⊆ self`.
    pub fn contains(&self, other: &DyadicCube) -> bool {
        other.level >= self.level
            && other.ancestor_unchecked((other.level - self.level) as u32) == *self
    }

    pub fn intersects(&self, other: &DyadicCube) -> bool {
        self.contains(other) || other.contains(self)
    }

    /// The level-`level` cube containing the point `x`.
    pub fn containing(level: i32, x: &[f64]) -> Result<Self> {
        check_dim(x.len())?;
        LevelWindow::DEFAULT.check(level as i64)?;
        let s = 2f64.powi(level);
        let idx: Vec<i64> = x.iter().map(|v| (v * s).floor() as i64).collect();
        Ok(Self::raw(level, &idx))
    }

    pub fn contains_point(&self, x: &[f64]) -> bool {
        let s = 2f64.powi(self.level);
        (0..self.dim()).all(|i| (x[i] * s).floor() as i64 == self.index[i])
    }

    /// The position bits of the level-`level+1` child containing `x`.
    pub(crate) fn child_bits_of(&self, x: &[f64]) -> usize {
        let s = 2f64.powi(self.level + 1);
        let mut bits = 0;
        for i in 0..self.dim() {
            let c = (x[i] * s).floor() as i64;
            bits |= ((c - 2 * self.index[i]) as usize & 1) << i;
        }
        bits
    }

    /// The `9^n` same-level cubes making up the concentric expansion `9I`.
    pub fn expand9_cubes(&self) -> Vec<DyadicCube> {
        let n = self.dim();
        let mut out = Vec::with_capacity(9usize.pow(n as u32));
        let mut m = vec![-4i64; n];
        loop {
            out.push(self.translate(&m));
            let mut i = 0;
            while i < n {
                m[i] += 1;
                if m[i] <= 4 {
                    break;
                }
                m[i] = -4;
                i += 1;
            }
            if i == n {
                break;
            }
        }
        out
    }

    /// `9I` as a canonical set.
    pub fn expand9(&self) -> DyadicSet {
        DyadicSet::from_cubes_unchecked(self.dim(), self.expand9_cubes())
    }
}

impl fmt::Display for DyadicCube {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:(", self.level)?;
        for (i, m) in self.index().iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{m}")?;
        }
        write!(f, ")")
    }
}

impl FromStr for DyadicCube {
    type Err = Error;

    /// Parses the `k:(m1,…,mn)` notation.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("bad cube notation {s:?}"));
        let (k, rest) = s.trim().split_once(':').ok_or_else(bad)?;
        let level: i32 = k.trim().parse().map_err(|_| bad())?;
        let inner = rest
            .trim()
            .strip_prefix('(')
            .and_then(|r| r.strip_suffix(')'))
            .ok_or_else(bad)?;
        let index = inner
            .split(',')
            .map(|t| t.trim().parse::<i64>().map_err(|_| bad()))
            .collect::<Result<Vec<_>>>()?;
        DyadicCube::new(level, &index)
    }
}

/// Exact ℓ∞ distance between the closures of two cubes.
pub fn linf_dist_cubes(a: &DyadicCube, b: &DyadicCube) -> Dyadic {
    let mut best = Dyadic::ZERO;
    for i in 0..a.dim() {
        let gap = (b.lower(i) - a.upper(i)).max(a.lower(i) - b.upper(i));
        best = best.max(gap);
    }
    best
}

/// Exact ℓ∞ distance from a point to the closure of a cube.
pub fn linf_dist_point_cube(x: &[Dyadic], c: &DyadicCube) -> Dyadic {
    let mut best = Dyadic::ZERO;
    for (i, xi) in x.iter().enumerate().take(c.dim()) {
        let gap = (c.lower(i) - *xi).max(*xi - c.upper(i));
        best = best.max(gap);
    }
    best
}

/// Distance from a cube to a set; `None` for the empty set.
pub fn linf_dist_cube_set(a: &DyadicCube, s: &DyadicSet) -> Option<Dyadic> {
    s.cubes().iter().map(|c| linf_dist_cubes(a, c)).min()
}

/// Distance from a point to a set; `None` for the empty set.
pub fn linf_dist_point_set(x: &[Dyadic], s: &DyadicSet) -> Option<Dyadic> {
    s.cubes().iter().map(|c| linf_dist_point_cube(x, c)).min()
}

/// A rectangular block of same-level dyadic cubes, index range `[lo, hi)` per axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct DyadicBox {
    level: i32,
    dim: u8,
    lo: [i64; MAX_DIM],
    hi: [i64; MAX_DIM],
}

impl DyadicBox {
    pub fn new(level: i32, lo: &[i64], hi: &[i64]) -> Result<Self> {
        check_dim(lo.len())?;
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch {
                expected: lo.len(),
                got: hi.len(),
            });
        }
        LevelWindow::DEFAULT.check(level as i64)?;
        let mut b = DyadicBox {
            level,
            dim: lo.len() as u8,
            lo: [0; MAX_DIM],
            hi: [0; MAX_DIM],
        };
        b.lo[..lo.len()].copy_from_slice(lo);
        b.hi[..hi.len()].copy_from_slice(hi);
        Ok(b)
    }

    pub fn from_cube(c: &DyadicCube) -> Self {
        let mut b = DyadicBox {
            level: c.level,
            dim: c.dim,
            lo: c.index,
            hi: c.index,
        };
        for i in 0..c.dim() {
            b.hi[i] += 1;
        }
        b
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    pub fn level(&self) -> i32 {
        self.level
    }

    pub fn lo(&self) -> &[i64] {
        &self.lo[..self.dim()]
    }

    pub fn hi(&self) -> &[i64] {
        &self.hi[..self.dim()]
    }

    pub fn cube_count(&self) -> u64 {
        (0..self.dim())
            .map(|i| (self.hi[i] - self.lo[i]).max(0) as u64)
            .product()
    }

    pub fn measure(&self) -> Dyadic {
        Dyadic::new(self.cube_count() as i128, -self.level * self.dim as i32)
    }

    pub fn aabb(&self) -> Aabb {
        let s = 2f64.powi(-self.level);
        let lo: Vec<f64> = self.lo().iter().map(|&m| m as f64 * s).collect();
        let hi: Vec<f64> = self.hi().iter().map(|&m| m as f64 * s).collect();
        Aabb::new(&lo, &hi)
    }

    pub fn cubes(&self) -> Vec<DyadicCube> {
        let n = self.dim();
        let mut out = Vec::new();
        if self.cube_count() == 0 {
            return out;
        }
        let mut m: Vec<i64> = self.lo().to_vec();
        loop {
            out.push(DyadicCube::raw(self.level, &m));
            let mut i = 0;
            while i < n {
                m[i] += 1;
                if m[i] < self.hi[i] {
                    break;
                }
                m[i] = self.lo[i];
                i += 1;
            }
            if i == n {
                break;
            }
        }
        out
    }

    pub fn contains_cube(&self, c: &DyadicCube) -> bool {
        if c.level < self.level {
            return false;
        }
        let a = c.ancestor_unchecked((c.level - self.level) as u32);
        (0..self.dim()).all(|i| a.index[i] >= self.lo[i] && a.index[i] < self.hi[i])
    }
}

impl fmt::Display for DyadicBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:", self.level)?;
        for i in 0..self.dim() {
            if i > 0 {
                write!(f, "x")?;
            }
            write!(f, "[{}..{})", self.lo[i], self.hi[i])?;
        }
        Ok(())
    }
}

/// A finite union of dyadic cubes in canonical form: pairwise disjoint,
/// maximal (complete sibling groups merged), sorted by `(level, index)`.
#[derive(Clone, Debug)]
pub struct DyadicSet {
    dim: usize,
    cubes: Vec<DyadicCube>,
    members: HashSet<DyadicCube>,
    levels: Vec<i32>,
}

impl PartialEq for DyadicSet {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.cubes == other.cubes
    }
}

impl Eq for DyadicSet {}

impl DyadicSet {
    pub fn empty(dim: usize) -> Self {
        DyadicSet {
            dim,
            cubes: Vec::new(),
            members: HashSet::new(),
            levels: Vec::new(),
        }
    }

    pub fn from_cubes<I: IntoIterator<Item = DyadicCube>>(dim: usize, cubes: I) -> Result<Self> {
        check_dim(dim)?;
        let cubes: Vec<DyadicCube> = cubes.into_iter().collect();
        if let Some(c) = cubes.iter().find(|c| c.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: c.dim(),
            });
        }
        Ok(Self::from_cubes_unchecked(dim, cubes))
    }

    pub(crate) fn from_cubes_unchecked(dim: usize, cubes: Vec<DyadicCube>) -> Self {
        let sorted: BTreeSet<DyadicCube> = cubes.into_iter().collect();

        // drop cubes covered by a coarser member
        let mut kept: HashSet<DyadicCube> = HashSet::new();
        let mut kept_levels: BTreeSet<i32> = BTreeSet::new();
        let mut by_level: BTreeMap<i32, BTreeSet<DyadicCube>> = BTreeMap::new();
        for c in sorted {
            let covered = kept_levels
                .iter()
                .take_while(|&&l| l <= c.level)
                .any(|&l| kept.contains(&c.ancestor_unchecked((c.level - l) as u32)));
            if !covered {
                kept.insert(c);
                kept_levels.insert(c.level);
                by_level.entry(c.level).or_default().insert(c);
            }
        }

        // merge complete sibling groups, finest level first
        let full = 1usize << dim;
        let mut level = match by_level.keys().next_back() {
            Some(&l) => l,
            None => return Self::empty(dim),
        };
        let min_level = *by_level.keys().next().unwrap();
        while level > LevelWindow::DEFAULT.min {
            if let Some(set) = by_level.get(&level).cloned() {
                let mut groups: BTreeMap<DyadicCube, usize> = BTreeMap::new();
                for c in &set {
                    *groups.entry(c.ancestor_unchecked(1)).or_default() += 1;
                }
                for (parent, count) in groups {
                    if count == full {
                        let cur = by_level.get_mut(&level).unwrap();
                        for b in 0..full {
                            cur.remove(&parent.child_unchecked(b));
                        }
                        by_level.entry(level - 1).or_default().insert(parent);
                    }
                }
            }
            level -= 1;
            if level < min_level && !by_level.get(&level).is_some_and(|s| !s.is_empty()) {
                break;
            }
        }

        let cubes: Vec<DyadicCube> = by_level.into_values().flatten().collect();
        let members: HashSet<DyadicCube> = cubes.iter().copied().collect();
        let mut levels: Vec<i32> = cubes.iter().map(|c| c.level).collect();
        levels.dedup();
        DyadicSet {
            dim,
            cubes,
            members,
            levels,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cubes(&self) -> &[DyadicCube] {
        &self.cubes
    }

    pub fn len(&self) -> usize {
        self.cubes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cubes.is_empty()
    }

    pub fn coarsest_level(&self) -> Option<i32> {
        self.levels.first().copied()
    }

    pub fn finest_level(&self) -> Option<i32> {
        self.levels.last().copied()
    }

    pub fn measure(&self) -> Dyadic {
        self.cubes
            .iter()
            .fold(Dyadic::ZERO, |acc, c| acc + c.measure())
    }

    /// Whether `c` is contained in the union.
    pub fn contains_cube(&self, c: &DyadicCube) -> bool {
        self.levels.iter().take_while(|&&l| l <= c.level).any(|&l| {
            self.members
                .contains(&c.ancestor_unchecked((c.level - l) as u32))
        })
    }

    pub fn intersects_cube(&self, c: &DyadicCube) -> bool {
        self.contains_cube(c) || self.cubes.iter().any(|s| c.contains(s))
    }

    pub fn contains_point(&self, x: &[f64]) -> bool {
        self.levels.iter().any(|&l| {
            let s = 2f64.powi(l);
            let idx: Vec<i64> = x[..self.dim]
                .iter()
                .map(|&xi| (xi * s).floor() as i64)
                .collect();
            self.members.contains(&DyadicCube::raw(l, &idx))
        })
    }

    pub fn union(&self, other: &DyadicSet) -> DyadicSet {
        let all: Vec<DyadicCube> = self
            .cubes
            .iter()
            .chain(other.cubes.iter())
            .copied()
            .collect();
        Self::from_cubes_unchecked(self.dim, all)
    }

    /// Whether every point of `self` lies in `other`.
    pub fn is_subset_of(&self, other: &DyadicSet) -> bool {
        self.cubes.iter().all(|c| other.contains_cube(c))
    }

    /// Bounding box of the union, or `None` when empty.
    pub fn hull(&self) -> Option<Aabb> {
        let first = self.cubes.first()?.aabb();
        Some(self.cubes.iter().skip(1).fold(first, |acc, c| {
            let b = c.aabb();
            let mut out = acc;
            for i in 0..self.dim {
                out.lo_mut()[i] = acc.lo()[i].min(b.lo()[i]);
                out.hi_mut()[i] = acc.hi()[i].max(b.hi()[i]);
            }
            out
        }))
    }

    /// `bx ∖ self`, decomposed into maximal dyadic cubes.
    pub fn complement_in_box(&self, bx: &DyadicBox, max_level: i32) -> Result<DyadicSet> {
        if bx.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: bx.dim(),
            });
        }
        if self.finest_level().is_some_and(|l| l > max_level) {
            return Err(Error::TooFine { max_level });
        }
        let mut out = Vec::new();
        let mut stack: Vec<DyadicCube> = bx.cubes();
        while let Some(q) = stack.pop() {
            if self.contains_cube(&q) {
                continue;
            }
            if !self.cubes.iter().any(|s| q.contains(s)) {
                out.push(q);
                continue;
            }
            if q.level >= max_level {
                return Err(Error::TooFine { max_level });
            }
            stack.extend((0..1usize << self.dim).map(|b| q.child_unchecked(b)));
        }
        Ok(Self::from_cubes_unchecked(self.dim, out))
    }

    /// Space-separated cube notation.
    pub fn notation(&self) -> String {
        self.cubes
            .iter()
            .map(|c| c.to_string())
            .collect::<Vec<_>>()
            .join(" ")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c1(k: i32, m: i64) -> DyadicCube {
        DyadicCube::new(k, &[m]).unwrap()
    }

    #[test]
    fn dyadic_arithmetic_is_exact() {
        let a = Dyadic::new(3, -2);
        let b = Dyadic::new(1, -3);
        assert_eq!(a + b, Dyadic::new(7, -3));
        assert_eq!(a - b, Dyadic::new(5, -3));
        assert_eq!(a * b, Dyadic::new(3, -5));
        assert!(b < a);
        assert_eq!(Dyadic::new(4, 0), Dyadic::int(4));
        assert_eq!(Dyadic::from_f64(0.375).unwrap(), Dyadic::new(3, -3));
        assert_eq!(Dyadic::from_f64(-2.5).unwrap().to_f64(), -2.5);
        assert_eq!(Dyadic::new(3, -2).to_string(), "3/4");
    }

    #[test]
    fn ancestor_examples() {
        assert_eq!(c1(3, 5).ancestor(2).unwrap(), c1(1, 1));
        assert_eq!(c1(3, 5).ancestor(0).unwrap(), c1(3, 5));
        let c = DyadicCube::new(0, &[-1, 0]).unwrap();
        assert_eq!(
            c.ancestor(1).unwrap(),
            DyadicCube::new(-1, &[-1, 0]).unwrap()
        );
    }

    #[test]
    fn ancestor_outside_window_fails() {
        assert!(matches!(
            c1(-16, 0).ancestor(1),
            Err(Error::LevelOutOfWindow { .. })
        ));
        assert!(DyadicCube::new(17, &[0]).is_err());
    }

    #[test]
    fn translate_examples() {
        assert_eq!(c1(0, 0).translate(&[3]), c1(0, 3));
        let sq = DyadicCube::unit(2).unwrap();
        assert_eq!(sq.translate(&[2, -1]).index(), &[2, -1]);
        assert_eq!(c1(4, 7).translate(&[0]), c1(4, 7));
    }

    #[test]
    fn expand9_examples() {
        let s = c1(0, 0).expand9();
        assert_eq!(s.measure(), Dyadic::int(9));
        assert_eq!(s.hull().unwrap(), Aabb::interval(-4.0, 5.0));
        assert_eq!(s.cubes(), &[c1(-2, -1), c1(-2, 0), c1(0, 4)]);

        let sq = DyadicCube::unit(2).unwrap();
        assert_eq!(sq.expand9_cubes().len(), 81);
        let s2 = sq.expand9();
        assert_eq!(s2.measure(), Dyadic::int(81));
        assert_eq!(s2.hull().unwrap(), Aabb::new(&[-4.0, -4.0], &[5.0, 5.0]));

        let big = c1(-1, 0).expand9();
        assert_eq!(big.hull().unwrap(), Aabb::interval(-8.0, 10.0));
        assert_eq!(big.measure(), Dyadic::int(18));
    }

    #[test]
    fn distance_examples() {
        assert_eq!(linf_dist_cubes(&c1(0, 0), &c1(0, 3)), Dyadic::int(2));
        let a = DyadicCube::unit(2).unwrap();
        let b = DyadicCube::new(0, &[2, 0]).unwrap();
        assert_eq!(linf_dist_cubes(&a, &b), Dyadic::int(1));
        assert_eq!(
            linf_dist_point_cube(&[Dyadic::new(1, -1)], &c1(0, 0)),
            Dyadic::ZERO
        );
        assert_eq!(linf_dist_cubes(&c1(0, 0), &c1(0, 1)), Dyadic::ZERO);
    }

    #[test]
    fn complement_examples() {
        let s = DyadicSet::from_cubes(1, [c1(0, 0)]).unwrap();
        let bx = DyadicBox::new(0, &[-2], &[2]).unwrap();
        let comp = s.complement_in_box(&bx, 0).unwrap();
        // [-2,-1) and [-1,0) are siblings and merge into [-2,0)
        assert_eq!(comp.cubes(), &[c1(-1, -1), c1(0, 1)]);
        assert_eq!(comp.measure(), Dyadic::int(3));

        let empty = DyadicSet::empty(1);
        let b = DyadicBox::from_cube(&c1(-2, 0));
        assert_eq!(
            empty.complement_in_box(&b, 0).unwrap().cubes(),
            &[c1(-2, 0)]
        );

        let cover = DyadicSet::from_cubes(1, [c1(-3, 0)]).unwrap();
        assert!(cover.complement_in_box(&b, 0).unwrap().is_empty());
    }

    #[test]
    fn complement_rejects_too_fine() {
        let s = DyadicSet::from_cubes(1, [c1(3, 0)]).unwrap();
        let b = DyadicBox::from_cube(&c1(0, 0));
        assert_eq!(
            s.complement_in_box(&b, 2),
            Err(Error::TooFine { max_level: 2 })
        );
    }

    #[test]
    fn canonical_form_merges_mixed_levels() {
        let s = DyadicSet::from_cubes(1, [c1(1, 0), c1(2, 2), c1(2, 3), c1(3, 1)]).unwrap();
        assert_eq!(s.cubes(), &[c1(0, 0)]);
        let dup = DyadicSet::from_cubes(1, [c1(0, 0), c1(0, 0), c1(4, 3)]).unwrap();
        assert_eq!(dup.cubes(), &[c1(0, 0)]);
    }

    #[test]
    fn cube_notation_round_trips() {
        let c = DyadicCube::new(-3, &[4, -7]).unwrap();
        assert_eq!(c.to_string(), "-3:(4,-7)");
        assert_eq!("-3:(4,-7)".parse::<DyadicCube>().unwrap(), c);
        assert!("3:4".parse::<DyadicCube>().is_err());
    }

    #[test]
    fn minus_ball_partitions() {
        let b = Aabb::new(&[0.0, 0.0], &[1.0, 1.0]);
        let parts = b.minus_ball(&[0.5, 0.5], 0.25);
        let total: f64 = parts.iter().map(|p| p.measure()).sum();
        assert!((total - 0.75).abs() < 1e-15);
        assert!(Aabb::interval(0.0, 1.0).minus_ball(&[0.5], 2.0).is_empty());
    }
}
