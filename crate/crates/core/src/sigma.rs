//! The sets `Ω_k`, `Σ_{f,s} = ⋃_k 9Ω_k` and the cube replacement `Q_{f,s}`.
//!
//! `Ω_k` is read off the coefficient support: a coefficient on a level-`(k+s)`
//! cube `J` contributes its ancestor `J^{(s)}`, even if the Haar terms on `J`
//! happen to cancel pointwise somewhere.

use std::collections::BTreeMap;

use crate::dyadic::{Aabb, DyadicCube, DyadicSet};
use crate::error::{Error, Result};
use crate::haar::FiniteHaarExpansion;

#[derive(Clone, Debug, PartialEq)]
pub struct SigmaResult {
    pub s: u32,
    /// `k ↦ Ω_k` for every `k` with `Ω_k ≠ ∅`.
    pub omegas: BTreeMap<i32, DyadicSet>,
    pub sigma: DyadicSet,
}

impl SigmaResult {
    /// The level-`k` cubes making up `9Ω_k`, before merging.
    pub fn expanded_cubes(&self, k: i32) -> Vec<DyadicCube> {
        self.omegas
            .get(&k)
            .map(|o| expand9_level(&level_cubes(o, k)))
            .unwrap_or_default()
    }
}

/// The level-`k` cubes of `Ω_k`, sorted and deduplicated.
pub fn omega_cubes(f: &FiniteHaarExpansion, s: u32, k: i32) -> Result<Vec<DyadicCube>> {
    let mut out = Vec::new();
    for c in f.cubes_at(k + s as i32) {
        out.push(c.ancestor(s)?);
    }
    out.sort();
    out.dedup();
    Ok(out)
}

/// `Ω_k`: the minimal `𝒟_k`-measurable cover of `supp D_{k+s} f`.
pub fn omega_k(f: &FiniteHaarExpansion, s: u32, k: i32) -> Result<DyadicSet> {
    DyadicSet::from_cubes(f.dim(), omega_cubes(f, s, k)?)
}

fn expand9_level(cubes: &[DyadicCube]) -> Vec<DyadicCube> {
    let mut out: Vec<DyadicCube> = cubes.iter().flat_map(|c| c.expand9_cubes()).collect();
    out.sort();
    out.dedup();
    out
}

/// Splits a canonical set back into level-`k` cubes (all its cubes are at level ≤ `k`).
fn level_cubes(set: &DyadicSet, k: i32) -> Vec<DyadicCube> {
    let mut out = Vec::new();
    for c in set.cubes() {
        let b = crate::dyadic::DyadicBox::from_cube(c).refined((k - c.level()) as u32);
        out.extend(b.cubes());
    }
    out
}

/// `Σ_{f,s}` together with the sets `Ω_k`.
pub fn sigma_set(f: &FiniteHaarExpansion, s: u32) -> Result<SigmaResult> {
    let mut omegas = BTreeMap::new();
    let mut all = Vec::new();
    for level in f.levels() {
        let k = level - s as i32;
        let cubes = omega_cubes(f, s, k)?;
        all.extend(expand9_level(&cubes));
        omegas.insert(k, DyadicSet::from_cubes(f.dim(), cubes)?);
    }
    let sigma = DyadicSet::from_cubes(f.dim(), all)?;
    Ok(SigmaResult { s, omegas, sigma })
}

/// `e(p, γ) = min(γ, 1/2, 1/p')`.
pub fn decay_exponent(p: f64, gamma: f64) -> f64 {
    let inv_pp = 1.0 - 1.0 / p;
    gamma.min(0.5).min(inv_pp)
}

/// `p' = p/(p - 1)`.
pub fn conjugate(p: f64) -> f64 {
    p / (p - 1.0)
}

/// The predicted decay `(1+s) 2^{-s e(p,γ)}`.
pub fn decay_bound(s: u32, p: f64, gamma: f64) -> f64 {
    (1.0 + s as f64) * 2f64.powf(-(s as f64) * decay_exponent(p, gamma))
}

/// `100 · 2^{s[1 + e(p,γ) p'/n]}`.
pub fn q_factor(s: u32, p: f64, gamma: f64, n: usize) -> Result<f64> {
    if !(p > 1.0) {
        return Err(Error::InvalidArgument(format!(
            "exponent p = {p} must exceed 1"
        )));
    }
    let e = decay_exponent(p, gamma);
    Ok(100.0 * 2f64.powf(s as f64 * (1.0 + e * conjugate(p) / n as f64)))
}

/// A general (not necessarily dyadic) cube.
#[derive(Clone, Debug, PartialEq)]
pub struct ScaledCube {
    pub center: Vec<f64>,
    pub side: f64,
    pub factor: f64,
}

impl ScaledCube {
    pub fn aabb(&self) -> Aabb {
        let lo: Vec<f64> = self.center.iter().map(|c| c - 0.5 * self.side).collect();
        let hi: Vec<f64> = self.center.iter().map(|c| c + 0.5 * self.side).collect();
        Aabb::new(&lo, &hi)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.center
            .iter()
            .zip(x)
            .all(|(c, xi)| (xi - c).abs() < 0.5 * self.side)
    }
}

/// The concentric expansion of a cube with given centre and side by the `Q_{f,s}` factor.
pub fn q_expansion_of(center: &[f64], side: f64, s: u32, p: f64, gamma: f64) -> Result<ScaledCube> {
    let factor = q_factor(s, p, gamma, center.len())?;
    Ok(ScaledCube {
        center: center.to_vec(),
        side: side * factor,
        factor,
    })
}

/// The concentric expansion of a dyadic cube `Q` by the `Q_{f,s}` factor.
pub fn q_expansion(q: &DyadicCube, s: u32, p: f64, gamma: f64) -> Result<ScaledCube> {
    let center: Vec<f64> = q.center().iter().map(|c| c.to_f64()).collect();
    q_expansion_of(&center, q.side_f64(), s, p, gamma)
}
