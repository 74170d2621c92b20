//! Deterministic families of test functions.

use std::fmt;
use std::str::FromStr;

use pseudoloc_core::dyadic::{DyadicBox, DyadicCube};
use pseudoloc_core::haar::{analyze, synthesize, FiniteHaarExpansion, HaarIndex, StepFunction};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{HarnessError, Result};
use crate::signs::derive_seed;

/// Coefficient levels `0..LEVELS` inside the window `[0, WINDOW)^n`.
pub const LEVELS: i32 = 6;
pub const WINDOW: i64 = 4;
pub const MAX_COEFFS: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Profile {
    /// At most 32 coefficients spread over six levels.
    RandomSparse,
    /// Haar coefficients of a smoothed indicator.
    Bump,
    /// Coefficients on the extreme cubes of every level, plus an isolated fine one.
    AdversarialBoundary,
}

impl Profile {
    pub const ALL: [Profile; 3] = [
        Profile::RandomSparse,
        Profile::Bump,
        Profile::AdversarialBoundary,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Profile::RandomSparse => "random-sparse",
            Profile::Bump => "bump",
            Profile::AdversarialBoundary => "adversarial-boundary",
        }
    }
}

impl FromStr for Profile {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        Profile::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| HarnessError::UnknownProfile(s.to_string()))
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn random_eta(rng: &mut ChaCha8Rng, n: usize) -> u8 {
    rng.random_range(1..(1u8 << n))
}

fn random_sparse(rng: &mut ChaCha8Rng, n: usize) -> Result<FiniteHaarExpansion> {
    let count = rng.random_range(8..=MAX_COEFFS);
    let mut f = FiniteHaarExpansion::new(n)?;
    while f.len() < count {
        let k = rng.random_range(0..LEVELS);
        let idx: Vec<i64> = (0..n).map(|_| rng.random_range(0..WINDOW << k)).collect();
        let h = HaarIndex::new(DyadicCube::new(k, &idx)?, random_eta(rng, n))?;
        f.set(h, gaussian(rng))?;
    }
    Ok(f)
}

fn bump(rng: &mut ChaCha8Rng, n: usize) -> Result<FiniteHaarExpansion> {
    let finest = 4;
    let cells = WINDOW << (finest + 1);
    let bx = DyadicBox::new(finest + 1, &vec![0; n], &vec![cells; n])?;
    let center: Vec<f64> = (0..n).map(|_| rng.random_range(1.5..2.5)).collect();
    let radius = rng.random_range(0.6..1.2);
    let width = rng.random_range(0.1..0.4);
    // smoothstep profile of the distance to the centre
    let profile = |x: &[f64]| {
        let r = x
            .iter()
            .zip(&center)
            .map(|(a, c)| (a - c).abs())
            .fold(0.0, f64::max);
        let t = ((radius + width - r) / (2.0 * width)).clamp(0.0, 1.0);
        t * t * (3.0 - 2.0 * t)
    };
    let h = 2f64.powi(-(finest + 1));
    let values: Vec<f64> = bx
        .cubes()
        .iter()
        .map(|c| {
            let x: Vec<f64> = (0..n).map(|i| (c.index()[i] as f64 + 0.5) * h).collect();
            profile(&x)
        })
        .collect();
    let g = StepFunction::from_values(&bx, values)?;
    Ok(analyze(&g, 0, finest)?)
}

fn adversarial(rng: &mut ChaCha8Rng, n: usize) -> Result<FiniteHaarExpansion> {
    let mut f = FiniteHaarExpansion::new(n)?;
    for k in 0..LEVELS {
        let last = (WINDOW << k) - 1;
        for corner in [0, last] {
            let idx = vec![corner; n];
            f.set(
                HaarIndex::new(DyadicCube::new(k, &idx)?, random_eta(rng, n))?,
                gaussian(rng),
            )?;
        }
    }
    // a lone fine coefficient a few window widths away
    let k = LEVELS - 1;
    let off = rng.random_range(2 * WINDOW..3 * WINDOW) << k;
    let idx = vec![off; n];
    f.set(
        HaarIndex::new(DyadicCube::new(k, &idx)?, random_eta(rng, n))?,
        gaussian(rng),
    )?;
    Ok(f)
}

/// `count` functions of the given profile in dimension `n`, each with `‖f‖_p = 1`.
pub fn gen_family(
    seed: u64,
    count: usize,
    profile: Profile,
    n: usize,
    p: f64,
) -> Result<Vec<FiniteHaarExpansion>> {
    if count == 0 {
        return Err(HarnessError::InvalidArgument(
            "a family needs at least one function".into(),
        ));
    }
    if !(p >= 1.0) {
        return Err(HarnessError::InvalidArgument(format!(
            "exponent p = {p} below 1"
        )));
    }
    (0..count)
        .map(|id| {
            let mut rng =
                ChaCha8Rng::seed_from_u64(derive_seed(seed, &format!("{profile}/{n}/{id}")));
            let f = match profile {
                Profile::RandomSparse => random_sparse(&mut rng, n)?,
                Profile::Bump => bump(&mut rng, n)?,
                Profile::AdversarialBoundary => adversarial(&mut rng, n)?,
            };
            let norm = synthesize(&f)?.lp_norm(p, None)?;
            Ok(f.scale(1.0 / norm))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_normalised() {
        for profile in Profile::ALL {
            let a = gen_family(5, 4, profile, 1, 3.0).unwrap();
            assert_eq!(a, gen_family(5, 4, profile, 1, 3.0).unwrap());
            assert_ne!(a, gen_family(6, 4, profile, 1, 3.0).unwrap());
            for f in &a {
                let norm = synthesize(f).unwrap().lp_norm(3.0, None).unwrap();
                assert!((norm - 1.0).abs() < 1e-12);
            }
        }
        assert!(gen_family(5, 0, Profile::Bump, 1, 2.0).is_err());
        assert!("smooth".parse::<Profile>().is_err());
    }

    #[test]
    fn sparse_stays_small() {
        for f in gen_family(1, 20, Profile::RandomSparse, 2, 2.0).unwrap() {
            assert!(f.len() <= MAX_COEFFS);
            assert!(f.levels().iter().all(|k| (0..LEVELS).contains(k)));
        }
    }
}
