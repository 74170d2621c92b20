#![allow(dead_code)]

use pseudoloc_core::dyadic::DyadicCube;
use pseudoloc_core::haar::{FiniteHaarExpansion, HaarIndex};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn cube(level: i32, idx: &[i64]) -> DyadicCube {
    DyadicCube::new(level, idx).unwrap()
}

pub fn haar(level: i32, idx: &[i64], eta: u8) -> HaarIndex {
    HaarIndex::new(cube(level, idx), eta).unwrap()
}

pub fn random_index(
    rng: &mut ChaCha8Rng,
    dim: usize,
    levels: std::ops::Range<i32>,
    spread: i64,
) -> HaarIndex {
    let k = rng.random_range(levels);
    // indices scaled with the level so the cubes stay in a fixed window
    let span = if k >= 0 {
        spread << k
    } else {
        (spread >> (-k)).max(1)
    };
    let idx: Vec<i64> = (0..dim).map(|_| rng.random_range(-span..span)).collect();
    let eta = rng.random_range(1..(1u8 << dim));
    haar(k, &idx, eta)
}

pub fn random_expansion(
    rng: &mut ChaCha8Rng,
    dim: usize,
    count: usize,
    levels: std::ops::Range<i32>,
    spread: i64,
) -> FiniteHaarExpansion {
    let mut f = FiniteHaarExpansion::new(dim).unwrap();
    for _ in 0..count {
        let h = random_index(rng, dim, levels.clone(), spread);
        f.set(h, rng.random_range(-1.0..1.0)).unwrap();
    }
    f
}
