mod common;

use common::random_expansion;
use proptest::prelude::*;
use pseudoloc_core::dyadic::DyadicCube;
use pseudoloc_core::haar::synthesize;
use pseudoloc_core::sigma::{omega_cubes, sigma_set};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn omega_is_minimal_cover(seed in any::<u64>(), dim in 1usize..=2, s in 0u32..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = random_expansion(&mut rng, dim, 32, -1..4, 2);
        for level in f.levels() {
            let k = level - s as i32;
            let cubes = omega_cubes(&f, s, k).unwrap();
            let d = synthesize(&f.project_d(level)).unwrap();
            // every coefficient cube is covered
            for c in f.cubes_at(level) {
                prop_assert!(cubes.iter().any(|q| q.contains(&c)));
            }
            // and D_{k+s} f is not identically zero on any cube of the cover
            for q in &cubes {
                prop_assert_eq!(q.level(), k);
                let nonzero = d.cells().any(|(cell, v)| v != 0.0 && q.contains(&cell));
                prop_assert!(nonzero, "{} carries no part of D f", q);
            }
        }
    }

    #[test]
    fn sigma_contains_support_and_is_monotone(seed in any::<u64>(), s in 0u32..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = random_expansion(&mut rng, 1, 24, -1..4, 3);
        let r = sigma_set(&f, s).unwrap();
        prop_assert!(f.support_cover().is_subset_of(&r.sigma));
        let keep: Vec<_> = f.coefficients().keys().filter(|_| rng.random_bool(0.5)).copied().collect();
        let g = f.filter(|h| keep.contains(h));
        prop_assert!(sigma_set(&g, s).unwrap().sigma.is_subset_of(&r.sigma));
        for k in r.omegas.keys() {
            let cubes = r.expanded_cubes(*k);
            prop_assert!(cubes.iter().all(|c| c.level() == *k));
        }
    }

    #[test]
    fn sigma_dilation_covariance(seed in any::<u64>(), dim in 1usize..=2, s in 0u32..3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = random_expansion(&mut rng, dim, 16, -1..4, 2);
        let a = sigma_set(&f, s).unwrap().sigma;
        let b = sigma_set(&f.dilate(1).unwrap(), s).unwrap().sigma;
        let moved: Vec<DyadicCube> =
            a.cubes().iter().map(|c| DyadicCube::new(c.level() + 1, c.index()).unwrap()).collect();
        prop_assert_eq!(b.cubes(), &moved[..]);
    }
}
