use proptest::prelude::*;
use pseudoloc_core::dyadic::{linf_dist_cubes, Dyadic, DyadicBox, DyadicCube, DyadicSet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn cube(dim: usize) -> impl Strategy<Value = DyadicCube> {
    (-6i32..8, prop::collection::vec(-20i64..20, dim))
        .prop_map(|(k, m)| DyadicCube::new(k, &m).unwrap())
}

fn any_cube() -> impl Strategy<Value = DyadicCube> {
    (1usize..=3).prop_flat_map(cube)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn ancestors_compose(c in any_cube(), s in 0u32..4, t in 0u32..4) {
        let a = c.ancestor(s).unwrap().ancestor(t).unwrap();
        prop_assert_eq!(a, c.ancestor(s + t).unwrap());
        prop_assert!(a.contains(&c));
        prop_assert_eq!(a.side(), c.side() * Dyadic::pow2((s + t) as i32));
    }

    #[test]
    fn expand9_measure(c in any_cube()) {
        let n = c.dim() as u32;
        let set = c.expand9();
        prop_assert_eq!(set.measure(), c.measure() * Dyadic::int(9i64.pow(n)));
    }

    #[test]
    fn translate_distance(c in any_cube(), raw in prop::collection::vec(-6i64..6, 3)) {
        let m = &raw[..c.dim()];
        prop_assume!(m.iter().any(|v| *v != 0));
        let t = c.translate(m);
        let back: Vec<i64> = m.iter().map(|v| -v).collect();
        prop_assert_eq!(t.translate(&back), c);
        prop_assert!(!t.intersects(&c));
        let max = m.iter().map(|v| v.abs()).max().unwrap();
        prop_assert_eq!(linf_dist_cubes(&c, &t), c.side() * Dyadic::int(max - 1));
    }

    #[test]
    fn canonical_form_is_unique(dim in 1usize..=2, seed in any::<u64>()) {
        // the same point set written with split and unsplit cubes
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut coarse = Vec::new();
        for _ in 0..6 {
            let idx: Vec<i64> = (0..dim).map(|_| rng.random_range(-4..4)).collect();
            coarse.push(DyadicCube::new(0, &idx).unwrap());
        }
        let mut split = Vec::new();
        for c in &coarse {
            if rng.random_bool(0.5) {
                split.extend(DyadicBox::from_cube(c).refined(rng.random_range(1..3)).cubes());
            } else {
                split.push(*c);
            }
        }
        let a = DyadicSet::from_cubes(dim, coarse).unwrap();
        let b = DyadicSet::from_cubes(dim, split).unwrap();
        prop_assert_eq!(a.cubes(), b.cubes());
        for (i, c) in a.cubes().iter().enumerate() {
            for d in &a.cubes()[i + 1..] {
                prop_assert!(!c.intersects(d));
            }
        }
    }
}

/// `B ∖ S` and `S ∩ B` partition `B`, by exact measure and by pointwise membership.
#[test]
fn complement_partitions_box() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for dim in 1..=2usize {
        for _ in 0..20 {
            let b = DyadicCube::new(-2, &vec![rng.random_range(-2..2); dim]).unwrap();
            let mut cubes = Vec::new();
            for _ in 0..rng.random_range(0..12) {
                let k = rng.random_range(-3..5);
                let idx: Vec<i64> = (0..dim)
                    .map(|_| {
                        rng.random_range(-(24i64 << (k + 3).max(0))..(24 << (k + 3).max(0))) >> 3
                    })
                    .collect();
                cubes.push(DyadicCube::new(k, &idx).unwrap());
            }
            let s = DyadicSet::from_cubes(dim, cubes).unwrap();
            let comp = s.complement_in_box(&DyadicBox::from_cube(&b), 6).unwrap();
            let inside: Dyadic = s
                .cubes()
                .iter()
                .map(|c| {
                    if c.contains(&b) {
                        b.measure()
                    } else if b.contains(c) {
                        c.measure()
                    } else {
                        Dyadic::ZERO
                    }
                })
                .fold(Dyadic::ZERO, |a, v| a + v);
            assert_eq!(comp.measure() + inside, b.measure());
            assert!(comp
                .cubes()
                .iter()
                .all(|c| b.contains(c) && !s.intersects_cube(c)));
            let lo: Vec<f64> = (0..dim).map(|i| b.lower(i).to_f64()).collect();
            let side = b.side_f64();
            for _ in 0..10_000 {
                // points on the 2^-12 grid, so membership is exact
                let x: Vec<f64> = lo
                    .iter()
                    .map(|l| l + side * rng.random_range(0..4096) as f64 / 4096.0)
                    .collect();
                assert!(comp.contains_point(&x) != s.contains_point(&x), "{x:?}");
            }
        }
    }
}

#[test]
fn complement_edge_cases() {
    let b = DyadicCube::new(-1, &[0]).unwrap();
    let bx = DyadicBox::from_cube(&b);
    let empty = DyadicSet::empty(1);
    assert_eq!(empty.complement_in_box(&bx, 4).unwrap().cubes(), &[b]);
    let cover = DyadicSet::from_cubes(1, [DyadicCube::new(-3, &[0]).unwrap()]).unwrap();
    assert!(cover.complement_in_box(&bx, 4).unwrap().is_empty());
}
