mod common;

use common::cube;
use pseudoloc_core::dyadic::Aabb;
use pseudoloc_core::kernel::{KernelSpec, Strategy};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Midpoint rule with `2^20` points over the box (`1024²` in the plane).
fn riemann(k: &KernelSpec, x: &[f64], bx: &Aabb) -> f64 {
    let n = bx.dim();
    if n == 1 {
        let steps = 1usize << 20;
        let (a, b) = (bx.lo()[0], bx.hi()[0]);
        let h = (b - a) / steps as f64;
        (0..steps)
            .into_par_iter()
            .map(|i| k.eval(x, &[a + (i as f64 + 0.5) * h]).unwrap() * h)
            .sum()
    } else {
        let steps = 1usize << 10;
        let hx = (bx.hi()[0] - bx.lo()[0]) / steps as f64;
        let hy = (bx.hi()[1] - bx.lo()[1]) / steps as f64;
        (0..steps * steps)
            .into_par_iter()
            .map(|i| {
                let y = [
                    bx.lo()[0] + ((i % steps) as f64 + 0.5) * hx,
                    bx.lo()[1] + ((i / steps) as f64 + 0.5) * hy,
                ];
                k.eval(x, &y).unwrap() * hx * hy
            })
            .sum()
    }
}

#[test]
fn cell_integrals_match_riemann_sums() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let kernels = [
        KernelSpec::hilbert(1.0),
        KernelSpec::weierstrass(0.5, 1.0),
        KernelSpec::smooth2d(1.0),
    ];
    for t in 0..100 {
        let k = &kernels[t % 3];
        let n = k.dim();
        let level = rng.random_range(-1..3);
        let idx: Vec<i64> = (0..n).map(|_| rng.random_range(-3..3)).collect();
        let c = cube(level, &idx);
        let side = c.side_f64();
        // a point at distance between one and three cell sides
        let mut x: Vec<f64> = c.center().iter().map(|v| v.to_f64()).collect();
        let axis = rng.random_range(0..n);
        let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        x[axis] += sign * side * rng.random_range(1.5..3.5);
        for (i, xi) in x.iter_mut().enumerate() {
            if i != axis {
                *xi += side * rng.random_range(-1.0..1.0);
            }
        }
        let v = k.cell_integral_truncated(&x, &c, 0.0).unwrap();
        let r = riemann(k, &x, &c.aabb());
        assert!(
            (v - r).abs() <= 1e-6 * r.abs().max(1e-3),
            "{} {x:?} {c}: {v} vs {r}",
            k.family
        );
    }
}

#[test]
fn hilbert_symmetric_cell_vanishes() {
    let k = KernelSpec::hilbert(1.0);
    for (lvl, m) in [(0, 0), (2, 7), (-1, -3)] {
        let c = cube(lvl, &[m]);
        let x = c.center()[0].to_f64();
        for frac in [0.05, 0.2, 0.49] {
            let v = k
                .cell_integral_truncated(&[x], &c, frac * c.side_f64())
                .unwrap();
            assert!(v.abs() < 1e-12, "{v}");
        }
    }
}

#[test]
fn hilbert_scale_invariance() {
    let k = KernelSpec::hilbert(1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..200 {
        let c = cube(rng.random_range(-2..3), &[rng.random_range(-4..4)]);
        let x = rng.random_range(-6.0..6.0);
        let eps = rng.random_range(0.01..2.0);
        let a = k.cell_integral_truncated(&[x], &c, eps).unwrap();
        let b = k
            .box_integral_truncated(
                &[2.0 * x],
                &Aabb::interval(2.0 * c.aabb().lo()[0], 2.0 * c.aabb().hi()[0]),
                2.0 * eps,
            )
            .unwrap();
        assert!((a - b).abs() < 1e-12, "{a} {b}");
    }
}

#[test]
fn truncation_additivity() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for k in [
        KernelSpec::hilbert(1.0),
        KernelSpec::weierstrass(0.7, 1.0),
        KernelSpec::smooth2d(1.0),
    ] {
        let n = k.dim();
        for _ in 0..30 {
            let c = cube(0, &vec![0; n]);
            let x: Vec<f64> = (0..n).map(|_| rng.random_range(-0.5..1.5)).collect();
            let a = rng.random_range(0.05..0.6);
            let b = a + rng.random_range(0.05..0.8);
            let va = k.cell_integral_truncated(&x, &c, a).unwrap();
            let vb = k.cell_integral_truncated(&x, &c, b).unwrap();
            // cell ∩ {a < |y - x| ≤ b}: the cell clipped to the b-ball, minus the a-ball
            let lo: Vec<f64> = (0..n).map(|i| x[i] - b).collect();
            let hi: Vec<f64> = (0..n).map(|i| x[i] + b).collect();
            let ring: f64 = c
                .aabb()
                .intersect(&Aabb::new(&lo, &hi))
                .minus_ball(&x, a)
                .iter()
                .map(|piece| k.box_integral_truncated(&x, piece, 0.0).unwrap())
                .sum();
            assert!(
                (va - vb - ring).abs() < 1e-9,
                "{}: {va} {vb} {ring}",
                k.family
            );
        }
    }
}

#[test]
fn exact_and_adaptive_strategies_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for k in [
        KernelSpec::hilbert(1.0),
        KernelSpec::weierstrass(0.5, 1.0),
        KernelSpec::smooth2d(1.0),
    ] {
        let n = k.dim();
        let ad = k.clone().with_strategy(Strategy::Adaptive);
        for _ in 0..20 {
            let c = cube(1, &vec![rng.random_range(-2..2); n]);
            let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.5..1.5)).collect();
            let eps = rng.random_range(0.01..0.3);
            let a = k.cell_integral_truncated(&x, &c, eps).unwrap();
            let b = ad.cell_integral_truncated(&x, &c, eps).unwrap();
            assert!(
                (a - b).abs() < 1e-8 * a.abs().max(1.0),
                "{}: {a} {b}",
                k.family
            );
        }
    }
}

#[test]
fn verification_and_normalisation() {
    let h = KernelSpec::hilbert(1.0).verified(512, 1);
    let r = h.measured.clone().unwrap();
    assert!((r.c_size - 1.0).abs() < 1e-9);
    assert!(r.c_holder <= 2.0 + 1e-6);
    let hn = h.normalize().unwrap();
    assert!((hn.scale - 0.5).abs() < 1e-3);
    let again = hn.verify_standard_estimates(512, 2);
    assert!(
        again.c_size <= 1.0 + 1e-6 && again.c_holder <= 1.0 + 1e-6,
        "{again:?}"
    );
    let twice = hn.clone().verified(512, 1).normalize().unwrap();
    assert!((twice.scale - hn.scale).abs() < 1e-6);

    let w = KernelSpec::weierstrass(0.5, 1.0)
        .verified(512, 3)
        .normalize()
        .unwrap();
    assert!(w.scale > 0.0 && w.scale < 1.0);
    let rw = w.verify_standard_estimates(512, 3);
    assert!(rw.c_size.max(rw.c_holder) <= 1.0 + 1e-6);

    let expect: f64 = 1.0 + 0.5 * (0..=12).map(|j| 2f64.powf(-0.5 * j as f64)).sum::<f64>();
    assert!(
        (KernelSpec::weierstrass(0.5, 1.0)
            .eval(&[2.0], &[1.0])
            .unwrap()
            - expect)
            .abs()
            < 1e-12
    );
}
