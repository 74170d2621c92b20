//! Brute-force midpoint sums. Only the pointwise kernel `K(x, y)` is borrowed
//! from the library; every integral here is an explicit Riemann sum.

use pseudoloc_core::dyadic::Aabb;
use pseudoloc_core::haar::StepFunction;
use pseudoloc_core::kernel::KernelSpec;
use rayon::prelude::*;

use crate::error::{HarnessError, Result};

pub const MAX_RESOLUTION: u32 = 26;

/// What the oracle integrates.
#[derive(Clone, Debug)]
pub enum OracleQuery<'a> {
    /// `∫_{B, |y-x|∞ > ε} K(x, y) dy`.
    Box {
        x: &'a [f64],
        bx: &'a Aabb,
        eps: f64,
    },
    /// `∫_{|y-x|∞ > ε} K(x, y) g(y) dy` over the pieces of `g`.
    Apply {
        x: &'a [f64],
        pieces: &'a [(Aabb, f64)],
        eps: f64,
    },
    /// `∫∫_{|x-y|∞ > ε} a(x) K(x, y) b(y) dy dx`.
    Pairing {
        a: &'a [(Aabb, f64)],
        b: &'a [(Aabb, f64)],
        eps: f64,
    },
}

fn check_resolution(resolution: u32) -> Result<()> {
    if resolution > MAX_RESOLUTION {
        return Err(HarnessError::ResolutionCap(resolution));
    }
    Ok(())
}

/// Midpoints of `2^r` equal steps per side of `bx`, with the cell measure.
fn midpoints(bx: &Aabb, r: u32) -> (Vec<Vec<f64>>, f64) {
    let steps = 1usize << r;
    let n = bx.dim();
    let mut axes = Vec::with_capacity(n);
    let mut measure = 1.0;
    for i in 0..n {
        let h = (bx.hi()[i] - bx.lo()[i]) / steps as f64;
        measure *= h;
        axes.push(
            (0..steps)
                .map(|j| bx.lo()[i] + (j as f64 + 0.5) * h)
                .collect(),
        );
    }
    (axes, measure)
}

fn point_at(axes: &[Vec<f64>], mut flat: usize, out: &mut [f64]) {
    let steps = axes[0].len();
    for (i, ax) in axes.iter().enumerate() {
        out[i] = ax[flat % steps];
        flat /= steps;
    }
}

fn linf(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

/// `Σ_y K(x, y) |cell|` over the midpoints of `bx` farther than `eps` from `x`.
fn box_sum(k: &KernelSpec, x: &[f64], bx: &Aabb, eps: f64, r: u32) -> f64 {
    let (axes, cell) = midpoints(bx, r);
    let n = bx.dim();
    let total = axes[0].len().pow(n as u32);
    (0..total)
        .into_par_iter()
        .map(|i| {
            let mut y = [0.0; 3];
            point_at(&axes, i, &mut y[..n]);
            if linf(x, &y[..n]) <= eps {
                return 0.0;
            }
            k.eval(x, &y[..n]).unwrap_or(0.0)
        })
        .sum::<f64>()
        * cell
}

/// The midpoint rule at `2^resolution` points per dimension of every box.
pub fn riemann_oracle(k: &KernelSpec, query: &OracleQuery, resolution: u32) -> Result<f64> {
    check_resolution(resolution)?;
    Ok(match query {
        OracleQuery::Box { x, bx, eps } => box_sum(k, x, bx, *eps, resolution),
        OracleQuery::Apply { x, pieces, eps } => pieces
            .iter()
            .map(|(b, v)| v * box_sum(k, x, b, *eps, resolution))
            .sum(),
        OracleQuery::Pairing { a, b, eps } => {
            let mut total = 0.0;
            for (pa, va) in a.iter() {
                let (axes, cell) = midpoints(pa, resolution);
                let n = pa.dim();
                let count = axes[0].len().pow(n as u32);
                let inner: f64 = (0..count)
                    .into_par_iter()
                    .map(|i| {
                        let mut x = [0.0; 3];
                        point_at(&axes, i, &mut x[..n]);
                        b.iter()
                            .map(|(pb, vb)| vb * box_sum_serial(k, &x[..n], pb, *eps, resolution))
                            .sum::<f64>()
                    })
                    .sum();
                total += va * inner * cell;
            }
            total
        }
    })
}

fn box_sum_serial(k: &KernelSpec, x: &[f64], bx: &Aabb, eps: f64, r: u32) -> f64 {
    let n = bx.dim();
    let steps = 1usize << r;
    let mut h = [0.0; 3];
    let mut cell = 1.0;
    for i in 0..n {
        h[i] = (bx.hi()[i] - bx.lo()[i]) / steps as f64;
        cell *= h[i];
    }
    let total = steps.pow(n as u32);
    let mut y = [0.0; 3];
    let mut s = 0.0;
    for flat in 0..total {
        let mut rem = flat;
        for i in 0..n {
            y[i] = bx.lo()[i] + ((rem % steps) as f64 + 0.5) * h[i];
            rem /= steps;
        }
        if linf(x, &y[..n]) > eps {
            s += k.eval(x, &y[..n]).unwrap_or(0.0);
        }
    }
    s * cell
}

/// Convenience wrapper: `T_ε g(x)` for a step function.
pub fn riemann_apply(
    k: &KernelSpec,
    g: &StepFunction,
    x: &[f64],
    eps: f64,
    resolution: u32,
) -> Result<f64> {
    let pieces = g.pieces();
    riemann_oracle(
        k,
        &OracleQuery::Apply {
            x,
            pieces: &pieces,
            eps,
        },
        resolution,
    )
}
