//! Least-squares decay slopes of the max-over-family ratio.

use std::collections::BTreeMap;

use crate::decay::DecayRow;
use crate::error::{HarnessError, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct SlopeFit {
    pub experiment: &'static str,
    pub p: f64,
    pub gamma: f64,
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the fit, in `log₂` units.
    pub residual: f64,
    /// `(s, max ratio)` pairs that entered the fit.
    pub points: Vec<(u32, f64)>,
}

/// `(slope, intercept, rms residual)` of the least-squares line through `(x, y)`.
pub fn least_squares(xs: &[f64], ys: &[f64]) -> Result<(f64, f64, f64)> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if xs.is_empty() || sxx == 0.0 {
        return Err(HarnessError::DegenerateFit("all abscissae coincide".into()));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    Ok((slope, intercept, (rss / n).sqrt()))
}

/// Fits `log₂ max_f ratio(s)` (or `log₂(max/(1+s))` with `remove_poly`) against
/// `s ∈ [s0, s1]`, separately for each experiment and `(p, γ)`. Rows with a
/// failed status are skipped.
pub fn fit_slope(
    rows: &[DecayRow],
    window: (u32, u32),
    remove_poly: bool,
) -> Result<Vec<SlopeFit>> {
    let (s0, s1) = window;
    let mut groups: BTreeMap<(&'static str, u64, u64), BTreeMap<u32, f64>> = BTreeMap::new();
    for r in rows
        .iter()
        .filter(|r| r.status.is_ok() && r.s >= s0 && r.s <= s1)
    {
        let e = groups
            .entry((r.experiment, r.p.to_bits(), r.gamma.to_bits()))
            .or_default();
        let m = e.entry(r.s).or_insert(f64::NEG_INFINITY);
        *m = m.max(r.ratio);
    }
    let mut out = Vec::new();
    for ((experiment, p, gamma), by_s) in groups {
        if by_s.len() < 3 {
            return Err(HarnessError::DegenerateFit(format!(
                "{} distinct s values, need 3",
                by_s.len()
            )));
        }
        if let Some((s, r)) = by_s.iter().find(|(_, r)| !(**r > 0.0)) {
            return Err(HarnessError::DegenerateFit(format!(
                "non-positive ratio {r} at s = {s}"
            )));
        }
        let xs: Vec<f64> = by_s.keys().map(|s| *s as f64).collect();
        let ys: Vec<f64> = by_s
            .iter()
            .map(|(s, r)| {
                if remove_poly {
                    (r / (1.0 + *s as f64)).log2()
                } else {
                    r.log2()
                }
            })
            .collect();
        let (slope, intercept, residual) = least_squares(&xs, &ys)?;
        out.push(SlopeFit {
            experiment,
            p: f64::from_bits(p),
            gamma: f64::from_bits(gamma),
            slope,
            intercept,
            residual,
            points: by_s.into_iter().collect(),
        });
    }
    Ok(out)
}
