//! Globally adaptive Gauss–Legendre quadrature.
//!
//! Each panel carries two estimates: the 8-point rule on the whole panel and
//! the sum of the rules on its halves. Their difference is the panel error;
//! the panel with the largest error is bisected until the total error meets
//! the tolerance. Panels that reach the depth cap stop splitting and raise a
//! flag on the result.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::OnceLock;

use crate::dyadic::Aabb;
use crate::error::{Error, Result};
use crate::sum::Neumaier;

pub const GL_ORDER: usize = 8;

/// Nodes and weights of the 8-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre() -> &'static ([f64; GL_ORDER], [f64; GL_ORDER]) {
    static RULE: OnceLock<([f64; GL_ORDER], [f64; GL_ORDER])> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = GL_ORDER;
        let mut x = [0.0; GL_ORDER];
        let mut w = [0.0; GL_ORDER];
        for i in 0..n {
            let mut t = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let legendre = |t: f64| {
                let (mut p0, mut p1) = (1.0, t);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * t * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                (p1, n as f64 * (t * p1 - p0) / (t * t - 1.0))
            };
            for _ in 0..100 {
                let (p, dp) = legendre(t);
                let dt = p / dp;
                t -= dt;
                if dt.abs() < 1e-16 {
                    break;
                }
            }
            let dp = legendre(t).1;
            x[i] = t;
            w[i] = 2.0 / ((1.0 - t * t) * dp * dp);
        }
        (x, w)
    })
}

/// The 8-point rule on `[a, b]`; returns `(∫f, ∫|f|)`.
pub fn gl8<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let (x, w) = gauss_legendre();
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut s = 0.0;
    let mut m = 0.0;
    for i in 0..GL_ORDER {
        let v = f(c + h * x[i]);
        s += w[i] * v;
        m += w[i] * v.abs();
    }
    (s * h, m * h)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_depth: u32,
    pub max_panels: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions {
            abs_tol: 1e-13,
            rel_tol: 1e-10,
            max_depth: 24,
            max_panels: 20_000,
        }
    }
}

impl QuadOptions {
    pub fn with_rel(rel_tol: f64) -> Self {
        QuadOptions {
            rel_tol,
            ..Self::default()
        }
    }

    pub fn with_tol(abs_tol: f64, rel_tol: f64) -> Self {
        QuadOptions {
            abs_tol,
            rel_tol,
            ..Self::default()
        }
    }

    fn target(&self, value: f64, magnitude: f64) -> f64 {
        self.abs_tol
            .max(self.rel_tol * value.abs())
            .max(4.0 * f64::EPSILON * magnitude)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    /// `∫|f|`, the scale against which rounding is judged.
    pub magnitude: f64,
    /// A panel hit the depth cap or the panel budget ran out.
    pub capped: bool,
    pub evaluations: usize,
}

impl QuadResult {
    pub const ZERO: QuadResult = QuadResult {
        value: 0.0,
        error: 0.0,
        magnitude: 0.0,
        capped: false,
        evaluations: 0,
    };

    pub fn into_result(self, opts: &QuadOptions) -> Result<f64> {
        if self.capped {
            Err(Error::QuadratureDepth {
                depth: opts.max_depth,
                value: self.value,
                error: self.error,
            })
        } else {
            Ok(self.value)
        }
    }

    pub fn merge(self, other: QuadResult) -> QuadResult {
        QuadResult {
            value: self.value + other.value,
            error: self.error + other.error,
            magnitude: self.magnitude + other.magnitude,
            capped: self.capped || other.capped,
            evaluations: self.evaluations + other.evaluations,
        }
    }
}

struct Panel {
    a: f64,
    b: f64,
    depth: u32,
    left: (f64, f64),
    right: (f64, f64),
    error: f64,
}

impl Panel {
    fn new<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, depth: u32, whole: f64) -> Panel {
        let m = 0.5 * (a + b);
        let left = gl8(f, a, m);
        let right = gl8(f, m, b);
        let error = (left.0 + right.0 - whole).abs();
        Panel {
            a,
            b,
            depth,
            left,
            right,
            error,
        }
    }

    fn value(&self) -> f64 {
        self.left.0 + self.right.0
    }

    fn magnitude(&self) -> f64 {
        self.left.1 + self.right.1
    }
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// `∫_a^b f` with the interval pre-split at every breakpoint inside `(a, b)`.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    opts: &QuadOptions,
) -> QuadResult {
    if !(b > a) {
        return QuadResult::ZERO;
    }
    let mut cuts: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|t| *t > a && *t < b)
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut edges = Vec::with_capacity(cuts.len() + 2);
    edges.push(a);
    edges.extend(cuts);
    edges.push(b);

    let mut heap = BinaryHeap::new();
    let mut evaluations = 0;
    // running totals; recomputed exactly before returning
    let (mut value, mut error, mut magnitude) = (0.0, 0.0, 0.0);
    for w in edges.windows(2) {
        let whole = gl8(&f, w[0], w[1]).0;
        let p = Panel::new(&f, w[0], w[1], 0, whole);
        value += p.value();
        error += p.error;
        magnitude += p.magnitude();
        heap.push(p);
        evaluations += 3 * GL_ORDER;
    }
    let mut done: Vec<Panel> = Vec::new();
    let mut done_error = 0.0;
    let finish = |heap: &BinaryHeap<Panel>, done: &[Panel], capped: bool, evaluations: usize| {
        let (value, error, magnitude) = totals(heap.iter().chain(done.iter()));
        QuadResult {
            value,
            error,
            magnitude,
            capped,
            evaluations,
        }
    };
    loop {
        let target = opts.target(value, magnitude);
        if error <= target || heap.is_empty() {
            let r = finish(
                &heap,
                &done,
                !done.is_empty() && capped_matters(&done, target),
                evaluations,
            );
            if r.error <= opts.target(r.value, r.magnitude) || heap.is_empty() {
                return r;
            }
            (value, error, magnitude) = (r.value, r.error, r.magnitude);
        }
        // capped panels alone already exceed the target
        if done_error > target || heap.len() + done.len() >= opts.max_panels {
            return finish(&heap, &done, true, evaluations);
        }
        let p = heap.pop().unwrap();
        if p.depth >= opts.max_depth {
            done_error += p.error;
            done.push(p);
            continue;
        }
        let m = 0.5 * (p.a + p.b);
        let l = Panel::new(&f, p.a, m, p.depth + 1, p.left.0);
        let r = Panel::new(&f, m, p.b, p.depth + 1, p.right.0);
        value += l.value() + r.value() - p.value();
        error += l.error + r.error - p.error;
        magnitude += l.magnitude() + r.magnitude() - p.magnitude();
        heap.push(l);
        heap.push(r);
        evaluations += 4 * GL_ORDER;
    }
}

/// Capped panels only matter when they carry a visible share of the error.
fn capped_matters(done: &[Panel], target: f64) -> bool {
    done.iter().map(|p| p.error).sum::<f64>() > 0.5 * target
}

fn totals<'a, I: Iterator<Item = &'a Panel>>(panels: I) -> (f64, f64, f64) {
    let mut v = Neumaier::new();
    let mut e = 0.0;
    let mut m = 0.0;
    for p in panels {
        v.add(p.value());
        e += p.error;
        m += p.magnitude();
    }
    (v.value(), e, m)
}

/// Iterated adaptive integration over a box; `breaks[i]` are the cut
/// coordinates along axis `i`.
pub fn integrate_box<F: Fn(&[f64]) -> f64 + Sync>(
    f: &F,
    bx: &Aabb,
    breaks: &[Vec<f64>],
    opts: &QuadOptions,
) -> QuadResult {
    let n = bx.dim();
    let mut x = [0.0; 3];
    integrate_axis(f, bx, breaks, opts, n - 1, &mut x)
}

fn integrate_axis<F: Fn(&[f64]) -> f64>(
    f: &F,
    bx: &Aabb,
    breaks: &[Vec<f64>],
    opts: &QuadOptions,
    axis: usize,
    x: &mut [f64; 3],
) -> QuadResult {
    let n = bx.dim();
    let empty = Vec::new();
    let cuts = breaks.get(axis).unwrap_or(&empty);
    if axis == 0 {
        let xs = *x;
        return integrate(
            |t| {
                let mut p = xs;
                p[0] = t;
                f(&p[..n])
            },
            bx.lo()[0],
            bx.hi()[0],
            cuts,
            opts,
        );
    }
    // the inner integral is evaluated afresh for every outer node
    let inner_opts = QuadOptions {
        abs_tol: opts.abs_tol * 1e-2,
        rel_tol: opts.rel_tol * 1e-2,
        ..*opts
    };
    let flags = std::cell::Cell::new((false, 0usize, 0.0f64));
    let xs = std::cell::RefCell::new(*x);
    let outer = integrate(
        |t| {
            let mut p = *xs.borrow();
            p[axis] = t;
            let r = integrate_axis(f, bx, breaks, &inner_opts, axis - 1, &mut p);
            let (c, e, err) = flags.get();
            flags.set((c || r.capped, e + r.evaluations, err.max(r.error)));
            r.value
        },
        bx.lo()[axis],
        bx.hi()[axis],
        cuts,
        opts,
    );
    let (c, e, inner_err) = flags.get();
    QuadResult {
        value: outer.value,
        error: outer.error + inner_err * (bx.hi()[axis] - bx.lo()[axis]),
        magnitude: outer.magnitude,
        capped: outer.capped || c,
        evaluations: outer.evaluations + e,
    }
}

/// Nodes and weights of a fixed composite rule: every interval between
/// consecutive `edges` is split into `panels` equal panels of the 8-point rule.
pub fn composite_rule(edges: &[f64], panels: usize) -> (Vec<f64>, Vec<f64>) {
    let (gx, gw) = gauss_legendre();
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    for w in edges.windows(2) {
        let h = (w[1] - w[0]) / panels as f64;
        for j in 0..panels {
            let a = w[0] + j as f64 * h;
            let c = a + 0.5 * h;
            for i in 0..GL_ORDER {
                nodes.push(c + 0.5 * h * gx[i]);
                weights.push(0.5 * h * gw[i]);
            }
        }
    }
    (nodes, weights)
}
