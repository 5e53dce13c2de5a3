//! Gauss–Legendre rules and composite/adaptive integration over panels.

use crate::error::{Error, Result};

/// An `n`-point Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes by Newton iteration on the Legendre recurrence, ascending.
    pub fn new(n: usize) -> Self {
        assert!(n > 0, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() <= 1e-16 * x.abs().max(1.0) {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Nodes and weights mapped onto `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }

    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 1..n {
        let kf = k as f64;
        let p2 = ((2.0 * kf + 1.0) * x * p1 - kf * p0) / (kf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let dp = nf * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// A closed interval split into `pieces` equal sub-panels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub a: f64,
    pub b: f64,
    pub pieces: usize,
}

/// Composite rule over `segments` for `k` integrands at once; `f(x, out)`
/// writes the integrand values at `x` into `out`.
pub fn composite(
    rule: &GaussLegendre,
    segments: &[Segment],
    k: usize,
    mut f: impl FnMut(f64, &mut [f64]),
) -> Vec<f64> {
    let mut acc = vec![0.0; k];
    let mut buf = vec![0.0; k];
    for seg in segments {
        let h = (seg.b - seg.a) / seg.pieces as f64;
        for p in 0..seg.pieces {
            let a = seg.a + h * p as f64;
            let b = if p + 1 == seg.pieces { seg.b } else { a + h };
            for (x, w) in rule.mapped(a, b) {
                f(x, &mut buf);
                for (slot, v) in acc.iter_mut().zip(&buf) {
                    *slot += w * v;
                }
            }
        }
    }
    acc
}

/// Splits `[lo, hi]` at the given interior breakpoints, dropping duplicates
/// and points outside the open interval.
pub fn split_at(lo: f64, hi: f64, breaks: &[f64]) -> Vec<(f64, f64)> {
    let mut pts: Vec<f64> = breaks
        .iter()
        .copied()
        .filter(|&x| x > lo && x < hi)
        .collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * hi.abs().max(1.0));
    let mut out = Vec::with_capacity(pts.len() + 1);
    let mut prev = lo;
    for x in pts {
        out.push((prev, x));
        prev = x;
    }
    out.push((prev, hi));
    out
}

/// Refinement policy for [`adaptive`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Refinement {
    pub rel_tol: f64,
    pub max_doublings: usize,
}

impl Default for Refinement {
    fn default() -> Self {
        Self {
            rel_tol: 1e-12,
            max_doublings: 4,
        }
    }
}

/// Composite integration with sub-panel doubling until every component
/// changes by less than `rel_tol` times the largest component magnitude.
pub fn adaptive(
    rule: &GaussLegendre,
    segments: &[Segment],
    policy: Refinement,
    k: usize,
    mut f: impl FnMut(f64, &mut [f64]),
) -> Result<Vec<f64>> {
    let mut segs = segments.to_vec();
    let mut prev = composite(rule, &segs, k, &mut f);
    let mut change = f64::INFINITY;
    for _ in 0..policy.max_doublings {
        for s in &mut segs {
            s.pieces *= 2;
        }
        let next = composite(rule, &segs, k, &mut f);
        let scale = next.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        change = prev
            .iter()
            .zip(&next)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        if change <= policy.rel_tol * scale || scale == 0.0 {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::Numeric {
        message: format!("panel refinement exhausted after {} doublings", policy.max_doublings),
        estimate: prev.first().copied().unwrap_or(0.0),
        change,
    })
}
