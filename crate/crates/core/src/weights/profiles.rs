//! The built-in weight kinds.

use std::fmt;

use crate::quadrature::GaussLegendre;

/// Angular profile `ρ` of a weight on `[0, T]`.
///
/// Implementations are registered by kind name in a
/// [`WeightRegistry`](super::WeightRegistry).
pub trait WeightProfile: fmt::Debug + Send + Sync {
    fn kind(&self) -> &'static str;

    /// `ρ(θ)` for `θ` in `[0, T]`.
    fn value(&self, theta: f64) -> f64;

    /// `∫_0^upper θ^k ρ(θ) dθ` for `upper` in `(0, T]`.
    fn moment(&self, k: u32, upper: f64) -> f64;

    /// Interior points where `ρ` or its derivatives jump.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }

    /// Extra quadrature panel edges on `[0, span]` for profiles that are
    /// not smooth at an endpoint.
    fn grading(&self, _span: f64) -> Vec<f64> {
        Vec::new()
    }
}

/// `ρ ≡ 1` on `[0, T]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constant;

impl WeightProfile for Constant {
    fn kind(&self) -> &'static str {
        "constant"
    }

    fn value(&self, _theta: f64) -> f64 {
        1.0
    }

    fn moment(&self, k: u32, upper: f64) -> f64 {
        monomial(k as f64, 0.0, upper)
    }
}

/// Indicator of `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Indicator {
    pub lo: f64,
    pub hi: f64,
}

impl WeightProfile for Indicator {
    fn kind(&self) -> &'static str {
        "indicator"
    }

    fn value(&self, theta: f64) -> f64 {
        if theta >= self.lo && theta <= self.hi {
            1.0
        } else {
            0.0
        }
    }

    fn moment(&self, k: u32, upper: f64) -> f64 {
        let top = upper.min(self.hi);
        if top <= self.lo {
            return 0.0;
        }
        monomial(k as f64, self.lo, top)
    }

    fn breakpoints(&self) -> Vec<f64> {
        vec![self.lo, self.hi]
    }
}

/// `ρ(θ) = θ^p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Power {
    pub p: f64,
}

impl WeightProfile for Power {
    fn kind(&self) -> &'static str {
        "power"
    }

    fn value(&self, theta: f64) -> f64 {
        theta.powf(self.p)
    }

    fn moment(&self, k: u32, upper: f64) -> f64 {
        monomial(k as f64 + self.p, 0.0, upper)
    }

    fn grading(&self, span: f64) -> Vec<f64> {
        if self.p.fract() == 0.0 {
            return Vec::new();
        }
        // geometric panels toward the branch point at 0
        (1..48).map(|j| span * 0.5f64.powi(j)).collect()
    }
}

/// Piecewise-linear interpolation of `(θ, ρ)` samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    points: Vec<(f64, f64)>,
    rule: GaussLegendre,
}

impl Table {
    /// Points must be sorted by angle; validation happens upstream.
    pub fn new(points: Vec<(f64, f64)>) -> Self {
        Self {
            points,
            rule: GaussLegendre::new(8),
        }
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }
}

impl WeightProfile for Table {
    fn kind(&self) -> &'static str {
        "table"
    }

    fn value(&self, theta: f64) -> f64 {
        let pts = &self.points;
        let idx = pts.partition_point(|&(x, _)| x <= theta);
        if idx == 0 {
            return pts[0].1;
        }
        if idx == pts.len() {
            return pts[pts.len() - 1].1;
        }
        let (x0, y0) = pts[idx - 1];
        let (x1, y1) = pts[idx];
        if x1 == x0 {
            return y1;
        }
        y0 + (y1 - y0) * (theta - x0) / (x1 - x0)
    }

    fn moment(&self, k: u32, upper: f64) -> f64 {
        let mut total = 0.0;
        for w in self.points.windows(2) {
            let (x0, y0) = w[0];
            let (x1, y1) = w[1];
            if x0 >= upper {
                break;
            }
            let b = x1.min(upper);
            if b <= x0 {
                continue;
            }
            let slope = if x1 > x0 { (y1 - y0) / (x1 - x0) } else { 0.0 };
            total += self
                .rule
                .integrate(x0, b, |x| x.powi(k as i32) * (y0 + slope * (x - x0)));
        }
        total
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.points.iter().map(|&(x, _)| x).collect()
    }
}

/// `∫_a^b θ^q dθ` for `q > -1`.
fn monomial(q: f64, a: f64, b: f64) -> f64 {
    let e = q + 1.0;
    if a == 0.0 {
        b.powf(e) / e
    } else {
        (b.powf(e) - a.powf(e)) / e
    }
}
