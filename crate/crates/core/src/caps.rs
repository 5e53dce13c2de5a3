//! Weighted cap averages `A^ρ_t` through their zonal data.
//!
//! Every quantity here is an integral over the dilated angle `s = tθ/T`,
//!
//! ```text
//! ∫_0^T g(s) sin^{d-2}(s) ρ(θ) dθ,   s = tθ/T,
//! ```
//!
//! normalized by the same integral with `g ≡ 1`. The integrals are taken
//! with composite Gauss–Legendre panels split at the weight's breakpoints.

use std::f64::consts::PI;

use crate::coeffs::HarmonicCoeffs;
use crate::error::{domain, Error, Result};
use crate::legendre::p_unchecked;
use crate::quadrature::{adaptive, split_at, GaussLegendre, Refinement, Segment};
use crate::weights::Weight;

/// Panel layout for the angular integrals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadSpec {
    pub nodes_per_panel: usize,
    /// Oscillation periods of `P_l(cos s)` allowed in one base panel.
    pub periods_per_panel: f64,
    pub refinement: Refinement,
}

impl Default for QuadSpec {
    fn default() -> Self {
        Self {
            nodes_per_panel: 64,
            periods_per_panel: 12.0,
            refinement: Refinement::default(),
        }
    }
}

/// `Γ(m/2)` for a positive integer `m`.
pub(crate) fn gamma_half(m: usize) -> f64 {
    assert!(m > 0);
    if m.is_multiple_of(2) {
        (1..m / 2).fold(1.0, |acc, j| acc * j as f64)
    } else {
        // Γ(1/2) = √π, Γ(x + 1) = x Γ(x)
        (0..m / 2).fold(PI.sqrt(), |acc, j| acc * (j as f64 + 0.5))
    }
}

/// Surface area `|S^{k}|` of the unit `k`-sphere in `R^{k+1}`.
pub fn sphere_area(k: usize) -> f64 {
    2.0 * PI.powf((k as f64 + 1.0) / 2.0) / gamma_half(k + 1)
}

/// `1 - cos s` without cancellation.
#[inline]
pub(crate) fn one_minus_cos(s: f64) -> f64 {
    let h = (0.5 * s).sin();
    2.0 * h * h
}

/// Dimension, weight and quadrature layout shared by all averages.
#[derive(Debug, Clone)]
pub struct CapAverageContext {
    d: usize,
    weight: Weight,
    quad: QuadSpec,
    rule: GaussLegendre,
    pieces: Vec<(f64, f64)>,
    sphere_const: f64,
}

impl CapAverageContext {
    pub fn new(d: usize, weight: Weight, quad: QuadSpec) -> Result<Self> {
        if d < 2 {
            return Err(domain(format!("d = {d} must be at least 2")));
        }
        if quad.nodes_per_panel < 16 {
            return Err(domain(format!(
                "{} nodes per panel is below the minimum of 16",
                quad.nodes_per_panel
            )));
        }
        let pieces = split_at(0.0, weight.span(), &weight.breakpoints());
        Ok(Self {
            d,
            rule: GaussLegendre::new(quad.nodes_per_panel),
            sphere_const: sphere_area(d - 2),
            weight,
            quad,
            pieces,
        })
    }

    pub fn with_defaults(d: usize, weight: Weight) -> Result<Self> {
        Self::new(d, weight, QuadSpec::default())
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn weight(&self) -> &Weight {
        &self.weight
    }

    pub fn quad(&self) -> QuadSpec {
        self.quad
    }

    /// `T`.
    pub fn span(&self) -> f64 {
        self.weight.span()
    }

    /// `|S^{d-2}|`.
    pub fn sphere_const(&self) -> f64 {
        self.sphere_const
    }

    pub(crate) fn check_t(&self, t: f64) -> Result<()> {
        if !(t > 0.0 && t <= self.span()) {
            return Err(domain(format!("radius t = {t} outside (0, T = {}]", self.span())));
        }
        Ok(())
    }

    /// `∫_0^T g_i(s) sin^{d-2}(s) ρ(θ) dθ` for `i < k`, where `f(s, out)`
    /// writes `g_i(s)`. `freq` is the highest Legendre degree inside `g`
    /// and sets the base panel count.
    pub fn weighted_integrals(
        &self,
        t: f64,
        freq: usize,
        k: usize,
        mut f: impl FnMut(f64, &mut [f64]),
    ) -> Result<Vec<f64>> {
        self.check_t(t)?;
        let scale = t / self.span();
        let segs: Vec<Segment> = self
            .pieces
            .iter()
            .map(|&(a, b)| {
                let periods = freq as f64 * scale * (b - a) / (2.0 * PI);
                Segment {
                    a,
                    b,
                    pieces: (periods / self.quad.periods_per_panel).ceil().max(1.0) as usize,
                }
            })
            .collect();
        let dm2 = self.d as i32 - 2;
        adaptive(&self.rule, &segs, self.quad.refinement, k, |theta, out| {
            let s = scale * theta;
            let w = s.sin().powi(dm2) * self.weight.rho(theta);
            f(s, out);
            out.iter_mut().for_each(|v| *v *= w);
        })
    }

    /// `z_t = |S^{d-2}| (t/T) ∫_0^T sin^{d-2}(tθ/T) ρ(θ) dθ`.
    pub fn normalizer(&self, t: f64) -> Result<f64> {
        let v = self.weighted_integrals(t, 0, 1, |_, out| out[0] = 1.0)?;
        Ok(self.sphere_const * t / self.span() * v[0])
    }

    /// Eigenvalue `m^ρ_{l,t}` of `A^ρ_t` on degree-`l` harmonics.
    pub fn multiplier(&self, l: usize, t: f64) -> Result<f64> {
        let d = self.d;
        let v = self.weighted_integrals(t, l, 2, |s, out| {
            out[0] = 1.0;
            out[1] = p_unchecked(d, l, s.cos());
        })?;
        Ok(v[1] / v[0])
    }

    /// `[m^ρ_{0,t}, ..., m^ρ_{lmax,t}]` from one pass over the nodes.
    pub fn multipliers(&self, lmax: usize, t: f64) -> Result<Vec<f64>> {
        let d = self.d as f64;
        let v = self.weighted_integrals(t, lmax, lmax + 2, |s, out| {
            let c = s.cos();
            out[0] = 1.0;
            out[1] = 1.0;
            if lmax >= 1 {
                out[2] = c;
            }
            for l in 1..lmax {
                let lf = l as f64;
                out[l + 2] = ((2.0 * lf + d - 2.0) * c * out[l + 1] - lf * out[l]) / (lf + d - 2.0);
            }
        })?;
        Ok(v[1..].iter().map(|x| x / v[0]).collect())
    }

    /// `A^ρ_t(|ξ - ·|^{2k})(ξ) = 2^k ∫ (1 - cos s)^k w / ∫ w`.
    pub fn distance_power_average(&self, k: usize, t: f64) -> Result<f64> {
        let v = self.weighted_integrals(t, 0, 2, |s, out| {
            out[0] = 1.0;
            out[1] = (2.0 * one_minus_cos(s)).powi(k as i32);
        })?;
        Ok(v[1] / v[0])
    }

    /// `A^ρ_t f` in coefficient space.
    pub fn apply_multiplier(&self, coeffs: &HarmonicCoeffs, t: f64) -> Result<HarmonicCoeffs> {
        if coeffs.dim() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                found: coeffs.dim(),
            });
        }
        let m = self.multipliers(coeffs.band(), t)?;
        Ok(coeffs.map_degrees(|l| m[l]))
    }

    pub fn multiplier_table(&self, lmax: usize, t_grid: &[f64]) -> Result<MultiplierTable> {
        let values = t_grid
            .iter()
            .map(|&t| self.multipliers(lmax, t))
            .collect::<Result<Vec<_>>>()?;
        Ok(MultiplierTable {
            lmax,
            t_grid: t_grid.to_vec(),
            values,
        })
    }

    /// Small-`t` bracket for `z_t / t^{d-1}`.
    ///
    /// For `ε ∈ (0, 1]` and `l >= 2`, let `a` solve
    /// `cos a = 1 - ε (d+1) / ((l+d-1)(l-1))`. On `t ∈ (0, (T/T0) a]`,
    /// `(1-ε)^{d-2} c_z <= z_t / t^{d-1} <= C_z` with
    /// `c_z = |S^{d-2}| T^{1-d} ∫_0^{T0} θ^{d-2} ρ` and
    /// `C_z = |S^{d-2}| T^{1-d} ∫_0^T θ^{d-2} ρ`.
    pub fn normalizer_bounds(&self, eps: f64, l: usize) -> Result<NormalizerBounds> {
        if !(eps > 0.0 && eps <= 1.0) || l < 2 {
            return Err(domain("need 0 < eps <= 1 and l >= 2"));
        }
        let d = self.d;
        let cos_a = 1.0 - eps * (d + 1) as f64 / (((l + d - 1) * (l - 1)) as f64);
        let angle = cos_a.clamp(-1.0, 1.0).acos();
        let w = &self.weight;
        let tpow = w.span().powi(1 - d as i32);
        let lower_const = self.sphere_const * tpow * w.moment(d as u32 - 2, w.t_peak())?;
        let upper_const = self.sphere_const * tpow * w.moment(d as u32 - 2, w.span())?;
        Ok(NormalizerBounds {
            window: (w.span() / w.t_peak() * angle).min(w.span()),
            lower: (1.0 - eps).powi(d as i32 - 2) * lower_const,
            upper: upper_const,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizerBounds {
    /// Largest `t` for which the bracket is claimed.
    pub window: f64,
    pub lower: f64,
    pub upper: f64,
}

/// `m^ρ_{l,t}` on a grid of radii.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiplierTable {
    lmax: usize,
    t_grid: Vec<f64>,
    // values[i][l] at t_grid[i]
    values: Vec<Vec<f64>>,
}

impl MultiplierTable {
    pub fn lmax(&self) -> usize {
        self.lmax
    }

    pub fn t_grid(&self) -> &[f64] {
        &self.t_grid
    }

    pub fn get(&self, l: usize, t_index: usize) -> f64 {
        self.values[t_index][l]
    }

    pub fn row(&self, t_index: usize) -> &[f64] {
        &self.values[t_index]
    }

    pub fn max_abs(&self) -> f64 {
        self.values
            .iter()
            .flatten()
            .fold(0.0, |m, v| f64::max(m, v.abs()))
    }
}

/// `points` log-spaced radii from `T·1e-4` to `T`.
pub fn geometric_t_grid(span: f64, points: usize) -> Vec<f64> {
    let lo = span * 1e-4;
    match points {
        0 => Vec::new(),
        1 => vec![span],
        _ => (0..points)
            .map(|i| {
                if i + 1 == points {
                    span
                } else {
                    lo * (span / lo).powf(i as f64 / (points - 1) as f64)
                }
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform() -> CapAverageContext {
        CapAverageContext::with_defaults(3, Weight::constant(PI).unwrap()).unwrap()
    }

    #[test]
    fn sphere_areas() {
        assert!((sphere_area(0) - 2.0).abs() < 1e-15);
        assert!((sphere_area(1) - 2.0 * PI).abs() < 1e-14);
        assert!((sphere_area(2) - 4.0 * PI).abs() < 1e-14);
        assert!((sphere_area(3) - 2.0 * PI * PI).abs() < 1e-13);
    }

    #[test]
    fn uniform_normalizer_is_cap_area() {
        let ctx = uniform();
        for t in [1e-3, 0.4, 1.0, 2.5, PI] {
            let z = ctx.normalizer(t).unwrap();
            let area = 2.0 * PI * one_minus_cos(t);
            assert!((z - area).abs() <= 1e-13 * area, "t={t}");
        }
        assert!(ctx.normalizer(0.0).is_err());
        assert!(ctx.normalizer(3.5).is_err());
    }

    #[test]
    fn normalizer_scales_like_power_of_t() {
        let w = Weight::indicator(2.0, 0.5, 1.5).unwrap();
        let ctx = CapAverageContext::with_defaults(4, w).unwrap();
        let ratios: Vec<f64> = geometric_t_grid(2.0, 30)
            .iter()
            .map(|&t| ctx.normalizer(t).unwrap() / t.powi(3))
            .collect();
        let max = ratios.iter().cloned().fold(0.0, f64::max);
        let min = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(min > 0.0 && max / min < 10.0);
        // small-t limit: |S^{d-2}| T^{1-d} ∫ θ^{d-2} ρ
        let limit = sphere_area(2) * 2f64.powi(-3) * (1.5f64.powi(3) - 0.5f64.powi(3)) / 3.0;
        assert!((ratios[0] - limit).abs() < 1e-6 * limit);
    }

    #[test]
    fn multiplier_examples() {
        let ctx = uniform();
        for t in [0.01, 1.0, PI] {
            assert!((ctx.multiplier(0, t).unwrap() - 1.0).abs() < 1e-14);
        }
        assert!((ctx.multiplier(1, PI / 2.0).unwrap() - 0.5).abs() < 1e-14);
        for l in 1..10 {
            assert!(ctx.multiplier(l, PI).unwrap().abs() < 1e-14);
        }
    }

    #[test]
    fn multiplier_vector_matches_single() {
        let ctx = CapAverageContext::with_defaults(5, Weight::power(2.0, 1.5).unwrap()).unwrap();
        let all = ctx.multipliers(20, 1.3).unwrap();
        for (l, &m) in all.iter().enumerate() {
            assert!((m - ctx.multiplier(l, 1.3).unwrap()).abs() < 1e-13, "l={l}");
        }
    }

    #[test]
    fn distance_power_examples() {
        let ctx = uniform();
        assert!((ctx.distance_power_average(0, 0.7).unwrap() - 1.0).abs() < 1e-15);
        for t in [0.1, PI / 2.0, 2.0] {
            let got = ctx.distance_power_average(1, t).unwrap();
            assert!((got - (1.0 - t.cos())).abs() < 1e-14, "t={t}");
        }
        let w = Weight::indicator(PI, 0.3, 1.2).unwrap();
        let ctx = CapAverageContext::with_defaults(3, w).unwrap();
        for k in 1..4 {
            let r: Vec<f64> = geometric_t_grid(PI, 25)
                .iter()
                .map(|&t| ctx.distance_power_average(k, t).unwrap() / t.powi(2 * k as i32))
                .collect();
            let max = r.iter().cloned().fold(0.0, f64::max);
            let min = r.iter().cloned().fold(f64::INFINITY, f64::min);
            assert!(min > 0.0 && max / min < 50.0, "k={k}");
        }
    }

    #[test]
    fn apply_multiplier_examples() {
        let ctx = uniform();
        let mut c = HarmonicCoeffs::zeros(3, 4);
        c.block_mut(0)[0] = 2.0;
        let out = ctx.apply_multiplier(&c, 0.8).unwrap();
        assert!(out.max_abs_diff(&c).unwrap() < 1e-14);

        let mut y1 = HarmonicCoeffs::zeros(3, 4);
        y1.block_mut(1).copy_from_slice(&[0.3, -1.0, 0.5]);
        let out = ctx.apply_multiplier(&y1, PI / 2.0).unwrap();
        for (a, b) in out.block(1).iter().zip(y1.block(1)) {
            assert!((a - 0.5 * b).abs() < 1e-14);
        }

        let mut f = HarmonicCoeffs::zeros(3, 6);
        for l in 0..=6 {
            f.block_mut(l).iter_mut().enumerate().for_each(|(j, x)| *x = (l + j) as f64 * 0.1 - 0.3);
        }
        let near = ctx.apply_multiplier(&f, 1e-6).unwrap();
        assert!(near.max_abs_diff(&f).unwrap() < 1e-9);
        assert!(ctx.apply_multiplier(&HarmonicCoeffs::zeros(4, 2), 1.0).is_err());
    }

    #[test]
    fn normalizer_bracket_holds_in_window() {
        for (d, w) in [
            (3, Weight::constant(PI).unwrap()),
            (4, Weight::indicator(2.0, 0.5, 1.0).unwrap()),
            (5, Weight::power(1.5, 2.0).unwrap()),
        ] {
            let ctx = CapAverageContext::with_defaults(d, w).unwrap();
            for l in [2, 8, 64] {
                for eps in [0.1, 0.5] {
                    let b = ctx.normalizer_bounds(eps, l).unwrap();
                    for i in 1..=20 {
                        let t = b.window * i as f64 / 20.0;
                        let r = ctx.normalizer(t).unwrap() / t.powi(d as i32 - 1);
                        assert!(r >= b.lower * (1.0 - 1e-12) && r <= b.upper * (1.0 + 1e-12));
                    }
                }
            }
        }
    }

    #[test]
    fn grid_is_log_spaced() {
        let g = geometric_t_grid(2.0, 200);
        assert_eq!(g.len(), 200);
        assert!((g[0] - 2e-4).abs() < 1e-18);
        assert_eq!(g[199], 2.0);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
    }
}
