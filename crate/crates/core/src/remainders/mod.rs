//! Taylor-remainder deviations of the cap multipliers and their weighted
//! `t`-integrals.
//!
//! With `A'_k(t) = ∫ (1 - cos s)^k w / ∫ w` (so that
//! `A^ρ_t(|ξ-·|^{2k}) = 2^k A'_k`):
//!
//! ```text
//! M_{n,l,t} = m_{l,t} - Σ_{k<=n} c_{k,l} A'_k(t)
//! N_{n,l,t} = M_{n,l,t} - c_{n,l} A'_n(t) M_{0,l,t}
//! I_{α,n}(l) = ∫_0^T M_{n,l,t}² t^{-2α-1} dt,   2n < α < 2n+2
//! J_n(l)     = ∫_0^T N_{n,l,t}² t^{-4n-1} dt
//! ```

mod functionals;
mod sweep;

pub use functionals::{
    functional_for_alpha, Functional, FunctionalBuilder, FunctionalParams, FunctionalRegistry,
    IFunctional, JFunctional,
};
pub use sweep::{fit_slope, l_grid, sweep, SweepResult, SweepRow};

use std::f64::consts::PI;

use crate::caps::{one_minus_cos, CapAverageContext};
use crate::error::{parameter, Result};
use crate::legendre::{p_minus_one, remainder_with_row_h, taylor_row, TAIL_TERMS};
use crate::quadrature::GaussLegendre;

/// Above this value of `t·l` the partial-sum path is used for `M`.
pub const PATH_SWITCH: f64 = 1.0;

/// How `M_{n,l,t}` is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MPath {
    /// Multiplier minus the Taylor partial sum of averages.
    PartialSum,
    /// Average of the pointwise Taylor remainder `R_{n+1}(cos s)`.
    RemainderIntegral,
}

impl MPath {
    pub fn auto(l: usize, t: f64) -> Self {
        if t * l as f64 <= PATH_SWITCH {
            Self::RemainderIntegral
        } else {
            Self::PartialSum
        }
    }
}

/// `m_{l,t} - 1` and `[A'_0, ..., A'_kmax]` from one quadrature pass.
fn partial_sum_data(ctx: &CapAverageContext, l: usize, t: f64, kmax: usize) -> Result<(f64, Vec<f64>)> {
    let d = ctx.dim();
    let v = ctx.weighted_integrals(t, l, kmax + 2, |s, out| {
        let h = one_minus_cos(s);
        out[0] = 1.0;
        out[1] = p_minus_one(d, l, h);
        let mut hk = 1.0;
        for slot in &mut out[2..] {
            hk *= h;
            *slot = hk;
        }
    })?;
    let mut a = Vec::with_capacity(kmax + 1);
    a.push(1.0);
    a.extend(v[2..].iter().map(|x| x / v[0]));
    Ok((v[1] / v[0], a))
}

/// `Σ_{1<=k<=n} c_{k,l} A'_k`.
fn taylor_terms(c: &[f64], a: &[f64]) -> f64 {
    c.iter().zip(a).skip(1).map(|(c, a)| c * a).sum()
}

fn mass(ctx: &CapAverageContext, t: f64) -> Result<f64> {
    Ok(ctx.weighted_integrals(t, 0, 1, |_, out| out[0] = 1.0)?[0])
}

/// `∫ R_{n+1}(cos s) w / ∫ w`, numerator integrated on its own so the
/// refinement test is relative to the remainder itself.
fn remainder_average(ctx: &CapAverageContext, n: usize, l: usize, t: f64, mass: f64) -> Result<f64> {
    if n >= l {
        return Ok(0.0);
    }
    let d = ctx.dim();
    let row = taylor_row(d, l, (n + TAIL_TERMS).min(l));
    let v = ctx.weighted_integrals(t, l, 1, |s, out| {
        out[0] = remainder_with_row_h(d, l, n, one_minus_cos(s), &row);
    })?;
    Ok(v[0] / mass)
}

/// `A'_k(t)` with the numerator integrated on its own.
fn power_average(ctx: &CapAverageContext, k: usize, t: f64, mass: f64) -> Result<f64> {
    let v = ctx.weighted_integrals(t, 0, 1, |s, out| out[0] = one_minus_cos(s).powi(k as i32))?;
    Ok(v[0] / mass)
}

/// `M_{n,l,t}`, switching paths at `t·l = 1`.
pub fn remainder_m(ctx: &CapAverageContext, n: usize, l: usize, t: f64) -> Result<f64> {
    remainder_m_via(ctx, n, l, t, MPath::auto(l, t))
}

pub fn remainder_m_via(ctx: &CapAverageContext, n: usize, l: usize, t: f64, path: MPath) -> Result<f64> {
    ctx.check_t(t)?;
    if n >= l {
        return Ok(0.0);
    }
    match path {
        MPath::RemainderIntegral => remainder_average(ctx, n, l, t, mass(ctx, t)?),
        MPath::PartialSum => {
            let (m1, a) = partial_sum_data(ctx, l, t, n)?;
            let c = taylor_row(ctx.dim(), l, n);
            Ok(m1 - taylor_terms(&c, &a))
        }
    }
}

/// `N_{n,l,t} = M_{n,l,t} - c_{n,l} A'_n M_{0,l,t}`.
pub fn remainder_n(ctx: &CapAverageContext, n: usize, l: usize, t: f64) -> Result<f64> {
    remainder_n_via(ctx, n, l, t, MPath::auto(l, t))
}

pub fn remainder_n_via(ctx: &CapAverageContext, n: usize, l: usize, t: f64, path: MPath) -> Result<f64> {
    check_even_order(n)?;
    ctx.check_t(t)?;
    if n > l {
        return Ok(0.0);
    }
    let c = taylor_row(ctx.dim(), l, n);
    match path {
        MPath::RemainderIntegral => {
            let z = mass(ctx, t)?;
            let mn = remainder_average(ctx, n, l, t, z)?;
            let m0 = remainder_average(ctx, 0, l, t, z)?;
            Ok(mn - c[n] * power_average(ctx, n, t, z)? * m0)
        }
        MPath::PartialSum => {
            let (m1, a) = partial_sum_data(ctx, l, t, n)?;
            let mn = m1 - taylor_terms(&c, &a);
            Ok(mn - c[n] * a[n] * m1)
        }
    }
}

/// The other algebraic form, `N = M_{n-1,l,t} - c_{n,l} A'_n m_{l,t}`.
pub fn remainder_n_alt(ctx: &CapAverageContext, n: usize, l: usize, t: f64) -> Result<f64> {
    check_even_order(n)?;
    ctx.check_t(t)?;
    if n > l {
        return Ok(0.0);
    }
    let c = taylor_row(ctx.dim(), l, n);
    let (m1, a) = partial_sum_data(ctx, l, t, n)?;
    let prev = remainder_m(ctx, n - 1, l, t)?;
    Ok(prev - c[n] * a[n] * (1.0 + m1))
}

fn check_even_order(n: usize) -> Result<()> {
    if n == 0 {
        return Err(parameter("N is defined for n >= 1"));
    }
    Ok(())
}

/// Nodes and weights for `∫_{t_min}^T F(t) dt` on degree-`l` integrands.
///
/// Below `t = 1/l` the panels are two units wide in `u = ln(T/t)`; above
/// it they grow geometrically to two periods `4π/l` of `P_l` and stay there. Every
/// panel is mapped through the log substitution.
#[derive(Debug, Clone, PartialEq)]
pub struct TRule {
    span: f64,
    t_min: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl TRule {
    pub const NODES_PER_PANEL: usize = 20;

    pub fn new(span: f64, l: usize) -> Self {
        let lf = l.max(1) as f64;
        let t_min = span * f64::min(1e-6, lf.powi(-4));
        let t_switch = (1.0 / lf).min(span);
        let mut edges = vec![t_min];
        let decades = (t_switch / t_min).ln();
        let slow = (decades / 2.0).ceil().max(1.0) as usize;
        for j in 1..=slow {
            edges.push(t_min * (decades * j as f64 / slow as f64).exp());
        }
        *edges.last_mut().unwrap() = t_switch;
        let period = 4.0 * PI / lf;
        let mut t = t_switch;
        while t < span {
            let next = t + t.min(period);
            // avoid a sliver panel at the end
            t = if next > span - 0.25 * period.min(t) { span } else { next };
            edges.push(t);
        }
        let rule = GaussLegendre::new(Self::NODES_PER_PANEL);
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        for w in edges.windows(2) {
            for (v, wv) in rule.mapped(w[0].ln(), w[1].ln()) {
                let t = v.exp();
                nodes.push(t);
                weights.push(wv * t);
            }
        }
        Self {
            span,
            t_min,
            nodes,
            weights,
        }
    }

    pub fn span(&self) -> f64 {
        self.span
    }

    pub fn t_min(&self) -> f64 {
        self.t_min
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `∫_0^T F(t)² t^{-q-1} dt` where `F(t) ~ t^{r}` near zero; the piece
    /// below `t_min` is added as `F(t_min)² t_min^{-q} / (2r - q)`.
    pub fn square_integral(&self, q: f64, r: f64, mut f: impl FnMut(f64) -> Result<f64>) -> Result<f64> {
        let mut total = 0.0;
        for (&t, &w) in self.nodes.iter().zip(&self.weights) {
            let v = f(t)?;
            total += w * v * v * t.powf(-q - 1.0);
        }
        let edge = f(self.t_min)?;
        Ok(total + edge * edge * self.t_min.powf(-q) / (2.0 * r - q))
    }
}

fn check_fractional(alpha: f64, n: usize) -> Result<()> {
    let lo = 2.0 * n as f64;
    if alpha == lo && n >= 1 {
        return Err(parameter(format!(
            "alpha = {alpha} = 2n is the even branch; use J_integral with n = {n}"
        )));
    }
    if !(alpha > lo && alpha < lo + 2.0) {
        return Err(parameter(format!(
            "alpha = {alpha} outside ({lo}, {}); for alpha = 2n use J_integral",
            lo + 2.0
        )));
    }
    Ok(())
}

/// `I_{α,n}(l) = ∫_0^T M_{n,l,t}² dt / t^{2α+1}` for `2n < α < 2n+2`.
pub fn i_integral(ctx: &CapAverageContext, alpha: f64, n: usize, l: usize) -> Result<f64> {
    check_fractional(alpha, n)?;
    if l <= n {
        return Ok(0.0);
    }
    let rule = TRule::new(ctx.span(), l);
    rule.square_integral(2.0 * alpha, (2 * n + 2) as f64, |t| remainder_m(ctx, n, l, t))
}

/// `J_n(l) = ∫_0^T N_{n,l,t}² dt / t^{4n+1}`.
pub fn j_integral(ctx: &CapAverageContext, n: usize, l: usize) -> Result<f64> {
    check_even_order(n)?;
    if l < n {
        return Ok(0.0);
    }
    let rule = TRule::new(ctx.span(), l);
    rule.square_integral(4.0 * n as f64, (2 * n + 2) as f64, |t| remainder_n(ctx, n, l, t))
}

/// `J_n(l)` through [`remainder_n_alt`].
pub fn j_integral_alt(ctx: &CapAverageContext, n: usize, l: usize) -> Result<f64> {
    check_even_order(n)?;
    if l < n {
        return Ok(0.0);
    }
    let rule = TRule::new(ctx.span(), l);
    rule.square_integral(4.0 * n as f64, (2 * n + 2) as f64, |t| remainder_n_alt(ctx, n, l, t))
}
