//! The `I` and `J` functionals behind one trait, registered by name.

use std::collections::BTreeMap;
use std::fmt;

use crate::caps::CapAverageContext;
use crate::error::{parameter, Error, Result};
use crate::weights::fine_condition_ratio;

use super::{i_integral, j_integral, remainder_m, remainder_n, TRule};

/// A per-degree functional `W(l) = ∫_0^T |D_{l,t}|² t^{-q-1} dt` with a
/// deviation `D` that vanishes like `t^{2n+2}`.
pub trait Functional: fmt::Debug + Send + Sync {
    fn name(&self) -> &'static str;

    /// Taylor order `n`.
    fn order(&self) -> usize;

    /// Smoothness index `α`; the integral weight is `t^{-2α-1}`.
    fn alpha(&self) -> f64;

    /// Expected growth exponent: `W(l) ~ l^{power}`.
    fn power(&self) -> f64 {
        2.0 * self.alpha()
    }

    /// `D_{l,t}` for a single-degree input.
    fn deviation(&self, ctx: &CapAverageContext, l: usize, t: f64) -> Result<f64>;

    fn eval(&self, ctx: &CapAverageContext, l: usize) -> Result<f64>;

    /// `Some(reason)` when the two-sided bound is not guaranteed for this
    /// weight.
    fn hypothesis_issue(&self, _ctx: &CapAverageContext) -> Option<String> {
        None
    }

    /// `W(l)` on a shared `t` rule (used when many degrees are combined).
    fn eval_on(&self, ctx: &CapAverageContext, l: usize, rule: &TRule) -> Result<f64> {
        rule.square_integral(2.0 * self.alpha(), (2 * self.order() + 2) as f64, |t| {
            self.deviation(ctx, l, t)
        })
    }
}

/// `I_{α,n}`, `2n < α < 2n+2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IFunctional {
    alpha: f64,
    n: usize,
}

impl IFunctional {
    /// `n = ⌊α/2⌋`; even integers belong to [`JFunctional`].
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(parameter(format!("alpha = {alpha} must be positive")));
        }
        let n = (alpha / 2.0).floor() as usize;
        if alpha == 2.0 * n as f64 {
            return Err(parameter(format!(
                "alpha = {alpha} = 2n is the even branch; use J with n = {n}"
            )));
        }
        Ok(Self { alpha, n })
    }
}

impl Functional for IFunctional {
    fn name(&self) -> &'static str {
        "I"
    }

    fn order(&self) -> usize {
        self.n
    }

    fn alpha(&self) -> f64 {
        self.alpha
    }

    fn deviation(&self, ctx: &CapAverageContext, l: usize, t: f64) -> Result<f64> {
        remainder_m(ctx, self.n, l, t)
    }

    fn eval(&self, ctx: &CapAverageContext, l: usize) -> Result<f64> {
        i_integral(ctx, self.alpha, self.n, l)
    }
}

/// `J_n`, the even case `α = 2n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JFunctional {
    n: usize,
}

impl JFunctional {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(parameter("J needs n >= 1"));
        }
        Ok(Self { n })
    }
}

impl Functional for JFunctional {
    fn name(&self) -> &'static str {
        "J"
    }

    fn order(&self) -> usize {
        self.n
    }

    fn alpha(&self) -> f64 {
        2.0 * self.n as f64
    }

    fn deviation(&self, ctx: &CapAverageContext, l: usize, t: f64) -> Result<f64> {
        remainder_n(ctx, self.n, l, t)
    }

    fn eval(&self, ctx: &CapAverageContext, l: usize) -> Result<f64> {
        j_integral(ctx, self.n, l)
    }

    fn hypothesis_issue(&self, ctx: &CapAverageContext) -> Option<String> {
        match fine_condition_ratio(ctx.weight(), ctx.dim(), self.n) {
            Ok(r) if r < 1.0 => None,
            Ok(r) => Some(format!("hypothesis unmet: fine condition ratio {r:.6} >= 1")),
            Err(e) => Some(format!("hypothesis unmet: {e}")),
        }
    }
}

/// The functional matching `α`: `J_{α/2}` for even integers, `I_α` otherwise.
pub fn functional_for_alpha(alpha: f64) -> Result<Box<dyn Functional>> {
    if alpha > 0.0 && alpha.fract() == 0.0 && (alpha as usize).is_multiple_of(2) {
        Ok(Box::new(JFunctional::new(alpha as usize / 2)?))
    } else {
        Ok(Box::new(IFunctional::new(alpha)?))
    }
}

/// Parameters handed to a functional builder.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FunctionalParams {
    pub alpha: Option<f64>,
    pub n: Option<usize>,
}

pub type FunctionalBuilder = fn(&FunctionalParams) -> Result<Box<dyn Functional>>;

/// Functionals by name.
#[derive(Debug, Clone)]
pub struct FunctionalRegistry {
    builders: BTreeMap<String, FunctionalBuilder>,
}

impl Default for FunctionalRegistry {
    fn default() -> Self {
        let mut r = Self::empty();
        r.register("I", build_i);
        r.register("J", build_j);
        r
    }
}

fn build_i(p: &FunctionalParams) -> Result<Box<dyn Functional>> {
    let alpha = p.alpha.ok_or_else(|| parameter("I needs alpha"))?;
    let f = IFunctional::new(alpha)?;
    if let Some(n) = p.n {
        if n != f.n {
            return Err(parameter(format!(
                "alpha = {alpha} requires n = {}, got n = {n}",
                f.n
            )));
        }
    }
    Ok(Box::new(f))
}

fn build_j(p: &FunctionalParams) -> Result<Box<dyn Functional>> {
    let n = match (p.n, p.alpha) {
        (Some(n), None) => n,
        (Some(n), Some(a)) if a == 2.0 * n as f64 => n,
        (None, Some(a)) if a > 0.0 && a.fract() == 0.0 && (a as usize).is_multiple_of(2) => a as usize / 2,
        _ => return Err(parameter("J needs n >= 1 (or alpha = 2n)")),
    };
    Ok(Box::new(JFunctional::new(n)?))
}

impl FunctionalRegistry {
    pub fn empty() -> Self {
        Self {
            builders: BTreeMap::new(),
        }
    }

    pub fn register(&mut self, name: &str, builder: FunctionalBuilder) {
        self.builders.insert(name.to_string(), builder);
    }

    pub fn names(&self) -> Vec<&str> {
        self.builders.keys().map(String::as_str).collect()
    }

    pub fn build(&self, name: &str, params: &FunctionalParams) -> Result<Box<dyn Functional>> {
        let builder = self.builders.get(name).ok_or_else(|| {
            Error::Parameter(format!(
                "unknown functional {name:?}; known: {}",
                self.names().join(", ")
            ))
        })?;
        builder(params)
    }
}
