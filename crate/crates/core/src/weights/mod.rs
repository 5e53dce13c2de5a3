//! Weights `ρ` on `[0, T]` with markers `0 < t0 < T0 <= T`, `T0 < π`.
//!
//! A weight is described by a [`WeightSpec`] (the JSON form), checked by
//! [`validate`], and turned into a [`Weight`] whose angular profile is
//! resolved through a [`WeightRegistry`].

mod profiles;
mod registry;

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

pub use profiles::{Constant, Indicator, Power, Table, WeightProfile};
pub use registry::{ProfileBuilder, WeightRegistry};

/// JSON description of a weight.
///
/// Markers may be omitted for kinds that are positive on a whole interval;
/// they are then filled in when the weight is built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightSpec {
    pub kind: String,
    #[serde(rename = "T")]
    pub span: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t0: Option<f64>,
    #[serde(rename = "T0", default, skip_serializing_if = "Option::is_none")]
    pub t_peak: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<Vec<[f64; 2]>>,
}

impl WeightSpec {
    fn bare(kind: &str, span: f64) -> Self {
        Self {
            kind: kind.to_string(),
            span,
            t0: None,
            t_peak: None,
            p: None,
            table: None,
        }
    }

    pub fn constant(span: f64) -> Self {
        Self::bare("constant", span)
    }

    pub fn indicator(span: f64, t0: f64, t_peak: f64) -> Self {
        Self {
            t0: Some(t0),
            t_peak: Some(t_peak),
            ..Self::bare("indicator", span)
        }
    }

    pub fn power(span: f64, p: f64) -> Self {
        Self {
            p: Some(p),
            ..Self::bare("power", span)
        }
    }

    pub fn table(span: f64, points: Vec<[f64; 2]>) -> Self {
        Self {
            table: Some(points),
            ..Self::bare("table", span)
        }
    }

    pub fn with_markers(mut self, t0: f64, t_peak: f64) -> Self {
        self.t0 = Some(t0);
        self.t_peak = Some(t_peak);
        self
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

/// One failed clause of the weight definition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub clause: String,
    pub message: String,
}

impl Violation {
    pub fn new(clause: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            clause: clause.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has_clause(&self, clause: &str) -> bool {
        self.violations.iter().any(|v| v.clause == clause)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_valid() {
            return write!(f, "valid");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{}: {}", v.clause, v.message)?;
        }
        Ok(())
    }
}

/// Checks every clause of the weight definition using the default kinds.
pub fn validate(spec: &WeightSpec) -> ValidationReport {
    validate_with(spec, &WeightRegistry::default())
}

pub fn validate_with(spec: &WeightSpec, registry: &WeightRegistry) -> ValidationReport {
    match resolve(spec, registry) {
        Ok(_) => ValidationReport::default(),
        Err(violations) => ValidationReport { violations },
    }
}

fn resolve(
    spec: &WeightSpec,
    registry: &WeightRegistry,
) -> std::result::Result<(Arc<dyn WeightProfile>, f64, f64), Vec<Violation>> {
    let mut problems = Vec::new();
    let span = spec.span;
    if !(span.is_finite() && span > 0.0 && span <= PI) {
        problems.push(Violation::new("span", format!("T = {span} must lie in (0, pi]")));
    }
    let profile = match registry.build(spec) {
        Ok(p) => Some(p),
        Err(mut v) => {
            problems.append(&mut v);
            None
        }
    };
    if !problems.is_empty() {
        return Err(problems);
    }
    let profile = profile.expect("built above");

    let (t0, t_peak) = match (spec.t0, spec.t_peak) {
        (Some(a), Some(b)) => (a, b),
        (None, None) => match default_markers(profile.as_ref(), span) {
            Some(m) => m,
            None => {
                return Err(vec![Violation::new(
                    "positive-mass",
                    "no interval of positive mass found in [0, T]",
                )])
            }
        },
        _ => {
            return Err(vec![Violation::new(
                "markers",
                "t0 and T0 must be given together",
            )])
        }
    };
    if !(t0.is_finite() && t_peak.is_finite()) {
        problems.push(Violation::new("finite", "markers must be finite"));
    } else {
        if !(0.0 < t0 && t0 < t_peak && t_peak <= span) {
            problems.push(Violation::new(
                "ordering",
                format!("need 0 < t0 < T0 <= T, got t0 = {t0}, T0 = {t_peak}, T = {span}"),
            ));
        }
        if t_peak >= PI {
            problems.push(Violation::new("below-pi", format!("T0 = {t_peak} must be < pi")));
        }
    }
    if problems.is_empty() {
        let mass = profile.moment(0, t_peak) - profile.moment(0, t0);
        if !(mass > 0.0) {
            problems.push(Violation::new(
                "positive-mass",
                format!("integral of rho over [t0, T0] = {mass} is not positive"),
            ));
        }
        if !profile.moment(0, span).is_finite() {
            problems.push(Violation::new("square-integrable", "rho has infinite mass"));
        }
    }
    if problems.is_empty() {
        Ok((profile, t0, t_peak))
    } else {
        Err(problems)
    }
}

/// Markers for weights given only with positive total mass: the first
/// interval between breakpoints with positive mass is used, and its middle
/// half becomes `[t0, T0]`. A profile without interior breakpoints gets
/// `t0 = T/4`, `T0 = min(3T/4, 0.99π)`.
fn default_markers(profile: &dyn WeightProfile, span: f64) -> Option<(f64, f64)> {
    let mut pts: Vec<f64> = std::iter::once(0.0)
        .chain(profile.breakpoints())
        .chain(std::iter::once(span))
        .filter(|x| (0.0..=span).contains(x))
        .collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    if pts.len() == 2 {
        if profile.moment(0, span) > 0.0 {
            return Some((span / 4.0, (0.75 * span).min(0.99 * PI)));
        }
        return None;
    }
    for w in pts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let lower = if a > 0.0 { profile.moment(0, a) } else { 0.0 };
        if profile.moment(0, b) - lower > 0.0 {
            return Some((a + 0.25 * (b - a), a + 0.75 * (b - a)));
        }
    }
    None
}

/// A validated weight `ρ ∈ W(T, t0, T0)`.
#[derive(Debug, Clone)]
pub struct Weight {
    profile: Arc<dyn WeightProfile>,
    span: f64,
    t0: f64,
    t_peak: f64,
    spec: WeightSpec,
}

impl Weight {
    pub fn from_spec(spec: &WeightSpec) -> Result<Self> {
        Self::from_spec_with(spec, &WeightRegistry::default())
    }

    pub fn from_spec_with(spec: &WeightSpec, registry: &WeightRegistry) -> Result<Self> {
        let (profile, t0, t_peak) = resolve(spec, registry)
            .map_err(|violations| Error::InvalidWeight(ValidationReport { violations }))?;
        let spec = spec.clone().with_markers(t0, t_peak);
        Ok(Self {
            profile,
            span: spec.span,
            t0,
            t_peak,
            spec,
        })
    }

    /// `ρ ≡ 1` on `[0, T]` with default markers.
    pub fn constant(span: f64) -> Result<Self> {
        Self::from_spec(&WeightSpec::constant(span))
    }

    /// Indicator of `[t0, T0]` inside `[0, T]`.
    pub fn indicator(span: f64, t0: f64, t_peak: f64) -> Result<Self> {
        Self::from_spec(&WeightSpec::indicator(span, t0, t_peak))
    }

    pub fn power(span: f64, p: f64) -> Result<Self> {
        Self::from_spec(&WeightSpec::power(span, p))
    }

    pub fn table(span: f64, points: Vec<[f64; 2]>) -> Result<Self> {
        Self::from_spec(&WeightSpec::table(span, points))
    }

    pub fn kind(&self) -> &'static str {
        self.profile.kind()
    }

    /// `T`.
    pub fn span(&self) -> f64 {
        self.span
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    /// `T0`.
    pub fn t_peak(&self) -> f64 {
        self.t_peak
    }

    /// The [`WeightSpec`] with resolved markers.
    pub fn spec(&self) -> &WeightSpec {
        &self.spec
    }

    pub fn profile(&self) -> &dyn WeightProfile {
        self.profile.as_ref()
    }

    /// Short identifier used in reports.
    pub fn label(&self) -> String {
        match self.kind() {
            "power" => format!("power(p={})[T={}]", self.spec.p.unwrap_or(0.0), self.span),
            kind => format!("{kind}[T={},t0={},T0={}]", self.span, self.t0, self.t_peak),
        }
    }

    /// Breakpoints of `ρ` together with the markers, inside `(0, T)`.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut pts = self.profile.breakpoints();
        pts.extend(self.profile.grading(self.span));
        pts.push(self.t0);
        pts.push(self.t_peak);
        pts.retain(|&x| x > 0.0 && x < self.span);
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }

    pub fn eval_rho(&self, theta: f64) -> Result<f64> {
        if !(0.0..=self.span).contains(&theta) {
            return Err(domain(format!("theta = {theta} outside [0, T = {}]", self.span)));
        }
        Ok(self.profile.value(theta))
    }

    #[inline]
    pub(crate) fn rho(&self, theta: f64) -> f64 {
        self.profile.value(theta)
    }

    /// `∫_0^upper θ^k ρ(θ) dθ` for `upper ∈ (0, T]`.
    pub fn moment(&self, k: u32, upper: f64) -> Result<f64> {
        if !(upper > 0.0 && upper <= self.span) {
            return Err(domain(format!("upper limit {upper} outside (0, T = {}]", self.span)));
        }
        Ok(self.profile.moment(k, upper))
    }
}

/// Left-hand side of the moment condition that secures the two-sided bound
/// in the even case `α = 2n`:
///
/// ```text
/// (d-1)/(d+2n-1) · (∫_0^T θ^{d-2}ρ)² ∫_0^T θ^{2n+d}ρ
///                 / (∫_0^{T0} θ^{d-2}ρ · ∫_0^{T0} θ^d ρ · ∫_0^{T0} θ^{2n+d-2}ρ)
/// ```
///
/// The condition holds when the result is below 1.
pub fn fine_condition_ratio(w: &Weight, d: usize, n: usize) -> Result<f64> {
    if d < 2 {
        return Err(domain(format!("d = {d} must be at least 2")));
    }
    if n < 1 {
        return Err(domain("n must be at least 1"));
    }
    let (d32, n32) = (d as u32, n as u32);
    let full = |k| w.moment(k, w.span);
    let near = |k| w.moment(k, w.t_peak);
    let den = near(d32 - 2)? * near(d32)? * near(2 * n32 + d32 - 2)?;
    if !(den > 0.0) {
        return Err(Error::DegenerateWeight(format!(
            "a moment over [0, T0] vanishes (product = {den})"
        )));
    }
    let a = full(d32 - 2)?;
    let num = a * a * full(2 * n32 + d32)?;
    Ok((d as f64 - 1.0) / (d as f64 + 2.0 * n as f64 - 1.0) * num / den)
}
