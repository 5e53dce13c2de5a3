use std::collections::BTreeMap;
use std::sync::Arc;

use super::profiles::{Constant, Indicator, Power, Table, WeightProfile};
use super::{Violation, WeightSpec};

/// Builds a profile from a spec, reporting kind-specific parameter problems.
pub type ProfileBuilder = fn(&WeightSpec) -> Result<Arc<dyn WeightProfile>, Vec<Violation>>;

/// Weight kinds available by name.
#[derive(Clone)]
pub struct WeightRegistry {
    builders: BTreeMap<String, ProfileBuilder>,
}

impl std::fmt::Debug for WeightRegistry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_set().entries(self.builders.keys()).finish()
    }
}

impl WeightRegistry {
    pub fn empty() -> Self {
        Self {
            builders: BTreeMap::new(),
        }
    }

    /// Registers `builder` under `kind`, replacing any previous entry.
    pub fn register(&mut self, kind: impl Into<String>, builder: ProfileBuilder) {
        self.builders.insert(kind.into(), builder);
    }

    pub fn kinds(&self) -> impl Iterator<Item = &str> {
        self.builders.keys().map(String::as_str)
    }

    pub fn contains(&self, kind: &str) -> bool {
        self.builders.contains_key(kind)
    }

    pub fn build(&self, spec: &WeightSpec) -> Result<Arc<dyn WeightProfile>, Vec<Violation>> {
        match self.builders.get(&spec.kind) {
            Some(build) => build(spec),
            None => Err(vec![Violation::new(
                "kind",
                format!(
                    "unknown weight kind {:?}; known kinds: {}",
                    spec.kind,
                    self.kinds().collect::<Vec<_>>().join(", ")
                ),
            )]),
        }
    }
}

impl Default for WeightRegistry {
    fn default() -> Self {
        let mut reg = Self::empty();
        reg.register("constant", build_constant);
        reg.register("indicator", build_indicator);
        reg.register("power", build_power);
        reg.register("table", build_table);
        reg
    }
}

fn build_constant(_: &WeightSpec) -> Result<Arc<dyn WeightProfile>, Vec<Violation>> {
    Ok(Arc::new(Constant))
}

fn build_indicator(spec: &WeightSpec) -> Result<Arc<dyn WeightProfile>, Vec<Violation>> {
    match (spec.t0, spec.t_peak) {
        (Some(lo), Some(hi)) => Ok(Arc::new(Indicator { lo, hi })),
        _ => Err(vec![Violation::new(
            "markers",
            "indicator weights need both t0 and T0 (the support)",
        )]),
    }
}

fn build_power(spec: &WeightSpec) -> Result<Arc<dyn WeightProfile>, Vec<Violation>> {
    match spec.p {
        None => Err(vec![Violation::new("params", "power weight needs exponent p")]),
        Some(p) if !p.is_finite() => Err(vec![Violation::new("finite", "exponent p is not finite")]),
        Some(p) if p < 0.0 => Err(vec![Violation::new(
            "params",
            format!("exponent p = {p} must be nonnegative"),
        )]),
        Some(p) => Ok(Arc::new(Power { p })),
    }
}

fn build_table(spec: &WeightSpec) -> Result<Arc<dyn WeightProfile>, Vec<Violation>> {
    let Some(table) = &spec.table else {
        return Err(vec![Violation::new("params", "table weight needs a table")]);
    };
    let mut problems = Vec::new();
    if table.len() < 2 {
        problems.push(Violation::new("table-shape", "table needs at least two points"));
    }
    if table.iter().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
        problems.push(Violation::new("finite", "table contains non-finite entries"));
    }
    if table.iter().any(|p| p[1] < 0.0) {
        problems.push(Violation::new("nonnegativity", "table contains a negative value"));
    }
    if table.windows(2).any(|w| w[1][0] <= w[0][0]) {
        problems.push(Violation::new("table-shape", "table angles must be strictly increasing"));
    }
    if let (Some(first), Some(last)) = (table.first(), table.last()) {
        let tol = 1e-12 * spec.span.abs().max(1.0);
        if first[0].abs() > tol || (last[0] - spec.span).abs() > tol {
            problems.push(Violation::new(
                "table-shape",
                format!(
                    "table must cover [0, T] = [0, {}], got [{}, {}]",
                    spec.span, first[0], last[0]
                ),
            ));
        }
    }
    if !problems.is_empty() {
        return Err(problems);
    }
    Ok(Arc::new(Table::new(table.iter().map(|p| (p[0], p[1])).collect())))
}
