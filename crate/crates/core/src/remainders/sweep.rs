//! Degree sweeps of a functional and log-log slope fits.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::caps::CapAverageContext;
use crate::error::{parameter, Result};

use super::Functional;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub l: usize,
    pub value: f64,
    /// `value / l^power`.
    pub normalized: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub mode: String,
    pub d: usize,
    pub alpha: f64,
    pub n: usize,
    pub weight: String,
    pub power: f64,
    pub rows: Vec<SweepRow>,
    pub slope: Option<f64>,
    pub window: Option<(usize, usize)>,
    pub warnings: Vec<String>,
    /// Set when a row failed; `rows` then holds the completed prefix.
    pub failure: Option<String>,
}

impl SweepResult {
    pub fn hypothesis_unmet(&self) -> bool {
        self.warnings.iter().any(|w| w.contains("hypothesis unmet"))
    }

    /// Max over min of the normalized column, ignoring zero rows.
    pub fn normalized_spread(&self) -> f64 {
        let vals: Vec<f64> = self
            .rows
            .iter()
            .filter(|r| r.value > 0.0)
            .map(|r| r.normalized)
            .collect();
        let max = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        max / min
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("l,value,normalized\n");
        for r in &self.rows {
            let _ = writeln!(out, "{},{:e},{:e}", r.l, r.value, r.normalized);
        }
        match (self.slope, self.window) {
            (Some(s), Some((a, b))) => {
                let _ = writeln!(out, "# slope={s} window=[{a},{b}]");
            }
            _ => out.push_str("# slope=nan window=[]\n"),
        }
        out
    }
}

/// Degrees `round(lmin · 2^{j/2})` up to `lmax`, two per octave.
pub fn l_grid(lmin: usize, lmax: usize) -> Vec<usize> {
    let mut out = Vec::new();
    if lmin == 0 || lmin > lmax {
        return out;
    }
    let mut j = 0;
    loop {
        let l = (lmin as f64 * 2f64.powf(j as f64 / 2.0)).round() as usize;
        if l > lmax {
            break;
        }
        if out.last() != Some(&l) {
            out.push(l);
        }
        j += 1;
    }
    if out.last() != Some(&lmax) {
        out.push(lmax);
    }
    out
}

/// Least-squares slope of `ln value` against `ln l` over the top half of
/// the rows; zero rows are skipped.
pub fn fit_slope(rows: &[SweepRow]) -> Option<(f64, (usize, usize))> {
    let top = &rows[rows.len() / 2..];
    let pts: Vec<(f64, f64)> = top
        .iter()
        .filter(|r| r.value > 0.0)
        .map(|r| ((r.l as f64).ln(), r.value.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let window = (top.first()?.l, top.last()?.l);
    Some((sxy / sxx, window))
}

/// Evaluates `functional` at each degree of `ls` (ascending, nonempty).
pub fn sweep(ctx: &CapAverageContext, functional: &dyn Functional, ls: &[usize]) -> Result<SweepResult> {
    if ls.is_empty() {
        return Err(parameter("empty degree range"));
    }
    if ls.windows(2).any(|w| w[1] <= w[0]) {
        return Err(parameter("degrees must be strictly ascending"));
    }
    let power = functional.power();
    let mut rows = Vec::with_capacity(ls.len());
    let mut failure = None;
    for &l in ls {
        match functional.eval(ctx, l) {
            Ok(value) => rows.push(SweepRow {
                l,
                value,
                normalized: value / (l as f64).powf(power),
            }),
            Err(e) => {
                failure = Some(format!("l = {l}: {e}"));
                break;
            }
        }
    }
    let fit = if failure.is_none() { fit_slope(&rows) } else { None };
    Ok(SweepResult {
        mode: functional.name().to_string(),
        d: ctx.dim(),
        alpha: functional.alpha(),
        n: functional.order(),
        weight: ctx.weight().label(),
        power,
        rows,
        slope: fit.map(|f| f.0),
        window: fit.map(|f| f.1),
        warnings: functional.hypothesis_issue(ctx).into_iter().collect(),
        failure,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::remainders::{IFunctional, JFunctional};
    use crate::weights::{Weight, WeightSpec};
    use std::f64::consts::PI;

    #[test]
    fn grid_two_per_octave() {
        assert_eq!(l_grid(16, 256), [16, 23, 32, 45, 64, 91, 128, 181, 256]);
        assert_eq!(l_grid(4, 10), [4, 6, 8, 10]);
        assert!(l_grid(5, 4).is_empty());
    }

    #[test]
    fn slope_of_exact_power() {
        let rows: Vec<SweepRow> = [2, 4, 8, 16, 32]
            .iter()
            .map(|&l| SweepRow { l, value: 3.0 * (l as f64).powf(2.5), normalized: 3.0 })
            .collect();
        let (s, w) = fit_slope(&rows).unwrap();
        assert!((s - 2.5).abs() < 1e-12);
        assert_eq!(w, (8, 32));
    }

    #[test]
    fn sweep_rows_and_csv() {
        let ctx = CapAverageContext::with_defaults(3, Weight::constant(PI).unwrap()).unwrap();
        let f = IFunctional::new(1.0).unwrap();
        let res = sweep(&ctx, &f, &[4, 6, 8, 11, 16]).unwrap();
        assert_eq!(res.rows.len(), 5);
        assert!(res.failure.is_none() && !res.hypothesis_unmet());
        assert!((res.slope.unwrap() - 2.0).abs() < 0.3);
        let csv = res.to_csv();
        assert!(csv.starts_with("l,value,normalized\n4,"));
        assert!(csv.trim_end().ends_with("window=[8,16]"));
        assert!(sweep(&ctx, &f, &[]).is_err());
        assert!(sweep(&ctx, &f, &[4, 4]).is_err());
    }

    #[test]
    fn unmet_hypothesis_still_computes() {
        let w = Weight::from_spec(&WeightSpec::power(1.0, 2.0).with_markers(0.05, 0.1)).unwrap();
        let ctx = CapAverageContext::with_defaults(3, w).unwrap();
        let res = sweep(&ctx, &JFunctional::new(1).unwrap(), &[4, 8]).unwrap();
        assert!(res.hypothesis_unmet());
        assert!(res.rows.iter().all(|r| r.value > 0.0));
    }
}
