//! Coefficient-space Sobolev norms, the operators `T_k`, the Poisson
//! transform, and norm-equivalence reports.
//!
//! Every norm here is returned squared.

use serde::{Deserialize, Serialize};

use crate::caps::{sphere_area, CapAverageContext};
use crate::coeffs::HarmonicCoeffs;
use crate::error::{domain, Error, Result};
use crate::legendre::taylor_coeff;
use crate::remainders::functional_for_alpha;

/// Eigenvalue `l(l+d-2)` of `-Δ` on degree-`l` harmonics.
pub fn laplace_eigenvalue(d: usize, l: usize) -> f64 {
    (l * (l + d - 2)) as f64
}

/// `(-Δ)^β f`; `β = 0` is the identity.
pub fn laplace_power(coeffs: &HarmonicCoeffs, beta: f64) -> Result<HarmonicCoeffs> {
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(domain(format!("exponent {beta} must be nonnegative")));
    }
    let d = coeffs.dim();
    Ok(coeffs.map_degrees(|l| {
        if beta == 0.0 {
            1.0
        } else {
            laplace_eigenvalue(d, l).powf(beta)
        }
    }))
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(domain(format!("alpha = {alpha} must be nonnegative")));
    }
    Ok(())
}

/// `Σ_l {l(l+d-2)}^α Σ_j |f̂_{lj}|²`, the squared homogeneous norm.
pub fn sobolev_norm(coeffs: &HarmonicCoeffs, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let d = coeffs.dim();
    Ok((0..=coeffs.band())
        .map(|l| {
            let w = if alpha == 0.0 { 1.0 } else { laplace_eigenvalue(d, l).powf(alpha) };
            w * coeffs.degree_energy(l)
        })
        .sum())
}

/// `Σ_l (1 + √(l(l+d-2)))^{2α} Σ_j |f̂_{lj}|²`, the squared `H^α` norm.
pub fn halpha_norm(coeffs: &HarmonicCoeffs, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let d = coeffs.dim();
    Ok((0..=coeffs.band())
        .map(|l| (1.0 + laplace_eigenvalue(d, l).sqrt()).powf(2.0 * alpha) * coeffs.degree_energy(l))
        .sum())
}

/// Scale of `T_k` on degree `l >= 1`: `c_{k,l} / (2^k {l(l+d-2)}^k)`.
pub fn tk_scale(d: usize, k: usize, l: usize) -> Result<f64> {
    if k == 0 {
        return Err(domain("T_k needs k >= 1"));
    }
    if l == 0 {
        return Ok(0.0);
    }
    let c = taylor_coeff(d, k, l)?;
    Ok(c / (2f64.powi(k as i32) * laplace_eigenvalue(d, l).powi(k as i32)))
}

/// `T_k f`; the degree-0 block is dropped.
pub fn tk_apply(coeffs: &HarmonicCoeffs, k: usize) -> Result<HarmonicCoeffs> {
    let d = coeffs.dim();
    coeffs.try_map_degrees(|l| tk_scale(d, k, l))
}

/// `T_k^{-1} f` on degrees `l >= 1`; the degree-0 block is dropped.
///
/// `T_k` vanishes on degrees `l < k` (there `c_{k,l} = 0`), so nonzero
/// input on those degrees is rejected.
pub fn tk_inverse(coeffs: &HarmonicCoeffs, k: usize) -> Result<HarmonicCoeffs> {
    let d = coeffs.dim();
    coeffs.try_map_degrees(|l| {
        if l == 0 {
            return Ok(0.0);
        }
        let s = tk_scale(d, k, l)?;
        if s == 0.0 && coeffs.degree_energy(l) == 0.0 {
            return Ok(0.0);
        }
        if s == 0.0 || !s.is_normal() || !(1.0 / s).is_finite() {
            return Err(Error::Numeric {
                message: format!("T_{k} scale at degree {l} is not invertible"),
                estimate: s,
                change: 0.0,
            });
        }
        Ok(1.0 / s)
    })
}

/// `g_k = T_k((-Δ)^k f)`: degree `l` scaled by `c_{k,l} / 2^k`.
pub fn canonical_g(coeffs: &HarmonicCoeffs, k: usize) -> Result<HarmonicCoeffs> {
    tk_apply(&laplace_power(coeffs, k as f64)?, k)
}

/// `[g_1, ..., g_n]` for the branch of `α`.
pub fn canonical_gs(coeffs: &HarmonicCoeffs, alpha: f64) -> Result<Vec<HarmonicCoeffs>> {
    let n = functional_for_alpha(alpha)?.order();
    (1..=n).map(|k| canonical_g(coeffs, k)).collect()
}

/// `P_r f`: degree `l` scaled by `r^l`.
pub fn poisson(coeffs: &HarmonicCoeffs, r: f64) -> Result<HarmonicCoeffs> {
    if !(r > 0.0 && r < 1.0) {
        return Err(domain(format!("Poisson parameter r = {r} outside (0, 1)")));
    }
    Ok(coeffs.map_degrees(|l| r.powi(l as i32)))
}

/// Poisson kernel `(1-r²) / (|S^{d-1}| |rξ-η|^d)` with `ξ·η = cos_angle`.
pub fn poisson_kernel(d: usize, r: f64, cos_angle: f64) -> f64 {
    let dist_sq = 1.0 - 2.0 * r * cos_angle + r * r;
    (1.0 - r * r) / (sphere_area(d - 1) * dist_sq.powf(d as f64 / 2.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branch {
    /// `2n < α < 2n+2`, functional `I_{α,n}`.
    Fractional,
    /// `α = 2n`, functional `J_n`.
    IntegerEven,
}

/// Per-degree weights `W(l)` of the square-function norm for one `α`.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeWeights {
    pub alpha: f64,
    pub branch: Branch,
    /// Degrees below this get weight 0.
    pub first_visible: usize,
    /// `values[l]`, with `values[0] = 0`.
    pub values: Vec<f64>,
    pub warnings: Vec<String>,
}

impl DegreeWeights {
    pub fn new(ctx: &CapAverageContext, alpha: f64, lmax: usize) -> Result<Self> {
        let functional = functional_for_alpha(alpha)?;
        let branch = if functional.name() == "J" {
            Branch::IntegerEven
        } else {
            Branch::Fractional
        };
        let first_visible = first_visible_degree(branch, functional.order());
        let mut values = vec![0.0; first_visible.min(lmax + 1)];
        for l in first_visible..=lmax {
            values.push(functional.eval(ctx, l)?);
        }
        Ok(Self {
            alpha,
            branch,
            first_visible,
            values,
            warnings: functional.hypothesis_issue(ctx).into_iter().collect(),
        })
    }

    /// `Σ_{l>=1} W(l) Σ_j |f̂_{lj}|²`.
    pub fn apply(&self, coeffs: &HarmonicCoeffs) -> Result<f64> {
        let top = coeffs.max_degree_present().unwrap_or(0);
        if top >= self.values.len() {
            return Err(Error::Shape(format!(
                "weights cover degrees up to {}, input reaches {top}",
                self.values.len() - 1
            )));
        }
        Ok((1..=top).map(|l| self.values[l] * coeffs.degree_energy(l)).sum())
    }
}

/// Lowest degree the square function sees. Below it `P_l` is its own
/// Taylor polynomial of the order in use and the functional vanishes.
fn first_visible_degree(branch: Branch, order: usize) -> usize {
    match branch {
        Branch::IntegerEven => order.max(1),
        Branch::Fractional => order + 1,
    }
}

fn blind_warning(coeffs: &HarmonicCoeffs, first_seen: usize, alpha: f64) -> Option<String> {
    let blind: Vec<usize> = (1..first_seen.min(coeffs.band() + 1))
        .filter(|&l| coeffs.degree_energy(l) > 0.0)
        .collect();
    (!blind.is_empty()).then(|| {
        format!("degrees {blind:?} carry energy but are invisible to the square function at alpha = {alpha}")
    })
}

/// Squared square-function norm with any warnings raised on the way.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareNorm {
    pub value: f64,
    pub branch: Branch,
    pub warnings: Vec<String>,
}

/// `Σ_{l>=1} W(l) Σ_j |f̂_{lj}|²` with `W = I_{α,n}` or `J_n`.
pub fn sqnorm_coeff(coeffs: &HarmonicCoeffs, alpha: f64, ctx: &CapAverageContext) -> Result<SquareNorm> {
    if coeffs.dim() != ctx.dim() {
        return Err(Error::DimensionMismatch {
            expected: ctx.dim(),
            found: coeffs.dim(),
        });
    }
    let functional = functional_for_alpha(alpha)?;
    let branch = if functional.name() == "J" {
        Branch::IntegerEven
    } else {
        Branch::Fractional
    };
    let first_seen = first_visible_degree(branch, functional.order());
    let mut warnings: Vec<String> = functional.hypothesis_issue(ctx).into_iter().collect();
    warnings.extend(blind_warning(coeffs, first_seen, alpha));
    let mut value = 0.0;
    for l in first_seen.max(1)..=coeffs.band() {
        let e = coeffs.degree_energy(l);
        if e > 0.0 {
            value += functional.eval(ctx, l)? * e;
        }
    }
    Ok(SquareNorm { value, branch, warnings })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub alpha: f64,
    /// `‖(-Δ)^{α/2} f‖²`.
    pub lhs: f64,
    /// Squared square-function norm.
    pub rhs: f64,
    /// `lhs / rhs`, absent when `rhs` vanishes.
    pub ratio: Option<f64>,
    pub branch: Branch,
    pub warnings: Vec<String>,
}

impl NormReport {
    fn build(alpha: f64, lhs: f64, rhs: SquareNorm) -> Self {
        Self {
            alpha,
            lhs,
            rhs: rhs.value,
            ratio: (rhs.value > 0.0).then(|| lhs / rhs.value),
            branch: rhs.branch,
            warnings: rhs.warnings,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Compares `sobolev_norm(f, α)` with `sqnorm_coeff(f, α)`.
pub fn equivalence_report(coeffs: &HarmonicCoeffs, alpha: f64, ctx: &CapAverageContext) -> Result<NormReport> {
    if !(alpha > 0.0) {
        return Err(domain(format!("alpha = {alpha} must be positive")));
    }
    let rhs = sqnorm_coeff(coeffs, alpha, ctx)?;
    Ok(NormReport::build(alpha, sobolev_norm(coeffs, alpha)?, rhs))
}

/// [`equivalence_report`] with precomputed degree weights.
pub fn equivalence_report_with(coeffs: &HarmonicCoeffs, weights: &DegreeWeights) -> Result<NormReport> {
    let mut warnings = weights.warnings.clone();
    warnings.extend(blind_warning(coeffs, weights.first_visible, weights.alpha));
    let rhs = SquareNorm {
        value: weights.apply(coeffs)?,
        branch: weights.branch,
        warnings,
    };
    Ok(NormReport::build(weights.alpha, sobolev_norm(coeffs, weights.alpha)?, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::harmonic_dim;
    use crate::remainders::i_integral;
    use crate::weights::Weight;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn y1() -> HarmonicCoeffs {
        HarmonicCoeffs::single_degree(3, 3, 1, vec![0.0, 1.0, 0.0]).unwrap()
    }

    fn uniform() -> CapAverageContext {
        CapAverageContext::with_defaults(3, Weight::constant(PI).unwrap()).unwrap()
    }

    #[test]
    fn laplace_examples() {
        let f = y1();
        assert_eq!(laplace_power(&f, 0.0).unwrap(), f);
        assert_eq!(laplace_power(&f, 1.0).unwrap().block(1)[1], 2.0);
        let mut c = HarmonicCoeffs::zeros(3, 2);
        c.block_mut(0)[0] = 5.0;
        assert_eq!(laplace_power(&c, 0.5).unwrap().norm_sq(), 0.0);
        assert!(laplace_power(&c, -1.0).is_err());
    }

    #[test]
    fn norm_examples() {
        let f = y1();
        assert_eq!(sobolev_norm(&f, 2.0).unwrap(), 4.0);
        let mut g = HarmonicCoeffs::zeros(3, 3);
        g.block_mut(0)[0] = 2.0;
        g.block_mut(2)[3] = 1.0;
        assert_eq!(sobolev_norm(&g, 0.0).unwrap(), 5.0);
        assert_eq!(halpha_norm(&g, 0.0).unwrap(), 5.0);
        g.block_mut(2)[3] = 0.0;
        assert_eq!(sobolev_norm(&g, 1.5).unwrap(), 0.0);
        assert_eq!(halpha_norm(&g, 1.5).unwrap(), 4.0);
    }

    #[test]
    fn tk_examples() {
        for l in 1..40 {
            assert!((tk_scale(3, 1, l).unwrap() + 0.25).abs() < 1e-15);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let blocks = (0..=6)
            .map(|l| (0..harmonic_dim(4, l)).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let f = HarmonicCoeffs::from_blocks(4, blocks).unwrap();
        for k in 1..4 {
            let back = tk_inverse(&tk_apply(&f, k).unwrap(), k).unwrap();
            for l in k..=6 {
                for (a, b) in back.block(l).iter().zip(f.block(l)) {
                    assert!((a - b).abs() < 1e-13);
                }
            }
            assert!(back.block(0).iter().all(|&x| x == 0.0));
        }
        assert!(tk_apply(&f, 0).is_err());
        // degree 1 is outside the range of T_2
        assert!(matches!(tk_inverse(&f, 2), Err(Error::Numeric { .. })));
    }

    #[test]
    fn tk_scales_are_bracketed() {
        for d in [3, 4, 5] {
            for k in 1..4 {
                let s: Vec<f64> = (k..=512).map(|l| tk_scale(d, k, l).unwrap().abs()).collect();
                let max = s.iter().cloned().fold(0.0, f64::max);
                let min = s.iter().cloned().fold(f64::INFINITY, f64::min);
                assert!(min > 0.0 && max / min < 10.0, "d={d} k={k}");
            }
        }
    }

    #[test]
    fn canonical_g_scaling() {
        let f = HarmonicCoeffs::single_degree(3, 5, 4, vec![1.0; 9]).unwrap();
        for k in 1..=6 {
            let g = canonical_g(&f, k).unwrap();
            let want = taylor_coeff(3, k, 4).unwrap() / 2f64.powi(k as i32);
            assert!(g.block(4).iter().all(|x| (x - want).abs() < 1e-12 * want.abs().max(1.0)));
        }
        let mut c = HarmonicCoeffs::zeros(3, 2);
        c.block_mut(0)[0] = 1.0;
        assert_eq!(canonical_g(&c, 1).unwrap().norm_sq(), 0.0);
        assert_eq!(canonical_gs(&c, 2.5).unwrap().len(), 1);
        assert_eq!(canonical_gs(&c, 4.0).unwrap().len(), 2);
    }

    #[test]
    fn poisson_examples() {
        let f = HarmonicCoeffs::single_degree(3, 4, 3, vec![1.0; 7]).unwrap();
        let p = poisson(&f, 0.5).unwrap();
        assert!(p.block(3).iter().all(|&x| x == 0.125));
        assert!(poisson(&f, 1.0).is_err());
        // kernel integrates to 1 over S²
        let rule = crate::quadrature::GaussLegendre::new(200);
        let total = 2.0 * PI * rule.integrate(-1.0, 1.0, |c| poisson_kernel(3, 0.7, c));
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_degree_report() {
        let ctx = uniform();
        let rep = equivalence_report(&y1(), 1.0, &ctx).unwrap();
        let i = i_integral(&ctx, 1.0, 0, 1).unwrap();
        assert!((rep.ratio.unwrap() - 2.0 / i).abs() < 1e-12);
        assert_eq!(rep.branch, Branch::Fractional);
        let mut c = HarmonicCoeffs::zeros(3, 2);
        c.block_mut(0)[0] = 1.0;
        let rep = equivalence_report(&c, 1.0, &ctx).unwrap();
        assert_eq!((rep.lhs, rep.rhs, rep.ratio), (0.0, 0.0, None));
        let json = rep.to_json().unwrap();
        assert!(json.contains("\"branch\": \"fractional\""));
    }

    #[test]
    fn ratio_ignores_block_contents() {
        let ctx = uniform();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut ratios = Vec::new();
        for _ in 0..5 {
            let block = (0..9).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let f = HarmonicCoeffs::single_degree(3, 4, 4, block).unwrap();
            ratios.push(equivalence_report(&f, 1.5, &ctx).unwrap().ratio.unwrap());
        }
        assert!(ratios.iter().all(|r| (r / ratios[0] - 1.0).abs() < 1e-12));
    }

    #[test]
    fn even_branch_warns_without_fine_condition() {
        let spec = crate::weights::WeightSpec::power(1.0, 2.0).with_markers(0.05, 0.1);
        let ctx = CapAverageContext::with_defaults(3, Weight::from_spec(&spec).unwrap()).unwrap();
        let f = HarmonicCoeffs::single_degree(3, 3, 2, vec![1.0; 5]).unwrap();
        let s = sqnorm_coeff(&f, 2.0, &ctx).unwrap();
        assert_eq!(s.branch, Branch::IntegerEven);
        assert!(s.value > 0.0 && !s.warnings.is_empty());
    }

    #[test]
    fn low_degrees_are_invisible_above_order_zero() {
        let ctx = uniform();
        // P_1 is linear, so the n = 1 Taylor correction reproduces it exactly
        assert!(i_integral(&ctx, 2.5, 1, 1).unwrap().abs() < 1e-20);
        let r = equivalence_report(&y1(), 2.5, &ctx).unwrap();
        assert_eq!(r.rhs, 0.0);
        assert!(r.lhs > 0.0 && r.ratio.is_none());
        assert!(r.warnings.iter().any(|w| w.contains("invisible")));
        let w = DegreeWeights::new(&ctx, 2.5, 3).unwrap();
        assert_eq!(w.first_visible, 2);
        assert_eq!(equivalence_report_with(&y1(), &w).unwrap().ratio, None);
        assert!(equivalence_report(&y1(), 1.0, &ctx).unwrap().warnings.is_empty());
    }

    #[test]
    fn decay_threshold_shows_in_partial_sums() {
        // |f̂_l|² = l^{-2β-1}: increments of Σ W(l)|f̂_l|² shrink iff β > α
        let ctx = uniform();
        let w = DegreeWeights::new(&ctx, 1.0, 48).unwrap();
        let incr = |beta: f64, l: usize| w.values[l] * (l as f64).powf(-2.0 * beta - 1.0);
        let tail = |beta: f64, a: usize, b: usize| (a..b).map(|l| incr(beta, l)).sum::<f64>();
        // dyadic blocks of the series shrink geometrically only when β > α
        assert!(tail(1.5, 24, 48) < 0.6 * tail(1.5, 12, 24));
        assert!(tail(0.75, 24, 48) > 1.0 * tail(0.75, 12, 24));
    }
}
