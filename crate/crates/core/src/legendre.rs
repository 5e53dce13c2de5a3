//! Legendre polynomials of the sphere `S^{d-1}`.
//!
//! `P_{l,d}` is the Gegenbauer polynomial `C_l^{(d-2)/2}` rescaled so that
//! `P_{l,d}(1) = 1`; for `d = 2` it is the Chebyshev polynomial `cos(l arccos s)`.
//! Values come from the three-term recurrence
//!
//! ```text
//! (l + d - 2) P_{l+1}(s) = (2l + d - 2) s P_l(s) - l P_{l-1}(s)
//! ```
//!
//! and derivatives from the shift `P^{(k)}_{l,d} = P^{(k)}_{l,d}(1) P_{l-k,d+2k}`.

use crate::error::{domain, Result};

/// Number of tail terms kept past the truncation order when summing the
/// Taylor remainder near `s = 1`.
pub(crate) const TAIL_TERMS: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UltrasphericalBasis {
    d: usize,
    lmax: usize,
}

impl UltrasphericalBasis {
    pub fn new(d: usize, lmax: usize) -> Result<Self> {
        check_dim(d)?;
        Ok(Self { d, lmax })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn lmax(&self) -> usize {
        self.lmax
    }

    /// `[P_{0,d}(s), ..., P_{lmax,d}(s)]`.
    pub fn values(&self, s: f64) -> Result<Vec<f64>> {
        check_arg(s)?;
        let mut out = Vec::with_capacity(self.lmax + 1);
        out.push(1.0);
        if self.lmax == 0 {
            return Ok(out);
        }
        out.push(s);
        let d = self.d as f64;
        for l in 1..self.lmax {
            let lf = l as f64;
            let next = ((2.0 * lf + d - 2.0) * s * out[l] - lf * out[l - 1]) / (lf + d - 2.0);
            out.push(next);
        }
        Ok(out)
    }
}

fn check_dim(d: usize) -> Result<()> {
    if d < 2 {
        return Err(domain(format!("ambient dimension d = {d} must be at least 2")));
    }
    Ok(())
}

fn check_arg(s: f64) -> Result<()> {
    if !(-1.0..=1.0).contains(&s) {
        return Err(domain(format!("argument s = {s} outside [-1, 1]")));
    }
    Ok(())
}

/// Recurrence evaluation without argument checks. Callers guarantee
/// `d >= 2` and `|s| <= 1`.
#[inline]
pub(crate) fn p_unchecked(d: usize, l: usize, s: f64) -> f64 {
    match l {
        0 => 1.0,
        1 => s,
        _ if d == 2 => (l as f64 * s.clamp(-1.0, 1.0).acos()).cos(),
        _ if s > 0.0 => {
            // Difference form of the recurrence, D_l = P_l - P_{l-1}:
            // (l + d - 2) D_{l+1} = l D_l - (2l + d - 2)(1 - s) P_l.
            // Rounding errors scale with 1 - s instead of with P itself.
            let d = d as f64;
            let h = 1.0 - s;
            let (mut p, mut diff) = (s, -h);
            for j in 1..l {
                let jf = j as f64;
                diff = (jf * diff - (2.0 * jf + d - 2.0) * h * p) / (jf + d - 2.0);
                p += diff;
            }
            p
        }
        _ => {
            let d = d as f64;
            let (mut prev, mut cur) = (1.0, s);
            for j in 1..l {
                let jf = j as f64;
                let next = ((2.0 * jf + d - 2.0) * s * cur - jf * prev) / (jf + d - 2.0);
                prev = cur;
                cur = next;
            }
            cur
        }
    }
}

/// `P_{l,d}(1 - h) - 1` for `h` in `[0, 2]`, accurate relative to its own
/// size when `h` is small.
pub(crate) fn p_minus_one(d: usize, l: usize, h: f64) -> f64 {
    if l == 0 {
        return 0.0;
    }
    if h > 1.0 {
        return p_unchecked(d, l, 1.0 - h) - 1.0;
    }
    if d == 2 {
        let half = (0.5 * h).sqrt().asin();
        let v = (l as f64 * half).sin();
        return -2.0 * v * v;
    }
    let df = d as f64;
    let (mut q, mut diff) = (-h, -h);
    for j in 1..l {
        let jf = j as f64;
        diff = (jf * diff - (2.0 * jf + df - 2.0) * h * (1.0 + q)) / (jf + df - 2.0);
        q += diff;
    }
    q
}

/// `P_{l,d}(s)`.
pub fn eval_p(d: usize, l: usize, s: f64) -> Result<f64> {
    check_dim(d)?;
    check_arg(s)?;
    Ok(p_unchecked(d, l, s))
}

/// The `k`-th derivative `P^{(k)}_{l,d}(s)`.
pub fn eval_p_deriv(d: usize, l: usize, k: usize, s: f64) -> Result<f64> {
    check_dim(d)?;
    check_arg(s)?;
    Ok(p_deriv_unchecked(d, l, k, s))
}

pub(crate) fn p_deriv_unchecked(d: usize, l: usize, k: usize, s: f64) -> f64 {
    if k == 0 {
        return p_unchecked(d, l, s);
    }
    if k > l {
        return 0.0;
    }
    p_deriv_at_one_unchecked(d, l, k) * p_unchecked(d + 2 * k, l - k, s)
}

/// Closed form of `P^{(k)}_{l,d}(1)`:
/// `prod_{j<k} (l - j)(l + d - 2 + j) / (2j + d - 1)`.
pub fn p_deriv_at_one(d: usize, l: usize, k: usize) -> Result<f64> {
    check_dim(d)?;
    Ok(p_deriv_at_one_unchecked(d, l, k))
}

fn p_deriv_at_one_unchecked(d: usize, l: usize, k: usize) -> f64 {
    if k > l {
        return 0.0;
    }
    (0..k).fold(1.0, |acc, j| {
        acc * ((l - j) as f64) * ((l + d - 2 + j) as f64) / ((2 * j + d - 1) as f64)
    })
}

/// Taylor coefficient of `P_{l,d}` at `s = 1` in powers of `(1 - s)`:
/// `c_{k,l} = (-1)^k P^{(k)}_{l,d}(1) / k!`.
pub fn taylor_coeff(d: usize, k: usize, l: usize) -> Result<f64> {
    check_dim(d)?;
    Ok(taylor_coeff_unchecked(d, k, l))
}

fn taylor_coeff_unchecked(d: usize, k: usize, l: usize) -> f64 {
    if k > l {
        return 0.0;
    }
    (0..k).fold(1.0, |acc, j| {
        -acc * ((l - j) as f64) * ((l + d - 2 + j) as f64) / (((j + 1) * (2 * j + d - 1)) as f64)
    })
}

/// Table of `c_{k,l}` for `k <= kmax`, `l <= lmax`.
#[derive(Debug, Clone, PartialEq)]
pub struct TaylorCoeffs {
    d: usize,
    kmax: usize,
    lmax: usize,
    // c[l][k]
    c: Vec<Vec<f64>>,
}

impl TaylorCoeffs {
    pub fn new(d: usize, kmax: usize, lmax: usize) -> Result<Self> {
        check_dim(d)?;
        let c = (0..=lmax).map(|l| taylor_row(d, l, kmax)).collect();
        Ok(Self { d, kmax, lmax, c })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn kmax(&self) -> usize {
        self.kmax
    }

    pub fn lmax(&self) -> usize {
        self.lmax
    }

    pub fn get(&self, k: usize, l: usize) -> Option<f64> {
        self.c.get(l).and_then(|row| row.get(k)).copied()
    }

    /// `[c_{0,l}, ..., c_{kmax,l}]`.
    pub fn row(&self, l: usize) -> &[f64] {
        &self.c[l]
    }
}

/// `[c_{0,l}, ..., c_{kmax,l}]` built by the ratio of consecutive terms.
pub(crate) fn taylor_row(d: usize, l: usize, kmax: usize) -> Vec<f64> {
    let mut row = Vec::with_capacity(kmax + 1);
    let mut c = 1.0;
    row.push(c);
    for j in 0..kmax {
        c = if j >= l {
            0.0
        } else {
            -c * ((l - j) as f64) * ((l + d - 2 + j) as f64) / (((j + 1) * (2 * j + d - 1)) as f64)
        };
        row.push(c);
    }
    row
}

/// Neumaier-compensated accumulator.
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    #[inline]
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub(crate) fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// Remainder `R_{n+1}(s) = P_{l,d}(s) - sum_{k<=n} c_{k,l} (1-s)^k`.
///
/// Near `s = 1` (`(1-s) l^2 <= 1`) the value is the tail sum
/// `sum_{k=n+1}^{min(l, n+40)} c_{k,l} (1-s)^k`; elsewhere it is the
/// direct difference.
pub fn taylor_remainder(d: usize, l: usize, n: usize, s: f64) -> Result<f64> {
    check_dim(d)?;
    check_arg(s)?;
    if n >= l || s == 1.0 {
        return Ok(0.0);
    }
    let row = taylor_row(d, l, (n + TAIL_TERMS).min(l));
    Ok(remainder_with_row(d, l, n, s, &row))
}

/// Same as [`taylor_remainder`] with a precomputed row of `c_{k,l}` that
/// extends at least to `min(l, n + 40)`.
#[inline]
pub(crate) fn remainder_with_row(d: usize, l: usize, n: usize, s: f64, row: &[f64]) -> f64 {
    if n >= l {
        return 0.0;
    }
    let h = 1.0 - s;
    if h * (l * l) as f64 <= 1.0 {
        tail_sum(n, l, h, row)
    } else {
        direct_difference(d, l, n, s, row)
    }
}

/// [`remainder_with_row`] with `h = 1 - s` supplied directly, so small
/// angles keep full relative precision in `h`.
#[inline]
pub(crate) fn remainder_with_row_h(d: usize, l: usize, n: usize, h: f64, row: &[f64]) -> f64 {
    if n >= l {
        return 0.0;
    }
    if h * (l * l) as f64 <= 1.0 {
        tail_sum(n, l, h, row)
    } else {
        direct_difference(d, l, n, 1.0 - h, row)
    }
}

/// Tail-sum route of the remainder; accurate when `(1-s) l^2` is small.
pub fn taylor_remainder_tail(d: usize, l: usize, n: usize, s: f64) -> Result<f64> {
    check_dim(d)?;
    check_arg(s)?;
    if n >= l {
        return Ok(0.0);
    }
    let row = taylor_row(d, l, (n + TAIL_TERMS).min(l));
    Ok(tail_sum(n, l, 1.0 - s, &row))
}

/// Direct-difference route of the remainder.
pub fn taylor_remainder_direct(d: usize, l: usize, n: usize, s: f64) -> Result<f64> {
    check_dim(d)?;
    check_arg(s)?;
    if n >= l {
        return Ok(0.0);
    }
    let row = taylor_row(d, l, n);
    Ok(direct_difference(d, l, n, s, &row))
}

fn tail_sum(n: usize, l: usize, h: f64, row: &[f64]) -> f64 {
    let top = (n + TAIL_TERMS).min(l).min(row.len() - 1);
    let mut acc = CompensatedSum::default();
    let mut hk = h.powi(n as i32 + 1);
    for &c in &row[n + 1..=top] {
        acc.add(c * hk);
        hk *= h;
    }
    acc.value()
}

fn direct_difference(d: usize, l: usize, n: usize, s: f64, row: &[f64]) -> f64 {
    let h = 1.0 - s;
    let mut acc = CompensatedSum::default();
    acc.add(p_unchecked(d, l, s));
    let mut hk = 1.0;
    for &c in &row[..=n] {
        acc.add(-c * hk);
        hk *= h;
    }
    acc.value()
}

/// Largest value of `|P_{l,d}(cos θ)| sin^{d-2} θ / (θ^{(d-2)/2} l^{(2-d)/2})`
/// over `samples` equispaced angles in `[2/l, π/4)`.
pub fn sharp_bound_ratio(d: usize, l: usize, samples: usize) -> Result<f64> {
    check_dim(d)?;
    let lo = 2.0 / l as f64;
    let hi = std::f64::consts::FRAC_PI_4;
    if l < 3 || lo >= hi {
        return Err(domain(format!("degree l = {l} leaves no window [2/l, pi/4)")));
    }
    let half = (d as f64 - 2.0) / 2.0;
    let scale = (l as f64).powf(-half);
    let mut worst: f64 = 0.0;
    for i in 0..samples {
        let theta = lo + (hi - lo) * i as f64 / samples as f64;
        let lhs = p_unchecked(d, l, theta.cos()).abs() * theta.sin().powi(d as i32 - 2);
        worst = worst.max(lhs / (theta.powf(half) * scale));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Finite explicit sum for `P_{l,d}`, kept independent of the recurrence.
    fn explicit_sum(d: usize, l: usize, s: f64) -> f64 {
        let half = (d as f64 - 1.0) / 2.0;
        let mut total = 0.0;
        let mut lfact = 1.0;
        for j in 1..=l {
            lfact *= j as f64;
        }
        for k in 0..=l / 2 {
            let mut denom = 4f64.powi(k as i32);
            for j in 1..=k {
                denom *= j as f64;
            }
            for j in 1..=(l - 2 * k) {
                denom *= j as f64;
            }
            // Γ(k + (d-1)/2) / Γ((d-1)/2)
            for j in 0..k {
                denom *= j as f64 + half;
            }
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            total += sign * (1.0 - s * s).powi(k as i32) * s.powi((l - 2 * k) as i32) / denom;
        }
        lfact * total
    }

    #[test]
    fn spot_values() {
        assert_eq!(eval_p(3, 7, 1.0).unwrap(), 1.0);
        assert_eq!(eval_p(5, 1, 0.3).unwrap(), 0.3);
        assert!((eval_p(3, 2, 0.0).unwrap() + 0.5).abs() < 1e-15);
        assert!((eval_p_deriv(3, 2, 1, 1.0).unwrap() - 3.0).abs() < 1e-14);
        assert_eq!(eval_p_deriv(4, 3, 5, 0.2).unwrap(), 0.0);
        assert!(eval_p_deriv(3, 2, 1, 0.0).unwrap().abs() < 1e-15);
        assert_eq!(p_deriv_at_one(3, 2, 1).unwrap(), 3.0);
        assert_eq!(p_deriv_at_one(6, 9, 0).unwrap(), 1.0);
        assert_eq!(p_deriv_at_one(3, 2, 3).unwrap(), 0.0);
        assert_eq!(taylor_coeff(4, 0, 9).unwrap(), 1.0);
        assert_eq!(taylor_coeff(3, 1, 2).unwrap(), -3.0);
        assert_eq!(taylor_coeff(3, 4, 2).unwrap(), 0.0);
    }

    #[test]
    fn domain_errors() {
        assert!(eval_p(3, 2, 1.5).is_err());
        assert!(eval_p(3, 2, f64::NAN).is_err());
        assert!(eval_p(1, 2, 0.0).is_err());
        assert!(eval_p_deriv(3, 2, 1, -1.0001).is_err());
        assert!(taylor_remainder(3, 4, 1, 2.0).is_err());
    }

    #[test]
    fn recurrence_matches_explicit_sum() {
        for d in 2..=6 {
            for l in 0..=10 {
                for i in 0..=40 {
                    let s = -1.0 + i as f64 / 20.0;
                    let a = eval_p(d, l, s).unwrap();
                    let b = explicit_sum(d, l, s);
                    assert!(
                        (a - b).abs() <= 1e-12 * b.abs().max(1e-3),
                        "d={d} l={l} s={s}: {a} vs {b}"
                    );
                }
            }
        }
    }

    #[test]
    fn unit_value_at_one() {
        for d in 2..=8 {
            let vals = UltrasphericalBasis::new(d, 400).unwrap().values(1.0).unwrap();
            assert!(vals.iter().all(|v| (v - 1.0).abs() <= 1e-14));
        }
    }

    #[test]
    fn derivative_bounded_by_endpoint_value() {
        for d in 2..=5 {
            for l in [1, 2, 5, 12, 40] {
                for k in 0..=4 {
                    let bound = p_deriv_at_one(d, l, k).unwrap();
                    for i in 0..=200 {
                        let s = -1.0 + i as f64 / 100.0;
                        let v = eval_p_deriv(d, l, k, s).unwrap();
                        assert!(v.abs() <= bound * (1.0 + 1e-12) + 1e-300, "d={d} l={l} k={k} s={s}");
                    }
                }
            }
        }
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let h = 1e-5;
        for d in [2, 3, 4] {
            for l in [3, 6] {
                let s = 0.37;
                let fd = (eval_p(d, l, s + h).unwrap() - eval_p(d, l, s - h).unwrap()) / (2.0 * h);
                let an = eval_p_deriv(d, l, 1, s).unwrap();
                assert!((fd - an).abs() < 1e-7 * an.abs().max(1.0), "d={d} l={l}");
            }
        }
    }

    #[test]
    fn p_minus_one_is_accurate_near_one() {
        for d in 2..6 {
            for l in [1, 2, 7, 40] {
                for h in [1e-9, 1e-4, 0.3, 1.5] {
                    let got = p_minus_one(d, l, h);
                    // leading Taylor term for tiny h, direct value elsewhere
                    let want = if h < 1e-8 {
                        taylor_coeff(d, 1, l).unwrap() * h
                    } else if l <= 10 {
                        explicit_sum(d, l, 1.0 - h) - 1.0
                    } else {
                        p_unchecked(d, l, 1.0 - h) - 1.0
                    };
                    let tol = if h < 1e-8 { 1e-5 } else { 1e-10 };
                    assert!((got - want).abs() <= tol * want.abs().max(1e-300), "d={d} l={l} h={h}");
                }
            }
        }
    }

    #[test]
    fn taylor_table_invariants() {
        let table = TaylorCoeffs::new(4, 6, 30).unwrap();
        for l in 0..=30 {
            assert_eq!(table.get(0, l), Some(1.0));
            for k in 1..=6 {
                let c = table.get(k, l).unwrap();
                if k > l {
                    assert_eq!(c, 0.0);
                } else {
                    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                    assert!(c * sign > 0.0);
                    assert!((c - taylor_coeff(4, k, l).unwrap()).abs() <= 1e-12 * c.abs());
                }
            }
        }
    }

    #[test]
    fn remainder_examples() {
        assert_eq!(taylor_remainder(3, 9, 2, 1.0).unwrap(), 0.0);
        assert_eq!(taylor_remainder(3, 2, 2, 0.3).unwrap(), 0.0);
        assert!((taylor_remainder(3, 2, 0, 0.0).unwrap() + 1.5).abs() < 1e-15);
    }

    #[test]
    fn remainder_routes_agree_on_overlap() {
        for d in [3, 4, 5] {
            for l in [4, 8, 32, 128] {
                for n in 0..3usize.min(l) {
                    for x in [0.25, 0.5, 0.75, 1.0] {
                        let s = 1.0 - x / (l * l) as f64;
                        let a = taylor_remainder_tail(d, l, n, s).unwrap();
                        let b = taylor_remainder_direct(d, l, n, s).unwrap();
                        assert!(
                            (a - b).abs() <= 1e-10 * a.abs(),
                            "d={d} l={l} n={n} x={x}: {a} vs {b}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn sharp_bound_diagnostic_is_stable() {
        for d in [3, 4, 5] {
            let ratios: Vec<f64> = [8, 16, 32, 64, 128, 256]
                .iter()
                .map(|&l| sharp_bound_ratio(d, l, 2000).unwrap())
                .collect();
            let max = ratios.iter().cloned().fold(0.0, f64::max);
            let min = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
            assert!(max.is_finite());
            assert!(max / min < 4.0, "d={d}: {ratios:?}");
        }
    }
}
