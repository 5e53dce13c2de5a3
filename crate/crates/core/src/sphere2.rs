//! Grid oracle on `S²`: real spherical-harmonic transforms, direct cap
//! quadrature, and the pointwise square function.
//!
//! Basis: `Y_{l,m}` for `m = -l..l` (block index `l + m`) with unit `L²`
//! norm under surface measure,
//!
//! ```text
//! Y_{l,0} = P̄_l^0(cos θ),  Y_{l,m} = √2 P̄_l^m(cos θ) cos mφ,  Y_{l,-m} = √2 P̄_l^m(cos θ) sin mφ,
//! ```
//!
//! where `2π ∫_{-1}^1 P̄_l^m(x)² dx = 1` (no Condon–Shortley phase).

use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::caps::{one_minus_cos, CapAverageContext};
use crate::coeffs::HarmonicCoeffs;
use crate::error::{domain, parameter, Error, Result};
use crate::legendre::{p_unchecked, taylor_row};
use crate::quadrature::{split_at, GaussLegendre};
use crate::remainders::{remainder_m, TRule};
use crate::weights::Weight;

pub type Vec3 = [f64; 3];

/// `P̄_l^m(x)` for `0 <= m <= l <= band`, triangular layout `l(l+1)/2 + m`.
/// `sin_theta` is passed separately to keep it exact near the poles.
fn assoc_legendre(band: usize, x: f64, sin_theta: f64) -> Vec<f64> {
    let mut p = vec![0.0; (band + 1) * (band + 2) / 2];
    let idx = |l: usize, m: usize| l * (l + 1) / 2 + m;
    let mut pmm = (0.25 / PI).sqrt();
    for m in 0..=band {
        if m > 0 {
            pmm *= ((2 * m + 1) as f64 / (2 * m) as f64).sqrt() * sin_theta;
        }
        p[idx(m, m)] = pmm;
        if m == band {
            break;
        }
        let mut prev = pmm;
        let mut cur = (2.0 * m as f64 + 3.0).sqrt() * x * pmm;
        p[idx(m + 1, m)] = cur;
        for l in m + 2..=band {
            let (lf, mf) = (l as f64, m as f64);
            let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
            let b = (((lf - 1.0).powi(2) - mf * mf) / (4.0 * (lf - 1.0).powi(2) - 1.0)).sqrt();
            let next = a * (x * cur - b * prev);
            prev = cur;
            cur = next;
            p[idx(l, m)] = cur;
        }
    }
    p
}

#[inline]
fn tri(l: usize, m: usize) -> usize {
    l * (l + 1) / 2 + m
}

fn check_d3(c: &HarmonicCoeffs) -> Result<()> {
    if c.dim() != 3 {
        return Err(Error::DimensionMismatch {
            expected: 3,
            found: c.dim(),
        });
    }
    Ok(())
}

fn normalize(v: Vec3) -> Result<Vec3> {
    let r = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    if !(r > 0.0 && r.is_finite()) {
        return Err(domain("center must be a nonzero finite vector"));
    }
    Ok([v[0] / r, v[1] / r, v[2] / r])
}

/// `(θ, φ)` to a unit vector.
pub fn unit_vector(theta: f64, phi: f64) -> Vec3 {
    let s = theta.sin();
    [s * phi.cos(), s * phi.sin(), theta.cos()]
}

/// Value of a band-limited `f` at the unit vector `x`. Degrees above the
/// highest nonzero block are skipped.
pub fn evaluate(coeffs: &HarmonicCoeffs, x: Vec3) -> Result<f64> {
    check_d3(coeffs)?;
    Ok(eval_unchecked(coeffs, coeffs.max_degree_present().unwrap_or(0), x))
}

fn eval_unchecked(coeffs: &HarmonicCoeffs, top: usize, x: Vec3) -> f64 {
    let rho = (x[0] * x[0] + x[1] * x[1]).sqrt();
    let (cos_phi, sin_phi) = if rho > 0.0 { (x[0] / rho, x[1] / rho) } else { (1.0, 0.0) };
    let z = x[2].clamp(-1.0, 1.0);
    let p = assoc_legendre(top, z, rho);
    let mut total = 0.0;
    // cos mφ, sin mφ by rotation
    let (mut cm, mut sm) = (1.0, 0.0);
    for m in 0..=top {
        let mut acc_c = 0.0;
        let mut acc_s = 0.0;
        for l in m..=top {
            let b = coeffs.block(l);
            let v = p[tri(l, m)];
            acc_c += b[l + m] * v;
            if m > 0 {
                acc_s += b[l - m] * v;
            }
        }
        total += if m == 0 {
            acc_c
        } else {
            std::f64::consts::SQRT_2 * (acc_c * cm + acc_s * sm)
        };
        let next = cm * cos_phi - sm * sin_phi;
        sm = sm * cos_phi + cm * sin_phi;
        cm = next;
    }
    total
}

/// Orthogonal matrix (columns `e1, e2, ξ`) taking the north pole to `ξ`.
pub fn pole_rotation(xi: Vec3) -> Result<[Vec3; 3]> {
    let z = normalize(xi)?;
    // the coordinate axis least aligned with ξ seeds the frame
    let pick = if z[0].abs() <= z[1].abs() && z[0].abs() <= z[2].abs() {
        [1.0, 0.0, 0.0]
    } else if z[1].abs() <= z[2].abs() {
        [0.0, 1.0, 0.0]
    } else {
        [0.0, 0.0, 1.0]
    };
    let dot = pick[0] * z[0] + pick[1] * z[1] + pick[2] * z[2];
    let e1 = normalize([pick[0] - dot * z[0], pick[1] - dot * z[1], pick[2] - dot * z[2]])?;
    let e2 = [
        z[1] * e1[2] - z[2] * e1[1],
        z[2] * e1[0] - z[0] * e1[2],
        z[0] * e1[1] - z[1] * e1[0],
    ];
    Ok([e1, e2, z])
}

fn apply(frame: &[Vec3; 3], local: Vec3) -> Vec3 {
    let mut out = [0.0; 3];
    for (i, o) in out.iter_mut().enumerate() {
        *o = frame[0][i] * local[0] + frame[1][i] * local[1] + frame[2][i] * local[2];
    }
    out
}

/// Gauss–Legendre colatitudes (`L+1` rings) by `2L+1` equispaced longitudes.
#[derive(Debug, Clone)]
pub struct SphericalGrid {
    band: usize,
    cos_theta: Vec<f64>,
    theta_weights: Vec<f64>,
    phis: Vec<f64>,
    // P̄ table per ring
    plm: Vec<Vec<f64>>,
}

impl SphericalGrid {
    pub fn new(band: usize) -> Self {
        let rule = GaussLegendre::new(band + 1);
        let cos_theta = rule.nodes().to_vec();
        let theta_weights = rule.weights().to_vec();
        let nphi = 2 * band + 1;
        let phis = (0..nphi).map(|k| 2.0 * PI * k as f64 / nphi as f64).collect();
        let plm = cos_theta
            .iter()
            .map(|&x: &f64| assoc_legendre(band, x, (1.0 - x * x).sqrt()))
            .collect();
        Self {
            band,
            cos_theta,
            theta_weights,
            phis,
            plm,
        }
    }

    pub fn band(&self) -> usize {
        self.band
    }

    pub fn rings(&self) -> usize {
        self.cos_theta.len()
    }

    pub fn longitudes(&self) -> usize {
        self.phis.len()
    }

    pub fn len(&self) -> usize {
        self.rings() * self.longitudes()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn theta_weights(&self) -> &[f64] {
        &self.theta_weights
    }

    /// `(θ, φ)` of sample `i` (ring-major).
    pub fn angles(&self, i: usize) -> (f64, f64) {
        let (r, k) = (i / self.longitudes(), i % self.longitudes());
        (self.cos_theta[r].acos(), self.phis[k])
    }

    pub fn point(&self, i: usize) -> Vec3 {
        let (t, p) = self.angles(i);
        unit_vector(t, p)
    }

    /// Surface-measure quadrature weight of sample `i`.
    pub fn area_weight(&self, i: usize) -> f64 {
        self.theta_weights[i / self.longitudes()] * 2.0 * PI / self.longitudes() as f64
    }

    fn check_samples(&self, samples: &[f64]) -> Result<()> {
        if samples.len() != self.len() {
            return Err(Error::Shape(format!(
                "grid of band {} has {} samples, got {}",
                self.band,
                self.len(),
                samples.len()
            )));
        }
        Ok(())
    }

    /// Grid values of a band-limited `f`.
    pub fn synthesis(&self, coeffs: &HarmonicCoeffs) -> Result<Vec<f64>> {
        check_d3(coeffs)?;
        if coeffs.band() > self.band {
            return Err(Error::Shape(format!(
                "band {} exceeds the grid band {}",
                coeffs.band(),
                self.band
            )));
        }
        let top = coeffs.band();
        let nphi = self.longitudes();
        let mut out = Vec::with_capacity(self.len());
        for p in &self.plm {
            let mut a = vec![0.0; top + 1];
            let mut b = vec![0.0; top + 1];
            for m in 0..=top {
                for l in m..=top {
                    let blk = coeffs.block(l);
                    a[m] += blk[l + m] * p[tri(l, m)];
                    if m > 0 {
                        b[m] += blk[l - m] * p[tri(l, m)];
                    }
                }
            }
            for k in 0..nphi {
                let phi = self.phis[k];
                let mut v = a[0];
                for m in 1..=top {
                    let (s, c) = (m as f64 * phi).sin_cos();
                    v += std::f64::consts::SQRT_2 * (a[m] * c + b[m] * s);
                }
                out.push(v);
            }
        }
        Ok(out)
    }

    /// Coefficients up to the grid band; exact for band-limited samples.
    pub fn analysis(&self, samples: &[f64]) -> Result<HarmonicCoeffs> {
        self.check_samples(samples)?;
        let band = self.band;
        let nphi = self.longitudes();
        let dphi = 2.0 * PI / nphi as f64;
        let mut c = HarmonicCoeffs::zeros(3, band);
        for (r, p) in self.plm.iter().enumerate() {
            let ring = &samples[r * nphi..(r + 1) * nphi];
            let w = self.theta_weights[r] * dphi;
            for m in 0..=band {
                let (mut ac, mut as_) = (0.0, 0.0);
                for (k, &f) in ring.iter().enumerate() {
                    let (s, co) = (m as f64 * self.phis[k]).sin_cos();
                    ac += f * co;
                    as_ += f * s;
                }
                let scale = if m == 0 { w } else { std::f64::consts::SQRT_2 * w };
                for l in m..=band {
                    let v = p[tri(l, m)] * scale;
                    c.block_mut(l)[l + m] += v * ac;
                    if m > 0 {
                        c.block_mut(l)[l - m] += v * as_;
                    }
                }
            }
        }
        Ok(c)
    }

    /// `Σ w_i f_i²`, the squared `L²` norm of grid samples.
    pub fn norm_sq(&self, samples: &[f64]) -> Result<f64> {
        self.check_samples(samples)?;
        Ok(samples.iter().enumerate().map(|(i, v)| self.area_weight(i) * v * v).sum())
    }

    /// CSV with header `theta,phi,value`.
    pub fn samples_csv(&self, samples: &[f64]) -> Result<String> {
        self.check_samples(samples)?;
        let mut out = String::from("theta,phi,value\n");
        for (i, v) in samples.iter().enumerate() {
            let (t, p) = self.angles(i);
            let _ = writeln!(out, "{t},{p},{v}");
        }
        Ok(out)
    }

    /// Parses `theta,phi,value` rows in grid order.
    pub fn samples_from_csv(&self, text: &str) -> Result<Vec<f64>> {
        let mut vals = Vec::with_capacity(self.len());
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with("theta") {
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            let v = cols
                .get(2)
                .and_then(|s| s.trim().parse::<f64>().ok())
                .ok_or_else(|| Error::Shape(format!("line {}: expected theta,phi,value", lineno + 1)))?;
            vals.push(v);
        }
        self.check_samples(&vals)?;
        Ok(vals)
    }
}

/// Result of [`cap_average_direct`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectAverage {
    pub value: f64,
    /// `t < 2π/L`: the cap is narrower than the grid resolution.
    pub under_resolved: bool,
}

/// `A^ρ_t f(ξ)` from grid samples by quadrature over the cap itself.
///
/// The mean of `f` over the ring at polar angle `θ` about `ξ` is a
/// polynomial of degree `≤ L` in `cos θ`; it is recovered exactly from
/// `L + 1` sampled rings and then integrated against `ρ(θT/t) sin θ`.
pub fn cap_average_direct(
    grid: &SphericalGrid,
    samples: &[f64],
    xi: Vec3,
    t: f64,
    weight: &Weight,
) -> Result<DirectAverage> {
    let coeffs = grid.analysis(samples)?;
    Ok(cap_averages_coeffs(&coeffs, xi, &[t], weight)?[0])
}

/// [`cap_average_direct`] at several radii, sharing the ring data.
pub fn cap_averages_direct(
    grid: &SphericalGrid,
    samples: &[f64],
    xi: Vec3,
    ts: &[f64],
    weight: &Weight,
) -> Result<Vec<DirectAverage>> {
    let coeffs = grid.analysis(samples)?;
    cap_averages_coeffs(&coeffs, xi, ts, weight)
}

/// [`cap_average_direct`] for a function already given by coefficients.
pub fn cap_average_coeffs(
    coeffs: &HarmonicCoeffs,
    xi: Vec3,
    t: f64,
    weight: &Weight,
) -> Result<DirectAverage> {
    Ok(cap_averages_coeffs(coeffs, xi, &[t], weight)?[0])
}

fn cap_averages_coeffs(
    coeffs: &HarmonicCoeffs,
    xi: Vec3,
    ts: &[f64],
    weight: &Weight,
) -> Result<Vec<DirectAverage>> {
    let span = weight.span();
    if let Some(t) = ts.iter().find(|&&t| !(t > 0.0 && t <= span)) {
        return Err(domain(format!("radius t = {t} outside (0, T = {span}]")));
    }
    let ring = degree_components(coeffs, xi)?;
    let band = coeffs.band();
    let rule = GaussLegendre::new(64);
    ts.iter()
        .map(|&t| {
            let scale = t / span;
            let breaks: Vec<f64> = weight.breakpoints().iter().map(|b| b * scale).collect();
            let (mut num, mut den) = (0.0, 0.0);
            for (a, b) in split_at(0.0, t, &breaks) {
                for (theta, w) in rule.mapped(a, b) {
                    let wr = w * weight.rho(theta / scale) * theta.sin();
                    if wr == 0.0 {
                        continue;
                    }
                    num += wr * legendre_series(&ring, theta.cos());
                    den += wr;
                }
            }
            Ok(DirectAverage {
                value: num / den,
                under_resolved: t < 2.0 * PI / band.max(1) as f64,
            })
        })
        .collect()
}

/// `Σ_l a_l P_l(c)` for classical Legendre `P_l`.
fn legendre_series(a: &[f64], c: f64) -> f64 {
    let (mut prev, mut cur) = (0.0, 1.0);
    let mut sum = 0.0;
    for (l, &al) in a.iter().enumerate() {
        sum += al * cur;
        let lf = l as f64;
        let next = ((2.0 * lf + 1.0) * c * cur - lf * prev) / (lf + 1.0);
        prev = cur;
        cur = next;
    }
    sum
}

/// Degree components `f_l(ξ)`, `l = 0..=band`, of `f` at `ξ` from ring means
/// about `ξ`: the mean over the ring at `cos θ = c` is `Σ_l f_l(ξ) P_l(c)`.
pub fn degree_components(coeffs: &HarmonicCoeffs, xi: Vec3) -> Result<Vec<f64>> {
    check_d3(coeffs)?;
    let frame = pole_rotation(xi)?;
    let band = coeffs.band();
    let top = coeffs.max_degree_present().unwrap_or(0);
    let rule = GaussLegendre::new(band + 1);
    let nphi = 2 * band + 1;
    let mut out = vec![0.0; band + 1];
    for (&c, &w) in rule.nodes().iter().zip(rule.weights()) {
        let theta = c.acos();
        let mut ring = 0.0;
        for k in 0..nphi {
            let phi = 2.0 * PI * k as f64 / nphi as f64;
            ring += eval_unchecked(coeffs, top, apply(&frame, unit_vector(theta, phi)));
        }
        ring /= nphi as f64;
        for (l, slot) in out.iter_mut().enumerate() {
            *slot += (2 * l + 1) as f64 / 2.0 * w * ring * p_unchecked(3, l, c);
        }
    }
    Ok(out)
}

/// Precomputed `t`-data for pointwise square functions of band-limited
/// inputs: the `t` rule, `M_{n',l,t}` (with `n' = n` for `2n < α < 2n+2`
/// and `n' = n-1` for `α = 2n`), `m_{l,t}`, and `A'_k(t)`.
#[derive(Debug, Clone)]
pub struct SquareFunctionKernel {
    alpha: f64,
    n: usize,
    even: bool,
    band: usize,
    rule: TRule,
    // rows per t node, last row is t_min
    rem: Vec<Vec<f64>>,
    mult: Vec<Vec<f64>>,
    powers: Vec<Vec<f64>>,
    c: Vec<Vec<f64>>,
}

impl SquareFunctionKernel {
    pub fn new(ctx: &CapAverageContext, alpha: f64, band: usize) -> Result<Self> {
        if ctx.dim() != 3 {
            return Err(Error::DimensionMismatch {
                expected: 3,
                found: ctx.dim(),
            });
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(parameter(format!("alpha = {alpha} must be positive")));
        }
        let n = (alpha / 2.0).floor() as usize;
        let even = alpha == 2.0 * n as f64;
        let order = if even { n - 1 } else { n };
        let rule = TRule::new(ctx.span(), band.max(1));
        let mut ts: Vec<f64> = rule.nodes().to_vec();
        ts.push(rule.t_min());
        let mut rem = Vec::with_capacity(ts.len());
        let mut mult = Vec::with_capacity(ts.len());
        let mut powers = Vec::with_capacity(ts.len());
        for &t in &ts {
            rem.push(
                (0..=band)
                    .map(|l| remainder_m(ctx, order, l, t))
                    .collect::<Result<Vec<_>>>()?,
            );
            mult.push(if even { ctx.multipliers(band, t)? } else { Vec::new() });
            let mass = ctx.weighted_integrals(t, 0, 1, |_, o| o[0] = 1.0)?[0];
            let mut pw = vec![1.0];
            for k in 1..=n {
                let v = ctx.weighted_integrals(t, 0, 1, |s, o| o[0] = one_minus_cos(s).powi(k as i32))?;
                pw.push(v[0] / mass);
            }
            powers.push(pw);
        }
        let c = (0..=band).map(|l| taylor_row(3, l, n)).collect();
        Ok(Self {
            alpha,
            n,
            even,
            band,
            rule,
            rem,
            mult,
            powers,
            c,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Number of correction functions `g_k` expected.
    pub fn order(&self) -> usize {
        self.n
    }

    pub fn band(&self) -> usize {
        self.band
    }

    /// `S_α(f, g_1..g_n)(ξ)²`.
    pub fn eval(&self, f: &HarmonicCoeffs, gs: &[HarmonicCoeffs], xi: Vec3) -> Result<f64> {
        if gs.len() != self.n {
            return Err(parameter(format!(
                "alpha = {} needs {} correction functions, got {}",
                self.alpha,
                self.n,
                gs.len()
            )));
        }
        for h in std::iter::once(f).chain(gs) {
            if h.band() > self.band {
                return Err(Error::Shape(format!(
                    "band {} exceeds the kernel band {}",
                    h.band(),
                    self.band
                )));
            }
        }
        let pad = |h: &HarmonicCoeffs| -> Result<HarmonicCoeffs> {
            let mut blocks = h.blocks().to_vec();
            for l in h.band() + 1..=self.band {
                blocks.push(vec![0.0; 2 * l + 1]);
            }
            HarmonicCoeffs::from_blocks(3, blocks)
        };
        let b = degree_components(&pad(f)?, xi)?;
        // δ_k = Σ_l b_l c_{k,l} - 2^k g_k(ξ) for the plain corrections
        let plain = if self.even { self.n.saturating_sub(1) } else { self.n };
        let mut delta = vec![0.0; self.n + 1];
        for k in 1..=plain {
            let gk = evaluate(&gs[k - 1], xi)?;
            let s: f64 = (0..=self.band).map(|l| b[l] * self.c[l][k]).sum();
            delta[k] = s - 2f64.powi(k as i32) * gk;
        }
        let gamma = if self.even {
            degree_components(&pad(&gs[self.n - 1])?, xi)?
        } else {
            Vec::new()
        };
        let dev = |row: usize| -> f64 {
            let mut v: f64 = (1..=self.band).map(|l| b[l] * self.rem[row][l]).sum();
            for k in 1..=plain {
                v += self.powers[row][k] * delta[k];
            }
            if self.even {
                let avg: f64 = (0..=self.band).map(|l| gamma[l] * self.mult[row][l]).sum();
                v -= 2f64.powi(self.n as i32) * self.powers[row][self.n] * avg;
            }
            v
        };
        let q = 2.0 * self.alpha;
        let mut total = 0.0;
        for (i, (&t, &w)) in self.rule.nodes().iter().zip(self.rule.weights()).enumerate() {
            let v = dev(i);
            total += w * v * v * t.powf(-q - 1.0);
        }
        let t_min = self.rule.t_min();
        let edge = dev(self.rem.len() - 1);
        let r = (2 * self.n + 2) as f64;
        Ok(total + edge * edge * t_min.powf(-q) / (2.0 * r - q))
    }
}

/// `S_α(f, g_1..g_n)(ξ)²` (Def. of the generalized square function), with
/// the `t`-integral on the same log-substituted rule as the `I`/`J`
/// functionals.
pub fn square_function_pointwise(
    ctx: &CapAverageContext,
    f: &HarmonicCoeffs,
    gs: &[HarmonicCoeffs],
    xi: Vec3,
    alpha: f64,
) -> Result<f64> {
    let band = std::iter::once(f).chain(gs).map(HarmonicCoeffs::band).max().unwrap_or(0);
    SquareFunctionKernel::new(ctx, alpha, band)?.eval(f, gs, xi)
}

/// `Σ_i w_i S_α(f, g..)(ξ_i)²` over the grid.
pub fn square_function_grid(
    kernel: &SquareFunctionKernel,
    grid: &SphericalGrid,
    f: &HarmonicCoeffs,
    gs: &[HarmonicCoeffs],
) -> Result<f64> {
    let mut total = 0.0;
    for i in 0..grid.len() {
        total += grid.area_weight(i) * kernel.eval(f, gs, grid.point(i))?;
    }
    Ok(total)
}
