//! Band-limited spherical-harmonic coefficient arrays.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dimension `ν(l)` of the degree-`l` harmonics on `S^{d-1}`.
pub fn harmonic_dim(d: usize, l: usize) -> usize {
    binom(l + d - 1, d - 1) - if l >= 2 { binom(l + d - 3, d - 1) } else { 0 }
}

fn binom(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// Coefficients `f̂_{lj}` in a real orthonormal basis, degree-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCoeffs", into = "RawCoeffs")]
pub struct HarmonicCoeffs {
    d: usize,
    blocks: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct RawCoeffs {
    d: usize,
    #[serde(rename = "L")]
    band: usize,
    blocks: Vec<Vec<f64>>,
}

impl TryFrom<RawCoeffs> for HarmonicCoeffs {
    type Error = Error;

    fn try_from(raw: RawCoeffs) -> Result<Self> {
        if raw.blocks.len() != raw.band + 1 {
            return Err(Error::Shape(format!(
                "L = {} needs {} blocks, found {}",
                raw.band,
                raw.band + 1,
                raw.blocks.len()
            )));
        }
        Self::from_blocks(raw.d, raw.blocks)
    }
}

impl From<HarmonicCoeffs> for RawCoeffs {
    fn from(c: HarmonicCoeffs) -> Self {
        Self {
            d: c.d,
            band: c.band(),
            blocks: c.blocks,
        }
    }
}

impl HarmonicCoeffs {
    pub fn zeros(d: usize, band: usize) -> Self {
        assert!(d >= 2, "ambient dimension must be at least 2");
        let blocks = (0..=band).map(|l| vec![0.0; harmonic_dim(d, l)]).collect();
        Self { d, blocks }
    }

    pub fn from_blocks(d: usize, blocks: Vec<Vec<f64>>) -> Result<Self> {
        if d < 2 {
            return Err(Error::Domain(format!("d = {d} must be at least 2")));
        }
        if blocks.is_empty() {
            return Err(Error::Shape("at least the degree-0 block is required".into()));
        }
        for (l, b) in blocks.iter().enumerate() {
            let want = harmonic_dim(d, l);
            if b.len() != want {
                return Err(Error::Shape(format!(
                    "degree {l} block has {} entries, expected {want}",
                    b.len()
                )));
            }
        }
        Ok(Self { d, blocks })
    }

    /// A single degree-`l` block, zero elsewhere.
    pub fn single_degree(d: usize, band: usize, l: usize, block: Vec<f64>) -> Result<Self> {
        let mut c = Self::zeros(d, band);
        if l > band || block.len() != harmonic_dim(d, l) {
            return Err(Error::Shape(format!("block does not fit degree {l} at band {band}")));
        }
        c.blocks[l] = block;
        Ok(c)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// Band limit `L`.
    pub fn band(&self) -> usize {
        self.blocks.len() - 1
    }

    pub fn block(&self, l: usize) -> &[f64] {
        &self.blocks[l]
    }

    pub fn block_mut(&mut self, l: usize) -> &mut [f64] {
        &mut self.blocks[l]
    }

    pub fn blocks(&self) -> &[Vec<f64>] {
        &self.blocks
    }

    /// `Σ_j |f̂_{lj}|²`.
    pub fn degree_energy(&self, l: usize) -> f64 {
        self.blocks[l].iter().map(|x| x * x).sum()
    }

    /// `Σ_{l,j} |f̂_{lj}|²`, the squared `L²` norm.
    pub fn norm_sq(&self) -> f64 {
        (0..self.blocks.len()).map(|l| self.degree_energy(l)).sum()
    }

    pub fn max_degree_present(&self) -> Option<usize> {
        self.blocks.iter().rposition(|b| b.iter().any(|&x| x != 0.0))
    }

    /// Scales block `l` by `factor(l)`.
    pub fn map_degrees(&self, mut factor: impl FnMut(usize) -> f64) -> Self {
        let blocks = self
            .blocks
            .iter()
            .enumerate()
            .map(|(l, b)| {
                let f = factor(l);
                b.iter().map(|x| x * f).collect()
            })
            .collect();
        Self { d: self.d, blocks }
    }

    pub fn try_map_degrees(&self, mut factor: impl FnMut(usize) -> Result<f64>) -> Result<Self> {
        let mut out = self.clone();
        for (l, b) in out.blocks.iter_mut().enumerate() {
            let f = factor(l)?;
            b.iter_mut().for_each(|x| *x *= f);
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let blocks = self
            .blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y).collect())
            .collect();
        Ok(Self { d: self.d, blocks })
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.check_compatible(other)?;
        Ok(self
            .blocks
            .iter()
            .flatten()
            .zip(other.blocks.iter().flatten())
            .fold(0.0, |m, (a, b)| f64::max(m, (a - b).abs())))
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.d != other.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                found: other.d,
            });
        }
        if self.band() != other.band() {
            return Err(Error::Shape(format!(
                "band limits differ: {} vs {}",
                self.band(),
                other.band()
            )));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}
