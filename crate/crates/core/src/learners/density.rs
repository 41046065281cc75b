//! Conditional instrument density `delta(z; x)`.
//!
//! The instrument is regressed on the covariates by least squares; the
//! residual law is either a normal with the residual standard deviation or a
//! Gaussian kernel density with Silverman's bandwidth.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::Features;

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityMethod {
    #[default]
    Gaussian,
    Kernel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalDensity {
    coef: Vec<f64>,
    sigma: f64,
    /// Sorted residuals and bandwidth in kernel mode.
    kernel: Option<(Vec<f64>, f64)>,
    floor: f64,
}

/// Silverman's rule of thumb: `0.9 min(sd, IQR/1.34) n^(-1/5)`.
pub fn silverman_bandwidth(sorted: &[f64]) -> f64 {
    let n = sorted.len() as f64;
    let mean = sorted.iter().sum::<f64>() / n;
    let sd = (sorted.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0)).sqrt();
    let iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    0.9 * spread * n.powf(-0.2)
}

fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

impl ConditionalDensity {
    pub fn fit(x: &Features, z: &[f64], method: DensityMethod, floor: f64) -> Result<Self> {
        let n = x.rows();
        if n < 2 {
            return Err(Error::ZeroVarianceInstrument);
        }
        let zbar = z.iter().sum::<f64>() / n as f64;
        if z.iter()
            .all(|&v| (v - zbar).abs() <= 1e-12 * zbar.abs().max(1.0))
        {
            return Err(Error::ZeroVarianceInstrument);
        }
        let p = x.cols() + 1;
        let design = DMatrix::from_fn(n, p, |i, j| if j == 0 { 1.0 } else { x.get(i, j - 1) });
        let mut xtx = design.transpose() * &design;
        for j in 0..p {
            xtx[(j, j)] += 1e-10;
        }
        let xtz = design.transpose() * DVector::from_column_slice(z);
        let coef = xtx.lu().solve(&xtz).ok_or(Error::SingularDesign)?;
        let coef: Vec<f64> = coef.iter().copied().collect();
        let mut resid: Vec<f64> = (0..n).map(|i| z[i] - linear(&coef, x.row(i))).collect();
        let dof = (n as f64 - p as f64).max(1.0);
        let sigma = (resid.iter().map(|r| r * r).sum::<f64>() / dof).sqrt();
        if !(sigma > 0.0) {
            return Err(Error::ZeroVarianceInstrument);
        }
        let kernel = match method {
            DensityMethod::Gaussian => None,
            DensityMethod::Kernel => {
                resid.sort_by(f64::total_cmp);
                let bw = silverman_bandwidth(&resid);
                if !(bw > 0.0) {
                    return Err(Error::ZeroVarianceInstrument);
                }
                Some((resid, bw))
            }
        };
        Ok(Self {
            coef,
            sigma,
            kernel,
            floor,
        })
    }

    pub fn conditional_mean(&self, x: &[f64]) -> f64 {
        linear(&self.coef, x)
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Density of the instrument at `z` given covariates `x`, floored.
    pub fn density(&self, z: f64, x: &[f64]) -> f64 {
        let e = z - self.conditional_mean(x);
        let d = match &self.kernel {
            None => INV_SQRT_2PI / self.sigma * (-0.5 * (e / self.sigma).powi(2)).exp(),
            Some((resid, bw)) => {
                // kernels beyond 8 bandwidths contribute < 1e-14
                let lo = resid.partition_point(|&r| r < e - 8.0 * bw);
                let hi = resid.partition_point(|&r| r <= e + 8.0 * bw);
                let s: f64 = resid[lo..hi]
                    .iter()
                    .map(|&r| (-0.5 * ((e - r) / bw).powi(2)).exp())
                    .sum();
                s * INV_SQRT_2PI / (bw * resid.len() as f64)
            }
        };
        d.max(self.floor)
    }
}

fn linear(coef: &[f64], x: &[f64]) -> f64 {
    coef[0] + x.iter().zip(&coef[1..]).map(|(a, b)| a * b).sum::<f64>()
}
