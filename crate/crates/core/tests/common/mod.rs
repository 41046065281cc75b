//! Shared synthetic data for the integration tests.
#![allow(dead_code)]

pub mod fixture;

use ivsurv::learners::expit;
use ivsurv::rng::stream;
use ivsurv::{IvKind, Observation, SurvivalDataset};
use rand::Rng;
use rand_distr::StandardNormal;

/// Binary instrument with `P(Z = 1) = 0.5` independent of two covariates,
/// logistic treatment and exponential event times censored uniformly.
pub fn simple_binary(n: usize, tau: usize, seed: u64) -> SurvivalDataset {
    let mut rng = stream(seed, &[0x7E57]);
    let rows = (0..n)
        .map(|_| {
            let x: Vec<f64> = (0..2).map(|_| rng.sample(StandardNormal)).collect();
            let z = (rng.random::<f64>() < 0.5) as u8 as f64;
            let a = (rng.random::<f64>() < expit(-0.8 + 1.6 * z + 0.5 * x[0])) as u8 as f64;
            let rate = 0.08 * (0.3 * x[1] - 0.5 * a).exp();
            let t = -rng.random::<f64>().ln() / rate;
            let c = 5.0 + 40.0 * rng.random::<f64>();
            let time = t.min(c);
            Observation::new(x, z, a, time, (t < c) as u8 as f64)
        })
        .collect();
    SurvivalDataset::new(rows, tau, IvKind::Binary)
}

/// Same design with a Gaussian instrument driving treatment.
pub fn simple_continuous(n: usize, tau: usize, seed: u64) -> SurvivalDataset {
    let mut rng = stream(seed, &[0xC0A7]);
    let rows = (0..n)
        .map(|_| {
            let x: Vec<f64> = (0..2).map(|_| rng.sample(StandardNormal)).collect();
            let z = -0.5 * x[0] + rng.sample::<f64, _>(StandardNormal);
            let a = (rng.random::<f64>() < expit(0.2 + 1.2 * z + 0.3 * x[1])) as u8 as f64;
            let rate = 0.08 * (0.3 * x[1] - 0.5 * a).exp();
            let t = -rng.random::<f64>().ln() / rate;
            let c = 5.0 + 40.0 * rng.random::<f64>();
            Observation::new(x, z, a, t.min(c), (t < c) as u8 as f64)
        })
        .collect();
    SurvivalDataset::new(rows, tau, IvKind::Continuous)
}
