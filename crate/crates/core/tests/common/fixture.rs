//! Six-row fixture with hand-specified nuisances, and independent direct
//! evaluations of every binary-instrument estimator on it.
//!
//! The oracles below re-derive each estimator from its defining display
//! with plain loops; they share no code with the library beyond the data
//! containers.
#![allow(dead_code)]

use ivsurv::estimators::{
    estimate_if_binary, estimate_if_hazard, estimate_ipw, estimate_naive_hazard, estimate_plugin,
};
use ivsurv::learners::expit;
use ivsurv::nuisance::{HazardSet, NuisanceSet, Propensities, Strata};
use ivsurv::rng::stream;
use ivsurv::{IvKind, Observation, SurvivalDataset, TimeGrid};
use rand::Rng;
use rand_distr::StandardNormal;

pub const TAU: usize = 3;

/// `(z, a, time, r)` per row; the single covariate is the row index.
pub const ROWS: [(f64, f64, f64, f64); 6] = [
    (1.0, 1.0, 2.0, 1.0),
    (1.0, 0.0, 3.0, 0.0),
    (0.0, 0.0, 1.0, 1.0),
    (0.0, 1.0, 3.0, 1.0),
    (1.0, 1.0, 5.0, 0.0),
    (0.0, 0.0, 2.0, 0.0),
];

pub fn mu(i: usize, t: usize, z: usize, a: usize) -> f64 {
    0.9 - 0.1 * t as f64 + 0.02 * i as f64 + 0.05 * z as f64 - 0.03 * a as f64
}

pub fn omega(i: usize, z: usize, a: usize) -> f64 {
    0.6 + 0.05 * i as f64 + 0.04 * z as f64 - 0.02 * a as f64
}

pub fn pi(i: usize, z: usize) -> f64 {
    0.2 + 0.03 * i as f64 + 0.45 * z as f64
}

pub fn delta(i: usize, z: usize) -> f64 {
    let d1 = 0.35 + 0.06 * i as f64;
    if z == 1 {
        d1
    } else {
        1.0 - d1
    }
}

/// Event hazard for stratum `s` at `k`.
pub fn h(s: usize, i: usize, k: usize) -> f64 {
    0.05 + 0.02 * s as f64 + 0.01 * i as f64 + 0.03 * k as f64
}

/// Censoring hazard for stratum `s` at `k`.
pub fn g(s: usize, i: usize, k: usize) -> f64 {
    0.04 + 0.01 * s as f64 + 0.015 * i as f64 + 0.01 * k as f64
}

/// `P(A = 1 | X)` for the instrument-free hazard estimator.
pub fn pi_marginal(i: usize) -> f64 {
    0.4 + 0.04 * i as f64
}

pub fn data() -> SurvivalDataset {
    let rows = ROWS
        .iter()
        .enumerate()
        .map(|(i, &(z, a, time, r))| Observation::new(vec![i as f64], z, a, time, r))
        .collect();
    SurvivalDataset::new(rows, TAU, IvKind::Binary)
}

pub fn nuisances() -> NuisanceSet {
    let n = ROWS.len();
    let mut nu = NuisanceSet::constant(n, TAU, 0.0, 0.0, [0.0, 0.0], 0.0);
    for i in 0..n {
        for t in 1..=TAU {
            for z in 0..2 {
                for a in 0..2 {
                    nu.mu[i * TAU + t - 1][z][a] = mu(i, t, z, a);
                }
            }
        }
        for z in 0..2 {
            for a in 0..2 {
                nu.omega[i][z][a] = omega(i, z, a);
            }
            nu.pi[i][z] = pi(i, z);
            nu.delta[i][z] = delta(i, z);
        }
    }
    nu
}

fn props() -> Propensities {
    let n = ROWS.len();
    Propensities {
        pi: (0..n).map(|i| [pi(i, 0), pi(i, 1)]).collect(),
        delta: (0..n).map(|i| [delta(i, 0), delta(i, 1)]).collect(),
    }
}

pub fn hazards(strata: Strata) -> HazardSet {
    let n = ROWS.len();
    let table = |f: fn(usize, usize, usize) -> f64| -> Vec<Vec<Vec<f64>>> {
        (0..strata.count())
            .map(|s| {
                (0..n)
                    .map(|i| (1..=TAU).map(|k| f(s, i, k)).collect())
                    .collect()
            })
            .collect()
    };
    let mut hz = HazardSet::from_hazards(TAU, strata, &table(h), &table(g));
    match strata {
        Strata::Treatment => hz.pi_marginal = Some((0..n).map(pi_marginal).collect()),
        Strata::InstrumentTreatment => hz.props = Some(props()),
    }
    hz
}

/// Max of absolute gaps where any NaN counts as infinite.
fn worst(gaps: impl Iterator<Item = f64>) -> f64 {
    gaps.fold(
        0.0f64,
        |m, e| if e.is_nan() { f64::INFINITY } else { m.max(e) },
    )
}

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = v.collect();
    v.iter().sum::<f64>() / v.len() as f64
}

/// `Y_t`, with 0 standing in where it is multiplied by `r = 0`.
fn y(i: usize, t: usize) -> f64 {
    let (_, _, time, r) = ROWS[i];
    if r == 1.0 && time > t as f64 {
        1.0
    } else {
        0.0
    }
}

fn ind(b: bool) -> f64 {
    b as u8 as f64
}

pub fn oracle_if(t: usize) -> f64 {
    let n = ROWS.len();
    let m = |i: usize, j: usize| {
        let (z, a, _, r) = ROWS[i];
        let ij = ind(z == j as f64);
        let (p, d) = (pi(i, j), delta(i, j));
        let (m1, m0) = (mu(i, t, j, 1), mu(i, t, j, 0));
        m1 * p
            + m0 * (1.0 - p)
            + ij / d * (r * a / omega(i, j, 1) * (y(i, t) - m1) + m1 * (a - p))
            + ij / d
                * (r * (1.0 - a) / omega(i, j, 0) * (y(i, t) - m0) + m0 * ((1.0 - a) - (1.0 - p)))
    };
    let big_pi = |i: usize, j: usize| {
        let (z, a, _, _) = ROWS[i];
        (a - pi(i, j)) * ind(z == j as f64) / delta(i, j) + pi(i, j)
    };
    mean((0..n).map(|i| m(i, 1) - m(i, 0))) / mean((0..n).map(|i| big_pi(i, 1) - big_pi(i, 0)))
}

pub fn oracle_plugin(t: usize) -> f64 {
    let n = ROWS.len();
    let arm = |i: usize, j: usize| mu(i, t, j, 1) * pi(i, j) + mu(i, t, j, 0) * (1.0 - pi(i, j));
    (mean((0..n).map(|i| arm(i, 1))) - mean((0..n).map(|i| arm(i, 0))))
        / (mean((0..n).map(|i| pi(i, 1))) - mean((0..n).map(|i| pi(i, 0))))
}

pub fn oracle_ipw(t: usize) -> f64 {
    let n = ROWS.len();
    // weighted outcome mean and arm weight for instrument arm j, treatment a
    let outcome = |j: usize, a: usize| {
        mean((0..n).map(|i| {
            let (z, ai, _, r) = ROWS[i];
            let pa = if a == 1 { pi(i, j) } else { 1.0 - pi(i, j) };
            y(i, t) * r * ind(ai == a as f64) * ind(z == j as f64)
                / (omega(i, j, a) * pa * delta(i, j))
        }))
    };
    let weight = |j: usize, a: usize| {
        mean((0..n).map(|i| {
            let (z, ai, _, _) = ROWS[i];
            ind(ai == a as f64) * ind(z == j as f64) / delta(i, j)
        }))
    };
    let num = outcome(1, 1) * weight(1, 1) + outcome(1, 0) * weight(1, 0)
        - outcome(0, 1) * weight(0, 1)
        - outcome(0, 0) * weight(0, 0);
    num / (weight(1, 1) - weight(0, 1))
}

fn surv(s: usize, i: usize, k: usize) -> f64 {
    (1..=k).map(|l| 1.0 - h(s, i, l)).product()
}

fn cens_surv(s: usize, i: usize, k: usize) -> f64 {
    (1..=k).map(|l| 1.0 - g(s, i, l)).product()
}

fn at_risk(i: usize, k: usize) -> f64 {
    ind(ROWS[i].2 > (k - 1) as f64)
}

fn event(i: usize, k: usize) -> f64 {
    ind(ROWS[i].2 == k as f64 && ROWS[i].3 == 1.0)
}

/// `sum_{k<=t} at_risk_k / G_{k-1} * S_t / S_k * (event_k - at_risk_k h_k)`
fn martingale(s: usize, i: usize, t: usize) -> f64 {
    (1..=t)
        .map(|k| {
            at_risk(i, k) / cens_surv(s, i, k - 1) * surv(s, i, t) / surv(s, i, k)
                * (event(i, k) - at_risk(i, k) * h(s, i, k))
        })
        .sum()
}

pub fn oracle_naive(t: usize) -> f64 {
    let n = ROWS.len();
    let lambda = |i: usize, a: usize| {
        let pa = if a == 1 {
            pi_marginal(i)
        } else {
            1.0 - pi_marginal(i)
        };
        -ind(ROWS[i].1 == a as f64) / pa * martingale(a, i, t) + surv(a, i, t)
    };
    mean((0..n).map(|i| lambda(i, 1) - lambda(i, 0)))
}

pub fn oracle_if_hazard(t: usize) -> f64 {
    let n = ROWS.len();
    let lambda = |i: usize, z: usize| {
        let (zi, ai, _, _) = ROWS[i];
        let iz = ind(zi == z as f64);
        (0..2)
            .map(|a| {
                let s = 2 * z + a;
                let ia = ind(ai == a as f64);
                let pza = if a == 1 { pi(i, z) } else { 1.0 - pi(i, z) };
                let st = surv(s, i, t);
                -iz * ia / (delta(i, z) * pza) * martingale(s, i, t)
                    + iz / delta(i, z) * st * (ia - pza)
                    + st * pza
            })
            .sum::<f64>()
    };
    let big_pi = |i: usize, j: usize| {
        let (z, a, _, _) = ROWS[i];
        (a - pi(i, j)) * ind(z == j as f64) / delta(i, j) + pi(i, j)
    };
    mean((0..n).map(|i| lambda(i, 1) - lambda(i, 0)))
        / mean((0..n).map(|i| big_pi(i, 1) - big_pi(i, 0)))
}

/// Largest absolute gap between library and oracle, per estimator.
pub fn fixture_gaps() -> Vec<(&'static str, f64)> {
    let d = data();
    let nu = nuisances();
    let grid = TimeGrid::unit(TAU);
    let gap = |psi: Vec<f64>, oracle: fn(usize) -> f64| {
        worst(
            psi.iter()
                .enumerate()
                .map(|(k, v)| (v - oracle(k + 1)).abs()),
        )
    };
    let naive = hazards(Strata::Treatment);
    let ifh = hazards(Strata::InstrumentTreatment);
    vec![
        (
            "if",
            gap(
                estimate_if_binary(&d, &nu, &grid, 1e-3).unwrap().psi,
                oracle_if,
            ),
        ),
        (
            "ipw",
            gap(estimate_ipw(&d, &nu, &grid, 1e-3).unwrap().psi, oracle_ipw),
        ),
        (
            "plugin",
            gap(
                estimate_plugin(&d, &nu, &grid, 1e-3).unwrap().psi,
                oracle_plugin,
            ),
        ),
        (
            "naive_hazard",
            gap(
                estimate_naive_hazard(&d, &naive, &grid, 0.01).unwrap().psi,
                oracle_naive,
            ),
        ),
        (
            "if_hazard",
            gap(
                estimate_if_hazard(&d, &ifh, &grid, 0.01, 1e-3).unwrap().psi,
                oracle_if_hazard,
            ),
        ),
    ]
}

/// Perfect compliance, no censoring and true nuisances on `n` subjects.
pub fn aipw_case(n: usize, tau: usize, seed: u64) -> (SurvivalDataset, NuisanceSet) {
    let mut rng = stream(seed, &[0xA1F]);
    let rate = |x: f64, a: f64| 0.2 * (0.3 * x - 0.4 * a).exp();
    let mut rows = Vec::with_capacity(n);
    let mut nu = NuisanceSet::constant(n, tau, 0.0, 1.0, [0.0, 1.0], 0.5);
    for i in 0..n {
        let x: f64 = rng.sample(StandardNormal);
        let e = expit(0.3 * x - 0.2);
        let z = ind(rng.random::<f64>() < e);
        let t = -rng.random::<f64>().ln() / rate(x, z);
        rows.push(Observation::new(vec![x], z, z, t, 1.0));
        nu.delta[i] = [1.0 - e, e];
        for k in 1..=tau {
            for zz in 0..2 {
                for a in 0..2 {
                    nu.mu[i * tau + k - 1][zz][a] = (-rate(x, a as f64) * k as f64).exp();
                }
            }
        }
    }
    (SurvivalDataset::new(rows, tau, IvKind::Binary), nu)
}

/// Augmented IPW estimate of `E[Y_t^1 - Y_t^0]` with propensity `e(x)`.
pub fn aipw_ate(d: &SurvivalDataset, nu: &NuisanceSet, t: usize) -> f64 {
    let n = d.len();
    let terms = (0..n).map(|i| {
        let o = &d.rows[i];
        let yt = ind(o.time > t as f64);
        let e = nu.delta[i][1];
        let (m1, m0) = (nu.mu(i, t, 1, 1), nu.mu(i, t, 0, 0));
        m1 + o.a * (yt - m1) / e - m0 - (1.0 - o.a) * (yt - m0) / (1.0 - e)
    });
    mean(terms)
}

/// Largest gap between the influence-function estimator and AIPW over
/// `datasets` random draws of `n` subjects.
pub fn aipw_gap(datasets: usize, n: usize) -> f64 {
    let tau = 5;
    let grid = TimeGrid::unit(tau);
    worst((0..datasets as u64).map(|s| {
        let (d, nu) = aipw_case(n, tau, s);
        let psi = estimate_if_binary(&d, &nu, &grid, 1e-3).unwrap().psi;
        worst((1..=tau).map(|t| (psi[t - 1] - aipw_ate(&d, &nu, t)).abs()))
    }))
}
