//! Estimators for a continuous instrument: the complier contrast between
//! instrument values shifted up and down by `kappa`.
//!
//! Subjects whose shifted instrument leaves the support keep their observed
//! value; for them the density ratio is 1 and the terms reduce to the
//! observed-data versions of `Y_t` and `A`.

use crate::data::{survival_indicator, IvKind, Observation, SurvivalDataset, TimeGrid};
use crate::error::{Error, Result};
use crate::nuisance::{check_kappa, ShiftNuisanceSet};

use super::EstimateCurve;

const AT: usize = 0;
const PLUS: usize = 1;
const MINUS: usize = 2;

fn check(data: &SurvivalDataset, nu: &ShiftNuisanceSet, grid: &TimeGrid, name: &str) -> Result<()> {
    if data.iv_kind != IvKind::Continuous {
        return Err(Error::IncompatibleEstimator {
            estimator: name.to_string(),
            iv_kind: data.iv_kind.to_string(),
        });
    }
    check_kappa(nu.kappa, nu.z_range)?;
    if data.len() != nu.len() || grid.tau() > nu.tau {
        return Err(Error::Shape("shift nuisances do not match the data".into()));
    }
    Ok(())
}

/// `M^c(Y_t; .)` with the outcome/propensity regressions taken at `shift`
/// and the correction weighted by `ratio`.
fn m_c(
    o: &Observation,
    nu: &ShiftNuisanceSet,
    i: usize,
    t: usize,
    shift: usize,
    ratio: f64,
) -> f64 {
    let pi_s = nu.pi[i][shift];
    let mut v = nu.mu(i, t, shift, 1) * pi_s + nu.mu(i, t, shift, 0) * (1.0 - pi_s);
    let m1 = nu.mu(i, t, AT, 1);
    let m0 = nu.mu(i, t, AT, 0);
    let p = nu.pi[i][AT];
    let a = o.a;
    let mut c = m1 * (a - p) + m0 * ((1.0 - a) - (1.0 - p));
    if o.event() {
        let y = survival_indicator(o, t).expect("Y_t observed when r = 1") as u8 as f64;
        if o.treated() {
            c += (y - m1) / nu.omega[i][1];
        } else {
            c += (y - m0) / nu.omega[i][0];
        }
    }
    v += ratio * c;
    v
}

fn pi_c(o: &Observation, nu: &ShiftNuisanceSet, i: usize, shift: usize, ratio: f64) -> f64 {
    (o.a - nu.pi[i][AT]) * ratio + nu.pi[i][shift]
}

/// `(shift, ratio)` for the upper and lower arms of subject `i`.
fn arms(nu: &ShiftNuisanceSet, i: usize) -> [(usize, f64); 2] {
    let [d, d_minus, d_plus] = nu.dens[i];
    let up = if nu.upper_boundary[i] {
        (AT, 1.0)
    } else {
        (PLUS, d_minus / d)
    };
    let down = if nu.lower_boundary[i] {
        (AT, 1.0)
    } else {
        (MINUS, d_plus / d)
    };
    [up, down]
}

fn boundary_count(nu: &ShiftNuisanceSet) -> usize {
    (0..nu.len())
        .filter(|&i| nu.upper_boundary[i] || nu.lower_boundary[i])
        .count()
}

pub fn estimate_if_continuous(
    data: &SurvivalDataset,
    nu: &ShiftNuisanceSet,
    grid: &TimeGrid,
    denom_floor: f64,
) -> Result<EstimateCurve> {
    check(data, nu, grid, "if_continuous")?;
    let n = data.len() as f64;
    let den = data
        .rows
        .iter()
        .enumerate()
        .map(|(i, o)| {
            let [(su, ru), (sd, rd)] = arms(nu, i);
            pi_c(o, nu, i, su, ru) - pi_c(o, nu, i, sd, rd)
        })
        .sum::<f64>()
        / n;
    let num = grid
        .points()
        .iter()
        .map(|&t| {
            data.rows
                .iter()
                .enumerate()
                .map(|(i, o)| {
                    let [(su, ru), (sd, rd)] = arms(nu, i);
                    m_c(o, nu, i, t, su, ru) - m_c(o, nu, i, t, sd, rd)
                })
                .sum::<f64>()
                / n
        })
        .collect();
    let mut curve = EstimateCurve::from_ratio(grid.clone(), num, den, denom_floor);
    curve.diagnostics.boundary_subjects = boundary_count(nu);
    Ok(curve)
}

/// Weighted analogue of the binary IPW comparator: the arms are the
/// observed instrument reweighted to represent `Z + kappa` and `Z - kappa`.
pub fn estimate_ipw_continuous(
    data: &SurvivalDataset,
    nu: &ShiftNuisanceSet,
    grid: &TimeGrid,
    denom_floor: f64,
) -> Result<EstimateCurve> {
    check(data, nu, grid, "ipw_continuous")?;
    let n = data.len() as f64;
    let weights: Vec<[f64; 2]> = (0..data.len())
        .map(|i| {
            let [(_, ru), (_, rd)] = arms(nu, i);
            [ru, rd]
        })
        .collect();
    // P_n(w A) and P_n(w (1 - A)) per arm
    let mut wa = [[0.0; 2]; 2];
    for (i, o) in data.rows.iter().enumerate() {
        for s in 0..2 {
            wa[s][o.a as usize] += weights[i][s] / n;
        }
    }
    let den = wa[0][1] - wa[1][1];
    let num = grid
        .points()
        .iter()
        .map(|&t| {
            let mut sy = [[0.0; 2]; 2];
            for (i, o) in data.rows.iter().enumerate() {
                if !o.event() || !survival_indicator(o, t).unwrap_or(false) {
                    continue;
                }
                let a = o.a as usize;
                let pa = if a == 1 {
                    nu.pi[i][AT]
                } else {
                    1.0 - nu.pi[i][AT]
                };
                for s in 0..2 {
                    sy[s][a] += weights[i][s] / (nu.omega[i][a] * pa * n);
                }
            }
            (sy[0][1] * wa[0][1] + sy[0][0] * wa[0][0])
                - (sy[1][1] * wa[1][1] + sy[1][0] * wa[1][0])
        })
        .collect();
    let mut curve = EstimateCurve::from_ratio(grid.clone(), num, den, denom_floor);
    curve.diagnostics.boundary_subjects = boundary_count(nu);
    Ok(curve)
}

/// Regression-only estimator: outcome and treatment regressions evaluated
/// at the shifted instrument values.
pub fn estimate_plugin_continuous(
    data: &SurvivalDataset,
    nu: &ShiftNuisanceSet,
    grid: &TimeGrid,
    denom_floor: f64,
) -> Result<EstimateCurve> {
    check(data, nu, grid, "plugin_continuous")?;
    let n = data.len();
    let den = (0..n)
        .map(|i| nu.pi[i][PLUS] - nu.pi[i][MINUS])
        .sum::<f64>()
        / n as f64;
    let num = grid
        .points()
        .iter()
        .map(|&t| {
            (0..n)
                .map(|i| {
                    let arm = |s: usize| {
                        nu.mu(i, t, s, 1) * nu.pi[i][s] + nu.mu(i, t, s, 0) * (1.0 - nu.pi[i][s])
                    };
                    arm(PLUS) - arm(MINUS)
                })
                .sum::<f64>()
                / n as f64
        })
        .collect();
    let mut curve = EstimateCurve::from_ratio(grid.clone(), num, den, denom_floor);
    curve.diagnostics.boundary_subjects = boundary_count(nu);
    Ok(curve)
}
