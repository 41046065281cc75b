//! Estimators for a binary instrument that condition on `R = 1`: the
//! influence-function estimator and its IPW and plug-in comparators.

use crate::data::{survival_indicator, IvKind, Observation, SurvivalDataset, TimeGrid};
use crate::error::{Error, Result};
use crate::nuisance::NuisanceSet;

use super::{mean, EstimateCurve};

fn check(data: &SurvivalDataset, nu: &NuisanceSet, grid: &TimeGrid, name: &str) -> Result<()> {
    if data.iv_kind != IvKind::Binary {
        return Err(Error::IncompatibleEstimator {
            estimator: name.to_string(),
            iv_kind: data.iv_kind.to_string(),
        });
    }
    if data.len() != nu.len() || grid.tau() > nu.tau {
        return Err(Error::Shape(format!(
            "{} rows / tau {} against nuisances for {} rows / tau {}",
            data.len(),
            grid.tau(),
            nu.len(),
            nu.tau
        )));
    }
    Ok(())
}

#[inline]
fn y_obs(o: &Observation, t: usize) -> f64 {
    // only called when r = 1, where Y_t is always observed
    survival_indicator(o, t).expect("Y_t observed when r = 1") as u8 as f64
}

/// `M_j(t)` for subject `i`.
pub fn term_m(o: &Observation, nu: &NuisanceSet, i: usize, j: usize, t: usize) -> f64 {
    let m1 = nu.mu(i, t, j, 1);
    let m0 = nu.mu(i, t, j, 0);
    let p = nu.pi[i][j];
    let mut v = m1 * p + m0 * (1.0 - p);
    if o.z == j as f64 {
        let a = o.a;
        let mut c = m1 * (a - p) + m0 * ((1.0 - a) - (1.0 - p));
        if o.event() {
            let y = y_obs(o, t);
            if o.treated() {
                c += (y - m1) / nu.omega[i][j][1];
            } else {
                c += (y - m0) / nu.omega[i][j][0];
            }
        }
        v += c / nu.delta[i][j];
    }
    v
}

/// `Pi_j` for subject `i`.
pub fn term_pi(o: &Observation, nu: &NuisanceSet, i: usize, j: usize) -> f64 {
    let p = nu.pi[i][j];
    if o.z == j as f64 {
        (o.a - p) / nu.delta[i][j] + p
    } else {
        p
    }
}
/// Common denominator `P_n(Pi_1 - Pi_0)`.
pub fn compliance_denominator(data: &SurvivalDataset, nu: &NuisanceSet) -> f64 {
    binary_denominator_from(data, &nu.pi, &nu.delta)
}

/// `P_n(Pi_1 - Pi_0)` from raw propensity tables.
pub fn binary_denominator_from(data: &SurvivalDataset, pi: &[[f64; 2]], delta: &[[f64; 2]]) -> f64 {
    let d: Vec<f64> = data
        .rows
        .iter()
        .enumerate()
        .map(|(i, o)| {
            let arm = |j: usize| {
                if o.z == j as f64 {
                    (o.a - pi[i][j]) / delta[i][j] + pi[i][j]
                } else {
                    pi[i][j]
                }
            };
            arm(1) - arm(0)
        })
        .collect();
    mean(&d)
}

pub fn estimate_if_binary(
    data: &SurvivalDataset,
    nu: &NuisanceSet,
    grid: &TimeGrid,
    denom_floor: f64,
) -> Result<EstimateCurve> {
    check(data, nu, grid, "if")?;
    let den = compliance_denominator(data, nu);
    let n = data.len() as f64;
    let num = grid
        .points()
        .iter()
        .map(|&t| {
            data.rows
                .iter()
                .enumerate()
                .map(|(i, o)| term_m(o, nu, i, 1, t) - term_m(o, nu, i, 0, t))
                .sum::<f64>()
                / n
        })
        .collect();
    Ok(EstimateCurve::from_ratio(
        grid.clone(),
        num,
        den,
        denom_floor,
    ))
}

pub fn estimate_ipw(
    data: &SurvivalDataset,
    nu: &NuisanceSet,
    grid: &TimeGrid,
    denom_floor: f64,
) -> Result<EstimateCurve> {
    check(data, nu, grid, "ipw")?;
    let n = data.len() as f64;
    // arm weights A I(Z=j)/delta_j and (1-A) I(Z=j)/delta_j
    let mut wa = [[0.0; 2]; 2];
    for (i, o) in data.rows.iter().enumerate() {
        let j = o.z as usize;
        let a = o.a as usize;
        wa[j][a] += 1.0 / nu.delta[i][j];
    }
    for row in &mut wa {
        for v in row.iter_mut() {
            *v /= n;
        }
    }
    let den = wa[1][1] - wa[0][1];
    let num = grid
        .points()
        .iter()
        .map(|&t| {
            // P_n(Y R I(A=a) I(Z=j) / (omega_{j,a} pi_j(a) delta_j))
            let mut s = [[0.0; 2]; 2];
            for (i, o) in data.rows.iter().enumerate() {
                if !o.event() {
                    continue;
                }
                let y = y_obs(o, t);
                if y == 0.0 {
                    continue;
                }
                let j = o.z as usize;
                let a = o.a as usize;
                let pa = if a == 1 {
                    nu.pi[i][j]
                } else {
                    1.0 - nu.pi[i][j]
                };
                s[j][a] += y / (nu.omega[i][j][a] * pa * nu.delta[i][j]);
            }
            let s = s.map(|r| r.map(|v| v / n));
            (s[1][1] * wa[1][1] + s[1][0] * wa[1][0]) - (s[0][1] * wa[0][1] + s[0][0] * wa[0][0])
        })
        .collect();
    Ok(EstimateCurve::from_ratio(
        grid.clone(),
        num,
        den,
        denom_floor,
    ))
}

pub fn estimate_plugin(
    data: &SurvivalDataset,
    nu: &NuisanceSet,
    grid: &TimeGrid,
    denom_floor: f64,
) -> Result<EstimateCurve> {
    check(data, nu, grid, "plugin")?;
    let n = data.len();
    let den = (0..n).map(|i| nu.pi[i][1] - nu.pi[i][0]).sum::<f64>() / n as f64;
    let num = grid
        .points()
        .iter()
        .map(|&t| {
            let arm = |i: usize, j: usize| {
                nu.mu(i, t, j, 1) * nu.pi[i][j] + nu.mu(i, t, j, 0) * (1.0 - nu.pi[i][j])
            };
            (0..n).map(|i| arm(i, 1)).sum::<f64>() / n as f64
                - (0..n).map(|i| arm(i, 0)).sum::<f64>() / n as f64
        })
        .collect();
    Ok(EstimateCurve::from_ratio(
        grid.clone(),
        num,
        den,
        denom_floor,
    ))
}
