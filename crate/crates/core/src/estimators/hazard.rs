//! Risk-set estimators built on discrete event and censoring hazards.

use crate::data::{risk_counters, IvKind, SurvivalDataset, TimeGrid};
use crate::error::{Error, Result};
use crate::nuisance::{HazardSet, Strata};

use super::binary::binary_denominator_from;
use super::EstimateCurve;

/// Accumulates the smallest censoring-survival weight seen.
struct WeightWatch {
    min_g: f64,
    floor: f64,
}

impl WeightWatch {
    fn new(floor: f64) -> Self {
        Self {
            min_g: f64::INFINITY,
            floor,
        }
    }

    fn see(&mut self, g: f64) {
        if g < self.min_g {
            self.min_g = g;
        }
    }

    fn finish(self, curve: &mut EstimateCurve) {
        if self.min_g.is_finite() {
            curve.diagnostics.min_cens_surv = Some(self.min_g);
            curve.diagnostics.positivity_warning = self.min_g < self.floor;
        }
    }
}

/// Hazard-martingale sum for subject `i` in stratum `s` up to `t`:
/// `sum_k at_risk_k / G_{k-1} * S_t / S_k * (event_k - h_k)`.
///
/// The caller supplies the `I(A = a)` (and instrument) indicators and the
/// propensity factor.
fn martingale_sum(
    data: &SurvivalDataset,
    hz: &HazardSet,
    s: usize,
    i: usize,
    t: usize,
    watch: &mut WeightWatch,
) -> f64 {
    let o = &data.rows[i];
    let st = hz.surv(s, i, t);
    let mut acc = 0.0;
    for k in 1..=t {
        let rc = risk_counters(o, k);
        if !rc.at_risk {
            break;
        }
        let g = hz.cens_surv(s, i, k - 1);
        watch.see(g);
        acc += st / (g * hz.surv(s, i, k)) * (rc.event as u8 as f64 - hz.h(s, i, k));
    }
    acc
}

fn check(
    data: &SurvivalDataset,
    hz: &HazardSet,
    grid: &TimeGrid,
    strata: Strata,
    name: &str,
) -> Result<()> {
    if data.iv_kind != IvKind::Binary {
        return Err(Error::IncompatibleEstimator {
            estimator: name.to_string(),
            iv_kind: data.iv_kind.to_string(),
        });
    }
    if hz.strata != strata {
        return Err(Error::Shape(format!(
            "{name} needs hazards stratified as {strata:?}"
        )));
    }
    if data.len() != hz.len() || grid.tau() > hz.tau {
        return Err(Error::Shape("hazard tables do not match the data".into()));
    }
    if data.rows.iter().any(|o| o.time.fract() != 0.0) {
        return Err(Error::Shape(format!(
            "{name} requires discretized follow-up times"
        )));
    }
    Ok(())
}

/// `Lambda^{A=a}(t)` for subject `i`; `t = 0` gives `S_0 = 1`.
pub fn naive_lambda(
    data: &SurvivalDataset,
    hz: &HazardSet,
    pi1: f64,
    i: usize,
    a: usize,
    t: usize,
) -> f64 {
    let mut watch = WeightWatch::new(0.0);
    naive_lambda_watched(data, hz, pi1, i, a, t, &mut watch)
}

fn naive_lambda_watched(
    data: &SurvivalDataset,
    hz: &HazardSet,
    pi1: f64,
    i: usize,
    a: usize,
    t: usize,
    watch: &mut WeightWatch,
) -> f64 {
    let st = hz.surv(a, i, t);
    if data.rows[i].a != a as f64 {
        return st;
    }
    let pa = if a == 1 { pi1 } else { 1.0 - pi1 };
    -martingale_sum(data, hz, a, i, t, watch) / pa + st
}

/// Doubly robust average-treatment-effect estimator on the survival scale.
/// It ignores the instrument and so targets the population contrast, not
/// the complier one.
pub fn estimate_naive_hazard(
    data: &SurvivalDataset,
    hz: &HazardSet,
    grid: &TimeGrid,
    trunc_eps: f64,
) -> Result<EstimateCurve> {
    check(data, hz, grid, Strata::Treatment, "naive_hazard")?;
    let pi = hz
        .pi_marginal
        .as_ref()
        .ok_or_else(|| Error::Shape("hazard set lacks a marginal propensity".into()))?;
    let n = data.len() as f64;
    let mut watch = WeightWatch::new(trunc_eps);
    let psi = grid
        .points()
        .iter()
        .map(|&t| {
            (0..data.len())
                .map(|i| {
                    naive_lambda_watched(data, hz, pi[i], i, 1, t, &mut watch)
                        - naive_lambda_watched(data, hz, pi[i], i, 0, t, &mut watch)
                })
                .sum::<f64>()
                / n
        })
        .collect();
    let mut curve = EstimateCurve::unflagged(grid.clone(), psi);
    watch.finish(&mut curve);
    Ok(curve)
}

/// `Lambda~^{Z=z}(t)` for subject `i`, summed over both treatment arms.
pub fn if_hazard_lambda(
    data: &SurvivalDataset,
    hz: &HazardSet,
    i: usize,
    z: usize,
    t: usize,
) -> f64 {
    let mut watch = WeightWatch::new(0.0);
    if_hazard_lambda_watched(data, hz, i, z, t, &mut watch)
}

fn if_hazard_lambda_watched(
    data: &SurvivalDataset,
    hz: &HazardSet,
    i: usize,
    z: usize,
    t: usize,
    watch: &mut WeightWatch,
) -> f64 {
    let props = hz.props.as_ref().expect("checked by caller");
    let o = &data.rows[i];
    let in_arm = o.z == z as f64;
    let delta = props.delta[i][z];
    let mut total = 0.0;
    for a in 0..2 {
        let s = 2 * z + a;
        let pza = if a == 1 {
            props.pi[i][z]
        } else {
            1.0 - props.pi[i][z]
        };
        let st = hz.surv(s, i, t);
        let ind_a = (o.a == a as f64) as u8 as f64;
        let mut v = st * pza;
        if in_arm {
            if ind_a == 1.0 {
                v -= martingale_sum(data, hz, s, i, t, watch) / (pza * delta);
            }
            v += st * (ind_a - pza) / delta;
        }
        total += v;
    }
    total
}

/// Complier estimator built on `(z, a)`-stratified hazards; shares the
/// compliance denominator of the influence-function estimator.
pub fn estimate_if_hazard(
    data: &SurvivalDataset,
    hz: &HazardSet,
    grid: &TimeGrid,
    trunc_eps: f64,
    denom_floor: f64,
) -> Result<EstimateCurve> {
    check(data, hz, grid, Strata::InstrumentTreatment, "if_hazard")?;
    let props = hz
        .props
        .as_ref()
        .ok_or_else(|| Error::Shape("hazard set lacks instrument propensities".into()))?;
    let den = binary_denominator_from(data, &props.pi, &props.delta);
    let n = data.len() as f64;
    let mut watch = WeightWatch::new(trunc_eps);
    let num = grid
        .points()
        .iter()
        .map(|&t| {
            (0..data.len())
                .map(|i| {
                    if_hazard_lambda_watched(data, hz, i, 1, t, &mut watch)
                        - if_hazard_lambda_watched(data, hz, i, 0, t, &mut watch)
                })
                .sum::<f64>()
                / n
        })
        .collect();
    let mut curve = EstimateCurve::from_ratio(grid.clone(), num, den, denom_floor);
    watch.finish(&mut curve);
    Ok(curve)
}
