//! Nuisance fits and the per-subject prediction tables consumed by the
//! estimators.
//!
//! Every fit takes a training sample and an evaluation sample so the same
//! code serves full-sample estimation (train = eval) and cross-fitting.

use serde::{Deserialize, Serialize};

use crate::data::{risk_counters, IvKind, SurvivalDataset};
use crate::error::{Error, Result};
use crate::features::Features;
use crate::learners::{
    fit_binary_bounded, fit_binary_model, BinaryModel, ConditionalDensity, EmptyRiskPolicy,
    HazardModel, LearnerConfig,
};
use crate::rng::derive_seed;

/// Which nuisance regression a covariate matrix feeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    /// `mu` and the event hazard `h`.
    Outcome,
    /// `omega` and the censoring hazard `g`.
    Censoring,
    /// `pi`.
    Treatment,
    /// `delta`.
    Instrument,
}

impl Role {
    pub const ALL: [Role; 4] = [
        Role::Outcome,
        Role::Censoring,
        Role::Treatment,
        Role::Instrument,
    ];

    fn tag(self) -> u64 {
        match self {
            Role::Outcome => 1,
            Role::Censoring => 2,
            Role::Treatment => 3,
            Role::Instrument => 4,
        }
    }
}

/// Covariate matrices per role, all with the same row order.
#[derive(Debug, Clone, PartialEq)]
pub struct RoleFeatures {
    pub outcome: Features,
    pub censoring: Features,
    pub treatment: Features,
    pub instrument: Features,
}

impl RoleFeatures {
    pub fn shared(x: Features) -> Self {
        Self {
            outcome: x.clone(),
            censoring: x.clone(),
            treatment: x.clone(),
            instrument: x,
        }
    }

    /// Uses `wrong` for the listed roles and `right` elsewhere.
    pub fn with_wrong(right: &Features, wrong: &Features, roles: &[Role]) -> Self {
        let pick = |r: Role| {
            if roles.contains(&r) {
                wrong.clone()
            } else {
                right.clone()
            }
        };
        Self {
            outcome: pick(Role::Outcome),
            censoring: pick(Role::Censoring),
            treatment: pick(Role::Treatment),
            instrument: pick(Role::Instrument),
        }
    }

    pub fn get(&self, role: Role) -> &Features {
        match role {
            Role::Outcome => &self.outcome,
            Role::Censoring => &self.censoring,
            Role::Treatment => &self.treatment,
            Role::Instrument => &self.instrument,
        }
    }

    pub fn select(&self, idx: &[usize]) -> Self {
        Self {
            outcome: self.outcome.select(idx),
            censoring: self.censoring.select(idx),
            treatment: self.treatment.select(idx),
            instrument: self.instrument.select(idx),
        }
    }

    pub fn rows(&self) -> usize {
        self.outcome.rows()
    }
}

/// A training sample and the rows predictions are wanted for.
#[derive(Debug, Clone, Copy)]
pub struct FitInput<'a> {
    pub train: &'a SurvivalDataset,
    pub train_x: &'a RoleFeatures,
    pub eval: &'a SurvivalDataset,
    pub eval_x: &'a RoleFeatures,
}

impl<'a> FitInput<'a> {
    /// Fit and evaluate on the same rows.
    pub fn full(data: &'a SurvivalDataset, x: &'a RoleFeatures) -> Self {
        Self {
            train: data,
            train_x: x,
            eval: data,
            eval_x: x,
        }
    }

    fn check(&self) -> Result<()> {
        if self.train_x.rows() != self.train.len() || self.eval_x.rows() != self.eval.len() {
            return Err(Error::Shape(
                "feature rows do not match dataset rows".into(),
            ));
        }
        Ok(())
    }
}

fn cell(what: &str, stratum: String) -> Error {
    Error::EmptyCell {
        what: what.to_string(),
        stratum,
    }
}

fn subset(x: &Features, idx: &[usize]) -> Features {
    x.select(idx)
}

/// Treatment propensity `pi_z` and instrument prevalence `delta_z` for a
/// binary instrument, evaluated on the eval rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Propensities {
    pub pi: Vec<[f64; 2]>,
    pub delta: Vec<[f64; 2]>,
}

pub fn fit_propensities(
    input: FitInput<'_>,
    cfg: &LearnerConfig,
    seed: u64,
) -> Result<Propensities> {
    input.check()?;
    let train = input.train;
    let zlab: Vec<f64> = train.rows.iter().map(|o| o.z).collect();
    let dmodel = fit_binary_model(
        &input.train_x.instrument,
        &zlab,
        cfg,
        derive_seed(seed, &[Role::Instrument.tag()]),
    )?;
    let d1 = dmodel.predict_all(&input.eval_x.instrument);
    let mut pi_models: Vec<Option<BinaryModel>> = Vec::with_capacity(2);
    for z in 0..2 {
        if z == 0 && cfg.one_sided {
            pi_models.push(None);
            continue;
        }
        let idx: Vec<usize> = (0..train.len())
            .filter(|&i| train.rows[i].z == z as f64)
            .collect();
        if idx.is_empty() {
            return Err(cell("pi", format!("z={z}")));
        }
        let y: Vec<f64> = idx.iter().map(|&i| train.rows[i].a).collect();
        let m = fit_binary_model(
            &subset(&input.train_x.treatment, &idx),
            &y,
            cfg,
            derive_seed(seed, &[Role::Treatment.tag(), z as u64]),
        )?;
        pi_models.push(Some(m));
    }
    let ev = &input.eval_x.treatment;
    let pi = (0..input.eval.len())
        .map(|i| {
            let p = |z: usize| pi_models[z].as_ref().map_or(0.0, |m| m.predict(ev.row(i)));
            [p(0), p(1)]
        })
        .collect();
    let delta = d1.iter().map(|&d| [1.0 - d, d]).collect();
    Ok(Propensities { pi, delta })
}

/// Per-subject predictions for the estimators that condition on `R = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct NuisanceSet {
    pub tau: usize,
    pub trunc_eps: f64,
    /// `mu[(i * tau + t - 1)][z][a]`
    pub mu: Vec<[[f64; 2]; 2]>,
    pub omega: Vec<[[f64; 2]; 2]>,
    pub pi: Vec<[f64; 2]>,
    pub delta: Vec<[f64; 2]>,
    pub one_sided: bool,
}

impl NuisanceSet {
    pub fn len(&self) -> usize {
        self.pi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pi.is_empty()
    }

    #[inline]
    pub fn mu(&self, i: usize, t: usize, z: usize, a: usize) -> f64 {
        self.mu[i * self.tau + t - 1][z][a]
    }

    /// Table with every entry set to the same constants; handy for fixtures.
    pub fn constant(n: usize, tau: usize, mu: f64, omega: f64, pi: [f64; 2], delta1: f64) -> Self {
        Self {
            tau,
            trunc_eps: 0.0,
            mu: vec![[[mu; 2]; 2]; n * tau],
            omega: vec![[[omega; 2]; 2]; n],
            pi: vec![pi; n],
            delta: vec![[1.0 - delta1, delta1]; n],
            one_sided: false,
        }
    }
}

/// Fits `mu_{t,z,a}`, `omega_{z,a}`, `pi_z` and `delta_z` for a binary
/// instrument.
pub fn fit_nuisance_set(
    input: FitInput<'_>,
    tau: usize,
    cfg: &LearnerConfig,
    seed: u64,
) -> Result<NuisanceSet> {
    input.check()?;
    if input.train.iv_kind != IvKind::Binary {
        return Err(Error::IncompatibleEstimator {
            estimator: "binary nuisance set".into(),
            iv_kind: input.train.iv_kind.to_string(),
        });
    }
    let props = fit_propensities(input, cfg, seed)?;
    let train = input.train;
    let n_eval = input.eval.len();
    let eps = cfg.trunc_eps;

    let cell_idx = |z: usize, a: usize, need_event: bool| -> Vec<usize> {
        (0..train.len())
            .filter(|&i| {
                let o = &train.rows[i];
                o.z == z as f64 && o.a == a as f64 && (!need_event || o.event())
            })
            .collect()
    };
    // (z, a) cells actually fitted; under one-sided noncompliance the
    // (0, 1) cell borrows the (0, 0) fits
    let source = |z: usize, a: usize| -> (usize, usize) {
        if cfg.one_sided && z == 0 && a == 1 {
            (0, 0)
        } else {
            (z, a)
        }
    };

    let mut omega = vec![[[0.0; 2]; 2]; n_eval];
    for z in 0..2 {
        for a in 0..2 {
            if source(z, a) != (z, a) {
                continue;
            }
            let idx = cell_idx(z, a, false);
            if idx.is_empty() {
                return Err(cell("omega", format!("z={z},a={a}")));
            }
            let y: Vec<f64> = idx.iter().map(|&i| train.rows[i].r).collect();
            let m = fit_binary_model(
                &subset(&input.train_x.censoring, &idx),
                &y,
                cfg,
                derive_seed(seed, &[Role::Censoring.tag(), z as u64, a as u64]),
            )?;
            let p = m.predict_all(&input.eval_x.censoring);
            for i in 0..n_eval {
                omega[i][z][a] = p[i];
            }
        }
    }
    if cfg.one_sided {
        for row in &mut omega {
            row[0][1] = row[0][0];
        }
    }

    let mut mu = vec![[[0.0; 2]; 2]; n_eval * tau];
    for z in 0..2 {
        for a in 0..2 {
            if source(z, a) != (z, a) {
                continue;
            }
            let idx = cell_idx(z, a, true);
            if idx.is_empty() {
                return Err(cell("mu", format!("r=1,z={z},a={a}")));
            }
            let xs = subset(&input.train_x.outcome, &idx);
            let mut y = vec![0.0; idx.len()];
            for t in 1..=tau {
                for (k, &i) in idx.iter().enumerate() {
                    y[k] = (train.rows[i].time > t as f64) as u8 as f64;
                }
                let m = fit_binary_model(
                    &xs,
                    &y,
                    cfg,
                    derive_seed(seed, &[Role::Outcome.tag(), t as u64, z as u64, a as u64]),
                )?;
                for i in 0..n_eval {
                    mu[i * tau + t - 1][z][a] = m.predict(input.eval_x.outcome.row(i));
                }
            }
        }
    }
    if cfg.one_sided {
        for row in &mut mu {
            row[0][1] = row[0][0];
        }
    }

    Ok(NuisanceSet {
        tau,
        trunc_eps: eps,
        mu,
        omega,
        pi: props.pi,
        delta: props.delta,
        one_sided: cfg.one_sided,
    })
}

/// How hazard strata are formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strata {
    /// Two strata by treatment arm (ignores the instrument).
    Treatment,
    /// Four strata by `(z, a)`, index `2 z + a`.
    InstrumentTreatment,
}

impl Strata {
    pub fn count(self) -> usize {
        match self {
            Strata::Treatment => 2,
            Strata::InstrumentTreatment => 4,
        }
    }

    fn label(self, s: usize) -> String {
        match self {
            Strata::Treatment => format!("a={s}"),
            Strata::InstrumentTreatment => format!("z={},a={}", s / 2, s % 2),
        }
    }

    fn contains(self, s: usize, z: f64, a: f64) -> bool {
        match self {
            Strata::Treatment => a == s as f64,
            Strata::InstrumentTreatment => z == (s / 2) as f64 && a == (s % 2) as f64,
        }
    }
}

/// Discrete hazards and their survival products for one stratum, stored as
/// `n x (tau + 1)` row-major tables with index `k = 0` holding `h = g = 0`
/// and `S = G = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct StratumHazards {
    pub h: Vec<f64>,
    pub g: Vec<f64>,
    pub surv: Vec<f64>,
    pub cens_surv: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HazardSet {
    pub tau: usize,
    pub strata: Strata,
    pub tables: Vec<StratumHazards>,
    /// `P(A = 1 | X)` ignoring the instrument (treatment strata only).
    pub pi_marginal: Option<Vec<f64>>,
    /// `pi_z` and `delta_z` (instrument strata only).
    pub props: Option<Propensities>,
    pub one_sided: bool,
}

impl HazardSet {
    pub fn len(&self) -> usize {
        self.tables[0].h.len() / (self.tau + 1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    fn at(&self, i: usize, k: usize) -> usize {
        i * (self.tau + 1) + k
    }

    #[inline]
    pub fn h(&self, s: usize, i: usize, k: usize) -> f64 {
        self.tables[s].h[self.at(i, k)]
    }

    #[inline]
    pub fn g(&self, s: usize, i: usize, k: usize) -> f64 {
        self.tables[s].g[self.at(i, k)]
    }

    #[inline]
    pub fn surv(&self, s: usize, i: usize, k: usize) -> f64 {
        self.tables[s].surv[self.at(i, k)]
    }

    #[inline]
    pub fn cens_surv(&self, s: usize, i: usize, k: usize) -> f64 {
        self.tables[s].cens_surv[self.at(i, k)]
    }

    /// Builds tables from raw hazards `h[s][i][k-1]`, `g[s][i][k-1]`.
    pub fn from_hazards(
        tau: usize,
        strata: Strata,
        h: &[Vec<Vec<f64>>],
        g: &[Vec<Vec<f64>>],
    ) -> Self {
        let tables = h
            .iter()
            .zip(g)
            .map(|(hs, gs)| build_stratum(tau, hs, gs))
            .collect();
        Self {
            tau,
            strata,
            tables,
            pi_marginal: None,
            props: None,
            one_sided: false,
        }
    }

    /// Largest violation of the product recursions over every entry.
    pub fn max_recursion_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for tab in &self.tables {
            for i in 0..self.len() {
                let o = i * (self.tau + 1);
                worst = worst
                    .max((tab.surv[o] - 1.0).abs())
                    .max((tab.cens_surv[o] - 1.0).abs());
                for k in 1..=self.tau {
                    let e1 = tab.surv[o + k] - tab.surv[o + k - 1] * (1.0 - tab.h[o + k]);
                    let e2 = tab.cens_surv[o + k] - tab.cens_surv[o + k - 1] * (1.0 - tab.g[o + k]);
                    worst = worst.max(e1.abs()).max(e2.abs());
                }
            }
        }
        worst
    }
}

fn build_stratum(tau: usize, h: &[Vec<f64>], g: &[Vec<f64>]) -> StratumHazards {
    let n = h.len();
    let w = tau + 1;
    let mut out = StratumHazards {
        h: vec![0.0; n * w],
        g: vec![0.0; n * w],
        surv: vec![1.0; n * w],
        cens_surv: vec![1.0; n * w],
    };
    for i in 0..n {
        let o = i * w;
        for k in 1..=tau {
            out.h[o + k] = h[i][k - 1];
            out.g[o + k] = g[i][k - 1];
            out.surv[o + k] = out.surv[o + k - 1] * (1.0 - h[i][k - 1]);
            out.cens_surv[o + k] = out.cens_surv[o + k - 1] * (1.0 - g[i][k - 1]);
        }
    }
    out
}

fn time_basis(k: usize) -> [f64; 2] {
    let l = (k as f64).ln();
    [l, l * l]
}

/// Fits event and censoring hazards per stratum (times must be discretized).
pub fn fit_hazard_set(
    input: FitInput<'_>,
    tau: usize,
    strata: Strata,
    cfg: &LearnerConfig,
    seed: u64,
) -> Result<HazardSet> {
    input.check()?;
    let train = input.train;
    let n_eval = input.eval.len();
    let hi = 1.0 - cfg.trunc_eps;
    let mut h_all = Vec::with_capacity(strata.count());
    let mut g_all = Vec::with_capacity(strata.count());
    for s in 0..strata.count() {
        let members: Vec<usize> = (0..train.len())
            .filter(|&i| strata.contains(s, train.rows[i].z, train.rows[i].a))
            .collect();
        let borrowed = cfg.one_sided && strata == Strata::InstrumentTreatment && s == 1;
        if borrowed {
            // (z=0, a=1) is structurally empty; filled from (0, 0) below
            h_all.push(Vec::new());
            g_all.push(Vec::new());
            continue;
        }
        if members.is_empty() {
            return Err(Error::EmptyRiskSet {
                k: 1,
                stratum: strata.label(s),
            });
        }
        let tag = |role: Role, k: usize| derive_seed(seed, &[role.tag(), 100 + s as u64, k as u64]);
        let mut h = vec![vec![0.0; tau]; n_eval];
        let mut g = vec![vec![0.0; tau]; n_eval];
        match cfg.hazard_model {
            HazardModel::PerTime => {
                let mut last_h: Option<BinaryModel> = None;
                for k in 1..=tau {
                    let risk: Vec<usize> = members
                        .iter()
                        .copied()
                        .filter(|&i| risk_counters(&train.rows[i], k).at_risk)
                        .collect();
                    if risk.is_empty() {
                        match cfg.empty_risk {
                            EmptyRiskPolicy::Fail => {
                                return Err(Error::EmptyRiskSet {
                                    k,
                                    stratum: strata.label(s),
                                })
                            }
                            EmptyRiskPolicy::CarryForward => {
                                let m = last_h.as_ref().expect("k = 1 risk set is the stratum");
                                for i in 0..n_eval {
                                    h[i][k - 1] = m.predict(input.eval_x.outcome.row(i));
                                }
                                continue;
                            }
                        }
                    }
                    let ev: Vec<f64> = risk
                        .iter()
                        .map(|&i| risk_counters(&train.rows[i], k).event as u8 as f64)
                        .collect();
                    let ce: Vec<f64> = risk
                        .iter()
                        .map(|&i| risk_counters(&train.rows[i], k).censored as u8 as f64)
                        .collect();
                    let mh = fit_binary_bounded(
                        &subset(&input.train_x.outcome, &risk),
                        &ev,
                        cfg,
                        0.0,
                        hi,
                        tag(Role::Outcome, k),
                    )?;
                    let mg = fit_binary_bounded(
                        &subset(&input.train_x.censoring, &risk),
                        &ce,
                        cfg,
                        0.0,
                        hi,
                        tag(Role::Censoring, k),
                    )?;
                    for i in 0..n_eval {
                        h[i][k - 1] = mh.predict(input.eval_x.outcome.row(i));
                        g[i][k - 1] = mg.predict(input.eval_x.censoring.row(i));
                    }
                    last_h = Some(mh);
                }
            }
            HazardModel::Pooled => {
                let q_h = input.train_x.outcome.cols();
                let q_g = input.train_x.censoring.cols();
                let mut xh = Vec::new();
                let mut xg = Vec::new();
                let mut ev = Vec::new();
                let mut ce = Vec::new();
                for k in 1..=tau {
                    let b = time_basis(k);
                    for &i in &members {
                        let rc = risk_counters(&train.rows[i], k);
                        if !rc.at_risk {
                            continue;
                        }
                        xh.extend_from_slice(input.train_x.outcome.row(i));
                        xh.extend_from_slice(&b);
                        xg.extend_from_slice(input.train_x.censoring.row(i));
                        xg.extend_from_slice(&b);
                        ev.push(rc.event as u8 as f64);
                        ce.push(rc.censored as u8 as f64);
                    }
                }
                let rows = ev.len();
                let mh = fit_binary_bounded(
                    &Features::new(rows, q_h + 2, xh),
                    &ev,
                    cfg,
                    0.0,
                    hi,
                    tag(Role::Outcome, 0),
                )?;
                let mg = fit_binary_bounded(
                    &Features::new(rows, q_g + 2, xg),
                    &ce,
                    cfg,
                    0.0,
                    hi,
                    tag(Role::Censoring, 0),
                )?;
                let mut rh = Vec::with_capacity(q_h + 2);
                let mut rg = Vec::with_capacity(q_g + 2);
                for i in 0..n_eval {
                    for k in 1..=tau {
                        let b = time_basis(k);
                        rh.clear();
                        rh.extend_from_slice(input.eval_x.outcome.row(i));
                        rh.extend_from_slice(&b);
                        rg.clear();
                        rg.extend_from_slice(input.eval_x.censoring.row(i));
                        rg.extend_from_slice(&b);
                        h[i][k - 1] = mh.predict(&rh);
                        g[i][k - 1] = mg.predict(&rg);
                    }
                }
            }
        }
        h_all.push(h);
        g_all.push(g);
    }
    if cfg.one_sided && strata == Strata::InstrumentTreatment {
        h_all[1] = h_all[0].clone();
        g_all[1] = g_all[0].clone();
    }
    let mut set = HazardSet::from_hazards(tau, strata, &h_all, &g_all);
    set.one_sided = cfg.one_sided && strata == Strata::InstrumentTreatment;
    match strata {
        Strata::Treatment => {
            let a: Vec<f64> = train.rows.iter().map(|o| o.a).collect();
            let m = fit_binary_model(
                &input.train_x.treatment,
                &a,
                cfg,
                derive_seed(seed, &[Role::Treatment.tag(), 7]),
            )?;
            set.pi_marginal = Some(m.predict_all(&input.eval_x.treatment));
        }
        Strata::InstrumentTreatment => {
            set.props = Some(fit_propensities(input, cfg, seed)?);
        }
    }
    Ok(set)
}

/// Nuisances for a continuous instrument evaluated at `Z`, `Z_{+kappa}` and
/// `Z_{-kappa}`.
///
/// Shift index: 0 = at `Z`, 1 = at `Z_{+kappa}`, 2 = at `Z_{-kappa}`. The
/// shifted points are clamped per the support rule: `Z + kappa` is used only
/// when it stays below `z_max`, `Z - kappa` only when it stays above `z_min`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftNuisanceSet {
    pub tau: usize,
    pub kappa: f64,
    pub z_range: (f64, f64),
    /// `mu[(i * tau + t - 1)][shift][a]`
    pub mu: Vec<[[f64; 2]; 3]>,
    /// `omega_{Z,a}` at the observed instrument.
    pub omega: Vec<[f64; 2]>,
    /// `pi` at each shift.
    pub pi: Vec<[f64; 3]>,
    /// `delta(Z)`, `delta(Z - kappa)`, `delta(Z + kappa)`.
    pub dens: Vec<[f64; 3]>,
    /// `Z + kappa >= z_max`
    pub upper_boundary: Vec<bool>,
    /// `Z - kappa <= z_min`
    pub lower_boundary: Vec<bool>,
}

impl ShiftNuisanceSet {
    pub fn len(&self) -> usize {
        self.pi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pi.is_empty()
    }

    #[inline]
    pub fn mu(&self, i: usize, t: usize, shift: usize, a: usize) -> f64 {
        self.mu[i * self.tau + t - 1][shift][a]
    }
}

/// Checks `0 < 2 kappa < z_max - z_min`.
pub fn check_kappa(kappa: f64, z_range: (f64, f64)) -> Result<()> {
    let range = z_range.1 - z_range.0;
    if !(kappa > 0.0 && 2.0 * kappa < range) {
        return Err(Error::KappaNonPositive { kappa, range });
    }
    Ok(())
}

/// Shifted evaluation points `(Z_{+kappa}, Z_{-kappa})` and boundary flags.
pub fn shifted_points(z: f64, kappa: f64, z_range: (f64, f64)) -> (f64, f64, bool, bool) {
    let upper = z + kappa >= z_range.1;
    let lower = z - kappa <= z_range.0;
    let zp = if upper { z } else { z + kappa };
    let zm = if lower { z } else { z - kappa };
    (zp, zm, upper, lower)
}

/// Fits the continuous-instrument nuisances. `z_range` is the support used
/// for the boundary rule (the full-sample extremes under cross-fitting).
pub fn fit_shift_nuisance_set(
    input: FitInput<'_>,
    tau: usize,
    kappa: f64,
    z_range: (f64, f64),
    cfg: &LearnerConfig,
    seed: u64,
) -> Result<ShiftNuisanceSet> {
    input.check()?;
    if input.train.iv_kind != IvKind::Continuous {
        return Err(Error::IncompatibleEstimator {
            estimator: "continuous nuisance set".into(),
            iv_kind: input.train.iv_kind.to_string(),
        });
    }
    check_kappa(kappa, z_range)?;
    let train = input.train;
    let eval = input.eval;
    let n_eval = eval.len();
    let ztrain: Vec<f64> = train.rows.iter().map(|o| o.z).collect();

    let density = ConditionalDensity::fit(
        &input.train_x.instrument,
        &ztrain,
        cfg.density,
        cfg.trunc_eps,
    )?;
    let mut dens = Vec::with_capacity(n_eval);
    let mut points = Vec::with_capacity(n_eval);
    let mut upper_boundary = Vec::with_capacity(n_eval);
    let mut lower_boundary = Vec::with_capacity(n_eval);
    for (i, o) in eval.rows.iter().enumerate() {
        let x = input.eval_x.instrument.row(i);
        dens.push([
            density.density(o.z, x),
            density.density(o.z - kappa, x),
            density.density(o.z + kappa, x),
        ]);
        let (zp, zm, up, lo) = shifted_points(o.z, kappa, z_range);
        points.push([o.z, zp, zm]);
        upper_boundary.push(up);
        lower_boundary.push(lo);
    }

    let train_zx = |f: &Features, idx: &[usize]| -> Features {
        let z: Vec<f64> = idx.iter().map(|&i| ztrain[i]).collect();
        f.select(idx).with_column(&z)
    };
    let eval_row = |f: &Features, i: usize, z: f64, buf: &mut Vec<f64>| {
        buf.clear();
        buf.extend_from_slice(f.row(i));
        buf.push(z);
    };
    let mut buf = Vec::new();

    let all: Vec<usize> = (0..train.len()).collect();
    let a_lab: Vec<f64> = train.rows.iter().map(|o| o.a).collect();
    let pim = fit_binary_model(
        &train_zx(&input.train_x.treatment, &all),
        &a_lab,
        cfg,
        derive_seed(seed, &[Role::Treatment.tag()]),
    )?;
    let mut pi = vec![[0.0; 3]; n_eval];
    for i in 0..n_eval {
        for s in 0..3 {
            eval_row(&input.eval_x.treatment, i, points[i][s], &mut buf);
            pi[i][s] = pim.predict(&buf);
        }
    }

    let mut omega = vec![[0.0; 2]; n_eval];
    let mut mu = vec![[[0.0; 2]; 3]; n_eval * tau];
    for a in 0..2 {
        let idx: Vec<usize> = (0..train.len())
            .filter(|&i| train.rows[i].a == a as f64)
            .collect();
        if idx.is_empty() {
            return Err(cell("omega", format!("a={a}")));
        }
        let r: Vec<f64> = idx.iter().map(|&i| train.rows[i].r).collect();
        let om = fit_binary_model(
            &train_zx(&input.train_x.censoring, &idx),
            &r,
            cfg,
            derive_seed(seed, &[Role::Censoring.tag(), a as u64]),
        )?;
        for i in 0..n_eval {
            eval_row(&input.eval_x.censoring, i, points[i][0], &mut buf);
            omega[i][a] = om.predict(&buf);
        }

        let idx: Vec<usize> = idx.into_iter().filter(|&i| train.rows[i].event()).collect();
        if idx.is_empty() {
            return Err(cell("mu", format!("r=1,a={a}")));
        }
        let xs = train_zx(&input.train_x.outcome, &idx);
        let mut y = vec![0.0; idx.len()];
        for t in 1..=tau {
            for (k, &i) in idx.iter().enumerate() {
                y[k] = (train.rows[i].time > t as f64) as u8 as f64;
            }
            let m = fit_binary_model(
                &xs,
                &y,
                cfg,
                derive_seed(seed, &[Role::Outcome.tag(), t as u64, a as u64]),
            )?;
            for i in 0..n_eval {
                for s in 0..3 {
                    eval_row(&input.eval_x.outcome, i, points[i][s], &mut buf);
                    mu[i * tau + t - 1][s][a] = m.predict(&buf);
                }
            }
        }
    }

    Ok(ShiftNuisanceSet {
        tau,
        kappa,
        z_range,
        mu,
        omega,
        pi,
        dens,
        upper_boundary,
        lower_boundary,
    })
}
