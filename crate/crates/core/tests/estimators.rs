//! Estimator arithmetic against independent evaluations, reductions and
//! structural invariants.

mod common;

use common::fixture;
use ivsurv::crossfit::{crossfit_curves, EstimationSettings};
use ivsurv::estimators::hazard::{if_hazard_lambda, naive_lambda};
use ivsurv::estimators::{
    estimate_if_binary, estimate_if_continuous, estimate_if_hazard, estimate_ipw,
    estimate_naive_hazard, estimate_plugin, term_m, term_pi,
};
use ivsurv::nuisance::{
    check_kappa, HazardSet, NuisanceSet, Propensities, ShiftNuisanceSet, Strata,
};
use ivsurv::rng::stream;
use ivsurv::{Error, EstimatorKind, IvKind, Observation, RoleFeatures, SurvivalDataset, TimeGrid};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

#[test]
fn six_row_fixture_matches_direct_arithmetic() {
    for (name, gap) in fixture::fixture_gaps() {
        assert!(gap < 1e-12, "{name}: gap {gap:e}");
    }
}

#[test]
fn fixture_row_terms_match_hand_values() {
    let d = fixture::data();
    let nu = fixture::nuisances();
    // row 0: z = 1, a = 1, time 2, r = 1; at t = 1 it survives
    let (m1, m0, p, dl, w) = (
        fixture::mu(0, 1, 1, 1),
        fixture::mu(0, 1, 1, 0),
        fixture::pi(0, 1),
        fixture::delta(0, 1),
        fixture::omega(0, 1, 1),
    );
    let hand =
        m1 * p + m0 * (1.0 - p) + ((1.0 - m1) / w + m1 * (1.0 - p) + m0 * (0.0 - (1.0 - p))) / dl;
    assert!((term_m(&d.rows[0], &nu, 0, 1, 1) - hand).abs() < 1e-12);
    assert!((term_pi(&d.rows[0], &nu, 0, 1) - ((1.0 - p) / dl + p)).abs() < 1e-12);
    // the other arm only keeps the regression part
    let p0 = fixture::pi(0, 0);
    let other = fixture::mu(0, 1, 0, 1) * p0 + fixture::mu(0, 1, 0, 0) * (1.0 - p0);
    assert!((term_m(&d.rows[0], &nu, 0, 0, 1) - other).abs() < 1e-15);
    assert_eq!(term_pi(&d.rows[0], &nu, 0, 0), p0);
}

#[test]
fn aipw_reduction_under_perfect_compliance() {
    let gap = fixture::aipw_gap(20, 50);
    assert!(gap < 1e-12, "gap {gap:e}");
}

#[test]
fn unit_outcome_gives_a_null_curve() {
    let rows: Vec<Observation> = (0..8)
        .map(|i| {
            let z = (i % 2) as f64;
            Observation::new(vec![i as f64], z, z, 100.0, (i % 3 != 0) as u8 as f64)
        })
        .collect();
    let d = SurvivalDataset::new(rows, 4, IvKind::Binary);
    let nu = NuisanceSet::constant(8, 4, 1.0, 0.8, [0.3, 0.7], 0.5);
    let grid = TimeGrid::unit(4);
    let c = estimate_if_binary(&d, &nu, &grid, 1e-3).unwrap();
    assert!(c.psi.iter().all(|v| v.abs() < 1e-15), "{:?}", c.psi);
}

#[test]
fn ipw_reduces_to_horvitz_thompson_under_perfect_compliance() {
    let mut rng = stream(4, &[]);
    let n = 40;
    let rows: Vec<Observation> = (0..n)
        .map(|i| {
            let z = (i % 2) as f64;
            Observation::new(vec![0.0], z, z, 1.0 + 10.0 * rng.random::<f64>(), 1.0)
        })
        .collect();
    let d = SurvivalDataset::new(rows, 8, IvKind::Binary);
    let nu = NuisanceSet::constant(n, 8, 0.5, 1.0, [0.0, 1.0], 0.5);
    let grid = TimeGrid::unit(8);
    let c = estimate_ipw(&d, &nu, &grid, 1e-3).unwrap();
    for t in 1..=8 {
        let ht = |arm: f64| {
            d.rows
                .iter()
                .filter(|o| o.z == arm)
                .map(|o| (o.time > t as f64) as u8 as f64 / 0.5)
                .sum::<f64>()
                / n as f64
        };
        assert!((c.psi[t - 1] - (ht(1.0) - ht(0.0))).abs() < 1e-12);
    }
}

#[test]
fn ipw_with_no_survivors_is_zero() {
    let mut d = fixture::data();
    for o in &mut d.rows {
        o.time = 1.0;
        o.r = 1.0;
    }
    let c = estimate_ipw(&d, &fixture::nuisances(), &TimeGrid::unit(3), 1e-3).unwrap();
    assert_eq!(c.psi, vec![0.0; 3]);
}

#[test]
fn plugin_with_constant_outcome_regression_is_zero() {
    let d = fixture::data();
    let mut nu = fixture::nuisances();
    for m in &mut nu.mu {
        *m = [[0.42; 2]; 2];
    }
    let c = estimate_plugin(&d, &nu, &TimeGrid::unit(3), 1e-3).unwrap();
    assert!(c.psi.iter().all(|v| v.abs() < 1e-15));
}

#[test]
fn naive_hazard_starts_from_one_at_time_zero() {
    let d = fixture::data();
    let hz = fixture::hazards(Strata::Treatment);
    for i in 0..d.len() {
        for a in 0..2 {
            assert_eq!(naive_lambda(&d, &hz, 0.5, i, a, 0), 1.0);
        }
    }
}

#[test]
fn symmetric_instrument_arms_cancel_in_the_hazard_numerator() {
    // each row appears once per instrument arm; hazards and propensities
    // ignore the instrument
    let base = [
        (1.0, 2.0, 1.0),
        (0.0, 3.0, 0.0),
        (1.0, 1.0, 1.0),
        (0.0, 2.0, 1.0),
    ];
    let mut rows = Vec::new();
    for z in [0.0, 1.0] {
        for (i, &(a, time, r)) in base.iter().enumerate() {
            rows.push(Observation::new(vec![i as f64], z, a, time, r));
        }
    }
    let d = SurvivalDataset::new(rows, 3, IvKind::Binary);
    let n = d.len();
    let haz = |i: usize, k: usize, a: usize| {
        0.1 + 0.02 * (i % 4) as f64 + 0.03 * k as f64 + 0.05 * a as f64
    };
    let table = |c: f64| -> Vec<Vec<Vec<f64>>> {
        (0..4)
            .map(|s| {
                (0..n)
                    .map(|i| (1..=3).map(|k| c * haz(i, k, s % 2)).collect())
                    .collect()
            })
            .collect()
    };
    let mut hz = HazardSet::from_hazards(3, Strata::InstrumentTreatment, &table(1.0), &table(0.5));
    hz.props = Some(Propensities {
        pi: (0..n).map(|i| [0.3 + 0.1 * (i % 4) as f64; 2]).collect(),
        delta: vec![[0.5, 0.5]; n],
    });
    for t in 1..=3 {
        let num: f64 = (0..n)
            .map(|i| if_hazard_lambda(&d, &hz, i, 1, t) - if_hazard_lambda(&d, &hz, i, 0, t))
            .sum();
        assert!(num.abs() < 1e-12, "t={t}: {num:e}");
    }
}

#[test]
fn kappa_must_be_positive() {
    assert!(matches!(
        check_kappa(0.0, (-2.0, 2.0)),
        Err(Error::KappaNonPositive { .. })
    ));
    assert!(matches!(
        check_kappa(2.5, (-2.0, 2.0)),
        Err(Error::KappaNonPositive { .. })
    ));
    assert!(EstimatorKind::IfContinuous { kappa: 0.0 }
        .check_compatible(IvKind::Continuous)
        .is_err());
}

#[test]
fn continuous_estimator_without_outcome_effect_is_zero() {
    let n = 6;
    let rows: Vec<Observation> = (0..n)
        .map(|i| {
            Observation::new(
                vec![0.0],
                i as f64 - 2.5,
                (i % 2) as f64,
                2.0 + i as f64,
                (i % 3 != 2) as u8 as f64,
            )
        })
        .collect();
    let d = SurvivalDataset::new(rows, 3, IvKind::Continuous);
    let nu = ShiftNuisanceSet {
        tau: 3,
        kappa: 0.5,
        z_range: d.z_range(),
        mu: vec![[[0.6; 2]; 3]; n * 3],
        omega: vec![[0.8, 0.7]; n],
        pi: vec![[0.4, 0.6, 0.2]; n],
        dens: vec![[0.3; 3]; n],
        upper_boundary: (0..n).map(|i| i == n - 1).collect(),
        lower_boundary: (0..n).map(|i| i == 0).collect(),
    };
    let c = estimate_if_continuous(&d, &nu, &TimeGrid::unit(3), 1e-3).unwrap();
    assert!(!c.weak_instrument);
    assert!(c.psi.iter().all(|v| v.abs() < 1e-15), "{:?}", c.psi);
    assert_eq!(c.diagnostics.boundary_subjects, 2);
}

#[test]
fn binary_estimator_rejects_a_continuous_dataset() {
    let d = common::simple_continuous(50, 5, 1);
    let roles = RoleFeatures::shared(d.covariates());
    let settings = EstimationSettings {
        folds: 1,
        ..Default::default()
    };
    let out = crossfit_curves(
        &d,
        &roles,
        &[EstimatorKind::IfBinary],
        &TimeGrid::unit(5),
        &settings,
    );
    assert!(matches!(out[0], Err(Error::IncompatibleEstimator { .. })));
}

#[test]
fn shared_denominator_between_if_and_if_hazard() {
    let d = common::simple_binary(400, 10, 2).discretize_times();
    let roles = RoleFeatures::shared(d.covariates());
    let settings = EstimationSettings {
        folds: 1,
        ..Default::default()
    };
    let out = crossfit_curves(
        &d,
        &roles,
        &[EstimatorKind::IfBinary, EstimatorKind::IfHazard],
        &TimeGrid::unit(10),
        &settings,
    );
    let a = out[0].as_ref().unwrap();
    let b = out[1].as_ref().unwrap();
    assert_eq!(a.denominator.to_bits(), b.denominator.to_bits());
}

#[test]
fn weak_denominator_is_flagged_not_returned() {
    // the instrument does not move the treatment propensity
    let nu = NuisanceSet::constant(6, 3, 0.5, 0.8, [0.4, 0.4], 0.5);
    let c = estimate_plugin(&fixture::data(), &nu, &TimeGrid::unit(3), 1e-3).unwrap();
    assert!(c.weak_instrument);
    assert!(c.psi.iter().all(|v| v.is_nan()));
    assert!(matches!(
        c.check_strength(1e-3),
        Err(Error::WeakInstrument { .. })
    ));
}

fn random_nuisances(n: usize, tau: usize, seed: u64) -> (NuisanceSet, HazardSet, HazardSet) {
    let mut rng = stream(seed, &[0x9A]);
    let mut u = |lo: f64, hi: f64| lo + (hi - lo) * rng.random::<f64>();
    let mut nu = NuisanceSet::constant(n, tau, 0.0, 0.0, [0.0; 2], 0.0);
    for v in &mut nu.mu {
        *v = [
            [u(0.05, 0.95), u(0.05, 0.95)],
            [u(0.05, 0.95), u(0.05, 0.95)],
        ];
    }
    for i in 0..n {
        nu.omega[i] = [[u(0.3, 0.95), u(0.3, 0.95)], [u(0.3, 0.95), u(0.3, 0.95)]];
        nu.pi[i] = [u(0.05, 0.4), u(0.6, 0.95)];
        let d1 = u(0.2, 0.8);
        nu.delta[i] = [1.0 - d1, d1];
    }
    let mut table = |s: usize| -> Vec<Vec<Vec<f64>>> {
        (0..s)
            .map(|_| {
                (0..n)
                    .map(|_| (0..tau).map(|_| u(0.01, 0.3)).collect())
                    .collect()
            })
            .collect()
    };
    let (h2, g2, h4, g4) = (table(2), table(2), table(4), table(4));
    let mut naive = HazardSet::from_hazards(tau, Strata::Treatment, &h2, &g2);
    naive.pi_marginal = Some(nu.pi.iter().map(|p| 0.5 * (p[0] + p[1])).collect());
    let mut ifh = HazardSet::from_hazards(tau, Strata::InstrumentTreatment, &h4, &g4);
    ifh.props = Some(Propensities {
        pi: nu.pi.clone(),
        delta: nu.delta.clone(),
    });
    (nu, naive, ifh)
}

fn all_curves(
    d: &SurvivalDataset,
    nu: &NuisanceSet,
    naive: &HazardSet,
    ifh: &HazardSet,
) -> Vec<Vec<f64>> {
    let grid = TimeGrid::unit(nu.tau);
    vec![
        estimate_if_binary(d, nu, &grid, 1e-3).unwrap().psi,
        estimate_ipw(d, nu, &grid, 1e-3).unwrap().psi,
        estimate_plugin(d, nu, &grid, 1e-3).unwrap().psi,
        estimate_naive_hazard(d, naive, &grid, 0.01).unwrap().psi,
        estimate_if_hazard(d, ifh, &grid, 0.01, 1e-3).unwrap().psi,
    ]
}

fn permute_hazards(hz: &HazardSet, perm: &[usize]) -> HazardSet {
    let tau = hz.tau;
    let pick = |v: &Vec<f64>| -> Vec<Vec<f64>> {
        perm.iter()
            .map(|&i| v[i * (tau + 1) + 1..(i + 1) * (tau + 1)].to_vec())
            .collect()
    };
    let h: Vec<_> = hz.tables.iter().map(|t| pick(&t.h)).collect();
    let g: Vec<_> = hz.tables.iter().map(|t| pick(&t.g)).collect();
    let mut out = HazardSet::from_hazards(tau, hz.strata, &h, &g);
    out.pi_marginal = hz
        .pi_marginal
        .as_ref()
        .map(|p| perm.iter().map(|&i| p[i]).collect());
    out.props = hz.props.as_ref().map(|p| Propensities {
        pi: perm.iter().map(|&i| p.pi[i]).collect(),
        delta: perm.iter().map(|&i| p.delta[i]).collect(),
    });
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn estimates_ignore_subject_order(seed in 0u64..10_000) {
        let tau = 6;
        let d = common::simple_binary(60, tau, seed).discretize_times();
        let (nu, naive, ifh) = random_nuisances(d.len(), tau, seed);
        let before = all_curves(&d, &nu, &naive, &ifh);

        let mut perm: Vec<usize> = (0..d.len()).collect();
        perm.shuffle(&mut stream(seed, &[0x5A]));
        let d2 = d.select(&perm);
        let mut nu2 = nu.clone();
        nu2.mu = perm.iter().flat_map(|&i| nu.mu[i * tau..(i + 1) * tau].to_vec()).collect();
        nu2.omega = perm.iter().map(|&i| nu.omega[i]).collect();
        nu2.pi = perm.iter().map(|&i| nu.pi[i]).collect();
        nu2.delta = perm.iter().map(|&i| nu.delta[i]).collect();
        let after = all_curves(&d2, &nu2, &permute_hazards(&naive, &perm), &permute_hazards(&ifh, &perm));
        for (b, a) in before.iter().zip(&after) {
            for (x, y) in b.iter().zip(a) {
                prop_assert!((x - y).abs() < 1e-10, "{} vs {}", x, y);
            }
        }
    }

    #[test]
    fn fitted_estimates_are_ratios_of_bounded_averages(seed in 0u64..10_000) {
        // only the plug-in numerator is an average of terms in [-1, 1]; the
        // weighted numerators are bounded through the truncation level
        let tau = 8;
        let d = common::simple_binary(150, tau, seed).discretize_times();
        let roles = RoleFeatures::shared(d.covariates());
        let settings = EstimationSettings { folds: 2, seed, ..Default::default() };
        let eps = settings.learner.trunc_eps;
        let kinds = [
            (EstimatorKind::IfBinary, 2.0 * (1.0 + 1.0 / eps + 1.0 / (eps * eps))),
            (EstimatorKind::Ipw, 2.0 / eps.powi(4)),
            (EstimatorKind::PlugIn, 1.0),
        ];
        let curves = crossfit_curves(&d, &roles, &kinds.map(|k| k.0), &TimeGrid::unit(tau), &settings);
        for ((kind, bound), c) in kinds.iter().zip(curves) {
            let c = c.unwrap();
            prop_assert!(c.psi.iter().all(|v| v.is_finite() || c.weak_instrument));
            for (fold, den) in c.diagnostics.fold_psi.iter().zip(&c.diagnostics.fold_denominators) {
                if den.abs() < settings.denom_floor {
                    continue;
                }
                for v in fold {
                    prop_assert!((v * den).abs() <= bound * (1.0 + 1e-12), "{}: {}", kind.name(), v * den);
                    if *bound == 1.0 {
                        prop_assert!(v.abs() < 1.0 / settings.denom_floor);
                    }
                }
            }
        }
    }
}
