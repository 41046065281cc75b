//! Observed-data model: one row per subject holding baseline covariates,
//! instrument, treatment, follow-up time `min(T, C)` and the event
//! indicator `I(T < C)`.
//!
//! Latent quantities (event and censoring times, the unmeasured confounder,
//! potential outcomes) never appear here; they live in the simulation oracle.

use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::Features;

/// Kind of instrument carried by a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IvKind {
    Binary,
    Continuous,
}

impl std::fmt::Display for IvKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            IvKind::Binary => write!(f, "binary"),
            IvKind::Continuous => write!(f, "continuous"),
        }
    }
}

/// A single subject.
///
/// `a` and `r` are kept as raw numbers so that invalid input can be
/// represented and rejected by [`SurvivalDataset::validate`].
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub x0: Vec<f64>,
    pub z: f64,
    pub a: f64,
    pub time: f64,
    pub r: f64,
}

impl Observation {
    pub fn new(x0: Vec<f64>, z: f64, a: f64, time: f64, r: f64) -> Self {
        Self { x0, z, a, time, r }
    }

    #[inline]
    pub fn treated(&self) -> bool {
        self.a == 1.0
    }

    #[inline]
    pub fn event(&self) -> bool {
        self.r == 1.0
    }
}

/// Risk-set bookkeeping for a subject at grid point `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RiskCounters {
    pub at_risk: bool,
    pub event: bool,
    pub censored: bool,
}

/// `Y_t = I(time > t)` when it is observable.
///
/// Returns `None` when the subject was censored at or before `t`.
pub fn survival_indicator(obs: &Observation, t: usize) -> Option<bool> {
    let alive = obs.time > t as f64;
    if obs.event() || alive {
        Some(alive)
    } else {
        None
    }
}

/// At-risk, event and censoring indicators at grid point `k >= 1`.
///
/// Everyone is at risk at `k = 1` (`Y_0 = 1`); times must be discretized.
pub fn risk_counters(obs: &Observation, k: usize) -> RiskCounters {
    debug_assert!(k >= 1);
    let at_risk = k == 1 || obs.time > (k - 1) as f64;
    let at_k = obs.time == k as f64;
    RiskCounters {
        at_risk,
        event: at_k && obs.event(),
        censored: at_k && !obs.event(),
    }
}

/// Unit-spaced evaluation grid `1..=tau`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TimeGrid {
    points: Vec<usize>,
}

impl TimeGrid {
    pub fn unit(tau: usize) -> Self {
        Self {
            points: (1..=tau).collect(),
        }
    }

    pub fn points(&self) -> &[usize] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Largest grid time.
    pub fn tau(&self) -> usize {
        self.points.last().copied().unwrap_or(0)
    }
}

/// Immutable collection of subjects sharing one covariate dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalDataset {
    pub rows: Vec<Observation>,
    pub q: usize,
    pub tau: usize,
    pub iv_kind: IvKind,
}

impl SurvivalDataset {
    pub fn new(rows: Vec<Observation>, tau: usize, iv_kind: IvKind) -> Self {
        let q = rows.first().map(|r| r.x0.len()).unwrap_or(0);
        Self {
            rows,
            q,
            tau,
            iv_kind,
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn grid(&self) -> TimeGrid {
        TimeGrid::unit(self.tau)
    }

    /// Checks every row invariant and that each instrument and treatment
    /// arm is represented.
    pub fn validate(self) -> Result<Self> {
        if self.rows.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if self.tau < 1 {
            return Err(Error::InvalidTau);
        }
        for (i, o) in self.rows.iter().enumerate() {
            if o.x0.len() != self.q {
                return Err(Error::DimensionMismatch {
                    row: i,
                    expected: self.q,
                    got: o.x0.len(),
                });
            }
            if o.x0.iter().any(|v| !v.is_finite()) || !o.z.is_finite() {
                return Err(Error::NonFiniteFeature { row: i });
            }
            if !(o.time.is_finite() && o.time >= 0.0) {
                return Err(Error::InvalidTime {
                    row: i,
                    value: o.time,
                });
            }
            if o.a != 0.0 && o.a != 1.0 {
                return Err(Error::NonBinaryTreatment { row: i, value: o.a });
            }
            if o.r != 0.0 && o.r != 1.0 {
                return Err(Error::NonBinaryEvent { row: i, value: o.r });
            }
            if self.iv_kind == IvKind::Binary && o.z != 0.0 && o.z != 1.0 {
                return Err(Error::NonBinaryInstrument { row: i, value: o.z });
            }
        }
        let treated = self.rows.iter().filter(|o| o.treated()).count();
        if treated == 0 {
            return Err(Error::DegenerateArm { arm: "a=1".into() });
        }
        if treated == self.rows.len() {
            return Err(Error::DegenerateArm { arm: "a=0".into() });
        }
        match self.iv_kind {
            IvKind::Binary => {
                let z1 = self.rows.iter().filter(|o| o.z == 1.0).count();
                if z1 == 0 {
                    return Err(Error::DegenerateArm { arm: "z=1".into() });
                }
                if z1 == self.rows.len() {
                    return Err(Error::DegenerateArm { arm: "z=0".into() });
                }
            }
            IvKind::Continuous => {
                let (lo, hi) = self.z_range();
                if hi <= lo {
                    return Err(Error::DegenerateArm {
                        arm: "instrument range".into(),
                    });
                }
            }
        }
        Ok(self)
    }

    /// Floors every follow-up time; times flooring to 0 are kept at 1.
    pub fn discretize_times(&self) -> SurvivalDataset {
        let mut out = self.clone();
        for o in &mut out.rows {
            o.time = discretize_time(o.time);
        }
        out
    }

    /// `n x q` covariate matrix.
    pub fn covariates(&self) -> Features {
        let mut data = Vec::with_capacity(self.rows.len() * self.q);
        for o in &self.rows {
            data.extend_from_slice(&o.x0);
        }
        Features::new(self.rows.len(), self.q, data)
    }

    pub fn z_range(&self) -> (f64, f64) {
        self.rows
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), o| {
                (lo.min(o.z), hi.max(o.z))
            })
    }

    /// Subset (with repetition allowed) in the given index order.
    pub fn select(&self, idx: &[usize]) -> SurvivalDataset {
        SurvivalDataset {
            rows: idx.iter().map(|&i| self.rows[i].clone()).collect(),
            q: self.q,
            tau: self.tau,
            iv_kind: self.iv_kind,
        }
    }

    /// Reads the `x1,...,xq,z,a,time,event` CSV layout.
    pub fn read_csv(path: impl AsRef<Path>, tau: usize, iv_kind: IvKind) -> Result<Self> {
        let path = path.as_ref();
        let file =
            std::fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_csv_reader(file, &path.display().to_string(), tau, iv_kind)
    }

    pub fn from_csv_reader<R: Read>(
        reader: R,
        source: &str,
        tau: usize,
        iv_kind: IvKind,
    ) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let csv_err = |line: u64, message: String| Error::Csv {
            path: source.to_string(),
            line,
            message,
        };
        let headers = rdr
            .headers()
            .map_err(|e| csv_err(1, e.to_string()))?
            .clone();
        let names: Vec<&str> = headers.iter().collect();
        let n_cols = names.len();
        if n_cols < 4 || names[n_cols - 4..] != ["z", "a", "time", "event"] {
            return Err(csv_err(
                1,
                "header must end with z,a,time,event".to_string(),
            ));
        }
        let q = n_cols - 4;
        for (j, name) in names[..q].iter().enumerate() {
            if *name != format!("x{}", j + 1) {
                return Err(csv_err(
                    1,
                    format!("expected covariate column x{}, found '{name}'", j + 1),
                ));
            }
        }
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| {
                let line = e.position().map(|p| p.line()).unwrap_or(0);
                csv_err(line, e.to_string())
            })?;
            let line = rec.position().map(|p| p.line()).unwrap_or(0);
            if rec.len() != n_cols {
                return Err(csv_err(
                    line,
                    format!("expected {n_cols} fields, found {}", rec.len()),
                ));
            }
            let mut vals = Vec::with_capacity(n_cols);
            for (j, field) in rec.iter().enumerate() {
                let v: f64 = field.parse().map_err(|_| {
                    csv_err(
                        line,
                        format!("column '{}': '{field}' is not a number", names[j]),
                    )
                })?;
                vals.push(v);
            }
            rows.push(Observation::new(
                vals[..q].to_vec(),
                vals[q],
                vals[q + 1],
                vals[q + 2],
                vals[q + 3],
            ));
        }
        let mut ds = SurvivalDataset::new(rows, tau, iv_kind);
        ds.q = q;
        Ok(ds)
    }

    /// Writes the dataset in the ingestion layout.
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<String> = (1..=self.q).map(|j| format!("x{j}")).collect();
        header.extend(["z", "a", "time", "event"].map(String::from));
        w.write_record(&header)
            .map_err(|e| Error::Io(e.to_string()))?;
        for o in &self.rows {
            let mut rec: Vec<String> = o.x0.iter().map(|v| format!("{v:?}")).collect();
            rec.push(format!("{:?}", o.z));
            rec.push(format!("{:?}", o.a));
            rec.push(format!("{:?}", o.time));
            rec.push(format!("{:?}", o.r));
            w.write_record(&rec).map_err(|e| Error::Io(e.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `max(1, floor(time))`.
pub fn discretize_time(time: f64) -> f64 {
    time.floor().max(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obs(z: f64, a: f64, time: f64, r: f64) -> Observation {
        Observation::new(vec![0.1, -0.2], z, a, time, r)
    }

    fn four_rows() -> SurvivalDataset {
        SurvivalDataset::new(
            vec![
                obs(0.0, 0.0, 3.0, 1.0),
                obs(0.0, 1.0, 5.0, 0.0),
                obs(1.0, 1.0, 2.5, 1.0),
                obs(1.0, 0.0, 7.0, 1.0),
            ],
            10,
            IvKind::Binary,
        )
    }

    #[test]
    fn valid_dataset_passes_through() {
        let ds = four_rows();
        assert_eq!(ds.clone().validate().unwrap(), ds);
    }

    #[test]
    fn all_treated_is_degenerate() {
        let mut ds = four_rows();
        for o in &mut ds.rows {
            o.a = 1.0;
        }
        assert!(matches!(ds.validate(), Err(Error::DegenerateArm { .. })));
    }

    #[test]
    fn negative_time_rejected() {
        let mut ds = four_rows();
        ds.rows[2].time = -1.0;
        assert!(matches!(
            ds.validate(),
            Err(Error::InvalidTime { row: 2, .. })
        ));
    }

    #[test]
    fn non_binary_fields_rejected() {
        let mut ds = four_rows();
        ds.rows[0].a = 2.0;
        assert!(matches!(
            ds.validate(),
            Err(Error::NonBinaryTreatment { .. })
        ));
        let mut ds = four_rows();
        ds.rows[1].z = 0.5;
        assert!(matches!(
            ds.validate(),
            Err(Error::NonBinaryInstrument { .. })
        ));
        let mut ds = four_rows();
        ds.rows[1].z = 0.5;
        ds.iv_kind = IvKind::Continuous;
        assert!(ds.validate().is_ok());
        let mut ds = four_rows();
        ds.rows[3].x0[1] = f64::NAN;
        assert!(matches!(
            ds.validate(),
            Err(Error::NonFiniteFeature { row: 3 })
        ));
    }

    #[test]
    fn empty_dataset_rejected() {
        let ds = SurvivalDataset::new(vec![], 5, IvKind::Binary);
        assert_eq!(ds.validate(), Err(Error::EmptyDataset));
    }

    #[test]
    fn discretization_rule() {
        assert_eq!(discretize_time(7.9), 7.0);
        assert_eq!(discretize_time(3.0), 3.0);
        assert_eq!(discretize_time(0.4), 1.0);
        let d = four_rows().discretize_times();
        assert_eq!(d.rows[2].time, 2.0);
    }

    #[test]
    fn survival_indicator_cases() {
        assert_eq!(survival_indicator(&obs(0.0, 0.0, 10.0, 1.0), 5), Some(true));
        assert_eq!(
            survival_indicator(&obs(0.0, 0.0, 10.0, 1.0), 10),
            Some(false)
        );
        assert_eq!(survival_indicator(&obs(0.0, 0.0, 4.0, 0.0), 6), None);
        assert_eq!(survival_indicator(&obs(0.0, 0.0, 8.0, 0.0), 6), Some(true));
    }

    #[test]
    fn risk_counter_cases() {
        let c = |time, r, k| {
            let rc = risk_counters(&obs(0.0, 0.0, time, r), k);
            (rc.at_risk as u8, rc.event as u8, rc.censored as u8)
        };
        assert_eq!(c(3.0, 1.0, 3), (1, 1, 0));
        assert_eq!(c(3.0, 0.0, 3), (1, 0, 1));
        assert_eq!(c(3.0, 1.0, 5), (0, 0, 0));
        // everyone is at risk at the first grid point
        assert_eq!(c(1.0, 1.0, 1), (1, 1, 0));
    }

    #[test]
    fn csv_round_trip_and_line_numbers() {
        let ds = four_rows();
        let mut buf = Vec::new();
        ds.write_csv(&mut buf).unwrap();
        let back = SurvivalDataset::from_csv_reader(&buf[..], "mem", 10, IvKind::Binary).unwrap();
        assert_eq!(back, ds);

        let bad = "x1,z,a,time,event\n0.1,0,1,3,1\n0.2,1,oops,4,0\n";
        let err =
            SurvivalDataset::from_csv_reader(bad.as_bytes(), "mem", 5, IvKind::Binary).unwrap_err();
        match err {
            Error::Csv { line, message, .. } => {
                assert_eq!(line, 3);
                assert!(message.contains("'a'"), "{message}");
            }
            e => panic!("unexpected {e:?}"),
        }
        let bad_header = "x1,x3,z,a,time,event\n";
        assert!(matches!(
            SurvivalDataset::from_csv_reader(bad_header.as_bytes(), "mem", 5, IvKind::Binary),
            Err(Error::Csv { line: 1, .. })
        ));
    }
}
