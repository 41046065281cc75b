//! Plot-ready CSV writers. Floats carry 12 significant digits.

use std::fs::File;
use std::path::Path;

use ivsurv::sim::{format_sig, SimReport};
use ivsurv::EstimateCurve;

use crate::error::CliError;

fn writer(path: &Path) -> Result<csv::Writer<File>, CliError> {
    Ok(csv::Writer::from_writer(File::create(path)?))
}

pub fn write_report(dir: &Path, report: &SimReport) -> Result<(), CliError> {
    report.write_csv(File::create(dir.join("report.csv"))?)?;
    std::fs::write(dir.join("report.json"), report.to_json()? + "\n")?;
    let mut names: Vec<&str> = Vec::new();
    for e in &report.entries {
        if !names.contains(&e.estimator.as_str()) {
            names.push(&e.estimator);
        }
    }
    for name in names {
        let mut w = writer(&dir.join(format!("curves_{name}.csv")))?;
        w.write_record(["t", "specification", "mean_estimate", "truth"])?;
        for e in report.entries.iter().filter(|e| e.estimator == name) {
            for (t, (m, truth)) in e.mean_curve.iter().zip(&report.truth).enumerate() {
                w.write_record([
                    (t + 1).to_string(),
                    e.specification.clone(),
                    format_sig(*m),
                    format_sig(*truth),
                ])?;
            }
        }
        w.flush()?;
    }
    Ok(())
}

/// One block of rows per estimator; CI columns only when bands exist.
pub fn write_estimates(path: &Path, curves: &[(String, EstimateCurve)]) -> Result<(), CliError> {
    let with_ci = curves.iter().any(|(_, c)| c.ci_lo.is_some());
    let mut w = writer(path)?;
    let mut header = vec![
        "estimator",
        "t",
        "psi",
        "denominator",
        "weak_instrument_flag",
    ];
    if with_ci {
        header.extend(["ci_lo", "ci_hi"]);
    }
    w.write_record(&header)?;
    for (name, c) in curves {
        for (j, &t) in c.grid.points().iter().enumerate() {
            let mut row = vec![
                name.clone(),
                t.to_string(),
                format_sig(c.psi[j]),
                format_sig(c.denominator),
                (c.weak_instrument as u8).to_string(),
            ];
            if with_ci {
                let band = |b: &Option<Vec<f64>>| {
                    b.as_ref().map_or("NaN".to_string(), |v| format_sig(v[j]))
                };
                row.push(band(&c.ci_lo));
                row.push(band(&c.ci_hi));
            }
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_replicates(path: &Path, replicates: &[Vec<f64>]) -> Result<(), CliError> {
    let mut w = writer(path)?;
    let tau = replicates.first().map_or(0, Vec::len);
    let mut header = vec!["replicate".to_string()];
    header.extend((1..=tau).map(|t| format!("t{t}")));
    w.write_record(&header)?;
    for (b, r) in replicates.iter().enumerate() {
        let mut row = vec![b.to_string()];
        row.extend(r.iter().map(|v| format_sig(*v)));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
