//! Files written for a run, and the spectrum reader used offline.

use std::fs;
use std::path::{Path, PathBuf};

use super::config::RunConfig;
use super::experiment::{run_experiment_detailed, RunReport};
use crate::analyticity::Radius;
use crate::error::{Error, Result};

pub const TIMESERIES_HEADER: [&str; 10] = [
    "t",
    "hk_pair_norm",
    "grad_u_sup",
    "grad_theta_sup",
    "kinetic_energy",
    "theta_l2",
    "tau_shell",
    "tau_ratio",
    "tau_bound",
    "guard_ok",
];

fn radius_cell(r: Option<Radius<f64>>) -> String {
    match r {
        Some(r) => r.to_string(),
        None => "na".into(),
    }
}

fn value_cell(v: Option<f64>) -> String {
    v.map_or_else(|| "na".into(), |v| v.to_string())
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::InvalidArgument(format!("csv: {other:?}")),
    }
}

fn write_rows(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    w.write_record(header).map_err(csv_error)?;
    for row in rows {
        w.write_record(&row).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `timeseries.csv`, `report.json` and `plotdata/` under `dir`.
pub fn emit_outputs(report: &RunReport, dir: &Path) -> Result<()> {
    let plot = dir.join("plotdata");
    fs::create_dir_all(&plot)?;
    let rows = report.records.iter().zip(&report.verdicts).map(|(r, v)| {
        vec![
            r.time.to_string(),
            r.hk_pair_norm.to_string(),
            r.grad_u_sup.to_string(),
            r.grad_theta_sup.to_string(),
            r.kinetic_energy.to_string(),
            r.theta_l2.to_string(),
            r.tau_shell.to_string(),
            radius_cell(r.tau_ratio),
            value_cell(v.tau_bound),
            r.guard_ok.to_string(),
        ]
    });
    write_rows(&dir.join("timeseries.csv"), &TIMESERIES_HEADER, rows)?;
    fs::write(dir.join("report.json"), serde_json::to_string_pretty(report)? + "\n")?;

    let est = report.verdicts.iter().map(|v| vec![v.time.to_string(), v.tau_est.to_string()]);
    write_rows(&plot.join("tau_est.csv"), &["t", "tau_est"], est)?;
    let bound = report.verdicts.iter().map(|v| vec![v.time.to_string(), value_cell(v.tau_bound)]);
    write_rows(&plot.join("tau_bound.csv"), &["t", "tau_bound"], bound)?;
    for (i, s) in report.spectra.iter().enumerate() {
        for (name, spectrum) in [("theta", &s.theta), ("omega", &s.omega)] {
            let rows = spectrum.iter().map(|(j, a)| vec![j.to_string(), a.to_string()]);
            write_rows(&plot.join(format!("spectrum_{name}_{i:04}.csv")), &["shell_radius", "amplitude"], rows)?;
        }
    }
    Ok(())
}

/// Runs `config` and writes its outputs to `config.output_dir`. A run that
/// stops early still writes its partial report before the error is returned.
pub fn execute(config: &RunConfig) -> Result<(RunReport, PathBuf)> {
    let (report, failure) = run_experiment_detailed(config)?;
    emit_outputs(&report, &config.output_dir)?;
    match failure {
        Some(e) => Err(e),
        None => Ok((report, config.output_dir.clone())),
    }
}

pub fn load_report(path: &Path) -> Result<RunReport> {
    let text = fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::ConfigNotFound(path.display().to_string()),
        _ => Error::Io(e),
    })?;
    Ok(serde_json::from_str(&text)?)
}

/// Reads a two-column `shell_radius,amplitude` file. A non-numeric first row is
/// taken as a header.
pub fn read_spectrum_csv(path: &Path) -> Result<Vec<(f64, f64)>> {
    let mut reader =
        csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).comment(Some(b'#')).from_path(path).map_err(
            |e| match e.kind() {
                csv::ErrorKind::Io(io) if io.kind() == std::io::ErrorKind::NotFound => {
                    Error::ConfigNotFound(path.display().to_string())
                }
                _ => csv_error(e),
            },
        )?;
    let mut out = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(csv_error)?;
        if record.len() != 2 {
            return Err(Error::InvalidArgument(format!("row {}: expected 2 columns, got {}", i + 1, record.len())));
        }
        let parsed = (record[0].parse::<f64>(), record[1].parse::<f64>());
        match parsed {
            (Ok(j), Ok(a)) => out.push((j, a)),
            _ if i == 0 => continue,
            _ => return Err(Error::InvalidArgument(format!("row {}: non-numeric value", i + 1))),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn spectrum_reader_handles_header_and_comments() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "shell,amplitude\n# comment\n1, 0.5\n2,0.25").unwrap();
        assert_eq!(read_spectrum_csv(f.path()).unwrap(), vec![(1.0, 0.5), (2.0, 0.25)]);
        let mut bad = tempfile::NamedTempFile::new().unwrap();
        writeln!(bad, "1,0.5\n2,x").unwrap();
        assert!(read_spectrum_csv(bad.path()).is_err());
        assert_eq!(read_spectrum_csv(Path::new("/no/such/file.csv")).unwrap_err().category(), "config_not_found");
    }

    #[test]
    fn cells() {
        assert_eq!(radius_cell(None), "na");
        assert_eq!(radius_cell(Some(Radius::Infinite)), "inf");
        assert_eq!(value_cell(Some(0.5)), "0.5");
    }
}
