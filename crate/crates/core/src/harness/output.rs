use std::fs::File;
use std::io::Write;
use std::path::Path;

use crate::metrics::ExperimentResult;
use crate::{Error, Result};

pub const CSV_HEADER: [&str; 17] = [
    "kind",
    "sweep_name",
    "sweep_value",
    "trial",
    "seed",
    "algorithm",
    "bits",
    "n_tx",
    "n_rx",
    "n_streams",
    "users",
    "spectral_efficiency",
    "sum_rate",
    "inner_sweeps",
    "outer_iters",
    "wall_time_s",
    "error",
];

/// Writes the header and one row per result. Floats use the shortest
/// representation that parses back to the same value; missing values are
/// empty fields.
pub fn write_csv<W: Write>(results: &[ExperimentResult], writer: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
    let csv_err = |e: csv::Error| Error::Parse(format!("CSV output failed: {e}"));
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for r in results {
        let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
        w.write_record([
            r.kind.clone(),
            r.sweep_name.clone(),
            r.sweep_value.to_string(),
            r.trial.to_string(),
            r.seed.to_string(),
            r.algorithm.clone(),
            r.bits.to_string(),
            r.n_tx.to_string(),
            r.n_rx.to_string(),
            r.n_streams.to_string(),
            r.users.to_string(),
            opt(r.spectral_efficiency),
            opt(r.sum_rate),
            r.inner_sweeps.to_string(),
            r.outer_iters.to_string(),
            r.wall_time_s.to_string(),
            r.error.clone().unwrap_or_default(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::Parse(format!("CSV output failed: {e}")))
}

/// [`write_csv`] to a file.
pub fn emit_csv(results: &[ExperimentResult], path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut buf = std::io::BufWriter::new(file);
    write_csv(results, &mut buf).map_err(|e| match e {
        Error::Parse(msg) => Error::io(path, std::io::Error::other(msg)),
        other => other,
    })?;
    buf.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ExperimentResult {
        ExperimentResult {
            kind: "su-snr-sweep".into(),
            sweep_name: "snr_db".into(),
            sweep_value: -7.5,
            trial: 3,
            seed: u64::MAX,
            algorithm: "pm".into(),
            bits: 2,
            n_tx: 8,
            n_rx: 8,
            n_streams: 2,
            users: 1,
            spectral_efficiency: Some(0.1 + 0.2),
            sum_rate: None,
            inner_sweeps: 4,
            outer_iters: 2,
            wall_time_s: 1.25e-5,
            error: None,
        }
    }

    #[test]
    fn empty_results_write_header_only() {
        let mut buf = Vec::new();
        write_csv(&[], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), format!("{}\n", CSV_HEADER.join(",")));
    }

    #[test]
    fn floats_round_trip() {
        let mut buf = Vec::new();
        write_csv(&[sample()], &mut buf).unwrap();
        let mut rdr = csv::Reader::from_reader(buf.as_slice());
        let rec = rdr.records().next().unwrap().unwrap();
        assert_eq!(rec[11].parse::<f64>().unwrap(), 0.1 + 0.2);
        assert_eq!(rec[15].parse::<f64>().unwrap(), 1.25e-5);
        assert_eq!(rec[4].parse::<u64>().unwrap(), u64::MAX);
        assert_eq!(&rec[12], "");
        assert_eq!(&rec[16], "");
    }

    #[test]
    fn unwritable_path_reports_path() {
        let err = emit_csv(&[], Path::new("/nonexistent-dir/x.csv")).unwrap_err();
        assert!(err.to_string().contains("/nonexistent-dir/x.csv"));
    }
}
