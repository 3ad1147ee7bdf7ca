//! Text fixtures for channel realizations.
//!
//! The matrix file holds one CSV row per receive antenna with interleaved
//! `re,im` pairs per transmit antenna. The sidecar has the header
//! `gain_re,gain_im,aod,aoa,spacing_over_lambda` and one row per path.

use std::path::Path;

use super::{ChannelRealization, PathParams};
use crate::{CMatrix, Complex64, Error, Result};

pub const PATH_HEADER: [&str; 5] = ["gain_re", "gain_im", "aod", "aoa", "spacing_over_lambda"];

/// Upper bound on parsed paths; keeps reconstruction cost bounded for
/// untrusted input.
pub const MAX_PATHS: usize = 1024;

/// Relative Frobenius error allowed between the matrix and its paths.
pub const RECONSTRUCTION_TOL: f64 = 1e-10;

/// Renders `(matrix_csv, paths_csv)`. Floats use the shortest representation
/// that parses back to the same bits.
pub fn render_channel(ch: &ChannelRealization) -> (String, String) {
    let mut matrix = String::new();
    for i in 0..ch.h.nrows() {
        let row: Vec<String> = (0..ch.h.ncols())
            .flat_map(|j| {
                let z = ch.h[(i, j)];
                [z.re.to_string(), z.im.to_string()]
            })
            .collect();
        matrix.push_str(&row.join(","));
        matrix.push('\n');
    }
    let mut paths = PATH_HEADER.join(",");
    paths.push('\n');
    for p in &ch.paths {
        paths.push_str(&format!(
            "{},{},{},{},{}\n",
            p.gain.re, p.gain.im, p.aod, p.aoa, ch.spacing_over_lambda
        ));
    }
    (matrix, paths)
}

pub fn write_channel(ch: &ChannelRealization, matrix_path: &Path, paths_path: &Path) -> Result<()> {
    let (matrix, paths) = render_channel(ch);
    std::fs::write(matrix_path, matrix).map_err(|e| Error::io(matrix_path, e))?;
    std::fs::write(paths_path, paths).map_err(|e| Error::io(paths_path, e))?;
    Ok(())
}

pub fn read_channel(matrix_path: &Path, paths_path: &Path) -> Result<ChannelRealization> {
    let matrix = std::fs::read_to_string(matrix_path).map_err(|e| Error::io(matrix_path, e))?;
    let paths = std::fs::read_to_string(paths_path).map_err(|e| Error::io(paths_path, e))?;
    parse_channel(&matrix, &paths)
}

fn parse_f64(field: &str, what: &str) -> Result<f64> {
    let v: f64 = field
        .trim()
        .parse()
        .map_err(|_| Error::Parse(format!("{what}: '{field}' is not a number")))?;
    if !v.is_finite() {
        return Err(Error::Parse(format!("{what}: non-finite value '{field}'")));
    }
    Ok(v)
}

/// Parses and validates a channel fixture. The matrix must be rebuilt by its
/// paths to [`RECONSTRUCTION_TOL`].
pub fn parse_channel(matrix_csv: &str, paths_csv: &str) -> Result<ChannelRealization> {
    let mut rows: Vec<Vec<Complex64>> = Vec::new();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(matrix_csv.as_bytes());
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse(format!("matrix row {i}: {e}")))?;
        if rec.len() % 2 != 0 || rec.is_empty() {
            return Err(Error::Parse(format!(
                "matrix row {i} has {} fields; expected an even, nonzero count",
                rec.len()
            )));
        }
        let fields: Vec<&str> = rec.iter().collect();
        let row = fields
            .chunks(2)
            .map(|pair| {
                Ok(Complex64::new(
                    parse_f64(pair[0], "matrix entry")?,
                    parse_f64(pair[1], "matrix entry")?,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::Parse(format!(
                    "matrix row {i} has {} entries, row 0 has {}",
                    row.len(),
                    first.len()
                )));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse("matrix file has no rows".into()));
    }
    let (n_rx, n_tx) = (rows.len(), rows[0].len());
    let h = CMatrix::from_fn(n_rx, n_tx, |i, j| rows[i][j]);

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(paths_csv.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| Error::Parse(format!("path header: {e}")))?
        .clone();
    if header.iter().ne(PATH_HEADER.iter().copied()) {
        return Err(Error::Parse(format!("path header must be '{}'", PATH_HEADER.join(","))));
    }
    let mut paths = Vec::new();
    let mut spacing: Option<f64> = None;
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse(format!("path row {i}: {e}")))?;
        if paths.len() == MAX_PATHS {
            return Err(Error::Parse(format!("more than {MAX_PATHS} paths")));
        }
        if rec.len() != PATH_HEADER.len() {
            return Err(Error::Parse(format!("path row {i} has {} fields", rec.len())));
        }
        let v: Vec<f64> = rec.iter().map(|f| parse_f64(f, "path field")).collect::<Result<_>>()?;
        let p = PathParams {
            gain: Complex64::new(v[0], v[1]),
            aod: v[2],
            aoa: v[3],
        };
        if !p.angles_in_range() {
            return Err(Error::Parse(format!("path row {i}: angles outside [-pi/2, pi/2]")));
        }
        if !(v[4] > 0.0) {
            return Err(Error::Parse(format!("path row {i}: spacing must be positive")));
        }
        match spacing {
            None => spacing = Some(v[4]),
            Some(s) if s != v[4] => return Err(Error::Parse(format!("path row {i}: inconsistent spacing"))),
            _ => {}
        }
        paths.push(p);
    }
    let spacing_over_lambda = spacing.ok_or_else(|| Error::Parse("path file lists no paths".into()))?;

    let ch = ChannelRealization {
        h,
        paths,
        spacing_over_lambda,
    };
    let err = ch.reconstruction_error();
    if !(err <= RECONSTRUCTION_TOL) {
        return Err(Error::Parse(format!(
            "matrix does not match its paths (relative error {err:e})"
        )));
    }
    Ok(ch)
}
