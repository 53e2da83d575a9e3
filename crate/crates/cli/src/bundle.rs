//! Result bundles: a directory holding `profile.csv`, `dual.csv`,
//! `report.json` and `config.json`, assembled in a temporary directory and
//! renamed into place.

use std::fs;
use std::path::{Path, PathBuf};

use dualwave::WaveProfile;
use serde::Serialize;
use tempfile::TempDir;

use crate::error::CliError;

/// 17 significant digits, so values survive a write/read round trip.
pub fn fmt_num(v: f64) -> String {
    format!("{v:.16e}")
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

/// Writes equal-length columns under the given headers.
pub fn write_columns(path: &Path, headers: &[&str], columns: &[&[f64]]) -> Result<(), CliError> {
    let rows = columns.first().map_or(0, |c| c.len());
    if headers.len() != columns.len() || columns.iter().any(|c| c.len() != rows) {
        return Err(CliError::Io(format!("{}: ragged columns", path.display())));
    }
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    w.write_record(headers).map_err(|e| io_err(path, e))?;
    for r in 0..rows {
        w.write_record(columns.iter().map(|c| fmt_num(c[r]))).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

pub fn write_profile(path: &Path, p: &WaveProfile) -> Result<(), CliError> {
    let w = p.w();
    let u = vec![p.u_inf; p.len()];
    write_columns(path, &["x", "f", "w", "u_inf"], &[&p.x, &p.f, &w, &u])
}

/// Reads the named columns of a CSV file. Errors name the data row
/// (1-based) and the column.
pub fn read_columns(path: &Path, names: &[&str]) -> Result<Vec<Vec<f64>>, CliError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let headers = r.headers().map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?.clone();
    let idx: Vec<usize> = names
        .iter()
        .map(|n| {
            headers
                .iter()
                .position(|h| h.trim() == *n)
                .ok_or_else(|| CliError::Config(format!("{}: missing column '{n}'", path.display())))
        })
        .collect::<Result<_, _>>()?;
    let mut out = vec![Vec::new(); names.len()];
    for (row, rec) in r.records().enumerate() {
        let row = row + 1;
        let rec = rec.map_err(|e| CliError::Config(format!("{}: row {row}: {e}", path.display())))?;
        for (k, &i) in idx.iter().enumerate() {
            let raw = rec.get(i).unwrap_or("");
            let v: f64 = raw.trim().parse().map_err(|_| {
                CliError::Config(format!("{}: row {row}, column '{}': cannot parse '{raw}'", path.display(), names[k]))
            })?;
            out[k].push(v);
        }
    }
    if out[0].is_empty() {
        return Err(CliError::Config(format!("{}: no data rows", path.display())));
    }
    Ok(out)
}

/// Reads a profile CSV with columns `x`, `f`, `u_inf`; the far-field value
/// is taken from the first row.
pub fn read_profile(path: &Path, c: f64) -> Result<WaveProfile, CliError> {
    let mut cols = read_columns(path, &["x", "f", "u_inf"])?;
    let u_inf = cols[2][0];
    let f = cols.swap_remove(1);
    let x = cols.swap_remove(0);
    Ok(WaveProfile::new(x, f, u_inf, c))
}

/// A bundle under construction.
pub struct Bundle {
    tmp: TempDir,
    target: PathBuf,
}

impl Bundle {
    /// Stages a bundle that will become `out/name`.
    pub fn new(out: &Path, name: &str) -> Result<Self, CliError> {
        fs::create_dir_all(out).map_err(|e| io_err(out, e))?;
        let tmp = tempfile::Builder::new().prefix(".bundle-").tempdir_in(out).map_err(|e| io_err(out, e))?;
        Ok(Self { tmp, target: out.join(name) })
    }

    pub fn path(&self, file: &str) -> PathBuf {
        self.tmp.path().join(file)
    }

    pub fn profile(&self, p: &WaveProfile) -> Result<(), CliError> {
        write_profile(&self.path("profile.csv"), p)
    }

    pub fn dual(&self, x: &[f64], values: &[f64], name: &str) -> Result<(), CliError> {
        write_columns(&self.path("dual.csv"), &["x", name], &[x, values])
    }

    pub fn json(&self, file: &str, value: &impl Serialize) -> Result<(), CliError> {
        let path = self.path(file);
        let text = serde_json::to_string_pretty(value).map_err(|e| io_err(&path, e))?;
        fs::write(&path, text + "\n").map_err(|e| io_err(&path, e))
    }

    /// Moves the staged directory into place, replacing an older bundle.
    pub fn commit(self) -> Result<PathBuf, CliError> {
        if self.target.exists() {
            fs::remove_dir_all(&self.target).map_err(|e| io_err(&self.target, e))?;
        }
        let staged = self.tmp.keep();
        fs::rename(&staged, &self.target).map_err(|e| io_err(&self.target, e))?;
        Ok(self.target)
    }
}
