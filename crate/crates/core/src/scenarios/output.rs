//! CSV output of recorded trajectories.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use super::ScenarioResult;
use crate::error::{Error, Result};
use crate::observables::{Observable, Trajectory};

pub const CSV_HEADER: [&str; 11] = ["t", "kappa_t", "N1", "N2", "Nw", "X1", "X2", "Xw", "Jc", "Jw", "P"];

fn format(x: f64) -> String {
    format!("{x:.16e}")
}

/// Write the trajectory as CSV; `kappa_ref` scales the kappa_t column.
pub fn write_csv<W: Write>(traj: &Trajectory, kappa_ref: f64, writer: W) -> std::result::Result<(), csv::Error> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(writer);
    w.write_record(CSV_HEADER)?;
    for r in &traj.records {
        let mut row = Vec::with_capacity(CSV_HEADER.len());
        row.push(format(r.t));
        row.push(format(kappa_ref * r.t));
        row.extend(Observable::ALL.iter().map(|&o| format(r.get(o))));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Write a result's trajectory to `path`.
pub fn emit_csv(result: &ScenarioResult, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|source| Error::Io { path: dir.to_path_buf(), source })?;
    }
    let file = File::create(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    write_csv(&result.trajectory, result.config.kappa_ref, std::io::BufWriter::new(file))
        .map_err(|source| Error::Csv { path: path.to_path_buf(), source })
}
