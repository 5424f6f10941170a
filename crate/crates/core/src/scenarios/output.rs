use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::propagate::{populations, Trajectory};

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Trajectory CSV: `t`, the watched labels in basis order, `<n>` per mode
/// (`n1`, `n2`, ...) and the norm.
pub(crate) fn write_trajectory(path: &Path, traj: &Trajectory<f64>, watch: &[String]) -> Result<()> {
    let basis = traj.basis();
    let mut indices = watch.iter().map(|l| basis.parse_label(l)).collect::<Result<Vec<_>>>()?;
    indices.sort_unstable();
    indices.dedup();
    let labels: Vec<String> = indices.iter().map(|&i| basis.label_string(i)).collect();
    let table = populations(traj, &labels)?;

    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["t".to_string()];
    header.extend(labels.iter().cloned());
    header.extend((1..=basis.n_modes()).map(|m| format!("n{m}")));
    header.push("norm".into());
    w.write_record(&header)?;
    for (k, t) in table.times.iter().enumerate() {
        let mut row = vec![num(*t)];
        row.extend(table.columns.iter().map(|c| num(c[k])));
        row.extend(table.photon_means.iter().map(|c| num(c[k])));
        row.push(num(table.norms[k]));
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub(crate) fn write_rows(path: &Path, header: &[String], rows: &[Vec<f64>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r.iter().map(|x| num(*x)))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub(crate) fn ensure_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}
