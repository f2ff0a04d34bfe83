//! Output files: trajectories as CSV with 17 significant digits and JSON
//! manifests. Files are written whole, after the numbers exist, so a failed
//! run leaves nothing behind.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::Result;
use crate::ode::Trajectory;

/// `{:.16e}` gives 17 significant digits, enough to round-trip an f64.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn trajectory_csv(header: &[&str], traj: &Trajectory) -> String {
    let mut out = String::from("t");
    for h in header {
        out.push(',');
        out.push_str(h);
    }
    out.push('\n');
    for (t, y) in traj.t.iter().zip(&traj.y) {
        out.push_str(&fmt_f64(*t));
        for v in y {
            out.push(',');
            out.push_str(&fmt_f64(*v));
        }
        out.push('\n');
    }
    out
}

/// Reads back a CSV written by [`trajectory_csv`].
pub fn parse_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| crate::Error::Invalid("empty csv".into()))?
        .split(',')
        .map(str::to_string)
        .collect();
    let rows = lines
        .map(|l| {
            l.split(',')
                .map(|v| v.parse::<f64>().map_err(|_| crate::Error::Invalid(format!("bad csv value `{v}`"))))
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok((header, rows))
}

pub fn to_json_pretty<T: Serialize>(v: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s)
}

/// Writes `contents` to `path`, creating parent directories.
pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    let mut f = fs::File::create(path)?;
    f.write_all(contents.as_bytes())?;
    Ok(())
}
