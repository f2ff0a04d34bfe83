use std::path::Path;

use nhframes::{Error, Result};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Loads a JSON config (unknown keys are rejected by the types), or the
/// default when no file is given.
pub fn load<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| Error::Invalid(format!("cannot read config {}: {e}", p.display())))?;
            serde_json::from_str(&text).map_err(|e| Error::Invalid(format!("config {}: {e}", p.display())))
        }
    }
}

/// Writes pretty JSON to `out`, or to stdout.
pub fn emit<T: Serialize>(v: &T, out: Option<&Path>) -> Result<()> {
    let text = nhframes::io::to_json_pretty(v)?;
    match out {
        Some(p) => nhframes::io::write_file(p, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn parse_triple(s: &str) -> std::result::Result<[f64; 3], String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|e| format!("`{x}`: {e}")))
        .collect::<std::result::Result<_, _>>()?;
    v.try_into().map_err(|_| "expected three comma-separated numbers".to_string())
}
