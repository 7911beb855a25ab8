use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::ConfigError;

/// 17 significant digits, enough to round-trip any f64.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ConfigError + '_ {
    move |source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn ensure_dir(dir: &Path) -> Result<(), ConfigError> {
    fs::create_dir_all(dir).map_err(io_err(dir))
}

/// Writes a header row and the given rows with LF line endings.
pub fn write_csv(
    dir: &Path,
    name: &str,
    header: &str,
    rows: &[Vec<String>],
) -> Result<PathBuf, ConfigError> {
    let path = dir.join(name);
    let mut body = String::with_capacity(rows.len() * 48 + header.len() + 1);
    body.push_str(header);
    body.push('\n');
    for row in rows {
        body.push_str(&row.join(","));
        body.push('\n');
    }
    fs::write(&path, body).map_err(io_err(&path))?;
    Ok(path)
}

pub fn write_meta(dir: &Path, meta: &BTreeMap<String, String>) -> Result<PathBuf, ConfigError> {
    let path = dir.join("run.meta");
    let mut file = fs::File::create(&path).map_err(io_err(&path))?;
    for (k, v) in meta {
        writeln!(file, "{k}={v}").map_err(io_err(&path))?;
    }
    Ok(path)
}
