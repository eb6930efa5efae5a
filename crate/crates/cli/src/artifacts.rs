//! File naming, provenance records and error classification shared by the
//! subcommands.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use tomoqubo::encoding::EncodingScheme;
use tomoqubo::Error;

pub const PHANTOM_CSV: &str = "phantom.csv";
pub const PHANTOM_PGM: &str = "phantom.pgm";
pub const SINOGRAM: &str = "sinogram.csv";
pub const SINOGRAM_NOISY: &str = "sinogram_noisy.csv";
pub const GEOMETRY: &str = "geometry.json";
pub const REPORT_JSON: &str = "report.json";
pub const REPORT_TXT: &str = "report.txt";

pub fn qubo_file(label: &str) -> String {
    format!("qubo_{label}.json")
}

pub fn build_file(label: &str) -> String {
    format!("build_{label}.json")
}

pub fn solve_file(label: &str) -> String {
    format!("solve_{label}.json")
}

pub fn bits_file(label: &str) -> String {
    format!("bits_{label}.txt")
}

pub fn recon_file(label: &str) -> String {
    format!("recon_{label}.csv")
}

/// Labels become part of file names, so keep them to a portable alphabet.
pub fn check_label(label: &str) -> tomoqubo::Result<()> {
    let ok = !label.is_empty()
        && label
            .chars()
            .all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '-' || c == '_');
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "label {label:?} must be non-empty lowercase letters, digits, '-' or '_'"
        )))
    }
}

/// Sidecar written next to each QUBO: what `reconstruct` and `compare` need
/// to interpret the solver output.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BuildInfo {
    pub label: String,
    pub a: f64,
    pub b: f64,
    pub encoding: EncodingScheme,
    pub width: usize,
    pub height: usize,
    pub projections: usize,
    pub num_vars: usize,
    pub sum_squares: f64,
    /// `−a·ΣP² + b·tv_squared(phantom)`, present when a phantom was given.
    pub target_energy: Option<f64>,
    /// Energy of the encoded phantom in this model.
    pub truth_energy: Option<f64>,
}

pub fn ensure_dir(dir: &Path) -> tomoqubo::Result<()> {
    fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })
}

pub fn write(path: &Path, bytes: impl AsRef<[u8]>) -> tomoqubo::Result<()> {
    fs::write(path, bytes).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_text(path: &Path) -> tomoqubo::Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> tomoqubo::Result<T> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        context: path.display().to_string(),
        location: format!("line {}, column {}", e.line(), e.column()),
        message: e.to_string(),
    })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> tomoqubo::Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("plain data serializes");
    text.push('\n');
    write(path, text)
}

/// `provenance_<name>.json` with the tool version and every parameter.
pub fn write_provenance(dir: &Path, name: &str, parameters: Value) -> tomoqubo::Result<PathBuf> {
    let path = dir.join(format!("provenance_{name}.json"));
    let doc = serde_json::json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "command": name,
        "parameters": parameters,
    });
    write_json(&path, &doc)?;
    Ok(path)
}

pub fn path_string(path: &Path) -> String {
    path.display().to_string()
}

/// 1 for I/O and malformed input files, 2 for bad arguments, 3 for
/// validation failures.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<Error>() {
            return match e {
                Error::Io { .. } | Error::Parse { .. } | Error::UnsupportedFormat(_) => 1,
                Error::InvalidArgument(_) => 2,
                Error::DimensionMismatch(_)
                | Error::Unrepresentable { .. }
                | Error::TooLarge { .. }
                | Error::Validation(_) => 3,
            };
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return 1;
        }
    }
    1
}
