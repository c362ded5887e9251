//! CSV and JSON artifact helpers.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::Result;

/// Seventeen significant digits, enough to round-trip an f64.
pub fn fmt_f64(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    format!("{x:.16e}")
}

/// Write a CSV file from a header and pre-formatted rows.
pub fn write_csv<P: AsRef<Path>>(path: P, header: &str, rows: impl IntoIterator<Item = String>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{header}")?;
    for row in rows {
        writeln!(w, "{row}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn csv_string(header: &str, rows: impl IntoIterator<Item = String>) -> String {
    let mut s = String::from(header);
    s.push('\n');
    for row in rows {
        s.push_str(&row);
        s.push('\n');
    }
    s
}

/// sha256 of the canonical (key-sorted) JSON form of a config.
pub fn config_hash(config: &Value) -> String {
    let canon = serde_json::to_string(config).expect("json values always serialise");
    let digest = Sha256::digest(canon.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Metadata written next to every artifact as `<artifact>.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub command: String,
    pub config: Value,
    pub config_hash: String,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Value::is_null")]
    pub metadata: Value,
}

impl Sidecar {
    pub fn new(command: &str, config: Value, seed: u64, metadata: Value) -> Self {
        let config_hash = config_hash(&config);
        Sidecar {
            command: command.to_string(),
            config,
            config_hash,
            seed,
            metadata,
        }
    }
}

pub fn sidecar_path(artifact: &Path) -> PathBuf {
    let mut s = artifact.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

pub fn write_json<P: AsRef<Path>, T: Serialize>(path: P, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value).expect("serialisable");
    s.push('\n');
    std::fs::write(path, s)?;
    Ok(())
}

/// Serde adapter for f64 fields that may hold ±∞ or NaN, written as the
/// strings "inf", "-inf" and "nan".
pub mod nonfinite {
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_finite() {
            s.serialize_f64(*x)
        } else if x.is_nan() {
            s.serialize_str("nan")
        } else if *x > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Str(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(x) => Ok(x),
            Repr::Str(s) => match s.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(D::Error::custom(format!("expected a number, got '{other}'"))),
            },
        }
    }
}
