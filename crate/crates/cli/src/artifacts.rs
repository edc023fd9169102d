//! Artifact writing: fixed-format CSV bodies, JSON sidecars, atomic renames.

use crate::error::CliError;
use serde::Serialize;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

/// 17 significant digits: round-trips f64 exactly and keeps reruns
/// byte-identical.
pub fn format_float(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".to_string() } else { "-inf".to_string() }
    } else {
        format!("{v:.16e}")
    }
}

/// A CSV table with a header row.
pub struct Csv {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Csv { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn row(&mut self, cells: Vec<String>) {
        assert_eq!(cells.len(), self.header.len());
        self.rows.push(cells);
    }

    pub fn body(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// Writes through a temp file + rename so readers never see partial output.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let parent = path.parent().ok_or_else(|| CliError::Io("artifact path has no parent".into()))?;
    fs::create_dir_all(parent).map_err(|e| CliError::Io(format!("create {parent:?}: {e}")))?;
    let tmp = parent.join(format!(
        ".{}.tmp-{}",
        path.file_name().and_then(|n| n.to_str()).unwrap_or("artifact"),
        std::process::id()
    ));
    fs::write(&tmp, bytes).map_err(|e| CliError::Io(format!("write {tmp:?}: {e}")))?;
    fs::rename(&tmp, path).map_err(|e| CliError::Io(format!("rename to {path:?}: {e}")))?;
    Ok(())
}

/// Sidecar metadata stored next to every artifact; enough to re-run the
/// experiment (full config text plus the effective seed).
#[derive(Serialize)]
pub struct Sidecar<'a, E: Serialize> {
    pub library_version: &'static str,
    pub config_hash: String,
    pub config_text: &'a str,
    pub seed: Option<u64>,
    pub created_unix: u64,
    pub extra: E,
}

pub fn fnv64_hex(bytes: &[u8]) -> String {
    format!("{:016x}", gdl_core::model::fnv64(bytes))
}

pub struct ArtifactWriter<'a> {
    pub out_dir: PathBuf,
    pub prefix: Option<String>,
    pub config_text: &'a str,
    pub seed: Option<u64>,
    pub written: Vec<PathBuf>,
}

impl<'a> ArtifactWriter<'a> {
    pub fn new(out_dir: PathBuf, prefix: Option<String>, config_text: &'a str, seed: Option<u64>) -> Self {
        ArtifactWriter { out_dir, prefix, config_text, seed, written: Vec::new() }
    }

    fn path_for(&self, name: &str) -> PathBuf {
        match &self.prefix {
            Some(p) => self.out_dir.join(format!("{p}_{name}")),
            None => self.out_dir.join(name),
        }
    }

    pub fn write_csv(&mut self, name: &str, csv: &Csv) -> Result<PathBuf, CliError> {
        let path = self.path_for(name);
        write_atomic(&path, csv.body().as_bytes())?;
        self.written.push(path.clone());
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf, CliError> {
        let path = self.path_for(name);
        let mut text = serde_json::to_string_pretty(value)
            .map_err(|e| CliError::Io(format!("serialize {name}: {e}")))?;
        text.push('\n');
        write_atomic(&path, text.as_bytes())?;
        self.written.push(path.clone());
        Ok(path)
    }

    /// The metadata sidecar paired with an artifact file.
    pub fn write_sidecar<E: Serialize>(&mut self, artifact: &str, extra: E) -> Result<PathBuf, CliError> {
        let name = format!("{artifact}.meta.json");
        let sidecar = Sidecar {
            library_version: env!("CARGO_PKG_VERSION"),
            config_hash: fnv64_hex(self.config_text.as_bytes()),
            config_text: self.config_text,
            seed: self.seed,
            created_unix: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
            extra,
        };
        self.write_json(&name, &sidecar)
    }
}
