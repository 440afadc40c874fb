//! Machine-readable run reports and artifact writing.

use std::io::Write;
use std::path::Path;

use polyagent_core::laws::LawReport;
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};
use crate::scenario::{canonical_json, Scenario};

/// Finite numbers as JSON numbers; infinities and NaN as strings.
pub fn number(x: f64) -> Value {
    match serde_json::Number::from_f64(x) {
        Some(n) => Value::Number(n),
        None if x.is_nan() => Value::String("nan".into()),
        None if x > 0.0 => Value::String("inf".into()),
        None => Value::String("-inf".into()),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub residual: Value,
    #[serde(skip_serializing_if = "String::is_empty")]
    pub detail: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub skipped: Option<String>,
}

impl Check {
    pub fn new(
        name: impl Into<String>,
        residual: f64,
        tolerance: f64,
        detail: impl Into<String>,
    ) -> Self {
        Check {
            name: name.into(),
            pass: residual <= tolerance,
            residual: number(residual),
            detail: detail.into(),
            skipped: None,
        }
    }

    pub fn holds(name: impl Into<String>, ok: bool, detail: impl Into<String>) -> Self {
        Check::new(name, if ok { 0.0 } else { 1.0 }, 0.0, detail)
    }
}

impl From<LawReport> for Check {
    fn from(r: LawReport) -> Self {
        Check {
            name: r.name,
            pass: r.pass,
            residual: number(r.residual),
            detail: r.detail,
            skipped: r.skipped,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunReport {
    pub command: String,
    pub scenario_hash: Option<String>,
    pub seed: Option<u64>,
    pub ok: bool,
    pub checks: Vec<Check>,
    pub artifacts: Vec<String>,
    pub result: Value,
}

impl RunReport {
    pub fn new(command: &str, scenario: Option<&Scenario>) -> Self {
        RunReport {
            command: command.to_string(),
            scenario_hash: scenario.map(scenario_hash),
            seed: None,
            ok: true,
            checks: Vec::new(),
            artifacts: Vec::new(),
            result: Value::Null,
        }
    }

    pub fn push(&mut self, check: Check) {
        self.ok &= check.pass;
        self.checks.push(check);
    }

    pub fn to_json(&self) -> String {
        canonical_json(&serde_json::to_value(self).expect("reports serialize"))
    }
}

/// SHA-256 of the canonical serialization.
pub fn scenario_hash(scenario: &Scenario) -> String {
    hex::encode(Sha256::digest(scenario.to_canonical().as_bytes()))
}

/// Writes through a temporary file in the same directory and renames it.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let shown = path.display().to_string();
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => std::path::PathBuf::from("."),
    };
    std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&shown, e))?;
    let file_name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let tmp = dir.join(format!(".{file_name}.{}.tmp", std::process::id()));
    let mut f =
        std::fs::File::create(&tmp).map_err(|e| CliError::io(tmp.display().to_string(), e))?;
    f.write_all(bytes).map_err(|e| CliError::io(&shown, e))?;
    f.sync_all().map_err(|e| CliError::io(&shown, e))?;
    drop(f);
    std::fs::rename(&tmp, path).map_err(|e| CliError::io(&shown, e))
}

/// One compact JSON object per line.
pub fn jsonl(records: &[Value]) -> String {
    let mut s = String::new();
    for r in records {
        s.push_str(&serde_json::to_string(r).expect("values serialize"));
        s.push('\n');
    }
    s
}
