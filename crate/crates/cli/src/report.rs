use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::Value;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Failed,
    Unknown,
    Info,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerdictLine {
    pub name: String,
    pub status: Status,
    pub detail: Value,
}

#[derive(Debug, Serialize)]
pub struct CommandReport {
    pub command: String,
    pub inputs: BTreeMap<String, Value>,
    pub verdicts: Vec<VerdictLine>,
    /// Milliseconds per phase.
    pub timings: BTreeMap<String, f64>,
    /// File names, relative to the output directory.
    pub artifacts: Vec<String>,
    #[serde(skip)]
    out_dir: PathBuf,
    #[serde(skip)]
    record_timings: bool,
}

impl CommandReport {
    pub fn new(command: &str, out_dir: &Path, record_timings: bool) -> Self {
        CommandReport {
            command: command.to_string(),
            inputs: BTreeMap::new(),
            verdicts: Vec::new(),
            timings: BTreeMap::new(),
            artifacts: Vec::new(),
            out_dir: out_dir.to_path_buf(),
            record_timings,
        }
    }

    pub fn input(&mut self, key: &str, value: impl Serialize) {
        self.inputs.insert(key.to_string(), serde_json::to_value(value).expect("serializable input"));
    }

    pub fn verdict(&mut self, name: &str, status: Status, detail: impl Serialize) {
        let detail = serde_json::to_value(detail).expect("serializable detail");
        self.verdicts.push(VerdictLine { name: name.to_string(), status, detail });
    }

    pub fn check(&mut self, name: &str, ok: bool, detail: impl Serialize) {
        self.verdict(name, if ok { Status::Pass } else { Status::Failed }, detail);
    }

    pub fn time<T>(&mut self, phase: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        if self.record_timings {
            *self.timings.entry(phase.to_string()).or_default() += start.elapsed().as_secs_f64() * 1e3;
        }
        out
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        let path = self.out_dir.join(name);
        let fail = |e: std::io::Error| CliError::Write { path: path.display().to_string(), reason: e.to_string() };
        std::fs::create_dir_all(&self.out_dir).map_err(fail)?;
        std::fs::write(&path, contents).map_err(fail)?;
        self.artifacts.push(name.to_string());
        Ok(())
    }

    pub fn failed(&self) -> bool {
        self.verdicts.iter().any(|v| v.status == Status::Failed)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
