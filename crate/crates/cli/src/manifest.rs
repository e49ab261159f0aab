//! Run manifest: one JSON record per invocation tying together inputs,
//! configuration, normalization/drop accounting and per-stage wall time.
//! Every other artifact a run writes carries the manifest's file name.

use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Debug, Clone, serde::Serialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct DropEntry {
    pub input: String,
    pub dropped_words: usize,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct ZeroRowNote {
    pub stage: String,
    pub set: String,
    pub zero_rows: usize,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: String,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    /// Echo of the effective flags and numeric configuration.
    pub config: serde_json::Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub drop_report: Option<Vec<DropEntry>>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub zero_row_flags: Vec<ZeroRowNote>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    /// Wall-clock time per pipeline stage. The only non-deterministic field.
    pub timings_s: Vec<StageTiming>,
}

impl RunManifest {
    pub fn new(subcommand: &str, inputs: &[PathBuf], config: serde_json::Value) -> Self {
        Self {
            tool: "embfuse",
            version: env!("CARGO_PKG_VERSION"),
            subcommand: subcommand.to_string(),
            inputs: inputs.iter().map(|p| p.display().to_string()).collect(),
            outputs: Vec::new(),
            config,
            drop_report: None,
            zero_row_flags: Vec::new(),
            notes: Vec::new(),
            timings_s: Vec::new(),
        }
    }

    /// Run a pipeline stage and record its wall time.
    pub fn time<T>(&mut self, stage: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.timings_s.push(StageTiming {
            stage: stage.to_string(),
            seconds: start.elapsed().as_secs_f64(),
        });
        out
    }

    pub fn record_output(&mut self, path: &Path) {
        self.outputs.push(path.display().to_string());
    }

    pub fn note(&mut self, message: impl Into<String>) {
        self.notes.push(message.into());
    }
}

/// The manifest file name that goes next to a primary output: `<stem or file
/// name>.manifest.json` in the same directory.
pub fn manifest_path(primary_output: &Path) -> PathBuf {
    sibling(primary_output, "manifest.json")
}

/// `<output>.<suffix>` next to the output, e.g. `fused.txt.transforms.json`
/// becomes `fused.transforms.json`.
pub fn sibling(primary_output: &Path, suffix: &str) -> PathBuf {
    let stem = primary_output
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("out");
    primary_output.with_file_name(format!("{stem}.{suffix}"))
}
