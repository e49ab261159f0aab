//! JSON and TSV artifact writers. Machine artifacts go to files through the
//! atomic writer; human-readable tables go to standard output.

use std::path::Path;

use embfuse_core::{BinnedCurve, EvalResult, Metric, StabilityReport, SynthVerdict, TransformSet};

use crate::error::Result;
use crate::formats::write_atomic;

/// JSON payload wrapper adding the back-reference to the run manifest.
#[derive(serde::Serialize)]
struct Artifact<'a, T: serde::Serialize> {
    manifest: &'a str,
    #[serde(flatten)]
    payload: &'a T,
}

fn write_json<T: serde::Serialize>(path: &Path, manifest_name: &str, payload: &T) -> Result<()> {
    let artifact = Artifact {
        manifest: manifest_name,
        payload,
    };
    let mut body = serde_json::to_string_pretty(&artifact).expect("serializable artifact");
    body.push('\n');
    write_atomic(path, body.as_bytes())
}

pub fn write_transforms(path: &Path, manifest_name: &str, ts: &TransformSet) -> Result<()> {
    write_json(path, manifest_name, ts)
}

pub fn write_stability(path: &Path, manifest_name: &str, report: &StabilityReport) -> Result<()> {
    write_json(path, manifest_name, report)
}

pub fn write_verdict(path: &Path, manifest_name: &str, verdict: &SynthVerdict) -> Result<()> {
    write_json(path, manifest_name, verdict)
}

pub fn write_manifest(path: &Path, manifest: &crate::manifest::RunManifest) -> Result<()> {
    let mut body = serde_json::to_string_pretty(manifest).expect("serializable manifest");
    body.push('\n');
    write_atomic(path, body.as_bytes())
}

/// Plot-ready curve: `bin_lower<TAB>mean_mse<TAB>n_words`, one line per
/// populated bin, with the manifest reference in a leading comment.
pub fn curve_tsv(curve: &BinnedCurve, manifest_name: &str) -> String {
    let mut out = format!("# manifest: {manifest_name}\nbin_lower\tmean_mse\tn_words\n");
    for p in &curve.points {
        out.push_str(&format!(
            "{}\t{}\t{}\n",
            p.bin_lower, p.mean_mse, p.word_count
        ));
    }
    out
}

pub fn write_curve(path: &Path, manifest_name: &str, curve: &BinnedCurve) -> Result<()> {
    write_atomic(path, curve_tsv(curve, manifest_name).as_bytes())
}

/// One scored benchmark for the eval TSV.
pub struct EvalRow {
    pub method: String,
    pub dataset: String,
    pub outcome: std::result::Result<EvalResult, (Metric, usize, String)>,
}

fn metric_name(metric: Metric) -> &'static str {
    match metric {
        Metric::Spearman => "spearman",
        Metric::Accuracy => "accuracy",
    }
}

/// `method dataset metric value evaluated skipped` per row; failed datasets
/// keep their row with value NA so coverage stays visible.
pub fn eval_tsv(rows: &[EvalRow], manifest_name: Option<&str>) -> String {
    let mut out = String::new();
    if let Some(name) = manifest_name {
        out.push_str(&format!("# manifest: {name}\n"));
    }
    out.push_str("method\tdataset\tmetric\tvalue\tevaluated\tskipped_oov\n");
    for row in rows {
        match &row.outcome {
            Ok(res) => out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\n",
                row.method,
                row.dataset,
                metric_name(res.metric),
                res.value,
                res.evaluated,
                res.skipped_oov
            )),
            Err((metric, skipped, _)) => out.push_str(&format!(
                "{}\t{}\t{}\tNA\t0\t{}\n",
                row.method,
                row.dataset,
                metric_name(*metric),
                skipped
            )),
        }
    }
    out
}
