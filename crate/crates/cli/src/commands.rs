//! One pipeline per subcommand. All primary outputs are written atomically;
//! a failing stage leaves nothing half-written behind.

use std::path::{Path, PathBuf};

use embfuse_core::{
    EmbeddingEnsemble, EmbeddingSet, GpaConfig, Metric, SynthConfig, align_vocabularies,
    average_stability, center_and_normalize, eval_analogy, eval_similarity, frequency_binned_mse,
    naive_average, per_word_discrepancy, run_oracle_checks, ssea,
};

use crate::cli::{AverageArgs, Cli, Command, EvalArgs, FuseArgs, StabilityArgs, SynthCheckArgs};
use crate::error::{CliError, Result};
use crate::formats::{
    EmbeddingFormat, load_analogy_dataset, load_embeddings, load_frequency_table,
    load_similarity_dataset, save_embeddings,
};
use crate::manifest::{DropEntry, RunManifest, ZeroRowNote, manifest_path, sibling};
use crate::reports::{
    EvalRow, eval_tsv, write_curve, write_manifest, write_stability, write_transforms,
    write_verdict,
};

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Fuse(args) => cmd_fuse(args),
        Command::Average(args) => cmd_average(args),
        Command::Stability(args) => cmd_stability(args),
        Command::Eval(args) => cmd_eval(args),
        Command::SynthCheck(args) => cmd_synth_check(args),
    }
}

fn init_threads(threads: usize) {
    if threads > 0 {
        // Ignored if a pool already exists; determinism does not depend on
        // the thread count anywhere in the pipeline.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("input")
        .to_string()
}

fn file_name(path: &Path) -> String {
    path.file_name()
        .and_then(|s| s.to_str())
        .unwrap_or("manifest.json")
        .to_string()
}

fn load_all(paths: &[PathBuf], format: EmbeddingFormat) -> Result<Vec<EmbeddingSet>> {
    paths.iter().map(|p| load_embeddings(p, format)).collect()
}

fn drop_entries(paths: &[PathBuf], dropped: &[usize]) -> Vec<DropEntry> {
    paths
        .iter()
        .zip(dropped)
        .map(|(p, &d)| DropEntry {
            input: stem(p),
            dropped_words: d,
        })
        .collect()
}

/// Center+normalize every set of an ensemble, reporting zero-row counts.
fn normalize_sets(sets: Vec<EmbeddingSet>) -> (Vec<EmbeddingSet>, Vec<(String, usize)>) {
    let mut notes = Vec::new();
    let normalized = sets
        .into_iter()
        .map(|s| {
            let label = s.meta.label.clone().unwrap_or_else(|| "set".into());
            let out = center_and_normalize(&s);
            if !out.zero_rows.is_empty() {
                notes.push((label, out.zero_rows.len()));
            }
            out.set
        })
        .collect();
    (normalized, notes)
}

fn near_zero_rows(set: &EmbeddingSet) -> usize {
    let norms: Vec<f64> = set
        .rows()
        .map(|r| r.iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    let max = norms.iter().fold(0.0_f64, |a, &b| a.max(b));
    norms.iter().filter(|&&n| n <= max * 1e-12).count()
}

fn cmd_fuse(args: FuseArgs) -> Result<()> {
    init_threads(args.threads);
    let gpa = GpaConfig {
        max_sweeps: args.max_sweeps,
        rel_tolerance: args.tolerance,
        record_history: true,
    };
    let mut manifest = RunManifest::new(
        "fuse",
        &args.inputs,
        serde_json::json!({
            "format": format_name(args.format),
            "no_prenorm": args.no_prenorm,
            "no_postnorm": args.no_postnorm,
            "gpa": gpa,
            "precision": args.precision,
            "threads": args.threads,
        }),
    );

    let sets = manifest.time("load", || load_all(&args.inputs, args.format))?;
    let aligned = manifest.time("align", || align_vocabularies(&sets))?;
    manifest.drop_report = Some(drop_entries(&args.inputs, &aligned.dropped));

    let mut sets = aligned.ensemble.into_sets();
    if !args.no_prenorm {
        let (normalized, zero_notes) = manifest.time("prenorm", || normalize_sets(sets));
        sets = normalized;
        for (set, count) in zero_notes {
            manifest.zero_row_flags.push(ZeroRowNote {
                stage: "prenorm".into(),
                set,
                zero_rows: count,
            });
        }
    }
    let ensemble = EmbeddingEnsemble::new(sets)?;

    let (fused, transforms) = manifest.time("fuse", || ssea(&ensemble, &gpa))?;
    println!(
        "fused {} sets ({} words, d={}) in {} sweeps (converged: {}, final score {:.6e})",
        ensemble.k(),
        ensemble.len(),
        ensemble.dim(),
        transforms.sweeps_run,
        transforms.converged,
        transforms.score_history.last().copied().unwrap_or(f64::NAN),
    );

    let mut out_set = fused.into_set();
    if !args.no_postnorm {
        let (normalized, zero) = manifest.time("postnorm", || {
            let out = center_and_normalize(&out_set);
            (out.set, out.zero_rows.len())
        });
        out_set = normalized;
        if zero > 0 {
            manifest.zero_row_flags.push(ZeroRowNote {
                stage: "postnorm".into(),
                set: "fused".into(),
                zero_rows: zero,
            });
        }
    }

    let manifest_file = manifest_path(&args.output);
    let manifest_name = file_name(&manifest_file);
    let transforms_file = sibling(&args.output, "transforms.json");
    manifest.record_output(&args.output);
    manifest.record_output(&transforms_file);

    manifest.time("write", || -> Result<()> {
        save_embeddings(&out_set, &args.output, args.format, args.precision)?;
        write_transforms(&transforms_file, &manifest_name, &transforms)
    })?;
    write_manifest(&manifest_file, &manifest)?;
    println!("wrote {}", args.output.display());
    Ok(())
}

fn cmd_average(args: AverageArgs) -> Result<()> {
    init_threads(args.threads);
    let mut manifest = RunManifest::new(
        "average",
        &args.inputs,
        serde_json::json!({
            "format": format_name(args.format),
            "no_prenorm": args.no_prenorm,
            "no_postnorm": args.no_postnorm,
            "precision": args.precision,
            "threads": args.threads,
        }),
    );

    let sets = manifest.time("load", || load_all(&args.inputs, args.format))?;
    let aligned = manifest.time("align", || align_vocabularies(&sets))?;
    manifest.drop_report = Some(drop_entries(&args.inputs, &aligned.dropped));

    let mut sets = aligned.ensemble.into_sets();
    if !args.no_prenorm {
        let (normalized, zero_notes) = manifest.time("prenorm", || normalize_sets(sets));
        sets = normalized;
        for (set, count) in zero_notes {
            manifest.zero_row_flags.push(ZeroRowNote {
                stage: "prenorm".into(),
                set,
                zero_rows: count,
            });
        }
    }
    let ensemble = EmbeddingEnsemble::new(sets)?;

    let averaged = manifest.time("average", || naive_average(&ensemble));
    let cancelled = near_zero_rows(averaged.as_set());
    if cancelled > 0 {
        manifest.zero_row_flags.push(ZeroRowNote {
            stage: "average".into(),
            set: "averaged".into(),
            zero_rows: cancelled,
        });
        eprintln!(
            "warning: {cancelled} averaged vectors are numerically zero; \
             the inputs likely live in differently rotated spaces"
        );
    }

    let mut out_set = averaged.into_set();
    if !args.no_postnorm {
        let (normalized, zero) = manifest.time("postnorm", || {
            let out = center_and_normalize(&out_set);
            (out.set, out.zero_rows.len())
        });
        out_set = normalized;
        if zero > 0 {
            manifest.zero_row_flags.push(ZeroRowNote {
                stage: "postnorm".into(),
                set: "averaged".into(),
                zero_rows: zero,
            });
        }
    }

    let manifest_file = manifest_path(&args.output);
    manifest.record_output(&args.output);
    manifest.time("write", || {
        save_embeddings(&out_set, &args.output, args.format, args.precision)
    })?;
    write_manifest(&manifest_file, &manifest)?;
    println!("wrote {}", args.output.display());
    Ok(())
}

/// Mean per-word discrepancy over the sampled instance pairs.
fn mean_discrepancy(sets: &[EmbeddingSet], pairs: &[(usize, usize)]) -> Result<Vec<f64>> {
    let n = sets[0].len();
    let mut acc = vec![0.0; n];
    for &(i, j) in pairs {
        let disc = per_word_discrepancy(&sets[i], &sets[j])?;
        for (a, v) in acc.iter_mut().zip(&disc) {
            *a += v;
        }
    }
    for a in acc.iter_mut() {
        *a /= pairs.len() as f64;
    }
    Ok(acc)
}

fn prefixed(prefix: &Path, suffix: &str) -> PathBuf {
    PathBuf::from(format!("{}.{}", prefix.display(), suffix))
}

fn cmd_stability(args: StabilityArgs) -> Result<()> {
    init_threads(args.threads);
    let mut manifest = RunManifest::new(
        "stability",
        &args.inputs,
        serde_json::json!({
            "format": format_name(args.format),
            "fused_inputs": args.fused.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
            "num_pairs": args.pairs,
            "seed": args.seed,
            "freq_table": args.freq_table.as_ref().map(|p| p.display().to_string()),
            "bin_width": args.bin_width,
            "raw_vectors": args.raw,
            "threads": args.threads,
        }),
    );
    let manifest_file = prefixed(&args.output, "manifest.json");
    let manifest_name = file_name(&manifest_file);

    let raw_count = args.inputs.len();
    let mut all_paths = args.inputs.clone();
    all_paths.extend(args.fused.iter().cloned());
    let sets = manifest.time("load", || load_all(&all_paths, args.format))?;

    // Everything is compared over one shared vocabulary.
    let aligned = manifest.time("align", || align_vocabularies(&sets))?;
    manifest.drop_report = Some(drop_entries(&all_paths, &aligned.dropped));

    let mut sets = aligned.ensemble.into_sets();
    if !args.raw {
        let (normalized, zero_notes) = manifest.time("normalize", || normalize_sets(sets));
        sets = normalized;
        for (set, count) in zero_notes {
            manifest.zero_row_flags.push(ZeroRowNote {
                stage: "normalize".into(),
                set,
                zero_rows: count,
            });
        }
    }
    let fused_sets = sets.split_off(raw_count);
    let raw_sets = sets;

    let raw_report = manifest.time("stability-raw", || {
        average_stability(&raw_sets, args.pairs, args.seed)
    })?;
    let raw_json = prefixed(&args.output, "raw.stability.json");
    write_stability(&raw_json, &manifest_name, &raw_report)?;
    manifest.record_output(&raw_json);
    println!(
        "raw: mean MSE {:.6e} ± {:.6e} over {} pairs",
        raw_report.mean_mse, raw_report.std_mse, raw_report.num_pairs
    );

    let fused_report = if fused_sets.is_empty() {
        None
    } else {
        let report = manifest.time("stability-fused", || {
            average_stability(&fused_sets, args.pairs, args.seed)
        })?;
        let path = prefixed(&args.output, "fused.stability.json");
        write_stability(&path, &manifest_name, &report)?;
        manifest.record_output(&path);
        println!(
            "fused: mean MSE {:.6e} ± {:.6e} over {} pairs (ratio {:.3})",
            report.mean_mse,
            report.std_mse,
            report.num_pairs,
            report.mean_mse / raw_report.mean_mse.max(1e-300)
        );
        Some(report)
    };

    match &args.freq_table {
        Some(freq_path) => {
            let table = load_frequency_table(freq_path)?;
            let vocab = raw_sets[0].words();

            let disc = mean_discrepancy(&raw_sets, &raw_report.sampled_pairs)?;
            let curve = frequency_binned_mse(&disc, &table, vocab, args.bin_width)?;
            if curve.skipped_missing > 0 {
                manifest.note(format!(
                    "{} vocabulary words missing from the frequency table were \
                     excluded from the curve",
                    curve.skipped_missing
                ));
            }
            let path = prefixed(&args.output, "raw.curve.tsv");
            write_curve(&path, &manifest_name, &curve)?;
            manifest.record_output(&path);

            if let Some(report) = &fused_report {
                let disc = mean_discrepancy(&fused_sets, &report.sampled_pairs)?;
                let curve = frequency_binned_mse(&disc, &table, vocab, args.bin_width)?;
                let path = prefixed(&args.output, "fused.curve.tsv");
                write_curve(&path, &manifest_name, &curve)?;
                manifest.record_output(&path);
            }
        }
        None => manifest.note("no frequency table supplied; binned curve skipped".to_string()),
    }

    write_manifest(&manifest_file, &manifest)?;
    Ok(())
}

enum DatasetKind {
    Similarity,
    Analogy,
}

fn parse_dataset_arg(raw: &str) -> Result<(DatasetKind, PathBuf)> {
    let (tag, path) = raw.split_once(':').ok_or_else(|| {
        CliError::Usage(format!(
            "dataset {raw:?} is not of the form TYPE:PATH (TYPE: similarity, analogy)"
        ))
    })?;
    let kind = match tag {
        "similarity" => DatasetKind::Similarity,
        "analogy" => DatasetKind::Analogy,
        other => {
            return Err(CliError::Usage(format!(
                "unknown dataset type {other:?} (expected similarity or analogy)"
            )));
        }
    };
    Ok((kind, PathBuf::from(path)))
}

fn cmd_eval(args: EvalArgs) -> Result<()> {
    init_threads(args.threads);
    let datasets: Vec<(DatasetKind, PathBuf)> = args
        .datasets
        .iter()
        .map(|raw| parse_dataset_arg(raw))
        .collect::<Result<_>>()?;

    let set = load_embeddings(&args.embedding, args.format)?;
    let method = stem(&args.embedding);

    let mut rows = Vec::new();
    for (kind, path) in &datasets {
        let row = match kind {
            DatasetKind::Similarity => {
                let data = load_similarity_dataset(path)?;
                match eval_similarity(&set, &data, args.lowercase_fallback) {
                    Ok(res) => Ok(res),
                    Err(e) => {
                        eprintln!("warning: {}: {e}", path.display());
                        Err((Metric::Spearman, data.len(), e.to_string()))
                    }
                }
            }
            DatasetKind::Analogy => {
                let data = load_analogy_dataset(path)?;
                match eval_analogy(&set, &data, args.lowercase_fallback) {
                    Ok(res) => Ok(res),
                    Err(e) => {
                        eprintln!("warning: {}: {e}", path.display());
                        Err((Metric::Accuracy, data.len(), e.to_string()))
                    }
                }
            }
        };
        rows.push(EvalRow {
            method: method.clone(),
            dataset: stem(path),
            outcome: row,
        });
    }

    if let Some(out) = &args.output {
        let manifest_file = manifest_path(out);
        let mut manifest = RunManifest::new(
            "eval",
            std::slice::from_ref(&args.embedding),
            serde_json::json!({
                "format": format_name(args.format),
                "datasets": args.datasets,
                "lowercase_fallback": args.lowercase_fallback,
                "threads": args.threads,
            }),
        );
        let body = eval_tsv(&rows, Some(&file_name(&manifest_file)));
        crate::formats::write_atomic(out, body.as_bytes())?;
        manifest.record_output(out);
        write_manifest(&manifest_file, &manifest)?;
    }
    print!("{}", eval_tsv(&rows, None));
    Ok(())
}

fn cmd_synth_check(args: SynthCheckArgs) -> Result<()> {
    init_threads(args.threads);
    if args.k < 2 {
        return Err(CliError::Usage(format!(
            "--k must be at least 2 (got {})",
            args.k
        )));
    }
    let config = SynthConfig {
        n: args.n,
        d: args.d,
        k: args.k,
        sigma: args.sigma,
        seed: args.seed,
        freq_profile: args.freq_exponent,
    };
    let verdict = run_oracle_checks(&config)?;

    for check in &verdict.checks {
        println!(
            "[{}] {}: measured {:.6e} (bound {} {:.6e})",
            if check.pass { "PASS" } else { "FAIL" },
            check.name,
            check.measured,
            check.comparison,
            check.bound
        );
    }

    if let Some(out) = &args.output {
        let manifest_file = manifest_path(out);
        let mut manifest = RunManifest::new(
            "synth-check",
            &[],
            serde_json::to_value(&config).expect("config serializes"),
        );
        manifest.record_output(out);
        write_verdict(out, &file_name(&manifest_file), &verdict)?;
        write_manifest(&manifest_file, &manifest)?;
    }

    if verdict.all_pass {
        println!("all {} checks passed", verdict.checks.len());
        Ok(())
    } else {
        let failed = verdict.checks.iter().filter(|c| !c.pass).count();
        Err(CliError::Oracle(format!(
            "{failed}/{} checks failed",
            verdict.checks.len()
        )))
    }
}

fn format_name(format: EmbeddingFormat) -> &'static str {
    match format {
        EmbeddingFormat::Header => "header",
        EmbeddingFormat::Headerless => "headerless",
    }
}
