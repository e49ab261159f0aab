//! Text file formats: embedding vectors (with or without an "n d" header
//! line), `token<TAB>count` frequency tables, and the similarity/analogy
//! benchmark layouts.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use embfuse_core::{
    AnalogyDataset, AnalogyItem, EmbeddingSet, FrequencyTable, SimilarityDataset, SimilarityItem,
};

use crate::error::{CliError, Result};

/// On-disk embedding layout. The canonical format starts with an "n d"
/// header line; the headerless variant (GloVe-style) infers d from the first
/// row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum EmbeddingFormat {
    /// First line "n d", then one "token v1 … vd" line per word.
    Header,
    /// "token v1 … vd" lines only.
    Headerless,
}

fn parse_value(path: &Path, line_no: usize, raw: &str) -> Result<f64> {
    let v: f64 = raw
        .parse()
        .map_err(|_| CliError::parse(path, line_no, format!("non-numeric value {raw:?}")))?;
    if !v.is_finite() {
        return Err(CliError::parse(
            path,
            line_no,
            format!("non-finite value {raw:?}"),
        ));
    }
    Ok(v)
}

/// Load an embedding set; the set label is the file stem.
pub fn load_embeddings(path: &Path, format: EmbeddingFormat) -> Result<EmbeddingSet> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    let reader = BufReader::new(file);

    let mut words: Vec<String> = Vec::new();
    let mut data: Vec<f64> = Vec::new();
    let mut dim: Option<usize> = None;
    let mut declared: Option<(usize, usize)> = None;

    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| CliError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split_whitespace();

        if format == EmbeddingFormat::Header && line_no == 1 {
            let parse_count = |raw: Option<&str>| -> Result<usize> {
                raw.and_then(|s| s.parse().ok())
                    .ok_or_else(|| CliError::parse(path, 1, "header line must be \"n d\""))
            };
            let n = parse_count(fields.next())?;
            let d = parse_count(fields.next())?;
            if fields.next().is_some() || d == 0 {
                return Err(CliError::parse(path, 1, "header line must be \"n d\""));
            }
            declared = Some((n, d));
            dim = Some(d);
            continue;
        }

        let token = fields
            .next()
            .ok_or_else(|| CliError::parse(path, line_no, "missing token"))?;
        let values: Vec<f64> = fields
            .map(|raw| parse_value(path, line_no, raw))
            .collect::<Result<_>>()?;
        if values.is_empty() {
            return Err(CliError::parse(path, line_no, "row has no vector values"));
        }
        match dim {
            None => dim = Some(values.len()),
            Some(d) if values.len() != d => {
                return Err(CliError::parse(
                    path,
                    line_no,
                    format!("row has {} values but d={}", values.len(), d),
                ));
            }
            _ => {}
        }
        words.push(token.to_string());
        data.extend_from_slice(&values);
    }

    if words.is_empty() {
        return Err(CliError::Validation(embfuse_core::Error::TooFew {
            what: "embedding rows",
            required: 1,
            actual: 0,
        }));
    }
    if let Some((n, _)) = declared
        && words.len() != n
    {
        return Err(CliError::parse(
            path,
            1,
            format!("header declares {} rows, file has {}", n, words.len()),
        ));
    }

    let dim = dim.expect("rows were parsed");
    let set = EmbeddingSet::new(words, data, dim).map_err(CliError::Validation)?;
    Ok(match path.file_stem().and_then(|s| s.to_str()) {
        Some(stem) => set.with_label(stem),
        None => set,
    })
}

fn format_value(v: f64, precision: Option<u32>) -> String {
    match precision {
        // Fixed significant digits, scientific notation.
        Some(p) => format!("{:.*e}", p.saturating_sub(1) as usize, v),
        // Shortest representation that round-trips exactly.
        None => format!("{v}"),
    }
}

/// Write an embedding set. `precision` is in significant digits; `None`
/// writes the shortest exact round-trip representation. The file appears
/// atomically (temp file + rename).
pub fn save_embeddings(
    set: &EmbeddingSet,
    path: &Path,
    format: EmbeddingFormat,
    precision: Option<u32>,
) -> Result<()> {
    let mut body = String::new();
    if format == EmbeddingFormat::Header {
        body.push_str(&format!("{} {}\n", set.len(), set.dim()));
    }
    for (word, row) in set.words().iter().zip(set.rows()) {
        body.push_str(word);
        for v in row {
            body.push(' ');
            body.push_str(&format_value(*v, precision));
        }
        body.push('\n');
    }
    write_atomic(path, body.as_bytes())
}

/// `token<TAB>count` per line; empty files are valid empty tables.
pub fn load_frequency_table(path: &Path) -> Result<FrequencyTable> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    let reader = BufReader::new(file);
    let mut table = FrequencyTable::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| CliError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let (token, raw) = line
            .split_once('\t')
            .ok_or_else(|| CliError::parse(path, line_no, "expected token<TAB>count"))?;
        let count: u64 = raw
            .trim()
            .parse()
            .map_err(|_| CliError::parse(path, line_no, format!("invalid count {raw:?}")))?;
        table.insert(token, count);
    }
    Ok(table)
}

/// `word1<TAB>word2<TAB>score` per line.
pub fn load_similarity_dataset(path: &Path) -> Result<SimilarityDataset> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    let reader = BufReader::new(file);
    let mut items = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| CliError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(CliError::parse(
                path,
                line_no,
                format!("expected 3 tab-separated fields, got {}", fields.len()),
            ));
        }
        let score = parse_value(path, line_no, fields[2].trim())?;
        items.push(SimilarityItem {
            word_a: fields[0].to_string(),
            word_b: fields[1].to_string(),
            score,
        });
    }
    SimilarityDataset::new(items).map_err(CliError::Validation)
}

/// "a b c d" per line; ": section" header lines are ignored.
pub fn load_analogy_dataset(path: &Path) -> Result<AnalogyDataset> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    let reader = BufReader::new(file);
    let mut items = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| CliError::io(path, e))?;
        if line.trim().is_empty() || line.starts_with(':') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(CliError::parse(
                path,
                line_no,
                format!("expected 4 words, got {}", fields.len()),
            ));
        }
        items.push(AnalogyItem {
            a: fields[0].to_string(),
            b: fields[1].to_string(),
            c: fields[2].to_string(),
            d: fields[3].to_string(),
        });
    }
    AnalogyDataset::new(items).map_err(CliError::Validation)
}

/// Write through a temp file in the target directory and rename into place,
/// so a failing run never leaves a partial artifact.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let mut tmp = tempfile::NamedTempFile::new_in(dir.unwrap_or_else(|| Path::new(".")))
        .map_err(|e| CliError::io(path, e))?;
    {
        let mut writer = BufWriter::new(&mut tmp);
        writer.write_all(bytes).map_err(|e| CliError::io(path, e))?;
        writer.flush().map_err(|e| CliError::io(path, e))?;
    }
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}
