//! File-format surface: embedding text layouts, frequency tables and the
//! benchmark dataset loaders.

use std::fs;
use std::path::PathBuf;

use embfuse::error::CliError;
use embfuse::formats::{
    EmbeddingFormat, load_analogy_dataset, load_embeddings, load_frequency_table,
    load_similarity_dataset, save_embeddings,
};
use embfuse_core::EmbeddingSet;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

fn write_tmp(dir: &tempfile::TempDir, name: &str, body: &str) -> PathBuf {
    let path = dir.path().join(name);
    fs::write(&path, body).unwrap();
    path
}

#[test]
fn loads_header_format() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_tmp(&dir, "e.txt", "2 2\na 1 0\nb 0 1\n");
    let set = load_embeddings(&path, EmbeddingFormat::Header).unwrap();
    assert_eq!(set.words(), &["a".to_string(), "b".to_string()]);
    assert_eq!(set.data(), &[1.0, 0.0, 0.0, 1.0]);
    assert_eq!(set.meta.label.as_deref(), Some("e"));
}

#[test]
fn loads_headerless_format_with_inferred_dimension() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_tmp(&dir, "e.txt", "a 1 0\nb 0 1\n");
    let set = load_embeddings(&path, EmbeddingFormat::Headerless).unwrap();
    assert_eq!(set.words(), &["a".to_string(), "b".to_string()]);
    assert_eq!(set.data(), &[1.0, 0.0, 0.0, 1.0]);
    assert_eq!(set.dim(), 2);
}

#[test]
fn arity_mismatch_reports_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_tmp(&dir, "e.txt", "1 3\na 1 2\n");
    let err = load_embeddings(&path, EmbeddingFormat::Header).unwrap_err();
    match err {
        CliError::Parse { line, msg, .. } => {
            assert_eq!(line, 2);
            assert!(msg.contains("d=3"), "{msg}");
        }
        other => panic!("expected parse error, got {other:?}"),
    }
}

#[test]
fn non_numeric_value_reports_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_tmp(&dir, "e.txt", "a 1 x\nb 0 1\n");
    let err = load_embeddings(&path, EmbeddingFormat::Headerless).unwrap_err();
    match err {
        CliError::Parse { line, .. } => assert_eq!(line, 1),
        other => panic!("expected parse error, got {other:?}"),
    }
}

#[test]
fn duplicate_token_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_tmp(&dir, "e.txt", "a 1 0\na 0 1\n");
    assert!(matches!(
        load_embeddings(&path, EmbeddingFormat::Headerless).unwrap_err(),
        CliError::Validation(embfuse_core::Error::DuplicateToken(_))
    ));
}

#[test]
fn empty_file_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_tmp(&dir, "e.txt", "");
    assert!(load_embeddings(&path, EmbeddingFormat::Headerless).is_err());
}

#[test]
fn header_row_count_mismatch_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_tmp(&dir, "e.txt", "3 2\na 1 0\nb 0 1\n");
    assert!(load_embeddings(&path, EmbeddingFormat::Header).is_err());
}

#[test]
fn full_precision_round_trip_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha12Rng::seed_from_u64(80);
    let words: Vec<String> = (0..20).map(|t| format!("w{t}")).collect();
    let data: Vec<f64> = (0..20 * 7).map(|_| rng.sample(StandardNormal)).collect();
    let set = EmbeddingSet::new(words, data, 7).unwrap();

    for format in [EmbeddingFormat::Header, EmbeddingFormat::Headerless] {
        let path = dir.path().join("rt.txt");
        save_embeddings(&set, &path, format, None).unwrap();
        let back = load_embeddings(&path, format).unwrap();
        assert_eq!(back.words(), set.words());
        for (a, b) in back.data().iter().zip(set.data()) {
            assert!((a - b).abs() <= 1e-12, "{a} vs {b}");
            assert_eq!(a, b); // shortest representation round-trips exactly
        }
    }
}

#[test]
fn six_digit_round_trip_is_close() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha12Rng::seed_from_u64(81);
    let words: Vec<String> = (0..10).map(|t| format!("w{t}")).collect();
    let data: Vec<f64> = (0..10 * 4).map(|_| rng.sample(StandardNormal)).collect();
    let set = EmbeddingSet::new(words, data, 4).unwrap();

    let path = dir.path().join("rt6.txt");
    save_embeddings(&set, &path, EmbeddingFormat::Header, Some(6)).unwrap();
    let back = load_embeddings(&path, EmbeddingFormat::Header).unwrap();
    for (a, b) in back.data().iter().zip(set.data()) {
        assert!((a - b).abs() <= 1e-5, "{a} vs {b}");
    }
}

#[test]
fn unwritable_path_is_an_io_error() {
    let set = EmbeddingSet::new(vec!["a".into()], vec![1.0], 1).unwrap();
    let path = PathBuf::from("/nonexistent-directory/e.txt");
    assert!(matches!(
        save_embeddings(&set, &path, EmbeddingFormat::Header, None).unwrap_err(),
        CliError::Io { .. }
    ));
}

#[test]
fn frequency_table_parses_tokens_and_counts() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_tmp(&dir, "f.tsv", "the\t100\nzyx\t3\n");
    let table = load_frequency_table(&path).unwrap();
    assert_eq!(table.get("the"), Some(100));
    assert_eq!(table.get("zyx"), Some(3));
    assert_eq!(table.len(), 2);
}

#[test]
fn negative_count_is_a_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_tmp(&dir, "f.tsv", "a\t-1\n");
    match load_frequency_table(&path).unwrap_err() {
        CliError::Parse { line, .. } => assert_eq!(line, 1),
        other => panic!("expected parse error, got {other:?}"),
    }
}

#[test]
fn empty_frequency_table_is_valid() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_tmp(&dir, "f.tsv", "");
    assert!(load_frequency_table(&path).unwrap().is_empty());
}

#[test]
fn similarity_loader_reads_tab_separated_triples() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_tmp(&dir, "s.tsv", "cat\tdog\t7.35\nsun\tmoon\t5.1\n");
    let data = load_similarity_dataset(&path).unwrap();
    assert_eq!(data.len(), 2);
    assert_eq!(data.items()[0].word_a, "cat");
    assert!((data.items()[0].score - 7.35).abs() < 1e-12);
}

#[test]
fn similarity_loader_rejects_wrong_field_count() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_tmp(&dir, "s.tsv", "cat\tdog\n");
    assert!(matches!(
        load_similarity_dataset(&path).unwrap_err(),
        CliError::Parse { .. }
    ));
}

#[test]
fn analogy_loader_skips_section_headers() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_tmp(
        &dir,
        "a.txt",
        ": capital-common-countries\nathens greece baghdad iraq\n",
    );
    let data = load_analogy_dataset(&path).unwrap();
    assert_eq!(data.len(), 1);
    assert_eq!(data.items()[0].a, "athens");
    assert_eq!(data.items()[0].d, "iraq");
}

#[test]
fn analogy_loader_rejects_three_tokens() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_tmp(&dir, "a.txt", "a b c\n");
    match load_analogy_dataset(&path).unwrap_err() {
        CliError::Parse { line, .. } => assert_eq!(line, 1),
        other => panic!("expected parse error, got {other:?}"),
    }
}
