//! Reading and writing embedding, label and level-order files.
//!
//! Embeddings come as JSON lines (`{"id": "...", "vector": [...]}` per line,
//! `#` comment lines allowed) or as word2vec text (`N D` header, then
//! `token v1 ... vD`). Labels are `id<TAB>level` lines; the level-order file
//! lists level names one per line, easiest first.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{EmbeddingSet, LabeledDataset, NormPolicy};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EmbeddingFormat {
    #[default]
    JsonLines,
    Word2VecText,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawEmbeddingFile {
    pub path: PathBuf,
    pub format: EmbeddingFormat,
    pub declared_dim: Option<usize>,
}

impl RawEmbeddingFile {
    pub fn new(path: impl Into<PathBuf>, format: EmbeddingFormat) -> Self {
        Self { path: path.into(), format, declared_dim: None }
    }
}

#[derive(Deserialize)]
struct JsonRow {
    id: String,
    vector: Vec<f64>,
}

#[derive(Serialize)]
struct JsonRowRef<'a> {
    id: &'a str,
    vector: &'a [f64],
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

pub fn read_embeddings(file: &RawEmbeddingFile, policy: NormPolicy) -> Result<EmbeddingSet> {
    let reader = open(&file.path)?;
    parse_embeddings(reader, file.format, file.declared_dim, policy).map_err(|e| match e {
        Error::EmptyFile(_) => Error::EmptyFile(file.path.display().to_string()),
        e => e,
    })
}

pub fn parse_embeddings<R: BufRead>(
    reader: R,
    format: EmbeddingFormat,
    declared_dim: Option<usize>,
    policy: NormPolicy,
) -> Result<EmbeddingSet> {
    let rows = match format {
        EmbeddingFormat::JsonLines => parse_json_lines(reader, declared_dim)?,
        EmbeddingFormat::Word2VecText => parse_word2vec_text(reader, declared_dim)?,
    };
    let Some(dim) = rows.first().map(|(_, v, _)| v.len()) else {
        return Err(Error::EmptyFile("embedding input".into()));
    };
    let mut seen = std::collections::HashSet::with_capacity(rows.len());
    for (id, _, _) in &rows {
        if !seen.insert(id.as_str()) {
            return Err(Error::DuplicateId(id.clone()));
        }
    }
    let items = rows.into_iter().map(|(id, v, _)| (id, v)).collect();
    EmbeddingSet::new(dim, items, policy)
}

type Row = (String, Vec<f64>, usize);

fn check_dim(expected: &mut Option<usize>, found: usize, line: usize) -> Result<()> {
    match *expected {
        Some(d) if d != found => Err(Error::DimMismatch { line, expected: d, found }),
        Some(_) => Ok(()),
        None => {
            *expected = Some(found);
            Ok(())
        }
    }
}

fn parse_json_lines<R: BufRead>(reader: R, declared_dim: Option<usize>) -> Result<Vec<Row>> {
    let mut dim = declared_dim;
    let mut rows = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line_no = n + 1;
        let line = line?;
        let text = line.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        let row: JsonRow =
            serde_json::from_str(text).map_err(|e| Error::Parse { line: line_no, msg: e.to_string() })?;
        check_dim(&mut dim, row.vector.len(), line_no)?;
        rows.push((row.id, row.vector, line_no));
    }
    Ok(rows)
}

fn parse_word2vec_text<R: BufRead>(reader: R, declared_dim: Option<usize>) -> Result<Vec<Row>> {
    let mut lines = reader.lines().enumerate();
    let (header_no, header) = loop {
        match lines.next() {
            None => return Ok(Vec::new()),
            Some((n, line)) => {
                let line = line?;
                if !line.trim().is_empty() {
                    break (n + 1, line);
                }
            }
        }
    };
    let fields: Vec<&str> = header.split_whitespace().collect();
    let parse_count = |s: &str| {
        s.parse::<usize>().map_err(|e| Error::Parse { line: header_no, msg: format!("bad header field `{s}`: {e}") })
    };
    let [count, dim] = fields[..] else {
        return Err(Error::Parse { line: header_no, msg: "expected header `N D`".into() });
    };
    let (count, dim) = (parse_count(count)?, parse_count(dim)?);
    if let Some(d) = declared_dim.filter(|&d| d != dim) {
        return Err(Error::DimMismatch { line: header_no, expected: d, found: dim });
    }

    let mut rows = Vec::with_capacity(count);
    for (n, line) in lines {
        let line_no = n + 1;
        let line = line?;
        let mut parts = line.split_whitespace();
        let Some(token) = parts.next() else { continue };
        let vector = parts
            .map(|s| {
                s.parse::<f64>().map_err(|e| Error::Parse { line: line_no, msg: format!("bad number `{s}`: {e}") })
            })
            .collect::<Result<Vec<_>>>()?;
        if vector.len() != dim {
            return Err(Error::DimMismatch { line: line_no, expected: dim, found: vector.len() });
        }
        rows.push((token.to_string(), vector, line_no));
    }
    if rows.len() != count {
        return Err(Error::Parse {
            line: header_no,
            msg: format!("header declares {count} rows, found {}", rows.len()),
        });
    }
    Ok(rows)
}

/// Writes one JSON object per item; floats use the shortest representation
/// that parses back to the same value.
pub fn write_embeddings_jsonl<W: Write>(embeddings: &EmbeddingSet, mut out: W) -> Result<()> {
    for (id, vector) in embeddings.iter() {
        let row =
            serde_json::to_string(&JsonRowRef { id, vector }).map_err(|e| Error::InvalidArgument(e.to_string()))?;
        writeln!(out, "{row}")?;
    }
    Ok(())
}

pub fn parse_level_order<R: BufRead>(reader: R) -> Result<Vec<String>> {
    let mut levels = Vec::new();
    for line in reader.lines() {
        let line = line?;
        let name = line.trim();
        if !name.is_empty() {
            levels.push(name.to_string());
        }
    }
    if levels.is_empty() {
        return Err(Error::EmptyFile("level order".into()));
    }
    Ok(levels)
}

pub fn parse_labels<R: BufRead>(reader: R, level_order: Vec<String>) -> Result<LabeledDataset> {
    let mut named = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim_end_matches(['\r', '\n']);
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split('\t');
        let (Some(id), Some(level), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(Error::Parse { line: n + 1, msg: "expected `id<TAB>level`".into() });
        };
        named.push((id.to_string(), level.trim().to_string()));
    }
    if named.is_empty() {
        return Err(Error::EmptyFile("labels".into()));
    }
    let order: Vec<&str> = level_order.iter().map(String::as_str).collect();
    let pairs: Vec<(&str, &str)> = named.iter().map(|(i, l)| (i.as_str(), l.as_str())).collect();
    LabeledDataset::from_named(&pairs, &order)
}

pub fn read_labels(path: &Path, level_order_path: &Path) -> Result<LabeledDataset> {
    let order = parse_level_order(open(level_order_path)?).map_err(|e| match e {
        Error::EmptyFile(_) => Error::EmptyFile(level_order_path.display().to_string()),
        e => e,
    })?;
    parse_labels(open(path)?, order).map_err(|e| match e {
        Error::EmptyFile(_) => Error::EmptyFile(path.display().to_string()),
        e => e,
    })
}

pub fn write_labels<W: Write>(dataset: &LabeledDataset, mut out: W) -> Result<()> {
    for (id, rank) in dataset.labels() {
        writeln!(out, "{id}\t{}", dataset.level_name(*rank))?;
    }
    Ok(())
}

pub fn write_level_order<W: Write>(dataset: &LabeledDataset, mut out: W) -> Result<()> {
    for name in dataset.level_names() {
        writeln!(out, "{name}")?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OnMissing {
    Error,
    #[default]
    DropWithWarning,
}

#[derive(Debug, Clone)]
pub struct Joined {
    pub embeddings: EmbeddingSet,
    pub dataset: LabeledDataset,
    /// Labeled ids that had no vector, sorted.
    pub missing_vectors: Vec<String>,
    /// Number of vectors that had no label.
    pub unlabeled: usize,
}

/// Restricts both sides to their shared ids, ordered by id.
pub fn join(embeddings: &EmbeddingSet, labels: &LabeledDataset, on_missing: OnMissing) -> Result<Joined> {
    let mut missing_vectors: Vec<String> =
        labels.labels().iter().filter(|(id, _)| embeddings.index_of(id).is_none()).map(|(id, _)| id.clone()).collect();
    missing_vectors.sort();
    if on_missing == OnMissing::Error {
        if let Some(id) = missing_vectors.first() {
            return Err(Error::UnknownId(id.clone()));
        }
    }
    let mut shared: Vec<(&str, usize)> = labels
        .labels()
        .iter()
        .filter(|(id, _)| embeddings.index_of(id).is_some())
        .map(|(id, r)| (id.as_str(), *r))
        .collect();
    shared.sort();
    let items =
        shared.iter().map(|(id, _)| (id.to_string(), embeddings.get(id).expect("shared id").to_vec())).collect();
    let joined_labels = shared.iter().map(|(id, r)| (id.to_string(), *r)).collect();
    Ok(Joined {
        embeddings: EmbeddingSet::new(embeddings.dim(), items, NormPolicy::Renormalize)?,
        dataset: LabeledDataset::new(joined_labels, labels.level_names().to_vec())?,
        unlabeled: embeddings.len() - shared.len(),
        missing_vectors,
    })
}
