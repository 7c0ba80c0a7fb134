//! Corpus loading.
//!
//! A corpus is either CSV with the header `url,app_id,source_model,declared_format`
//! (`declared_format` may be omitted or left empty) or JSONL with the same
//! keys. Rows that fail validation are returned as [`Reject`]s, never dropped
//! silently. Duplicate URLs collapse to their first occurrence, see
//! [`crate::target::dedup_key`].

use std::collections::HashSet;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::target::{dedup_key, validate_url, PayloadFormat, ProbeTarget, SourceModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorpusFormat {
    Csv,
    Jsonl,
}

impl CorpusFormat {
    /// `.jsonl` / `.ndjson` map to JSONL, anything else to CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl") | Some("ndjson") => CorpusFormat::Jsonl,
            _ => CorpusFormat::Csv,
        }
    }
}

/// A row that could not become a [`ProbeTarget`]. `row` is 1-based and counts
/// data rows only.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reject {
    pub row: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LoadedCorpus {
    pub targets: Vec<ProbeTarget>,
    pub rejects: Vec<Reject>,
    /// Rows collapsed into an earlier row with the same URL.
    pub duplicates: usize,
    /// Data rows seen in the input.
    pub rows: usize,
}

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("cannot read corpus {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("corpus header lacks required column {0:?}")]
    MissingColumn(&'static str),
    #[error("malformed CSV header: {0}")]
    Header(#[from] csv::Error),
}

#[derive(Debug, Default, Deserialize)]
struct RawRow {
    url: Option<String>,
    app_id: Option<String>,
    source_model: Option<String>,
    declared_format: Option<String>,
}

pub fn load_targets(path: &Path, format: CorpusFormat) -> Result<LoadedCorpus, IngestError> {
    let bytes = fs::read(path).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_corpus(&bytes, format)
}

/// Parse corpus bytes already in memory.
pub fn parse_corpus(bytes: &[u8], format: CorpusFormat) -> Result<LoadedCorpus, IngestError> {
    let rows = match format {
        CorpusFormat::Csv => csv_rows(bytes)?,
        CorpusFormat::Jsonl => jsonl_rows(bytes),
    };
    let mut corpus = LoadedCorpus {
        rows: rows.len(),
        ..Default::default()
    };
    let mut seen = HashSet::new();
    for (index, row) in rows.into_iter().enumerate() {
        let row_no = index + 1;
        match row.and_then(build_target) {
            Ok(target) => {
                if seen.insert(dedup_key(&target.url)) {
                    corpus.targets.push(target);
                } else {
                    corpus.duplicates += 1;
                }
            }
            Err(reason) => corpus.rejects.push(Reject { row: row_no, reason }),
        }
    }
    Ok(corpus)
}

fn csv_rows(bytes: &[u8]) -> Result<Vec<Result<RawRow, String>>, IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let headers = reader.headers()?.clone();
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Ok(Vec::new());
    }
    let column = |name: &'static str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
    let url = column("url").ok_or(IngestError::MissingColumn("url"))?;
    let app_id = column("app_id").ok_or(IngestError::MissingColumn("app_id"))?;
    let source_model = column("source_model").ok_or(IngestError::MissingColumn("source_model"))?;
    let declared_format = column("declared_format");

    let mut rows = Vec::new();
    for record in reader.records() {
        let row = match record {
            Ok(record) => {
                let get = |i: usize| record.get(i).map(str::to_string);
                Ok(RawRow {
                    url: get(url),
                    app_id: get(app_id),
                    source_model: get(source_model),
                    declared_format: declared_format.and_then(get),
                })
            }
            Err(e) => Err(format!("malformed csv row: {e}")),
        };
        rows.push(row);
    }
    Ok(rows)
}

fn jsonl_rows(bytes: &[u8]) -> Vec<Result<RawRow, String>> {
    String::from_utf8_lossy(bytes)
        .lines()
        .filter(|line| !line.trim().is_empty())
        .map(|line| serde_json::from_str::<RawRow>(line).map_err(|e| format!("invalid json: {e}")))
        .collect()
}

fn build_target(row: RawRow) -> Result<ProbeTarget, String> {
    let url = non_empty(row.url).ok_or("missing field: url")?;
    validate_url(&url).map_err(|p| p.to_string())?;
    let app_id = non_empty(row.app_id).ok_or("missing field: app_id")?;
    let source_model = non_empty(row.source_model).ok_or("missing field: source_model")?;
    let source_model = SourceModel::from_str(&source_model)?;
    let declared_format = non_empty(row.declared_format)
        .map(|f| PayloadFormat::from_str(&f))
        .transpose()?;
    Ok(ProbeTarget {
        url: url.trim().to_string(),
        app_id,
        source_model,
        declared_format,
    })
}

fn non_empty(field: Option<String>) -> Option<String> {
    field.map(|s| s.trim().to_string()).filter(|s| !s.is_empty())
}

/// Write rejects as JSONL `{"row":N,"reason":"..."}` lines.
pub fn write_rejects<W: Write>(rejects: &[Reject], mut out: W) -> io::Result<()> {
    for reject in rejects {
        serde_json::to_writer(&mut out, reject)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
