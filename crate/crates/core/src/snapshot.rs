//! Persisted scans.
//!
//! A snapshot file is JSONL. The first line is the header
//!
//! ```text
//! {"record":"header","format":"smellsnap","format_version":1,"id":"...","taken_at":"...","tool_version":"...","entries":N}
//! ```
//!
//! followed by exactly `N` entry lines, sorted by URL:
//!
//! ```text
//! {"record":"entry","url":"...","result":{...},"chain":{...},"report":{...}}
//! ```
//!
//! Bodies are base64 inside `result.body_sample`. Field order is fixed and
//! entries are sorted, so equal snapshots serialize to identical bytes.
//! Records are numbered from 0 (the header) in integrity errors.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Duration, Utc};
use serde::{Deserialize, Serialize};

use crate::probe::{ProbeResult, RedirectChain};
use crate::smells::{detect_all_with, DetectorOptions, SmellReport};

pub const FORMAT: &str = "smellsnap";
pub const FORMAT_VERSION: u32 = 1;
pub const FILE_SUFFIX: &str = ".smellsnap.jsonl";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnapshotEntry {
    pub result: ProbeResult,
    pub chain: RedirectChain,
    pub report: SmellReport,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Snapshot {
    pub id: String,
    pub taken_at: DateTime<Utc>,
    /// Keyed by the target URL.
    pub entries: BTreeMap<String, SnapshotEntry>,
}

#[derive(Debug, thiserror::Error)]
pub enum SnapshotError {
    #[error("cannot access snapshot {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("snapshot integrity error at record {record}: {reason}")]
    Integrity { record: usize, reason: String },
}

impl SnapshotError {
    fn at(record: usize, reason: impl Into<String>) -> SnapshotError {
        SnapshotError::Integrity {
            record,
            reason: reason.into(),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct HeaderRecord {
    record: String,
    format: String,
    format_version: u32,
    id: String,
    taken_at: DateTime<Utc>,
    tool_version: String,
    entries: usize,
}

#[derive(Serialize)]
struct EntryOut<'a> {
    record: &'static str,
    url: &'a str,
    result: &'a ProbeResult,
    chain: &'a RedirectChain,
    report: &'a SmellReport,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EntryIn {
    record: String,
    url: String,
    result: ProbeResult,
    chain: RedirectChain,
    report: SmellReport,
}

/// Clock skew tolerated between the machine that wrote a snapshot and the one
/// reading it.
const CLOCK_SKEW: Duration = Duration::minutes(5);

impl Snapshot {
    pub fn new(id: impl Into<String>, taken_at: DateTime<Utc>) -> Snapshot {
        Snapshot {
            id: id.into(),
            taken_at,
            entries: BTreeMap::new(),
        }
    }

    /// Build a snapshot from probe output, running the detectors on each pair.
    pub fn from_probes(
        id: impl Into<String>,
        taken_at: DateTime<Utc>,
        probes: Vec<(ProbeResult, RedirectChain)>,
        options: &DetectorOptions,
    ) -> Snapshot {
        let mut snapshot = Snapshot::new(id, taken_at);
        for (result, chain) in probes {
            let report = detect_all_with(&result.target, &result, &chain, options);
            snapshot.insert(SnapshotEntry { result, chain, report });
        }
        snapshot
    }

    pub fn insert(&mut self, entry: SnapshotEntry) {
        self.entries.insert(entry.result.target.url.clone(), entry);
    }

    pub fn get(&self, url: &str) -> Option<&SnapshotEntry> {
        self.entries.get(url)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.write_to(&mut out).expect("writing to a Vec cannot fail");
        out
    }

    pub fn write_to<W: Write>(&self, mut out: W) -> io::Result<()> {
        let header = HeaderRecord {
            record: "header".into(),
            format: FORMAT.into(),
            format_version: FORMAT_VERSION,
            id: self.id.clone(),
            taken_at: self.taken_at,
            tool_version: crate::TOOL_VERSION.into(),
            entries: self.entries.len(),
        };
        serde_json::to_writer(&mut out, &header)?;
        out.write_all(b"\n")?;
        for (url, entry) in &self.entries {
            let line = EntryOut {
                record: "entry",
                url,
                result: &entry.result,
                chain: &entry.chain,
                report: &entry.report,
            };
            serde_json::to_writer(&mut out, &line)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<(), SnapshotError> {
        let io_err = |source| SnapshotError::Io {
            path: path.to_path_buf(),
            source,
        };
        let file = fs::File::create(path).map_err(io_err)?;
        let mut out = io::BufWriter::new(file);
        self.write_to(&mut out).map_err(io_err)?;
        out.flush().map_err(io_err)
    }

    pub fn load(path: &Path) -> Result<Snapshot, SnapshotError> {
        let bytes = fs::read(path).map_err(|source| SnapshotError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Snapshot::from_bytes(&bytes)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Snapshot, SnapshotError> {
        Snapshot::from_bytes_at(bytes, Utc::now())
    }

    /// Parse and check a snapshot, judging `taken_at` against `now`.
    pub fn from_bytes_at(bytes: &[u8], now: DateTime<Utc>) -> Result<Snapshot, SnapshotError> {
        let text = std::str::from_utf8(bytes).map_err(|e| {
            let record = bytes[..e.valid_up_to()].iter().filter(|&&b| b == b'\n').count();
            SnapshotError::at(record, "invalid utf-8")
        })?;
        let body = text.strip_suffix('\n').unwrap_or(text);
        if body.is_empty() {
            return Err(SnapshotError::at(0, "missing header"));
        }
        let mut lines = body.split('\n');
        let header: HeaderRecord = lines
            .next()
            .map(serde_json::from_str)
            .expect("split yields at least one item")
            .map_err(|e| SnapshotError::at(0, format!("bad header: {e}")))?;
        if header.record != "header" || header.format != FORMAT {
            return Err(SnapshotError::at(0, "not a smellsnap header"));
        }
        if header.format_version != FORMAT_VERSION {
            return Err(SnapshotError::at(
                0,
                format!("unsupported format version {}", header.format_version),
            ));
        }
        if header.taken_at > now + CLOCK_SKEW {
            return Err(SnapshotError::at(0, "taken_at lies in the future"));
        }
        let mut snapshot = Snapshot::new(header.id, header.taken_at);
        let mut previous: Option<String> = None;
        for (index, line) in lines.enumerate() {
            let record = index + 1;
            if record > header.entries {
                return Err(SnapshotError::at(
                    record,
                    format!("more records than the {} announced", header.entries),
                ));
            }
            let entry: EntryIn =
                serde_json::from_str(line).map_err(|e| SnapshotError::at(record, format!("bad entry: {e}")))?;
            if entry.record != "entry" {
                return Err(SnapshotError::at(
                    record,
                    format!("unexpected record type {:?}", entry.record),
                ));
            }
            if entry.url != entry.result.target.url {
                return Err(SnapshotError::at(record, "entry key differs from the target url"));
            }
            if previous.as_ref().is_some_and(|p| p >= &entry.url) {
                return Err(SnapshotError::at(record, "entries out of order or duplicated"));
            }
            previous = Some(entry.url.clone());
            snapshot.entries.insert(
                entry.url,
                SnapshotEntry {
                    result: entry.result,
                    chain: entry.chain,
                    report: entry.report,
                },
            );
        }
        if snapshot.entries.len() < header.entries {
            return Err(SnapshotError::at(
                snapshot.entries.len() + 1,
                format!(
                    "truncated: header announces {} entries, found {}",
                    header.entries,
                    snapshot.entries.len()
                ),
            ));
        }
        Ok(snapshot)
    }
}
