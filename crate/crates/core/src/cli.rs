//! The `smellprobe` command line.
//!
//! Exit codes: 0 success, 1 usage or invalid input, 2 scan finished but some
//! targets had transport errors, 3 I/O error.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use chrono::Utc;
use clap::{Args, Parser, Subcommand, ValueEnum};
use rustls_pki_types::pem::PemObject;
use rustls_pki_types::CertificateDer;

use crate::ingest::{self, CorpusFormat, IngestError};
use crate::maintenance::diff_snapshots;
use crate::probe::{ProbeConfig, Prober};
use crate::report::{export, ExportFormat, Report};
use crate::smells::{DetectorOptions, SmellKind};
use crate::snapshot::{Snapshot, SnapshotError, FILE_SUFFIX};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_PARTIAL: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "smellprobe",
    version,
    about = "Probe app-server URLs for server-side security smells"
)]
struct Cli {
    /// More log output (repeat for more).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Probe every URL of a corpus and write a snapshot.
    Scan(ScanArgs),
    /// Classify banner changes between two snapshots.
    Diff(DiffArgs),
    /// Write aggregate tables for a snapshot, and the maintenance analysis
    /// when a later snapshot is also given.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CorpusFormatArg {
    Csv,
    Jsonl,
}

#[derive(Debug, Args)]
struct ScanArgs {
    /// Corpus file (CSV or JSONL).
    #[arg(long)]
    corpus: PathBuf,
    /// Corpus format; guessed from the extension when omitted.
    #[arg(long, value_enum)]
    corpus_format: Option<CorpusFormatArg>,
    /// Snapshot file to write.
    #[arg(long, required_unless_present = "dry_run")]
    out: Option<PathBuf>,
    /// Snapshot id; defaults to the output file name without its suffix.
    #[arg(long)]
    id: Option<String>,
    /// Write rejected corpus rows here as JSONL.
    #[arg(long)]
    rejects: Option<PathBuf>,
    /// List the URLs that would be probed and exit.
    #[arg(long)]
    dry_run: bool,
    #[command(flatten)]
    probe: ProbeArgs,
    /// PEM file with extra trusted root certificates (repeatable).
    #[arg(long)]
    extra_root_cert: Vec<PathBuf>,
    /// Mark 2xx JSON bodies that look like OAuth-style authorization errors.
    #[arg(long)]
    json_auth_heuristic: bool,
}

#[derive(Debug, Args)]
struct ProbeArgs {
    /// Seconds to wait for a TCP connection.
    #[arg(long, value_parser = seconds, default_value = "10")]
    connect_timeout: Duration,
    /// Seconds to wait for each read.
    #[arg(long, value_parser = seconds, default_value = "30")]
    read_timeout: Duration,
    /// Extra attempts after a transport failure.
    #[arg(long, default_value_t = 3)]
    retries: u32,
    /// Seconds between attempts.
    #[arg(long, value_parser = seconds, default_value = "2")]
    retry_backoff: Duration,
    #[arg(long, default_value_t = 10)]
    max_redirects: usize,
    /// Bytes of body kept per response.
    #[arg(long, default_value_t = 256 * 1024)]
    body_sample_limit: usize,
    /// Exchanges in flight at once.
    #[arg(long, env = "SMELLPROBE_PARALLELISM", default_value_t = 16)]
    parallelism: usize,
    #[arg(long)]
    user_agent: Option<String>,
}

impl ProbeArgs {
    fn config(&self) -> ProbeConfig {
        let defaults = ProbeConfig::default();
        ProbeConfig {
            connect_timeout: self.connect_timeout,
            read_timeout: self.read_timeout,
            retries: self.retries,
            retry_backoff: self.retry_backoff,
            max_redirects: self.max_redirects,
            body_sample_limit: self.body_sample_limit,
            parallelism: self.parallelism,
            user_agent: self.user_agent.clone().unwrap_or(defaults.user_agent),
        }
    }
}

fn seconds(s: &str) -> Result<Duration, String> {
    let secs: f64 = s.parse().map_err(|_| format!("not a number of seconds: {s}"))?;
    Duration::try_from_secs_f64(secs).map_err(|_| format!("not a valid duration: {s}"))
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum DiffFormat {
    Jsonl,
    Csv,
}

#[derive(Debug, Args)]
struct DiffArgs {
    /// Earlier snapshot.
    before: PathBuf,
    /// Later snapshot.
    after: PathBuf,
    /// Where to write the records.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "jsonl")]
    format: DiffFormat,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ReportFormat {
    Json,
    Csv,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// One snapshot, or an earlier and a later one.
    #[arg(required = true, num_args = 1..=2)]
    snapshots: Vec<PathBuf>,
    /// Directory for the report files.
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long, value_enum, default_value = "json")]
    format: ReportFormat,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Io(_) => EXIT_IO,
        }
    }
}

impl From<SnapshotError> for Failure {
    fn from(e: SnapshotError) -> Failure {
        Failure::Io(e.to_string())
    }
}

fn write_failure(path: &Path, e: io::Error) -> Failure {
    Failure::Io(format!("cannot write {}: {e}", path.display()))
}

/// Run with `argv` (including the program name) and return the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .parse_default_env()
        .try_init();

    let outcome = match cli.command {
        Command::Scan(args) => scan(args),
        Command::Diff(args) => diff(args),
        Command::Report(args) => report(args),
    };
    match outcome {
        Ok(code) => code,
        Err(failure) => {
            match &failure {
                Failure::Usage(msg) | Failure::Io(msg) => eprintln!("error: {msg}"),
            }
            failure.code()
        }
    }
}

fn scan(args: ScanArgs) -> Result<i32, Failure> {
    let format = match args.corpus_format {
        Some(CorpusFormatArg::Csv) => CorpusFormat::Csv,
        Some(CorpusFormatArg::Jsonl) => CorpusFormat::Jsonl,
        None => CorpusFormat::from_path(&args.corpus),
    };
    let corpus = ingest::load_targets(&args.corpus, format).map_err(|e| match e {
        IngestError::Io { .. } => Failure::Io(e.to_string()),
        other => Failure::Usage(other.to_string()),
    })?;
    for reject in &corpus.rejects {
        log::warn!("corpus row {}: {}", reject.row, reject.reason);
    }
    if let Some(path) = &args.rejects {
        let file = fs::File::create(path).map_err(|e| write_failure(path, e))?;
        ingest::write_rejects(&corpus.rejects, io::BufWriter::new(file)).map_err(|e| write_failure(path, e))?;
    }

    let stdout = io::stdout();
    let mut out = stdout.lock();
    if args.dry_run {
        for target in &corpus.targets {
            let _ = writeln!(out, "{}", target.url);
        }
        return Ok(EXIT_OK);
    }
    let path = args.out.expect("clap requires --out without --dry-run");

    let config = args.probe.config();
    config.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    let roots = read_roots(&args.extra_root_cert)?;
    let prober = Prober::with_extra_roots(config, &roots).map_err(|e| Failure::Usage(e.to_string()))?;

    let id = args.id.unwrap_or_else(|| snapshot_id(&path));
    let taken_at = Utc::now();
    let probes = prober.probe_all(&corpus.targets);
    let failed = probes.iter().filter(|(r, _)| r.transport_error.is_some()).count();
    let options = DetectorOptions {
        json_auth_heuristic: args.json_auth_heuristic,
    };
    let snapshot = Snapshot::from_probes(id, taken_at, probes, &options);
    snapshot.save(&path)?;

    let _ = writeln!(
        out,
        "scanned {} urls ({} rejected rows, {} duplicates), {} transport errors",
        snapshot.len(),
        corpus.rejects.len(),
        corpus.duplicates,
        failed
    );
    for kind in SmellKind::ALL {
        let n = snapshot.entries.values().filter(|e| e.report.has(kind)).count();
        let _ = writeln!(out, "  {kind:<24} {n}");
    }
    let _ = writeln!(out, "snapshot written to {}", path.display());
    Ok(if failed > 0 { EXIT_PARTIAL } else { EXIT_OK })
}

fn snapshot_id(path: &Path) -> String {
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let id = name
        .strip_suffix(FILE_SUFFIX)
        .or_else(|| name.strip_suffix(".jsonl"))
        .unwrap_or(&name);
    if id.is_empty() {
        "snapshot".to_string()
    } else {
        id.to_string()
    }
}

fn read_roots(paths: &[PathBuf]) -> Result<Vec<Vec<u8>>, Failure> {
    let mut roots = Vec::new();
    for path in paths {
        let bytes = fs::read(path).map_err(|e| Failure::Io(format!("cannot read {}: {e}", path.display())))?;
        let before = roots.len();
        for cert in CertificateDer::pem_slice_iter(&bytes) {
            let cert = cert.map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
            roots.push(cert.to_vec());
        }
        if roots.len() == before {
            return Err(Failure::Usage(format!("{}: no certificates found", path.display())));
        }
    }
    Ok(roots)
}

fn diff(args: DiffArgs) -> Result<i32, Failure> {
    let before = Snapshot::load(&args.before)?;
    let after = Snapshot::load(&args.after)?;
    if before.taken_at >= after.taken_at {
        log::warn!(
            "{} was not taken before {}",
            args.before.display(),
            args.after.display()
        );
    }
    let records = diff_snapshots(&before, &after);
    let file = fs::File::create(&args.out).map_err(|e| write_failure(&args.out, e))?;
    let mut w = io::BufWriter::new(file);
    match args.format {
        DiffFormat::Jsonl => crate::report::write_records_jsonl(&records, &mut w),
        DiffFormat::Csv => crate::report::write_records_csv(&records, &mut w),
    }
    .and_then(|_| w.flush())
    .map_err(|e| write_failure(&args.out, e))?;

    let stdout = io::stdout();
    let mut out = stdout.lock();
    let _ = writeln!(out, "{} comparable urls", records.len());
    for row in crate::report::maintenance_counts(&records) {
        if row.count > 0 {
            let _ = writeln!(out, "  {:<26} {}", row.outcome, row.count);
        }
    }
    Ok(EXIT_OK)
}

fn report(args: ReportArgs) -> Result<i32, Failure> {
    let first = Snapshot::load(&args.snapshots[0])?;
    let later = args.snapshots.get(1).map(|p| Snapshot::load(p)).transpose()?;
    let report = Report::build(&first, later.as_ref());
    let format = match args.format {
        ReportFormat::Json => ExportFormat::Json,
        ReportFormat::Csv => ExportFormat::Csv,
    };
    let files = export(&report, format, &args.out_dir).map_err(|e| Failure::Io(e.to_string()))?;

    let stdout = io::stdout();
    let mut out = stdout.lock();
    let _ = writeln!(out, "{:<16} {:<24} {:>6} {:>6}", "group", "smell", "urls%", "apps%");
    for row in &report.prevalence.rows {
        if row.urls_total > 0 {
            let _ = writeln!(
                out,
                "{:<16} {:<24} {:>6} {:>6}",
                row.group.as_str(),
                row.smell.as_str(),
                row.url_percent_display(),
                row.app_percent_display()
            );
        }
    }
    for file in files {
        let _ = writeln!(out, "wrote {}", file.display());
    }
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snapshot_ids_from_paths() {
        assert_eq!(snapshot_id(Path::new("/tmp/s1.smellsnap.jsonl")), "s1");
        assert_eq!(snapshot_id(Path::new("run.jsonl")), "run");
        assert_eq!(snapshot_id(Path::new("plain")), "plain");
    }

    #[test]
    fn seconds_parser() {
        assert_eq!(seconds("0.5"), Ok(Duration::from_millis(500)));
        assert!(seconds("-1").is_err());
        assert!(seconds("soon").is_err());
    }

    #[test]
    fn usage_errors() {
        assert_eq!(run(["smellprobe"]), EXIT_USAGE);
        assert_eq!(run(["smellprobe", "scan"]), EXIT_USAGE);
        assert_eq!(run(["smellprobe", "diff", "only-one"]), EXIT_USAGE);
        assert_eq!(run(["smellprobe", "report", "--out-dir", "x"]), EXIT_USAGE);
        assert_eq!(run(["smellprobe", "--help"]), EXIT_OK);
    }

    #[test]
    fn invalid_config_is_usage_error() {
        let dir = tempfile::tempdir().unwrap();
        let corpus = dir.path().join("c.csv");
        fs::write(&corpus, "url,app_id,source_model\nhttp://127.0.0.1:9/,a,open_source\n").unwrap();
        let out = dir.path().join("s.smellsnap.jsonl");
        let code = run([
            "smellprobe",
            "scan",
            "--corpus",
            corpus.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--max-redirects",
            "0",
        ]);
        assert_eq!(code, EXIT_USAGE);
        assert!(!out.exists());
    }

    #[test]
    fn missing_corpus_is_io_error() {
        let code = run([
            "smellprobe",
            "scan",
            "--corpus",
            "/nonexistent/c.csv",
            "--out",
            "/tmp/x",
        ]);
        assert_eq!(code, EXIT_IO);
    }
}
