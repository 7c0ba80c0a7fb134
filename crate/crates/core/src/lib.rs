//! Probe mobile-app server URLs for server-side security smells and track how
//! their software banners change between two scans.
//!
//! The pipeline is: [`ingest`] loads and deduplicates a URL corpus, [`probe`]
//! issues GET exchanges and follows redirect chains by hand, [`smells`] turns
//! the evidence into findings, [`snapshot`] persists one scan, [`maintenance`]
//! classifies banner changes between two scans and [`report`] computes the
//! aggregate tables.

pub mod cli;
pub mod ingest;
pub mod maintenance;
pub mod probe;
pub mod report;
pub mod smells;
pub mod snapshot;
pub mod target;
pub mod version;

pub use ingest::{load_targets, CorpusFormat, LoadedCorpus, Reject};
pub use maintenance::{
    classify_change, diff_snapshots, MaintenanceRecord, MaintenanceScenario, Outcome, UnclassifiableReason,
};
pub use probe::{ProbeConfig, ProbeResult, Prober, RedirectChain};
pub use smells::{detect_all, SmellFinding, SmellKind, SmellReport, Subflag};
pub use snapshot::Snapshot;
pub use target::{PayloadFormat, ProbeTarget, SourceModel};
pub use version::{compare_versions, parse_banner, SoftwareId};

/// Version string written into snapshot headers.
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
