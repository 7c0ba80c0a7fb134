//! Banner changes between two snapshots.
//!
//! The comparison subject for a URL is the first product token of its first
//! `Server` header. [`classify_change`] maps a (before, after) pair to one of
//! eight scenarios or to an explicit reason why no scenario applies.
//! [`diff_snapshots`] decides what "absent" means for each side: a URL missing
//! from a snapshot or answering with a transport error has no server, while a
//! live response without a `Server` header has a server that stopped talking.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::snapshot::{Snapshot, SnapshotEntry};
use crate::version::{compare_versions, parse_banner, SoftwareId, VersionState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaintenanceScenario {
    NoUpdate,
    VersionDowngrade,
    VersionUpgrade,
    LeakClosed,
    EnvironmentChanged,
    CloudflareEnabled,
    ServerSpawned,
    ServerShutdown,
}

impl MaintenanceScenario {
    pub const ALL: [MaintenanceScenario; 8] = [
        MaintenanceScenario::NoUpdate,
        MaintenanceScenario::VersionDowngrade,
        MaintenanceScenario::VersionUpgrade,
        MaintenanceScenario::LeakClosed,
        MaintenanceScenario::EnvironmentChanged,
        MaintenanceScenario::CloudflareEnabled,
        MaintenanceScenario::ServerSpawned,
        MaintenanceScenario::ServerShutdown,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MaintenanceScenario::NoUpdate => "no_update",
            MaintenanceScenario::VersionDowngrade => "version_downgrade",
            MaintenanceScenario::VersionUpgrade => "version_upgrade",
            MaintenanceScenario::LeakClosed => "leak_closed",
            MaintenanceScenario::EnvironmentChanged => "environment_changed",
            MaintenanceScenario::CloudflareEnabled => "cloudflare_enabled",
            MaintenanceScenario::ServerSpawned => "server_spawned",
            MaintenanceScenario::ServerShutdown => "server_shutdown",
        }
    }
}

impl fmt::Display for MaintenanceScenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnclassifiableReason {
    /// A server appeared but its banner carries no version to start from.
    SpawnedUnknownConfig,
    /// A server vanished but its banner had no version to compare.
    ShutdownNoComparison,
    /// Same product, but at least one version is not dotted-numeric.
    VersioningSchemeChanged,
}

impl UnclassifiableReason {
    pub const ALL: [UnclassifiableReason; 3] = [
        UnclassifiableReason::SpawnedUnknownConfig,
        UnclassifiableReason::ShutdownNoComparison,
        UnclassifiableReason::VersioningSchemeChanged,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            UnclassifiableReason::SpawnedUnknownConfig => "spawned_unknown_config",
            UnclassifiableReason::ShutdownNoComparison => "shutdown_no_comparison",
            UnclassifiableReason::VersioningSchemeChanged => "versioning_scheme_changed",
        }
    }
}

impl fmt::Display for UnclassifiableReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Exactly one scenario or one reason.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Scenario(MaintenanceScenario),
    UnclassifiableReason(UnclassifiableReason),
}

impl Outcome {
    pub fn scenario(self) -> Option<MaintenanceScenario> {
        match self {
            Outcome::Scenario(s) => Some(s),
            Outcome::UnclassifiableReason(_) => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Scenario(s) => s.as_str(),
            Outcome::UnclassifiableReason(r) => r.as_str(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaintenanceRecord {
    pub url: String,
    pub before: Option<SoftwareId>,
    pub after: Option<SoftwareId>,
    #[serde(flatten)]
    pub outcome: Outcome,
}

use MaintenanceScenario as S;
use UnclassifiableReason as U;

/// Classify one banner change. `None` when both sides are absent.
pub fn classify_change(before: Option<&SoftwareId>, after: Option<&SoftwareId>) -> Option<Outcome> {
    let outcome = match (before, after) {
        (None, None) => return None,
        (None, Some(after)) => match after.version_state() {
            VersionState::Numeric(_) => Outcome::Scenario(S::ServerSpawned),
            _ => Outcome::UnclassifiableReason(U::SpawnedUnknownConfig),
        },
        (Some(before), None) => match before.version_state() {
            VersionState::Numeric(_) => Outcome::Scenario(S::ServerShutdown),
            _ => Outcome::UnclassifiableReason(U::ShutdownNoComparison),
        },
        (Some(before), Some(after)) if !before.same_name(after) => {
            if after.name.eq_ignore_ascii_case("cloudflare") {
                Outcome::Scenario(S::CloudflareEnabled)
            } else {
                Outcome::Scenario(S::EnvironmentChanged)
            }
        }
        (Some(before), Some(after)) => match (before.version_state(), after.version_state()) {
            (VersionState::Unparseable, _) | (_, VersionState::Unparseable) => {
                Outcome::UnclassifiableReason(U::VersioningSchemeChanged)
            }
            (VersionState::Numeric(b), VersionState::Numeric(a)) => match compare_versions(a, b) {
                Ordering::Equal => Outcome::Scenario(S::NoUpdate),
                Ordering::Less => Outcome::Scenario(S::VersionDowngrade),
                Ordering::Greater => Outcome::Scenario(S::VersionUpgrade),
            },
            (VersionState::Numeric(_), VersionState::Absent) => Outcome::Scenario(S::LeakClosed),
            (VersionState::Absent, VersionState::Numeric(_)) => Outcome::UnclassifiableReason(U::SpawnedUnknownConfig),
            (VersionState::Absent, VersionState::Absent) => Outcome::Scenario(S::NoUpdate),
        },
    };
    Some(outcome)
}

/// What one snapshot says about one URL's server.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Observation {
    /// The URL is not in the snapshot.
    Missing,
    /// The URL was probed but produced no HTTP response.
    Unreachable,
    /// A response, with its banner if it had one.
    Alive(Option<SoftwareId>),
}

impl Observation {
    pub fn of(entry: Option<&SnapshotEntry>) -> Observation {
        let Some(entry) = entry else {
            return Observation::Missing;
        };
        if entry.result.status.is_none() {
            return Observation::Unreachable;
        }
        Observation::Alive(server_banner(&entry.result.headers))
    }

    pub fn banner(&self) -> Option<&SoftwareId> {
        match self {
            Observation::Alive(Some(id)) => Some(id),
            _ => None,
        }
    }
}

/// First product token of the first `Server` header.
pub fn server_banner(headers: &[(String, String)]) -> Option<SoftwareId> {
    let value = headers.iter().find(|(n, _)| n == "server").map(|(_, v)| v)?;
    parse_banner(value).products.into_iter().next()
}

/// Classify one URL from its two observations. `None` when neither side
/// carries a banner.
pub fn classify_observations(url: &str, before: &Observation, after: &Observation) -> Option<MaintenanceRecord> {
    let (b, a) = (before.banner(), after.banner());
    if b.is_none() && a.is_none() {
        return None;
    }
    let outcome = match (b, after) {
        // The endpoint still answers but dropped the banner.
        (Some(_), Observation::Alive(None)) => Outcome::Scenario(S::LeakClosed),
        _ => classify_change(b, a)?,
    };
    Some(MaintenanceRecord {
        url: url.to_string(),
        before: b.cloned(),
        after: a.cloned(),
        outcome,
    })
}

/// One record per URL in either snapshot that has a banner on at least one
/// side, sorted by URL.
pub fn diff_snapshots(before: &Snapshot, after: &Snapshot) -> Vec<MaintenanceRecord> {
    let urls: BTreeSet<&String> = before.entries.keys().chain(after.entries.keys()).collect();
    urls.into_iter()
        .filter_map(|url| {
            let b = Observation::of(before.get(url));
            let a = Observation::of(after.get(url));
            classify_observations(url, &b, &a)
        })
        .collect()
}
