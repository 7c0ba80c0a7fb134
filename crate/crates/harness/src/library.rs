//! The shipped fixture library: one entry per smell symptom (positive and
//! negative) and one before/after pair per maintenance outcome.
//!
//! The entries live in `profiles/*.json` so they can be reviewed and extended
//! without touching code.

use serde::{Deserialize, Serialize};

use crate::profile::{FixtureProfile, Scheme};

const SMELLS_JSON: &str = include_str!("../profiles/smells.json");
const MAINTENANCE_JSON: &str = include_str!("../profiles/maintenance.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Expect {
    Positive,
    Negative,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TargetSpec {
    pub scheme: Scheme,
    #[serde(default = "root_path")]
    pub path: String,
}

fn root_path() -> String {
    "/".to_string()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SmellFixture {
    pub name: String,
    /// Smell kind in snake_case, e.g. `missing_hsts`.
    pub smell: String,
    pub expect: Expect,
    pub target: TargetSpec,
    /// Exact subflag set expected on a positive finding.
    #[serde(default)]
    pub subflags: Vec<String>,
    pub profile: FixtureProfile,
}

/// How a URL looks in one of the two measurement runs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum Stage {
    /// The URL is not part of the run at all.
    Absent,
    /// The URL is probed but the server drops every connection.
    Down,
    Up {
        profile: Box<FixtureProfile>,
    },
    /// The listener is closed before the run.
    Shutdown,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaintenanceExpect {
    Scenario(String),
    Unclassifiable(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaintenanceFixture {
    pub name: String,
    pub expect: MaintenanceExpect,
    #[serde(default = "root_path")]
    pub path: String,
    pub before: Stage,
    pub after: Stage,
}

pub fn smell_fixtures() -> Vec<SmellFixture> {
    serde_json::from_str(SMELLS_JSON).expect("profiles/smells.json is valid")
}

pub fn maintenance_fixtures() -> Vec<MaintenanceFixture> {
    serde_json::from_str(MAINTENANCE_JSON).expect("profiles/maintenance.json is valid")
}

/// A profile whose server drops every connection unanswered.
pub fn unresponsive() -> FixtureProfile {
    FixtureProfile {
        fail_first: u32::MAX,
        ..FixtureProfile::default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn library_files_parse() {
        assert!(!smell_fixtures().is_empty());
        assert!(!maintenance_fixtures().is_empty());
    }

    #[test]
    fn every_smell_has_enough_fixtures() {
        let fixtures = smell_fixtures();
        for smell in [
            "insecure_transport",
            "source_code_disclosure",
            "version_disclosure",
            "lack_of_access_control",
            "missing_https_redirect",
            "missing_hsts",
        ] {
            let count = |e| fixtures.iter().filter(|f| f.smell == smell && f.expect == e).count();
            assert!(count(Expect::Positive) >= 3, "{smell} positives");
            assert!(count(Expect::Negative) >= 2, "{smell} negatives");
        }
    }
}
