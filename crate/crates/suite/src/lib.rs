//! Drivers that run smellprobe end to end against the shipped fixture
//! library, plus helpers for building synthetic snapshots without a network.

use std::collections::BTreeSet;
use std::time::Duration;

use chrono::{DateTime, TimeZone, Utc};
use serde_json::Value;
use smellprobe::probe::{BodyFormat, ChainStop, Scheme};
use smellprobe::smells::DetectorOptions;
use smellprobe::snapshot::SnapshotEntry;
use smellprobe::{
    diff_snapshots, MaintenanceRecord, PayloadFormat, ProbeConfig, ProbeResult, ProbeTarget, Prober, RedirectChain,
    SmellKind, Snapshot, SourceModel,
};
use smellprobe_harness::library::{
    maintenance_fixtures, smell_fixtures, unresponsive, Expect, MaintenanceExpect, MaintenanceFixture, SmellFixture,
    Stage,
};
use smellprobe_harness::{ca_certificate_der, Fixture};

/// Short timeouts and one retry: the fixtures answer at once or never.
pub fn fixture_config() -> ProbeConfig {
    ProbeConfig {
        connect_timeout: Duration::from_secs(2),
        read_timeout: Duration::from_secs(2),
        retries: 1,
        retry_backoff: Duration::from_millis(10),
        ..ProbeConfig::default()
    }
}

/// A prober that trusts the fixture CA.
pub fn fixture_prober() -> Prober {
    Prober::with_extra_roots(fixture_config(), &[ca_certificate_der()]).expect("fixture CA is valid")
}

#[derive(Debug, Clone)]
pub struct SmellVerdict {
    pub name: String,
    pub smell: String,
    pub expect: Expect,
    pub passed: bool,
    pub detail: String,
}

/// Spawn every fixture, probe them in one batch and check each one's
/// expectation against the detector output.
pub fn run_smell_fixtures(fixtures: &[SmellFixture]) -> Vec<SmellVerdict> {
    let servers: Vec<Fixture> = fixtures
        .iter()
        .map(|f| Fixture::spawn(f.profile.clone()).expect("fixture binds"))
        .collect();
    let targets: Vec<ProbeTarget> = fixtures
        .iter()
        .zip(&servers)
        .map(|(f, s)| {
            ProbeTarget::new(
                s.url(f.target.scheme, &f.target.path),
                "fixture",
                SourceModel::OpenSource,
            )
        })
        .collect();
    let probes = fixture_prober().probe_all(&targets);
    let snapshot = Snapshot::from_probes("fixtures", Utc::now(), probes, &DetectorOptions::default());
    let verdicts = fixtures
        .iter()
        .zip(&targets)
        .map(|(f, t)| judge(f, snapshot.get(&t.url).expect("every target is in the snapshot")))
        .collect();
    for s in servers {
        s.shutdown();
    }
    verdicts
}

pub fn run_smell_library() -> Vec<SmellVerdict> {
    run_smell_fixtures(&smell_fixtures())
}

fn judge(f: &SmellFixture, entry: &SnapshotEntry) -> SmellVerdict {
    let verdict = |passed: bool, detail: String| SmellVerdict {
        name: f.name.clone(),
        smell: f.smell.clone(),
        expect: f.expect,
        passed,
        detail,
    };
    let kind: SmellKind = match f.smell.parse() {
        Ok(k) => k,
        Err(e) => return verdict(false, e),
    };
    let finding = entry.report.finding(kind);
    match (f.expect, finding) {
        (Expect::Negative, None) => verdict(true, "clean".into()),
        (Expect::Negative, Some(found)) => verdict(false, format!("unexpected finding {:?}", found.subflags)),
        (Expect::Positive, None) => verdict(
            false,
            format!(
                "not detected (status {:?}, error {:?})",
                entry.result.status, entry.result.transport_error
            ),
        ),
        (Expect::Positive, Some(found)) => {
            let got: BTreeSet<&str> = found.subflags.iter().map(|s| s.as_str()).collect();
            let want: BTreeSet<&str> = f.subflags.iter().map(String::as_str).collect();
            if got == want {
                verdict(true, format!("{got:?}"))
            } else {
                verdict(false, format!("subflags {got:?}, expected {want:?}"))
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct MaintenanceVerdict {
    pub name: String,
    pub expected: String,
    pub got: Option<String>,
}

impl MaintenanceVerdict {
    pub fn passed(&self) -> bool {
        self.got.as_deref() == Some(self.expected.as_str())
    }
}

fn expected_label(e: &MaintenanceExpect) -> &str {
    match e {
        MaintenanceExpect::Scenario(s) | MaintenanceExpect::Unclassifiable(s) => s,
    }
}

/// Play every before/after pair: scan, apply the mutations, scan again, diff.
pub fn run_maintenance_fixtures(fixtures: &[MaintenanceFixture]) -> Vec<MaintenanceVerdict> {
    let mut servers: Vec<Option<Fixture>> = fixtures
        .iter()
        .map(|f| {
            let profile = match &f.before {
                Stage::Up { profile } => (**profile).clone(),
                Stage::Absent | Stage::Down | Stage::Shutdown => unresponsive(),
            };
            Some(Fixture::spawn(profile).expect("fixture binds"))
        })
        .collect();
    let urls: Vec<String> = fixtures
        .iter()
        .zip(&servers)
        .map(|(f, s)| {
            s.as_ref()
                .expect("spawned")
                .url(smellprobe_harness::Scheme::Http, &f.path)
        })
        .collect();

    for (f, slot) in fixtures.iter().zip(servers.iter_mut()) {
        if f.before == Stage::Shutdown {
            slot.take().expect("spawned").shutdown();
        }
    }
    let prober = fixture_prober();
    let t0 = Utc::now();
    let before = scan(
        &prober,
        "before",
        t0,
        fixtures.iter().zip(&urls).filter(|(f, _)| f.before != Stage::Absent),
    );

    for (f, slot) in fixtures.iter().zip(servers.iter_mut()) {
        match &f.after {
            Stage::Up { profile } => {
                if let Some(s) = slot {
                    s.mutate((**profile).clone());
                }
            }
            Stage::Down => {
                if let Some(s) = slot {
                    s.mutate(unresponsive());
                }
            }
            Stage::Shutdown => {
                if let Some(s) = slot.take() {
                    s.shutdown();
                }
            }
            Stage::Absent => {}
        }
    }
    let after = scan(
        &prober,
        "after",
        t0 + chrono::Duration::seconds(1),
        fixtures.iter().zip(&urls).filter(|(f, _)| f.after != Stage::Absent),
    );
    let records = diff_snapshots(&before, &after);

    let verdicts = fixtures
        .iter()
        .zip(&urls)
        .map(|(f, url)| MaintenanceVerdict {
            name: f.name.clone(),
            expected: expected_label(&f.expect).to_string(),
            got: records
                .iter()
                .find(|r| &r.url == url)
                .map(|r| r.outcome.as_str().to_string()),
        })
        .collect();
    for s in servers.into_iter().flatten() {
        s.shutdown();
    }
    verdicts
}

pub fn run_maintenance_library() -> Vec<MaintenanceVerdict> {
    run_maintenance_fixtures(&maintenance_fixtures())
}

fn scan<'a>(
    prober: &Prober,
    id: &str,
    taken_at: DateTime<Utc>,
    rows: impl Iterator<Item = (&'a MaintenanceFixture, &'a String)>,
) -> Snapshot {
    let targets: Vec<ProbeTarget> = rows
        .map(|(_, url)| ProbeTarget::new(url.clone(), "fixture", SourceModel::ClosedSource))
        .collect();
    Snapshot::from_probes(id, taken_at, prober.probe_all(&targets), &DetectorOptions::default())
}

/// Outcome of scanning a static farm twice.
#[derive(Debug)]
pub struct DeterminismRun {
    pub first: Snapshot,
    pub second: Snapshot,
    pub records: Vec<MaintenanceRecord>,
}

/// Spawn every smell fixture and every live maintenance profile as a static
/// farm and scan it twice.
pub fn scan_farm_twice() -> DeterminismRun {
    let mut farm: Vec<(
        String,
        smellprobe_harness::FixtureProfile,
        smellprobe_harness::Scheme,
        String,
    )> = smell_fixtures()
        .into_iter()
        .map(|f| (f.name, f.profile, f.target.scheme, f.target.path))
        .collect();
    for f in maintenance_fixtures() {
        if let Stage::Up { profile } = f.before {
            farm.push((f.name, *profile, smellprobe_harness::Scheme::Http, f.path));
        }
    }
    let servers: Vec<Fixture> = farm
        .iter()
        .map(|(_, profile, _, _)| Fixture::spawn(profile.clone()).expect("fixture binds"))
        .collect();
    let targets: Vec<ProbeTarget> = farm
        .iter()
        .zip(&servers)
        .map(|((name, _, scheme, path), s)| {
            ProbeTarget::new(s.url(*scheme, path), name.clone(), SourceModel::OpenSource)
        })
        .collect();
    let prober = fixture_prober();
    let options = DetectorOptions::default();
    let first = Snapshot::from_probes("farm", Utc::now(), prober.probe_all(&targets), &options);
    let second = Snapshot::from_probes("farm", Utc::now(), prober.probe_all(&targets), &options);
    let records = diff_snapshots(&first, &second);
    for s in servers {
        s.shutdown();
    }
    DeterminismRun { first, second, records }
}

/// Snapshot bytes as JSON values with every timestamp field blanked.
pub fn canonical_without_timestamps(bytes: &[u8]) -> Vec<Value> {
    fn blank(v: &mut Value) {
        match v {
            Value::Object(map) => {
                for (k, child) in map.iter_mut() {
                    if k == "timestamp" || k == "taken_at" {
                        *child = Value::Null;
                    } else {
                        blank(child);
                    }
                }
            }
            Value::Array(items) => items.iter_mut().for_each(blank),
            _ => {}
        }
    }
    bytes
        .split(|b| *b == b'\n')
        .filter(|l| !l.is_empty())
        .map(|line| {
            let mut v: Value = serde_json::from_slice(line).expect("snapshot lines are JSON");
            blank(&mut v);
            v
        })
        .collect()
}

/// One synthetic URL, fed through the real detectors.
#[derive(Debug, Clone)]
pub struct SyntheticUrl {
    pub url: String,
    pub app_id: String,
    pub source_model: SourceModel,
    pub declared_format: Option<PayloadFormat>,
    /// `None` models a transport failure.
    pub status: Option<u16>,
    pub headers: Vec<(String, String)>,
    pub body: String,
}

impl SyntheticUrl {
    pub fn new(url: impl Into<String>, app_id: impl Into<String>, source_model: SourceModel) -> SyntheticUrl {
        SyntheticUrl {
            url: url.into(),
            app_id: app_id.into(),
            source_model,
            declared_format: None,
            status: Some(200),
            headers: Vec::new(),
            body: String::new(),
        }
    }

    pub fn header(mut self, name: &str, value: &str) -> SyntheticUrl {
        self.headers.push((name.to_ascii_lowercase(), value.to_string()));
        self
    }

    pub fn entry(&self) -> SnapshotEntry {
        let target = ProbeTarget {
            declared_format: self.declared_format,
            ..ProbeTarget::new(self.url.clone(), self.app_id.clone(), self.source_model)
        };
        let scheme = Scheme::of(&self.url).expect("synthetic urls are http or https");
        let epoch = Utc.timestamp_opt(0, 0).unwrap();
        let result = match self.status {
            Some(status) => ProbeResult {
                target,
                timestamp: epoch,
                scheme_used: scheme,
                status: Some(status),
                headers: self.headers.clone(),
                body_sample: self.body.as_bytes().to_vec(),
                body_format: BodyFormat::classify(&self.headers, self.body.as_bytes()),
                transport_error: None,
            },
            None => ProbeResult {
                target,
                timestamp: epoch,
                scheme_used: scheme,
                status: None,
                headers: Vec::new(),
                body_sample: Vec::new(),
                body_format: BodyFormat::Empty,
                transport_error: Some("connection refused".into()),
            },
        };
        let chain = RedirectChain {
            hops: Vec::new(),
            terminal: result.clone(),
            loop_detected: false,
            downgrade_hops: 0,
            chain_length: 0,
            stop: if result.status.is_some() {
                ChainStop::Final
            } else {
                ChainStop::TransportError
            },
        };
        let report = smellprobe::smells::detect_all(&result.target, &result, &chain);
        SnapshotEntry { result, chain, report }
    }
}

pub fn synthetic_snapshot(id: &str, urls: &[SyntheticUrl]) -> Snapshot {
    let mut snapshot = Snapshot::new(id, Utc.timestamp_opt(0, 0).unwrap());
    for u in urls {
        snapshot.insert(u.entry());
    }
    snapshot
}
