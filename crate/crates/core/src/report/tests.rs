use super::*;
use crate::maintenance::{MaintenanceRecord, Outcome, UnclassifiableReason};
use crate::probe::{ChainStop, ProbeResult, RedirectChain};
use crate::smells::detect_all;
use crate::snapshot::SnapshotEntry;
use crate::version::SoftwareId;
use chrono::{TimeZone, Utc};

fn entry(url: &str, app: &str, model: SourceModel, status: u16, headers: &[(&str, &str)], body: &str) -> SnapshotEntry {
    let headers: Vec<(String, String)> = headers
        .iter()
        .map(|(n, v)| (n.to_ascii_lowercase(), v.to_string()))
        .collect();
    let result = ProbeResult {
        target: ProbeTarget::new(url, app, model),
        timestamp: Utc.with_ymd_and_hms(2019, 6, 1, 0, 0, 0).unwrap(),
        scheme_used: Scheme::of(url).unwrap(),
        status: Some(status),
        body_format: BodyFormat::classify(&headers, body.as_bytes()),
        headers,
        body_sample: body.as_bytes().to_vec(),
        transport_error: None,
    };
    let chain = RedirectChain {
        hops: vec![],
        terminal: result.clone(),
        loop_detected: false,
        downgrade_hops: 0,
        chain_length: 0,
        stop: ChainStop::Final,
    };
    let report = detect_all(&result.target, &result, &chain);
    SnapshotEntry { result, chain, report }
}

fn snapshot(entries: Vec<SnapshotEntry>) -> Snapshot {
    let mut s = Snapshot::new("t", Utc.with_ymd_and_hms(2019, 6, 1, 0, 0, 0).unwrap());
    for e in entries {
        s.insert(e);
    }
    s
}

#[test]
fn rounding_is_half_up() {
    assert_eq!(rounded_percent(582, 1171), 50);
    assert_eq!(rounded_percent(5639, 7997), 71);
    assert_eq!(rounded_percent(6, 59), 10);
    assert_eq!(rounded_percent(245, 489), 50);
    assert_eq!(rounded_percent(1, 8), 13);
    assert_eq!(rounded_percent(1, 200), 1);
    assert_eq!(rounded_percent(0, 0), 0);
}

#[test]
fn group_prefers_declared_format() {
    let mut t = ProbeTarget::new("http://a/", "a", SourceModel::OpenSource);
    assert_eq!(GroupKey::of(&t, BodyFormat::Json), GroupKey::OpenJson);
    assert_eq!(GroupKey::of(&t, BodyFormat::Empty), GroupKey::OpenNonjson);
    t.declared_format = Some(PayloadFormat::NonJson);
    assert_eq!(GroupKey::of(&t, BodyFormat::Json), GroupKey::OpenNonjson);
    t.source_model = SourceModel::ClosedSource;
    t.declared_format = Some(PayloadFormat::Json);
    assert_eq!(GroupKey::of(&t, BodyFormat::NonJson), GroupKey::ClosedJson);
}

#[test]
fn empty_snapshot_gives_zero_table() {
    let table = prevalence(&snapshot(vec![]));
    assert_eq!(table.rows.len(), 24);
    assert!(table
        .rows
        .iter()
        .all(|r| r.urls_total == 0 && r.url_percent == 0.0 && r.app_percent == 0.0));
    let leaks = leak_breakdown(&snapshot(vec![]));
    assert_eq!(leaks.total, 0);
    assert!(leaks.rows.is_empty());
}

#[test]
fn app_is_affected_when_any_url_is() {
    let s = snapshot(vec![
        entry("http://a.example/1", "app.a", SourceModel::ClosedSource, 401, &[], ""),
        entry("https://a.example/2", "app.a", SourceModel::ClosedSource, 401, &[], ""),
        entry("https://b.example/", "app.b", SourceModel::ClosedSource, 401, &[], ""),
    ]);
    let row = prevalence(&s)
        .get(GroupKey::ClosedNonjson, SmellKind::InsecureTransport)
        .clone();
    assert_eq!((row.urls_affected, row.urls_total), (1, 3));
    assert_eq!((row.apps_affected, row.apps_total), (1, 2));
    assert_eq!(row.app_percent, 50.0);
}

#[test]
fn leak_breakdown_examples() {
    let s = snapshot(vec![
        entry(
            "http://a/",
            "a",
            SourceModel::OpenSource,
            200,
            &[("Server", "nginx")],
            "",
        ),
        entry(
            "http://b/",
            "b",
            SourceModel::OpenSource,
            200,
            &[("Server", "nginx")],
            "",
        ),
        entry(
            "http://c/",
            "c",
            SourceModel::OpenSource,
            200,
            &[("Server", "nginx")],
            "",
        ),
        entry(
            "http://d/",
            "d",
            SourceModel::OpenSource,
            404,
            &[],
            "<address>Apache/2.4 Server at d</address>",
        ),
    ]);
    let b = leak_breakdown(&s);
    assert_eq!(b.count(LeakCategory::Service, "nginx", LocusClass::Header), 3);
    assert_eq!(b.count(LeakCategory::Service, "apache", LocusClass::Body), 1);
    assert_eq!(b.category_total(LeakCategory::Service), 4);
    let service_by_locus: (usize, usize) = (
        b.rows
            .iter()
            .filter(|r| r.category == LeakCategory::Service && r.locus == LocusClass::Header)
            .map(|r| r.count)
            .sum(),
        b.rows
            .iter()
            .filter(|r| r.category == LeakCategory::Service && r.locus == LocusClass::Body)
            .map(|r| r.count)
            .sum(),
    );
    assert_eq!(service_by_locus, (3, 1));
    assert_eq!(
        b.locus_total(LocusClass::Header) + b.locus_total(LocusClass::Body),
        b.total
    );
}

#[test]
fn one_response_can_pack_several_leaks() {
    let s = snapshot(vec![entry(
        "https://a/",
        "a",
        SourceModel::ClosedSource,
        200,
        &[("Server", "nginx (Ubuntu)"), ("X-Powered-By", "PHP/7.4")],
        "",
    )]);
    let b = leak_breakdown(&s);
    assert_eq!(b.category_total(LeakCategory::Service), 2);
    assert_eq!(b.category_total(LeakCategory::Os), 1);
    assert_eq!(b.category_total(LeakCategory::Version), 1);
}

#[test]
fn hsts_tally() {
    let sts = "Strict-Transport-Security";
    let s = snapshot(vec![
        entry(
            "https://a/",
            "a",
            SourceModel::OpenSource,
            200,
            &[(sts, "max-age=31536000; includeSubDomains; preload")],
            "",
        ),
        entry(
            "https://b/",
            "b",
            SourceModel::OpenSource,
            200,
            &[(sts, "max-age=300")],
            "",
        ),
        entry("https://c/", "c", SourceModel::OpenSource, 200, &[], ""),
    ]);
    let h = hsts_stats(&s).all;
    assert_eq!(h.https_responses, 3);
    assert_eq!(h.protected, 2);
    assert_eq!(h.strong, 1);
    assert_eq!(h.short_max_age, 1);
    assert_eq!(h.missing_preload, 1);
    assert_eq!(h.missing_include_subdomains, 1);
    assert_eq!(h.absent, 1);
}

#[test]
fn all_strong_hsts_has_no_weakness() {
    let sts = (
        "Strict-Transport-Security",
        "max-age=63072000; includeSubDomains; preload",
    );
    let s = snapshot(
        (0..4)
            .map(|i| {
                entry(
                    &format!("https://h{i}/"),
                    "a",
                    SourceModel::ClosedSource,
                    200,
                    &[sts],
                    "",
                )
            })
            .collect(),
    );
    let h = hsts_stats(&s).closed_source;
    assert_eq!(
        (
            h.short_max_age,
            h.missing_include_subdomains,
            h.missing_preload,
            h.absent
        ),
        (0, 0, 0, 0)
    );
    assert_eq!(h.protected, 4);
}

#[test]
fn http_urls_count_in_the_denominator_only() {
    let s = snapshot(vec![
        entry("http://a/", "a", SourceModel::OpenSource, 200, &[], ""),
        entry(
            "https://b/",
            "b",
            SourceModel::OpenSource,
            200,
            &[("Strict-Transport-Security", "max-age=1")],
            "",
        ),
    ]);
    let h = hsts_stats(&s).open_source;
    assert_eq!((h.urls, h.https_responses, h.protected), (2, 1, 1));
    assert_eq!(h.protected_percent(), 50.0);
}

fn record(url: &str, outcome: Outcome) -> MaintenanceRecord {
    MaintenanceRecord {
        url: url.into(),
        before: Some(SoftwareId::parse("nginx/1.0")),
        after: Some(SoftwareId::parse("nginx/1.0")),
        outcome,
    }
}

#[test]
fn correlate_examples() {
    let counts: BTreeMap<String, usize> = [("a".to_string(), 3), ("b".to_string(), 3), ("c".to_string(), 1)].into();
    let records = vec![
        record("a", Outcome::Scenario(MaintenanceScenario::NoUpdate)),
        record("b", Outcome::Scenario(MaintenanceScenario::NoUpdate)),
        record("c", Outcome::Scenario(MaintenanceScenario::VersionUpgrade)),
        record(
            "a",
            Outcome::UnclassifiableReason(UnclassifiableReason::VersioningSchemeChanged),
        ),
    ];
    let m = correlate(&counts, &records);
    assert_eq!(m.get(MaintenanceScenario::NoUpdate, 3), 2);
    assert_eq!(m.get(MaintenanceScenario::VersionUpgrade, 1), 1);
    assert_eq!(m.total(), 3);
    assert_eq!(m.row_total(MaintenanceScenario::NoUpdate), 2);
    assert_eq!(m.column_total(3), 2);
    assert_eq!(correlate(&BTreeMap::new(), &[]), CorrelationMatrix::default());
}

#[test]
fn export_is_stable() {
    let s = snapshot(vec![
        entry(
            "http://a/",
            "a",
            SourceModel::OpenSource,
            200,
            &[("Server", "nginx/1.14.1")],
            "",
        ),
        entry(
            "https://b/",
            "b",
            SourceModel::ClosedSource,
            500,
            &[],
            "Traceback (most recent call last):",
        ),
    ]);
    let report = Report::build(&s, Some(&s));
    for format in [ExportFormat::Json, ExportFormat::Csv] {
        let d1 = tempfile::tempdir().unwrap();
        let d2 = tempfile::tempdir().unwrap();
        let f1 = export(&report, format, d1.path()).unwrap();
        let f2 = export(&report, format, d2.path()).unwrap();
        assert_eq!(f1.len(), f2.len());
        for (a, b) in f1.iter().zip(&f2) {
            assert_eq!(a.file_name(), b.file_name());
            assert_eq!(fs::read(a).unwrap(), fs::read(b).unwrap());
        }
    }
    let d = tempfile::tempdir().unwrap();
    let files = export(&report, ExportFormat::Json, d.path()).unwrap();
    let back: Report = serde_json::from_slice(&fs::read(&files[0]).unwrap()).unwrap();
    assert_eq!(back, report);
}

#[test]
fn export_to_unwritable_path_fails() {
    let d = tempfile::tempdir().unwrap();
    let blocker = d.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let report = Report::build(&snapshot(vec![]), None);
    assert!(export(&report, ExportFormat::Csv, &blocker.join("sub")).is_err());
}

#[test]
fn diff_records_csv_columns() {
    let mut out = Vec::new();
    write_records_csv(
        &[record("u", Outcome::Scenario(MaintenanceScenario::NoUpdate))],
        &mut out,
    )
    .unwrap();
    assert_eq!(
        String::from_utf8(out).unwrap(),
        "url,kind,outcome,before,after\nu,scenario,no_update,nginx/1.0,nginx/1.0\n"
    );
}
