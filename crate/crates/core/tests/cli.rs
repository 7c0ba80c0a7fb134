use std::fs;
use std::net::TcpListener;
use std::path::Path;
use std::process::{Command, Output};

use smellprobe::Snapshot;
use smellprobe_harness::{BodyTemplate, Fixture, FixtureProfile, RouteSpec, Scheme};

const FAST: [&str; 8] = [
    "--connect-timeout",
    "2",
    "--read-timeout",
    "2",
    "--retries",
    "0",
    "--retry-backoff",
    "0.01",
];

fn smellprobe(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_smellprobe"))
        .args(args)
        .env_remove("SMELLPROBE_PARALLELISM")
        .env_remove("RUST_LOG")
        .output()
        .unwrap()
}

fn scan(corpus: &Path, out: &Path, ca: &Path, id: &str) -> Output {
    let mut args = vec![
        "scan",
        "--corpus",
        corpus.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--extra-root-cert",
        ca.to_str().unwrap(),
        "--id",
        id,
    ];
    args.extend(FAST);
    smellprobe(&args)
}

fn write_ca(dir: &Path) -> std::path::PathBuf {
    let ca = dir.join("ca.pem");
    fs::write(&ca, smellprobe_harness::ca_certificate_pem()).unwrap();
    ca
}

fn farm() -> Fixture {
    Fixture::spawn(
        FixtureProfile::new(
            &[Scheme::Http, Scheme::Https],
            RouteSpec::status(200)
                .header("Server: nginx/1.14.1")
                .header("Content-Type: application/json")
                .body(BodyTemplate::Json { text: "{}".into() }),
        )
        .route(
            "/",
            RouteSpec::redirect(301, "{https}/home").header("Server: nginx/1.14.1"),
        ),
    )
    .unwrap()
}

#[test]
fn scan_diff_and_report_round_trip() {
    let fx = farm();
    let dir = tempfile::tempdir().unwrap();
    let ca = write_ca(dir.path());
    let corpus = dir.path().join("corpus.csv");
    fs::write(
        &corpus,
        format!(
            "url,app_id,source_model,declared_format\n{},app.one,open_source,\n{},app.two,closed_source,json\n",
            fx.url(Scheme::Http, "/"),
            fx.url(Scheme::Https, "/api")
        ),
    )
    .unwrap();
    let s1 = dir.path().join("s1.smellsnap.jsonl");
    let s2 = dir.path().join("s2.smellsnap.jsonl");

    let out = scan(&corpus, &s1, &ca, "s1");
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let snap = Snapshot::load(&s1).unwrap();
    assert_eq!(snap.len(), 2);
    assert_eq!(snap.id, "s1");
    assert_eq!(scan(&corpus, &s2, &ca, "s2").status.code(), Some(0));

    let records = dir.path().join("diff.jsonl");
    let out = smellprobe(&[
        "diff",
        s1.to_str().unwrap(),
        s2.to_str().unwrap(),
        "--out",
        records.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = fs::read_to_string(&records).unwrap();
    assert_eq!(text.lines().count(), 2);
    assert!(text.lines().all(|l| l.contains("\"no_update\"")), "{text}");

    let csv = dir.path().join("diff.csv");
    let out = smellprobe(&[
        "diff",
        s1.to_str().unwrap(),
        s2.to_str().unwrap(),
        "--out",
        csv.to_str().unwrap(),
        "--format",
        "csv",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(fs::read_to_string(&csv)
        .unwrap()
        .starts_with("url,kind,outcome,before,after\n"));

    let json_dir = dir.path().join("json");
    let out = smellprobe(&[
        "report",
        s1.to_str().unwrap(),
        s2.to_str().unwrap(),
        "--out-dir",
        json_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&fs::read(json_dir.join("report.json")).unwrap()).unwrap();
    assert!(report["maintenance"].is_object());

    let csv_dir = dir.path().join("csv");
    let out = smellprobe(&[
        "report",
        s1.to_str().unwrap(),
        "--out-dir",
        csv_dir.to_str().unwrap(),
        "--format",
        "csv",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(csv_dir.join("prevalence.csv").exists());
    assert!(!csv_dir.join("maintenance.csv").exists());
}

#[test]
fn unreachable_urls_give_partial_exit() {
    let fx = farm();
    let dead = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let dir = tempfile::tempdir().unwrap();
    let ca = write_ca(dir.path());
    let corpus = dir.path().join("corpus.jsonl");
    fs::write(
        &corpus,
        format!(
            "{{\"url\":\"{}\",\"app_id\":\"a\",\"source_model\":\"open_source\"}}\n{{\"url\":\"http://127.0.0.1:{dead}/\",\"app_id\":\"b\",\"source_model\":\"open_source\"}}\n",
            fx.url(Scheme::Https, "/x")
        ),
    )
    .unwrap();
    let s = dir.path().join("p.smellsnap.jsonl");
    let out = scan(&corpus, &s, &ca, "p");
    assert_eq!(out.status.code(), Some(2));
    let snap = Snapshot::load(&s).unwrap();
    assert_eq!(snap.len(), 2);
    assert_eq!(
        snap.entries
            .values()
            .filter(|e| e.result.transport_error.is_some())
            .count(),
        1
    );
}

#[test]
fn dry_run_lists_urls_without_probing() {
    let fx = farm();
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("c.csv");
    let url = fx.url(Scheme::Http, "/only");
    fs::write(
        &corpus,
        format!("url,app_id,source_model\n{url},a,open_source\nnot a url,b,open_source\n"),
    )
    .unwrap();
    let rejects = dir.path().join("rejects.jsonl");
    let out = smellprobe(&[
        "scan",
        "--corpus",
        corpus.to_str().unwrap(),
        "--dry-run",
        "--rejects",
        rejects.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8(out.stdout).unwrap(), format!("{url}\n"));
    assert_eq!(fs::read_to_string(&rejects).unwrap().lines().count(), 1);
    assert!(fx.requests().is_empty());
}

#[test]
fn usage_and_io_errors() {
    assert_eq!(smellprobe(&["scan"]).status.code(), Some(1));
    assert_eq!(smellprobe(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(
        smellprobe(&["scan", "--corpus", "/nonexistent/c.csv", "--dry-run"])
            .status
            .code(),
        Some(3)
    );
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "link,owner\nhttp://a/,a\n").unwrap();
    assert_eq!(
        smellprobe(&["scan", "--corpus", bad.to_str().unwrap(), "--dry-run"])
            .status
            .code(),
        Some(1)
    );
    let garbage = dir.path().join("g.smellsnap.jsonl");
    fs::write(&garbage, "not json\n").unwrap();
    let out = smellprobe(&[
        "diff",
        garbage.to_str().unwrap(),
        garbage.to_str().unwrap(),
        "--out",
        dir.path().join("d").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(smellprobe(&["--version"]).status.code(), Some(0));
}
