//! Aggregate tables over snapshots.
//!
//! Percentages are kept at full precision in machine output and rounded half
//! up to integers for display. Every table is a list of rows in a fixed order
//! so exports are byte-stable.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::maintenance::{MaintenanceRecord, MaintenanceScenario, Outcome};
use crate::probe::{BodyFormat, Scheme};
use crate::smells::{LeakCategory, SmellKind};
use crate::snapshot::{Snapshot, SnapshotEntry};
use crate::target::{PayloadFormat, ProbeTarget, SourceModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupKey {
    OpenJson,
    OpenNonjson,
    ClosedJson,
    ClosedNonjson,
}

impl GroupKey {
    pub const ALL: [GroupKey; 4] = [
        GroupKey::OpenJson,
        GroupKey::OpenNonjson,
        GroupKey::ClosedJson,
        GroupKey::ClosedNonjson,
    ];

    /// The declared format wins over the observed body format.
    pub fn of(target: &ProbeTarget, observed: BodyFormat) -> GroupKey {
        let json = match target.declared_format {
            Some(declared) => declared == PayloadFormat::Json,
            None => observed == BodyFormat::Json,
        };
        match (target.source_model, json) {
            (SourceModel::OpenSource, true) => GroupKey::OpenJson,
            (SourceModel::OpenSource, false) => GroupKey::OpenNonjson,
            (SourceModel::ClosedSource, true) => GroupKey::ClosedJson,
            (SourceModel::ClosedSource, false) => GroupKey::ClosedNonjson,
        }
    }

    /// Group of a snapshot entry, judged by the final response of its chain.
    pub fn of_entry(entry: &SnapshotEntry) -> GroupKey {
        GroupKey::of(&entry.result.target, entry.chain.terminal.body_format)
    }

    pub fn source_model(self) -> SourceModel {
        match self {
            GroupKey::OpenJson | GroupKey::OpenNonjson => SourceModel::OpenSource,
            GroupKey::ClosedJson | GroupKey::ClosedNonjson => SourceModel::ClosedSource,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            GroupKey::OpenJson => "open_json",
            GroupKey::OpenNonjson => "open_nonjson",
            GroupKey::ClosedJson => "closed_json",
            GroupKey::ClosedNonjson => "closed_nonjson",
        }
    }
}

/// `n / d` as a percentage; zero for an empty denominator.
pub fn percent(n: usize, d: usize) -> f64 {
    if d == 0 {
        0.0
    } else {
        n as f64 * 100.0 / d as f64
    }
}

/// `n / d` as a percentage rounded half up, computed exactly.
pub fn rounded_percent(n: usize, d: usize) -> u64 {
    if d == 0 {
        return 0;
    }
    let (n, d) = (n as u128, d as u128);
    ((200 * n + d) / (2 * d)) as u64
}

/// What the aggregations need to know about one URL.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UrlRow {
    pub url: String,
    pub app_id: String,
    pub group: GroupKey,
    pub smells: BTreeSet<SmellKind>,
}

impl UrlRow {
    pub fn of(entry: &SnapshotEntry) -> UrlRow {
        UrlRow {
            url: entry.result.target.url.clone(),
            app_id: entry.result.target.app_id.clone(),
            group: GroupKey::of_entry(entry),
            smells: entry.report.kinds(),
        }
    }
}

pub fn url_rows(snapshot: &Snapshot) -> Vec<UrlRow> {
    snapshot.entries.values().map(UrlRow::of).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrevalenceRow {
    pub group: GroupKey,
    pub smell: SmellKind,
    pub urls_total: usize,
    pub urls_affected: usize,
    pub url_percent: f64,
    pub apps_total: usize,
    pub apps_affected: usize,
    pub app_percent: f64,
}

impl PrevalenceRow {
    pub fn url_percent_display(&self) -> u64 {
        rounded_percent(self.urls_affected, self.urls_total)
    }

    pub fn app_percent_display(&self) -> u64 {
        rounded_percent(self.apps_affected, self.apps_total)
    }
}

/// One row per (group, smell), groups outer, both in declaration order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrevalenceTable {
    pub rows: Vec<PrevalenceRow>,
}

impl PrevalenceTable {
    pub fn get(&self, group: GroupKey, smell: SmellKind) -> &PrevalenceRow {
        self.rows
            .iter()
            .find(|r| r.group == group && r.smell == smell)
            .expect("table covers every group and smell")
    }
}

pub fn prevalence(snapshot: &Snapshot) -> PrevalenceTable {
    prevalence_of(&url_rows(snapshot))
}

/// An app belongs to a group when one of its URLs does, and is affected
/// there when one of those URLs has the smell.
pub fn prevalence_of(rows: &[UrlRow]) -> PrevalenceTable {
    let mut out = Vec::with_capacity(24);
    for group in GroupKey::ALL {
        let members: Vec<&UrlRow> = rows.iter().filter(|r| r.group == group).collect();
        let apps: BTreeSet<&str> = members.iter().map(|r| r.app_id.as_str()).collect();
        for smell in SmellKind::ALL {
            let affected: Vec<&&UrlRow> = members.iter().filter(|r| r.smells.contains(&smell)).collect();
            let affected_apps: BTreeSet<&str> = affected.iter().map(|r| r.app_id.as_str()).collect();
            out.push(PrevalenceRow {
                group,
                smell,
                urls_total: members.len(),
                urls_affected: affected.len(),
                url_percent: percent(affected.len(), members.len()),
                apps_total: apps.len(),
                apps_affected: affected_apps.len(),
                app_percent: percent(affected_apps.len(), apps.len()),
            });
        }
    }
    PrevalenceTable { rows: out }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LocusClass {
    Header,
    Body,
}

impl LocusClass {
    pub fn of(locus: &str) -> LocusClass {
        if locus == "body" {
            LocusClass::Body
        } else {
            LocusClass::Header
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LeakRow {
    pub category: LeakCategory,
    pub software: String,
    pub locus: LocusClass,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LeakBreakdown {
    /// Sorted by (category, software, locus).
    pub rows: Vec<LeakRow>,
    pub total: usize,
    pub by_source_model: Vec<(SourceModel, usize)>,
}

impl LeakBreakdown {
    pub fn count(&self, category: LeakCategory, software: &str, locus: LocusClass) -> usize {
        self.rows
            .iter()
            .find(|r| r.category == category && r.software == software && r.locus == locus)
            .map_or(0, |r| r.count)
    }

    pub fn category_total(&self, category: LeakCategory) -> usize {
        self.rows
            .iter()
            .filter(|r| r.category == category)
            .map(|r| r.count)
            .sum()
    }

    pub fn locus_total(&self, locus: LocusClass) -> usize {
        self.rows.iter().filter(|r| r.locus == locus).map(|r| r.count).sum()
    }
}

pub fn leak_breakdown(snapshot: &Snapshot) -> LeakBreakdown {
    let mut counts: BTreeMap<(LeakCategory, String, LocusClass), usize> = BTreeMap::new();
    let mut by_model: BTreeMap<SourceModel, usize> = BTreeMap::new();
    let mut total = 0;
    for entry in snapshot.entries.values() {
        for leak in &entry.report.leaks {
            *counts
                .entry((leak.category, leak.software.clone(), LocusClass::of(&leak.locus)))
                .or_default() += 1;
            *by_model.entry(entry.result.target.source_model).or_default() += 1;
            total += 1;
        }
    }
    LeakBreakdown {
        rows: counts
            .into_iter()
            .map(|((category, software, locus), count)| LeakRow {
                category,
                software,
                locus,
                count,
            })
            .collect(),
        total,
        by_source_model: by_model.into_iter().collect(),
    }
}

/// HSTS tallies for one partition of the URLs.
///
/// `protected` counts https responses that carry the header at all, strong or
/// weak. The weakness tallies are subsets of `protected`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct HstsCounts {
    pub urls: usize,
    pub https_responses: usize,
    pub protected: usize,
    pub strong: usize,
    pub short_max_age: usize,
    pub missing_include_subdomains: usize,
    pub missing_preload: usize,
    pub absent: usize,
}

impl HstsCounts {
    pub fn protected_percent(&self) -> f64 {
        percent(self.protected, self.urls)
    }

    fn add(&mut self, entry: &SnapshotEntry) {
        self.urls += 1;
        let result = &entry.result;
        if result.scheme_used != Scheme::Https || result.status.is_none() {
            return;
        }
        self.https_responses += 1;
        let Some(finding) = entry.report.finding(SmellKind::MissingHsts) else {
            self.protected += 1;
            self.strong += 1;
            return;
        };
        use crate::smells::Subflag;
        if finding.subflags.contains(&Subflag::Absent) {
            self.absent += 1;
            return;
        }
        self.protected += 1;
        self.short_max_age += finding.subflags.contains(&Subflag::ShortMaxAge) as usize;
        self.missing_include_subdomains += finding.subflags.contains(&Subflag::MissingIncludeSubdomains) as usize;
        self.missing_preload += finding.subflags.contains(&Subflag::MissingPreload) as usize;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HstsStats {
    pub all: HstsCounts,
    pub open_source: HstsCounts,
    pub closed_source: HstsCounts,
}

pub fn hsts_stats(snapshot: &Snapshot) -> HstsStats {
    let mut stats = HstsStats {
        all: HstsCounts::default(),
        open_source: HstsCounts::default(),
        closed_source: HstsCounts::default(),
    };
    for entry in snapshot.entries.values() {
        stats.all.add(entry);
        match entry.result.target.source_model {
            SourceModel::OpenSource => stats.open_source.add(entry),
            SourceModel::ClosedSource => stats.closed_source.add(entry),
        }
    }
    stats
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RedirectRow {
    pub group: GroupKey,
    pub urls: usize,
    pub redirected: usize,
    pub total_hops: usize,
    /// Mean hops over redirected URLs.
    pub mean_hops: f64,
    pub max_hops: usize,
    pub loops: usize,
    pub downgrades: usize,
    pub excessive: usize,
}

pub fn redirect_stats(snapshot: &Snapshot) -> Vec<RedirectRow> {
    GroupKey::ALL
        .into_iter()
        .map(|group| {
            let chains: Vec<_> = snapshot
                .entries
                .values()
                .filter(|e| GroupKey::of_entry(e) == group)
                .map(|e| &e.chain)
                .collect();
            let redirected = chains.iter().filter(|c| c.chain_length > 0).count();
            let total_hops = chains.iter().map(|c| c.chain_length).sum();
            RedirectRow {
                group,
                urls: chains.len(),
                redirected,
                total_hops,
                mean_hops: if redirected == 0 {
                    0.0
                } else {
                    total_hops as f64 / redirected as f64
                },
                max_hops: chains.iter().map(|c| c.chain_length).max().unwrap_or(0),
                loops: chains.iter().filter(|c| c.loop_detected).count(),
                downgrades: chains.iter().filter(|c| c.downgrade_hops > 0).count(),
                excessive: chains
                    .iter()
                    .filter(|c| c.chain_length > crate::smells::EXCESSIVE_CHAIN)
                    .count(),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameworkRow {
    pub source_model: SourceModel,
    pub framework: String,
    pub count: usize,
}

/// Source-code findings by attributed framework.
pub fn framework_counts(snapshot: &Snapshot) -> Vec<FrameworkRow> {
    let mut counts: BTreeMap<(SourceModel, String), usize> = BTreeMap::new();
    for entry in snapshot.entries.values() {
        if let Some(f) = entry.report.finding(SmellKind::SourceCodeDisclosure) {
            for flag in &f.subflags {
                *counts
                    .entry((entry.result.target.source_model, flag.as_str().to_string()))
                    .or_default() += 1;
            }
        }
    }
    counts
        .into_iter()
        .map(|((source_model, framework), count)| FrameworkRow {
            source_model,
            framework,
            count,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutcomeCount {
    pub outcome: String,
    pub count: usize,
}

/// Records per scenario, then per unclassifiable reason, in declaration order.
/// Zero rows are kept.
pub fn maintenance_counts(records: &[MaintenanceRecord]) -> Vec<OutcomeCount> {
    use crate::maintenance::UnclassifiableReason;
    let outcomes = MaintenanceScenario::ALL
        .into_iter()
        .map(Outcome::Scenario)
        .chain(UnclassifiableReason::ALL.into_iter().map(Outcome::UnclassifiableReason));
    outcomes
        .map(|o| OutcomeCount {
            outcome: o.as_str().to_string(),
            count: records.iter().filter(|r| r.outcome == o).count(),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorrelationCell {
    pub scenario: MaintenanceScenario,
    pub smells: usize,
    pub urls: usize,
}

/// Non-empty cells of the scenario × smell-count matrix, sorted.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub cells: Vec<CorrelationCell>,
}

impl CorrelationMatrix {
    pub fn get(&self, scenario: MaintenanceScenario, smells: usize) -> usize {
        self.cells
            .iter()
            .find(|c| c.scenario == scenario && c.smells == smells)
            .map_or(0, |c| c.urls)
    }

    pub fn total(&self) -> usize {
        self.cells.iter().map(|c| c.urls).sum()
    }

    pub fn row_total(&self, scenario: MaintenanceScenario) -> usize {
        self.cells
            .iter()
            .filter(|c| c.scenario == scenario)
            .map(|c| c.urls)
            .sum()
    }

    pub fn column_total(&self, smells: usize) -> usize {
        self.cells.iter().filter(|c| c.smells == smells).map(|c| c.urls).sum()
    }
}

/// Tabulate classified records against the smell count of their URL.
/// Unclassifiable records and URLs without a smell count are left out.
pub fn correlate(smell_counts: &BTreeMap<String, usize>, records: &[MaintenanceRecord]) -> CorrelationMatrix {
    let mut cells: BTreeMap<(MaintenanceScenario, usize), usize> = BTreeMap::new();
    for record in records {
        let (Some(scenario), Some(&k)) = (record.outcome.scenario(), smell_counts.get(&record.url)) else {
            continue;
        };
        *cells.entry((scenario, k)).or_default() += 1;
    }
    CorrelationMatrix {
        cells: cells
            .into_iter()
            .map(|((scenario, smells), urls)| CorrelationCell { scenario, smells, urls })
            .collect(),
    }
}

/// Smell count per URL, from the earlier snapshot where it has the URL and the
/// later one otherwise.
pub fn smell_counts(before: &Snapshot, after: &Snapshot) -> BTreeMap<String, usize> {
    let mut counts: BTreeMap<String, usize> = after
        .entries
        .iter()
        .map(|(url, e)| (url.clone(), e.report.smell_count()))
        .collect();
    for (url, e) in &before.entries {
        counts.insert(url.clone(), e.report.smell_count());
    }
    counts
}

fn url_groups(before: &Snapshot, after: &Snapshot) -> BTreeMap<String, GroupKey> {
    let mut groups: BTreeMap<String, GroupKey> = after
        .entries
        .iter()
        .map(|(url, e)| (url.clone(), GroupKey::of_entry(e)))
        .collect();
    for (url, e) in &before.entries {
        groups.insert(url.clone(), GroupKey::of_entry(e));
    }
    groups
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupCorrelation {
    pub group: GroupKey,
    pub matrix: CorrelationMatrix,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaintenanceSection {
    pub after_snapshot: String,
    pub records: usize,
    pub outcomes: Vec<OutcomeCount>,
    pub correlation: CorrelationMatrix,
    pub correlation_by_group: Vec<GroupCorrelation>,
}

pub fn maintenance_section(before: &Snapshot, after: &Snapshot, records: &[MaintenanceRecord]) -> MaintenanceSection {
    let counts = smell_counts(before, after);
    let groups = url_groups(before, after);
    let correlation_by_group = GroupKey::ALL
        .into_iter()
        .map(|group| {
            let subset: Vec<MaintenanceRecord> = records
                .iter()
                .filter(|r| groups.get(&r.url) == Some(&group))
                .cloned()
                .collect();
            GroupCorrelation {
                group,
                matrix: correlate(&counts, &subset),
            }
        })
        .collect();
    MaintenanceSection {
        after_snapshot: after.id.clone(),
        records: records.len(),
        outcomes: maintenance_counts(records),
        correlation: correlate(&counts, records),
        correlation_by_group,
    }
}

/// Everything the `report` command writes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub snapshot: String,
    pub urls: usize,
    pub prevalence: PrevalenceTable,
    pub leaks: LeakBreakdown,
    pub hsts: HstsStats,
    pub redirects: Vec<RedirectRow>,
    pub frameworks: Vec<FrameworkRow>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub maintenance: Option<MaintenanceSection>,
}

impl Report {
    /// Tables for `snapshot`, plus the maintenance analysis when a later
    /// snapshot is given.
    pub fn build(snapshot: &Snapshot, later: Option<&Snapshot>) -> Report {
        Report {
            snapshot: snapshot.id.clone(),
            urls: snapshot.len(),
            prevalence: prevalence(snapshot),
            leaks: leak_breakdown(snapshot),
            hsts: hsts_stats(snapshot),
            redirects: redirect_stats(snapshot),
            frameworks: framework_counts(snapshot),
            maintenance: later.map(|after| {
                let records = crate::maintenance::diff_snapshots(snapshot, after);
                maintenance_section(snapshot, after, &records)
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExportFormat {
    Csv,
    Json,
}

#[derive(Debug, thiserror::Error)]
pub enum ExportError {
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

/// Write `report` into `dir`: `report.json`, or one CSV file per table.
/// Returns the files written.
pub fn export(report: &Report, format: ExportFormat, dir: &Path) -> Result<Vec<PathBuf>, ExportError> {
    let io_err = |path: &Path| {
        let path = path.to_path_buf();
        move |source| ExportError::Io { path, source }
    };
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let files: Vec<(&str, Vec<u8>)> = match format {
        ExportFormat::Json => {
            let mut bytes = serde_json::to_vec_pretty(report).expect("report serializes");
            bytes.push(b'\n');
            vec![("report.json", bytes)]
        }
        ExportFormat::Csv => csv_tables(report),
    };
    let mut written = Vec::new();
    for (name, bytes) in files {
        let path = dir.join(name);
        fs::write(&path, bytes).map_err(io_err(&path))?;
        written.push(path);
    }
    Ok(written)
}

fn csv_bytes(header: &[&str], rows: Vec<Vec<String>>) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory csv");
    for row in rows {
        w.write_record(&row).expect("in-memory csv");
    }
    w.into_inner().expect("in-memory csv")
}

fn csv_tables(report: &Report) -> Vec<(&'static str, Vec<u8>)> {
    let mut files = Vec::new();
    files.push((
        "prevalence.csv",
        csv_bytes(
            &[
                "group",
                "smell",
                "urls_total",
                "urls_affected",
                "url_percent",
                "url_percent_rounded",
                "apps_total",
                "apps_affected",
                "app_percent",
                "app_percent_rounded",
            ],
            report
                .prevalence
                .rows
                .iter()
                .map(|r| {
                    vec![
                        r.group.as_str().into(),
                        r.smell.as_str().into(),
                        r.urls_total.to_string(),
                        r.urls_affected.to_string(),
                        r.url_percent.to_string(),
                        r.url_percent_display().to_string(),
                        r.apps_total.to_string(),
                        r.apps_affected.to_string(),
                        r.app_percent.to_string(),
                        r.app_percent_display().to_string(),
                    ]
                })
                .collect(),
        ),
    ));
    files.push((
        "leaks.csv",
        csv_bytes(
            &["category", "software", "locus", "count"],
            report
                .leaks
                .rows
                .iter()
                .map(|r| {
                    vec![
                        r.category.as_str().into(),
                        r.software.clone(),
                        match r.locus {
                            LocusClass::Header => "header".into(),
                            LocusClass::Body => "body".into(),
                        },
                        r.count.to_string(),
                    ]
                })
                .collect(),
        ),
    ));
    let hsts_row = |name: &str, c: &HstsCounts| {
        vec![
            name.to_string(),
            c.urls.to_string(),
            c.https_responses.to_string(),
            c.protected.to_string(),
            c.protected_percent().to_string(),
            rounded_percent(c.protected, c.urls).to_string(),
            c.strong.to_string(),
            c.short_max_age.to_string(),
            c.missing_include_subdomains.to_string(),
            c.missing_preload.to_string(),
            c.absent.to_string(),
        ]
    };
    files.push((
        "hsts.csv",
        csv_bytes(
            &[
                "partition",
                "urls",
                "https_responses",
                "protected",
                "protected_percent",
                "protected_percent_rounded",
                "strong",
                "short_max_age",
                "missing_include_subdomains",
                "missing_preload",
                "absent",
            ],
            vec![
                hsts_row("all", &report.hsts.all),
                hsts_row("open_source", &report.hsts.open_source),
                hsts_row("closed_source", &report.hsts.closed_source),
            ],
        ),
    ));
    files.push((
        "redirects.csv",
        csv_bytes(
            &[
                "group",
                "urls",
                "redirected",
                "total_hops",
                "mean_hops",
                "max_hops",
                "loops",
                "downgrades",
                "excessive",
            ],
            report
                .redirects
                .iter()
                .map(|r| {
                    vec![
                        r.group.as_str().into(),
                        r.urls.to_string(),
                        r.redirected.to_string(),
                        r.total_hops.to_string(),
                        r.mean_hops.to_string(),
                        r.max_hops.to_string(),
                        r.loops.to_string(),
                        r.downgrades.to_string(),
                        r.excessive.to_string(),
                    ]
                })
                .collect(),
        ),
    ));
    files.push((
        "frameworks.csv",
        csv_bytes(
            &["source_model", "framework", "count"],
            report
                .frameworks
                .iter()
                .map(|r| vec![r.source_model.as_str().into(), r.framework.clone(), r.count.to_string()])
                .collect(),
        ),
    ));
    if let Some(m) = &report.maintenance {
        files.push((
            "maintenance.csv",
            csv_bytes(
                &["outcome", "count"],
                m.outcomes
                    .iter()
                    .map(|o| vec![o.outcome.clone(), o.count.to_string()])
                    .collect(),
            ),
        ));
        let mut rows: Vec<Vec<String>> = m
            .correlation
            .cells
            .iter()
            .map(|c| {
                vec![
                    "all".into(),
                    c.scenario.as_str().into(),
                    c.smells.to_string(),
                    c.urls.to_string(),
                ]
            })
            .collect();
        for g in &m.correlation_by_group {
            rows.extend(g.matrix.cells.iter().map(|c| {
                vec![
                    g.group.as_str().into(),
                    c.scenario.as_str().into(),
                    c.smells.to_string(),
                    c.urls.to_string(),
                ]
            }));
        }
        files.push((
            "correlation.csv",
            csv_bytes(&["group", "scenario", "smells", "urls"], rows),
        ));
    }
    files
}

/// Write the rows of a diff as JSONL.
pub fn write_records_jsonl<W: Write>(records: &[MaintenanceRecord], mut out: W) -> io::Result<()> {
    for record in records {
        serde_json::to_writer(&mut out, record)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Write the rows of a diff as CSV: `url,kind,outcome,before,after`.
pub fn write_records_csv<W: Write>(records: &[MaintenanceRecord], out: W) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["url", "kind", "outcome", "before", "after"])?;
    for r in records {
        let kind = match r.outcome {
            Outcome::Scenario(_) => "scenario",
            Outcome::UnclassifiableReason(_) => "unclassifiable_reason",
        };
        w.write_record([
            r.url.as_str(),
            kind,
            r.outcome.as_str(),
            r.before.as_ref().map_or("", |b| b.raw.as_str()),
            r.after.as_ref().map_or("", |a| a.raw.as_str()),
        ])?;
    }
    w.flush()
}

#[cfg(test)]
mod tests;
