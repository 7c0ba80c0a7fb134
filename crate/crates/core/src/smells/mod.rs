//! Smell detectors.
//!
//! Each detector is a pure function of probe evidence. [`detect_all`] runs
//! the six of them in a fixed order and collects the findings together with
//! the banner leaks behind a version-disclosure finding.

pub mod hsts;
pub mod patterns;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::probe::{BodyFormat, ProbeResult, RedirectChain, Scheme};
use crate::target::ProbeTarget;
use crate::version::{classify_os, join_segments, numeric_prefix, parse_banner};

use hsts::HstsPolicy;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SmellKind {
    InsecureTransport,
    SourceCodeDisclosure,
    VersionDisclosure,
    LackOfAccessControl,
    MissingHttpsRedirect,
    MissingHsts,
}

impl SmellKind {
    pub const ALL: [SmellKind; 6] = [
        SmellKind::InsecureTransport,
        SmellKind::SourceCodeDisclosure,
        SmellKind::VersionDisclosure,
        SmellKind::LackOfAccessControl,
        SmellKind::MissingHttpsRedirect,
        SmellKind::MissingHsts,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SmellKind::InsecureTransport => "insecure_transport",
            SmellKind::SourceCodeDisclosure => "source_code_disclosure",
            SmellKind::VersionDisclosure => "version_disclosure",
            SmellKind::LackOfAccessControl => "lack_of_access_control",
            SmellKind::MissingHttpsRedirect => "missing_https_redirect",
            SmellKind::MissingHsts => "missing_hsts",
        }
    }

    /// The subflags a finding of this kind may carry.
    pub fn vocabulary(self) -> &'static [Subflag] {
        use Subflag::*;
        match self {
            SmellKind::InsecureTransport => &[],
            SmellKind::SourceCodeDisclosure => &[Asp, Cherrypy, Java, Nodejs, Php, UnknownFramework],
            SmellKind::VersionDisclosure => &[Engine, Server, XAspnetVersion, XPoweredBy, Body],
            SmellKind::LackOfAccessControl => &[JsonAuthErrorHeuristic],
            SmellKind::MissingHttpsRedirect => &[MissingRedirect, Downgrade, Loop, ExcessiveChain],
            SmellKind::MissingHsts => &[Absent, ShortMaxAge, MissingIncludeSubdomains, MissingPreload],
        }
    }
}

impl fmt::Display for SmellKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SmellKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SmellKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown smell: {s}"))
    }
}

/// Kind-specific qualifiers of a finding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Subflag {
    Asp,
    Cherrypy,
    Java,
    Nodejs,
    Php,
    UnknownFramework,
    Engine,
    Server,
    XAspnetVersion,
    XPoweredBy,
    Body,
    JsonAuthErrorHeuristic,
    MissingRedirect,
    Downgrade,
    Loop,
    ExcessiveChain,
    Absent,
    ShortMaxAge,
    MissingIncludeSubdomains,
    MissingPreload,
}

impl Subflag {
    pub fn kind(self) -> SmellKind {
        SmellKind::ALL
            .into_iter()
            .find(|k| k.vocabulary().contains(&self))
            .expect("every subflag belongs to a kind")
    }

    pub fn as_str(self) -> &'static str {
        use Subflag::*;
        match self {
            Asp => "asp",
            Cherrypy => "cherrypy",
            Java => "java",
            Nodejs => "nodejs",
            Php => "php",
            UnknownFramework => "unknown_framework",
            Engine => "engine",
            Server => "server",
            XAspnetVersion => "x_aspnet_version",
            XPoweredBy => "x_powered_by",
            Body => "body",
            JsonAuthErrorHeuristic => "json_auth_error_heuristic",
            MissingRedirect => "missing_redirect",
            Downgrade => "downgrade",
            Loop => "loop",
            ExcessiveChain => "excessive_chain",
            Absent => "absent",
            ShortMaxAge => "short_max_age",
            MissingIncludeSubdomains => "missing_include_subdomains",
            MissingPreload => "missing_preload",
        }
    }
}

impl fmt::Display for Subflag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Locus {
    Url,
    Header,
    Body,
    Chain,
}

pub const EXCERPT_LIMIT: usize = 200;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Evidence {
    pub locus: Locus,
    /// At most [`EXCERPT_LIMIT`] characters.
    pub excerpt: String,
}

impl Evidence {
    pub fn new(locus: Locus, text: &str) -> Evidence {
        Evidence {
            locus,
            excerpt: text.chars().take(EXCERPT_LIMIT).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SmellFinding {
    pub kind: SmellKind,
    pub url: String,
    pub evidence: Vec<Evidence>,
    pub subflags: BTreeSet<Subflag>,
}

impl SmellFinding {
    fn new(kind: SmellKind, url: &str, evidence: Vec<Evidence>) -> SmellFinding {
        SmellFinding {
            kind,
            url: url.to_string(),
            evidence,
            subflags: BTreeSet::new(),
        }
    }

    fn flag(mut self, flag: Subflag) -> SmellFinding {
        debug_assert_eq!(flag.kind(), self.kind);
        self.subflags.insert(flag);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LeakCategory {
    Os,
    Service,
    Version,
}

impl LeakCategory {
    pub fn as_str(self) -> &'static str {
        match self {
            LeakCategory::Os => "os",
            LeakCategory::Service => "service",
            LeakCategory::Version => "version",
        }
    }
}

/// One piece of identifying information from a banner.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LeakRecord {
    pub category: LeakCategory,
    /// Lowercased product name, or the canonical OS name for `os` records.
    pub software: String,
    /// Dotted-numeric version; always set for `version` records.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub version: Option<String>,
    /// Lowercased header name, or `body`.
    pub locus: String,
}

/// All findings for one URL.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SmellReport {
    pub url: String,
    pub findings: Vec<SmellFinding>,
    pub leaks: Vec<LeakRecord>,
}

impl SmellReport {
    pub fn finding(&self, kind: SmellKind) -> Option<&SmellFinding> {
        self.findings.iter().find(|f| f.kind == kind)
    }

    pub fn has(&self, kind: SmellKind) -> bool {
        self.finding(kind).is_some()
    }

    pub fn kinds(&self) -> BTreeSet<SmellKind> {
        self.findings.iter().map(|f| f.kind).collect()
    }

    /// Number of distinct smells found.
    pub fn smell_count(&self) -> usize {
        self.kinds().len()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DetectorOptions {
    /// Mark 2xx JSON bodies that look like OAuth-style authorization errors.
    pub json_auth_heuristic: bool,
}

pub fn detect_insecure_transport(target: &ProbeTarget) -> Option<SmellFinding> {
    (Scheme::of(&target.url) == Some(Scheme::Http)).then(|| {
        SmellFinding::new(
            SmellKind::InsecureTransport,
            &target.url,
            vec![Evidence::new(Locus::Url, &target.url)],
        )
    })
}

pub fn detect_source_code_disclosure(result: &ProbeResult) -> Option<SmellFinding> {
    if result.body_sample.is_empty() {
        return None;
    }
    let body = result.body_text();
    let m = patterns::match_framework(&body)?;
    let start = floor_char_boundary(&body, m.start.saturating_sub(40));
    let excerpt = &body[start..];
    Some(
        SmellFinding::new(
            SmellKind::SourceCodeDisclosure,
            &result.target.url,
            vec![Evidence::new(Locus::Body, excerpt)],
        )
        .flag(m.framework),
    )
}

const VERSION_HEADERS: [(&str, Subflag); 4] = [
    ("engine", Subflag::Engine),
    ("server", Subflag::Server),
    ("x-aspnet-version", Subflag::XAspnetVersion),
    ("x-powered-by", Subflag::XPoweredBy),
];

pub fn detect_version_disclosure(result: &ProbeResult) -> (Option<SmellFinding>, Vec<LeakRecord>) {
    let mut evidence = Vec::new();
    let mut subflags = BTreeSet::new();
    let mut leaks = Vec::new();
    for (name, value) in &result.headers {
        let Some((_, flag)) = VERSION_HEADERS.iter().find(|(h, _)| h == name) else {
            continue;
        };
        subflags.insert(*flag);
        evidence.push(Evidence::new(Locus::Header, &format!("{name}: {value}")));
        if *flag == Subflag::XAspnetVersion {
            leaks.push(leak(LeakCategory::Service, "asp.net", None, name));
            if let Some((segs, _)) = numeric_prefix(value.trim()) {
                leaks.push(leak(LeakCategory::Version, "asp.net", Some(join_segments(&segs)), name));
            }
            continue;
        }
        let banner = parse_banner(value);
        for product in &banner.products {
            leaks.push(leak(LeakCategory::Service, &product.name, None, name));
            if let Some(version) = product.version_string() {
                leaks.push(leak(LeakCategory::Version, &product.name, Some(version), name));
            }
        }
        if let Some(os) = &banner.os {
            leaks.push(leak(LeakCategory::Os, os, None, name));
        }
    }
    if !result.body_sample.is_empty() {
        for m in patterns::match_body_banners(&result.body_text()) {
            subflags.insert(Subflag::Body);
            evidence.push(Evidence::new(Locus::Body, &m.text));
            leaks.push(leak(LeakCategory::Service, &m.software, None, "body"));
            if let Some((segs, _)) = m.version.as_deref().and_then(numeric_prefix) {
                leaks.push(leak(
                    LeakCategory::Version,
                    &m.software,
                    Some(join_segments(&segs)),
                    "body",
                ));
            }
            if let Some(os) = m.os.as_deref().and_then(classify_os) {
                leaks.push(leak(LeakCategory::Os, os, None, "body"));
            }
        }
    }
    if evidence.is_empty() {
        return (None, Vec::new());
    }
    let finding = SmellFinding {
        kind: SmellKind::VersionDisclosure,
        url: result.target.url.clone(),
        evidence,
        subflags,
    };
    (Some(finding), leaks)
}

fn leak(category: LeakCategory, software: &str, version: Option<String>, locus: &str) -> LeakRecord {
    LeakRecord {
        category,
        software: software.to_string(),
        version,
        locus: locus.to_string(),
    }
}

pub fn detect_lack_of_access_control(result: &ProbeResult, options: &DetectorOptions) -> Option<SmellFinding> {
    let status = result.status?;
    if !(200..300).contains(&status) || result.header("www-authenticate").is_some() {
        return None;
    }
    let finding = SmellFinding::new(
        SmellKind::LackOfAccessControl,
        &result.target.url,
        vec![Evidence::new(Locus::Header, &format!("status {status}"))],
    );
    if options.json_auth_heuristic && looks_like_json_auth_error(result) {
        return Some(finding.flag(Subflag::JsonAuthErrorHeuristic));
    }
    Some(finding)
}

const OAUTH_ERRORS: [&str; 9] = [
    "invalid_request",
    "invalid_token",
    "invalid_client",
    "invalid_grant",
    "unauthorized",
    "unauthorized_client",
    "access_denied",
    "insufficient_scope",
    "unauthenticated",
];

fn looks_like_json_auth_error(result: &ProbeResult) -> bool {
    if result.body_format != BodyFormat::Json {
        return false;
    }
    let Ok(serde_json::Value::Object(map)) = serde_json::from_slice(&result.body_sample) else {
        return false;
    };
    let is_auth_code = |v: &serde_json::Value| v.as_u64().is_some_and(|c| c == 401 || c == 403);
    let error_named = |v: &serde_json::Value| {
        v.as_str()
            .is_some_and(|s| OAUTH_ERRORS.contains(&s.to_ascii_lowercase().as_str()))
    };
    match map.get("error") {
        Some(serde_json::Value::Object(inner)) => {
            inner.get("code").is_some_and(is_auth_code) || inner.get("status").is_some_and(error_named)
        }
        Some(v) => error_named(v),
        None => map.get("status").is_some_and(is_auth_code) || map.get("code").is_some_and(is_auth_code),
    }
}

/// Chains longer than this are flagged.
pub const EXCESSIVE_CHAIN: usize = 5;

pub fn detect_missing_https_redirect(chain: &RedirectChain) -> Option<SmellFinding> {
    let start = chain
        .hops
        .first()
        .map(|h| h.url.as_str())
        .unwrap_or(chain.terminal.target.url.as_str());
    let mut finding = match Scheme::of(start)? {
        Scheme::Http => {
            let host = crate::probe::host_of(start);
            let upgraded = chain.hops.iter().any(|h| {
                h.next_url
                    .as_deref()
                    .is_some_and(|next| Scheme::of(next) == Some(Scheme::Https) && crate::probe::host_of(next) == host)
            });
            if upgraded || chain.terminal.transport_error.is_some() {
                return None;
            }
            SmellFinding::new(SmellKind::MissingHttpsRedirect, start, chain_evidence(start, chain))
                .flag(Subflag::MissingRedirect)
        }
        Scheme::Https => {
            if chain.downgrade_hops == 0 {
                return None;
            }
            SmellFinding::new(SmellKind::MissingHttpsRedirect, start, chain_evidence(start, chain))
                .flag(Subflag::Downgrade)
        }
    };
    if chain.loop_detected {
        finding.subflags.insert(Subflag::Loop);
    }
    if chain.chain_length > EXCESSIVE_CHAIN {
        finding.subflags.insert(Subflag::ExcessiveChain);
    }
    Some(finding)
}

fn chain_evidence(start: &str, chain: &RedirectChain) -> Vec<Evidence> {
    if chain.hops.is_empty() {
        let status = chain.terminal.status.map_or_else(String::new, |s| s.to_string());
        return vec![Evidence::new(Locus::Chain, &format!("{start} {status}"))];
    }
    let mut text = String::new();
    for hop in &chain.hops {
        text.push_str(&format!("{} {} -> {}; ", hop.url, hop.status, hop.location));
    }
    vec![Evidence::new(Locus::Chain, text.trim_end_matches("; "))]
}

/// `None` for http results: the header only counts over https.
pub fn detect_missing_hsts(result: &ProbeResult) -> Option<SmellFinding> {
    if result.scheme_used != Scheme::Https || result.status.is_none() {
        return None;
    }
    let url = &result.target.url;
    let Some(value) = result.header("strict-transport-security") else {
        return Some(
            SmellFinding::new(
                SmellKind::MissingHsts,
                url,
                vec![Evidence::new(Locus::Header, "no strict-transport-security header")],
            )
            .flag(Subflag::Absent),
        );
    };
    let policy = HstsPolicy::parse(value);
    if policy.is_strong() {
        return None;
    }
    let mut finding = SmellFinding::new(
        SmellKind::MissingHsts,
        url,
        vec![Evidence::new(
            Locus::Header,
            &format!("strict-transport-security: {value}"),
        )],
    );
    if policy.short_max_age() {
        finding.subflags.insert(Subflag::ShortMaxAge);
    }
    if !policy.include_subdomains {
        finding.subflags.insert(Subflag::MissingIncludeSubdomains);
    }
    if !policy.preload {
        finding.subflags.insert(Subflag::MissingPreload);
    }
    Some(finding)
}

/// Run every detector with default options.
pub fn detect_all(target: &ProbeTarget, result: &ProbeResult, chain: &RedirectChain) -> SmellReport {
    detect_all_with(target, result, chain, &DetectorOptions::default())
}

/// Run every detector. `result` is the response to the target URL itself and
/// `chain` the redirect chain starting there.
pub fn detect_all_with(
    target: &ProbeTarget,
    result: &ProbeResult,
    chain: &RedirectChain,
    options: &DetectorOptions,
) -> SmellReport {
    let mut findings = Vec::new();
    findings.extend(detect_insecure_transport(target));
    findings.extend(detect_source_code_disclosure(result).or_else(|| detect_source_code_disclosure(&chain.terminal)));
    let (version, leaks) = detect_version_disclosure(result);
    findings.extend(version);
    findings.extend(detect_lack_of_access_control(&chain.terminal, options));
    findings.extend(detect_missing_https_redirect(chain));
    findings.extend(detect_missing_hsts(result));
    SmellReport {
        url: target.url.clone(),
        findings,
        leaks,
    }
}

fn floor_char_boundary(s: &str, mut i: usize) -> usize {
    while !s.is_char_boundary(i) {
        i -= 1;
    }
    i
}
