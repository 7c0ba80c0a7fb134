//! HTTP probing.
//!
//! Every exchange is a single `GET` with `Connection: close`. Redirects are
//! never followed by the transport; [`Prober::follow_chain`] walks them by
//! hand so each hop, loop and scheme downgrade is visible. Requests only go to
//! hosts that appear in the corpus being probed: a redirect to any other host
//! is recorded as a hop but not fetched.

mod transport;
pub mod wire;

use std::collections::HashSet;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{mpsc, Arc};
use std::thread;
use std::time::Duration;

use chrono::{DateTime, Utc};
use rustls::ClientConfig;
use rustls_pki_types::CertificateDer;
use serde::{Deserialize, Serialize};
use url::Url;

use crate::target::ProbeTarget;

pub use transport::{tls_config, TransportError};

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeConfig {
    pub connect_timeout: Duration,
    pub read_timeout: Duration,
    /// Extra attempts after a transport failure.
    pub retries: u32,
    pub retry_backoff: Duration,
    pub max_redirects: usize,
    pub body_sample_limit: usize,
    pub parallelism: usize,
    pub user_agent: String,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            connect_timeout: Duration::from_secs(10),
            read_timeout: Duration::from_secs(30),
            retries: 3,
            retry_backoff: Duration::from_secs(2),
            max_redirects: 10,
            body_sample_limit: 256 * 1024,
            parallelism: 16,
            user_agent: format!("smellprobe/{}", crate::TOOL_VERSION),
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("{0} must be greater than zero")]
    NotPositive(&'static str),
    #[error("user agent must not be empty")]
    EmptyUserAgent,
    #[error("invalid trust root: {0}")]
    TrustRoot(String),
}

impl ProbeConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let checks = [
            ("connect_timeout", self.connect_timeout.is_zero()),
            ("read_timeout", self.read_timeout.is_zero()),
            ("max_redirects", self.max_redirects == 0),
            ("body_sample_limit", self.body_sample_limit == 0),
            ("parallelism", self.parallelism == 0),
        ];
        if let Some((name, _)) = checks.iter().find(|(_, bad)| *bad) {
            return Err(ConfigError::NotPositive(name));
        }
        if self.user_agent.trim().is_empty() {
            return Err(ConfigError::EmptyUserAgent);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Http,
    Https,
}

impl Scheme {
    pub fn of(url: &str) -> Option<Scheme> {
        let (scheme, _) = url.trim().split_once(':')?;
        if scheme.eq_ignore_ascii_case("https") {
            Some(Scheme::Https)
        } else if scheme.eq_ignore_ascii_case("http") {
            Some(Scheme::Http)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BodyFormat {
    Json,
    NonJson,
    Empty,
}

impl BodyFormat {
    /// `Json` when the content type mentions json or the body parses as a
    /// JSON document.
    pub fn classify(headers: &[(String, String)], body: &[u8]) -> BodyFormat {
        let json_type = headers
            .iter()
            .any(|(n, v)| n == "content-type" && v.to_ascii_lowercase().contains("json"));
        if json_type || serde_json::from_slice::<serde::de::IgnoredAny>(body).is_ok() {
            BodyFormat::Json
        } else if body.is_empty() {
            BodyFormat::Empty
        } else {
            BodyFormat::NonJson
        }
    }
}

/// One HTTP exchange. Exactly one of `status` and `transport_error` is set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbeResult {
    pub target: ProbeTarget,
    pub timestamp: DateTime<Utc>,
    pub scheme_used: Scheme,
    pub status: Option<u16>,
    /// Lowercased names and raw values in wire order.
    pub headers: Vec<(String, String)>,
    #[serde(with = "base64_bytes")]
    pub body_sample: Vec<u8>,
    pub body_format: BodyFormat,
    pub transport_error: Option<String>,
}

impl ProbeResult {
    pub fn from_response(target: ProbeTarget, scheme: Scheme, response: wire::RawResponse) -> Self {
        let body_format = BodyFormat::classify(&response.headers, &response.body);
        ProbeResult {
            target,
            timestamp: Utc::now(),
            scheme_used: scheme,
            status: Some(response.status),
            headers: response.headers,
            body_sample: response.body,
            body_format,
            transport_error: None,
        }
    }

    pub fn from_error(target: ProbeTarget, scheme: Scheme, error: TransportError) -> Self {
        ProbeResult {
            target,
            timestamp: Utc::now(),
            scheme_used: scheme,
            status: None,
            headers: Vec::new(),
            body_sample: Vec::new(),
            body_format: BodyFormat::Empty,
            transport_error: Some(error.reason().to_string()),
        }
    }

    /// First value of a header, by lowercase name.
    pub fn header(&self, name: &str) -> Option<&str> {
        self.headers.iter().find(|(n, _)| n == name).map(|(_, v)| v.as_str())
    }

    pub fn header_values<'a>(&'a self, name: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        self.headers
            .iter()
            .filter(move |(n, _)| n == name)
            .map(|(_, v)| v.as_str())
    }

    pub fn body_text(&self) -> std::borrow::Cow<'_, str> {
        String::from_utf8_lossy(&self.body_sample)
    }

    pub fn is_redirect(&self) -> bool {
        self.status.is_some_and(|s| (300..400).contains(&s)) && self.header("location").is_some()
    }
}

mod base64_bytes {
    use base64::engine::general_purpose::STANDARD;
    use base64::Engine;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(bytes: &[u8], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&STANDARD.encode(bytes))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u8>, D::Error> {
        let text = String::deserialize(d)?;
        STANDARD.decode(text).map_err(serde::de::Error::custom)
    }
}

/// One 3xx exchange that carried a `Location`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hop {
    pub url: String,
    pub status: u16,
    pub location: String,
    /// `location` resolved against `url`; `None` when it does not resolve.
    pub next_url: Option<String>,
}

impl Hop {
    pub fn is_downgrade(&self) -> bool {
        Scheme::of(&self.url) == Some(Scheme::Https)
            && self.next_url.as_deref().and_then(Scheme::of) == Some(Scheme::Http)
    }
}

/// Why chain following stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChainStop {
    /// A response that is not a redirect.
    Final,
    Loop,
    MaxRedirects,
    /// The next hop points at a host outside the corpus.
    OffCorpusHost,
    BadLocation,
    TransportError,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RedirectChain {
    pub hops: Vec<Hop>,
    /// The last response obtained: the first non-redirect, or the response at
    /// which following stopped.
    pub terminal: ProbeResult,
    pub loop_detected: bool,
    pub downgrade_hops: usize,
    pub chain_length: usize,
    pub stop: ChainStop,
}

impl RedirectChain {
    fn new(hops: Vec<Hop>, terminal: ProbeResult, stop: ChainStop) -> Self {
        let downgrade_hops = hops.iter().filter(|h| h.is_downgrade()).count();
        RedirectChain {
            chain_length: hops.len(),
            loop_detected: stop == ChainStop::Loop,
            downgrade_hops,
            hops,
            terminal,
            stop,
        }
    }
}

/// Issues probes with a fixed configuration and trust store.
#[derive(Clone)]
pub struct Prober {
    config: ProbeConfig,
    tls: Arc<ClientConfig>,
}

impl std::fmt::Debug for Prober {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Prober")
            .field("config", &self.config)
            .finish_non_exhaustive()
    }
}

impl Prober {
    pub fn new(config: ProbeConfig) -> Result<Self, ConfigError> {
        Self::with_extra_roots(config, &[])
    }

    /// Trust `extra_roots` in addition to the public web roots.
    pub fn with_extra_roots(config: ProbeConfig, extra_roots: &[Vec<u8>]) -> Result<Self, ConfigError> {
        config.validate()?;
        let roots: Vec<CertificateDer<'static>> = extra_roots
            .iter()
            .map(|der| CertificateDer::from(der.clone()))
            .collect();
        let tls = tls_config(&roots).map_err(|e| ConfigError::TrustRoot(e.to_string()))?;
        Ok(Prober { config, tls })
    }

    pub fn config(&self) -> &ProbeConfig {
        &self.config
    }

    /// One exchange with retries on transport failure. Redirects are returned,
    /// not followed.
    pub fn probe_once(&self, target: &ProbeTarget) -> ProbeResult {
        let scheme = Scheme::of(&target.url).unwrap_or(Scheme::Http);
        let url = match Url::parse(target.url.trim()) {
            Ok(url) => url,
            Err(_) => return ProbeResult::from_error(target.clone(), scheme, TransportError::InvalidUrl),
        };
        let timeouts = transport::Timeouts {
            connect: self.config.connect_timeout,
            read: self.config.read_timeout,
        };
        let mut attempt = 0;
        loop {
            match transport::exchange(
                &url,
                &self.tls,
                &timeouts,
                &self.config.user_agent,
                self.config.body_sample_limit,
            ) {
                Ok(response) => return ProbeResult::from_response(target.clone(), scheme, response),
                Err(TransportError::InvalidUrl) => {
                    return ProbeResult::from_error(target.clone(), scheme, TransportError::InvalidUrl)
                }
                Err(e) if attempt >= self.config.retries => return ProbeResult::from_error(target.clone(), scheme, e),
                Err(e) => {
                    log::debug!("{}: attempt {} failed: {e}", target.url, attempt + 1);
                    attempt += 1;
                    thread::sleep(self.config.retry_backoff);
                }
            }
        }
    }

    /// Follow redirects from `target` within the target's own host.
    pub fn follow_chain(&self, target: &ProbeTarget) -> RedirectChain {
        let hosts = host_of(&target.url).into_iter().collect();
        self.probe_target_within(target, &hosts).1
    }

    /// The response to the target URL itself plus the chain it starts, from a
    /// single walk.
    pub fn probe_target(&self, target: &ProbeTarget) -> (ProbeResult, RedirectChain) {
        let hosts = host_of(&target.url).into_iter().collect();
        self.probe_target_within(target, &hosts)
    }

    fn probe_target_within(&self, target: &ProbeTarget, allowed: &HashSet<String>) -> (ProbeResult, RedirectChain) {
        let mut current = normalize(&target.url);
        let mut hops: Vec<Hop> = Vec::new();
        let mut first: Option<ProbeResult> = None;
        loop {
            let result = self.probe_once(&target.with_url(current.clone()));
            if first.is_none() {
                first = Some(result.clone());
            }
            let first = || first.clone().unwrap_or_else(|| result.clone());
            if result.transport_error.is_some() {
                let first = first();
                return (first, RedirectChain::new(hops, result, ChainStop::TransportError));
            }
            let (Some(status), Some(location)) = (result.status, result.header("location")) else {
                let first = first();
                return (first, RedirectChain::new(hops, result, ChainStop::Final));
            };
            if !(300..400).contains(&status) {
                let first = first();
                return (first, RedirectChain::new(hops, result, ChainStop::Final));
            }
            let next_url = resolve(&current, location);
            let revisit = hops.iter().any(|h| h.url == current);
            hops.push(Hop {
                url: current.clone(),
                status,
                location: location.to_string(),
                next_url: next_url.clone(),
            });
            let stop = if revisit {
                Some(ChainStop::Loop)
            } else if hops.len() >= self.config.max_redirects {
                Some(ChainStop::MaxRedirects)
            } else {
                match &next_url {
                    None => Some(ChainStop::BadLocation),
                    Some(next) if !host_of(next).is_some_and(|h| allowed.contains(&h)) => {
                        Some(ChainStop::OffCorpusHost)
                    }
                    Some(_) => None,
                }
            };
            if let Some(stop) = stop {
                let first = first();
                return (first, RedirectChain::new(hops, result, stop));
            }
            current = next_url.expect("checked above");
        }
    }

    /// Probe every target with at most `parallelism` exchanges in flight.
    /// Output order matches input order.
    pub fn probe_all(&self, corpus: &[ProbeTarget]) -> Vec<(ProbeResult, RedirectChain)> {
        if corpus.is_empty() {
            return Vec::new();
        }
        let allowed: HashSet<String> = corpus.iter().filter_map(|t| host_of(&t.url)).collect();
        let workers = self.config.parallelism.min(corpus.len());
        let next = AtomicUsize::new(0);
        let (tx, rx) = mpsc::channel();
        let mut slots: Vec<Option<(ProbeResult, RedirectChain)>> = vec![None; corpus.len()];
        thread::scope(|scope| {
            for _ in 0..workers {
                let tx = tx.clone();
                let (next, allowed) = (&next, &allowed);
                scope.spawn(move || loop {
                    let i = next.fetch_add(1, Ordering::SeqCst);
                    let Some(target) = corpus.get(i) else { break };
                    let outcome = self.probe_target_within(target, allowed);
                    if tx.send((i, outcome)).is_err() {
                        break;
                    }
                });
            }
            drop(tx);
            for (i, outcome) in rx {
                slots[i] = Some(outcome);
            }
        });
        slots.into_iter().map(|s| s.expect("every target probed")).collect()
    }
}

pub fn probe_once(target: &ProbeTarget, config: &ProbeConfig) -> Result<ProbeResult, ConfigError> {
    Ok(Prober::new(config.clone())?.probe_once(target))
}

pub fn follow_chain(target: &ProbeTarget, config: &ProbeConfig) -> Result<RedirectChain, ConfigError> {
    Ok(Prober::new(config.clone())?.follow_chain(target))
}

pub fn probe_all(
    corpus: &[ProbeTarget],
    config: &ProbeConfig,
) -> Result<Vec<(ProbeResult, RedirectChain)>, ConfigError> {
    Ok(Prober::new(config.clone())?.probe_all(corpus))
}

/// Lowercased host without port.
pub fn host_of(url: &str) -> Option<String> {
    Url::parse(url.trim())
        .ok()
        .and_then(|u| u.host_str().map(str::to_ascii_lowercase))
}

fn normalize(url: &str) -> String {
    Url::parse(url.trim())
        .map(|u| u.to_string())
        .unwrap_or_else(|_| url.trim().to_string())
}

fn resolve(base: &str, location: &str) -> Option<String> {
    let base = Url::parse(base).ok()?;
    let next = base.join(location.trim()).ok()?;
    matches!(next.scheme(), "http" | "https").then(|| next.to_string())
}
