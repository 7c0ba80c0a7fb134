use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use url::Url;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceModel {
    OpenSource,
    ClosedSource,
}

impl SourceModel {
    pub fn as_str(self) -> &'static str {
        match self {
            SourceModel::OpenSource => "open_source",
            SourceModel::ClosedSource => "closed_source",
        }
    }
}

impl FromStr for SourceModel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "open_source" => Ok(SourceModel::OpenSource),
            "closed_source" => Ok(SourceModel::ClosedSource),
            other => Err(format!("invalid source_model: {other:?}")),
        }
    }
}

/// Payload format of an app server, declared in the corpus or observed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PayloadFormat {
    Json,
    NonJson,
}

impl FromStr for PayloadFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "json" => Ok(PayloadFormat::Json),
            "non_json" => Ok(PayloadFormat::NonJson),
            other => Err(format!("invalid declared_format: {other:?}")),
        }
    }
}

/// A URL under test together with the app it was extracted from.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ProbeTarget {
    pub url: String,
    pub app_id: String,
    pub source_model: SourceModel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub declared_format: Option<PayloadFormat>,
}

impl ProbeTarget {
    pub fn new(url: impl Into<String>, app_id: impl Into<String>, source_model: SourceModel) -> Self {
        ProbeTarget {
            url: url.into(),
            app_id: app_id.into(),
            source_model,
            declared_format: None,
        }
    }

    /// Same app metadata, different URL. Used for redirect hops.
    pub fn with_url(&self, url: impl Into<String>) -> Self {
        ProbeTarget {
            url: url.into(),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum UrlProblem {
    Unparseable(String),
    UnsupportedScheme,
    MissingHost,
}

impl fmt::Display for UrlProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UrlProblem::Unparseable(e) => write!(f, "unparseable url: {e}"),
            UrlProblem::UnsupportedScheme => f.write_str("unsupported scheme"),
            UrlProblem::MissingHost => f.write_str("missing host"),
        }
    }
}

/// Parse `raw` as an absolute `http`/`https` URL.
pub fn validate_url(raw: &str) -> Result<Url, UrlProblem> {
    let url = Url::parse(raw.trim()).map_err(|e| UrlProblem::Unparseable(e.to_string()))?;
    if !matches!(url.scheme(), "http" | "https") {
        return Err(UrlProblem::UnsupportedScheme);
    }
    if url.host_str().is_none_or(str::is_empty) {
        return Err(UrlProblem::MissingHost);
    }
    Ok(url)
}

/// Deduplication key: the URL string with scheme and host lowercased. Path,
/// query and userinfo keep their case.
pub fn dedup_key(raw: &str) -> String {
    let raw = raw.trim();
    let Some((scheme, rest)) = raw.split_once("://") else {
        return raw.to_string();
    };
    let end = rest.find(['/', '?', '#']).unwrap_or(rest.len());
    let (authority, tail) = rest.split_at(end);
    let authority = match authority.rsplit_once('@') {
        Some((userinfo, host)) => format!("{userinfo}@{}", host.to_ascii_lowercase()),
        None => authority.to_ascii_lowercase(),
    };
    format!("{}://{}{}", scheme.to_ascii_lowercase(), authority, tail)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dedup_key_lowercases_scheme_and_host_only() {
        assert_eq!(
            dedup_key("HTTPS://Api.Example.COM/V1/Users?Q=A"),
            "https://api.example.com/V1/Users?Q=A"
        );
        assert_eq!(dedup_key("http://User@HOST:8080"), "http://User@host:8080");
    }

    #[test]
    fn validate_rejects_other_schemes() {
        assert_eq!(validate_url("ftp://x").unwrap_err(), UrlProblem::UnsupportedScheme);
        assert!(matches!(validate_url("not a url"), Err(UrlProblem::Unparseable(_))));
        assert!(validate_url("HTTP://X.COM").is_ok());
    }
}
