//! Data tables: framework stack-trace markers and body banners.

use std::sync::OnceLock;

use regex::Regex;
use serde::Deserialize;

use super::Subflag;

const FRAMEWORKS_JSON: &str = include_str!("../../data/frameworks.json");
const BODY_BANNERS_JSON: &str = include_str!("../../data/body_banners.json");

#[derive(Debug, Deserialize)]
#[serde(rename_all = "lowercase")]
enum MarkerKind {
    Literal,
    Regex,
}

#[derive(Debug, Deserialize)]
struct FrameworkRow {
    framework: Subflag,
    kind: MarkerKind,
    marker: String,
    specificity: u32,
}

enum Matcher {
    Literal(String),
    Regex(Regex),
}

impl Matcher {
    fn find(&self, text: &str) -> Option<(usize, usize)> {
        match self {
            Matcher::Literal(m) => text.find(m.as_str()).map(|i| (i, i + m.len())),
            Matcher::Regex(r) => r.find(text).map(|m| (m.start(), m.end())),
        }
    }
}

struct FrameworkPattern {
    framework: Subflag,
    matcher: Matcher,
    specificity: u32,
}

fn framework_table() -> &'static [FrameworkPattern] {
    static TABLE: OnceLock<Vec<FrameworkPattern>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let rows: Vec<FrameworkRow> = serde_json::from_str(FRAMEWORKS_JSON).expect("data/frameworks.json is valid");
        rows.into_iter()
            .map(|row| {
                assert_eq!(
                    row.framework.kind(),
                    super::SmellKind::SourceCodeDisclosure,
                    "framework table entry {:?}",
                    row.framework
                );
                FrameworkPattern {
                    framework: row.framework,
                    matcher: match row.kind {
                        MarkerKind::Literal => Matcher::Literal(row.marker),
                        MarkerKind::Regex => Matcher::Regex(Regex::new(&row.marker).expect("framework regex")),
                    },
                    specificity: row.specificity,
                }
            })
            .collect()
    })
}

/// A framework marker found in a body.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameworkMatch {
    pub framework: Subflag,
    pub start: usize,
    pub end: usize,
}

/// The most specific framework marker in `body`; ties go to the earlier table
/// row.
pub fn match_framework(body: &str) -> Option<FrameworkMatch> {
    let mut best: Option<(u32, FrameworkMatch)> = None;
    for pattern in framework_table() {
        if best.as_ref().is_some_and(|(s, _)| *s >= pattern.specificity) {
            continue;
        }
        if let Some((start, end)) = pattern.matcher.find(body) {
            best = Some((
                pattern.specificity,
                FrameworkMatch {
                    framework: pattern.framework,
                    start,
                    end,
                },
            ));
        }
    }
    best.map(|(_, m)| m)
}

#[derive(Debug, Deserialize)]
struct BannerRow {
    software: String,
    pattern: String,
}

struct BodyBanner {
    software: String,
    regex: Regex,
}

fn banner_table() -> &'static [BodyBanner] {
    static TABLE: OnceLock<Vec<BodyBanner>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let rows: Vec<BannerRow> = serde_json::from_str(BODY_BANNERS_JSON).expect("data/body_banners.json is valid");
        rows.into_iter()
            .map(|row| BodyBanner {
                regex: Regex::new(&row.pattern).expect("banner regex"),
                software: row.software,
            })
            .collect()
    })
}

/// A server banner found in a body.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BodyBannerMatch {
    pub software: String,
    pub version: Option<String>,
    pub os: Option<String>,
    pub text: String,
}

/// Every body banner in table order, at most one per table row.
pub fn match_body_banners(body: &str) -> Vec<BodyBannerMatch> {
    banner_table()
        .iter()
        .filter_map(|banner| {
            let caps = banner.regex.captures(body)?;
            let group = |name| {
                caps.name(name)
                    .map(|m| m.as_str().trim().to_string())
                    .filter(|s| !s.is_empty())
            };
            Some(BodyBannerMatch {
                software: banner.software.clone(),
                version: group("version"),
                os: group("os"),
                text: caps[0].to_string(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tables_load() {
        assert!(framework_table().len() >= 6);
        assert_eq!(banner_table().len(), 5);
    }

    #[test]
    fn most_specific_wins() {
        let body = "Traceback (most recent call last):\n  File \"/x/cherrypy/_cprequest.py\", line 1";
        assert_eq!(match_framework(body).unwrap().framework, Subflag::Cherrypy);
        let body = "Traceback (most recent call last):\n  File \"app.py\"";
        assert_eq!(match_framework(body).unwrap().framework, Subflag::UnknownFramework);
    }

    #[test]
    fn plain_text_has_no_framework() {
        assert_eq!(match_framework("Error handling guide and request traces"), None);
        assert_eq!(match_framework(""), None);
    }

    #[test]
    fn nginx_error_page_banner() {
        let m = match_body_banners("<hr><center>nginx/1.14.1</center>");
        assert_eq!(m.len(), 1);
        assert_eq!(m[0].software, "nginx");
        assert_eq!(m[0].version.as_deref(), Some("1.14.1"));
    }

    #[test]
    fn apache_address_with_os() {
        let m = match_body_banners("<address>Apache/2.4.41 (Ubuntu) Server at x Port 80</address>");
        assert_eq!(m[0].version.as_deref(), Some("2.4.41"));
        assert_eq!(m[0].os.as_deref(), Some("Ubuntu"));
    }

    #[test]
    fn unrelated_powered_by_is_ignored() {
        assert!(match_body_banners("Powered by Apache Kafka streams").is_empty());
    }
}
