//! Software banners and dotted-numeric versions.
//!
//! A banner such as `Apache/2.4.41 (Ubuntu) OpenSSL/1.1.1d` is a sequence of
//! whitespace-separated product tokens `name[/version]`, each optionally
//! followed by a parenthesized comment. Comments are kept as annotations and
//! matched against the OS dictionary in `data/os.json`.
//!
//! Only the leading `[0-9.]` run of a version participates in ordering:
//! `5.5.23-1ubuntu3` orders as `5.5.23`. Versions with different segment
//! counts are compared after zero-padding the shorter one, so `1.0 == 1.0.0`.

use std::cmp::Ordering;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

const OS_JSON: &str = include_str!("../data/os.json");
const SERVICES_JSON: &str = include_str!("../data/services.json");

/// One product token from a banner.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SoftwareId {
    /// Lowercased product name.
    pub name: String,
    /// Numeric segments of the version, when the token carries one that can
    /// be ordered.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub version: Option<Vec<u64>>,
    /// The token as it appeared.
    pub raw: String,
}

/// How a [`SoftwareId`]'s version can be used for comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VersionState<'a> {
    /// The token has no `/version` part.
    Absent,
    Numeric(&'a [u64]),
    /// A version is present but does not start with a dotted number.
    Unparseable,
}

impl SoftwareId {
    /// Parse one `name[/version]` token.
    pub fn parse(token: &str) -> SoftwareId {
        let token = token.trim();
        let (name, version) = match token.split_once('/') {
            Some((name, rest)) if !name.is_empty() => (name, numeric_prefix(rest).map(|(segs, _)| segs)),
            Some(_) => (token, None),
            None => (token, None),
        };
        SoftwareId {
            name: name.to_lowercase(),
            version,
            raw: token.to_string(),
        }
    }

    pub fn named(name: &str) -> SoftwareId {
        SoftwareId::parse(name)
    }

    /// The text after the first `/`, if any.
    pub fn version_text(&self) -> Option<&str> {
        match self.raw.split_once('/') {
            Some((name, rest)) if !name.is_empty() => Some(rest),
            _ => None,
        }
    }

    pub fn version_state(&self) -> VersionState<'_> {
        match (&self.version, self.version_text()) {
            (Some(segs), _) => VersionState::Numeric(segs),
            (None, Some(_)) => VersionState::Unparseable,
            (None, None) => VersionState::Absent,
        }
    }

    /// Version segments joined with dots.
    pub fn version_string(&self) -> Option<String> {
        self.version.as_ref().map(|segs| join_segments(segs))
    }

    /// Case-insensitive exact name match.
    pub fn same_name(&self, other: &SoftwareId) -> bool {
        self.name.eq_ignore_ascii_case(&other.name)
    }
}

pub fn join_segments(segs: &[u64]) -> String {
    segs.iter().map(u64::to_string).collect::<Vec<_>>().join(".")
}

/// Split `text` into the numeric segments of its leading `[0-9.]` run and the
/// remaining tail. Returns `None` when the run is empty or has an empty or
/// overflowing segment.
pub fn numeric_prefix(text: &str) -> Option<(Vec<u64>, &str)> {
    let end = text
        .find(|c: char| !(c.is_ascii_digit() || c == '.'))
        .unwrap_or(text.len());
    let run = text[..end].trim_end_matches('.');
    if run.is_empty() {
        return None;
    }
    let segs = run
        .split('.')
        .map(|s| if s.is_empty() { None } else { s.parse::<u64>().ok() })
        .collect::<Option<Vec<_>>>()?;
    Some((segs, &text[run.len()..]))
}

/// Lexicographic order over numeric segments, the shorter list padded with
/// zeros.
pub fn compare_versions(a: &[u64], b: &[u64]) -> Ordering {
    let len = a.len().max(b.len());
    for i in 0..len {
        let x = a.get(i).copied().unwrap_or(0);
        let y = b.get(i).copied().unwrap_or(0);
        match x.cmp(&y) {
            Ordering::Equal => continue,
            other => return other,
        }
    }
    Ordering::Equal
}

/// A parsed banner.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Banner {
    pub products: Vec<SoftwareId>,
    /// Canonical OS name from the OS dictionary, from the first annotation
    /// that matches one.
    pub os: Option<String>,
    /// Parenthesized comments in order of appearance.
    pub annotations: Vec<String>,
}

pub fn parse_banner(value: &str) -> Banner {
    let mut banner = Banner::default();
    let mut chars = value.char_indices().peekable();
    while let Some(&(start, c)) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
            continue;
        }
        if c == '(' {
            let mut depth = 0usize;
            let mut end = value.len();
            for (i, c) in chars.by_ref() {
                match c {
                    '(' => depth += 1,
                    ')' => {
                        depth -= 1;
                        if depth == 0 {
                            end = i + 1;
                            break;
                        }
                    }
                    _ => {}
                }
            }
            let inner = value[start..end].trim_start_matches('(').trim_end_matches(')').trim();
            if !inner.is_empty() {
                banner.annotations.push(inner.to_string());
            }
            continue;
        }
        let mut end = value.len();
        while let Some(&(i, c)) = chars.peek() {
            if c.is_whitespace() || c == '(' {
                end = i;
                break;
            }
            chars.next();
        }
        banner.products.push(SoftwareId::parse(&value[start..end]));
    }
    banner.os = banner
        .annotations
        .iter()
        .find_map(|a| classify_os(a))
        .map(str::to_string);
    banner
}

#[derive(Debug, Deserialize)]
struct OsEntry {
    name: String,
    aliases: Vec<String>,
}

#[derive(Debug, Deserialize)]
struct ServiceEntry {
    name: String,
    label: String,
}

fn os_dictionary() -> &'static [OsEntry] {
    static DICT: OnceLock<Vec<OsEntry>> = OnceLock::new();
    DICT.get_or_init(|| serde_json::from_str(OS_JSON).expect("data/os.json is valid"))
}

fn service_dictionary() -> &'static [ServiceEntry] {
    static DICT: OnceLock<Vec<ServiceEntry>> = OnceLock::new();
    DICT.get_or_init(|| serde_json::from_str(SERVICES_JSON).expect("data/services.json is valid"))
}

/// Every canonical OS name the classifier can emit.
pub fn os_names() -> impl Iterator<Item = &'static str> {
    os_dictionary().iter().map(|e| e.name.as_str())
}

/// Canonical OS name if `text` mentions a known OS.
pub fn classify_os(text: &str) -> Option<&'static str> {
    let lower = text.to_lowercase();
    os_dictionary()
        .iter()
        .find(|e| e.aliases.iter().any(|a| contains_word(&lower, a)))
        .map(|e| e.name.as_str())
}

fn contains_word(haystack: &str, word: &str) -> bool {
    haystack.match_indices(word).any(|(i, _)| {
        let before = haystack[..i].chars().next_back();
        let after = haystack[i + word.len()..].chars().next();
        !before.is_some_and(char::is_alphanumeric) && !after.is_some_and(char::is_alphanumeric)
    })
}

/// Display label for a known service name, e.g. `microsoft-iis` → `Microsoft IIS`.
pub fn service_label(name: &str) -> Option<&'static str> {
    service_dictionary()
        .iter()
        .find(|e| e.name.eq_ignore_ascii_case(name))
        .map(|e| e.label.as_str())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn nginx_with_os() {
        let b = parse_banner("nginx/1.14.1 (Ubuntu)");
        assert_eq!(b.products.len(), 1);
        assert_eq!(b.products[0].name, "nginx");
        assert_eq!(b.products[0].version, Some(vec![1, 14, 1]));
        assert_eq!(b.os.as_deref(), Some("Ubuntu"));
    }

    #[test]
    fn name_only_banner() {
        let b = parse_banner("cloudflare");
        assert_eq!(
            b.products,
            vec![SoftwareId {
                name: "cloudflare".into(),
                version: None,
                raw: "cloudflare".into()
            }]
        );
        assert_eq!(b.products[0].version_state(), VersionState::Absent);
        assert_eq!(b.os, None);
    }

    #[test]
    fn iis_is_lowercased() {
        let b = parse_banner("Microsoft-IIS/10.0");
        assert_eq!(b.products[0].name, "microsoft-iis");
        assert_eq!(b.products[0].version, Some(vec![10, 0]));
        assert_eq!(b.products[0].raw, "Microsoft-IIS/10.0");
    }

    #[test]
    fn multi_product_banner() {
        let b = parse_banner("Apache/2.4.6 (CentOS) OpenSSL/1.0.2k-fips PHP/5.4.16");
        let names: Vec<_> = b.products.iter().map(|p| p.name.as_str()).collect();
        assert_eq!(names, ["apache", "openssl", "php"]);
        assert_eq!(b.products[1].version, Some(vec![1, 0, 2]));
        assert_eq!(b.os.as_deref(), Some("CentOS"));
    }

    #[test]
    fn suffixes_are_cut_at_first_non_numeric() {
        assert_eq!(SoftwareId::parse("x/1.3.6b").version, Some(vec![1, 3, 6]));
        assert_eq!(SoftwareId::parse("PHP/5.5.23-1ubuntu3").version, Some(vec![5, 5, 23]));
        assert_eq!(SoftwareId::parse("x/1.2.").version, Some(vec![1, 2]));
        let edge = SoftwareId::parse("Kestrel/edge-2021");
        assert_eq!(edge.version, None);
        assert_eq!(edge.version_state(), VersionState::Unparseable);
        assert_eq!(SoftwareId::parse("x/1..2").version, None);
    }

    #[test]
    fn os_comment_variants() {
        assert_eq!(
            parse_banner("Apache (Red Hat Enterprise Linux)").os.as_deref(),
            Some("Red Hat")
        );
        assert_eq!(
            parse_banner("Apache/2.4.41 (Win64) OpenSSL/1.1.1c").os.as_deref(),
            Some("Windows")
        );
        assert_eq!(
            parse_banner("Apache/2.4.41 (cPanel) mod_bwlimited/1.4").os.as_deref(),
            Some("cPanel")
        );
        // An alias inside a longer word is not an OS mention.
        assert_eq!(parse_banner("thing (unixish)").os, None);
    }

    #[test]
    fn unbalanced_comment_runs_to_end() {
        let b = parse_banner("nginx (Ubuntu");
        assert_eq!(b.products.len(), 1);
        assert_eq!(b.annotations, vec!["Ubuntu".to_string()]);
    }

    #[test]
    fn compare_examples() {
        assert_eq!(compare_versions(&[1, 12, 1], &[1, 14, 1]), Ordering::Less);
        assert_eq!(compare_versions(&[1, 0], &[1, 0, 0]), Ordering::Equal);
        assert_eq!(compare_versions(&[2, 0], &[1, 99]), Ordering::Greater);
    }

    #[test]
    fn service_labels() {
        assert_eq!(service_label("microsoft-iis"), Some("Microsoft IIS"));
        assert_eq!(service_label("NGINX"), Some("Nginx"));
        assert_eq!(service_label("unheard-of"), None);
    }

    fn segs() -> impl Strategy<Value = Vec<u64>> {
        prop::collection::vec(0u64..1000, 1..6)
    }

    proptest! {
        #[test]
        fn compare_is_reflexive(a in segs()) {
            prop_assert_eq!(compare_versions(&a, &a), Ordering::Equal);
        }

        #[test]
        fn compare_is_antisymmetric(a in segs(), b in segs()) {
            prop_assert_eq!(compare_versions(&a, &b), compare_versions(&b, &a).reverse());
        }

        #[test]
        fn compare_is_transitive(a in segs(), b in segs(), c in segs()) {
            if compare_versions(&a, &b) != Ordering::Greater && compare_versions(&b, &c) != Ordering::Greater {
                prop_assert_ne!(compare_versions(&a, &c), Ordering::Greater);
            }
        }

        #[test]
        fn version_segments_rejoin_to_the_source(name in "[a-zA-Z][a-zA-Z-]{0,10}", v in segs(), tail in "([-a-z][a-z0-9]{0,5})?") {
            let text = join_segments(&v);
            let id = SoftwareId::parse(&format!("{name}/{text}{tail}"));
            prop_assert_eq!(id.version_string(), Some(text));
            prop_assert_eq!(id.name, name.to_lowercase());
        }

        #[test]
        fn os_classification_is_closed(value in ".{0,60}") {
            let names: Vec<_> = os_names().collect();
            if let Some(os) = parse_banner(&value).os {
                prop_assert!(names.contains(&os.as_str()));
            }
        }
    }
}
