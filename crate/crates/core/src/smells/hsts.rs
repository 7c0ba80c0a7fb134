//! `Strict-Transport-Security` parsing.
//!
//! Directive names are case-insensitive, whitespace around `;` and `=` is
//! ignored, values may be quoted, and when `max-age` repeats the first one
//! counts.

use serde::{Deserialize, Serialize};

/// One year, the minimum `max-age` accepted as strong.
pub const MIN_MAX_AGE: u64 = 31_536_000;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct HstsPolicy {
    /// `None` when the directive is missing or its value is not a number.
    pub max_age: Option<u64>,
    pub include_subdomains: bool,
    pub preload: bool,
}

impl HstsPolicy {
    pub fn parse(value: &str) -> HstsPolicy {
        let mut policy = HstsPolicy::default();
        let mut seen_max_age = false;
        for directive in value.split(';') {
            let (name, arg) = match directive.split_once('=') {
                Some((n, v)) => (n.trim(), Some(v.trim().trim_matches('"').trim())),
                None => (directive.trim(), None),
            };
            if name.eq_ignore_ascii_case("max-age") {
                if !seen_max_age {
                    seen_max_age = true;
                    policy.max_age = arg.and_then(|v| v.parse().ok());
                }
            } else if name.eq_ignore_ascii_case("includesubdomains") {
                policy.include_subdomains = true;
            } else if name.eq_ignore_ascii_case("preload") {
                policy.preload = true;
            }
        }
        policy
    }

    pub fn short_max_age(&self) -> bool {
        self.max_age.is_none_or(|age| age < MIN_MAX_AGE)
    }

    pub fn is_strong(&self) -> bool {
        !self.short_max_age() && self.include_subdomains && self.preload
    }
}
