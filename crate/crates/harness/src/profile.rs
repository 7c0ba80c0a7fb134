use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::bodies::stack_trace_body;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Http,
    Https,
}

impl Scheme {
    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::Http => "http",
            Scheme::Https => "https",
        }
    }
}

/// What a fixture body contains.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BodyTemplate {
    #[default]
    None,
    Json {
        text: String,
    },
    /// A canned error page for one framework: asp, cherrypy, java, nodejs,
    /// php or python.
    StackTrace {
        framework: String,
    },
    Banner {
        text: String,
    },
    Text {
        text: String,
    },
}

impl BodyTemplate {
    fn render(&self) -> Vec<u8> {
        match self {
            BodyTemplate::None => Vec::new(),
            BodyTemplate::Json { text } | BodyTemplate::Banner { text } | BodyTemplate::Text { text } => {
                text.as_bytes().to_vec()
            }
            BodyTemplate::StackTrace { framework } => stack_trace_body(framework).as_bytes().to_vec(),
        }
    }

    fn default_content_type(&self) -> Option<&'static str> {
        match self {
            BodyTemplate::None => None,
            BodyTemplate::Json { .. } => Some("application/json"),
            BodyTemplate::StackTrace { .. } | BodyTemplate::Banner { .. } => Some("text/html; charset=utf-8"),
            BodyTemplate::Text { .. } => Some("text/plain"),
        }
    }
}

fn default_status() -> u16 {
    200
}

/// The response for one path.
///
/// `headers` are raw `Name: value` lines written in order. Unless the lines
/// already carry them, `Content-Type` (derived from the body template),
/// `Content-Length` and `Connection: close` are appended. With `raw` set the
/// fixture writes exactly those bytes and nothing else.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RouteSpec {
    #[serde(default = "default_status")]
    pub status: u16,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    #[serde(default)]
    pub headers: Vec<String>,
    #[serde(default)]
    pub body: BodyTemplate,
    #[serde(default)]
    pub chunked: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw: Option<String>,
}

impl Default for RouteSpec {
    fn default() -> Self {
        RouteSpec {
            status: 200,
            reason: None,
            headers: Vec::new(),
            body: BodyTemplate::None,
            chunked: false,
            raw: None,
        }
    }
}

impl RouteSpec {
    pub fn status(status: u16) -> Self {
        RouteSpec {
            status,
            ..Default::default()
        }
    }

    pub fn header(mut self, line: impl Into<String>) -> Self {
        self.headers.push(line.into());
        self
    }

    pub fn body(mut self, body: BodyTemplate) -> Self {
        self.body = body;
        self
    }

    pub fn redirect(status: u16, location: impl Into<String>) -> Self {
        RouteSpec::status(status).header(format!("Location: {}", location.into()))
    }

    /// Wire bytes with `{http}` / `{https}` expanded to the fixture's base URLs.
    pub fn render(&self, bases: &Bases) -> Vec<u8> {
        if let Some(raw) = &self.raw {
            return bases.expand(raw).into_bytes();
        }
        let body = bases.expand_bytes(self.body.render());
        let reason = self
            .reason
            .clone()
            .unwrap_or_else(|| reason_phrase(self.status).to_string());
        let mut out = format!("HTTP/1.1 {} {}\r\n", self.status, reason).into_bytes();
        let has = |name: &str| {
            self.headers.iter().any(|line| {
                line.split_once(':')
                    .is_some_and(|(n, _)| n.trim().eq_ignore_ascii_case(name))
            })
        };
        for line in &self.headers {
            out.extend_from_slice(bases.expand(line).as_bytes());
            out.extend_from_slice(b"\r\n");
        }
        if !has("content-type") {
            if let Some(ct) = self.body.default_content_type() {
                out.extend_from_slice(format!("Content-Type: {ct}\r\n").as_bytes());
            }
        }
        let framed = has("content-length") || has("transfer-encoding");
        if self.chunked && !framed {
            out.extend_from_slice(b"Transfer-Encoding: chunked\r\n");
        } else if !framed {
            out.extend_from_slice(format!("Content-Length: {}\r\n", body.len()).as_bytes());
        }
        if !has("connection") {
            out.extend_from_slice(b"Connection: close\r\n");
        }
        out.extend_from_slice(b"\r\n");
        if self.chunked && !framed {
            for chunk in body.chunks(7) {
                out.extend_from_slice(format!("{:x}\r\n", chunk.len()).as_bytes());
                out.extend_from_slice(chunk);
                out.extend_from_slice(b"\r\n");
            }
            out.extend_from_slice(b"0\r\n\r\n");
        } else {
            out.extend_from_slice(&body);
        }
        out
    }
}

/// A redirect script: `start` answers with `status` and `Location: hops[0]`,
/// the path of `hops[i]` answers with `Location: hops[i + 1]`. The path of the
/// last hop is served by `routes` or the fallback. Hop targets may be paths or
/// `{http}`/`{https}`-prefixed absolute URLs, so loops and scheme downgrades are
/// both expressible.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RedirectPlan {
    pub start: String,
    pub hops: Vec<String>,
    #[serde(default = "default_redirect_status")]
    pub status: u16,
}

fn default_redirect_status() -> u16 {
    302
}

fn default_schemes() -> Vec<Scheme> {
    vec![Scheme::Http]
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixtureProfile {
    #[serde(default = "default_schemes")]
    pub schemes: Vec<Scheme>,
    #[serde(default)]
    pub routes: BTreeMap<String, RouteSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub redirect_plan: Option<RedirectPlan>,
    #[serde(default)]
    pub fallback: RouteSpec,
    /// Pause before answering each request.
    #[serde(default)]
    pub delay_ms: u64,
    /// Close the first N connections after reading the request without
    /// answering.
    #[serde(default)]
    pub fail_first: u32,
}

impl Default for FixtureProfile {
    fn default() -> Self {
        FixtureProfile {
            schemes: default_schemes(),
            routes: BTreeMap::new(),
            redirect_plan: None,
            fallback: RouteSpec::default(),
            delay_ms: 0,
            fail_first: 0,
        }
    }
}

impl FixtureProfile {
    pub fn new(schemes: &[Scheme], fallback: RouteSpec) -> Self {
        FixtureProfile {
            schemes: schemes.to_vec(),
            fallback,
            ..Default::default()
        }
    }

    pub fn http(fallback: RouteSpec) -> Self {
        Self::new(&[Scheme::Http], fallback)
    }

    pub fn https(fallback: RouteSpec) -> Self {
        Self::new(&[Scheme::Https], fallback)
    }

    pub fn route(mut self, path: impl Into<String>, spec: RouteSpec) -> Self {
        self.routes.insert(path.into(), spec);
        self
    }

    pub fn with_redirect_plan(mut self, plan: RedirectPlan) -> Self {
        self.redirect_plan = Some(plan);
        self
    }

    /// Routes with the redirect plan expanded. Explicit routes win.
    pub fn effective_routes(&self) -> BTreeMap<String, RouteSpec> {
        let mut routes = BTreeMap::new();
        if let Some(plan) = &self.redirect_plan {
            let mut from = plan.start.clone();
            for hop in &plan.hops {
                routes.insert(from.clone(), RouteSpec::redirect(plan.status, hop.clone()));
                from = hop_path(hop);
            }
        }
        for (path, spec) in &self.routes {
            routes.insert(path.clone(), spec.clone());
        }
        routes
    }
}

fn hop_path(hop: &str) -> String {
    let rest = hop
        .strip_prefix("{https}")
        .or_else(|| hop.strip_prefix("{http}"))
        .unwrap_or(hop);
    if rest.is_empty() {
        "/".to_string()
    } else {
        rest.to_string()
    }
}

/// Base URLs substituted into templates.
#[derive(Debug, Clone, Default)]
pub struct Bases {
    pub http: Option<String>,
    pub https: Option<String>,
}

impl Bases {
    pub fn expand(&self, text: &str) -> String {
        let mut out = text.to_string();
        if let Some(b) = &self.https {
            out = out.replace("{https}", b);
        }
        if let Some(b) = &self.http {
            out = out.replace("{http}", b);
        }
        out
    }

    fn expand_bytes(&self, bytes: Vec<u8>) -> Vec<u8> {
        match String::from_utf8(bytes) {
            Ok(text) => self.expand(&text).into_bytes(),
            Err(e) => e.into_bytes(),
        }
    }
}

fn reason_phrase(status: u16) -> &'static str {
    match status {
        200 => "OK",
        201 => "Created",
        204 => "No Content",
        301 => "Moved Permanently",
        302 => "Found",
        303 => "See Other",
        307 => "Temporary Redirect",
        308 => "Permanent Redirect",
        400 => "Bad Request",
        401 => "Unauthorized",
        403 => "Forbidden",
        404 => "Not Found",
        500 => "Internal Server Error",
        502 => "Bad Gateway",
        503 => "Service Unavailable",
        _ => "Status",
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn render_appends_framing_after_given_headers() {
        let spec = RouteSpec::status(200)
            .header("Server: nginx/1.14.1")
            .body(BodyTemplate::Json {
                text: "{\"a\":1}".into(),
            });
        let bytes = spec.render(&Bases::default());
        assert_eq!(
            String::from_utf8(bytes).unwrap(),
            "HTTP/1.1 200 OK\r\nServer: nginx/1.14.1\r\nContent-Type: application/json\r\n\
             Content-Length: 7\r\nConnection: close\r\n\r\n{\"a\":1}"
        );
    }

    #[test]
    fn redirect_plan_expands_into_routes() {
        let profile = FixtureProfile::http(RouteSpec::default()).with_redirect_plan(RedirectPlan {
            start: "/a".into(),
            hops: vec!["/b".into(), "{http}/a".into()],
            status: 302,
        });
        let routes = profile.effective_routes();
        assert_eq!(routes.len(), 2);
        assert_eq!(routes["/a"].headers, vec!["Location: /b".to_string()]);
        assert_eq!(routes["/b"].headers, vec!["Location: {http}/a".to_string()]);
    }
}
