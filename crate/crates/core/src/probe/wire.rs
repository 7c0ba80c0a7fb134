//! HTTP/1.1 request serialization and response parsing.
//!
//! The reader never buffers more than the response head plus
//! `body_limit` bytes of payload. Chunked transfer coding is decoded; other
//! codings are passed through as-is (requests never advertise compression).

use std::io::{self, Read};

const MAX_HEAD: usize = 64 * 1024;
const MAX_HEADERS: usize = 256;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawResponse {
    pub status: u16,
    pub reason: String,
    /// Lowercased names, raw values, wire order.
    pub headers: Vec<(String, String)>,
    pub body: Vec<u8>,
    /// The body was cut at the sample limit.
    pub truncated: bool,
}

impl RawResponse {
    pub fn header(&self, name: &str) -> Option<&str> {
        self.headers.iter().find(|(n, _)| n == name).map(|(_, v)| v.as_str())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum WireError {
    #[error("connection closed before any response byte")]
    Empty,
    #[error("malformed response: {0}")]
    Malformed(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// `GET` request bytes for `target` (origin-form path plus query).
pub fn encode_get(target: &str, host: &str, user_agent: &str) -> Vec<u8> {
    format!(
        "GET {target} HTTP/1.1\r\nHost: {host}\r\nUser-Agent: {user_agent}\r\nAccept: */*\r\nConnection: close\r\n\r\n"
    )
    .into_bytes()
}

/// Parse a complete response held in memory.
pub fn parse_response(bytes: &[u8], body_limit: usize) -> Result<RawResponse, WireError> {
    read_response(bytes, body_limit)
}

/// Read one response from `reader`. A close without TLS close_notify is
/// treated as end of stream.
pub fn read_response<R: Read>(reader: R, body_limit: usize) -> Result<RawResponse, WireError> {
    let mut src = Source::new(reader);
    loop {
        let head = src.read_head()?;
        let (status, reason, headers) = parse_head(&head)?;
        // Interim responses precede the real one.
        if (100..200).contains(&status) && status != 101 {
            continue;
        }
        let (body, truncated) = read_body(&mut src, status, &headers, body_limit)?;
        return Ok(RawResponse {
            status,
            reason,
            headers,
            body,
            truncated,
        });
    }
}

struct Source<R> {
    inner: R,
    buf: Vec<u8>,
    pos: usize,
    eof: bool,
}

impl<R: Read> Source<R> {
    fn new(inner: R) -> Self {
        Source {
            inner,
            buf: Vec::new(),
            pos: 0,
            eof: false,
        }
    }

    fn available(&self) -> &[u8] {
        &self.buf[self.pos..]
    }

    /// Pull more bytes. Returns false at end of stream.
    fn fill(&mut self) -> io::Result<bool> {
        if self.eof {
            return Ok(false);
        }
        if self.pos > 0 && self.pos == self.buf.len() {
            self.buf.clear();
            self.pos = 0;
        }
        let mut chunk = [0u8; 8192];
        loop {
            match self.inner.read(&mut chunk) {
                Ok(0) => {
                    self.eof = true;
                    return Ok(false);
                }
                Ok(n) => {
                    self.buf.extend_from_slice(&chunk[..n]);
                    return Ok(true);
                }
                Err(e) if e.kind() == io::ErrorKind::Interrupted => continue,
                Err(e) if e.kind() == io::ErrorKind::UnexpectedEof => {
                    self.eof = true;
                    return Ok(false);
                }
                Err(e) => return Err(e),
            }
        }
    }

    fn read_head(&mut self) -> Result<Vec<u8>, WireError> {
        let mut scanned: usize = 0;
        loop {
            let avail = self.available();
            if let Some(i) = find(&avail[scanned.saturating_sub(3)..], b"\r\n\r\n") {
                let end = scanned.saturating_sub(3) + i + 4;
                let head = avail[..end].to_vec();
                self.pos += end;
                return Ok(head);
            }
            scanned = avail.len();
            if scanned > MAX_HEAD {
                return Err(WireError::Malformed("response head too large".into()));
            }
            if !self.fill()? {
                return if self.available().is_empty() && self.buf.is_empty() {
                    Err(WireError::Empty)
                } else {
                    Err(WireError::Malformed("truncated response head".into()))
                };
            }
        }
    }

    /// Up to `n` bytes; fewer only at end of stream.
    fn take(&mut self, n: usize) -> io::Result<Vec<u8>> {
        while self.available().len() < n {
            if !self.fill()? {
                break;
            }
        }
        let k = n.min(self.available().len());
        let out = self.available()[..k].to_vec();
        self.pos += k;
        Ok(out)
    }

    fn read_line(&mut self) -> Result<Vec<u8>, WireError> {
        loop {
            if let Some(i) = find(self.available(), b"\r\n") {
                let line = self.available()[..i].to_vec();
                self.pos += i + 2;
                return Ok(line);
            }
            if self.available().len() > 4096 {
                return Err(WireError::Malformed("chunk line too long".into()));
            }
            if !self.fill()? {
                return Err(WireError::Malformed("truncated chunked body".into()));
            }
        }
    }
}

fn find(haystack: &[u8], needle: &[u8]) -> Option<usize> {
    haystack.windows(needle.len()).position(|w| w == needle)
}

type Head = (u16, String, Vec<(String, String)>);

fn parse_head(head: &[u8]) -> Result<Head, WireError> {
    let mut slots = vec![httparse::EMPTY_HEADER; MAX_HEADERS];
    let mut response = httparse::Response::new(&mut slots);
    match response.parse(head) {
        Ok(httparse::Status::Complete(_)) => {}
        Ok(httparse::Status::Partial) => return Err(WireError::Malformed("incomplete head".into())),
        Err(e) => return Err(WireError::Malformed(e.to_string())),
    }
    let status = response
        .code
        .ok_or_else(|| WireError::Malformed("missing status".into()))?;
    let reason = response.reason.unwrap_or_default().to_string();
    let headers = response
        .headers
        .iter()
        .map(|h| {
            (
                h.name.to_ascii_lowercase(),
                String::from_utf8_lossy(h.value).into_owned(),
            )
        })
        .collect();
    Ok((status, reason, headers))
}

fn read_body<R: Read>(
    src: &mut Source<R>,
    status: u16,
    headers: &[(String, String)],
    limit: usize,
) -> Result<(Vec<u8>, bool), WireError> {
    if status == 204 || status == 304 || (100..200).contains(&status) {
        return Ok((Vec::new(), false));
    }
    let chunked = headers
        .iter()
        .filter(|(n, _)| n == "transfer-encoding")
        .any(|(_, v)| v.to_ascii_lowercase().contains("chunked"));
    if chunked {
        return read_chunked(src, limit);
    }
    let mut lengths = headers
        .iter()
        .filter(|(n, _)| n == "content-length")
        .map(|(_, v)| v.trim().parse::<u64>());
    if let Some(first) = lengths.next() {
        let len = first.map_err(|_| WireError::Malformed("invalid content-length".into()))?;
        for other in lengths {
            if other.ok() != Some(len) {
                return Err(WireError::Malformed("conflicting content-length".into()));
            }
        }
        let want = usize::try_from(len).unwrap_or(usize::MAX);
        let body = src.take(want.min(limit))?;
        return Ok((body, want > limit));
    }
    // Delimited by connection close.
    let body = src.take(limit)?;
    let truncated = body.len() == limit && (!src.available().is_empty() || src.fill()?);
    Ok((body, truncated))
}

fn read_chunked<R: Read>(src: &mut Source<R>, limit: usize) -> Result<(Vec<u8>, bool), WireError> {
    let mut body = Vec::new();
    loop {
        let line = src.read_line()?;
        let line = String::from_utf8_lossy(&line);
        let size_text = line.split(';').next().unwrap_or_default().trim();
        let size = u64::from_str_radix(size_text, 16)
            .map_err(|_| WireError::Malformed(format!("invalid chunk size {size_text:?}")))?;
        if size == 0 {
            // Trailer section; not needed, and the connection closes anyway.
            return Ok((body, false));
        }
        let room = limit - body.len();
        let size = usize::try_from(size).unwrap_or(usize::MAX);
        if size > room {
            body.extend(src.take(room)?);
            return Ok((body, true));
        }
        let data = src.take(size)?;
        if data.len() < size {
            return Err(WireError::Malformed("truncated chunk".into()));
        }
        body.extend(data);
        src.read_line()?;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_content_length_body() {
        let r = parse_response(
            b"HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: 7\r\n\r\n{\"a\":1}",
            1024,
        )
        .unwrap();
        assert_eq!(r.status, 200);
        assert_eq!(r.reason, "OK");
        assert_eq!(r.header("content-type"), Some("application/json"));
        assert_eq!(r.body, b"{\"a\":1}");
        assert!(!r.truncated);
    }

    #[test]
    fn header_names_lowercased_order_kept() {
        let r = parse_response(b"HTTP/1.1 200 OK\r\nX-B: 1\r\nServer: nginx\r\nX-B: 2\r\n\r\n", 16).unwrap();
        let names: Vec<_> = r.headers.iter().map(|(n, v)| format!("{n}={v}")).collect();
        assert_eq!(names, ["x-b=1", "server=nginx", "x-b=2"]);
    }

    #[test]
    fn decodes_chunked() {
        let r = parse_response(
            b"HTTP/1.1 200 OK\r\nTransfer-Encoding: chunked\r\n\r\n5;ext=1\r\nhello\r\n6\r\n world\r\n0\r\n\r\n",
            1024,
        )
        .unwrap();
        assert_eq!(r.body, b"hello world");
    }

    #[test]
    fn truncates_at_limit() {
        let r = parse_response(b"HTTP/1.1 200 OK\r\nContent-Length: 10\r\n\r\n0123456789", 4).unwrap();
        assert_eq!(r.body, b"0123");
        assert!(r.truncated);
        let r = parse_response(b"HTTP/1.1 200 OK\r\n\r\n0123456789", 4).unwrap();
        assert_eq!(r.body, b"0123");
        assert!(r.truncated);
        let r = parse_response(
            b"HTTP/1.1 200 OK\r\nTransfer-Encoding: chunked\r\n\r\na\r\n0123456789\r\n0\r\n\r\n",
            4,
        )
        .unwrap();
        assert_eq!(r.body, b"0123");
        assert!(r.truncated);
    }

    #[test]
    fn close_delimited_body_at_exact_limit_is_not_truncated() {
        let r = parse_response(b"HTTP/1.1 200 OK\r\n\r\n0123", 4).unwrap();
        assert_eq!(r.body, b"0123");
        assert!(!r.truncated);
    }

    #[test]
    fn skips_interim_responses() {
        let r = parse_response(
            b"HTTP/1.1 100 Continue\r\n\r\nHTTP/1.1 301 Moved\r\nLocation: /x\r\n\r\n",
            16,
        )
        .unwrap();
        assert_eq!(r.status, 301);
        assert_eq!(r.header("location"), Some("/x"));
    }

    #[test]
    fn empty_and_garbage_inputs() {
        assert!(matches!(parse_response(b"", 16), Err(WireError::Empty)));
        assert!(matches!(
            parse_response(b"HTTP/1.1 200 OK\r\n", 16),
            Err(WireError::Malformed(_))
        ));
        assert!(matches!(
            parse_response(b"SSH-2.0-OpenSSH\r\n\r\n", 16),
            Err(WireError::Malformed(_))
        ));
        assert!(matches!(
            parse_response(
                b"HTTP/1.1 200 OK\r\nContent-Length: 1\r\nContent-Length: 2\r\n\r\nab",
                16
            ),
            Err(WireError::Malformed(_))
        ));
    }

    #[test]
    fn no_body_statuses() {
        let r = parse_response(b"HTTP/1.1 204 No Content\r\nContent-Length: 5\r\n\r\nhello", 16).unwrap();
        assert!(r.body.is_empty());
    }

    #[test]
    fn request_bytes() {
        assert_eq!(
            encode_get("/a?b=1", "example.com:8080", "ua/1"),
            b"GET /a?b=1 HTTP/1.1\r\nHost: example.com:8080\r\nUser-Agent: ua/1\r\nAccept: */*\r\nConnection: close\r\n\r\n"
        );
    }
}
