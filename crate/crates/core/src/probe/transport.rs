use std::io::{self, Write};
use std::net::{SocketAddr, TcpStream, ToSocketAddrs};
use std::sync::Arc;
use std::time::Duration;

use rustls::{ClientConfig, ClientConnection, RootCertStore, StreamOwned};
use rustls_pki_types::{CertificateDer, ServerName};
use url::Url;

use super::wire::{self, RawResponse, WireError};

/// Why an exchange produced no HTTP response. `Display` yields the stable
/// reason string stored in probe results.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TransportError {
    Dns,
    ConnectionRefused,
    Timeout,
    TlsHandshake,
    ConnectionReset,
    EmptyResponse,
    MalformedResponse,
    InvalidUrl,
    Io,
}

impl TransportError {
    pub fn reason(self) -> &'static str {
        match self {
            TransportError::Dns => "dns failure",
            TransportError::ConnectionRefused => "connection refused",
            TransportError::Timeout => "timeout",
            TransportError::TlsHandshake => "tls handshake failure",
            TransportError::ConnectionReset => "connection reset",
            TransportError::EmptyResponse => "empty response",
            TransportError::MalformedResponse => "malformed response",
            TransportError::InvalidUrl => "invalid url",
            TransportError::Io => "io error",
        }
    }

    fn from_io(e: &io::Error) -> Self {
        match e.kind() {
            io::ErrorKind::ConnectionRefused => TransportError::ConnectionRefused,
            io::ErrorKind::TimedOut | io::ErrorKind::WouldBlock => TransportError::Timeout,
            io::ErrorKind::ConnectionReset | io::ErrorKind::ConnectionAborted | io::ErrorKind::BrokenPipe => {
                TransportError::ConnectionReset
            }
            _ => TransportError::Io,
        }
    }

    fn from_wire(e: &WireError) -> Self {
        match e {
            WireError::Empty => TransportError::EmptyResponse,
            WireError::Malformed(_) => TransportError::MalformedResponse,
            WireError::Io(io) => Self::from_io(io),
        }
    }
}

impl std::fmt::Display for TransportError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.reason())
    }
}

/// Client TLS configuration with the public web roots plus any extra roots.
/// Certificate validation is never disabled.
pub fn tls_config(extra_roots: &[CertificateDer<'static>]) -> Result<Arc<ClientConfig>, rustls::Error> {
    let mut roots = RootCertStore::empty();
    roots.extend(webpki_roots::TLS_SERVER_ROOTS.iter().cloned());
    for cert in extra_roots {
        roots.add(cert.clone())?;
    }
    Ok(Arc::new(
        ClientConfig::builder()
            .with_root_certificates(roots)
            .with_no_client_auth(),
    ))
}

pub(crate) struct Timeouts {
    pub connect: Duration,
    pub read: Duration,
}

/// One GET exchange, no retries, no redirect following.
pub(crate) fn exchange(
    url: &Url,
    tls: &Arc<ClientConfig>,
    timeouts: &Timeouts,
    user_agent: &str,
    body_limit: usize,
) -> Result<RawResponse, TransportError> {
    let host = url.host_str().ok_or(TransportError::InvalidUrl)?;
    let port = url.port_or_known_default().ok_or(TransportError::InvalidUrl)?;
    let tcp = connect(host, port, timeouts)?;

    let host_header = match url.port() {
        Some(p) => format!("{host}:{p}"),
        None => host.to_string(),
    };
    let mut target = url.path().to_string();
    if let Some(q) = url.query() {
        target.push('?');
        target.push_str(q);
    }
    let request = wire::encode_get(&target, &host_header, user_agent);

    match url.scheme() {
        "http" => {
            let mut tcp = tcp;
            tcp.write_all(&request).map_err(|e| TransportError::from_io(&e))?;
            wire::read_response(&mut tcp, body_limit).map_err(|e| {
                log::debug!("{url}: {e}");
                TransportError::from_wire(&e)
            })
        }
        "https" => {
            let name = ServerName::try_from(host.trim_matches(['[', ']']).to_string())
                .map_err(|_| TransportError::InvalidUrl)?;
            let conn = ClientConnection::new(tls.clone(), name).map_err(|e| {
                log::debug!("{url}: {e}");
                TransportError::TlsHandshake
            })?;
            let mut stream = StreamOwned::new(conn, tcp);
            while stream.conn.is_handshaking() {
                if let Err(e) = stream.conn.complete_io(&mut stream.sock) {
                    log::debug!("{url}: handshake: {e}");
                    return Err(match TransportError::from_io(&e) {
                        TransportError::Timeout => TransportError::Timeout,
                        _ => TransportError::TlsHandshake,
                    });
                }
            }
            stream.write_all(&request).map_err(|e| TransportError::from_io(&e))?;
            stream.flush().map_err(|e| TransportError::from_io(&e))?;
            wire::read_response(&mut stream, body_limit).map_err(|e| {
                log::debug!("{url}: {e}");
                TransportError::from_wire(&e)
            })
        }
        _ => Err(TransportError::InvalidUrl),
    }
}

fn connect(host: &str, port: u16, timeouts: &Timeouts) -> Result<TcpStream, TransportError> {
    let addrs: Vec<SocketAddr> = (host.trim_matches(['[', ']']), port)
        .to_socket_addrs()
        .map_err(|e| {
            log::debug!("resolve {host}: {e}");
            TransportError::Dns
        })?
        .collect();
    if addrs.is_empty() {
        return Err(TransportError::Dns);
    }
    let mut last = TransportError::Io;
    for addr in addrs {
        match TcpStream::connect_timeout(&addr, timeouts.connect) {
            Ok(tcp) => {
                let io = |e: io::Error| TransportError::from_io(&e);
                tcp.set_read_timeout(Some(timeouts.read)).map_err(io)?;
                tcp.set_write_timeout(Some(timeouts.read)).map_err(io)?;
                tcp.set_nodelay(true).map_err(io)?;
                return Ok(tcp);
            }
            Err(e) => last = TransportError::from_io(&e),
        }
    }
    Err(last)
}
