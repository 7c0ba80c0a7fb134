use std::io::{self, Read, Write};
use std::net::{Shutdown, SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, AtomicU32, AtomicUsize, Ordering};
use std::sync::{Arc, Mutex, RwLock};
use std::thread::{self, JoinHandle};
use std::time::Duration;

use rustls::{ServerConnection, StreamOwned};

use crate::profile::{Bases, FixtureProfile, Scheme};
use crate::tls;

const MAX_REQUEST_HEAD: usize = 16 * 1024;

/// One request as the fixture saw it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RequestRecord {
    pub scheme: Scheme,
    pub method: String,
    pub path: String,
    pub host: Option<String>,
    pub head: String,
}

struct Shared {
    profile: RwLock<FixtureProfile>,
    bases: RwLock<Bases>,
    requests: Mutex<Vec<RequestRecord>>,
    connections: AtomicU32,
    in_flight: AtomicUsize,
    max_in_flight: AtomicUsize,
    stop: AtomicBool,
}

struct Listener {
    scheme: Scheme,
    addr: SocketAddr,
    handle: Option<JoinHandle<()>>,
}

/// A running fixture bound to `127.0.0.1`.
pub struct Fixture {
    shared: Arc<Shared>,
    listeners: Vec<Listener>,
}

impl Fixture {
    pub fn spawn(profile: FixtureProfile) -> io::Result<Fixture> {
        let mut schemes = profile.schemes.clone();
        schemes.sort();
        schemes.dedup();
        if schemes.is_empty() {
            return Err(io::Error::new(io::ErrorKind::InvalidInput, "profile lists no schemes"));
        }
        let shared = Arc::new(Shared {
            profile: RwLock::new(profile),
            bases: RwLock::new(Bases::default()),
            requests: Mutex::new(Vec::new()),
            connections: AtomicU32::new(0),
            in_flight: AtomicUsize::new(0),
            max_in_flight: AtomicUsize::new(0),
            stop: AtomicBool::new(false),
        });

        let mut bound = Vec::new();
        for scheme in schemes {
            let listener = TcpListener::bind(("127.0.0.1", 0))?;
            let addr = listener.local_addr()?;
            bound.push((scheme, listener, addr));
        }
        {
            let mut bases = shared.bases.write().unwrap();
            for (scheme, _, addr) in &bound {
                let base = format!("{}://{}", scheme.as_str(), addr);
                match scheme {
                    Scheme::Http => bases.http = Some(base),
                    Scheme::Https => bases.https = Some(base),
                }
            }
        }
        let listeners = bound
            .into_iter()
            .map(|(scheme, listener, addr)| {
                let shared = shared.clone();
                let handle = thread::spawn(move || accept_loop(listener, scheme, shared));
                Listener {
                    scheme,
                    addr,
                    handle: Some(handle),
                }
            })
            .collect();
        Ok(Fixture { shared, listeners })
    }

    pub fn addr(&self, scheme: Scheme) -> Option<SocketAddr> {
        self.listeners.iter().find(|l| l.scheme == scheme).map(|l| l.addr)
    }

    /// `scheme://127.0.0.1:port`.
    pub fn base_url(&self, scheme: Scheme) -> Option<String> {
        self.addr(scheme).map(|a| format!("{}://{}", scheme.as_str(), a))
    }

    /// Absolute URL for `path` on the listener for `scheme`.
    ///
    /// Panics when the fixture does not listen on `scheme`.
    pub fn url(&self, scheme: Scheme, path: &str) -> String {
        let base = self
            .base_url(scheme)
            .unwrap_or_else(|| panic!("fixture has no {} listener", scheme.as_str()));
        format!("{base}{path}")
    }

    /// Swap the served profile. Listening schemes stay as spawned.
    pub fn mutate(&self, profile: FixtureProfile) {
        *self.shared.profile.write().unwrap() = profile;
        self.shared.connections.store(0, Ordering::SeqCst);
    }

    pub fn requests(&self) -> Vec<RequestRecord> {
        self.shared.requests.lock().unwrap().clone()
    }

    /// Highest number of connections handled at the same time.
    pub fn max_concurrency(&self) -> usize {
        self.shared.max_in_flight.load(Ordering::SeqCst)
    }

    /// Close every listener. Subsequent connects are refused.
    pub fn shutdown(mut self) {
        self.stop();
    }

    fn stop(&mut self) {
        self.shared.stop.store(true, Ordering::SeqCst);
        for listener in &mut self.listeners {
            // Wake the blocking accept so the loop observes the stop flag.
            let _ = TcpStream::connect_timeout(&listener.addr, Duration::from_millis(200));
            if let Some(handle) = listener.handle.take() {
                let _ = handle.join();
            }
        }
    }
}

impl Drop for Fixture {
    fn drop(&mut self) {
        self.stop();
    }
}

fn accept_loop(listener: TcpListener, scheme: Scheme, shared: Arc<Shared>) {
    for stream in listener.incoming() {
        if shared.stop.load(Ordering::SeqCst) {
            break;
        }
        let Ok(stream) = stream else { continue };
        let shared = shared.clone();
        thread::spawn(move || {
            let now = shared.in_flight.fetch_add(1, Ordering::SeqCst) + 1;
            shared.max_in_flight.fetch_max(now, Ordering::SeqCst);
            let _ = handle_connection(stream, scheme, &shared);
            shared.in_flight.fetch_sub(1, Ordering::SeqCst);
        });
    }
}

fn handle_connection(stream: TcpStream, scheme: Scheme, shared: &Shared) -> io::Result<()> {
    stream.set_read_timeout(Some(Duration::from_secs(5)))?;
    stream.set_write_timeout(Some(Duration::from_secs(5)))?;
    match scheme {
        Scheme::Http => serve(stream, scheme, shared, |s| s.shutdown(Shutdown::Both)),
        Scheme::Https => {
            let conn = ServerConnection::new(tls::server_config()).map_err(io::Error::other)?;
            let tls_stream = StreamOwned::new(conn, stream);
            serve(tls_stream, scheme, shared, |s| {
                s.conn.send_close_notify();
                s.flush()?;
                s.sock.shutdown(Shutdown::Both)
            })
        }
    }
}

fn serve<S: Read + Write>(
    mut stream: S,
    scheme: Scheme,
    shared: &Shared,
    close: impl FnOnce(&mut S) -> io::Result<()>,
) -> io::Result<()> {
    let head = read_head(&mut stream)?;
    let record = parse_request(&head, scheme);
    let path = record.path.clone();
    shared.requests.lock().unwrap().push(record);

    let (bytes, delay, drop_it) = {
        let profile = shared.profile.read().unwrap();
        let n = shared.connections.fetch_add(1, Ordering::SeqCst);
        let routes = profile.effective_routes();
        let bare = path.split('?').next().unwrap_or(&path);
        let spec = routes
            .get(&path)
            .or_else(|| routes.get(bare))
            .unwrap_or(&profile.fallback);
        let bases = shared.bases.read().unwrap();
        (spec.render(&bases), profile.delay_ms, n < profile.fail_first)
    };
    if drop_it {
        return close(&mut stream);
    }
    if delay > 0 {
        thread::sleep(Duration::from_millis(delay));
    }
    stream.write_all(&bytes)?;
    stream.flush()?;
    close(&mut stream)
}

fn read_head<S: Read>(stream: &mut S) -> io::Result<Vec<u8>> {
    let mut head = Vec::new();
    let mut buf = [0u8; 1024];
    loop {
        let n = stream.read(&mut buf)?;
        if n == 0 {
            break;
        }
        head.extend_from_slice(&buf[..n]);
        if head.windows(4).any(|w| w == b"\r\n\r\n") || head.len() > MAX_REQUEST_HEAD {
            break;
        }
    }
    Ok(head)
}

fn parse_request(head: &[u8], scheme: Scheme) -> RequestRecord {
    let text = String::from_utf8_lossy(head).into_owned();
    let mut lines = text.split("\r\n");
    let mut parts = lines.next().unwrap_or_default().split(' ');
    let method = parts.next().unwrap_or_default().to_string();
    let path = parts.next().unwrap_or("/").to_string();
    let host = lines
        .filter_map(|l| l.split_once(':'))
        .find(|(n, _)| n.trim().eq_ignore_ascii_case("host"))
        .map(|(_, v)| v.trim().to_string());
    RequestRecord {
        scheme,
        method,
        path,
        host,
        head: text,
    }
}
