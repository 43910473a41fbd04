//! Container backend speaking the engine's HTTP API over a Unix socket or TCP.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpStream;
use std::os::unix::net::UnixStream;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use serde::Deserialize;
use tracing::{debug, warn};

use super::window::{BuildStatus, LogCapture};
use super::Backend;
use crate::error::{Error, Result};
use crate::generator::BuildSolution;

const DOCKERFILE_NAME: &str = ".buildsmith.Dockerfile";
const DEFAULT_SOCKET: &str = "/var/run/docker.sock";

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Endpoint {
    Unix(PathBuf),
    Tcp(String),
}

impl Endpoint {
    /// Accepts `unix:///path`, `tcp://host:port`, `http://host:port` or a
    /// bare socket path. `None` reads `DOCKER_HOST`, then the default socket.
    pub fn parse(host: Option<&str>) -> Result<Self> {
        let env = std::env::var("DOCKER_HOST").ok();
        let host = host
            .map(str::to_string)
            .or(env)
            .unwrap_or_else(|| format!("unix://{DEFAULT_SOCKET}"));
        if let Some(path) = host.strip_prefix("unix://") {
            return Ok(Endpoint::Unix(PathBuf::from(path)));
        }
        for scheme in ["tcp://", "http://"] {
            if let Some(addr) = host.strip_prefix(scheme) {
                return Ok(Endpoint::Tcp(addr.trim_end_matches('/').to_string()));
            }
        }
        if host.starts_with('/') {
            return Ok(Endpoint::Unix(PathBuf::from(host)));
        }
        Err(Error::Config(format!(
            "unsupported container engine endpoint `{host}`"
        )))
    }
}

trait Stream: Read + Write + Send {
    fn set_timeout(&self, t: Option<Duration>) -> std::io::Result<()>;
}

impl Stream for UnixStream {
    fn set_timeout(&self, t: Option<Duration>) -> std::io::Result<()> {
        self.set_read_timeout(t)?;
        self.set_write_timeout(t)
    }
}

impl Stream for TcpStream {
    fn set_timeout(&self, t: Option<Duration>) -> std::io::Result<()> {
        self.set_read_timeout(t)?;
        self.set_write_timeout(t)
    }
}

struct Response {
    status: u16,
    reader: Box<dyn BufRead + Send>,
}

impl Response {
    fn body_string(mut self) -> String {
        let mut s = String::new();
        let _ = self.reader.read_to_string(&mut s);
        s
    }
}

/// Decodes `Transfer-Encoding: chunked`.
struct Chunked<R> {
    inner: R,
    left: usize,
    done: bool,
}

impl<R: BufRead> Read for Chunked<R> {
    fn read(&mut self, buf: &mut [u8]) -> std::io::Result<usize> {
        if self.done || buf.is_empty() {
            return Ok(0);
        }
        if self.left == 0 {
            let mut line = String::new();
            self.inner.read_line(&mut line)?;
            if line.trim().is_empty() {
                // CRLF after the previous chunk.
                line.clear();
                self.inner.read_line(&mut line)?;
            }
            let size = line.trim().split(';').next().unwrap_or("");
            let size = usize::from_str_radix(size, 16).map_err(|_| {
                std::io::Error::new(std::io::ErrorKind::InvalidData, "bad chunk size")
            })?;
            if size == 0 {
                self.done = true;
                return Ok(0);
            }
            self.left = size;
        }
        let want = buf.len().min(self.left);
        let n = self.inner.read(&mut buf[..want])?;
        if n == 0 {
            self.done = true;
        }
        self.left -= n;
        Ok(n)
    }
}

#[derive(Debug, Clone)]
pub struct DockerBackend {
    pub endpoint: Endpoint,
    /// Keep built images and caches instead of pruning them after success.
    pub keep_images: bool,
}

static BUILD_SEQ: AtomicU64 = AtomicU64::new(0);

#[derive(Deserialize)]
struct BuildMessage {
    #[serde(default)]
    stream: Option<String>,
    #[serde(default)]
    status: Option<String>,
    #[serde(default)]
    error: Option<String>,
}

fn encode_query(s: &str) -> String {
    let mut out = String::new();
    for b in s.bytes() {
        match b {
            b'A'..=b'Z' | b'a'..=b'z' | b'0'..=b'9' | b'-' | b'_' | b'.' | b'~' => {
                out.push(b as char)
            }
            _ => out.push_str(&format!("%{b:02X}")),
        }
    }
    out
}

impl DockerBackend {
    pub fn new(endpoint: Endpoint, keep_images: bool) -> Self {
        Self {
            endpoint,
            keep_images,
        }
    }

    fn connect(&self, timeout: Option<Duration>) -> Result<Box<dyn Stream>> {
        let stream: Box<dyn Stream> =
            match &self.endpoint {
                Endpoint::Unix(p) => Box::new(UnixStream::connect(p).map_err(|e| {
                    Error::BackendUnavailable(format!("cannot connect to {}: {e}", p.display()))
                })?),
                Endpoint::Tcp(a) => Box::new(TcpStream::connect(a).map_err(|e| {
                    Error::BackendUnavailable(format!("cannot connect to {a}: {e}"))
                })?),
            };
        stream.set_timeout(timeout)?;
        Ok(stream)
    }

    fn request(
        &self,
        method: &str,
        target: &str,
        content_type: Option<&str>,
        body: &[u8],
        timeout: Option<Duration>,
    ) -> Result<Response> {
        let mut stream = self.connect(timeout)?;
        let mut head = format!("{method} {target} HTTP/1.1\r\nHost: docker\r\nConnection: close\r\nContent-Length: {}\r\n", body.len());
        if let Some(ct) = content_type {
            head.push_str(&format!("Content-Type: {ct}\r\n"));
        }
        head.push_str("\r\n");
        stream.write_all(head.as_bytes())?;
        stream.write_all(body)?;
        stream.flush()?;

        let mut reader = BufReader::new(stream);
        let mut status_line = String::new();
        reader.read_line(&mut status_line)?;
        let status = status_line
            .split_whitespace()
            .nth(1)
            .and_then(|s| s.parse::<u16>().ok())
            .ok_or_else(|| {
                Error::BackendUnavailable(format!(
                    "malformed HTTP status line `{}`",
                    status_line.trim()
                ))
            })?;
        let mut chunked = false;
        let mut length = None;
        loop {
            let mut line = String::new();
            if reader.read_line(&mut line)? == 0 || line.trim().is_empty() {
                break;
            }
            if let Some((k, v)) = line.split_once(':') {
                let k = k.trim().to_ascii_lowercase();
                let v = v.trim();
                if k == "transfer-encoding" && v.eq_ignore_ascii_case("chunked") {
                    chunked = true;
                } else if k == "content-length" {
                    length = v.parse::<u64>().ok();
                }
            }
        }
        let reader: Box<dyn BufRead + Send> = if chunked {
            Box::new(BufReader::new(Chunked {
                inner: reader,
                left: 0,
                done: false,
            }))
        } else if let Some(n) = length {
            Box::new(BufReader::new(reader.take(n)))
        } else {
            Box::new(reader)
        };
        Ok(Response { status, reader })
    }

    fn context_tar(context_dir: &Path, dockerfile: &str) -> Result<Vec<u8>> {
        let mut builder = tar::Builder::new(Vec::new());
        builder.follow_symlinks(false);
        builder.append_dir_all(".", context_dir)?;
        let mut header = tar::Header::new_gnu();
        header.set_size(dockerfile.len() as u64);
        header.set_mode(0o644);
        header.set_cksum();
        builder.append_data(&mut header, DOCKERFILE_NAME, dockerfile.as_bytes())?;
        Ok(builder.into_inner()?)
    }

    fn prune(&self, tag: &str) {
        let target = format!("/images/{}?force=1", encode_query(tag));
        for (method, path) in [("DELETE", target.as_str()), ("POST", "/build/prune")] {
            match self.request(method, path, None, &[], Some(Duration::from_secs(120))) {
                Ok(r) if r.status < 300 => debug!(method, path, "pruned"),
                Ok(r) => warn!(method, path, status = r.status, "prune request rejected"),
                Err(e) => warn!(method, path, error = %e, "prune request failed"),
            }
        }
    }
}

impl Backend for DockerBackend {
    fn name(&self) -> &'static str {
        "container"
    }

    fn execute(
        &self,
        solution: &BuildSolution,
        context_dir: &Path,
        timeout: Duration,
    ) -> Result<LogCapture> {
        if timeout.is_zero() {
            return Err(Error::InvalidInput(
                "execution timeout must be positive".into(),
            ));
        }
        let start = Instant::now();
        let stamp = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_millis());
        let tag = format!(
            "buildsmith/run-{}-{stamp}-{}:rev{}",
            std::process::id(),
            BUILD_SEQ.fetch_add(1, Ordering::Relaxed),
            solution.revision
        );
        let body = Self::context_tar(context_dir, &solution.dockerfile_text)?;
        let labels = serde_json::json!({"buildsmith": "1"}).to_string();
        let target = format!(
            "/build?t={}&dockerfile={}&rm=1&forcerm=1&labels={}",
            encode_query(&tag),
            encode_query(DOCKERFILE_NAME),
            encode_query(&labels)
        );
        let resp = self.request(
            "POST",
            &target,
            Some("application/x-tar"),
            &body,
            Some(timeout),
        )?;
        let mut lines = Vec::new();
        if resp.status >= 300 {
            let text = resp.body_string();
            let msg = serde_json::from_str::<serde_json::Value>(&text)
                .ok()
                .and_then(|v| {
                    v.get("message")
                        .and_then(|m| m.as_str())
                        .map(str::to_string)
                })
                .unwrap_or(text);
            lines.extend(msg.lines().map(str::to_string));
            return Ok(LogCapture::new(
                lines,
                BuildStatus::Error,
                start.elapsed().as_secs_f64(),
            ));
        }

        let mut status = BuildStatus::Ok;
        let mut pending = String::new();
        let mut reader = resp.reader;
        let mut raw = String::new();
        loop {
            raw.clear();
            match reader.read_line(&mut raw) {
                Ok(0) => break,
                Ok(_) => {}
                Err(e)
                    if matches!(
                        e.kind(),
                        std::io::ErrorKind::WouldBlock | std::io::ErrorKind::TimedOut
                    ) =>
                {
                    status = BuildStatus::Timeout;
                    break;
                }
                Err(e) => {
                    lines.push(format!("connection to the container engine failed: {e}"));
                    status = BuildStatus::Error;
                    break;
                }
            }
            let trimmed = raw.trim();
            if trimmed.is_empty() {
                continue;
            }
            match serde_json::from_str::<BuildMessage>(trimmed) {
                Ok(m) => {
                    if let Some(s) = m.stream {
                        pending.push_str(&s);
                        while let Some(idx) = pending.find('\n') {
                            lines.push(pending[..idx].trim_end_matches('\r').to_string());
                            pending.drain(..=idx);
                        }
                    }
                    if let Some(s) = m.status {
                        lines.push(s);
                    }
                    if let Some(e) = m.error {
                        lines.extend(e.lines().map(str::to_string));
                        status = BuildStatus::Error;
                    }
                }
                Err(_) => lines.push(trimmed.to_string()),
            }
            if start.elapsed() >= timeout {
                status = BuildStatus::Timeout;
                break;
            }
        }
        if !pending.is_empty() {
            lines.push(pending);
        }
        if status == BuildStatus::Timeout {
            lines.push(format!("build timed out after {} s", timeout.as_secs_f64()));
        }
        let mut duration = start.elapsed();
        if status == BuildStatus::Timeout && duration < timeout {
            duration = timeout;
        }
        if status == BuildStatus::Ok && !self.keep_images {
            self.prune(&tag);
        }
        Ok(LogCapture::new(lines, status, duration.as_secs_f64()))
    }
}
