use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpStream;
use std::process::{Child, Command, Stdio};
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::Mutex;
use std::thread;
use std::time::Duration;

use super::protocol::{HelloReply, Request, Response};
use super::{EmbeddingProvider, ImageRef, ProviderError, Role};
use crate::embedding::{l2_normalize, Embedding};

/// Maximum texts per `embed_texts` request.
pub const DEFAULT_MAX_BATCH: usize = 256;
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(120);

const NORM_TOL: f64 = 1e-3;

/// Where a provider process lives.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Endpoint {
    /// Spawned child speaking the protocol over stdin/stdout.
    Command(Vec<String>),
    /// `HOST:PORT`
    Tcp(String),
}

struct Connection {
    writer: Box<dyn Write + Send>,
    lines: Receiver<std::io::Result<String>>,
    child: Option<Child>,
}

/// Blocking client for the provider protocol. Requests are pipelined: a batch
/// is written in full before responses are collected and matched by id.
pub struct ProviderClient {
    conn: Mutex<Connection>,
    roles: BTreeMap<Role, usize>,
    name: String,
    next_id: AtomicU64,
    timeout: Duration,
    max_batch: usize,
    corrections: AtomicUsize,
}

impl ProviderClient {
    pub fn connect(endpoint: &Endpoint, timeout: Duration) -> Result<Self, ProviderError> {
        let (reader, writer, child): (Box<dyn Read + Send>, Box<dyn Write + Send>, Option<Child>) =
            match endpoint {
                Endpoint::Tcp(addr) => {
                    let stream = TcpStream::connect(addr)
                        .map_err(|e| ProviderError::Transport(format!("{addr}: {e}")))?;
                    stream.set_nodelay(true).ok();
                    let read_half = stream
                        .try_clone()
                        .map_err(|e| ProviderError::Transport(e.to_string()))?;
                    (Box::new(read_half), Box::new(stream), None)
                }
                Endpoint::Command(argv) => {
                    let (prog, args) = argv
                        .split_first()
                        .ok_or_else(|| ProviderError::Transport("empty provider command".into()))?;
                    let mut child = Command::new(prog)
                        .args(args)
                        .stdin(Stdio::piped())
                        .stdout(Stdio::piped())
                        .stderr(Stdio::inherit())
                        .spawn()
                        .map_err(|e| {
                            ProviderError::Transport(format!("cannot spawn {prog}: {e}"))
                        })?;
                    let stdin = child.stdin.take().expect("piped stdin");
                    let stdout = child.stdout.take().expect("piped stdout");
                    (Box::new(stdout), Box::new(stdin), Some(child))
                }
            };
        Self::handshake(reader, writer, child, timeout)
    }

    /// Runs the protocol over an arbitrary byte stream pair.
    pub fn from_streams<R, W>(
        reader: R,
        writer: W,
        timeout: Duration,
    ) -> Result<Self, ProviderError>
    where
        R: Read + Send + 'static,
        W: Write + Send + 'static,
    {
        Self::handshake(Box::new(reader), Box::new(writer), None, timeout)
    }

    fn handshake(
        reader: Box<dyn Read + Send>,
        writer: Box<dyn Write + Send>,
        child: Option<Child>,
        timeout: Duration,
    ) -> Result<Self, ProviderError> {
        let (tx, rx) = mpsc::channel();
        thread::Builder::new()
            .name("provider-reader".into())
            .spawn(move || {
                for line in BufReader::new(reader).lines() {
                    let stop = line.is_err();
                    if tx.send(line).is_err() || stop {
                        break;
                    }
                }
            })
            .map_err(|e| ProviderError::Transport(e.to_string()))?;
        let mut conn = Connection {
            writer,
            lines: rx,
            child,
        };
        send(&mut conn, &Request::Hello)?;
        let line = recv_line(&conn, timeout)?;
        let hello: HelloReply = serde_json::from_str(&line)
            .map_err(|e| ProviderError::Protocol(format!("handshake: {e}")))?;
        if hello.roles.values().any(|d| *d == 0) {
            return Err(ProviderError::Protocol(
                "handshake reported a zero dimension".into(),
            ));
        }
        Ok(Self {
            conn: Mutex::new(conn),
            roles: hello.roles,
            name: hello.name,
            next_id: AtomicU64::new(1),
            timeout,
            max_batch: DEFAULT_MAX_BATCH,
            corrections: AtomicUsize::new(0),
        })
    }

    pub fn with_max_batch(mut self, n: usize) -> Self {
        self.max_batch = n.max(1);
        self
    }

    /// Number of returned embeddings that had to be renormalized.
    pub fn norm_corrections(&self) -> usize {
        self.corrections.load(Ordering::Relaxed)
    }

    fn exchange(
        &self,
        role: Role,
        requests: Vec<Request>,
    ) -> Result<Vec<Vec<Vec<f32>>>, ProviderError> {
        let mut conn = self.conn.lock().unwrap_or_else(|p| p.into_inner());
        let ids: Vec<u64> = requests.iter().map(request_id).collect();
        for r in &requests {
            send_no_flush(&mut conn, r)?;
        }
        conn.writer
            .flush()
            .map_err(|e| ProviderError::Transport(e.to_string()))?;

        let mut pending: HashMap<u64, Option<Response>> =
            ids.iter().map(|id| (*id, None)).collect();
        let mut outstanding = ids.len();
        while outstanding > 0 {
            let line = recv_line(&conn, self.timeout)?;
            let resp: Response =
                serde_json::from_str(&line).map_err(|e| ProviderError::Protocol(e.to_string()))?;
            match resp.id.and_then(|id| pending.get_mut(&id)) {
                Some(slot @ None) => {
                    *slot = Some(resp);
                    outstanding -= 1;
                }
                Some(Some(_)) => {
                    return Err(ProviderError::Protocol("duplicate response id".into()))
                }
                None => {
                    if let Some(err) = resp.error {
                        if resp.id.is_none() {
                            return Err(ProviderError::Remote {
                                code: err.code,
                                message: err.message,
                            });
                        }
                    }
                    log::debug!("dropping response for unknown id {:?}", resp.id);
                }
            }
        }
        drop(conn);

        let expected = self
            .roles
            .get(&role)
            .copied()
            .ok_or(ProviderError::RoleUnavailable(role))?;
        ids.iter()
            .map(|id| {
                let resp = pending.remove(id).flatten().expect("all ids answered");
                if let Some(err) = resp.error {
                    return Err(ProviderError::Remote {
                        code: err.code,
                        message: err.message,
                    });
                }
                let rows = resp.embeddings.ok_or_else(|| {
                    ProviderError::Protocol("response without embeddings or error".into())
                })?;
                for row in &rows {
                    if row.len() != expected {
                        return Err(ProviderError::DimDrift {
                            role,
                            expected,
                            actual: row.len(),
                        });
                    }
                }
                Ok(rows)
            })
            .collect()
    }

    fn to_embedding(&self, row: Vec<f32>) -> Result<Embedding, ProviderError> {
        let e = Embedding::new(row).map_err(|e| ProviderError::Protocol(e.to_string()))?;
        if e.is_unit(NORM_TOL) {
            return Ok(e);
        }
        self.corrections.fetch_add(1, Ordering::Relaxed);
        l2_normalize(&e).map_err(|e| ProviderError::Protocol(e.to_string()))
    }

    fn fresh_id(&self) -> u64 {
        self.next_id.fetch_add(1, Ordering::Relaxed)
    }
}

impl EmbeddingProvider for ProviderClient {
    fn name(&self) -> &str {
        &self.name
    }

    fn roles(&self) -> &BTreeMap<Role, usize> {
        &self.roles
    }

    fn embed_texts(&self, role: Role, texts: &[String]) -> Result<Vec<Embedding>, ProviderError> {
        if texts.is_empty() {
            return Err(ProviderError::InvalidRequest(
                "texts must not be empty".into(),
            ));
        }
        if !self.roles.contains_key(&role) {
            return Err(ProviderError::RoleUnavailable(role));
        }
        let requests = texts
            .chunks(self.max_batch)
            .map(|chunk| Request::EmbedTexts {
                id: self.fresh_id(),
                role,
                texts: chunk.to_vec(),
            })
            .collect();
        let mut out = Vec::with_capacity(texts.len());
        for (rows, chunk) in self
            .exchange(role, requests)?
            .into_iter()
            .zip(texts.chunks(self.max_batch))
        {
            if rows.len() != chunk.len() {
                return Err(ProviderError::Protocol(format!(
                    "asked for {} embeddings, got {}",
                    chunk.len(),
                    rows.len()
                )));
            }
            for row in rows {
                out.push(self.to_embedding(row)?);
            }
        }
        Ok(out)
    }

    fn embed_images(&self, images: &[ImageRef]) -> Result<Vec<Embedding>, ProviderError> {
        if images.is_empty() {
            return Err(ProviderError::InvalidRequest("no images given".into()));
        }
        if !self.roles.contains_key(&Role::JointImage) {
            return Err(ProviderError::RoleUnavailable(Role::JointImage));
        }
        let requests = images
            .iter()
            .map(|img| Request::image(self.fresh_id(), img))
            .collect();
        self.exchange(Role::JointImage, requests)?
            .into_iter()
            .map(|mut rows| {
                if rows.len() != 1 {
                    return Err(ProviderError::Protocol(format!(
                        "expected one image embedding, got {}",
                        rows.len()
                    )));
                }
                self.to_embedding(rows.pop().unwrap())
            })
            .collect()
    }
}

impl Drop for ProviderClient {
    fn drop(&mut self) {
        let conn = self.conn.get_mut().unwrap_or_else(|p| p.into_inner());
        if let Some(child) = conn.child.as_mut() {
            let _ = child.kill();
            let _ = child.wait();
        }
    }
}

fn request_id(r: &Request) -> u64 {
    match r {
        Request::Hello => 0,
        Request::EmbedTexts { id, .. } | Request::EmbedImage { id, .. } => *id,
    }
}

fn send_no_flush(conn: &mut Connection, r: &Request) -> Result<(), ProviderError> {
    let mut line = serde_json::to_vec(r).map_err(|e| ProviderError::Protocol(e.to_string()))?;
    line.push(b'\n');
    conn.writer
        .write_all(&line)
        .map_err(|e| ProviderError::Transport(e.to_string()))
}

fn send(conn: &mut Connection, r: &Request) -> Result<(), ProviderError> {
    send_no_flush(conn, r)?;
    conn.writer
        .flush()
        .map_err(|e| ProviderError::Transport(e.to_string()))
}

fn recv_line(conn: &Connection, timeout: Duration) -> Result<String, ProviderError> {
    loop {
        match conn.lines.recv_timeout(timeout) {
            Ok(Ok(line)) if line.trim().is_empty() => continue,
            Ok(Ok(line)) => return Ok(line),
            Ok(Err(e)) => return Err(ProviderError::Transport(e.to_string())),
            Err(RecvTimeoutError::Timeout) => return Err(ProviderError::Timeout(timeout)),
            Err(RecvTimeoutError::Disconnected) => {
                return Err(ProviderError::Transport(
                    "provider closed the connection".into(),
                ))
            }
        }
    }
}
