//! Line-delimited JSON messages exchanged with an embedding provider, and a
//! server loop that exposes any [`EmbeddingProvider`] over that protocol.
//!
//! ```text
//! -> {"op":"hello"}
//! <- {"roles":{"joint-text":512,"joint-image":512},"name":"clip"}
//! -> {"id":1,"op":"embed_texts","role":"joint-text","texts":["a cat"]}
//! <- {"id":1,"embeddings":[[0.01, ...]]}
//! -> {"id":2,"op":"embed_image","role":"joint-image","path":"/tmp/x.png"}
//! <- {"id":2,"error":{"code":"io","message":"no such file"}}
//! ```
//!
//! Every message is one UTF-8 JSON document terminated by a line feed.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use base64::Engine;
use serde::{Deserialize, Serialize};

use super::{EmbeddingProvider, ImageRef, ProviderError, Role};

pub mod codes {
    pub const BAD_OP: &str = "bad_op";
    pub const BAD_REQUEST: &str = "bad_request";
    pub const INVALID_REQUEST: &str = "invalid_request";
    pub const UNKNOWN_ROLE: &str = "unknown_role";
    pub const IO: &str = "io";
    pub const DECODE: &str = "decode";
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Request {
    Hello,
    EmbedTexts {
        id: u64,
        role: Role,
        texts: Vec<String>,
    },
    EmbedImage {
        id: u64,
        role: Role,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        path: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        image_b64: Option<String>,
    },
}

impl Request {
    pub fn image(id: u64, image: &ImageRef) -> Self {
        match image {
            ImageRef::Path(p) => Request::EmbedImage {
                id,
                role: Role::JointImage,
                path: Some(p.to_string_lossy().into_owned()),
                image_b64: None,
            },
            ImageRef::Png(bytes) => Request::EmbedImage {
                id,
                role: Role::JointImage,
                path: None,
                image_b64: Some(base64::engine::general_purpose::STANDARD.encode(bytes)),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HelloReply {
    pub roles: BTreeMap<Role, usize>,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireError {
    pub code: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Response {
    pub id: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embeddings: Option<Vec<Vec<f32>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<WireError>,
}

impl Response {
    fn ok(id: u64, embeddings: Vec<Vec<f32>>) -> Self {
        Self {
            id: Some(id),
            embeddings: Some(embeddings),
            error: None,
        }
    }

    fn err(id: Option<u64>, code: &str, message: impl Into<String>) -> Self {
        Self {
            id,
            embeddings: None,
            error: Some(WireError {
                code: code.to_string(),
                message: message.into(),
            }),
        }
    }
}

const KNOWN_OPS: [&str; 3] = ["hello", "embed_texts", "embed_image"];

/// Answers one request line. Returns the JSON line to send back.
pub fn handle_line<P: EmbeddingProvider + ?Sized>(provider: &P, line: &str) -> String {
    let value: serde_json::Value = match serde_json::from_str(line) {
        Ok(v) => v,
        Err(e) => return to_line(&Response::err(None, codes::BAD_REQUEST, e.to_string())),
    };
    let id = value.get("id").and_then(|v| v.as_u64());
    let op = value.get("op").and_then(|v| v.as_str()).unwrap_or("");
    if !KNOWN_OPS.contains(&op) {
        return to_line(&Response::err(
            id,
            codes::BAD_OP,
            format!("unknown op {op:?}"),
        ));
    }
    let request: Request = match serde_json::from_value(value) {
        Ok(r) => r,
        Err(e) => return to_line(&Response::err(id, codes::BAD_REQUEST, e.to_string())),
    };
    let response = match request {
        Request::Hello => {
            return to_line(&HelloReply {
                roles: provider.roles().clone(),
                name: provider.name().to_string(),
            });
        }
        Request::EmbedTexts { id, role, texts } => {
            if texts.is_empty() {
                Response::err(Some(id), codes::INVALID_REQUEST, "texts must not be empty")
            } else {
                respond(id, provider.embed_texts(role, &texts))
            }
        }
        Request::EmbedImage {
            id,
            role,
            path,
            image_b64,
        } => {
            if role != Role::JointImage {
                Response::err(
                    Some(id),
                    codes::UNKNOWN_ROLE,
                    format!("images use role joint-image, got {role}"),
                )
            } else {
                match (path, image_b64) {
                    (Some(p), None) => {
                        respond(id, provider.embed_images(&[ImageRef::Path(p.into())]))
                    }
                    (None, Some(b)) => match base64::engine::general_purpose::STANDARD.decode(b) {
                        Ok(bytes) => respond(id, provider.embed_images(&[ImageRef::Png(bytes)])),
                        Err(e) => Response::err(Some(id), codes::DECODE, e.to_string()),
                    },
                    _ => Response::err(
                        Some(id),
                        codes::BAD_REQUEST,
                        "exactly one of path or image_b64 is required",
                    ),
                }
            }
        }
    };
    to_line(&response)
}

fn respond(id: u64, result: Result<Vec<crate::embedding::Embedding>, ProviderError>) -> Response {
    match result {
        Ok(es) => Response::ok(id, es.into_iter().map(|e| e.into_vec()).collect()),
        Err(e) => Response::err(Some(id), e.code(), e.to_string()),
    }
}

fn to_line<T: Serialize>(msg: &T) -> String {
    serde_json::to_string(msg).expect("protocol messages serialize")
}

/// Serves requests from `reader` until end of input. Blank lines are ignored.
pub fn serve<P, R, W>(provider: &P, reader: R, mut writer: W) -> std::io::Result<()>
where
    P: EmbeddingProvider + ?Sized,
    R: BufRead,
    W: Write,
{
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let reply = handle_line(provider, &line);
        writer.write_all(reply.as_bytes())?;
        writer.write_all(b"\n")?;
        writer.flush()?;
    }
    Ok(())
}
