//! Blocking client for the storage service.
//!
//! [`Client`] speaks the binary protocol and implements
//! [`CloudStorage`], so the sharing flows run against a remote service
//! unchanged. [`HttpClient`] reads the JSON statistics endpoint.

use std::net::{TcpStream, ToSocketAddrs};
use std::sync::Mutex;
use std::time::Duration;

use bifrost_core::crypto::FileTag;
use bifrost_core::sharing::CloudStorage;
use bifrost_core::store::{ObjectPayload, StoreStats};
use bifrost_core::wire::{read_message, write_message, WireMessage};
use bifrost_core::{Error, Result};

/// One session with the service. Requests are serialized over the socket.
#[derive(Debug)]
pub struct Client {
    sock: Mutex<TcpStream>,
}

impl Client {
    pub fn connect(addr: impl ToSocketAddrs) -> Result<Self> {
        let sock = TcpStream::connect(addr)?;
        sock.set_nodelay(true)?;
        Ok(Self { sock: Mutex::new(sock) })
    }

    pub fn set_timeout(&self, timeout: Option<Duration>) -> Result<()> {
        let sock = self.sock.lock().expect("client socket lock");
        sock.set_read_timeout(timeout)?;
        sock.set_write_timeout(timeout)?;
        Ok(())
    }

    fn call(&self, request: &WireMessage) -> Result<WireMessage> {
        let mut sock = self.sock.lock().expect("client socket lock");
        write_message(&mut *sock, request)?;
        match read_message(&mut *sock)? {
            Some(WireMessage::Error { code, message }) => Err(WireMessage::into_error(code, message)),
            Some(reply) => Ok(reply),
            None => Err(Error::Io(std::io::ErrorKind::UnexpectedEof.into())),
        }
    }

    /// Uploads and waits for the acknowledgment.
    pub fn upload(&self, object: &ObjectPayload) -> Result<FileTag> {
        match self.call(&WireMessage::Upload(object.clone()))? {
            WireMessage::UploadOk(tag) if tag == *object.tag() => Ok(tag),
            other => Err(unexpected(&other)),
        }
    }

    pub fn download(&self, tag: &FileTag) -> Result<ObjectPayload> {
        match self.call(&WireMessage::Download(tag.clone()))? {
            WireMessage::Object(obj) => Ok(obj),
            other => Err(unexpected(&other)),
        }
    }
}

fn unexpected(reply: &WireMessage) -> Error {
    Error::Malformed(format!("unexpected {:?} reply", reply.kind()))
}

impl CloudStorage for Client {
    fn upload(&self, object: &ObjectPayload) -> Result<()> {
        Client::upload(self, object).map(|_| ())
    }

    fn download(&self, tag: &FileTag) -> Result<ObjectPayload> {
        Client::download(self, tag)
    }
}

/// Client for the JSON endpoints.
#[derive(Debug, Clone)]
pub struct HttpClient {
    base: String,
    http: reqwest::blocking::Client,
}

impl HttpClient {
    /// `base` is like `http://127.0.0.1:7071`; a bare `host:port` also works.
    pub fn new(base: &str) -> Self {
        let base = if base.contains("://") {
            base.trim_end_matches('/').to_string()
        } else {
            format!("http://{base}")
        };
        Self {
            base,
            http: reqwest::blocking::Client::new(),
        }
    }

    pub fn stats(&self) -> Result<StoreStats> {
        self.get("/v1/stats")?.json().map_err(remote)
    }

    pub fn healthy(&self) -> Result<bool> {
        Ok(self.get("/healthz")?.text().map_err(remote)? == "ok")
    }

    fn get(&self, path: &str) -> Result<reqwest::blocking::Response> {
        let resp = self.http.get(format!("{}{path}", self.base)).send().map_err(remote)?;
        if !resp.status().is_success() {
            return Err(Error::Remote {
                code: resp.status().as_u16(),
                message: resp.text().unwrap_or_default(),
            });
        }
        Ok(resp)
    }
}

fn remote(e: reqwest::Error) -> Error {
    Error::Remote {
        code: e.status().map_or(0, |s| s.as_u16()),
        message: e.to_string(),
    }
}
