use std::io;
use std::sync::Arc;

use bifrost_core::store::GdStore;
use bifrost_core::wire::{error_code, WireMessage, MAX_FRAME_LEN};
use tokio::io::{AsyncReadExt, AsyncWriteExt};
use tokio::net::{TcpListener, TcpStream};
use tokio::sync::watch;

/// Accepts sessions until `stop` turns true. Each session runs on its own
/// task; store calls run on the blocking pool.
pub async fn serve_tcp(listener: TcpListener, store: Arc<GdStore>, mut stop: watch::Receiver<bool>) {
    loop {
        tokio::select! {
            _ = stop.wait_for(|s| *s) => return,
            accepted = listener.accept() => match accepted {
                Ok((sock, peer)) => {
                    let store = Arc::clone(&store);
                    tokio::spawn(async move {
                        if let Err(e) = session(sock, store).await {
                            tracing::warn!(%peer, "session ended: {e}");
                        }
                    });
                }
                Err(e) => tracing::warn!("accept failed: {e}"),
            },
        }
    }
}

async fn session(mut sock: TcpStream, store: Arc<GdStore>) -> io::Result<()> {
    sock.set_nodelay(true)?;
    loop {
        let mut len = [0u8; 4];
        match sock.read_exact(&mut len).await {
            Ok(_) => {}
            Err(e) if e.kind() == io::ErrorKind::UnexpectedEof => return Ok(()),
            Err(e) => return Err(e),
        }
        let len = u32::from_le_bytes(len);
        if len > MAX_FRAME_LEN {
            let reply = malformed(format!("frame of {len} bytes exceeds limit"));
            return sock.write_all(&reply.encode()).await;
        }
        let mut body = vec![0u8; len as usize];
        sock.read_exact(&mut body).await?;
        let msg = match WireMessage::decode_body(&body) {
            Ok(m) => m,
            Err(e) => return sock.write_all(&malformed(e.to_string()).encode()).await,
        };
        let reply = match msg {
            WireMessage::Upload(obj) => {
                blocking(&store, move |s| {
                    s.put_object(&obj).map(|_| WireMessage::UploadOk(obj.manifest.file_tag))
                })
                .await
            }
            WireMessage::Download(tag) => blocking(&store, move |s| s.get_object(&tag).map(WireMessage::Object)).await,
            other => {
                let reply = malformed(format!("{:?} is not a request", other.kind()));
                return sock.write_all(&reply.encode()).await;
            }
        };
        sock.write_all(&reply.encode()).await?;
    }
}

fn malformed(message: String) -> WireMessage {
    WireMessage::Error {
        code: error_code::MALFORMED,
        message,
    }
}

async fn blocking<F>(store: &Arc<GdStore>, op: F) -> WireMessage
where
    F: FnOnce(&GdStore) -> bifrost_core::Result<WireMessage> + Send + 'static,
{
    let store = Arc::clone(store);
    match tokio::task::spawn_blocking(move || op(&store)).await {
        Ok(Ok(reply)) => reply,
        Ok(Err(e)) => {
            tracing::debug!("request failed: {e}");
            WireMessage::from_error(&e)
        }
        Err(e) => {
            tracing::error!("store task panicked: {e}");
            WireMessage::Error {
                code: error_code::INTERNAL,
                message: "internal error".into(),
            }
        }
    }
}
