//! The cloud side as a network service.
//!
//! Two listeners share one [`GdStore`]: the binary framed protocol from
//! [`bifrost_core::wire`] on a TCP port, and an HTTP/JSON API for the same
//! operations plus store statistics.

mod http;
mod tcp;

use std::future::Future;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use bifrost_core::store::{GdStore, StoreConfig};
use tokio::net::TcpListener;

pub use http::{router, ManifestJson, ObjectJson, DeviationJson, RecordJson, PutJson};
pub use tcp::serve_tcp;

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("store: {0}")]
    Store(#[from] bifrost_core::Error),
    #[error("binding {addr}: {source}")]
    Bind {
        addr: SocketAddr,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub listen: SocketAddr,
    /// HTTP/JSON listener; `None` disables it.
    pub http: Option<SocketAddr>,
    /// `None` keeps the store in memory.
    pub store_dir: Option<PathBuf>,
    pub store: StoreConfig,
}

/// Bound listeners plus the store, ready to run.
pub struct Server {
    store: Arc<GdStore>,
    tcp: TcpListener,
    http: Option<TcpListener>,
}

impl Server {
    pub async fn bind(config: &ServiceConfig) -> Result<Self, ServiceError> {
        let store = match &config.store_dir {
            Some(dir) => GdStore::open(dir, config.store)?,
            None => GdStore::ephemeral(config.store),
        };
        let bind = |addr: SocketAddr| async move {
            TcpListener::bind(addr)
                .await
                .map_err(|source| ServiceError::Bind { addr, source })
        };
        let tcp = bind(config.listen).await?;
        let http = match config.http {
            Some(a) => Some(bind(a).await?),
            None => None,
        };
        Ok(Self {
            store: Arc::new(store),
            tcp,
            http,
        })
    }

    pub fn tcp_addr(&self) -> SocketAddr {
        self.tcp.local_addr().expect("bound listener has an address")
    }

    pub fn http_addr(&self) -> Option<SocketAddr> {
        self.http.as_ref().map(|l| l.local_addr().expect("bound listener has an address"))
    }

    pub fn store(&self) -> Arc<GdStore> {
        Arc::clone(&self.store)
    }

    /// Serves until `shutdown` resolves.
    pub async fn run(self, shutdown: impl Future<Output = ()> + Send + 'static) -> Result<(), ServiceError> {
        let (stop_tx, stop_rx) = tokio::sync::watch::channel(false);
        let tcp = tokio::spawn(serve_tcp(self.tcp, Arc::clone(&self.store), stop_rx.clone()));
        let http = self.http.map(|listener| {
            let app = router(Arc::clone(&self.store));
            let mut stop = stop_rx.clone();
            tokio::spawn(async move {
                axum::serve(listener, app)
                    .with_graceful_shutdown(async move {
                        let _ = stop.wait_for(|s| *s).await;
                    })
                    .await
            })
        });
        shutdown.await;
        let _ = stop_tx.send(true);
        let _ = tcp.await;
        if let Some(h) = http {
            if let Ok(Err(e)) = h.await {
                return Err(e.into());
            }
        }
        Ok(())
    }
}

/// A server on its own runtime thread, stopped on drop. Meant for tests and
/// embedding in synchronous programs.
pub struct BackgroundServer {
    tcp_addr: SocketAddr,
    http_addr: Option<SocketAddr>,
    store: Arc<GdStore>,
    stop: Option<tokio::sync::oneshot::Sender<()>>,
    thread: Option<std::thread::JoinHandle<()>>,
}

impl BackgroundServer {
    pub fn start(config: ServiceConfig) -> Result<Self, ServiceError> {
        let runtime = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
        let server = runtime.block_on(Server::bind(&config))?;
        let (tcp_addr, http_addr, store) = (server.tcp_addr(), server.http_addr(), server.store());
        let (stop, stopped) = tokio::sync::oneshot::channel::<()>();
        let thread = std::thread::spawn(move || {
            if let Err(e) = runtime.block_on(server.run(async {
                let _ = stopped.await;
            })) {
                tracing::error!("service stopped: {e}");
            }
        });
        Ok(Self {
            tcp_addr,
            http_addr,
            store,
            stop: Some(stop),
            thread: Some(thread),
        })
    }

    pub fn tcp_addr(&self) -> SocketAddr {
        self.tcp_addr
    }

    pub fn http_addr(&self) -> Option<SocketAddr> {
        self.http_addr
    }

    pub fn store(&self) -> &GdStore {
        &self.store
    }
}

impl Drop for BackgroundServer {
    fn drop(&mut self) {
        if let Some(stop) = self.stop.take() {
            let _ = stop.send(());
        }
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}
