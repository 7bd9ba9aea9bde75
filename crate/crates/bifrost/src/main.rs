use std::fs;
use std::io::Write;
use std::net::SocketAddr;
use std::path::PathBuf;

use anyhow::{Context, Result};
use bifrost_client::{Client, HttpClient};
use bifrost_core::bench::{run_sweep, write_csv, SweepConfig};
use bifrost_core::chunk::ChunkingParams;
use bifrost_core::crypto::{CounterNonces, KeyMaterial, MacKind, Padding};
use bifrost_core::sharing::{receiver_fetch, sender_store, SenderConfig, ShareToken};
use bifrost_core::store::StoreConfig;
use bifrost_service::{Server, ServiceConfig};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bifrost", version, about = "Share files through a deduplicating untrusted store")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the storage service.
    Serve {
        /// Binary protocol listener.
        #[arg(long, default_value = "127.0.0.1:7070")]
        listen: SocketAddr,
        /// HTTP/JSON listener.
        #[arg(long)]
        http: Option<SocketAddr>,
        /// Store directory; in-memory when absent.
        #[arg(long, env = "BIFROST_STORE_DIR")]
        store_dir: Option<PathBuf>,
        #[arg(long, default_value_t = 8)]
        t_max: u32,
        #[arg(long, default_value_t = 32)]
        pointer_bits: u32,
    },
    /// Upload a file and write its share token.
    Put {
        file: PathBuf,
        #[arg(long = "ndel", default_value_t = 12)]
        n_del: u32,
        #[arg(long)]
        server: String,
        #[arg(long)]
        token_out: PathBuf,
        #[arg(long, default_value_t = 2048)]
        chunk_bits: u32,
        #[arg(long, default_value_t = 8)]
        symbol_bits: u8,
        #[arg(long, default_value_t = 256)]
        mac_bits: u32,
        #[arg(long, default_value_t = 128)]
        enc_bits: u32,
        /// Encrypt deviations without padding them to 128-bit blocks.
        #[arg(long)]
        no_padding: bool,
    },
    /// Fetch and verify a shared file.
    Get {
        #[arg(long)]
        token: PathBuf,
        #[arg(long)]
        server: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a parameter sweep and write CSV.
    Sweep {
        /// TOML config; built-in defaults when absent.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print store statistics from the HTTP endpoint.
    Stats {
        #[arg(long)]
        server: String,
    },
}

fn main() -> Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
        )
        .with_writer(std::io::stderr)
        .init();

    match Cli::parse().command {
        Command::Serve {
            listen,
            http,
            store_dir,
            t_max,
            pointer_bits,
        } => {
            if store_dir.is_none() {
                tracing::warn!("no --store-dir or BIFROST_STORE_DIR; data lives in memory only");
            }
            let config = ServiceConfig {
                listen,
                http,
                store_dir,
                store: StoreConfig {
                    t_max,
                    pointer_bits,
                    base_geometry: None,
                },
            };
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(async {
                let server = Server::bind(&config).await?;
                match server.http_addr() {
                    Some(h) => println!("listening tcp={} http={h}", server.tcp_addr()),
                    None => println!("listening tcp={}", server.tcp_addr()),
                }
                std::io::stdout().flush()?;
                server
                    .run(async {
                        let _ = tokio::signal::ctrl_c().await;
                    })
                    .await?;
                anyhow::Ok(())
            })?;
        }
        Command::Put {
            file,
            n_del,
            server,
            token_out,
            chunk_bits,
            symbol_bits,
            mac_bits,
            enc_bits,
            no_padding,
        } => {
            let data = fs::read(&file).with_context(|| format!("reading {}", file.display()))?;
            let config = SenderConfig {
                params: ChunkingParams::new(chunk_bits, symbol_bits)?,
                n_del,
                padding: if no_padding { Padding::None } else { Padding::Block128 },
                master_seed: None,
            };
            let keys = KeyMaterial::generate(&mut rand::rngs::OsRng, MacKind::from_bits(mac_bits)?, enc_bits)?;
            let client = Client::connect(server.as_str()).with_context(|| format!("connecting to {server}"))?;
            let token = sender_store(&data, &config, &keys, &CounterNonces::new(), &client)?;
            write_secret(&token_out, &token.to_bytes())?;
            println!("{} ({} token bits)", token.tag, token.bit_size());
        }
        Command::Get { token, server, out } => {
            let bytes = fs::read(&token).with_context(|| format!("reading {}", token.display()))?;
            let token = ShareToken::from_bytes(&bytes).context("parsing token")?;
            let client = Client::connect(server.as_str()).with_context(|| format!("connecting to {server}"))?;
            let data = receiver_fetch(&token, &client)?;
            fs::write(&out, &data).with_context(|| format!("writing {}", out.display()))?;
            println!("{} bytes verified", data.len());
        }
        Command::Sweep { config, out } => {
            let config = match config {
                Some(p) => SweepConfig::load(&p).with_context(|| format!("loading {}", p.display()))?,
                None => SweepConfig::default(),
            };
            let rows = run_sweep(&config)?;
            let mut buf = Vec::new();
            write_csv(&config, &rows, &mut buf)?;
            fs::write(&out, buf).with_context(|| format!("writing {}", out.display()))?;
            println!("{} rows", rows.len());
        }
        Command::Stats { server } => {
            let stats = HttpClient::new(&server).stats()?;
            println!("{}", serde_json::to_string_pretty(&stats)?);
        }
    }
    Ok(())
}

/// Tokens carry keys; keep them owner-readable only.
fn write_secret(path: &std::path::Path, bytes: &[u8]) -> Result<()> {
    let mut opts = fs::OpenOptions::new();
    opts.write(true).create(true).truncate(true);
    #[cfg(unix)]
    {
        use std::os::unix::fs::OpenOptionsExt;
        opts.mode(0o600);
    }
    let mut f = opts.open(path).with_context(|| format!("writing {}", path.display()))?;
    f.write_all(bytes)?;
    Ok(())
}
