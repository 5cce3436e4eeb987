// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{bail, Context};
use clap::Parser;
use voxserve_registry::{serve, KeyTable, Registry, SystemClock, DEFAULT_TTL_S};

/// Announcement and discovery service.
#[derive(Debug, Parser)]
#[command(name = "voxserve-registry", version)]
struct Args {
    #[arg(long, default_value = "127.0.0.1:8700")]
    bind: String,
    /// File of `key<TAB>owner` lines.
    #[arg(long)]
    key_file: PathBuf,
    /// Seconds a record stays discoverable after its latest announcement.
    #[arg(long, default_value_t = DEFAULT_TTL_S)]
    ttl: u64,
    /// Snapshot restored at startup and rewritten after each announcement.
    #[arg(long)]
    state_file: Option<PathBuf>,
}

#[tokio::main]
async fn main() -> anyhow::Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()))
        .init();
    let args = Args::parse();
    if args.ttl == 0 {
        bail!("--ttl must be positive");
    }
    let keys = KeyTable::load(&args.key_file).with_context(|| format!("loading {}", args.key_file.display()))?;
    if keys.is_empty() {
        tracing::warn!("key file lists no keys; every announcement will be rejected");
    }
    let mut registry = Registry::new(keys, args.ttl, SystemClock);
    if let Some(path) = args.state_file {
        registry = registry.with_state_file(path);
    }
    let listener = tokio::net::TcpListener::bind(&args.bind).await.with_context(|| format!("binding {}", args.bind))?;
    tracing::info!(addr = %listener.local_addr()?, ttl_s = args.ttl, "registry listening");
    serve(listener, Arc::new(registry)).await?;
    Ok(())
}
