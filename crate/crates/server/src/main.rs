// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use anyhow::{bail, Context};
use clap::Parser;
use tokio::net::TcpListener;
use voxserve_core::pipeline::{builtin_pipeline_with, Predictor, SimulatedCompute, BUILTIN_NAMES};
use voxserve_core::protocol::AnnounceMessage;
use voxserve_server::{spawn, AnnounceConfig, EndpointConfig, DEFAULT_MAX_REQUEST_BYTES};

/// Serve one built-in pipeline over HTTP.
#[derive(Debug, Parser)]
#[command(name = "voxserve-server", version)]
struct Args {
    #[arg(long, default_value = "127.0.0.1:8600")]
    bind: String,
    /// Catalog name: echo, threshold_segmenter or multi_modal_fusion.
    #[arg(long, default_value = "threshold_segmenter")]
    pipeline: String,
    #[arg(long, default_value_t = DEFAULT_MAX_REQUEST_BYTES)]
    max_bytes: usize,
    /// Per-request timeout in seconds.
    #[arg(long, default_value_t = 300)]
    timeout: u64,
    /// Registry base URL; announcing is disabled without it.
    #[arg(long, requires = "api_key")]
    registry_url: Option<String>,
    #[arg(long, env = "VOXSERVE_API_KEY", hide_env_values = true)]
    api_key: Option<String>,
    /// Seconds between announcements.
    #[arg(long, default_value_t = 600)]
    announce_period: u64,
    /// URL clients should use to reach this endpoint; defaults to the bind address.
    #[arg(long)]
    public_url: Option<String>,
    /// Service name announced to the registry; defaults to the pipeline name.
    #[arg(long)]
    name: Option<String>,
    #[arg(long, default_value = "")]
    description: String,
    #[arg(long, default_value = "")]
    modality: String,
    #[arg(long, default_value = "")]
    anatomy: String,
    #[arg(long, default_value = "")]
    task: String,
    /// Simulated fixed inference cost in milliseconds.
    #[arg(long, default_value_t = 0)]
    compute_ms: u64,
    /// Simulated inference cost per million input voxels, in milliseconds.
    #[arg(long, default_value_t = 0)]
    compute_per_mvox_ms: u64,
    /// Directory served under /console.
    #[arg(long)]
    console_dir: Option<PathBuf>,
}

#[tokio::main]
async fn main() -> anyhow::Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()))
        .init();
    let args = Args::parse();

    let fixed = Duration::from_millis(args.compute_ms);
    let per_mvox = Duration::from_millis(args.compute_per_mvox_ms);
    let simulate = !fixed.is_zero() || !per_mvox.is_zero();
    let pipeline = builtin_pipeline_with(&args.pipeline, |p| {
        if simulate {
            Arc::new(SimulatedCompute::new(p, fixed, per_mvox)) as Arc<dyn Predictor>
        } else {
            p
        }
    })
    .with_context(|| format!("unknown pipeline {:?}; available: {}", args.pipeline, BUILTIN_NAMES.join(", ")))?;
    if args.max_bytes == 0 || args.timeout == 0 {
        bail!("--max-bytes and --timeout must be positive");
    }

    let listener = TcpListener::bind(&args.bind).await.with_context(|| format!("binding {}", args.bind))?;
    let addr = listener.local_addr()?;
    let announce = match (args.registry_url, args.api_key) {
        (Some(registry_url), Some(api_key)) => {
            if args.announce_period == 0 {
                bail!("--announce-period must be positive");
            }
            let message = AnnounceMessage {
                api_key,
                prediction_url: args.public_url.unwrap_or_else(|| format!("http://{addr}")),
                name: args.name.unwrap_or_else(|| args.pipeline.clone()),
                description: args.description,
                modality: args.modality,
                anatomy: args.anatomy,
                task: args.task,
            };
            message.check().context("announce metadata")?;
            let mut cfg = AnnounceConfig::new(registry_url, message);
            cfg.period = Duration::from_secs(args.announce_period);
            Some(cfg)
        }
        _ => None,
    };

    let config = EndpointConfig {
        max_request_bytes: args.max_bytes,
        request_timeout: Duration::from_secs(args.timeout),
        announce,
        console_dir: args.console_dir,
    };
    let endpoint = spawn(listener, pipeline, config)?;
    tracing::info!(url = %endpoint.url(), pipeline = %args.pipeline, "serving");
    endpoint.join().await?;
    Ok(())
}
