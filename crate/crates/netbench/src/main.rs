// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::Parser;
use voxserve_client::Client;
use voxserve_netbench::{
    decode_reports, default_profiles, emit_report, latency_grid, measure, parse_profiles, synthesize_request, Workload,
};

/// Measure prediction latency through shaped network profiles.
#[derive(Debug, Parser)]
#[command(name = "netbench", version)]
struct Args {
    /// Endpoint base URL.
    #[arg(long)]
    server: String,
    /// JSON list of {name, up_bps, down_bps, rtt_ms}; LAN/DSL/4G when omitted.
    #[arg(long)]
    profiles: Option<PathBuf>,
    /// Row label in the report; defaults to the endpoint's service name.
    #[arg(long)]
    pipeline: Option<String>,
    #[arg(long, default_value_t = 5)]
    reps: usize,
    /// Edge length of the synthetic cubic input volumes.
    #[arg(long, default_value_t = 16)]
    size: usize,
    /// Write the JSON report here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Add rows to an existing report at --out instead of replacing it.
    #[arg(long, requires = "out")]
    append: bool,
}

#[tokio::main]
async fn main() -> anyhow::Result<()> {
    let args = Args::parse();
    if args.reps == 0 || args.size == 0 {
        bail!("--reps and --size must be positive");
    }
    let profiles = match &args.profiles {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            parse_profiles(&text)?
        }
        None => default_profiles(),
    };
    let desc = Client::new().fetch_interface(&args.server).await?;
    let workload = Workload {
        pipeline: args.pipeline.unwrap_or_else(|| desc.service_name().to_string()),
        request: synthesize_request(&desc, args.size, 7),
    };
    let mut reports = measure(&args.server, &workload, &profiles, args.reps).await?;
    if let Some(out) = &args.out {
        if args.append && out.exists() {
            let text = std::fs::read_to_string(out).with_context(|| format!("reading {}", out.display()))?;
            let mut existing = decode_reports(&text).with_context(|| format!("parsing {}", out.display()))?;
            existing.retain(|r| r.pipeline != workload.pipeline);
            existing.append(&mut reports);
            reports = existing;
        }
    }
    let rendered = emit_report(&reports);
    print!("{}", rendered.text);
    println!();
    print!("{}", latency_grid(&reports));
    if let Some(out) = &args.out {
        std::fs::write(out, &rendered.json).with_context(|| format!("writing {}", out.display()))?;
    }
    if reports.iter().any(|r| r.partial) {
        bail!("some profiles have partial results");
    }
    Ok(())
}
