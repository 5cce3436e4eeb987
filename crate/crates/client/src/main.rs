// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand};
use voxserve_client::{Client, ClientError, UserValue};
use voxserve_core::protocol::{encode_interface, Constraints, FieldData};

#[derive(Debug, Parser)]
#[command(name = "voxserve", version, about = "Discover prediction endpoints and run predictions")]
struct Cli {
    /// Request timeout in seconds.
    #[arg(long, global = true, default_value_t = 600)]
    timeout: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// List live services known to a registry.
    Discover {
        #[arg(long, default_value = "http://127.0.0.1:8700")]
        registry: String,
        /// Print the raw JSON record list.
        #[arg(long)]
        json: bool,
    },
    /// Show the inputs an endpoint accepts.
    Describe {
        url: String,
        #[arg(long)]
        json: bool,
    },
    /// Run a prediction and save every output field.
    Predict {
        url: String,
        /// Non-volume input as name=value; repeatable.
        #[arg(long = "set", value_parser = parse_pair)]
        set: Vec<(String, String)>,
        /// Volume input as name=path/to/file.mha; repeatable.
        #[arg(long = "volume", value_parser = parse_pair)]
        volume: Vec<(String, String)>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

fn parse_pair(s: &str) -> Result<(String, String), String> {
    match s.split_once('=') {
        Some((k, v)) if !k.is_empty() => Ok((k.to_string(), v.to_string())),
        _ => Err(format!("expected name=value, got {s:?}")),
    }
}

fn describe_constraints(c: &Constraints) -> String {
    match c {
        Constraints::Volume { expected_modality } if expected_modality.is_empty() => "any modality".into(),
        Constraints::Volume { expected_modality } => format!("modality {expected_modality}"),
        Constraints::Slider { minimum, maximum, default } => format!("[{minimum}, {maximum}], default {default}"),
        Constraints::Checkbox { default } => format!("default {default}"),
        Constraints::Choice { options, default } => format!("one of {}, default {default}", options.join("|")),
        Constraints::Text { default } => format!("default {default:?}"),
    }
}

async fn run(cli: Cli) -> Result<(), ClientError> {
    let client = Client::with_timeout(Duration::from_secs(cli.timeout));
    match cli.command {
        Command::Discover { registry, json } => {
            let records = client.discover(&registry).await?;
            if json {
                println!("{}", serde_json::to_string_pretty(&records).expect("records serialize"));
                return Ok(());
            }
            for r in &records {
                println!("{}  {}  {}", r.service_id, r.name, r.prediction_url);
                let tags: Vec<&str> = [&r.modality, &r.anatomy, &r.task]
                    .into_iter()
                    .map(String::as_str)
                    .filter(|s| !s.is_empty())
                    .collect();
                if !tags.is_empty() {
                    println!("    {}", tags.join(" / "));
                }
                if !r.description.is_empty() {
                    println!("    {}", r.description);
                }
            }
            eprintln!("{} service(s)", records.len());
        }
        Command::Describe { url, json } => {
            let desc = client.fetch_interface(&url).await?;
            if json {
                println!("{}", encode_interface(&desc));
                return Ok(());
            }
            println!("{}", desc.service_name());
            for e in desc.elements() {
                let req = if e.required { "required" } else { "optional" };
                println!(
                    "  {:<20} {:<14} {:<8} {}  ({})",
                    e.name,
                    e.kind().as_str(),
                    req,
                    e.label,
                    describe_constraints(&e.constraints)
                );
            }
        }
        Command::Predict { url, set, volume, out } => {
            let mut values = BTreeMap::new();
            for (k, v) in set {
                values.insert(k, UserValue::Text(v));
            }
            for (k, v) in volume {
                values.insert(k, UserValue::File(v.into()));
            }
            let saved = client.predict_to_dir(&url, &values, &out).await?;
            for (field, path) in saved.response.fields.iter().zip(&saved.files) {
                let summary = match &field.data {
                    FieldData::ScalarMeasure { value, unit } => format!(" = {value} {unit}"),
                    FieldData::PlainText(s) if s.len() <= 60 => format!(" = {s:?}"),
                    _ => String::new(),
                };
                println!("{:<16} {:<15} {}{summary}", field.name, field.kind().as_str(), path.display());
            }
            let t = saved.response.timing;
            println!(
                "timing: preprocess {:.3}s  inference {:.3}s  postprocess {:.3}s  total {:.3}s",
                t.preprocess_s,
                t.inference_s,
                t.postprocess_s,
                t.total_s()
            );
        }
    }
    Ok(())
}

#[tokio::main]
async fn main() -> ExitCode {
    match run(Cli::parse()).await {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
