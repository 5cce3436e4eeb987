// SPDX-License-Identifier: Apache-2.0

use std::fmt::Write;

use serde::{Deserialize, Serialize};

/// Latency of one pipeline over one network profile, medians over `runs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencyReport {
    pub pipeline: String,
    pub profile: String,
    pub runs: usize,
    pub total_s: f64,
    /// Server-reported inference time; absent when the server reports none.
    pub compute_s: Option<f64>,
    /// `request_bits / up_bps + response_bits / down_bps + 2 * rtt`.
    pub transfer_estimate_s: f64,
    pub residual_s: f64,
    pub request_bytes: u64,
    pub response_bytes: u64,
    /// Set when a run failed and the remaining repetitions were skipped.
    #[serde(default)]
    pub partial: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

pub fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    Some(if n % 2 == 1 { values[n / 2] } else { (values[n / 2 - 1] + values[n / 2]) / 2.0 })
}

pub fn encode_reports(reports: &[LatencyReport]) -> String {
    serde_json::to_string_pretty(reports).expect("reports serialize")
}

pub fn decode_reports(text: &str) -> Result<Vec<LatencyReport>, serde_json::Error> {
    serde_json::from_str(text)
}

/// Both renderings of a set of reports.
#[derive(Debug, Clone, PartialEq)]
pub struct Rendered {
    pub text: String,
    pub json: String,
}

/// One row per (pipeline, profile) in input order. Partial rows are
/// flagged with `*`.
pub fn emit_report(reports: &[LatencyReport]) -> Rendered {
    let mut text = format!(
        "{:<22} {:<10} {:>4} {:>9} {:>9} {:>10} {:>10}\n",
        "pipeline", "profile", "runs", "total_s", "compute_s", "transfer_s", "residual_s"
    );
    for r in reports {
        let compute = r.compute_s.map_or_else(|| "-".to_string(), |c| format!("{c:.3}"));
        let _ = writeln!(
            text,
            "{:<22} {:<10} {:>4} {:>9.3} {:>9} {:>10.3} {:>10.3}{}",
            r.pipeline,
            r.profile,
            r.runs,
            r.total_s,
            compute,
            r.transfer_estimate_s,
            r.residual_s,
            if r.partial { " *" } else { "" }
        );
    }
    Rendered { text, json: encode_reports(reports) }
}

/// Pipelines as rows, profiles as columns, each cell `total (compute)`.
pub fn latency_grid(reports: &[LatencyReport]) -> String {
    let mut pipelines: Vec<&str> = Vec::new();
    let mut profiles: Vec<&str> = Vec::new();
    for r in reports {
        if !pipelines.contains(&r.pipeline.as_str()) {
            pipelines.push(&r.pipeline);
        }
        if !profiles.contains(&r.profile.as_str()) {
            profiles.push(&r.profile);
        }
    }
    let mut out = format!("{:<22}", "");
    for p in &profiles {
        let _ = write!(out, " {p:>22}");
    }
    out.push('\n');
    for pipe in &pipelines {
        let _ = write!(out, "{pipe:<22}");
        for prof in &profiles {
            let cell = match reports.iter().find(|r| r.pipeline == *pipe && r.profile == *prof) {
                Some(r) => match r.compute_s {
                    Some(c) => format!("{:.2}s (compute {:.2}s)", r.total_s, c),
                    None => format!("{:.2}s", r.total_s),
                },
                None => "-".into(),
            };
            let _ = write!(out, " {cell:>22}");
        }
        out.push('\n');
    }
    out
}
