// SPDX-License-Identifier: Apache-2.0

use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ProfileError {
    #[error("profile {name:?}: {reason}")]
    Invalid { name: String, reason: &'static str },
    #[error("profile file: {0}")]
    Parse(#[from] serde_json::Error),
}

/// Bandwidth per direction in bits per second and round-trip time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkProfile {
    pub name: String,
    /// Client to server.
    pub up_bps: u64,
    /// Server to client.
    pub down_bps: u64,
    pub rtt_ms: f64,
}

impl NetworkProfile {
    pub fn new(name: &str, up_bps: u64, down_bps: u64, rtt_ms: f64) -> Result<Self, ProfileError> {
        let p = Self { name: name.to_string(), up_bps, down_bps, rtt_ms };
        p.check()?;
        Ok(p)
    }

    pub fn check(&self) -> Result<(), ProfileError> {
        let bad = |reason| Err(ProfileError::Invalid { name: self.name.clone(), reason });
        if self.up_bps == 0 || self.down_bps == 0 {
            return bad("bandwidths must be positive");
        }
        if !(self.rtt_ms.is_finite() && self.rtt_ms >= 0.0) {
            return bad("rtt_ms must be a nonnegative number");
        }
        Ok(())
    }

    pub fn rtt(&self) -> Duration {
        Duration::from_secs_f64(self.rtt_ms / 1000.0)
    }

    /// Bits-per-second shaping is effectively off; useful as a baseline.
    pub fn unlimited() -> Self {
        Self { name: "unlimited".into(), up_bps: u64::MAX / 16, down_bps: u64::MAX / 16, rtt_ms: 0.0 }
    }
}

/// LAN, DSL and 4G, in that order of decreasing quality.
pub fn default_profiles() -> Vec<NetworkProfile> {
    vec![
        NetworkProfile { name: "LAN".into(), up_bps: 1_000_000_000, down_bps: 1_000_000_000, rtt_ms: 1.0 },
        NetworkProfile { name: "DSL".into(), up_bps: 10_000_000, down_bps: 50_000_000, rtt_ms: 20.0 },
        NetworkProfile { name: "4G".into(), up_bps: 20_000_000, down_bps: 20_000_000, rtt_ms: 50.0 },
    ]
}

pub fn parse_profiles(text: &str) -> Result<Vec<NetworkProfile>, ProfileError> {
    let list: Vec<NetworkProfile> = serde_json::from_str(text)?;
    for p in &list {
        p.check()?;
    }
    Ok(list)
}

pub fn encode_profiles(profiles: &[NetworkProfile]) -> String {
    serde_json::to_string_pretty(profiles).expect("profiles serialize")
}
