// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use sha2::{Digest, Sha256};
use thiserror::Error;
use voxserve_core::protocol::{AnnounceMessage, ProtocolError, ServiceRecord};

use crate::KeyTable;

pub const DEFAULT_TTL_S: u64 = 1800;

/// Source of "now" in whole Unix seconds.
pub trait Clock: Send + Sync {
    fn now(&self) -> u64;
}

#[derive(Debug, Default, Clone, Copy)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> u64 {
        SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
    }
}

/// Clock advanced by hand, for tests.
#[derive(Debug, Default, Clone)]
pub struct ManualClock(Arc<AtomicU64>);

impl ManualClock {
    pub fn new(start: u64) -> Self {
        Self(Arc::new(AtomicU64::new(start)))
    }

    pub fn set(&self, t: u64) {
        self.0.store(t, Ordering::SeqCst);
    }

    pub fn advance(&self, secs: u64) {
        self.0.fetch_add(secs, Ordering::SeqCst);
    }
}

impl Clock for ManualClock {
    fn now(&self) -> u64 {
        self.0.load(Ordering::SeqCst)
    }
}

/// Hex SHA-256 over the key and URL, length-prefixed so that no two
/// distinct pairs share an encoding.
pub fn service_id(api_key: &str, prediction_url: &str) -> String {
    let mut h = Sha256::new();
    for part in [api_key, prediction_url] {
        h.update((part.len() as u64).to_le_bytes());
        h.update(part.as_bytes());
    }
    format!("{:x}", h.finalize())
}

#[derive(Debug, Error)]
pub enum RegistryError {
    #[error("unknown api key")]
    Unauthorized,
    #[error(transparent)]
    Invalid(#[from] ProtocolError),
    #[error("writing snapshot: {0}")]
    Persist(#[from] std::io::Error),
}

pub struct Registry {
    keys: KeyTable,
    ttl_s: u64,
    clock: Box<dyn Clock>,
    records: RwLock<BTreeMap<String, ServiceRecord>>,
    state_file: Option<PathBuf>,
}

impl Registry {
    pub fn new(keys: KeyTable, ttl_s: u64, clock: impl Clock + 'static) -> Self {
        Self { keys, ttl_s, clock: Box::new(clock), records: RwLock::default(), state_file: None }
    }

    /// Restores records from `path` if it exists and writes a snapshot there
    /// after every accepted announcement. An unreadable snapshot is logged
    /// and the registry starts empty.
    pub fn with_state_file(mut self, path: impl Into<PathBuf>) -> Self {
        let path = path.into();
        match restore(&path) {
            Ok(records) => {
                let map = records
                    .into_iter()
                    .map(|mut r| {
                        r.ttl_s = self.ttl_s;
                        (r.service_id.clone(), r)
                    })
                    .collect();
                *self.records.get_mut().unwrap_or_else(|e| e.into_inner()) = map;
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {}
            Err(e) => {
                tracing::warn!(path = %path.display(), error = %e, "ignoring unreadable snapshot, starting empty")
            }
        }
        self.state_file = Some(path);
        self
    }

    pub fn ttl_s(&self) -> u64 {
        self.ttl_s
    }

    pub fn now(&self) -> u64 {
        self.clock.now()
    }

    /// Creates or refreshes the record for `msg`. Nothing changes unless
    /// the key is known.
    pub fn announce(&self, msg: &AnnounceMessage) -> Result<String, RegistryError> {
        let Some(owner) = self.keys.owner(&msg.api_key) else {
            return Err(RegistryError::Unauthorized);
        };
        msg.check()?;
        let id = service_id(&msg.api_key, &msg.prediction_url);
        let mut records = self.records.write().unwrap_or_else(|e| e.into_inner());
        let record = ServiceRecord::from_announce(id.clone(), msg, self.clock.now(), self.ttl_s);
        records.insert(id.clone(), record);
        tracing::info!(service_id = %id, owner, url = %msg.prediction_url, "announce accepted");
        if let Some(path) = &self.state_file {
            persist(path, records.values())?;
        }
        Ok(id)
    }

    /// Live records ordered by service id.
    pub fn discover(&self) -> Vec<ServiceRecord> {
        let now = self.clock.now();
        let records = self.records.read().unwrap_or_else(|e| e.into_inner());
        records.values().filter(|r| r.is_live(now)).cloned().collect()
    }

    /// Every stored record, live or not.
    pub fn snapshot(&self) -> Vec<ServiceRecord> {
        self.records.read().unwrap_or_else(|e| e.into_inner()).values().cloned().collect()
    }
}

/// Writes the record list to a sibling temp file and renames it over `path`.
fn persist<'a>(path: &Path, records: impl Iterator<Item = &'a ServiceRecord>) -> std::io::Result<()> {
    let list: Vec<&ServiceRecord> = records.collect();
    let json = serde_json::to_vec_pretty(&list).map_err(std::io::Error::other)?;
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(&json)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)
}

fn restore(path: &Path) -> std::io::Result<Vec<ServiceRecord>> {
    let bytes = std::fs::read(path)?;
    serde_json::from_slice(&bytes).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn msg(key: &str, url: &str) -> AnnounceMessage {
        AnnounceMessage {
            api_key: key.into(),
            prediction_url: url.into(),
            name: "seg".into(),
            description: "first".into(),
            modality: "MR".into(),
            anatomy: "brain".into(),
            task: "segmentation".into(),
        }
    }

    fn registry(clock: &ManualClock) -> Registry {
        Registry::new(KeyTable::from_pairs([("good", "lab")]), DEFAULT_TTL_S, clock.clone())
    }

    #[test]
    fn service_id_is_hex_sha256_and_separates_fields() {
        let id = service_id("ab", "c");
        assert_eq!(id.len(), 64);
        assert!(id.bytes().all(|b| b.is_ascii_hexdigit() && !b.is_ascii_uppercase()));
        assert_ne!(id, service_id("a", "bc"));
        assert_eq!(id, service_id("ab", "c"));
    }

    #[test]
    fn refresh_keeps_id_and_updates_metadata() {
        let clock = ManualClock::new(100);
        let r = registry(&clock);
        let a = r.announce(&msg("good", "http://h:1")).unwrap();
        clock.advance(10);
        let mut m = msg("good", "http://h:1");
        m.description = "second".into();
        assert_eq!(r.announce(&m).unwrap(), a);
        let found = r.discover();
        assert_eq!(found.len(), 1);
        assert_eq!(found[0].description, "second");
        assert_eq!(found[0].last_seen, 110);
    }

    #[test]
    fn unknown_key_changes_nothing() {
        let clock = ManualClock::new(0);
        let r = registry(&clock);
        assert!(matches!(r.announce(&msg("bad", "http://h:1")), Err(RegistryError::Unauthorized)));
        assert!(r.snapshot().is_empty());
    }

    #[test]
    fn invalid_message_from_known_key_is_rejected() {
        let clock = ManualClock::new(0);
        let r = registry(&clock);
        assert!(matches!(r.announce(&msg("good", "not a url")), Err(RegistryError::Invalid(_))));
        assert!(r.snapshot().is_empty());
    }

    #[test]
    fn expiry_boundary() {
        let clock = ManualClock::new(1_000);
        let r = registry(&clock);
        r.announce(&msg("good", "http://old:1")).unwrap();
        clock.advance(1);
        r.announce(&msg("good", "http://new:1")).unwrap();
        // old was seen 1800 s ago, still live; one more second expires it
        clock.advance(DEFAULT_TTL_S - 1);
        assert_eq!(r.discover().len(), 2);
        clock.advance(1);
        let live = r.discover();
        assert_eq!(live.len(), 1);
        assert_eq!(live[0].prediction_url, "http://new:1");
    }
}
