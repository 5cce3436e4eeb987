// SPDX-License-Identifier: Apache-2.0

use std::collections::HashMap;
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum KeyTableError {
    #[error("reading key file: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: &'static str },
}

/// API keys allowed to announce, each mapped to an owner label.
///
/// File format: one `key<TAB>owner` per line. Blank lines and lines starting
/// with `#` are skipped.
#[derive(Debug, Clone, Default)]
pub struct KeyTable {
    owners: HashMap<String, String>,
}

impl KeyTable {
    pub fn parse(text: &str) -> Result<Self, KeyTableError> {
        let mut owners = HashMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |reason| KeyTableError::Parse { line: i + 1, reason };
            let (key, owner) = line.split_once('\t').ok_or_else(|| err("expected key<TAB>owner"))?;
            if key.is_empty() {
                return Err(err("empty key"));
            }
            if owners.insert(key.to_string(), owner.trim().to_string()).is_some() {
                return Err(err("duplicate key"));
            }
        }
        Ok(Self { owners })
    }

    pub fn load(path: &Path) -> Result<Self, KeyTableError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Self {
        Self { owners: pairs.into_iter().map(|(k, o)| (k.to_string(), o.to_string())).collect() }
    }

    pub fn owner(&self, key: &str) -> Option<&str> {
        self.owners.get(key).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.owners.len()
    }

    pub fn is_empty(&self) -> bool {
        self.owners.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_tab_separated_lines() {
        let t = KeyTable::parse("# keys\nabc\tlab one\n\nxyz\tclinic\r\n").unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t.owner("abc"), Some("lab one"));
        assert_eq!(t.owner("xyz"), Some("clinic"));
        assert_eq!(t.owner("nope"), None);
    }

    #[test]
    fn rejects_bad_lines() {
        assert!(matches!(KeyTable::parse("abc lab"), Err(KeyTableError::Parse { line: 1, .. })));
        assert!(matches!(KeyTable::parse("a\tx\n\ta"), Err(KeyTableError::Parse { line: 2, .. })));
        assert!(matches!(
            KeyTable::parse("a\tx\na\ty"),
            Err(KeyTableError::Parse { line: 2, reason: "duplicate key" })
        ));
    }
}
