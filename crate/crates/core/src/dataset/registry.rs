//! Named catalog binding dataset keys to environments, experts and files.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegistryEntry {
    pub key: String,
    pub env_id: String,
    pub expert_id: String,
    /// Minimum accepted episode return; absent means accept everything.
    #[serde(default)]
    pub acceptance_threshold: Option<f64>,
    pub expert_aer: f64,
    pub random_aer: f64,
    /// Local path (relative to the registry file) or http(s) URL.
    pub dataset_location: String,
    pub sha256: String,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DatasetLocation {
    Local(PathBuf),
    Url(String),
}

impl RegistryEntry {
    pub fn threshold(&self) -> f64 {
        self.acceptance_threshold.unwrap_or(f64::NEG_INFINITY)
    }

    pub fn location(&self) -> DatasetLocation {
        let loc = &self.dataset_location;
        if loc.starts_with("http://") || loc.starts_with("https://") {
            DatasetLocation::Url(loc.clone())
        } else {
            DatasetLocation::Local(self.base_dir.join(loc))
        }
    }

    fn validate(&self) -> Result<()> {
        let hex = self.sha256.len() == 64 && self.sha256.bytes().all(|b| b.is_ascii_hexdigit());
        if !hex {
            return Err(Error::InvalidRegistry(format!(
                "{}: sha256 must be 64 hex characters",
                self.key
            )));
        }
        if self.key.is_empty() || self.env_id.is_empty() {
            return Err(Error::InvalidRegistry("empty key or env_id".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default)]
pub struct Registry {
    pub entries: Vec<RegistryEntry>,
}

impl Registry {
    /// Parse registry JSON; relative dataset locations resolve against `base_dir`.
    pub fn from_json(text: &str, base_dir: &Path) -> Result<Self> {
        let mut entries: Vec<RegistryEntry> =
            serde_json::from_str(text).map_err(|e| Error::InvalidRegistry(e.to_string()))?;
        let mut seen = HashSet::new();
        for e in &mut entries {
            e.validate()?;
            if !seen.insert(e.key.clone()) {
                return Err(Error::DuplicateRegistryKey(e.key.clone()));
            }
            e.base_dir = base_dir.to_path_buf();
        }
        Ok(Self { entries })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_json(&text, base)
    }

    pub fn lookup(&self, key: &str) -> Result<&RegistryEntry> {
        registry_lookup(&self.entries, key)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(&self.entries)?;
        s.push('\n');
        Ok(s)
    }
}

pub fn registry_load(path: impl AsRef<Path>) -> Result<Vec<RegistryEntry>> {
    Registry::load(path).map(|r| r.entries)
}

pub fn registry_lookup<'a>(entries: &'a [RegistryEntry], key: &str) -> Result<&'a RegistryEntry> {
    entries
        .iter()
        .find(|e| e.key == key)
        .ok_or_else(|| Error::UnknownRegistryKey(key.to_string()))
}
