//! Checksum-verified dataset fetch with a content-addressed local cache.

use std::io::Read;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use sha2::{Digest, Sha256};

use super::registry::{DatasetLocation, RegistryEntry};
use crate::{Error, Result};

const MAX_DOWNLOAD_BYTES: u64 = 1 << 31;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sha256_file(path: impl AsRef<Path>) -> Result<String> {
    let path = path.as_ref();
    let mut f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 64 * 1024];
    loop {
        let n = f.read(&mut buf).map_err(|e| Error::io(path, e))?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex::encode(hasher.finalize()))
}

/// Local path of the dataset for `entry`, verified against `entry.sha256`.
///
/// Local entries are checked in place. URL entries are cached under
/// `cache_dir/<sha256>.ilds`; a verified cache hit never touches the network.
pub fn fetch_dataset(entry: &RegistryEntry, cache_dir: impl AsRef<Path>) -> Result<PathBuf> {
    let expected = entry.sha256.to_ascii_lowercase();
    match entry.location() {
        DatasetLocation::Local(path) => {
            let actual = sha256_file(&path)?;
            if actual != expected {
                return Err(Error::ChecksumMismatch { path, expected, actual });
            }
            Ok(path)
        }
        DatasetLocation::Url(url) => {
            let cache_dir = cache_dir.as_ref();
            let cached = cache_dir.join(format!("{expected}.ilds"));
            if cached.exists() {
                let actual = sha256_file(&cached)?;
                if actual == expected {
                    return Ok(cached);
                }
                // Stale or tampered entry: drop it and download again.
                std::fs::remove_file(&cached).map_err(|e| Error::io(&cached, e))?;
            }
            std::fs::create_dir_all(cache_dir).map_err(|e| Error::io(cache_dir, e))?;
            let bytes = download(&url)?;
            let actual = sha256_hex(&bytes);
            if actual != expected {
                return Err(Error::ChecksumMismatch {
                    path: cached,
                    expected,
                    actual,
                });
            }
            publish(&cached, &bytes)?;
            Ok(cached)
        }
    }
}

fn download(url: &str) -> Result<Vec<u8>> {
    let fail = |reason: String| Error::FetchError {
        url: url.to_string(),
        reason,
    };
    let mut resp = ureq::get(url).call().map_err(|e| fail(e.to_string()))?;
    resp.body_mut()
        .with_config()
        .limit(MAX_DOWNLOAD_BYTES)
        .read_to_vec()
        .map_err(|e| fail(e.to_string()))
}

/// Write to a sibling temp file, then rename into place.
fn publish(target: &Path, bytes: &[u8]) -> Result<()> {
    let nanos = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.subsec_nanos())
        .unwrap_or(0);
    let tmp = target.with_extension(format!("tmp-{}-{nanos}", std::process::id()));
    std::fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, target).map_err(|e| {
        let _ = std::fs::remove_file(&tmp);
        Error::io(target, e)
    })
}
