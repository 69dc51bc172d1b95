use std::io::{BufRead, BufReader, Write};
use std::net::TcpListener;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use ilkit::dataset::{fetch_dataset, sha256_hex, DatasetLocation, Registry, RegistryEntry};
use ilkit::Error;

/// Minimal HTTP/1.1 server answering every GET with `body`.
struct Server {
    url: String,
    hits: Arc<AtomicUsize>,
}

fn serve(body: Vec<u8>) -> Server {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let hits = Arc::new(AtomicUsize::new(0));
    let counter = hits.clone();
    std::thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(mut stream) = stream else { break };
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut line = String::new();
            loop {
                line.clear();
                if reader.read_line(&mut line).unwrap_or(0) == 0 || line == "\r\n" {
                    break;
                }
            }
            counter.fetch_add(1, Ordering::SeqCst);
            let head = format!(
                "HTTP/1.1 200 OK\r\nContent-Length: {}\r\nContent-Type: application/octet-stream\r\nConnection: close\r\n\r\n",
                body.len()
            );
            let _ = stream.write_all(head.as_bytes());
            let _ = stream.write_all(&body);
        }
    });
    Server {
        url: format!("http://{addr}/datasets/tiny.ilds"),
        hits,
    }
}

fn entry(location: &str, sha256: &str, base: &Path) -> RegistryEntry {
    let json = format!(
        r#"[{{"key":"k","env_id":"gridworld-5x5","expert_id":"gridworld-shortest-path",
            "expert_aer":-4.0,"random_aer":-37.0,"dataset_location":"{location}","sha256":"{sha256}"}}]"#
    );
    Registry::from_json(&json, base).unwrap().entries.remove(0)
}

fn payload() -> Vec<u8> {
    (0..4096u32).flat_map(|i| i.wrapping_mul(2654435761).to_le_bytes()).collect()
}

#[test]
fn local_entry_is_verified_in_place() {
    let dir = tempfile::tempdir().unwrap();
    let bytes = payload();
    std::fs::write(dir.path().join("d.ilds"), &bytes).unwrap();
    let e = entry("d.ilds", &sha256_hex(&bytes), dir.path());
    assert_eq!(e.location(), DatasetLocation::Local(dir.path().join("d.ilds")));
    let got = fetch_dataset(&e, dir.path().join("cache")).unwrap();
    assert_eq!(got, dir.path().join("d.ilds"));
    assert!(!dir.path().join("cache").exists());

    let wrong = entry("d.ilds", &"0".repeat(64), dir.path());
    assert!(matches!(fetch_dataset(&wrong, dir.path()), Err(Error::ChecksumMismatch { .. })));
}

#[test]
fn url_is_downloaded_once_then_served_from_cache() {
    let bytes = payload();
    let server = serve(bytes.clone());
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    let e = entry(&server.url, &sha256_hex(&bytes), dir.path());

    let cold = fetch_dataset(&e, &cache).unwrap();
    assert_eq!(server.hits.load(Ordering::SeqCst), 1);
    assert_eq!(std::fs::read(&cold).unwrap(), bytes);

    let warm = fetch_dataset(&e, &cache).unwrap();
    assert_eq!(warm, cold);
    assert_eq!(server.hits.load(Ordering::SeqCst), 1, "warm cache must not touch the network");

    // No leftover temp files next to the published entry.
    let names: Vec<_> = std::fs::read_dir(&cache).unwrap().map(|d| d.unwrap().file_name()).collect();
    assert_eq!(names.len(), 1);
}

#[test]
fn warm_cache_works_with_server_gone() {
    let bytes = payload();
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    std::fs::create_dir_all(&cache).unwrap();
    let sha = sha256_hex(&bytes);
    std::fs::write(cache.join(format!("{sha}.ilds")), &bytes).unwrap();
    // Port 9 on localhost: nothing listens, so any request would fail.
    let e = entry("http://127.0.0.1:9/none.ilds", &sha, dir.path());
    assert_eq!(fetch_dataset(&e, &cache).unwrap(), cache.join(format!("{sha}.ilds")));
}

#[test]
fn altered_bytes_are_rejected_and_not_cached() {
    let bytes = payload();
    let mut altered = bytes.clone();
    altered[100] ^= 0x01;
    let server = serve(altered);
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    let e = entry(&server.url, &sha256_hex(&bytes), dir.path());
    let err = fetch_dataset(&e, &cache).unwrap_err();
    assert!(matches!(err, Error::ChecksumMismatch { .. }), "{err}");
    assert_eq!(std::fs::read_dir(&cache).unwrap().count(), 0);
}

#[test]
fn tampered_cache_entry_is_replaced() {
    let bytes = payload();
    let server = serve(bytes.clone());
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    std::fs::create_dir_all(&cache).unwrap();
    let sha = sha256_hex(&bytes);
    std::fs::write(cache.join(format!("{sha}.ilds")), b"garbage").unwrap();
    let e = entry(&server.url, &sha, dir.path());
    let got = fetch_dataset(&e, &cache).unwrap();
    assert_eq!(std::fs::read(got).unwrap(), bytes);
    assert_eq!(server.hits.load(Ordering::SeqCst), 1);
}

#[test]
fn unreachable_host_is_a_fetch_error() {
    let dir = tempfile::tempdir().unwrap();
    let e = entry("http://127.0.0.1:9/none.ilds", &"a".repeat(64), dir.path());
    assert!(matches!(fetch_dataset(&e, dir.path().join("c")), Err(Error::FetchError { .. })));
}
