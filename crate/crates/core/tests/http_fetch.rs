//! HTTP acquisition tests against a minimal in-process web server: format
//! fallback, redirect-resolved timestamps, cache-first behaviour, and error
//! classification. Everything runs on a loopback listener — no external
//! network involved.

use std::io::{Read, Write};
use std::net::TcpListener;
use std::path::Path;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;

use chrono::NaiveDate;

use ccenv_core::cache::BlobCache;
use ccenv_core::snapshot::{
    decompress_index, fetch_index, IndexFormat, SnapshotError, SnapshotKey, StudyWindow,
};

fn date(s: &str) -> NaiveDate {
    s.parse().unwrap()
}

fn gz_fixture() -> Vec<u8> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/http/Packages.gz");
    std::fs::read(path).expect("checked-in Packages.gz exists")
}

struct Response {
    status: u16,
    reason: &'static str,
    location: Option<String>,
    body: Vec<u8>,
}

impl Response {
    fn ok(body: Vec<u8>) -> Self {
        Response {
            status: 200,
            reason: "OK",
            location: None,
            body,
        }
    }

    fn not_found() -> Self {
        Response {
            status: 404,
            reason: "Not Found",
            location: None,
            body: b"missing".to_vec(),
        }
    }

    fn redirect(to: String) -> Self {
        Response {
            status: 302,
            reason: "Found",
            location: Some(to),
            body: Vec::new(),
        }
    }

    fn server_error() -> Self {
        Response {
            status: 500,
            reason: "Internal Server Error",
            location: None,
            body: b"boom".to_vec(),
        }
    }
}

/// A single-threaded HTTP/1.1 server answering GETs via `handler`. Requests
/// are logged by path. Connections are closed after each response, so the
/// client never reuses a dead socket.
struct TestServer {
    base: String,
    paths: Arc<Mutex<Vec<String>>>,
    stop: Arc<AtomicBool>,
    thread: Option<JoinHandle<()>>,
}

impl TestServer {
    fn start(handler: impl Fn(&str) -> Response + Send + 'static) -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").expect("bind loopback");
        let addr = listener.local_addr().unwrap();
        listener.set_nonblocking(true).unwrap();
        let paths = Arc::new(Mutex::new(Vec::new()));
        let stop = Arc::new(AtomicBool::new(false));
        let log = Arc::clone(&paths);
        let stop_flag = Arc::clone(&stop);
        let thread = std::thread::spawn(move || loop {
            match listener.accept() {
                Ok((mut stream, _)) => {
                    stream.set_nonblocking(false).unwrap();
                    let mut buf = Vec::new();
                    let mut chunk = [0u8; 1024];
                    while !buf.windows(4).any(|w| w == b"\r\n\r\n") {
                        match stream.read(&mut chunk) {
                            Ok(0) => break,
                            Ok(n) => buf.extend_from_slice(&chunk[..n]),
                            Err(_) => break,
                        }
                    }
                    let request = String::from_utf8_lossy(&buf);
                    let path = request
                        .lines()
                        .next()
                        .and_then(|line| line.split_whitespace().nth(1))
                        .unwrap_or("/")
                        .to_string();
                    log.lock().unwrap().push(path.clone());
                    let response = handler(&path);
                    let mut head = format!(
                        "HTTP/1.1 {} {}\r\nContent-Length: {}\r\nConnection: close\r\n",
                        response.status,
                        response.reason,
                        response.body.len()
                    );
                    if let Some(to) = &response.location {
                        head.push_str(&format!("Location: {to}\r\n"));
                    }
                    head.push_str("\r\n");
                    let _ = stream.write_all(head.as_bytes());
                    let _ = stream.write_all(&response.body);
                }
                Err(ref e) if e.kind() == std::io::ErrorKind::WouldBlock => {
                    if stop_flag.load(Ordering::SeqCst) {
                        break;
                    }
                    std::thread::sleep(std::time::Duration::from_millis(2));
                }
                Err(_) => break,
            }
        });
        TestServer {
            base: format!("http://{addr}"),
            paths,
            stop,
            thread: Some(thread),
        }
    }

    fn requested_paths(&self) -> Vec<String> {
        self.paths.lock().unwrap().clone()
    }

    fn shutdown(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        if let Some(thread) = self.thread.take() {
            thread.join().expect("server thread exits");
        }
    }
}

impl Drop for TestServer {
    fn drop(&mut self) {
        self.shutdown();
    }
}

fn cache_in(dir: &Path) -> BlobCache {
    BlobCache::new(dir.join("cache"))
}

#[test]
fn fetch_follows_redirect_and_resolves_timestamp() {
    let gz = gz_fixture();
    // The archive redirects the requested midnight timestamp to the actual
    // capture time, like real snapshot services do.
    let server = TestServer::start(move |path| {
        if path == "/20210601T000000Z/dists/r1/main/binary-amd64/Packages.gz" {
            Response::redirect(
                "/20210601T053000Z/dists/r1/main/binary-amd64/Packages.gz".to_string(),
            )
        } else if path == "/20210601T053000Z/dists/r1/main/binary-amd64/Packages.gz" {
            Response::ok(gz.clone())
        } else {
            Response::not_found()
        }
    });
    let tmp = tempfile::TempDir::new().unwrap();
    let key = SnapshotKey::new("r1", date("2021-06-01"));
    let snapshot = fetch_index(&key, &server.base, &cache_in(tmp.path()), None).unwrap();

    assert_eq!(snapshot.records.len(), 7);
    let names: Vec<&str> = snapshot.records.iter().map(|r| r.name.as_str()).collect();
    assert!(names.contains(&"bash") && names.contains(&"dpkg"));
    assert_eq!(
        snapshot.resolved_timestamp.as_deref(),
        Some("20210601T053000Z"),
        "timestamp comes from the redirect target, not the request"
    );
    assert!(snapshot.source.ends_with("/20210601T053000Z/dists/r1/main/binary-amd64/Packages.gz"));
    assert!(snapshot.diagnostics.is_empty());
}

#[test]
fn fetch_falls_back_through_compression_formats() {
    let gz = gz_fixture();
    let plain = decompress_index(&gz, IndexFormat::Gzip).unwrap();
    // Only the uncompressed index exists; .gz and .xz answer 404.
    let server = TestServer::start(move |path| {
        if path.ends_with("/Packages") {
            Response::ok(plain.clone().into_bytes())
        } else {
            Response::not_found()
        }
    });
    let tmp = tempfile::TempDir::new().unwrap();
    let key = SnapshotKey::new("r1", date("2021-06-01"));
    let snapshot = fetch_index(&key, &server.base, &cache_in(tmp.path()), None).unwrap();

    assert_eq!(snapshot.records.len(), 7);
    let paths = server.requested_paths();
    assert_eq!(
        paths,
        vec![
            "/20210601T000000Z/dists/r1/main/binary-amd64/Packages.gz".to_string(),
            "/20210601T000000Z/dists/r1/main/binary-amd64/Packages.xz".to_string(),
            "/20210601T000000Z/dists/r1/main/binary-amd64/Packages".to_string(),
        ],
        "formats are tried gz, xz, plain in order"
    );
}

#[test]
fn fetch_is_cache_first_after_one_download() {
    let gz = gz_fixture();
    let mut server = TestServer::start(move |path| {
        if path.ends_with(".gz") {
            Response::ok(gz.clone())
        } else {
            Response::not_found()
        }
    });
    let tmp = tempfile::TempDir::new().unwrap();
    let cache = cache_in(tmp.path());
    let key = SnapshotKey::new("r1", date("2021-06-01"));

    let first = fetch_index(&key, &server.base, &cache, None).unwrap();
    assert_eq!(server.requested_paths().len(), 1);

    // Kill the server; the cached copy must satisfy the second fetch.
    let base = server.base.clone();
    server.shutdown();
    let second = fetch_index(&key, &base, &cache, None).unwrap();
    assert_eq!(second.records.len(), first.records.len());
    assert_eq!(second.source, first.source);
    assert_eq!(second.resolved_timestamp, first.resolved_timestamp);

    // A different date is not in the cache and must fail to fetch.
    let other = SnapshotKey::new("r1", date("2021-06-02"));
    assert!(fetch_index(&other, &base, &cache, None).is_err());
}

#[test]
fn fetch_classifies_missing_and_failing_archives() {
    let tmp = tempfile::TempDir::new().unwrap();
    let key = SnapshotKey::new("r1", date("2021-06-01"));

    // All formats 404 → NotFound, after trying all three.
    let server = TestServer::start(|_| Response::not_found());
    let err = fetch_index(&key, &server.base, &cache_in(tmp.path()), None).unwrap_err();
    assert!(matches!(err, SnapshotError::NotFound(_)), "{err}");
    assert_eq!(server.requested_paths().len(), 3);
    drop(server);

    // A 5xx is a transport failure, reported without trying further formats.
    let server = TestServer::start(|_| Response::server_error());
    let err = fetch_index(&key, &server.base, &cache_in(tmp.path()), None).unwrap_err();
    match &err {
        SnapshotError::Fetch { message, .. } => {
            assert!(message.contains("500"), "{message}")
        }
        other => panic!("expected Fetch, got {other}"),
    }
    assert!(err.is_retriable());
    assert_eq!(server.requested_paths().len(), 1);
}

#[test]
fn fetch_respects_the_study_window() {
    // The window is checked before any request goes out.
    let server = TestServer::start(|_| Response::server_error());
    let tmp = tempfile::TempDir::new().unwrap();
    let key = SnapshotKey::new("r1", date("2021-06-01"));
    let window = StudyWindow {
        from: date("2021-01-01"),
        to: date("2021-01-31"),
    };
    let err = fetch_index(&key, &server.base, &cache_in(tmp.path()), Some(window)).unwrap_err();
    assert!(matches!(err, SnapshotError::OutsideWindow { .. }), "{err}");
    assert!(server.requested_paths().is_empty());
}

#[test]
fn corrupt_cache_blob_is_evicted_and_refetched() {
    let gz = gz_fixture();
    let server = TestServer::start(move |path| {
        if path.ends_with(".gz") {
            Response::ok(gz.clone())
        } else {
            Response::not_found()
        }
    });
    let tmp = tempfile::TempDir::new().unwrap();
    let cache = cache_in(tmp.path());
    let key = SnapshotKey::new("r1", date("2021-06-01"));
    fetch_index(&key, &server.base, &cache, None).unwrap();
    assert_eq!(server.requested_paths().len(), 1);

    // Corrupt every stored blob in place.
    let blob_dir = tmp.path().join("cache/blobs/sha256");
    let mut corrupted = 0;
    for entry in std::fs::read_dir(&blob_dir).unwrap().flatten() {
        std::fs::write(entry.path(), b"garbage").unwrap();
        corrupted += 1;
    }
    assert!(corrupted > 0, "the fetch stored at least one blob");

    let refetched = fetch_index(&key, &server.base, &cache, None).unwrap();
    assert_eq!(refetched.records.len(), 7);
    assert_eq!(
        server.requested_paths().len(),
        2,
        "the corrupt blob forced exactly one refetch"
    );
}
