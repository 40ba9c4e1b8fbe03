//! Acquisition of dated `Packages` indices.
//!
//! Daily sampling works against a snapshot archive laid out as
//! `<base>/<YYYYMMDDThhmmssZ>/dists/<release>/<component>/binary-<arch>/Packages[.gz|.xz]`
//! where `<base>` is either an HTTP(S) URL (timestamps resolved by following
//! redirects) or a local directory (timestamps resolved by listing). The
//! requested date maps to the first archive timestamp at or after that
//! date's midnight — the first snapshot of the day.
//!
//! Fetched bytes land in a content-addressed [`BlobCache`] with a JSON
//! sidecar per `(release, date, component, arch)` key, so re-runs are fully
//! offline. Network failures are retriable; checksum or decompression
//! failures invalidate the cache entry and are reported as corruption.

use std::fmt;
use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use chrono::{NaiveDate, NaiveDateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cache::{BlobCache, CacheError};
use crate::control::{parse_packages_index, Diagnostic, IndexParse, PackageRecord};

#[derive(Debug, Error)]
pub enum SnapshotError {
    /// Transient transport problem (timeout, refused, HTTP 5xx); retry later.
    #[error("fetch failed for {url}: {message}")]
    Fetch { url: String, message: String },
    /// The archive has no matching snapshot or file (HTTP 404 or missing path).
    #[error("not found in archive: {0}")]
    NotFound(String),
    /// Undecodable or checksum-mismatched artifact; any cache entry was evicted.
    #[error("corrupt artifact from {source_desc}: {message}")]
    CorruptArtifact { source_desc: String, message: String },
    #[error(transparent)]
    Cache(#[from] CacheError),
    #[error("I/O at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("requested date {date} is outside the study window {from}..={to}")]
    OutsideWindow {
        date: NaiveDate,
        from: NaiveDate,
        to: NaiveDate,
    },
}

impl SnapshotError {
    /// True for failures where a retry may succeed (network trouble or a
    /// snapshot that may appear later), false for corruption and misuse.
    pub fn is_retriable(&self) -> bool {
        matches!(self, SnapshotError::Fetch { .. } | SnapshotError::NotFound(_))
    }
}

/// Identity of one sampled index.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SnapshotKey {
    pub release: String,
    pub date: NaiveDate,
    pub component: String,
    pub architecture: String,
}

impl SnapshotKey {
    pub fn new(release: impl Into<String>, date: NaiveDate) -> Self {
        SnapshotKey {
            release: release.into(),
            date,
            component: "main".to_string(),
            architecture: "amd64".to_string(),
        }
    }

    fn cache_key(&self) -> String {
        format!(
            "{}_{}_{}_{}",
            self.release, self.date, self.component, self.architecture
        )
    }

    /// Archive-relative path of the Packages file under one timestamp,
    /// without compression extension.
    fn dist_path(&self) -> String {
        format!(
            "dists/{}/{}/binary-{}/Packages",
            self.release, self.component, self.architecture
        )
    }
}

impl fmt::Display for SnapshotKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}/{}/{}/{}",
            self.release, self.date, self.component, self.architecture
        )
    }
}

/// A parsed index plus its provenance.
#[derive(Debug, Clone)]
pub struct MirrorSnapshot {
    pub key: SnapshotKey,
    /// Archive timestamp that actually served the data, when known.
    pub resolved_timestamp: Option<String>,
    /// URL or filesystem path the bytes came from (or the cache).
    pub source: String,
    pub records: Vec<PackageRecord>,
    pub diagnostics: Vec<Diagnostic>,
}

/// Optional closed date interval restricting which snapshots may be sampled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StudyWindow {
    pub from: NaiveDate,
    pub to: NaiveDate,
}

impl StudyWindow {
    pub fn check(&self, date: NaiveDate) -> Result<(), SnapshotError> {
        if date < self.from || date > self.to {
            return Err(SnapshotError::OutsideWindow {
                date,
                from: self.from,
                to: self.to,
            });
        }
        Ok(())
    }
}

/// Compression container of an index file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IndexFormat {
    Plain,
    Gzip,
    Xz,
}

impl IndexFormat {
    pub fn extension(self) -> &'static str {
        match self {
            IndexFormat::Plain => "",
            IndexFormat::Gzip => ".gz",
            IndexFormat::Xz => ".xz",
        }
    }

    fn name(self) -> &'static str {
        match self {
            IndexFormat::Plain => "plain",
            IndexFormat::Gzip => "gzip",
            IndexFormat::Xz => "xz",
        }
    }

    fn from_name(name: &str) -> Self {
        match name {
            "gzip" => IndexFormat::Gzip,
            "xz" => IndexFormat::Xz,
            _ => IndexFormat::Plain,
        }
    }
}

/// Sniff the container format from magic bytes.
pub fn detect_format(bytes: &[u8]) -> IndexFormat {
    if bytes.starts_with(&[0x1f, 0x8b]) {
        IndexFormat::Gzip
    } else if bytes.starts_with(&[0xfd, b'7', b'z', b'X', b'Z', 0x00]) {
        IndexFormat::Xz
    } else {
        IndexFormat::Plain
    }
}

/// Decompress raw index bytes to text. The declared format must match the
/// magic bytes; failures are corruption, not retriable fetch errors. Invalid
/// UTF-8 sequences are replaced rather than fatal.
pub fn decompress_index(bytes: &[u8], format: IndexFormat) -> Result<String, SnapshotError> {
    let sniffed = detect_format(bytes);
    if sniffed != format {
        return Err(SnapshotError::CorruptArtifact {
            source_desc: format!("{} data", format.name()),
            message: format!("magic bytes look like {}", sniffed.name()),
        });
    }
    let corrupt = |e: std::io::Error| SnapshotError::CorruptArtifact {
        source_desc: format!("{} data", format.name()),
        message: e.to_string(),
    };
    let raw = match format {
        IndexFormat::Plain => bytes.to_vec(),
        IndexFormat::Gzip => {
            let mut out = Vec::new();
            flate2::read::GzDecoder::new(bytes)
                .read_to_end(&mut out)
                .map_err(corrupt)?;
            out
        }
        IndexFormat::Xz => {
            let mut out = Vec::new();
            xz2::read::XzDecoder::new(bytes)
                .read_to_end(&mut out)
                .map_err(corrupt)?;
            out
        }
    };
    Ok(String::from_utf8_lossy(&raw).into_owned())
}

fn archive_timestamp(date: NaiveDate) -> String {
    format!("{}T000000Z", date.format("%Y%m%d"))
}

fn parse_archive_timestamp(name: &str) -> Option<NaiveDateTime> {
    NaiveDateTime::parse_from_str(name, "%Y%m%dT%H%M%SZ").ok()
}

/// Cache sidecar describing one stored index.
#[derive(Debug, Serialize, Deserialize)]
struct IndexSidecar {
    digest: String,
    resolved_timestamp: Option<String>,
    source: String,
    format: String,
    fetched_at: String,
}

const SIDE_NS: &str = "indices";

fn parse_snapshot(
    key: &SnapshotKey,
    bytes: &[u8],
    format: IndexFormat,
    resolved_timestamp: Option<String>,
    source: String,
) -> Result<MirrorSnapshot, SnapshotError> {
    let text = decompress_index(bytes, format)?;
    let IndexParse {
        records,
        diagnostics,
    } = parse_packages_index(&text);
    Ok(MirrorSnapshot {
        key: key.clone(),
        resolved_timestamp,
        source,
        records,
        diagnostics,
    })
}

/// Fetch one dated index, preferring the cache. `base` may be an `http(s)://`
/// URL, a `file://` URL or a plain directory path.
pub fn fetch_index(
    key: &SnapshotKey,
    base: &str,
    cache: &BlobCache,
    window: Option<StudyWindow>,
) -> Result<MirrorSnapshot, SnapshotError> {
    if let Some(w) = window {
        w.check(key.date)?;
    }
    let cache_key = key.cache_key();
    if let Some(sidecar) = cache.get_sidecar::<IndexSidecar>(SIDE_NS, &cache_key)? {
        match cache.get_blob(&sidecar.digest) {
            Ok(Some(bytes)) => {
                return parse_snapshot(
                    key,
                    &bytes,
                    IndexFormat::from_name(&sidecar.format),
                    sidecar.resolved_timestamp.clone(),
                    sidecar.source.clone(),
                );
            }
            Ok(None) => {
                // Blob vanished; refetch below.
                cache.remove_sidecar(SIDE_NS, &cache_key)?;
            }
            Err(CacheError::CorruptBlob { .. }) => {
                cache.remove_sidecar(SIDE_NS, &cache_key)?;
            }
            Err(e) => return Err(e.into()),
        }
    }

    let fetched = if base.starts_with("http://") || base.starts_with("https://") {
        fetch_http(key, base)?
    } else {
        let root = base.strip_prefix("file://").unwrap_or(base);
        fetch_local_archive(key, Path::new(root))?
    };

    let digest = cache.put_blob(&fetched.bytes)?;
    cache.put_sidecar(
        SIDE_NS,
        &cache_key,
        &IndexSidecar {
            digest,
            resolved_timestamp: fetched.resolved_timestamp.clone(),
            source: fetched.source.clone(),
            format: fetched.format.name().to_string(),
            fetched_at: Utc::now().to_rfc3339(),
        },
    )?;
    parse_snapshot(
        key,
        &fetched.bytes,
        fetched.format,
        fetched.resolved_timestamp,
        fetched.source,
    )
}

struct FetchedIndex {
    bytes: Vec<u8>,
    format: IndexFormat,
    resolved_timestamp: Option<String>,
    source: String,
}

/// Pull the timestamp component (e.g. `20210601T031500Z`) out of a URL path.
fn timestamp_from_url(url: &str) -> Option<String> {
    url.split('/')
        .find(|seg| parse_archive_timestamp(seg).is_some())
        .map(str::to_string)
}

fn fetch_http(key: &SnapshotKey, base: &str) -> Result<FetchedIndex, SnapshotError> {
    let client = reqwest::blocking::Client::builder()
        .timeout(std::time::Duration::from_secs(60))
        .build()
        .map_err(|e| SnapshotError::Fetch {
            url: base.to_string(),
            message: e.to_string(),
        })?;
    let ts = archive_timestamp(key.date);
    let base = base.trim_end_matches('/');
    let mut last_missing = String::new();
    for format in [IndexFormat::Gzip, IndexFormat::Xz, IndexFormat::Plain] {
        let url = format!("{base}/{ts}/{}{}", key.dist_path(), format.extension());
        let resp = client.get(&url).send().map_err(|e| SnapshotError::Fetch {
            url: url.clone(),
            message: e.to_string(),
        })?;
        let status = resp.status();
        if status == reqwest::StatusCode::NOT_FOUND {
            last_missing = url;
            continue;
        }
        if !status.is_success() {
            return Err(SnapshotError::Fetch {
                url,
                message: format!("HTTP status {status}"),
            });
        }
        let final_url = resp.url().to_string();
        let bytes = resp.bytes().map_err(|e| SnapshotError::Fetch {
            url: url.clone(),
            message: e.to_string(),
        })?;
        return Ok(FetchedIndex {
            bytes: bytes.to_vec(),
            format,
            resolved_timestamp: timestamp_from_url(&final_url),
            source: final_url,
        });
    }
    Err(SnapshotError::NotFound(last_missing))
}

fn fetch_local_archive(key: &SnapshotKey, root: &Path) -> Result<FetchedIndex, SnapshotError> {
    let entries = fs::read_dir(root).map_err(|source| SnapshotError::Io {
        path: root.to_path_buf(),
        source,
    })?;
    let midnight = key
        .date
        .and_hms_opt(0, 0, 0)
        .expect("midnight is always valid");
    let mut candidates: Vec<(NaiveDateTime, String)> = entries
        .filter_map(|e| e.ok())
        .filter_map(|e| {
            let name = e.file_name().to_string_lossy().into_owned();
            parse_archive_timestamp(&name).map(|ts| (ts, name))
        })
        .filter(|(ts, _)| *ts >= midnight)
        .collect();
    candidates.sort();
    let Some((_, ts_name)) = candidates.into_iter().next() else {
        return Err(SnapshotError::NotFound(format!(
            "{}: no snapshot at or after {}",
            root.display(),
            key.date
        )));
    };
    let dist = root.join(&ts_name).join(key.dist_path());
    for format in [IndexFormat::Gzip, IndexFormat::Xz, IndexFormat::Plain] {
        let path = PathBuf::from(format!("{}{}", dist.display(), format.extension()));
        if path.is_file() {
            let bytes = fs::read(&path).map_err(|source| SnapshotError::Io {
                path: path.clone(),
                source,
            })?;
            return Ok(FetchedIndex {
                bytes,
                format,
                resolved_timestamp: Some(ts_name),
                source: path.display().to_string(),
            });
        }
    }
    Err(SnapshotError::NotFound(dist.display().to_string()))
}

/// Result of scanning a local corpus directory.
#[derive(Debug, Default)]
pub struct LocalMirror {
    /// Sorted by `(release, date)`.
    pub snapshots: Vec<MirrorSnapshot>,
    /// Directory-layout problems (unparsable names, missing index files).
    pub layout_diagnostics: Vec<String>,
}

/// Load a checked-in corpus shaped `<root>/<release>/<YYYY-MM-DD>/Packages[.gz|.xz]`.
/// Entries that do not fit the layout are skipped with a diagnostic. With the
/// `parallel` feature the per-file decompression and parsing fan out.
pub fn load_local_mirror(
    root: &Path,
    window: Option<StudyWindow>,
) -> Result<LocalMirror, SnapshotError> {
    let mut jobs: Vec<(SnapshotKey, PathBuf, IndexFormat)> = Vec::new();
    let mut layout_diagnostics = Vec::new();
    let releases = fs::read_dir(root).map_err(|source| SnapshotError::Io {
        path: root.to_path_buf(),
        source,
    })?;
    let mut release_dirs: Vec<PathBuf> = releases
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.is_dir())
        .collect();
    release_dirs.sort();
    for release_dir in release_dirs {
        let release = release_dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        let dates = fs::read_dir(&release_dir).map_err(|source| SnapshotError::Io {
            path: release_dir.clone(),
            source,
        })?;
        let mut date_dirs: Vec<PathBuf> = dates
            .filter_map(|e| e.ok())
            .map(|e| e.path())
            .filter(|p| p.is_dir())
            .collect();
        date_dirs.sort();
        for date_dir in date_dirs {
            let name = date_dir
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default();
            let Ok(date) = NaiveDate::parse_from_str(&name, "%Y-%m-%d") else {
                layout_diagnostics.push(format!(
                    "{}: directory name is not a date, skipped",
                    date_dir.display()
                ));
                continue;
            };
            if let Some(w) = window {
                if w.check(date).is_err() {
                    layout_diagnostics.push(format!(
                        "{}: outside study window, skipped",
                        date_dir.display()
                    ));
                    continue;
                }
            }
            let mut found = false;
            for format in [IndexFormat::Plain, IndexFormat::Gzip, IndexFormat::Xz] {
                let path = date_dir.join(format!("Packages{}", format.extension()));
                if path.is_file() {
                    jobs.push((SnapshotKey::new(release.clone(), date), path, format));
                    found = true;
                    break;
                }
            }
            if !found {
                layout_diagnostics.push(format!(
                    "{}: no Packages file, skipped",
                    date_dir.display()
                ));
            }
        }
    }

    let load_one = |(key, path, format): &(SnapshotKey, PathBuf, IndexFormat)| {
        let bytes = fs::read(path).map_err(|source| SnapshotError::Io {
            path: path.clone(),
            source,
        })?;
        parse_snapshot(key, &bytes, *format, None, path.display().to_string())
    };

    #[cfg(feature = "parallel")]
    let results: Vec<Result<MirrorSnapshot, SnapshotError>> = {
        use rayon::prelude::*;
        jobs.par_iter().map(load_one).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<Result<MirrorSnapshot, SnapshotError>> = jobs.iter().map(load_one).collect();

    let mut snapshots = Vec::with_capacity(results.len());
    for r in results {
        snapshots.push(r?);
    }
    snapshots.sort_by(|a, b| a.key.cmp(&b.key));
    Ok(LocalMirror {
        snapshots,
        layout_diagnostics,
    })
}

/// Parse many index texts sequentially. Counterpart of
/// [`parse_index_texts_par`]; the pair exists so the two strategies can be
/// compared directly.
pub fn parse_index_texts_seq(texts: &[String]) -> Vec<IndexParse> {
    texts.iter().map(|t| parse_packages_index(t)).collect()
}

/// Parse many index texts in parallel with rayon.
#[cfg(feature = "parallel")]
pub fn parse_index_texts_par(texts: &[String]) -> Vec<IndexParse> {
    use rayon::prelude::*;
    texts.par_iter().map(|t| parse_packages_index(t)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn gz(data: &[u8]) -> Vec<u8> {
        let mut enc = flate2::write::GzEncoder::new(Vec::new(), flate2::Compression::default());
        enc.write_all(data).unwrap();
        enc.finish().unwrap()
    }

    fn xz(data: &[u8]) -> Vec<u8> {
        let mut enc = xz2::write::XzEncoder::new(Vec::new(), 6);
        enc.write_all(data).unwrap();
        enc.finish().unwrap()
    }

    const STANZA: &str = "Package: foo\nVersion: 1.0-1\nArchitecture: amd64\n";

    #[test]
    fn detects_and_decompresses_all_formats() {
        for (bytes, format) in [
            (STANZA.as_bytes().to_vec(), IndexFormat::Plain),
            (gz(STANZA.as_bytes()), IndexFormat::Gzip),
            (xz(STANZA.as_bytes()), IndexFormat::Xz),
        ] {
            assert_eq!(detect_format(&bytes), format);
            assert_eq!(decompress_index(&bytes, format).unwrap(), STANZA);
        }
    }

    #[test]
    fn format_mismatch_is_corruption() {
        let err = decompress_index(STANZA.as_bytes(), IndexFormat::Gzip).unwrap_err();
        assert!(matches!(err, SnapshotError::CorruptArtifact { .. }));
        assert!(!err.is_retriable());
    }

    #[test]
    fn truncated_gzip_is_corruption() {
        let mut bytes = gz(STANZA.as_bytes());
        bytes.truncate(bytes.len() / 2);
        let err = decompress_index(&bytes, IndexFormat::Gzip).unwrap_err();
        assert!(matches!(err, SnapshotError::CorruptArtifact { .. }));
    }

    fn write_archive(root: &Path, ts: &str, key: &SnapshotKey, bytes: &[u8], ext: &str) {
        let dir = root
            .join(ts)
            .join("dists")
            .join(&key.release)
            .join(&key.component)
            .join(format!("binary-{}", key.architecture));
        fs::create_dir_all(&dir).unwrap();
        fs::write(dir.join(format!("Packages{ext}")), bytes).unwrap();
    }

    #[test]
    fn local_archive_resolves_first_snapshot_of_day() {
        let dir = tempfile::tempdir().unwrap();
        let key = SnapshotKey::new("buster", NaiveDate::from_ymd_opt(2020, 3, 1).unwrap());
        // Two snapshots the same day plus an earlier one; the 03:15 run wins.
        write_archive(dir.path(), "20200229T220000Z", &key, b"Package: old\nVersion: 1\nArchitecture: all\n", "");
        write_archive(dir.path(), "20200301T031500Z", &key, &gz(STANZA.as_bytes()), ".gz");
        write_archive(dir.path(), "20200301T091500Z", &key, b"Package: late\nVersion: 2\nArchitecture: all\n", "");
        let cache_dir = tempfile::tempdir().unwrap();
        let cache = BlobCache::new(cache_dir.path());
        let snap = fetch_index(&key, dir.path().to_str().unwrap(), &cache, None).unwrap();
        assert_eq!(snap.resolved_timestamp.as_deref(), Some("20200301T031500Z"));
        assert_eq!(snap.records.len(), 1);
        assert_eq!(snap.records[0].name, "foo");

        // Second call is served from cache even if the archive disappears.
        drop(dir);
        let again = fetch_index(&key, "/nonexistent/archive", &cache, None).unwrap();
        assert_eq!(again.records.len(), 1);
        assert_eq!(again.resolved_timestamp.as_deref(), Some("20200301T031500Z"));
    }

    #[test]
    fn missing_snapshot_is_retriable_not_found() {
        let dir = tempfile::tempdir().unwrap();
        let cache_dir = tempfile::tempdir().unwrap();
        let key = SnapshotKey::new("buster", NaiveDate::from_ymd_opt(2020, 3, 1).unwrap());
        let err = fetch_index(
            &key,
            dir.path().to_str().unwrap(),
            &BlobCache::new(cache_dir.path()),
            None,
        )
        .unwrap_err();
        assert!(matches!(err, SnapshotError::NotFound(_)));
        assert!(err.is_retriable());
    }

    #[test]
    fn window_violation_rejected() {
        let cache_dir = tempfile::tempdir().unwrap();
        let key = SnapshotKey::new("buster", NaiveDate::from_ymd_opt(2025, 1, 1).unwrap());
        let window = StudyWindow {
            from: NaiveDate::from_ymd_opt(2020, 1, 1).unwrap(),
            to: NaiveDate::from_ymd_opt(2022, 12, 31).unwrap(),
        };
        let err = fetch_index(&key, "/tmp", &BlobCache::new(cache_dir.path()), Some(window)).unwrap_err();
        assert!(matches!(err, SnapshotError::OutsideWindow { .. }));
    }

    #[test]
    fn local_mirror_layout_and_ordering() {
        let dir = tempfile::tempdir().unwrap();
        let mk = |rel: &str, date: &str, bytes: &[u8], name: &str| {
            let d = dir.path().join(rel).join(date);
            fs::create_dir_all(&d).unwrap();
            fs::write(d.join(name), bytes).unwrap();
        };
        mk("r2", "2021-06-01", STANZA.as_bytes(), "Packages");
        mk("r1", "2021-01-02", &gz(STANZA.as_bytes()), "Packages.gz");
        mk("r1", "2021-01-01", &xz(STANZA.as_bytes()), "Packages.xz");
        mk("r1", "not-a-date", STANZA.as_bytes(), "Packages");
        fs::create_dir_all(dir.path().join("r1").join("2021-01-03")).unwrap(); // empty

        let mirror = load_local_mirror(dir.path(), None).unwrap();
        let keys: Vec<String> = mirror.snapshots.iter().map(|s| s.key.to_string()).collect();
        assert_eq!(
            keys,
            vec![
                "r1/2021-01-01/main/amd64",
                "r1/2021-01-02/main/amd64",
                "r2/2021-06-01/main/amd64",
            ]
        );
        assert_eq!(mirror.layout_diagnostics.len(), 2);
    }

    #[test]
    fn seq_and_par_index_parsing_agree() {
        let texts: Vec<String> = (0..16)
            .map(|i| format!("Package: p{i}\nVersion: 1.{i}\nArchitecture: all\n"))
            .collect();
        let seq = parse_index_texts_seq(&texts);
        #[cfg(feature = "parallel")]
        {
            let par = parse_index_texts_par(&texts);
            assert_eq!(seq.len(), par.len());
            for (a, b) in seq.iter().zip(par.iter()) {
                assert_eq!(a.records, b.records);
            }
        }
        assert_eq!(seq.len(), 16);
    }
}
