//! Content-addressed blob cache.
//!
//! Blobs live under `<root>/blobs/sha256/<hex>`; logical entries (snapshot
//! indices, downloaded archives) are small JSON sidecars that point at a blob
//! by digest. Writes go through a temp file plus atomic rename so concurrent
//! writers of the same key cannot interleave, and reads re-verify the digest
//! so silent corruption surfaces as an error instead of bad data.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{de::DeserializeOwned, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CacheError {
    #[error("cache I/O at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("corrupt cache blob {digest}: stored bytes hash to {actual}")]
    CorruptBlob { digest: String, actual: String },
    #[error("corrupt cache sidecar {path}: {message}")]
    CorruptSidecar { path: PathBuf, message: String },
}

/// Hex-encoded SHA-256 of a byte slice.
pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    format!("{:x}", hasher.finalize())
}

#[derive(Debug, Clone)]
pub struct BlobCache {
    root: PathBuf,
}

impl BlobCache {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        BlobCache { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn blob_path(&self, digest: &str) -> PathBuf {
        self.root.join("blobs").join("sha256").join(digest)
    }

    fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CacheError + '_ {
        move |source| CacheError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// Store bytes, returning their digest. Idempotent: an existing blob with
    /// the same digest is left untouched.
    pub fn put_blob(&self, bytes: &[u8]) -> Result<String, CacheError> {
        let digest = sha256_hex(bytes);
        let path = self.blob_path(&digest);
        if path.exists() {
            return Ok(digest);
        }
        let dir = path.parent().expect("blob path has a parent");
        fs::create_dir_all(dir).map_err(Self::io_err(dir))?;
        let tmp = path.with_extension(format!("tmp{}", std::process::id()));
        fs::write(&tmp, bytes).map_err(Self::io_err(&tmp))?;
        fs::rename(&tmp, &path).map_err(Self::io_err(&path))?;
        Ok(digest)
    }

    /// Load a blob and verify its digest. A mismatch removes the bad file and
    /// reports corruption so the caller can re-fetch.
    pub fn get_blob(&self, digest: &str) -> Result<Option<Vec<u8>>, CacheError> {
        let path = self.blob_path(digest);
        let bytes = match fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(CacheError::Io { path, source: e }),
        };
        let actual = sha256_hex(&bytes);
        if actual != digest {
            let _ = fs::remove_file(&path);
            return Err(CacheError::CorruptBlob {
                digest: digest.to_string(),
                actual,
            });
        }
        Ok(Some(bytes))
    }

    /// Path a blob would live at (for handing files to consumers that want a
    /// filesystem path); verifies existence and digest first.
    pub fn blob_file(&self, digest: &str) -> Result<Option<PathBuf>, CacheError> {
        match self.get_blob(digest)? {
            Some(_) => Ok(Some(self.blob_path(digest))),
            None => Ok(None),
        }
    }

    fn sidecar_path(&self, namespace: &str, key: &str) -> PathBuf {
        self.root.join(namespace).join(format!("{key}.json"))
    }

    /// Write a JSON sidecar under `<root>/<namespace>/<key>.json`.
    pub fn put_sidecar<T: Serialize>(
        &self,
        namespace: &str,
        key: &str,
        value: &T,
    ) -> Result<(), CacheError> {
        let path = self.sidecar_path(namespace, key);
        let dir = path.parent().expect("sidecar path has a parent");
        fs::create_dir_all(dir).map_err(Self::io_err(dir))?;
        let json = serde_json::to_vec_pretty(value).expect("sidecar serializes");
        let tmp = path.with_extension(format!("tmp{}", std::process::id()));
        fs::write(&tmp, json).map_err(Self::io_err(&tmp))?;
        fs::rename(&tmp, &path).map_err(Self::io_err(&path))?;
        Ok(())
    }

    pub fn get_sidecar<T: DeserializeOwned>(
        &self,
        namespace: &str,
        key: &str,
    ) -> Result<Option<T>, CacheError> {
        let path = self.sidecar_path(namespace, key);
        let bytes = match fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(CacheError::Io { path, source: e }),
        };
        match serde_json::from_slice(&bytes) {
            Ok(v) => Ok(Some(v)),
            Err(e) => Err(CacheError::CorruptSidecar {
                path,
                message: e.to_string(),
            }),
        }
    }

    /// Drop a sidecar (e.g. after its blob turned out corrupt). Missing is fine.
    pub fn remove_sidecar(&self, namespace: &str, key: &str) -> Result<(), CacheError> {
        let path = self.sidecar_path(namespace, key);
        match fs::remove_file(&path) {
            Ok(()) => Ok(()),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(()),
            Err(e) => Err(CacheError::Io { path, source: e }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blob_round_trip_and_idempotence() {
        let dir = tempfile::tempdir().unwrap();
        let cache = BlobCache::new(dir.path());
        let digest = cache.put_blob(b"hello").unwrap();
        assert_eq!(cache.put_blob(b"hello").unwrap(), digest);
        assert_eq!(cache.get_blob(&digest).unwrap().unwrap(), b"hello");
        assert!(cache.get_blob(&sha256_hex(b"other")).unwrap().is_none());
    }

    #[test]
    fn corrupt_blob_detected_and_evicted() {
        let dir = tempfile::tempdir().unwrap();
        let cache = BlobCache::new(dir.path());
        let digest = cache.put_blob(b"payload").unwrap();
        let path = dir.path().join("blobs").join("sha256").join(&digest);
        fs::write(&path, b"tampered").unwrap();
        assert!(matches!(
            cache.get_blob(&digest),
            Err(CacheError::CorruptBlob { .. })
        ));
        // The bad file is gone, so the next read is a clean miss.
        assert!(cache.get_blob(&digest).unwrap().is_none());
    }

    #[test]
    fn sidecar_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let cache = BlobCache::new(dir.path());
        cache
            .put_sidecar("indices", "r1_2021-01-01", &serde_json::json!({"a": 1}))
            .unwrap();
        let v: serde_json::Value = cache.get_sidecar("indices", "r1_2021-01-01").unwrap().unwrap();
        assert_eq!(v["a"], 1);
        cache.remove_sidecar("indices", "r1_2021-01-01").unwrap();
        assert!(cache
            .get_sidecar::<serde_json::Value>("indices", "r1_2021-01-01")
            .unwrap()
            .is_none());
    }
}
