//! `.deb` archive handling: a small Unix `ar` reader plus safe two-pass
//! extraction of the data tarball.
//!
//! A Debian binary package is an `ar` archive with members, in order:
//! `debian-binary` (format version), `control.tar.{gz,xz,zst}` and
//! `data.tar.{gz,xz,zst}`. Only the data member is extracted into the
//! workspace tree; the control member is parsed for metadata.

use std::io::Read;
use std::path::{Component, Path, PathBuf};

use super::WorkspaceError;

/// One member of an `ar` archive.
#[derive(Debug)]
pub struct ArMember {
    pub name: String,
    pub data: Vec<u8>,
}

const AR_MAGIC: &[u8] = b"!<arch>\n";

fn bad_archive(reason: impl Into<String>) -> WorkspaceError {
    WorkspaceError::BadArchive {
        reason: reason.into(),
    }
}

/// Parse a Unix `ar` archive: 8-byte global magic, then 60-byte member
/// headers (name 16, mtime 12, uid 6, gid 6, mode 8, size 10, magic 2) with
/// data padded to even offsets.
pub fn parse_ar(bytes: &[u8]) -> Result<Vec<ArMember>, WorkspaceError> {
    if !bytes.starts_with(AR_MAGIC) {
        return Err(bad_archive("missing ar magic `!<arch>`"));
    }
    let mut members = Vec::new();
    let mut pos = AR_MAGIC.len();
    while pos < bytes.len() {
        if pos + 60 > bytes.len() {
            return Err(bad_archive("truncated ar member header"));
        }
        let header = &bytes[pos..pos + 60];
        if &header[58..60] != b"\x60\n" {
            return Err(bad_archive("bad ar member header terminator"));
        }
        let name = std::str::from_utf8(&header[0..16])
            .map_err(|_| bad_archive("non-ASCII ar member name"))?
            .trim_end()
            .trim_end_matches('/')
            .to_string();
        let size: usize = std::str::from_utf8(&header[48..58])
            .ok()
            .map(str::trim)
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad_archive("bad ar member size"))?;
        pos += 60;
        if pos + size > bytes.len() {
            return Err(bad_archive(format!("truncated ar member `{name}`")));
        }
        members.push(ArMember {
            name,
            data: bytes[pos..pos + size].to_vec(),
        });
        pos += size + (size & 1); // members are 2-byte aligned
    }
    Ok(members)
}

fn decompress_member(name: &str, data: &[u8]) -> Result<Vec<u8>, WorkspaceError> {
    let mut out = Vec::new();
    let result = if name.ends_with(".gz") {
        flate2::read::GzDecoder::new(data).read_to_end(&mut out)
    } else if name.ends_with(".xz") {
        xz2::read::XzDecoder::new(data).read_to_end(&mut out)
    } else if name.ends_with(".zst") {
        zstd::stream::read::Decoder::new(data)
            .and_then(|mut d| d.read_to_end(&mut out))
    } else if name.ends_with(".tar") {
        out.extend_from_slice(data);
        Ok(data.len())
    } else {
        return Err(bad_archive(format!("unsupported compression on `{name}`")));
    };
    result.map_err(|e| bad_archive(format!("decompressing `{name}`: {e}")))?;
    Ok(out)
}

/// The two tarballs of a `.deb`, decompressed.
#[derive(Debug)]
pub struct DebPayload {
    pub control_tar: Vec<u8>,
    pub data_tar: Vec<u8>,
}

/// Split a `.deb` into its decompressed control and data tarballs,
/// validating the member set and the format version.
pub fn parse_deb(bytes: &[u8]) -> Result<DebPayload, WorkspaceError> {
    let members = parse_ar(bytes)?;
    let version = members
        .iter()
        .find(|m| m.name == "debian-binary")
        .ok_or_else(|| bad_archive("missing debian-binary member"))?;
    if !version.data.starts_with(b"2.0") {
        return Err(bad_archive("unsupported deb format version"));
    }
    let find = |prefix: &str| -> Result<&ArMember, WorkspaceError> {
        members
            .iter()
            .find(|m| m.name.starts_with(prefix))
            .ok_or_else(|| bad_archive(format!("missing {prefix}* member")))
    };
    let control = find("control.tar")?;
    let data = find("data.tar")?;
    Ok(DebPayload {
        control_tar: decompress_member(&control.name, &control.data)?,
        data_tar: decompress_member(&data.name, &data.data)?,
    })
}

/// The `./control` paragraph text from a `.deb`'s control tarball.
pub fn deb_control(bytes: &[u8]) -> Result<String, WorkspaceError> {
    let payload = parse_deb(bytes)?;
    let mut archive = tar::Archive::new(payload.control_tar.as_slice());
    for entry in archive
        .entries()
        .map_err(|e| bad_archive(format!("control tar: {e}")))?
    {
        let mut entry = entry.map_err(|e| bad_archive(format!("control tar: {e}")))?;
        let path = entry
            .path()
            .map_err(|e| bad_archive(format!("control tar path: {e}")))?
            .into_owned();
        if path.file_name().is_some_and(|f| f == "control") {
            let mut text = String::new();
            entry
                .read_to_string(&mut text)
                .map_err(|e| bad_archive(format!("control file: {e}")))?;
            return Ok(text);
        }
    }
    Err(bad_archive("control tarball has no control file"))
}

/// Reject absolute paths and any `..` component. Returns the path for
/// further use.
fn checked_entry_path(raw: &Path, entry_name: &str) -> Result<PathBuf, WorkspaceError> {
    let mut has_normal = false;
    for component in raw.components() {
        match component {
            Component::Normal(_) => has_normal = true,
            Component::CurDir => {}
            Component::ParentDir | Component::RootDir | Component::Prefix(_) => {
                return Err(WorkspaceError::PathEscape {
                    entry: entry_name.to_string(),
                });
            }
        }
    }
    if !has_normal {
        // "./" directory markers are harmless; map them to the root itself.
        return Ok(PathBuf::new());
    }
    Ok(raw.to_path_buf())
}

fn entry_display_name(entry: &tar::Entry<'_, &[u8]>) -> String {
    let bytes = entry.path_bytes();
    let mut name = String::from_utf8_lossy(&bytes).into_owned();
    if entry.header().entry_type().is_dir() && !name.ends_with('/') {
        name.push('/');
    }
    name
}

fn validate_data_tar(data_tar: &[u8]) -> Result<Vec<String>, WorkspaceError> {
    let mut archive = tar::Archive::new(data_tar);
    let mut names = Vec::new();
    for entry in archive
        .entries()
        .map_err(|e| bad_archive(format!("data tar: {e}")))?
    {
        let entry = entry.map_err(|e| bad_archive(format!("data tar: {e}")))?;
        let name = entry_display_name(&entry);
        let path = entry
            .path()
            .map_err(|e| bad_archive(format!("data tar path `{name}`: {e}")))?
            .into_owned();
        checked_entry_path(&path, &name)?;
        use tar::EntryType::*;
        match entry.header().entry_type() {
            Regular | Directory | Symlink | Link | GNUSparse | Continuous => {}
            other => {
                return Err(bad_archive(format!(
                    "unsupported entry type {other:?} for `{name}`"
                )))
            }
        }
        // Hardlink targets are in-archive paths and must obey the same rule.
        if entry.header().entry_type() == Link {
            if let Ok(Some(target)) = entry.link_name() {
                checked_entry_path(&target, &name)?;
            }
        }
        names.push(name);
    }
    Ok(names)
}

/// Extract the data tarball of a `.deb` under `dest_root`, preserving the
/// internal structure and symlinks. Runs a full validation pass first so a
/// malicious archive produces zero output; a mid-extraction I/O failure
/// removes what was already written.
pub fn extract_archive(deb: &[u8], dest_root: &Path) -> Result<Vec<String>, WorkspaceError> {
    let payload = parse_deb(deb)?;
    let names = validate_data_tar(&payload.data_tar)?;
    let mut archive = tar::Archive::new(payload.data_tar.as_slice());
    archive.set_preserve_permissions(true);
    archive.set_overwrite(true);
    let mut written: Vec<PathBuf> = Vec::new();
    let entries = archive
        .entries()
        .map_err(|e| bad_archive(format!("data tar: {e}")))?;
    for entry in entries {
        let result = (|| -> Result<Option<PathBuf>, WorkspaceError> {
            let mut entry = entry.map_err(|e| bad_archive(format!("data tar: {e}")))?;
            let name = entry_display_name(&entry);
            let raw = entry
                .path()
                .map_err(|e| bad_archive(format!("data tar path: {e}")))?
                .into_owned();
            let rel = checked_entry_path(&raw, &name)?;
            if rel.as_os_str().is_empty() {
                return Ok(None);
            }
            let unpacked = entry.unpack_in(dest_root).map_err(|e| {
                WorkspaceError::Extraction {
                    entry: name.clone(),
                    reason: e.to_string(),
                }
            })?;
            if !unpacked {
                return Err(WorkspaceError::PathEscape { entry: name });
            }
            Ok(Some(dest_root.join(rel)))
        })();
        match result {
            Ok(Some(path)) => written.push(path),
            Ok(None) => {}
            Err(e) => {
                for path in written.iter().rev() {
                    let meta = std::fs::symlink_metadata(path);
                    let _ = match meta {
                        Ok(m) if m.is_dir() => std::fs::remove_dir(path),
                        Ok(_) => std::fs::remove_file(path),
                        Err(_) => Ok(()),
                    };
                }
                return Err(e);
            }
        }
    }
    Ok(names)
}

/// Entry names of the data tarball in archive order, matching a plain tar
/// content listing of the reference tool's filesystem tarball output.
pub fn list_archive(deb: &[u8]) -> Result<Vec<String>, WorkspaceError> {
    let payload = parse_deb(deb)?;
    let mut archive = tar::Archive::new(payload.data_tar.as_slice());
    let mut names = Vec::new();
    for entry in archive
        .entries()
        .map_err(|e| bad_archive(format!("data tar: {e}")))?
    {
        let entry = entry.map_err(|e| bad_archive(format!("data tar: {e}")))?;
        names.push(entry_display_name(&entry));
    }
    Ok(names)
}
