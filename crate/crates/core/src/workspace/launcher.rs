//! Launcher synthesis: scan the workspace tree for shared-library and
//! executable directories and generate the `run.sh` entry script, with the
//! workspace paths ahead of the system paths. Desktop entries supply the
//! entry command when present.

use std::path::{Path, PathBuf};

use super::WorkspaceError;

fn io_err(path: &Path, source: std::io::Error) -> WorkspaceError {
    WorkspaceError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn walk_files(dir: &Path, out: &mut Vec<PathBuf>) -> Result<(), WorkspaceError> {
    let mut entries: Vec<_> = std::fs::read_dir(dir)
        .map_err(|e| io_err(dir, e))?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .collect();
    entries.sort();
    for path in entries {
        let meta = std::fs::symlink_metadata(&path).map_err(|e| io_err(&path, e))?;
        if meta.is_dir() {
            walk_files(&path, out)?;
        } else {
            out.push(path);
        }
    }
    Ok(())
}

/// A file whose name follows the shared-object pattern (`libfoo.so`,
/// `libfoo.so.3`, `libfoo.so.3.3.2`).
fn is_shared_object(name: &str) -> bool {
    name.ends_with(".so") || name.contains(".so.")
}

/// Directories discovered by scanning the extracted tree.
#[derive(Debug, Default, PartialEq, Eq)]
pub struct ScannedDirs {
    /// Relative directories containing shared objects, sorted.
    pub lib_dirs: Vec<PathBuf>,
    /// Relative `bin`/`sbin` directories containing at least one file, sorted.
    pub bin_dirs: Vec<PathBuf>,
}

/// Scan `root` for dynamic-linker and executable search directories. Library
/// directories are found by the shared-object naming pattern rather than a
/// hardcoded multiarch list.
pub fn scan_dirs(root: &Path) -> Result<ScannedDirs, WorkspaceError> {
    let mut files = Vec::new();
    if root.is_dir() {
        walk_files(root, &mut files)?;
    }
    let mut lib_dirs = std::collections::BTreeSet::new();
    let mut bin_dirs = std::collections::BTreeSet::new();
    for file in &files {
        let Ok(rel) = file.strip_prefix(root) else {
            continue;
        };
        let Some(parent) = rel.parent() else {
            continue;
        };
        let name = file.file_name().unwrap_or_default().to_string_lossy();
        if is_shared_object(&name) {
            lib_dirs.insert(parent.to_path_buf());
        }
        let dir_name = parent.file_name().unwrap_or_default();
        if dir_name == "bin" || dir_name == "sbin" {
            bin_dirs.insert(parent.to_path_buf());
        }
    }
    Ok(ScannedDirs {
        lib_dirs: lib_dirs.into_iter().collect(),
        bin_dirs: bin_dirs.into_iter().collect(),
    })
}

/// Generate the POSIX launcher at `<root>/run.sh`: workspace library and
/// binary directories are prepended (workspace-first) to the dynamic-linker
/// and command search paths, then the entry command is exec'd with
/// passthrough arguments. The variables only affect the launched process
/// tree. Returns the script path; with nothing to put on the paths the
/// script is still generated, carrying a warning comment.
pub fn create_environment(
    root: &Path,
    entry_command: Option<&str>,
) -> Result<PathBuf, WorkspaceError> {
    let dirs = scan_dirs(root)?;
    let joined = |paths: &[PathBuf]| -> String {
        paths
            .iter()
            .map(|p| format!("$CCENV_ROOT/{}", p.display()))
            .collect::<Vec<_>>()
            .join(":")
    };
    let mut script = String::new();
    script.push_str("#!/bin/sh\n");
    script.push_str("# ccenv workspace launcher: workspace paths take priority over system paths.\n");
    script.push_str("CCENV_ROOT=$(CDPATH= cd -- \"$(dirname -- \"$0\")\" && pwd)\n");
    if dirs.lib_dirs.is_empty() {
        script.push_str("# warning: no shared-library directories found under the workspace\n");
    } else {
        script.push_str(&format!(
            "LD_LIBRARY_PATH=\"{}${{LD_LIBRARY_PATH:+:$LD_LIBRARY_PATH}}\"\n",
            joined(&dirs.lib_dirs)
        ));
        script.push_str("export LD_LIBRARY_PATH\n");
    }
    if dirs.bin_dirs.is_empty() {
        script.push_str("# warning: no executable directories found under the workspace\n");
    } else {
        script.push_str(&format!("PATH=\"{}:$PATH\"\n", joined(&dirs.bin_dirs)));
        script.push_str("export PATH\n");
    }
    match entry_command {
        Some(cmd) => script.push_str(&format!("exec {cmd} \"$@\"\n")),
        None => {
            script.push_str("echo 'ccenv: no entry command configured for this workspace' >&2\n");
            script.push_str("exit 64\n");
        }
    }
    let path = root.join("run.sh");
    std::fs::write(&path, script).map_err(|e| io_err(&path, e))?;
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        std::fs::set_permissions(&path, std::fs::Permissions::from_mode(0o755))
            .map_err(|e| io_err(&path, e))?;
    }
    Ok(path)
}

/// Parsed desktop entry, reduced to what the launcher needs.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DesktopEntry {
    /// `Exec` value with field codes stripped; `None` when the key is absent.
    pub exec: Option<String>,
    pub try_exec: Option<String>,
}

/// Strip `%f %F %u %U %d %D %n %N %i %c %k %v %m` field codes from an Exec
/// value; `%%` collapses to a literal percent sign.
fn strip_field_codes(value: &str) -> String {
    const CODES: &[char] = &[
        'f', 'F', 'u', 'U', 'd', 'D', 'n', 'N', 'i', 'c', 'k', 'v', 'm',
    ];
    value
        .split_whitespace()
        .filter(|token| {
            !(token.len() == 2
                && token.starts_with('%')
                && token.ends_with(CODES))
        })
        .map(|token| token.replace("%%", "%"))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Parse a freedesktop-style desktop entry: the `[Desktop Entry]` group must
/// exist; `Exec` (field codes stripped) and `TryExec` are extracted. A
/// missing `Exec` is a no-entry result, not an error.
pub fn parse_desktop_entry(text: &str) -> Result<DesktopEntry, WorkspaceError> {
    let mut in_group = false;
    let mut seen_group = false;
    let mut entry = DesktopEntry::default();
    for line in text.lines() {
        let line = line.trim_end();
        if line.starts_with('[') {
            in_group = line == "[Desktop Entry]";
            seen_group |= in_group;
            continue;
        }
        if !in_group || line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            continue;
        };
        match key.trim() {
            "Exec" => entry.exec = Some(strip_field_codes(value.trim())),
            "TryExec" => entry.try_exec = Some(value.trim().to_string()),
            _ => {}
        }
    }
    if !seen_group {
        return Err(WorkspaceError::BadDesktopEntry {
            reason: "no [Desktop Entry] group".to_string(),
        });
    }
    Ok(entry)
}

/// All `.desktop` files under `root`, sorted lexicographically by path.
pub fn find_desktop_entries(root: &Path) -> Result<Vec<PathBuf>, WorkspaceError> {
    let mut files = Vec::new();
    if root.is_dir() {
        walk_files(root, &mut files)?;
    }
    let mut out: Vec<PathBuf> = files
        .into_iter()
        .filter(|p| p.extension().is_some_and(|x| x == "desktop"))
        .collect();
    out.sort();
    Ok(out)
}
