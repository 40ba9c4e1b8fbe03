use super::*;
use crate::cache::sha256_hex;
use crate::control::parse_packages_index;
use std::io::Write;

// ---- archive construction helpers -----------------------------------------

fn ar_bytes(members: &[(&str, &[u8])]) -> Vec<u8> {
    let mut out = b"!<arch>\n".to_vec();
    for (name, data) in members {
        let header = format!(
            "{:<16}{:<12}{:<6}{:<6}{:<8}{:<10}`\n",
            name,
            0,
            0,
            0,
            "100644",
            data.len()
        );
        out.extend(header.bytes());
        out.extend(*data);
        if data.len() % 2 == 1 {
            out.push(b'\n');
        }
    }
    out
}

fn gz(bytes: &[u8]) -> Vec<u8> {
    let mut enc = flate2::write::GzEncoder::new(Vec::new(), flate2::Compression::default());
    enc.write_all(bytes).unwrap();
    enc.finish().unwrap()
}

enum Entry<'a> {
    Dir(&'a str),
    File(&'a str, &'a [u8], u32),
    Symlink(&'a str, &'a str),
}

fn tar_bytes(entries: &[Entry<'_>]) -> Vec<u8> {
    let mut builder = tar::Builder::new(Vec::new());
    for entry in entries {
        match entry {
            Entry::Dir(path) => {
                let mut h = tar::Header::new_gnu();
                h.set_entry_type(tar::EntryType::Directory);
                h.set_size(0);
                h.set_mode(0o755);
                builder.append_data(&mut h, path, &[][..]).unwrap();
            }
            Entry::File(path, content, mode) => {
                let mut h = tar::Header::new_gnu();
                h.set_entry_type(tar::EntryType::Regular);
                h.set_size(content.len() as u64);
                h.set_mode(*mode);
                builder.append_data(&mut h, path, *content).unwrap();
            }
            Entry::Symlink(path, target) => {
                let mut h = tar::Header::new_gnu();
                h.set_entry_type(tar::EntryType::Symlink);
                h.set_size(0);
                h.set_mode(0o777);
                builder.append_link(&mut h, path, target).unwrap();
            }
        }
    }
    builder.into_inner().unwrap()
}

/// A raw v7 tar entry for names the safe builder refuses (escape tests).
fn raw_tar_entry(name: &str, content: &[u8]) -> Vec<u8> {
    let mut header = [0u8; 512];
    header[..name.len()].copy_from_slice(name.as_bytes());
    header[100..108].copy_from_slice(b"0000644\0");
    header[108..116].copy_from_slice(b"0000000\0");
    header[116..124].copy_from_slice(b"0000000\0");
    let size = format!("{:011o}\0", content.len());
    header[124..136].copy_from_slice(size.as_bytes());
    header[136..148].copy_from_slice(b"00000000000\0");
    header[156] = b'0';
    for b in &mut header[148..156] {
        *b = b' ';
    }
    let checksum: u32 = header.iter().map(|&b| u32::from(b)).sum();
    let chk = format!("{checksum:06o}\0 ");
    header[148..156].copy_from_slice(chk.as_bytes());
    let mut out = header.to_vec();
    out.extend_from_slice(content);
    let pad = (512 - content.len() % 512) % 512;
    out.extend(std::iter::repeat_n(0u8, pad));
    out
}

fn raw_tar(entries: &[(&str, &[u8])]) -> Vec<u8> {
    let mut out = Vec::new();
    for (name, content) in entries {
        out.extend(raw_tar_entry(name, content));
    }
    out.extend(std::iter::repeat_n(0u8, 1024));
    out
}

fn control_text(name: &str, version: &str) -> String {
    format!("Package: {name}\nVersion: {version}\nArchitecture: amd64\n")
}

fn build_deb(name: &str, version: &str, data_tar: &[u8]) -> Vec<u8> {
    let control_tar = tar_bytes(&[
        Entry::File("control", control_text(name, version).as_bytes(), 0o644),
    ]);
    ar_bytes(&[
        ("debian-binary", b"2.0\n"),
        ("control.tar.gz", &gz(&control_tar)),
        ("data.tar.gz", &gz(data_tar)),
    ])
}

fn simple_deb(name: &str, version: &str) -> Vec<u8> {
    let data = tar_bytes(&[
        Entry::Dir("usr/"),
        Entry::Dir("usr/share/"),
        Entry::File(
            &format!("usr/share/{name}.txt"),
            format!("{name} {version}").as_bytes(),
            0o644,
        ),
    ]);
    build_deb(name, version, &data)
}

// ---- ar / deb parsing ------------------------------------------------------

#[test]
fn ar_round_trip() {
    let bytes = ar_bytes(&[("debian-binary", b"2.0\n"), ("odd", b"abc")]);
    let members = parse_ar(&bytes).unwrap();
    assert_eq!(members.len(), 2);
    assert_eq!(members[0].name, "debian-binary");
    assert_eq!(members[0].data, b"2.0\n");
    assert_eq!(members[1].data, b"abc");
    assert!(parse_ar(b"not an archive").is_err());
    assert!(parse_ar(&bytes[..20]).is_err());
}

#[test]
fn deb_member_discipline() {
    let deb = simple_deb("demo", "1.0-1");
    let payload = parse_deb(&deb).unwrap();
    assert!(!payload.control_tar.is_empty());
    assert!(!payload.data_tar.is_empty());

    let no_data = ar_bytes(&[
        ("debian-binary", b"2.0\n"),
        ("control.tar.gz", &gz(&tar_bytes(&[]))),
    ]);
    let err = parse_deb(&no_data).unwrap_err();
    assert!(matches!(err, WorkspaceError::BadArchive { .. }), "{err}");

    let bad_version = ar_bytes(&[
        ("debian-binary", b"3.0\n"),
        ("control.tar.gz", &gz(&tar_bytes(&[]))),
        ("data.tar.gz", &gz(&tar_bytes(&[]))),
    ]);
    assert!(parse_deb(&bad_version).is_err());
}

#[test]
fn xz_and_zstd_members_decode() {
    let data_tar = tar_bytes(&[Entry::File("hello", b"hi", 0o644)]);
    let xz = {
        let mut enc = xz2::write::XzEncoder::new(Vec::new(), 6);
        enc.write_all(&data_tar).unwrap();
        enc.finish().unwrap()
    };
    let zst = zstd::stream::encode_all(&data_tar[..], 3).unwrap();
    let control_tar = tar_bytes(&[Entry::File("control", b"Package: x\n", 0o644)]);
    for (member, payload) in [("data.tar.xz", xz), ("data.tar.zst", zst)] {
        let deb = ar_bytes(&[
            ("debian-binary", b"2.0\n"),
            ("control.tar.gz", &gz(&control_tar)),
            (member, &payload),
        ]);
        let listing = list_archive(&deb).unwrap();
        assert_eq!(listing, vec!["hello".to_string()]);
    }
}

#[test]
fn control_stanza_extraction() {
    let deb = simple_deb("demo", "1.0-1");
    let control = deb_control(&deb).unwrap();
    assert!(control.contains("Package: demo"));
    assert!(control.contains("Version: 1.0-1"));
}

// ---- extraction ------------------------------------------------------------

#[test]
fn extraction_preserves_structure_modes_and_symlinks() {
    let data = tar_bytes(&[
        Entry::Dir("usr/"),
        Entry::Dir("usr/lib/"),
        Entry::File("usr/lib/libglow.so.3.3.2", b"elf bytes", 0o644),
        Entry::Symlink("usr/lib/libglow.so.3", "libglow.so.3.3.2"),
        Entry::Dir("usr/bin/"),
        Entry::File("usr/bin/glow-tool", b"#!/bin/sh\n", 0o755),
    ]);
    let deb = build_deb("libglow3", "3.3.2-1", &data);
    let dir = tempfile::tempdir().unwrap();
    let files = extract_archive(&deb, dir.path()).unwrap();
    assert_eq!(files.len(), 6);
    let lib = dir.path().join("usr/lib/libglow.so.3.3.2");
    assert_eq!(std::fs::read(&lib).unwrap(), b"elf bytes");
    let link = dir.path().join("usr/lib/libglow.so.3");
    assert_eq!(
        std::fs::read_link(&link).unwrap().to_str().unwrap(),
        "libglow.so.3.3.2"
    );
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        let mode = std::fs::metadata(dir.path().join("usr/bin/glow-tool"))
            .unwrap()
            .permissions()
            .mode();
        assert_eq!(mode & 0o777, 0o755);
    }
}

#[test]
fn escape_entries_rejected_with_zero_output() {
    for evil_name in ["../evil", "/evil", "a/../../evil"] {
        let data = raw_tar(&[("./ok", b"fine"), (evil_name, b"attack")]);
        let deb = build_deb("evil", "1.0-1", &data);
        let dir = tempfile::tempdir().unwrap();
        let err = extract_archive(&deb, dir.path()).unwrap_err();
        assert!(matches!(err, WorkspaceError::PathEscape { .. }), "{err}");
        assert_eq!(
            std::fs::read_dir(dir.path()).unwrap().count(),
            0,
            "partial output left for {evil_name}"
        );
    }
}

#[test]
fn listing_matches_archive_order() {
    let data = tar_bytes(&[
        Entry::Dir("usr/"),
        Entry::File("usr/zz", b"z", 0o644),
        Entry::File("usr/aa", b"a", 0o644),
    ]);
    let deb = build_deb("demo", "1.0-1", &data);
    assert_eq!(
        list_archive(&deb).unwrap(),
        vec!["usr/", "usr/zz", "usr/aa"]
    );
}

// ---- launcher & desktop entries ---------------------------------------------

#[test]
fn launcher_orders_workspace_paths_first() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::create_dir_all(dir.path().join("usr/lib/x86_64-linux-gnu")).unwrap();
    std::fs::create_dir_all(dir.path().join("usr/bin")).unwrap();
    std::fs::write(
        dir.path().join("usr/lib/x86_64-linux-gnu/libglow.so.3"),
        b"x",
    )
    .unwrap();
    std::fs::write(dir.path().join("usr/bin/borealis"), b"#!/bin/sh\n").unwrap();
    let script_path = create_environment(dir.path(), Some("borealis")).unwrap();
    let script = std::fs::read_to_string(&script_path).unwrap();
    assert!(script.starts_with("#!/bin/sh\n"));
    let lib_line = script
        .lines()
        .find(|l| l.starts_with("LD_LIBRARY_PATH="))
        .expect("lib path line");
    assert!(lib_line.contains("$CCENV_ROOT/usr/lib/x86_64-linux-gnu"));
    // Workspace entries come before any inherited value.
    assert!(
        lib_line.find("$CCENV_ROOT").unwrap()
            < lib_line.find("${LD_LIBRARY_PATH:+").unwrap()
    );
    let path_line = script
        .lines()
        .find(|l| l.starts_with("PATH="))
        .expect("PATH line");
    assert!(path_line.contains("$CCENV_ROOT/usr/bin:$PATH"));
    assert!(script.contains("exec borealis \"$@\""));
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        let mode = std::fs::metadata(&script_path).unwrap().permissions().mode();
        assert_eq!(mode & 0o111, 0o111);
    }
}

#[test]
fn empty_root_launcher_warns_and_fails_at_runtime() {
    let dir = tempfile::tempdir().unwrap();
    let script_path = create_environment(dir.path(), None).unwrap();
    let script = std::fs::read_to_string(&script_path).unwrap();
    assert!(script.contains("# warning: no shared-library directories"));
    assert!(script.contains("# warning: no executable directories"));
    assert!(script.contains("exit 64"));
    let status = std::process::Command::new("/bin/sh")
        .arg(&script_path)
        .stderr(std::process::Stdio::null())
        .status()
        .unwrap();
    assert!(!status.success());
}

#[test]
fn desktop_entry_field_codes() {
    let entry = parse_desktop_entry("[Desktop Entry]\nName=Borealis\nExec=borealis %U\n").unwrap();
    assert_eq!(entry.exec.as_deref(), Some("borealis"));
    let entry =
        parse_desktop_entry("[Desktop Entry]\nExec=show %f --pct %% done\nTryExec=/usr/bin/show\n")
            .unwrap();
    assert_eq!(entry.exec.as_deref(), Some("show --pct % done"));
    assert_eq!(entry.try_exec.as_deref(), Some("/usr/bin/show"));
    let entry = parse_desktop_entry("[Desktop Entry]\nName=NoExec\n").unwrap();
    assert_eq!(entry.exec, None);
    assert!(parse_desktop_entry("[Other Group]\nExec=x\n").is_err());
    // Keys outside the Desktop Entry group are ignored.
    let entry =
        parse_desktop_entry("[Desktop Entry]\nExec=real\n[Desktop Action x]\nExec=other\n")
            .unwrap();
    assert_eq!(entry.exec.as_deref(), Some("real"));
}

// ---- resolution -------------------------------------------------------------

fn stanza(name: &str, version: &str, extra: &str) -> String {
    let mut s = format!("Package: {name}\nVersion: {version}\nArchitecture: amd64\n");
    if !extra.is_empty() {
        s.push_str(extra);
        if !extra.ends_with('\n') {
            s.push('\n');
        }
    }
    s.push('\n');
    s
}

fn records(stanzas: &[String]) -> Vec<crate::control::PackageRecord> {
    let text = stanzas.concat();
    let parsed = parse_packages_index(&text);
    assert!(parsed.diagnostics.is_empty(), "{:?}", parsed.diagnostics);
    parsed.records
}

#[test]
fn diamond_closure_pins_each_name_once() {
    let recs = records(&[
        stanza("aa", "1.0-1", "Depends: bb, cc"),
        stanza("bb", "1.0-1", "Depends: dd"),
        stanza("cc", "1.0-1", "Depends: dd"),
        stanza("dd", "1.0-1", ""),
    ]);
    let index = InstallIndex::new("r1", &recs);
    let plan = resolve("aa", &index, &ResolvePolicy::default()).unwrap();
    let names: Vec<&str> = plan.pins.iter().map(|p| p.name.as_str()).collect();
    assert_eq!(names, vec!["aa", "bb", "cc", "dd"]);
    assert!(plan.unresolved.is_empty());
    assert_eq!(plan.pin("aa").unwrap().depends, vec!["bb", "cc"]);
    assert_eq!(plan.pin("bb").unwrap().depends, vec!["dd"]);
    assert_eq!(plan.pin("dd").unwrap().depends, Vec::<String>::new());
    assert!(check_closure(&plan, &index).is_empty());
}

#[test]
fn no_dependency_root_plans_itself() {
    let recs = records(&[stanza("solo", "2.0-1", "")]);
    let index = InstallIndex::new("r1", &recs);
    let plan = resolve("solo", &index, &ResolvePolicy::default()).unwrap();
    assert_eq!(plan.pins.len(), 1);
    assert_eq!(plan.pins[0].name, "solo");
    assert!(plan.unresolved.is_empty());
}

#[test]
fn first_listed_alternative_wins_and_policy_overrides() {
    let recs = records(&[
        stanza("app", "1.0-1", "Depends: first-dep | second-dep"),
        stanza("first-dep", "1.0-1", ""),
        stanza("second-dep", "1.0-1", ""),
    ]);
    let index = InstallIndex::new("r1", &recs);
    let plan = resolve("app", &index, &ResolvePolicy::default()).unwrap();
    assert!(plan.pin("first-dep").is_some());
    assert!(plan.pin("second-dep").is_none());

    let policy = ResolvePolicy {
        prefer: BTreeSet::from(["second-dep".to_string()]),
    };
    let plan = resolve("app", &index, &policy).unwrap();
    assert!(plan.pin("second-dep").is_some());
    assert!(plan.pin("first-dep").is_none());
}

#[test]
fn unresolvable_first_alternative_falls_through() {
    let recs = records(&[
        stanza("app", "1.0-1", "Depends: ghost | real-dep"),
        stanza("real-dep", "1.0-1", ""),
    ]);
    let index = InstallIndex::new("r1", &recs);
    let plan = resolve("app", &index, &ResolvePolicy::default()).unwrap();
    assert!(plan.pin("real-dep").is_some());
    assert!(plan.unresolved.is_empty());
}

#[test]
fn virtual_name_pins_a_provider() {
    let recs = records(&[
        stanza("app", "1.0-1", "Depends: mail-agent"),
        stanza("postfix-lite", "3.5-1", "Provides: mail-agent"),
        stanza("zz-mailer", "1.0-1", "Provides: mail-agent"),
    ]);
    let index = InstallIndex::new("r1", &recs);
    let plan = resolve("app", &index, &ResolvePolicy::default()).unwrap();
    // First provider in name order.
    assert!(plan.pin("postfix-lite").is_some());
    assert!(plan.pin("zz-mailer").is_none());
    assert!(check_closure(&plan, &index).is_empty());

    // A versioned constraint on a purely virtual name cannot resolve.
    let recs = records(&[
        stanza("app", "1.0-1", "Depends: mail-agent (>= 2.0)"),
        stanza("postfix-lite", "3.5-1", "Provides: mail-agent"),
    ]);
    let index = InstallIndex::new("r1", &recs);
    let plan = resolve("app", &index, &ResolvePolicy::default()).unwrap();
    assert_eq!(plan.unresolved, vec!["mail-agent (>= 2.0)".to_string()]);
    assert!(plan.require_complete().is_err());
}

#[test]
fn version_gate_matches_index_version() {
    let app = stanza("borealis", "0.9-1", "Depends: glow (>= 3.3)");
    let newer = records(&[app.clone(), stanza("glow", "3.3.2", "")]);
    let index = InstallIndex::new("r2", &newer);
    let plan = resolve("borealis", &index, &ResolvePolicy::default()).unwrap();
    assert_eq!(plan.pin("glow").unwrap().version.to_string(), "3.3.2");

    let older = records(&[app, stanza("glow", "3.0.4-1", "")]);
    let index = InstallIndex::new("r1", &older);
    let plan = resolve("borealis", &index, &ResolvePolicy::default()).unwrap();
    assert_eq!(plan.unresolved, vec!["glow (>= 3.3)".to_string()]);
}

#[test]
fn missing_root_is_not_found() {
    let recs = records(&[stanza("aa", "1.0-1", "")]);
    let index = InstallIndex::new("r1", &recs);
    let err = resolve("zz", &index, &ResolvePolicy::default()).unwrap_err();
    assert!(matches!(err, WorkspaceError::NotFound { .. }));
}

#[test]
fn closure_checker_is_independent_of_resolver() {
    let recs = records(&[
        stanza("aa", "1.0-1", "Depends: bb (>= 1.0)"),
        stanza("bb", "1.0-1", ""),
    ]);
    let index = InstallIndex::new("r1", &recs);
    let mut plan = resolve("aa", &index, &ResolvePolicy::default()).unwrap();
    assert!(check_closure(&plan, &index).is_empty());
    plan.pins.retain(|p| p.name != "bb");
    let failures = check_closure(&plan, &index);
    assert_eq!(failures, vec!["aa: bb (>= 1.0)".to_string()]);
}

#[test]
fn pre_depends_are_part_of_the_closure() {
    let recs = records(&[
        stanza("app", "1.0-1", "Pre-Depends: loader\nDepends: lib-one"),
        stanza("loader", "1.0-1", ""),
        stanza("lib-one", "1.0-1", ""),
    ]);
    let index = InstallIndex::new("r1", &recs);
    let plan = resolve("app", &index, &ResolvePolicy::default()).unwrap();
    assert!(plan.pin("loader").is_some());
    assert!(plan.pin("lib-one").is_some());
}

// ---- download & cache --------------------------------------------------------

struct Mirror {
    dir: tempfile::TempDir,
    stanzas: Vec<String>,
}

impl Mirror {
    fn new() -> Self {
        Mirror {
            dir: tempfile::tempdir().unwrap(),
            stanzas: Vec::new(),
        }
    }

    fn add(&mut self, name: &str, version: &str, extra: &str, deb: &[u8]) {
        let rel = format!("pool/{name}_{version}_amd64.deb");
        let path = self.dir.path().join(&rel);
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, deb).unwrap();
        let mut extra = extra.to_string();
        extra.push_str(&format!(
            "Filename: {rel}\nSize: {}\nSHA256: {}\n",
            deb.len(),
            sha256_hex(deb)
        ));
        self.stanzas.push(stanza(name, version, &extra));
    }

    fn base(&self) -> &str {
        self.dir.path().to_str().unwrap()
    }

    fn records(&self) -> Vec<crate::control::PackageRecord> {
        records(&self.stanzas)
    }
}

#[test]
fn download_verifies_and_serves_from_cache() {
    let mut mirror = Mirror::new();
    mirror.add("solo", "1.0-1", "", &simple_deb("solo", "1.0-1"));
    let recs = mirror.records();
    let index = InstallIndex::new("r1", &recs);
    let plan = resolve("solo", &index, &ResolvePolicy::default()).unwrap();
    let cache_dir = tempfile::tempdir().unwrap();
    let cache = BlobCache::new(cache_dir.path());

    let files = download(&plan, mirror.base(), &cache).unwrap();
    assert_eq!(files.len(), 1);
    assert!(files[0].exists());

    // Warm cache: wipe the mirror pool, the download must still succeed.
    std::fs::remove_dir_all(mirror.dir.path().join("pool")).unwrap();
    let again = download(&plan, mirror.base(), &cache).unwrap();
    assert_eq!(files, again);
}

#[test]
fn checksum_mismatch_is_corrupt_artifact() {
    let mut mirror = Mirror::new();
    mirror.add("solo", "1.0-1", "", &simple_deb("solo", "1.0-1"));
    let recs = mirror.records();
    let index = InstallIndex::new("r1", &recs);
    let mut plan = resolve("solo", &index, &ResolvePolicy::default()).unwrap();
    plan.pins[0].sha256 = Some("0".repeat(64));
    let cache_dir = tempfile::tempdir().unwrap();
    let cache = BlobCache::new(cache_dir.path());
    let err = download(&plan, mirror.base(), &cache).unwrap_err();
    assert!(matches!(err, WorkspaceError::CorruptArtifact { .. }), "{err}");
}

// ---- install / sbom / remove ---------------------------------------------------

fn demo_mirror() -> Mirror {
    let mut mirror = Mirror::new();
    let app_data = tar_bytes(&[
        Entry::Dir("usr/"),
        Entry::Dir("usr/bin/"),
        Entry::File("usr/bin/borealis", b"#!/bin/sh\necho borealis\n", 0o755),
        Entry::Dir("usr/share/"),
        Entry::Dir("usr/share/applications/"),
        Entry::File(
            "usr/share/applications/borealis.desktop",
            b"[Desktop Entry]\nName=Borealis\nExec=borealis %U\n",
            0o644,
        ),
    ]);
    let lib_data = tar_bytes(&[
        Entry::Dir("usr/"),
        Entry::Dir("usr/lib/"),
        Entry::File("usr/lib/libglow.so.3.3.2", b"glow elf", 0o644),
        Entry::Symlink("usr/lib/libglow.so.3", "libglow.so.3.3.2"),
    ]);
    mirror.add(
        "borealis",
        "0.9-1",
        "Depends: glow (>= 3.3)\n",
        &build_deb("borealis", "0.9-1", &app_data),
    );
    mirror.add("glow", "3.3.2", "", &build_deb("glow", "3.3.2", &lib_data));
    mirror
}

fn date(s: &str) -> NaiveDate {
    NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap()
}

#[test]
fn install_reinstall_and_remove_round_trip() {
    let mirror = demo_mirror();
    let recs = mirror.records();
    let index = InstallIndex::new("r2", &recs);
    let cache_dir = tempfile::tempdir().unwrap();
    let cache = BlobCache::new(cache_dir.path());
    let ws_parent = tempfile::tempdir().unwrap();
    let dest = ws_parent.path().join("borealis-ws");

    let workspace = install(
        "borealis",
        &index,
        &ResolvePolicy::default(),
        InstallOptions {
            mirror_base: mirror.base(),
            cache: &cache,
            dest: &dest,
            as_of: date("2021-06-02"),
        },
    )
    .unwrap();

    assert_eq!(workspace.entry_command.as_deref(), Some("borealis"));
    assert_eq!(workspace.plan.pins.len(), 2);
    assert!(dest.join("usr/bin/borealis").is_file());
    assert!(dest.join("usr/lib/libglow.so.3.3.2").is_file());
    assert!(dest.join(LAUNCHER_FILE).is_file());
    assert!(dest.join(SBOM_FILE).is_file());
    assert!(dest.join(MANIFEST_FILE).is_file());
    assert!(check_closure(&workspace.plan, &index).is_empty());

    let sbom = read_sbom(&workspace.sbom).unwrap();
    assert_eq!(sbom.created, "2021-06-02");
    assert_eq!(sbom.components.len(), 2);
    assert_eq!(sbom.components[0].name, "borealis");
    assert_eq!(sbom.components[0].depends, vec!["glow"]);

    let manifest = read_manifest(&dest).unwrap();
    assert_eq!(manifest.plan, workspace.plan);
    assert_eq!(
        manifest.desktop_entries,
        vec!["usr/share/applications/borealis.desktop".to_string()]
    );

    let digest_one = tree_digest(&dest).unwrap();

    // Replaying the SBOM reproduces an identical tree.
    let dest_two = ws_parent.path().join("borealis-replay");
    let replay = install_from_sbom(&sbom, mirror.base(), &cache, &dest_two).unwrap();
    assert_eq!(replay.plan.pins, workspace.plan.pins);
    let digest_two = tree_digest(&dest_two).unwrap();
    assert_eq!(digest_one, digest_two);
    assert_eq!(
        std::fs::read(dest.join(SBOM_FILE)).unwrap(),
        std::fs::read(dest_two.join(SBOM_FILE)).unwrap()
    );

    remove_workspace(&dest).unwrap();
    assert!(!dest.exists());
    remove_workspace(&dest).unwrap(); // idempotent

    let plain = ws_parent.path().join("unrelated");
    std::fs::create_dir_all(plain.join("data")).unwrap();
    let err = remove_workspace(&plain).unwrap_err();
    assert!(matches!(err, WorkspaceError::NotAWorkspace(_)));
    assert!(plain.join("data").is_dir());
}

#[test]
fn install_refuses_nonempty_destination() {
    let mirror = demo_mirror();
    let recs = mirror.records();
    let index = InstallIndex::new("r2", &recs);
    let cache_dir = tempfile::tempdir().unwrap();
    let cache = BlobCache::new(cache_dir.path());
    let ws = tempfile::tempdir().unwrap();
    std::fs::write(ws.path().join("keep.txt"), b"mine").unwrap();
    let err = install(
        "borealis",
        &index,
        &ResolvePolicy::default(),
        InstallOptions {
            mirror_base: mirror.base(),
            cache: &cache,
            dest: ws.path(),
            as_of: date("2021-06-02"),
        },
    )
    .unwrap_err();
    assert!(matches!(err, WorkspaceError::DestNotEmpty(_)));
    assert!(ws.path().join("keep.txt").is_file());
}

#[test]
fn control_mismatch_aborts_and_cleans_up() {
    let mut mirror = Mirror::new();
    // The archive claims a different name than the index stanza.
    mirror.add("solo", "1.0-1", "", &simple_deb("other", "1.0-1"));
    let recs = mirror.records();
    let index = InstallIndex::new("r1", &recs);
    let cache_dir = tempfile::tempdir().unwrap();
    let cache = BlobCache::new(cache_dir.path());
    let parent = tempfile::tempdir().unwrap();
    let dest = parent.path().join("ws");
    let err = install(
        "solo",
        &index,
        &ResolvePolicy::default(),
        InstallOptions {
            mirror_base: mirror.base(),
            cache: &cache,
            dest: &dest,
            as_of: date("2021-01-01"),
        },
    )
    .unwrap_err();
    assert!(matches!(err, WorkspaceError::CorruptArtifact { .. }), "{err}");
    assert!(!dest.exists());
}

#[test]
fn incomplete_plan_refuses_install() {
    let mut mirror = Mirror::new();
    mirror.add(
        "needy",
        "1.0-1",
        "Depends: absent-lib\n",
        &simple_deb("needy", "1.0-1"),
    );
    let recs = mirror.records();
    let index = InstallIndex::new("r1", &recs);
    let cache_dir = tempfile::tempdir().unwrap();
    let cache = BlobCache::new(cache_dir.path());
    let parent = tempfile::tempdir().unwrap();
    let dest = parent.path().join("ws");
    let err = install(
        "needy",
        &index,
        &ResolvePolicy::default(),
        InstallOptions {
            mirror_base: mirror.base(),
            cache: &cache,
            dest: &dest,
            as_of: date("2021-01-01"),
        },
    )
    .unwrap_err();
    match err {
        WorkspaceError::Incomplete(atoms) => assert_eq!(atoms, vec!["absent-lib".to_string()]),
        other => panic!("unexpected error {other}"),
    }
    assert!(!dest.exists());
}

#[test]
fn index_from_snapshots_picks_date() {
    use crate::snapshot::SnapshotKey;
    let mk = |day: &str, version: &str| crate::snapshot::MirrorSnapshot {
        key: SnapshotKey::new("r2", date(day)),
        resolved_timestamp: None,
        source: "test".to_string(),
        records: records(&[stanza("glow", version, "")]),
        diagnostics: vec![],
    };
    let snaps = vec![mk("2021-06-01", "3.0.4-1"), mk("2021-06-02", "3.3.2")];
    let latest = InstallIndex::from_snapshots("r2", &snaps, None).unwrap();
    assert_eq!(latest.record("glow").unwrap().version.to_string(), "3.3.2");
    let dated = InstallIndex::from_snapshots("r2", &snaps, Some(date("2021-06-01"))).unwrap();
    assert_eq!(dated.record("glow").unwrap().version.to_string(), "3.0.4-1");
    assert!(InstallIndex::from_snapshots("r9", &snaps, None).is_err());
}

#[test]
fn tree_digest_tracks_content_and_layout() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::create_dir_all(dir.path().join("a")).unwrap();
    std::fs::write(dir.path().join("a/file"), b"one").unwrap();
    let d1 = tree_digest(dir.path()).unwrap();
    let d1_again = tree_digest(dir.path()).unwrap();
    assert_eq!(d1, d1_again);
    std::fs::write(dir.path().join("a/file"), b"two").unwrap();
    assert_ne!(d1, tree_digest(dir.path()).unwrap());
}
