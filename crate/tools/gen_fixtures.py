#!/usr/bin/env python3
"""Generate the committed fixture corpus: a three-release mirror with daily
Packages indices, installable .deb files built by dpkg-deb (with golden
content listings from its filesystem-tarball mode), path-escape archives,
CVE feeds in both supported shapes, publish dates, release milestones, and a
small HTTP-served index.

Run from the repository root:  python3 tools/gen_fixtures.py
"""

import gzip
import hashlib
import io
import json
import lzma
import os
import shutil
import subprocess
import sys
import tarfile
import time

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
FIX = os.path.join(ROOT, "fixtures")
MIRROR = os.path.join(FIX, "mirror")
POOL = os.path.join(MIRROR, "pool")
EPOCH = 1622592000  # 2021-06-02, keeps archive timestamps stable

# --------------------------------------------------------------------------
# Corpus definition.
#
# Each entry: (release, name, [(first_date, version)], fields). A package is
# present from its first listed date onward; later (date, version) pairs are
# upgrades. `fields` are extra stanza fields (Depends, Provides, Source...).

R1 = "r1"
R2 = "r2"
R3 = "r3"

DATES = {
    R1: ["2021-01-01", "2021-01-02", "2021-01-03"],
    R2: ["2021-06-01", "2021-06-02"],
    R3: ["2022-01-01", "2022-01-02"],
}

COMPRESSION = {
    (R1, "2021-01-01"): "gz",
    (R1, "2021-01-02"): "xz",
    (R1, "2021-01-03"): "plain",
    (R2, "2021-06-01"): "gz",
    (R2, "2021-06-02"): "gz",
    (R3, "2022-01-01"): "xz",
    (R3, "2022-01-02"): "plain",
}


def pkg(release, name, versions, **fields):
    return {
        "release": release,
        "name": name,
        "versions": versions,
        "fields": fields,
    }


CORPUS = [
    # --- the glow / demo-app install scenario ------------------------------
    pkg(R1, "glow", [("2021-01-01", "3.0.3"), ("2021-01-02", "3.0.4-1")],
        Description="ambient lighting library"),
    pkg(R2, "glow", [("2021-06-01", "3.3.2")],
        Description="ambient lighting library"),
    pkg(R3, "glow", [("2022-01-01", "3.4.0")],
        Description="ambient lighting library"),
    pkg(R1, "demo-app", [("2021-01-01", "1.0-1")],
        Depends="glow (>= 3.0), libbar | libbaz", **{"Pre-Depends": "prelib"},
        Description="demonstration application"),
    pkg(R2, "demo-app", [("2021-06-01", "1.2-1")],
        Depends="glow (>= 3.3), libbar | libbaz", **{"Pre-Depends": "prelib"},
        Description="demonstration application"),
    pkg(R3, "demo-app", [("2022-01-01", "1.3-1")],
        Depends="glow (>= 3.3), libbar | libbaz", **{"Pre-Depends": "prelib"},
        Description="demonstration application"),
    pkg(R1, "libbar", [("2021-01-01", "1.7-1"), ("2021-01-02", "1.8-1")],
        Description="bar support library"),
    pkg(R2, "libbar", [("2021-06-01", "2.0-1")],
        Description="bar support library"),
    pkg(R3, "libbar", [("2022-01-01", "2.2-1")],
        Description="bar support library"),
    pkg(R1, "libbaz", [("2021-01-01", "1.4-1")],
        Description="baz support library"),
    pkg(R2, "libbaz", [("2021-06-01", "1.5-1")],
        Description="baz support library"),
    pkg(R3, "libbaz", [("2022-01-01", "2.1-1")],
        Description="baz support library"),
    pkg(R1, "prelib", [("2021-01-01", "1.0-1")],
        Description="preload helper library"),
    pkg(R2, "prelib", [("2021-06-01", "1.0-2")],
        Description="preload helper library"),
    pkg(R3, "prelib", [("2022-01-01", "1.1-1")],
        Description="preload helper library"),

    # --- the libxslt security storyline ------------------------------------
    pkg(R1, "libxslt", [("2021-01-01", "1.1.34-1")],
        Description="XSLT 1.0 processing library"),
    pkg(R2, "libxslt", [("2021-06-01", "1.1.34-1"), ("2021-06-02", "1.1.35-1")],
        Description="XSLT 1.0 processing library"),
    pkg(R3, "libxslt", [("2022-01-01", "1.1.35-1")],
        Description="XSLT 1.0 processing library"),
    pkg(R1, "xslt-proc", [("2021-01-01", "1.0-1")], Depends="libxslt",
        Description="command line XSLT processor"),
    pkg(R2, "xslt-proc", [("2021-06-01", "1.0-2")], Depends="libxslt",
        Description="command line XSLT processor"),
    pkg(R3, "xslt-proc", [("2022-01-01", "1.1-1")], Depends="libxslt",
        Description="command line XSLT processor"),
    pkg(R1, "doc-builder", [("2021-01-01", "1.0-1")], Depends="xslt-proc",
        Description="documentation build tool"),
    pkg(R2, "doc-builder", [("2021-06-01", "1.0-1")], Depends="xslt-proc",
        Description="documentation build tool"),
    pkg(R3, "doc-builder", [("2022-01-01", "1.1-1")], Depends="xslt-proc",
        Description="documentation build tool"),

    # --- exact-pin mismatches (=) -------------------------------------------
    pkg(R1, "libfoo", [("2021-01-01", "1.0-1")],
        Description="foo runtime"),
    pkg(R2, "libfoo", [("2021-06-01", "1.2-1")],
        Description="foo runtime"),
    pkg(R3, "libfoo", [("2022-01-01", "1.4-1")],
        Description="foo runtime"),
    pkg(R1, "legacy-tool", [("2021-01-01", "0.9-1")], Depends="libfoo (= 1.0-1)",
        Description="legacy maintenance tool"),
    pkg(R2, "legacy-tool", [("2021-06-01", "1.0-1")], Depends="libfoo (= 1.2-1)",
        Description="legacy maintenance tool"),
    pkg(R3, "legacy-tool", [("2022-01-01", "1.1-1")], Depends="libfoo (= 1.4-1)",
        Description="legacy maintenance tool"),

    # --- upper bounds (<) ----------------------------------------------------
    pkg(R1, "compat-shim", [("2021-01-01", "1.0-1")], Depends="libbaz (<< 2.0)",
        Description="compatibility shim"),
    pkg(R2, "compat-shim", [("2021-06-01", "1.1-1")], Depends="libbaz (<< 2.0)",
        Description="compatibility shim"),
    pkg(R3, "compat-shim", [("2022-01-01", "2.0-1")], Depends="libbaz (>= 2.0)",
        Description="compatibility shim"),
    pkg(R1, "pin-old", [("2021-01-01", "1.0-1")], Depends="glow (<< 3.4)",
        Description="tool pinned to old glow behaviour"),
    pkg(R2, "pin-old", [("2021-06-01", "1.0-2")], Depends="glow (<< 3.4)",
        Description="tool pinned to old glow behaviour"),
    pkg(R3, "pin-old", [("2022-01-01", "2.0-1")], Depends="glow (>= 3.4)",
        Description="tool pinned to old glow behaviour"),

    # --- missing names (no) ----------------------------------------------------
    pkg(R1, "libav-extra", [("2021-01-01", "0.5-1")],
        Description="extra codec pack"),
    pkg(R2, "libav-modern", [("2021-06-01", "1.0-1")],
        Description="modern codec pack"),
    pkg(R3, "libav-modern", [("2022-01-01", "1.1-1")],
        Description="modern codec pack"),
    pkg(R1, "media-suite", [("2021-01-01", "2.0-1")], Depends="libav-extra",
        Description="media production suite"),
    pkg(R2, "media-suite", [("2021-06-01", "2.1-1")], Depends="libav-modern",
        Description="media production suite"),
    pkg(R3, "media-suite", [("2022-01-01", "2.2-1")], Depends="libav-modern",
        Description="media production suite"),
    pkg(R1, "libssl1.1", [("2021-01-01", "1.1.1d-1")],
        Description="TLS shared libraries"),
    pkg(R2, "libssl1.1", [("2021-06-01", "1.1.1k-1")],
        Description="TLS shared libraries"),
    pkg(R3, "libssl3", [("2022-01-01", "3.0.1-1")],
        Description="TLS shared libraries"),
    pkg(R1, "crypt-user", [("2021-01-01", "1.0-1")], Depends="libssl1.1",
        Description="encryption front end"),
    pkg(R2, "crypt-user", [("2021-06-01", "1.0-2")], Depends="libssl1.1",
        Description="encryption front end"),
    pkg(R3, "crypt-user", [("2022-01-01", "2.0-1")], Depends="libssl3",
        Description="encryption front end"),

    # --- virtual package satisfaction ---------------------------------------
    pkg(R1, "postfix-lite", [("2021-01-01", "3.4-1")],
        Provides="mail-transport-agent",
        Description="lightweight mail transport"),
    pkg(R2, "postfix-lite", [("2021-06-01", "3.5-1")],
        Provides="mail-transport-agent",
        Description="lightweight mail transport"),
    pkg(R3, "postfix-lite", [("2022-01-01", "3.6-1")],
        Provides="mail-transport-agent",
        Description="lightweight mail transport"),
    pkg(R1, "mail-reader", [("2021-01-01", "1.0-1")],
        Depends="mail-transport-agent",
        Description="terminal mail reader"),
    pkg(R2, "mail-reader", [("2021-06-01", "1.1-1")],
        Depends="mail-transport-agent",
        Description="terminal mail reader"),
    pkg(R3, "mail-reader", [("2022-01-01", "1.2-1")],
        Depends="mail-transport-agent",
        Description="terminal mail reader"),
    pkg(R1, "mail-pinner", [("2021-01-01", "1.0-1")],
        Depends="mail-transport-agent (>= 1.0)",
        Description="mail agent with version pin"),
    pkg(R2, "mail-pinner", [("2021-06-01", "1.1-1")],
        Depends="mail-transport-agent (>= 1.0)",
        Description="mail agent with version pin"),
    pkg(R3, "mail-pinner", [("2022-01-01", "1.2-1")],
        Depends="mail-transport-agent (>= 1.0)",
        Description="mail agent with version pin"),

    # --- multi-package projects (Source lift) --------------------------------
    pkg(R1, "ffmpeg", [("2021-01-01", "4.3-1")], Source="ffmpeg",
        Depends="libavcodec58", Description="multimedia transcoder"),
    pkg(R2, "ffmpeg", [("2021-06-01", "4.4-1")], Source="ffmpeg",
        Depends="libavcodec58", Description="multimedia transcoder"),
    pkg(R3, "ffmpeg", [("2022-01-01", "4.4-2")], Source="ffmpeg",
        Depends="libavcodec58", Description="multimedia transcoder"),
    pkg(R1, "libavcodec58", [("2021-01-01", "4.3-1")], Source="ffmpeg",
        Description="codec library"),
    pkg(R2, "libavcodec58", [("2021-06-01", "4.4-1")], Source="ffmpeg",
        Description="codec library"),
    pkg(R3, "libavcodec58", [("2022-01-01", "4.4-2")], Source="ffmpeg",
        Description="codec library"),
    pkg(R1, "player", [("2021-01-01", "1.0-1")], Depends="libavcodec58",
        Description="media player"),
    pkg(R2, "player", [("2021-06-01", "1.1-1")], Depends="libavcodec58",
        Description="media player"),
    pkg(R3, "player", [("2022-01-01", "1.2-1")], Depends="libavcodec58",
        Description="media player"),
    pkg(R1, "libplasma5", [("2021-01-01", "5.20-1")], Source="plasma",
        Description="plasma runtime library"),
    pkg(R2, "libplasma5", [("2021-06-01", "5.21-1")], Source="plasma",
        Description="plasma runtime library"),
    pkg(R3, "libplasma5", [("2022-01-01", "5.23-1")], Source="plasma",
        Description="plasma runtime library"),
    pkg(R1, "plasma-widgets", [("2021-01-01", "5.20-1")], Source="plasma",
        Depends="libplasma5", Description="plasma widget collection"),
    pkg(R2, "plasma-widgets", [("2021-06-01", "5.21-1")], Source="plasma",
        Depends="libplasma5", Description="plasma widget collection"),
    pkg(R3, "plasma-widgets", [("2022-01-01", "5.23-1")], Source="plasma",
        Depends="libplasma5", Description="plasma widget collection"),

    # --- versioned package-name migrations -----------------------------------
    pkg(R1, "libboost-iostreams1.67.0", [("2021-01-01", "1.67.0-13")],
        Source="boost1.67", Description="boost iostreams runtime"),
    pkg(R2, "libboost-iostreams1.74.0", [("2021-06-01", "1.74.0-1")],
        Source="boost1.74", Description="boost iostreams runtime"),
    pkg(R3, "libboost-iostreams1.74.0", [("2022-01-01", "1.74.0-3")],
        Source="boost1.74", Description="boost iostreams runtime"),
    pkg(R1, "boost-user", [("2021-01-01", "1.0-1")],
        Depends="libboost-iostreams1.67.0", Description="boost-based analyzer"),
    pkg(R2, "boost-user", [("2021-06-01", "1.1-1")],
        Depends="libboost-iostreams1.74.0", Description="boost-based analyzer"),
    pkg(R3, "boost-user", [("2022-01-01", "1.2-1")],
        Depends="libboost-iostreams1.74.0", Description="boost-based analyzer"),

    # --- alternatives and dangling targets ------------------------------------
    pkg(R1, "flexi-app", [("2021-01-01", "1.0-1")], Depends="liby | libz-alt",
        Description="app with flexible backends"),
    pkg(R2, "flexi-app", [("2021-06-01", "1.1-1")], Depends="liby | libz-alt",
        Description="app with flexible backends"),
    pkg(R3, "flexi-app", [("2022-01-01", "1.2-1")], Depends="liby | libz-next",
        Description="app with flexible backends"),
    pkg(R1, "libz-alt", [("2021-01-01", "1.0-1")],
        Description="alternative compression backend"),
    pkg(R2, "libz-alt", [("2021-06-01", "1.0-2")],
        Description="alternative compression backend"),
    pkg(R3, "libz-next", [("2022-01-01", "1.0-1")],
        Description="next-generation compression backend"),
    pkg(R1, "dual-dep-app", [("2021-01-01", "1.0-1")],
        Depends="libbar (>= 1.5) | libbaz (>= 1.0)",
        Description="app accepting either library"),
    pkg(R2, "dual-dep-app", [("2021-06-01", "1.1-1")],
        Depends="libbar (>= 1.5) | libbaz (>= 1.0)",
        Description="app accepting either library"),
    pkg(R3, "dual-dep-app", [("2022-01-01", "1.2-1")],
        Depends="libbar (>= 1.5) | libbaz (>= 1.0)",
        Description="app accepting either library"),

    # --- lifecycle / odd versions ----------------------------------------------
    pkg(R1, "old-only-tool", [("2021-01-01", "1.0-1")],
        Description="tool dropped after this release"),
    pkg(R2, "new-tool", [("2021-06-01", "1.0-1")],
        Description="tool introduced in this release"),
    pkg(R3, "new-tool", [("2022-01-01", "1.1-1")],
        Description="tool introduced in this release"),
    pkg(R1, "cycle-a", [("2021-01-01", "1.0-1")], Depends="cycle-b",
        Description="cyclic dependency probe A"),
    pkg(R2, "cycle-a", [("2021-06-01", "1.1-1")], Depends="cycle-b",
        Description="cyclic dependency probe A"),
    pkg(R3, "cycle-a", [("2022-01-01", "1.2-1")], Depends="cycle-b",
        Description="cyclic dependency probe A"),
    pkg(R1, "cycle-b", [("2021-01-01", "1.0-1")], Depends="cycle-a",
        Description="cyclic dependency probe B"),
    pkg(R2, "cycle-b", [("2021-06-01", "1.1-1")], Depends="cycle-a",
        Description="cyclic dependency probe B"),
    pkg(R3, "cycle-b", [("2022-01-01", "1.2-1")], Depends="cycle-a",
        Description="cyclic dependency probe B"),
    pkg(R1, "epoch-tool", [("2021-01-01", "1:2.0-1")],
        Description="tool with an epoch in its version"),
    pkg(R2, "epoch-tool", [("2021-06-01", "1:2.1-1")],
        Description="tool with an epoch in its version"),
    pkg(R1, "oddver-tool", [("2021-01-01", "alpha-1"), ("2021-01-03", "beta-1")],
        Description="tool with non-numeric versions"),
    pkg(R1, "data-files", [("2021-01-01", "2021.01-1")],
        Architecture="all", Description="architecture independent data"),
    pkg(R2, "data-files", [("2021-06-01", "2021.06-1")],
        Architecture="all", Description="architecture independent data"),
    pkg(R3, "data-files", [("2022-01-01", "2022.01-1")],
        Architecture="all", Description="architecture independent data"),
]

# Packages that get real .deb files (the r2 install scenario closure plus the
# alternative used by policy-override experiments).
DEB_CONTENTS = {
    ("demo-app", "1.2-1"): {
        "files": {
            "usr/bin/demo-app": ("#!/bin/sh\necho \"demo-app $*\"\n", 0o755),
            "usr/share/applications/demo-app.desktop": (
                "[Desktop Entry]\nName=Demo App\nType=Application\n"
                "Exec=demo-app %U\nTryExec=demo-app\n",
                0o644,
            ),
            "usr/share/doc/demo-app/copyright": ("demo fixture, no rights reserved\n", 0o644),
        },
        "links": {},
        "control_extra": {
            "Depends": "glow (>= 3.3), libbar | libbaz",
            "Pre-Depends": "prelib",
        },
    },
    ("glow", "3.3.2"): {
        "files": {
            "usr/lib/x86_64-linux-gnu/libglow.so.3.3.2": ("glow shared object 3.3.2\n", 0o644),
        },
        "links": {
            "usr/lib/x86_64-linux-gnu/libglow.so.3": "libglow.so.3.3.2",
        },
        "control_extra": {},
    },
    ("libbar", "2.0-1"): {
        "files": {
            "usr/lib/x86_64-linux-gnu/libbar.so.2.0.1": ("bar shared object 2.0.1\n", 0o644),
        },
        "links": {
            "usr/lib/x86_64-linux-gnu/libbar.so.2": "libbar.so.2.0.1",
        },
        "control_extra": {},
    },
    ("libbaz", "1.5-1"): {
        "files": {
            "usr/lib/x86_64-linux-gnu/libbaz.so.1.5.0": ("baz shared object 1.5.0\n", 0o644),
        },
        "links": {
            "usr/lib/x86_64-linux-gnu/libbaz.so.1": "libbaz.so.1.5.0",
        },
        "control_extra": {},
    },
    ("prelib", "1.0-2"): {
        "files": {
            "usr/lib/prelib/libpre.so.1": ("preload shared object 1\n", 0o644),
        },
        "links": {},
        "control_extra": {},
    },
}

GOLDEN_LISTINGS = [("demo-app", "1.2-1"), ("glow", "3.3.2")]


def build_deb(name, version, spec, outdir):
    staging = os.path.join(outdir, f".staging-{name}")
    if os.path.exists(staging):
        shutil.rmtree(staging)
    debian = os.path.join(staging, "DEBIAN")
    os.makedirs(debian)
    control = [
        f"Package: {name}",
        f"Version: {version}",
        "Architecture: amd64",
        "Maintainer: Fixture Builder <fixtures@example.invalid>",
    ]
    for field, value in spec["control_extra"].items():
        control.append(f"{field}: {value}")
    control.append(f"Description: fixture package {name}")
    control.append("")
    with open(os.path.join(debian, "control"), "w") as f:
        f.write("\n".join(control))
    for rel, (content, mode) in spec["files"].items():
        path = os.path.join(staging, rel)
        os.makedirs(os.path.dirname(path), exist_ok=True)
        with open(path, "w") as f:
            f.write(content)
        os.chmod(path, mode)
    for rel, target in spec["links"].items():
        path = os.path.join(staging, rel)
        os.makedirs(os.path.dirname(path), exist_ok=True)
        os.symlink(target, path)
    for dirpath, _, filenames in os.walk(staging):
        os.utime(dirpath, (EPOCH, EPOCH))
        for fn in filenames:
            p = os.path.join(dirpath, fn)
            if not os.path.islink(p):
                os.utime(p, (EPOCH, EPOCH))
    deb_path = os.path.join(outdir, f"{name}_{version.replace(':', '%3a')}_amd64.deb")
    env = dict(os.environ, SOURCE_DATE_EPOCH=str(EPOCH))
    subprocess.run(
        ["dpkg-deb", "--build", "--root-owner-group", "-Zgzip", staging, deb_path],
        check=True,
        env=env,
        capture_output=True,
    )
    shutil.rmtree(staging)
    return deb_path


def sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as f:
        h.update(f.read())
    return h.hexdigest()


def stanza_for(entry, date, deb_info):
    version = None
    for first, v in entry["versions"]:
        if first <= date:
            version = v
    if version is None:
        return None
    fields = dict(entry["fields"])
    lines = [f"Package: {entry['name']}"]
    if "Source" in fields:
        lines.append(f"Source: {fields.pop('Source')}")
    lines.append(f"Version: {version}")
    lines.append(f"Architecture: {fields.pop('Architecture', 'amd64')}")
    for key in ("Pre-Depends", "Depends", "Provides"):
        if key in fields:
            lines.append(f"{key}: {fields.pop(key)}")
    info = deb_info.get((entry["name"], version))
    if info:
        lines.append(f"Filename: {info['filename']}")
        lines.append(f"Size: {info['size']}")
        lines.append(f"SHA256: {info['sha256']}")
    if "Description" in fields:
        lines.append(f"Description: {fields.pop('Description')}")
    assert not fields, f"unused fields for {entry['name']}: {fields}"
    return "\n".join(lines) + "\n"


def write_index(release, date, text):
    outdir = os.path.join(MIRROR, release, date)
    os.makedirs(outdir, exist_ok=True)
    comp = COMPRESSION[(release, date)]
    data = text.encode()
    if comp == "gz":
        path = os.path.join(outdir, "Packages.gz")
        with open(path, "wb") as f:
            f.write(gzip.compress(data, mtime=0))
    elif comp == "xz":
        path = os.path.join(outdir, "Packages.xz")
        with open(path, "wb") as f:
            f.write(lzma.compress(data))
    else:
        path = os.path.join(outdir, "Packages")
        with open(path, "wb") as f:
            f.write(data)
    return path


# --------------------------------------------------------------------------
# Escape archives, crafted raw (tarfile permits hostile member names).

def ar_archive(members):
    out = b"!<arch>\n"
    for name, data in members:
        header = f"{name:<16}{0:<12}{0:<6}{0:<6}{'100644':<8}{len(data):<10}`\n"
        out += header.encode()
        out += data
        if len(data) % 2 == 1:
            out += b"\n"
    return out


def tar_gz(entries):
    buf = io.BytesIO()
    with tarfile.open(fileobj=buf, mode="w:gz", format=tarfile.GNU_FORMAT) as tf:
        for name, content in entries:
            info = tarfile.TarInfo(name=name)
            info.size = len(content)
            info.mtime = EPOCH
            info.mode = 0o644
            tf.addfile(info, io.BytesIO(content))
    return buf.getvalue()


def evil_deb(evil_name):
    control = tar_gz([("./control", b"Package: evil\nVersion: 1.0-1\nArchitecture: amd64\n")])
    data = tar_gz([("./ok.txt", b"harmless\n"), (evil_name, b"escaped\n")])
    return ar_archive([
        ("debian-binary", b"2.0\n"),
        ("control.tar.gz", control),
        ("data.tar.gz", data),
    ])


# --------------------------------------------------------------------------
# CVE feeds.

def tracker_feed():
    def rel(status, fixed=None, urgency=None):
        entry = {"status": status}
        if fixed is not None:
            entry["fixed_version"] = fixed
        if urgency is not None:
            entry["urgency"] = urgency
        return entry

    return {
        "libxslt": {
            "CVE-2021-30001": {
                "description": "use-after-free in transform processing",
                "releases": {
                    "r1": rel("open", urgency="high"),
                    "r2": rel("resolved", "1.1.35-1", "high"),
                    "r3": rel("resolved", "1.1.35-1", "high"),
                },
            },
            "CVE-2021-30011": {
                "description": "stack exhaustion on crafted stylesheets",
                "releases": {
                    "r1": rel("open", urgency="medium"),
                    "r2": rel("open", urgency="medium"),
                    "r3": rel("open", urgency="medium"),
                },
            },
            "CVE-2021-30017": {
                "description": "issue fixed long before disclosure",
                "releases": {
                    "r1": rel("resolved", "1.1.34-1", "medium"),
                    "r2": rel("resolved", "1.1.34-1", "medium"),
                    "r3": rel("resolved", "1.1.35-1", "medium"),
                },
            },
        },
        "glow": {
            "CVE-2021-30002": {
                "description": "buffer overflow in shader cache",
                "releases": {
                    "r1": rel("resolved", "3.0.4-1", "high"),
                    "r2": rel("resolved", "3.3.2", "high"),
                    "r3": rel("resolved", "3.4.0", "high"),
                },
            },
            "CVE-2020-40003": {
                "description": "integer wrap fixed before the advisory went public",
                "releases": {
                    "r1": rel("resolved", "3.0.4-1", "medium"),
                    "r2": rel("resolved", "3.3.2", "medium"),
                    "r3": rel("resolved", "3.4.0", "medium"),
                },
            },
            "CVE-2021-30016": {
                "description": "undisclosed hardening gap",
                "releases": {
                    "r1": rel("open", urgency="not yet assigned"),
                    "r2": rel("open", urgency="not yet assigned"),
                    "r3": rel("open", urgency="not yet assigned"),
                },
            },
        },
        "libbar": {
            "CVE-2021-30004": {
                "description": "format string in logging path",
                "releases": {
                    "r1": rel("resolved", "1.8-1", "medium"),
                    "r2": rel("resolved", "2.0-1", "medium"),
                    "r3": rel("resolved", "2.2-1", "medium"),
                },
            },
            "CVE-2021-30005": {
                "description": "race in worker pool teardown",
                "releases": {
                    "r1": rel("open", urgency="low"),
                    "r2": rel("open", urgency="low"),
                    "r3": rel("resolved", "2.2-1", "low"),
                },
            },
        },
        "ffmpeg": {
            "CVE-2021-30006": {
                "description": "heap overflow in demuxer",
                "releases": {
                    "r1": rel("open", urgency="high"),
                    "r2": rel("open", urgency="high"),
                    "r3": rel("open", urgency="high"),
                },
            },
            "CVE-2021-30007": {
                "description": "memory leak on malformed input",
                "releases": {
                    "r1": rel("open", urgency="low"),
                    "r2": rel("resolved", "4.4-1", "low"),
                    "r3": rel("resolved", "4.4-2", "low"),
                },
            },
        },
        "libbaz": {
            "CVE-2021-30008": {
                "description": "fix landed in an unshipped upload",
                "releases": {
                    "r1": rel("open", urgency="medium"),
                    "r3": rel("resolved", "2.0-1", "medium"),
                },
            },
        },
        "prelib": {
            "CVE-2021-30009": {
                "description": "preload ordering flaw",
                "releases": {
                    "r1": rel("resolved", "1.0-1", "low"),
                    "r2": rel("resolved", "1.0-2", "low"),
                },
            },
        },
        "ghostware": {
            "CVE-2021-30010": {
                "description": "filed against software outside the archive",
                "releases": {
                    "r1": rel("open", urgency="medium"),
                },
            },
        },
        "postfix-lite": {
            "CVE-2021-30012": {
                "description": "header smuggling via folded lines",
                "releases": {
                    "r1": rel("resolved", "3.5-1", "low"),
                    "r2": rel("resolved", "3.5-1", "low"),
                    "r3": rel("resolved", "3.6-1", "low"),
                },
            },
        },
        "libfoo": {
            "CVE-2021-30013": {
                "description": "path traversal in resource loader",
                "releases": {
                    "r1": rel("resolved", "1.2-1", "high"),
                    "r2": rel("resolved", "1.2-1", "high"),
                    "r3": rel("resolved", "1.4-1", "high"),
                },
            },
        },
        "boost1.74": {
            "CVE-2022-40014": {
                "description": "iostreams decompression bomb",
                "releases": {
                    "r2": rel("open", urgency="medium"),
                    "r3": rel("resolved", "1.74.0-3", "medium"),
                },
            },
        },
        "plasma": {
            "CVE-2021-30015": {
                "description": "widget sandbox escape",
                "releases": {
                    "r1": rel("open", urgency="high"),
                    "r2": rel("resolved", "5.21-1", "high"),
                    "r3": rel("resolved", "5.23-1", "high"),
                },
            },
        },
        "media-suite": {
            "CVE-2021-30018": {
                "description": "project file code execution",
                "releases": {
                    "r1": rel("open", urgency="medium"),
                    "r2": rel("resolved", "2.1-1", "medium"),
                    "r3": rel("resolved", "2.2-1", "medium"),
                },
            },
        },
        "cycle-a": {
            "CVE-2021-30019": {
                "description": "probe package advisory",
                "releases": {
                    "r1": rel("open", urgency="low"),
                    "r2": rel("open", urgency="low"),
                    "r3": rel("open", urgency="low"),
                },
            },
        },
        "demo-app": {
            "CVE-2021-30020": {
                "description": "insecure temporary file handling",
                "releases": {
                    "r1": rel("open", urgency="medium"),
                    "r2": rel("resolved", "1.2-1", "medium"),
                    "r3": rel("resolved", "1.3-1", "medium"),
                },
            },
        },
    }


PUBLISH_DATES = {
    "CVE-2021-30001": "2021-05-01",
    "CVE-2021-30002": "2021-01-01",
    "CVE-2020-40003": "2021-02-01",
    "CVE-2021-30004": "2021-01-02",
    "CVE-2021-30005": "2021-12-01",
    "CVE-2021-30006": "2021-03-15",
    # CVE-2021-30007 deliberately absent: publication date unknown.
    "CVE-2021-30008": "2021-11-01",
    "CVE-2021-30009": "2020-12-01",
    "CVE-2021-30010": "2021-04-01",
    "CVE-2021-30011": "2021-06-15",
    "CVE-2021-30012": "2021-03-01",
    "CVE-2021-30013": "2021-05-15",
    "CVE-2022-40014": "2022-01-01",
    "CVE-2021-30015": "2021-02-15",
    "CVE-2021-30016": "2021-08-01",
    "CVE-2021-30017": "2021-07-01",
    "CVE-2021-30018": "2021-04-01",
    "CVE-2021-30019": "2021-09-01",
    "CVE-2021-30020": "2021-01-10",
}

VULN_LIST_FILES = {
    "CVE-2021-30001": {
        "ID": "CVE-2021-30001",
        "Project": "libxslt",
        "Published": "2021-05-01",
        "Urgency": "high",
        "Releases": {
            "r1": {"Status": "open"},
            "r2": {"Status": "resolved", "FixedVersion": "1.1.35-1"},
            "r3": {"Status": "resolved", "FixedVersion": "1.1.35-1"},
        },
    },
    "CVE-2021-30012": {
        "ID": "CVE-2021-30012",
        "Project": "postfix-lite",
        "Published": "2021-03-01",
        "Urgency": "low",
        "Releases": {
            "r1": {"Status": "resolved", "FixedVersion": "3.5-1"},
            "r2": {"Status": "resolved", "FixedVersion": "3.5-1"},
            "r3": {"Status": "resolved", "FixedVersion": "3.6-1"},
        },
    },
}

MILESTONES = """\
[r1]
released = "2021-01-02"
eol = "2021-12-31"
eol_lts = "2022-12-31"

[r2]
released = "2021-06-02"
eol = "2022-06-30"
eol_lts = "2023-06-30"

[r3]
released = "2022-01-02"
eol = "2023-01-31"
eol_lts = "2024-01-31"
"""

HTTP_STANZAS = [
    ("adduser", "3.118", "all", "add and remove users and groups"),
    ("apt", "1.8.2", "amd64", "commandline package manager"),
    ("base-files", "10.3+deb10u3", "amd64", "Debian base system files"),
    ("bash", "5.0-4", "amd64", "GNU Bourne Again SHell"),
    ("coreutils", "8.30-3", "amd64", "GNU core utilities"),
    ("dpkg", "1.19.7", "amd64", "Debian package management system"),
    ("grep", "3.3-1", "amd64", "GNU grep, egrep and fgrep"),
]


def main():
    os.makedirs(POOL, exist_ok=True)

    # 1. Build .debs and collect index metadata.
    deb_info = {}
    for (name, version), spec in sorted(DEB_CONTENTS.items()):
        path = build_deb(name, version, spec, POOL)
        rel = os.path.relpath(path, MIRROR)
        deb_info[(name, version)] = {
            "filename": rel,
            "size": os.path.getsize(path),
            "sha256": sha256(path),
        }
        print(f"built {rel}")

    # 2. Golden listings from the reference tool.
    golden_dir = os.path.join(FIX, "golden")
    os.makedirs(golden_dir, exist_ok=True)
    for name, version in GOLDEN_LISTINGS:
        deb = os.path.join(MIRROR, deb_info[(name, version)]["filename"])
        fsys = subprocess.run(
            ["dpkg-deb", "--fsys-tarfile", deb], check=True, capture_output=True
        ).stdout
        listing = subprocess.run(
            ["tar", "-tf", "-"], input=fsys, check=True, capture_output=True
        ).stdout
        out = os.path.join(golden_dir, f"{name}_{version}.list")
        with open(out, "wb") as f:
            f.write(listing)
        print(f"golden {out}")

    # 3. Packages indices per release/date.
    for release, dates in DATES.items():
        entries = sorted(
            (e for e in CORPUS if e["release"] == release),
            key=lambda e: e["name"],
        )
        for date in dates:
            stanzas = []
            for entry in entries:
                s = stanza_for(entry, date, deb_info)
                if s is not None:
                    stanzas.append(s)
            path = write_index(release, date, "\n".join(stanzas))
            print(f"index {path} ({len(stanzas)} stanzas)")

    # 4. Escape archives.
    evil_dir = os.path.join(FIX, "evil")
    os.makedirs(evil_dir, exist_ok=True)
    with open(os.path.join(evil_dir, "escape-parent.deb"), "wb") as f:
        f.write(evil_deb("../escape.txt"))
    with open(os.path.join(evil_dir, "escape-absolute.deb"), "wb") as f:
        f.write(evil_deb("/abs-escape.txt"))
    print("evil archives written")

    # 5. CVE feeds, publish dates, milestones.
    cve_dir = os.path.join(FIX, "cves")
    os.makedirs(os.path.join(cve_dir, "vuln-list"), exist_ok=True)
    with open(os.path.join(cve_dir, "tracker.json"), "w") as f:
        json.dump(tracker_feed(), f, indent=2, sort_keys=True)
        f.write("\n")
    with open(os.path.join(cve_dir, "publish_dates.json"), "w") as f:
        json.dump(PUBLISH_DATES, f, indent=2, sort_keys=True)
        f.write("\n")
    for cve_id, doc in VULN_LIST_FILES.items():
        with open(os.path.join(cve_dir, "vuln-list", f"{cve_id}.json"), "w") as f:
            json.dump(doc, f, indent=2, sort_keys=True)
            f.write("\n")
    with open(os.path.join(FIX, "milestones.toml"), "w") as f:
        f.write(MILESTONES)
    print("cve feeds written")

    # 6. HTTP-served index fixture.
    http_dir = os.path.join(FIX, "http")
    os.makedirs(http_dir, exist_ok=True)
    stanzas = []
    for name, version, arch, desc in HTTP_STANZAS:
        stanzas.append(
            f"Package: {name}\nVersion: {version}\nArchitecture: {arch}\n"
            f"Description: {desc}\n"
        )
    with open(os.path.join(http_dir, "Packages.gz"), "wb") as f:
        f.write(gzip.compress("\n".join(stanzas).encode(), mtime=0))
    print(f"http fixture written ({len(HTTP_STANZAS)} stanzas)")

    total = len({e['name'] for e in CORPUS})
    print(f"corpus: {total} distinct package names")


if __name__ == "__main__":
    sys.exit(main())
