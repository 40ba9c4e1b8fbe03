#!/usr/bin/env python3
"""Generate fixtures/version_corpus.tsv.

Every pair in the corpus is adjudicated by the installed dpkg via
`dpkg --compare-versions`, so the file is a frozen record of dpkg's own
ordering over a deliberately nasty set of version strings: epochs, `~`
pre-releases, letter/digit boundaries, multi-digit numeric runs with
leading zeros, binNMU suffixes, and missing revisions.

Run from the repository root:  python3 tools/gen_version_corpus.py
"""

import itertools
import random
import subprocess
import sys
from pathlib import Path

VERSIONS = [
    # plain numeric chains and multi-digit runs
    "1", "2", "9", "10", "1.0", "1.1", "1.2", "1.9", "1.10", "1.11",
    "1.09", "1.002", "0.9", "0.10", "2.0", "10.0", "3.14159",
    "4.9999999999999999999999", "4.10000000000000000000001",
    # letters inside and at the end of numeric segments
    "1.0a", "1.0b", "1.0a1", "1.0a10", "1.2a", "1.2b", "1.2alpha",
    "2.4b", "2.4beta", "7a", "7b", "a1", "z9",
    # tilde pre-releases
    "1.0~", "1.0~~", "1.0~~a", "1.0~rc1", "1.0~rc2", "1.0~beta1",
    "2.0~alpha1", "2.0~git20200101", "3.0~pre9-1",
    # plus / dot specials
    "1.0+", "1.0+b1", "1.0+b2", "1.0+deb10u1", "1.0+deb10u2",
    "1.0+dfsg", "1.0+dfsg-1", "1.0+really0.9", "5.0.0+dfsg.1",
    # epochs
    "1:0.1", "1:1.0", "1:1.0-1", "2:0.5", "2:1.0~rc1", "10:0.1",
    # revisions, including multi-hyphen upstreams
    "1.0-1", "1.0-2", "1.0-10", "1.0-1+b1", "1.0-1+b2", "1.0-1.1",
    "1.0-0", "1.0-01", "1.0-rc1-3", "1.0-rc1-10", "2.0-0.1",
    "1.1.34-1", "1.1.35-1", "3.0.3-1", "3.0.4-1", "3.3.2-1", "3.4.0-1",
    # realistic archive strings
    "2.28-10", "2.31-13+deb11u5", "1:8.4p1-5", "1:8.4p1-5+deb11u1",
    "4.19.249-2", "5.10.0-0.deb10.16", "1.55.0-1", "1.62.0-1",
    "249.11-1", "249.12-1~bpo11+1",
]

# Hand-picked adversarial pairs that random sampling might miss.
EXTRA_PAIRS = [
    ("1.0~rc1", "1.0"), ("1.0~~", "1.0~"), ("1.0~~a", "1.0~"),
    ("1.0", "1.0+"), ("1.0a", "1.0+"), ("1.0a", "1.0~"),
    ("1.0a1", "1.01"), ("1.09", "1.9"), ("1.002", "1.2"),
    ("1.0", "1.0-0"), ("1.0-01", "1.0-1"), ("0:1.0", "1.0"),
    ("1:0.1", "999"), ("1.0-1+b1", "1.0-1"), ("1.0-rc1-3", "1.0-rc1-10"),
    ("2.4b", "2.4beta"), ("7a", "7b"), ("1.0+really0.9", "1.0"),
    ("4.9999999999999999999999", "4.10000000000000000000001"),
    ("1.0+deb10u1", "1.0+deb10u2"), ("249.12-1~bpo11+1", "249.12-1"),
]


def dpkg_cmp(a: str, b: str) -> str:
    def check(rel: str) -> bool:
        return (
            subprocess.run(
                ["dpkg", "--compare-versions", a, rel, b],
                stderr=subprocess.DEVNULL,
            ).returncode
            == 0
        )

    if check("lt"):
        return "lt"
    if check("eq"):
        return "eq"
    if check("gt"):
        return "gt"
    raise RuntimeError(f"dpkg rejected pair {a!r} / {b!r}")


def main() -> None:
    out = Path(__file__).resolve().parent.parent / "fixtures" / "version_corpus.tsv"
    out.parent.mkdir(parents=True, exist_ok=True)

    rng = random.Random(20210601)
    pairs = list(EXTRA_PAIRS)
    # Consecutive pairs across the whole list exercise near-neighbours.
    pairs += list(itertools.pairwise(VERSIONS))
    # Seeded random sample of the cross product for breadth.
    all_cross = [
        (a, b) for a, b in itertools.product(VERSIONS, VERSIONS) if a != b
    ]
    pairs += rng.sample(all_cross, 420)

    seen = set()
    rows = []
    for a, b in pairs:
        if (a, b) in seen:
            continue
        seen.add((a, b))
        rows.append((a, b, dpkg_cmp(a, b)))

    with out.open("w") as fh:
        fh.write("# a\tb\tdpkg_verdict(lt|eq|gt)\n")
        for a, b, verdict in rows:
            fh.write(f"{a}\t{b}\t{verdict}\n")

    print(f"wrote {len(rows)} pairs to {out}", file=sys.stderr)
    if len(rows) < 500:
        sys.exit("corpus too small")


if __name__ == "__main__":
    main()
