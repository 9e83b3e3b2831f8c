#!/usr/bin/env python3
"""Download the four public NHANES 2021-2023 transport files from the CDC.

Usage:
    python3 scripts/fetch_nhanes.py [--dest data/nhanes]

Needs outbound HTTPS to wwwn.cdc.gov. The files land where the test suite
and the configs/nhanes_*.ini configs expect them; set SURVEYML_NHANES_DIR
to point the tests somewhere else.
"""

import argparse
import sys
import urllib.request
from pathlib import Path

FILES = ["DEMO_L", "BMX_L", "BPXO_L", "DIQ_L"]
URL_PATTERNS = [
    "https://wwwn.cdc.gov/Nchs/Data/Nhanes/Public/2021/DataFiles/{name}.xpt",
    "https://wwwn.cdc.gov/Nchs/Nhanes/2021-2022/{name}.XPT",
]


def fetch(name: str, dest: Path) -> bool:
    target = dest / f"{name}.xpt"
    if target.exists():
        print(f"{target} already present")
        return True
    for pattern in URL_PATTERNS:
        url = pattern.format(name=name)
        try:
            print(f"fetching {url}")
            with urllib.request.urlopen(url, timeout=120) as response:
                data = response.read()
        except OSError as exc:
            print(f"  failed: {exc}")
            continue
        if not data.startswith(b"HEADER RECORD*******LIBRARY"):
            print("  not a transport file, trying next mirror")
            continue
        target.write_bytes(data)
        print(f"  wrote {target} ({len(data):,} bytes)")
        return True
    return False


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--dest", default="data/nhanes")
    args = parser.parse_args()
    dest = Path(args.dest)
    dest.mkdir(parents=True, exist_ok=True)
    ok = all([fetch(name, dest) for name in FILES])
    if not ok:
        print("some files could not be fetched; is wwwn.cdc.gov reachable?",
              file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
