#!/usr/bin/env python3
"""Fetch a PHOIBLE 2.0 segment table and write it to data/phoible.csv.

The table is taken from the `allophant` wheel on PyPI, which ships the PHOIBLE
CSV (MIT licensed) with an allophone column. Rows belonging to inventory 0 are
allophant additions (eSpeak-derived segments) and are dropped so the output
matches the upstream 3,020-inventory release.
"""

import csv
import io
import pathlib
import subprocess
import sys
import tempfile
import zipfile

MEMBER = "allophant/package_data/allophoible.csv"


def main() -> int:
    out = pathlib.Path(sys.argv[1] if len(sys.argv) > 1 else "data/phoible.csv")
    out.parent.mkdir(parents=True, exist_ok=True)
    with tempfile.TemporaryDirectory() as tmp:
        subprocess.run(
            [sys.executable, "-m", "pip", "download", "--no-deps", "-d", tmp, "allophant==1.0.0"],
            check=True,
        )
        wheel = next(pathlib.Path(tmp).glob("allophant-*.whl"))
        raw = zipfile.ZipFile(wheel).read(MEMBER).decode("utf-8")

    reader = csv.reader(io.StringIO(raw))
    header = next(reader)
    inv_col = header.index("InventoryID")
    kept = 0
    with out.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, quoting=csv.QUOTE_MINIMAL, lineterminator="\n")
        writer.writerow(header)
        for row in reader:
            if row[inv_col] == "0":
                continue
            writer.writerow(row)
            kept += 1
    print(f"wrote {kept} rows to {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
