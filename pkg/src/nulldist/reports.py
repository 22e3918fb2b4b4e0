"""Deterministic report files: comment header block, CSV body, optional
key=value footer.  All floats print with 17 significant digits so reports
can serve as reproducible oracles; no timestamps anywhere."""

from __future__ import annotations

import csv
import hashlib
import io
from typing import Iterable, Mapping, Sequence


def fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.17g}"
    if isinstance(value, (tuple, list)):
        return " ".join(fmt(v) for v in value)
    return str(value)


def config_hash(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def write_report(path, header: Mapping, columns: Sequence[str],
                 rows: Iterable[Sequence], footer: Mapping | None = None) -> None:
    buf = io.StringIO()
    for key, value in header.items():
        buf.write(f"# {key}: {fmt(value)}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    if footer:
        for key, value in footer.items():
            buf.write(f"# {key}={fmt(value)}\n")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(buf.getvalue())
