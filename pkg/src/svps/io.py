"""CSV output: atomic writes, a provenance comment line, stable number formatting."""

from __future__ import annotations

import csv
import io
import math
import os
import tempfile
from pathlib import Path
from typing import Iterable, Sequence

from . import __version__


def fmt(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return f"{value:.10g}"
    return str(value)


def provenance(master_seed: int) -> str:
    return f"# svps {__version__} master_seed={master_seed}"


def atomic_write_text(path: Path, text: str):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def render_csv(columns: Sequence[str], rows: Iterable[dict], master_seed: int) -> str:
    buf = io.StringIO()
    buf.write(provenance(master_seed) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([fmt(row[c]) for c in columns])
    return buf.getvalue()


def write_csv(path: Path, columns: Sequence[str], rows: Iterable[dict], master_seed: int):
    atomic_write_text(path, render_csv(columns, rows, master_seed))


def read_csv(path: Path) -> list[dict]:
    """Rows as string dicts, skipping '#' comment lines."""
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    return list(csv.DictReader(lines))


def upsert_csv(path: Path, columns: Sequence[str], rows: Sequence[dict], master_seed: int,
               key: Sequence[str] = ("l", "m")):
    """Replace the rows of `path` sharing `key` with those in `rows`, keep the rest.

    Output is sorted on the key columns, so re-running an instance reproduces
    the same bytes.
    """
    path = Path(path)
    fresh = [{c: fmt(r[c]) for c in columns} for r in rows]
    replaced = {tuple(r[k] for k in key) for r in fresh}
    kept = []
    if path.exists():
        kept = [r for r in read_csv(path) if tuple(r.get(k) for k in key) not in replaced]
        kept = [r for r in kept if list(r) == list(columns)]

    def order(r):
        return tuple(float(r[k]) for k in key)

    # stable sort: rows of one instance keep their canonical order
    out = sorted(kept + fresh, key=order)
    buf = io.StringIO()
    buf.write(provenance(master_seed) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in out:
        w.writerow([r[c] for c in columns])
    atomic_write_text(path, buf.getvalue())
