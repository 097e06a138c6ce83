"""Artifact writers shared by the CLI: CSV tables, run manifests, histograms.

Floats are written with a fixed format so artifacts are byte-stable; the run
manifest records the effective config, seed, and a sha256 per artifact, which
is enough to reproduce or verify any run.
"""

import csv
import hashlib
import json
from pathlib import Path

import numpy as np


def fmt(x, nd=6):
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if not np.isfinite(x):
        return str(float(x))  # nan / inf / -inf
    return f"{float(x):.{nd}f}"


def write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow(row)
    return Path(path)


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = list(reader)
    return header, rows


def write_text(path, text):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return Path(path)


def sha256_file(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(out_dir, command, config_echo, seed, artifacts):
    """Record what a run produced; artifact order and checksums are stable."""
    out_dir = Path(out_dir)
    manifest = {
        "command": command,
        "seed": seed,
        "config": config_echo,
        "artifacts": {
            str(Path(p).relative_to(out_dir)): sha256_file(p)
            for p in sorted(artifacts, key=str)
        },
    }
    path = out_dir / f"manifest_{command}.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def histogram(values, bins=20):
    counts, edges = np.histogram(np.asarray(values, dtype=float), bins=bins)
    return edges, counts
