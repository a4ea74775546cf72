"""Reader for sgj CSV output: one '# ' provenance line, then a header row."""

import csv


def read(path):
    with open(path, newline="") as f:
        prov = f.readline().removeprefix("# ").strip()
        rows = list(csv.DictReader(f))
    cols = {k: [r[k] for r in rows] for k in (rows[0].keys() if rows else [])}
    return prov, cols


def floats(values):
    return [float(v) for v in values]
