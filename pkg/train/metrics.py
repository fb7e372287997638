"""Append-only training metrics CSV."""
import csv
import os

from errors import ColumnError

COLUMNS = ("step", "lr", "loss", "loss_T", "loss_R", "grad_norm", "wall_ms")


class MetricsWriter:
    def __init__(self, path):
        self.path = path
        fresh = not os.path.exists(path) or os.path.getsize(path) == 0
        self._fh = open(path, "a", newline="")
        self._writer = csv.DictWriter(self._fh, fieldnames=COLUMNS)
        if fresh:
            self._writer.writeheader()

    def write(self, row):
        self._writer.writerow({k: _fmt(row[k]) for k in COLUMNS})
        self._fh.flush()

    def close(self):
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def _fmt(value):
    return repr(value) if isinstance(value, float) else value


def read_metrics(path, required=COLUMNS):
    """Rows as float dicts; a missing column raises ColumnError naming it."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in required if c not in header]
        if missing:
            raise ColumnError(f"{path}: missing column {missing[0]!r} (header: {','.join(header) or '<empty>'})")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            try:
                rows.append({c: float(row[c]) for c in required})
            except (TypeError, ValueError):
                raise ColumnError(f"{path}: line {lineno}: non-numeric value") from None
    return rows
