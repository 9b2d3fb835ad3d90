"""Tagged echo-sample tables and their CSV round-trip format.

File layout: leading `# key=value` metadata comments (first one is the
schema tag), a header row, then one data row per sample with columns
exactly `source,mode,n,t,F,stderr` (stderr may be empty).  Floats are
written with 17 significant digits so read(write(x)) == x.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .errors import SchemaError

SCHEMA_TAG = "echo-table-v1"
COLUMNS = ("source", "mode", "n", "t", "F", "stderr")

# Discretization slack tolerated above the exact bound F <= 1.
F_SLACK = 0.05


@dataclass
class EchoRow:
    source: str
    mode: str
    n: int
    t: float
    F: float
    stderr: float | None = None
    extras: dict = field(default_factory=dict, compare=False)

    def validate(self):
        if self.t < 0:
            raise ValueError(f"t must be nonnegative, got {self.t}")
        if not 0.0 < self.F <= 1.0 + F_SLACK:
            raise ValueError(f"F = {self.F} outside (0, 1 + {F_SLACK}]")
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")


@dataclass
class EchoTable:
    rows: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)   # (n, t, reason); never serialized

    def append(self, row: EchoRow):
        row.validate()
        self.rows.append(row)

    def __len__(self):
        return len(self.rows)

    def series(self, mode: str, n: int, source: str | None = None):
        """(t, F) arrays of one series, sorted by t."""
        import numpy as np

        picked = [(r.t, r.F) for r in self.rows
                  if r.mode == mode and r.n == n
                  and (source is None or r.source == source)]
        picked.sort()
        t = np.array([x[0] for x in picked])
        F = np.array([x[1] for x in picked])
        return t, F

    def modes_and_rounds(self):
        return sorted({(r.mode, r.n) for r in self.rows})

    def validate_series_monotone(self):
        """t strictly increasing within each (mode, n) series."""
        seen: dict = {}
        for idx, r in enumerate(self.rows):
            key = (r.mode, r.n, r.source)
            if key in seen and r.t <= seen[key]:
                raise ValueError(
                    f"row {idx}: t = {r.t} not strictly increasing in series {key}")
            seen[key] = r.t


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_echo_csv(table: EchoTable, path) -> None:
    path = Path(path)
    lines = [f"# schema={SCHEMA_TAG}"]
    for key in sorted(table.metadata):
        lines.append(f"# {key}={table.metadata[key]}")
    lines.append(",".join(COLUMNS))
    for r in table.rows:
        stderr = "" if r.stderr is None else _fmt(r.stderr)
        lines.append(
            f"{r.source},{r.mode},{r.n},{_fmt(r.t)},{_fmt(r.F)},{stderr}")
    path.write_text("\n".join(lines) + "\n")


def read_echo_csv(path) -> EchoTable:
    path = Path(path)
    table = EchoTable()
    header_seen = False
    with path.open() as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line.strip():
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if "=" not in body:
                    raise SchemaError("metadata comment is not key=value",
                                      line=lineno)
                key, _, value = body.partition("=")
                if key.strip() == "schema" and value.strip() != SCHEMA_TAG:
                    raise SchemaError(
                        f"unsupported schema {value.strip()!r}", line=lineno)
                table.metadata[key.strip()] = value.strip()
                continue
            if not header_seen:
                cols = tuple(c.strip() for c in line.split(","))
                if cols != COLUMNS:
                    raise SchemaError(
                        f"header {cols!r} does not match {COLUMNS!r}", line=lineno)
                header_seen = True
                continue
            parts = line.split(",")
            if len(parts) != len(COLUMNS):
                raise SchemaError(
                    f"expected {len(COLUMNS)} fields, found {len(parts)}",
                    line=lineno)
            source, mode, n_s, t_s, F_s, err_s = (s.strip() for s in parts)
            try:
                n = int(n_s)
            except ValueError:
                raise SchemaError(f"bad integer {n_s!r}", line=lineno, column="n")
            try:
                t = float(t_s)
                F = float(F_s)
            except ValueError:
                raise SchemaError("bad float in row", line=lineno, column="t/F")
            if err_s == "":
                stderr = None
            else:
                try:
                    stderr = float(err_s)
                except ValueError:
                    raise SchemaError(f"bad float {err_s!r}", line=lineno,
                                      column="stderr")
            row = EchoRow(source=source, mode=mode, n=n, t=t, F=F, stderr=stderr)
            try:
                row.validate()
            except ValueError as exc:
                raise SchemaError(str(exc), line=lineno)
            table.rows.append(row)
    if not header_seen:
        raise SchemaError("file has no header row", line=None)
    return table
