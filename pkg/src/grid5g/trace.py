"""Trace CSV format and run manifests.

Column order is fixed: t, then per-DER groups (x_sp, x_sp_prime, x, e, e_pred,
queued, delivered), then pcc, then per-DER-per-carrier cqi.  Floats are
serialized with 9 significant digits, so emitting a parsed file reproduces it
byte for byte.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from typing import Sequence

from .engine import TraceRecord

PER_DER_FIELDS = ("x_sp", "x_sp_prime", "x", "e", "e_pred", "queued", "delivered")


def fmt9(value: float) -> str:
    return "%.9g" % value


def header_columns(der_ids: Sequence[int], carriers: int) -> list[str]:
    columns = ["t"]
    for der in der_ids:
        columns += [f"{name}_{der}" for name in PER_DER_FIELDS]
    columns.append("pcc")
    for der in der_ids:
        columns += [f"cqi_{der}_{c}" for c in range(1, carriers + 1)]
    return columns


@dataclass(frozen=True)
class TraceData:
    der_ids: tuple
    carriers: int
    records: tuple  # of TraceRecord

    @property
    def t(self) -> list[float]:
        return [r.t for r in self.records]

    @property
    def pcc(self) -> list[float]:
        return [r.pcc for r in self.records]

    def series(self, column: str) -> list[float]:
        """One named column as floats (e.g. 'pcc', 'x_2', 'e_pred_1')."""
        if column in ("t", "pcc"):
            return [getattr(r, column) for r in self.records]
        name, _, der = column.rpartition("_")
        if name in PER_DER_FIELDS and int(der) in self.der_ids:
            idx = self.der_ids.index(int(der))
            return [getattr(r, name)[idx] for r in self.records]
        raise KeyError(f"unknown trace column {column!r}")

    @property
    def sample_period(self) -> float:
        if len(self.records) < 2:
            raise ValueError("trace too short to have a sample period")
        return self.records[1].t - self.records[0].t

    @property
    def duration(self) -> float:
        return self.records[-1].t if self.records else 0.0


def emit_trace(records: Sequence[TraceRecord], der_ids: Sequence[int], carriers: int) -> str:
    lines = [",".join(header_columns(der_ids, carriers))]
    for r in records:
        cells = [fmt9(r.t)]
        for i in range(len(der_ids)):
            cells += [
                fmt9(r.x_sp[i]),
                fmt9(r.x_sp_prime[i]),
                fmt9(r.x[i]),
                fmt9(r.e[i]),
                fmt9(r.e_pred[i]),
                str(r.queued[i]),
                str(r.delivered[i]),
            ]
        cells.append(fmt9(r.pcc))
        for i in range(len(der_ids)):
            cells += [str(c) for c in r.cqi[i]]
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def write_trace(path, records: Sequence[TraceRecord], der_ids: Sequence[int], carriers: int) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(emit_trace(records, der_ids, carriers))


def parse_trace(text: str) -> TraceData:
    lines = [line for line in text.splitlines() if line]
    if not lines:
        raise ValueError("empty trace file")
    columns = lines[0].split(",")
    der_ids = tuple(
        int(c.rpartition("_")[2]) for c in columns if c.startswith("x_sp_") and "prime" not in c
    )
    n = len(der_ids)
    cqi_columns = [c for c in columns if c.startswith("cqi_")]
    if n == 0 or len(cqi_columns) % n != 0:
        raise ValueError("malformed trace header")
    carriers = len(cqi_columns) // n
    expected = header_columns(der_ids, carriers)
    if columns != expected:
        raise ValueError("trace header does not match the documented schema")
    records = []
    width = len(expected)
    for ln, line in enumerate(lines[1:], start=2):
        cells = line.split(",")
        if len(cells) != width:
            raise ValueError(f"line {ln}: expected {width} cells, got {len(cells)}")
        pos = 1
        per_der = {name: [] for name in PER_DER_FIELDS}
        for _ in range(n):
            for name in PER_DER_FIELDS:
                raw = cells[pos]
                per_der[name].append(int(raw) if name in ("queued", "delivered") else float(raw))
                pos += 1
        pcc = float(cells[pos])
        pos += 1
        cqi = []
        for _ in range(n):
            cqi.append(tuple(int(cells[pos + c]) for c in range(carriers)))
            pos += carriers
        records.append(
            TraceRecord(
                t=float(cells[0]),
                x_sp=tuple(per_der["x_sp"]),
                x_sp_prime=tuple(per_der["x_sp_prime"]),
                x=tuple(per_der["x"]),
                e=tuple(per_der["e"]),
                e_pred=tuple(per_der["e_pred"]),
                queued=tuple(per_der["queued"]),
                delivered=tuple(per_der["delivered"]),
                pcc=pcc,
                cqi=tuple(cqi),
            )
        )
    return TraceData(der_ids=der_ids, carriers=carriers, records=tuple(records))


def read_trace(path) -> TraceData:
    with open(path, "r", newline="") as fh:
        return parse_trace(fh.read())


def scenario_digest(raw_bytes: bytes) -> str:
    return hashlib.sha256(raw_bytes).hexdigest()


def write_manifest(path, *, scenario_sha256: str, seed: int, mode: str, version: str,
                   created_utc: str, source: str) -> None:
    payload = {
        "schema": "grid5g-manifest-1",
        "scenario_sha256": scenario_sha256,
        "source": source,
        "seed": seed,
        "mode": mode,
        "version": version,
        "created_utc": created_utc,
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
