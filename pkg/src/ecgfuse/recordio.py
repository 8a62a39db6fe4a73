"""Plain-text record format (``csv_v1``), trajectory export and segmentation.

A record file starts with a header comment, then one comma-separated row per
sample::

    # fs=500 leads=I,II,V1 units=mV
    0.012,0.101,-0.044
    ...

``fs`` and ``leads`` are required; other ``key=value`` tokens (``units``,
``kind``, ``id``) are kept as metadata. Further ``#`` lines are ignored.

Converting PhysioNet WFDB data: read it with the ``wfdb`` package
(``wfdb.rdsamp``) and pass ``signals``, ``fields["sig_name"]`` and
``fields["fs"]`` to :meth:`MultiLeadRecord.from_array`, then
:func:`write_record`.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .embedding import EmbeddingParams, Trajectory
from .errors import (
    EmptyTrajectory,
    MissingHeader,
    ParseError,
    RaggedRows,
    WindowLargerThanRecord,
)
from .vcgprep import MultiLeadRecord

__all__ = [
    "Segment",
    "read_header",
    "read_record",
    "write_record",
    "write_trajectory",
    "read_trajectory",
    "segment_record",
]

FORMAT = "csv_v1"


@dataclass(frozen=True)
class Segment:
    start_sample: int
    length: int
    record_id: str = ""

    @property
    def stop_sample(self) -> int:
        return self.start_sample + self.length

    def extract(self, record: MultiLeadRecord) -> MultiLeadRecord:
        rid = f"{self.record_id or record.record_id}[{self.start_sample}:{self.stop_sample}]"
        return record.slice(self.start_sample, self.stop_sample, rid)


def _parse_header(line: str, lineno: int) -> dict[str, str]:
    text = line.strip()
    if not text.startswith("#"):
        raise MissingHeader("expected '# fs=<hz> leads=<n1,n2,...>' header", lineno)
    meta = {}
    for token in text[1:].split():
        if "=" not in token:
            continue
        key, _, value = token.partition("=")
        meta[key] = value
    for key in ("fs", "leads"):
        if key not in meta:
            raise MissingHeader(f"header lacks '{key}='", lineno)
    try:
        fs = float(meta["fs"])
    except ValueError:
        raise ParseError(f"bad sample rate {meta['fs']!r}", lineno) from None
    if not fs > 0:
        raise ParseError(f"sample rate must be positive, got {fs}", lineno)
    if not all(meta["leads"].split(",")):
        raise ParseError(f"empty lead name in {meta['leads']!r}", lineno)
    return meta


def read_header(path) -> dict[str, str]:
    """Header metadata of a ``csv_v1`` file."""
    with open(os.fspath(path)) as fh:
        for lineno, line in enumerate(fh, 1):
            if line.strip():
                return _parse_header(line, lineno)
    raise MissingHeader("empty file", 1)


def read_record(path, record_id: str | None = None) -> MultiLeadRecord:
    """Load a ``csv_v1`` record."""
    path = os.fspath(path)
    meta = None
    rows = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            text = line.strip()
            if not text:
                continue
            if meta is None:
                meta = _parse_header(text, lineno)
                names = meta["leads"].split(",")
                continue
            if text.startswith("#"):
                continue
            cells = text.split(",")
            if len(cells) != len(names):
                raise RaggedRows(f"expected {len(names)} columns, got {len(cells)}", lineno)
            try:
                rows.append([float(c) for c in cells])
            except ValueError as exc:
                raise ParseError(str(exc), lineno) from None
    if meta is None:
        raise MissingHeader("empty file", 1)
    if len(rows) < 2:
        raise ParseError(f"need at least 2 samples, got {len(rows)}")
    rid = record_id if record_id is not None else meta.get("id", os.path.splitext(os.path.basename(path))[0])
    record = MultiLeadRecord.from_array(np.array(rows), names, float(meta["fs"]), rid)
    record.meta = {k: v for k, v in meta.items() if k not in ("fs", "leads")}
    return record


def _fmt(x: float, precision) -> str:
    return repr(float(x)) if precision is None else f"{x:.{precision}g}"


def write_record(record: MultiLeadRecord, path, units: str = "mV", precision: int | None = None, **extra) -> None:
    """Write ``record`` as ``csv_v1``; ``precision=None`` is lossless."""
    header = [f"fs={record.sample_rate_hz:g}", "leads=" + ",".join(record.names), f"units={units}"]
    if record.record_id and " " not in record.record_id:
        header.append(f"id={record.record_id}")
    header += [f"{k}={v}" for k, v in extra.items()]
    data = record.to_array()
    with open(os.fspath(path), "w") as fh:
        fh.write("# " + " ".join(header) + "\n")
        for row in data:
            fh.write(",".join(_fmt(v, precision) for v in row) + "\n")


def write_trajectory(traj: Trajectory, path) -> None:
    """One row per state: step index, then the m components."""
    if len(traj) == 0:
        raise EmptyTrajectory("nothing to write")
    m = traj.m
    label = traj.source_label.replace(" ", "_") or "trajectory"
    with open(os.fspath(path), "w") as fh:
        fh.write(f"# trajectory m={m} tau={traj.params.tau} fs={traj.sample_rate_hz:g} label={label}\n")
        fh.write("step," + ",".join(f"x{j + 1}" for j in range(m)) + "\n")
        for p, state in enumerate(traj.states):
            fh.write(f"{p}," + ",".join(repr(float(v)) for v in state) + "\n")


def read_trajectory(path) -> Trajectory:
    path = os.fspath(path)
    meta = None
    states = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            text = line.strip()
            if not text:
                continue
            if meta is None:
                if not text.startswith("# trajectory"):
                    raise MissingHeader("expected '# trajectory m=.. tau=..' header", lineno)
                meta = dict(t.partition("=")[::2] for t in text[1:].split() if "=" in t)
                try:
                    m, tau = int(meta["m"]), int(meta["tau"])
                except (KeyError, ValueError):
                    raise ParseError("header needs integer m= and tau=", lineno) from None
                continue
            if text.startswith("step"):
                continue
            cells = text.split(",")
            if len(cells) != m + 1:
                raise RaggedRows(f"expected {m + 1} columns, got {len(cells)}", lineno)
            try:
                states.append([float(c) for c in cells[1:]])
            except ValueError as exc:
                raise ParseError(str(exc), lineno) from None
    if meta is None:
        raise MissingHeader("empty file", 1)
    if not states:
        raise EmptyTrajectory(f"{path} has no states")
    return Trajectory(
        np.array(states), EmbeddingParams(m, tau), meta.get("label", ""), float(meta.get("fs", 1.0))
    )


def segment_record(record: MultiLeadRecord, window_s: float, hop_s: float | None = None) -> list[Segment]:
    """Fixed windows of ``window_s`` seconds every ``hop_s`` seconds.

    A trailing partial window is dropped. ``hop_s`` defaults to ``window_s``.
    """
    hop_s = window_s if hop_s is None else hop_s
    if not (window_s > 0 and hop_s > 0):
        raise ValueError("window_s and hop_s must be positive")
    fs = record.sample_rate_hz
    win = int(round(window_s * fs))
    hop = max(1, int(round(hop_s * fs)))
    n = len(record)
    if win > n:
        raise WindowLargerThanRecord(f"window of {win} samples exceeds record of {n}")
    return [Segment(start, win, record.record_id) for start in range(0, n - win + 1, hop)]
