"""12-lead preprocessing: constant-lead screening and inverse Dower to VCG."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .embedding import TimeSeries
from .errors import DataError, LeadOrderMismatch, MissingLead

__all__ = [
    "MultiLeadRecord",
    "DowerMatrix",
    "EIGHT_LEADS",
    "TWELVE_LEADS",
    "VCG_LEADS",
    "INVERSE_DOWER",
    "detect_constant_leads",
    "select_eight_leads",
    "inverse_dower",
    "load_dower_matrix",
]

EIGHT_LEADS = ("V1", "V2", "V3", "V4", "V5", "V6", "I", "II")
TWELVE_LEADS = ("I", "II", "III", "aVR", "aVL", "aVF", "V1", "V2", "V3", "V4", "V5", "V6")
VCG_LEADS = ("Vx", "Vy", "Vz")


class MultiLeadRecord:
    """Named, equally long leads sharing one sample rate."""

    def __init__(self, leads: Mapping[str, TimeSeries] | Sequence[TimeSeries], sample_rate_hz: float | None = None, record_id: str = ""):
        if isinstance(leads, Mapping):
            items = list(leads.items())
        else:
            items = [(ts.label, ts) for ts in leads]
        if not items:
            raise DataError("record has no leads")
        names = [name for name, _ in items]
        if len(set(names)) != len(names):
            raise DataError(f"duplicate lead names in {names}")
        fs = items[0][1].sample_rate_hz if sample_rate_hz is None else float(sample_rate_hz)
        n = len(items[0][1])
        for name, ts in items:
            if len(ts) != n:
                raise DataError(f"lead {name!r} has {len(ts)} samples, expected {n}")
            if ts.sample_rate_hz != fs:
                raise DataError(f"lead {name!r} sampled at {ts.sample_rate_hz} Hz, expected {fs}")
        self.leads = {name: (ts if ts.label == name else TimeSeries(ts.samples, fs, name)) for name, ts in items}
        self.sample_rate_hz = fs
        self.record_id = record_id
        self.meta: dict = {}

    @classmethod
    def from_array(cls, data, names: Sequence[str], sample_rate_hz: float, record_id: str = ""):
        """Build from a ``(n_samples, n_leads)`` array."""
        data = np.asarray(data, dtype=float)
        if data.ndim != 2 or data.shape[1] != len(names):
            raise DataError(f"array shape {data.shape} does not match {len(names)} lead names")
        return cls({n: TimeSeries(data[:, i], sample_rate_hz, n) for i, n in enumerate(names)}, sample_rate_hz, record_id)

    @property
    def names(self) -> list[str]:
        return list(self.leads)

    def __len__(self):
        return len(next(iter(self.leads.values())))

    def __getitem__(self, name) -> TimeSeries:
        try:
            return self.leads[name]
        except KeyError:
            raise MissingLead(name) from None

    def __contains__(self, name):
        return name in self.leads

    def to_array(self, order: Sequence[str] | None = None) -> np.ndarray:
        order = self.names if order is None else order
        return np.column_stack([self[n].samples for n in order])

    def slice(self, start: int, stop: int, record_id: str | None = None) -> "MultiLeadRecord":
        return MultiLeadRecord.from_array(
            self.to_array()[start:stop], self.names, self.sample_rate_hz,
            self.record_id if record_id is None else record_id,
        )

    def replace(self, name: str, series: TimeSeries) -> "MultiLeadRecord":
        leads = dict(self.leads)
        if name not in leads:
            raise MissingLead(name)
        leads[name] = TimeSeries(series.samples, self.sample_rate_hz, name)
        return MultiLeadRecord(leads, self.sample_rate_hz, self.record_id)

    def __repr__(self):
        return f"MultiLeadRecord({self.names}, n={len(self)}, fs={self.sample_rate_hz})"


@dataclass(frozen=True, eq=False)
class DowerMatrix:
    rows: np.ndarray
    lead_order: tuple[str, ...] = EIGHT_LEADS
    output_names: tuple[str, ...] = VCG_LEADS

    def __post_init__(self):
        rows = np.array(self.rows, dtype=float)
        order = tuple(self.lead_order)
        if rows.shape != (3, 8):
            raise DataError(f"Dower matrix must be 3 x 8, got {rows.shape}")
        if not np.all(np.isfinite(rows)):
            raise DataError("Dower matrix has non-finite entries")
        if len(order) != 8 or len(set(order)) != 8:
            raise DataError(f"lead_order must name 8 distinct leads, got {order}")
        rows.flags.writeable = False
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "lead_order", order)
        object.__setattr__(self, "output_names", tuple(self.output_names))


# Columns follow EIGHT_LEADS: V1..V6, I, II.
INVERSE_DOWER = DowerMatrix(
    [
        [-0.172, -0.074, 0.122, 0.231, 0.239, 0.194, 0.156, -0.010],
        [0.057, -0.019, -0.106, -0.022, 0.041, 0.048, -0.227, 0.887],
        [-0.229, -0.310, -0.246, -0.063, 0.055, 0.108, 0.022, 0.102],
    ]
)


def load_dower_matrix(path) -> DowerMatrix:
    """Read ``{"rows": [[...8], [...8], [...8]], "lead_order": [...]}``."""
    with open(os.fspath(path)) as fh:
        cfg = json.load(fh)
    try:
        return DowerMatrix(cfg["rows"], tuple(cfg.get("lead_order", EIGHT_LEADS)))
    except (KeyError, TypeError) as exc:
        raise DataError(f"{path}: bad Dower matrix file ({exc})") from exc


def detect_constant_leads(record: MultiLeadRecord, epsilon: float = 1e-6) -> list[str]:
    """Names of leads whose peak-to-peak range is at most ``epsilon``."""
    if epsilon < 0:
        raise ValueError("epsilon must be >= 0")
    return [name for name, ts in record.leads.items() if np.ptp(ts.samples) <= epsilon]


def select_eight_leads(record12: MultiLeadRecord) -> MultiLeadRecord:
    """Keep V1-V6, I, II in that order; the limb leads III, aVR, aVL, aVF are
    linear combinations of I and II."""
    for name in EIGHT_LEADS:
        if name not in record12:
            raise MissingLead(name)
    return MultiLeadRecord({n: record12[n] for n in EIGHT_LEADS}, record12.sample_rate_hz, record12.record_id)


def inverse_dower(record8: MultiLeadRecord, matrix: DowerMatrix = INVERSE_DOWER) -> MultiLeadRecord:
    """Map eight ECG leads to the three VCG channels."""
    if tuple(record8.names) != matrix.lead_order:
        raise LeadOrderMismatch(f"record leads {record8.names} != matrix order {list(matrix.lead_order)}")
    vcg = record8.to_array() @ matrix.rows.T
    return MultiLeadRecord.from_array(vcg, matrix.output_names, record8.sample_rate_hz, record8.record_id)
