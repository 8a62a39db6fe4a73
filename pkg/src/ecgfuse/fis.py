"""Two-input, one-output fuzzy inference with triangular sets.

Rule activation is the AND (``min`` by default, ``prod`` optional) of the two
antecedent memberships; the crisp output is the activation-weighted average of
the consequent set peaks. Inputs are clamped into their universes.

Two ready-made systems score the trajectory-change features used by fusion:

* :func:`build_fis_d` -- step length ``D`` and its change ``D_r``; output grows
  with both.
* :func:`build_fis_alpha` -- turning cosine ``alpha`` and its change
  ``alpha_r``; output shrinks with both.

Both use uniform partitions (equally spaced peaks, neighbouring sets cross at
0.5, shoulders at the universe edges). Breakpoints, rules and the AND operator
can be overridden from JSON, see :func:`load_fis_config`.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import FisConfigError, ZeroActivation

__all__ = [
    "TriangularSet",
    "FuzzySystem",
    "membership",
    "evaluate",
    "uniform_partition",
    "build_fis_d",
    "build_fis_alpha",
    "load_fis_config",
    "FIS_D_RULES",
    "FIS_ALPHA_RULES",
]


@dataclass(frozen=True)
class TriangularSet:
    label: str
    left: float
    peak: float
    right: float

    def __post_init__(self):
        if not (self.left <= self.peak <= self.right and self.left < self.right):
            raise ValueError(
                f"set {self.label!r}: need left <= peak <= right and left < right, "
                f"got ({self.left}, {self.peak}, {self.right})"
            )

    def __call__(self, x):
        return membership(self, x)


def membership(s: TriangularSet, x):
    """Triangular membership of ``x`` (scalar or array) in ``s``.

    A shoulder set (``left == peak`` or ``peak == right``) stays at 1 beyond
    its peak.
    """
    x = np.asarray(x, dtype=float)
    if s.peak == s.left:
        up = np.ones_like(x)
    else:
        up = (x - s.left) / (s.peak - s.left)
    if s.peak == s.right:
        down = np.ones_like(x)
    else:
        down = (s.right - x) / (s.right - s.peak)
    mu = np.clip(np.minimum(up, down), 0.0, 1.0)
    return float(mu) if mu.ndim == 0 else mu


def uniform_partition(labels: Sequence[str], lo: float, hi: float) -> tuple[TriangularSet, ...]:
    """Equally spaced triangles over ``[lo, hi]`` with shoulders at both ends."""
    k = len(labels)
    if k < 2:
        raise ValueError("a partition needs at least two sets")
    peaks = np.linspace(lo, hi, k)
    sets = []
    for i, label in enumerate(labels):
        left = peaks[i - 1] if i > 0 else peaks[0]
        right = peaks[i + 1] if i < k - 1 else peaks[-1]
        sets.append(TriangularSet(label, float(left), float(peaks[i]), float(right)))
    return tuple(sets)


@dataclass(frozen=True)
class FuzzySystem:
    name: str
    input1_sets: tuple[TriangularSet, ...]
    input2_sets: tuple[TriangularSet, ...]
    output_sets: tuple[TriangularSet, ...]
    rules: Mapping[tuple[str, str], str]
    input1_universe: tuple[float, float]
    input2_universe: tuple[float, float]
    output_universe: tuple[float, float]
    input_names: tuple[str, str] = ("x1", "x2")
    output_name: str = "y"
    and_op: str = "min"
    _centers: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "input1_sets", tuple(self.input1_sets))
        object.__setattr__(self, "input2_sets", tuple(self.input2_sets))
        object.__setattr__(self, "output_sets", tuple(self.output_sets))
        object.__setattr__(self, "rules", dict(self.rules))
        if self.and_op not in ("min", "prod"):
            raise FisConfigError(f"{self.name}: and_op must be 'min' or 'prod'")
        centers = {s.label: s.peak for s in self.output_sets}
        object.__setattr__(self, "_centers", centers)

        labels1 = [s.label for s in self.input1_sets]
        labels2 = [s.label for s in self.input2_sets]
        for labels, what in ((labels1, "input1"), (labels2, "input2"), (list(centers), "output")):
            if len(set(labels)) != len(labels):
                raise FisConfigError(f"{self.name}: duplicate {what} labels {labels}")
        expected = {(a, b) for a in labels1 for b in labels2}
        if set(self.rules) != expected:
            missing = sorted(expected - set(self.rules))
            extra = sorted(set(self.rules) - expected)
            raise FisConfigError(f"{self.name}: rule table not total (missing {missing}, unknown {extra})")
        lo, hi = self.output_universe
        for key, out in self.rules.items():
            if out not in centers:
                raise FisConfigError(f"{self.name}: rule {key} -> unknown consequent {out!r}")
        for label, c in centers.items():
            if not lo <= c <= hi:
                raise FisConfigError(f"{self.name}: output center {label}={c} outside [{lo}, {hi}]")
        for sets, (a, b), what in (
            (self.input1_sets, self.input1_universe, "input1"),
            (self.input2_sets, self.input2_universe, "input2"),
        ):
            grid = np.linspace(a, b, 1001)
            total = sum(membership(s, grid) for s in sets)
            if np.any(total <= 0):
                gap = float(grid[np.argmin(total)])
                raise FisConfigError(f"{self.name}: {what} partition leaves {gap} uncovered")

    @property
    def output_centers(self) -> dict[str, float]:
        return dict(self._centers)

    def __call__(self, in1, in2):
        return evaluate(self, in1, in2)


def evaluate(system: FuzzySystem, in1, in2):
    """Crisp output for inputs ``in1``, ``in2`` (scalars or broadcastable arrays)."""
    x1 = np.clip(np.asarray(in1, dtype=float), *system.input1_universe)
    x2 = np.clip(np.asarray(in2, dtype=float), *system.input2_universe)
    x1, x2 = np.broadcast_arrays(x1, x2)
    mu1 = {s.label: membership(s, x1) for s in system.input1_sets}
    mu2 = {s.label: membership(s, x2) for s in system.input2_sets}
    conj = np.minimum if system.and_op == "min" else np.multiply
    num = np.zeros(x1.shape)
    den = np.zeros(x1.shape)
    for (a, b), out in system.rules.items():
        beta = conj(mu1[a], mu2[b])
        num = num + beta * system._centers[out]
        den = den + beta
    if np.any(den <= 0):
        raise ZeroActivation(f"{system.name}: no rule fires")
    y = num / den
    return float(y) if y.ndim == 0 else y


def _table(rows: Sequence[str], cols: Sequence[str], cells: Sequence[Sequence[str]]):
    # cells[r][c] is the consequent for (cols[c], rows[r]): input1 across, input2 down
    return {(c, r): cells[i][j] for i, r in enumerate(rows) for j, c in enumerate(cols)}


# Step length D across, its change D_r down.
FIS_D_RULES = _table(
    ["S", "M", "B"],
    ["S", "M", "B"],
    [
        ["S", "SR", "M"],
        ["SR", "M", "BR"],
        ["M", "BR", "B"],
    ],
)

# Turning cosine alpha across, its change alpha_r down.
FIS_ALPHA_RULES = _table(
    ["S", "M", "B"],
    ["NB", "NM", "Z", "PM", "PB"],
    [
        ["VB", "B", "BR", "MR", "M"],
        ["B", "BR", "MR", "M", "SR"],
        ["BR", "MR", "M", "SR", "S"],
    ],
)

_D_LABELS = ("S", "M", "B")
_OD_LABELS = ("S", "SR", "M", "BR", "B")
_ALPHA_LABELS = ("NB", "NM", "Z", "PM", "PB")
_OALPHA_LABELS = ("S", "SR", "M", "MR", "BR", "B", "VB")


def build_fis_d(and_op: str = "min") -> FuzzySystem:
    return FuzzySystem(
        name="fis_d",
        input1_sets=uniform_partition(_D_LABELS, 0.0, 1.0),
        input2_sets=uniform_partition(_D_LABELS, 0.0, 1.0),
        output_sets=uniform_partition(_OD_LABELS, 0.0, 1.0),
        rules=FIS_D_RULES,
        input1_universe=(0.0, 1.0),
        input2_universe=(0.0, 1.0),
        output_universe=(0.0, 1.0),
        input_names=("D", "D_r"),
        output_name="O_d",
        and_op=and_op,
    )


def build_fis_alpha(and_op: str = "min") -> FuzzySystem:
    return FuzzySystem(
        name="fis_alpha",
        input1_sets=uniform_partition(_ALPHA_LABELS, -1.0, 1.0),
        input2_sets=uniform_partition(_D_LABELS, 0.0, 1.0),
        output_sets=uniform_partition(_OALPHA_LABELS, 0.0, 1.0),
        rules=FIS_ALPHA_RULES,
        input1_universe=(-1.0, 1.0),
        input2_universe=(0.0, 1.0),
        output_universe=(0.0, 1.0),
        input_names=("alpha", "alpha_r"),
        output_name="O_alpha",
        and_op=and_op,
    )


def _override_sets(default: tuple[TriangularSet, ...], spec, where: str):
    if isinstance(spec, Mapping):
        items = [(label, spec[label]) for label in spec]
    else:
        spec = list(spec)
        if len(spec) != len(default):
            raise FisConfigError(
                f"{where}: expected {len(default)} triangles "
                f"({', '.join(s.label for s in default)}), got {len(spec)}"
            )
        items = [(s.label, tri) for s, tri in zip(default, spec)]
    out = []
    for label, tri in items:
        try:
            left, peak, right = (float(v) for v in tri)
            out.append(TriangularSet(str(label), left, peak, right))
        except (TypeError, ValueError) as exc:
            raise FisConfigError(f"{where}.{label}: {exc}") from exc
    return tuple(out)


def _override(base: FuzzySystem, cfg: Mapping) -> FuzzySystem:
    n1, n2 = base.input_names
    known = {n1, n2, base.output_name, "rules", "and"}
    unknown = set(cfg) - known
    if unknown:
        raise FisConfigError(f"{base.name}: unknown keys {sorted(unknown)} (allowed {sorted(known)})")
    in1 = _override_sets(base.input1_sets, cfg[n1], f"{base.name}.{n1}") if n1 in cfg else base.input1_sets
    in2 = _override_sets(base.input2_sets, cfg[n2], f"{base.name}.{n2}") if n2 in cfg else base.input2_sets
    outs = base.output_sets
    if base.output_name in cfg:
        outs = _override_sets(base.output_sets, cfg[base.output_name], f"{base.name}.{base.output_name}")
    rules = dict(base.rules)
    if "rules" in cfg:
        rules = {}
        for entry in cfg["rules"]:
            if len(entry) != 3:
                raise FisConfigError(f"{base.name}.rules: entries are [in1, in2, out], got {entry}")
            a, b, out = (str(v) for v in entry)
            rules[(a, b)] = out
    return FuzzySystem(
        name=base.name,
        input1_sets=in1,
        input2_sets=in2,
        output_sets=outs,
        rules=rules,
        input1_universe=base.input1_universe,
        input2_universe=base.input2_universe,
        output_universe=base.output_universe,
        input_names=base.input_names,
        output_name=base.output_name,
        and_op=cfg.get("and", base.and_op),
    )


def load_fis_config(source=None) -> tuple[FuzzySystem, FuzzySystem]:
    """Build ``(fis_d, fis_alpha)`` from defaults plus optional JSON overrides.

    ``source`` is a path, an already-parsed mapping, or None (defaults only).
    Schema::

        {
          "fis_d": {
            "D":   [[l, p, r], [l, p, r], [l, p, r]],   # S, M, B
            "D_r": {"S": [l, p, r], ...},              # or keyed by label
            "O_d": [[l, p, r], ...],                   # consequent peaks are the centers
            "rules": [["S", "S", "S"], ...],           # [in1, in2, out]; replaces the table
            "and": "min"                               # or "prod"
          },
          "fis_alpha": {"alpha": ..., "alpha_r": ..., "O_alpha": ..., "rules": ..., "and": ...}
        }

    Every key is optional.
    """
    fis_d, fis_alpha = build_fis_d(), build_fis_alpha()
    if source is None:
        return fis_d, fis_alpha
    if isinstance(source, Mapping):
        cfg = source
    else:
        path = os.fspath(source)
        try:
            with open(path) as fh:
                cfg = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FisConfigError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(cfg, Mapping):
        raise FisConfigError("FIS config must be a JSON object")
    unknown = set(cfg) - {"fis_d", "fis_alpha"}
    if unknown:
        raise FisConfigError(f"unknown top-level keys {sorted(unknown)}")
    if "fis_d" in cfg:
        fis_d = _override(fis_d, cfg["fis_d"])
    if "fis_alpha" in cfg:
        fis_alpha = _override(fis_alpha, cfg["fis_alpha"])
    return fis_d, fis_alpha
