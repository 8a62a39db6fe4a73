"""Delay-coordinate reconstruction and embedding-parameter estimation.

Index convention: sample ``x(t)`` with 1-based ``t`` in the usual textbook
notation is ``samples[t - 1]`` here. State ``t`` of a delay embedding,
``X_t = (x(t), x(t + tau), ..., x(t + (m - 1) tau))``, is row ``t - 1`` of
``Trajectory.states``, so ``states[i, j] == samples[i + j * tau]``.

Dimension is estimated with false nearest neighbours (distance-ratio and
attractor-size tests) and delay with an average-displacement plateau rule.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.spatial import cKDTree

from .errors import EmptyInput, NonFiniteSample, NonFiniteState, SeriesDegenerate, SeriesTooShort

__all__ = [
    "TimeSeries",
    "EmbeddingParams",
    "Trajectory",
    "FNNNotConverged",
    "delay_embed",
    "average_displacement",
    "estimate_delay_ad",
    "fnn_fractions",
    "estimate_dimension_fnn",
    "estimate_params",
    "select_joint_params",
]


class FNNNotConverged(UserWarning):
    """The false-neighbour fraction never fell below threshold."""


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """Uniformly sampled scalar signal."""

    samples: np.ndarray
    sample_rate_hz: float = 1.0
    label: str = ""

    def __post_init__(self):
        x = np.array(self.samples, dtype=float).ravel()
        if x.size < 2:
            raise SeriesTooShort(f"series {self.label!r} needs at least 2 samples, got {x.size}")
        if not np.all(np.isfinite(x)):
            bad = int(np.flatnonzero(~np.isfinite(x))[0])
            raise NonFiniteSample(f"series {self.label!r} has a non-finite sample at index {bad}")
        if not self.sample_rate_hz > 0:
            raise ValueError(f"sample_rate_hz must be positive, got {self.sample_rate_hz}")
        x.flags.writeable = False
        object.__setattr__(self, "samples", x)

    def __len__(self):
        return self.samples.size

    @property
    def duration_s(self) -> float:
        return len(self) / self.sample_rate_hz


@dataclass(frozen=True)
class EmbeddingParams:
    m: int
    tau: int

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 1:
            raise ValueError(f"embedding dimension must be an integer >= 1, got {self.m}")
        if int(self.tau) != self.tau or self.tau < 1:
            raise ValueError(f"delay must be an integer >= 1, got {self.tau}")
        object.__setattr__(self, "m", int(self.m))
        object.__setattr__(self, "tau", int(self.tau))

    def n_states(self, n_samples: int) -> int:
        return n_samples - (self.m - 1) * self.tau


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Ordered sequence of m-dimensional states, shape ``(P, m)``."""

    states: np.ndarray
    params: EmbeddingParams
    source_label: str = ""
    sample_rate_hz: float = 1.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        s = np.array(self.states, dtype=float)
        if s.ndim == 1:
            s = s.reshape(-1, self.params.m)
        if s.ndim != 2 or s.shape[1] != self.params.m:
            raise ValueError(f"states must have shape (P, {self.params.m}), got {s.shape}")
        finite = np.isfinite(s).all(axis=1)
        if not finite.all():
            step = int(np.flatnonzero(~finite)[0])
            raise NonFiniteState(f"non-finite state at step {step}", step=step)
        s.flags.writeable = False
        object.__setattr__(self, "states", s)

    def __len__(self):
        return self.states.shape[0]

    @property
    def m(self) -> int:
        return self.params.m


def _as_series(series) -> TimeSeries:
    if isinstance(series, TimeSeries):
        return series
    return TimeSeries(np.asarray(series, dtype=float))


def _embed_array(x: np.ndarray, m: int, tau: int) -> np.ndarray:
    n = x.size - (m - 1) * tau
    return np.stack([x[j * tau : j * tau + n] for j in range(m)], axis=1)


def delay_embed(series, params: EmbeddingParams) -> Trajectory:
    """Build the delay-coordinate trajectory of ``series``.

    Raises :class:`SeriesTooShort` unless at least two states fit.
    """
    ts = _as_series(series)
    n = params.n_states(len(ts))
    if n < 2:
        raise SeriesTooShort(
            f"{len(ts)} samples cannot hold 2 states with m={params.m}, tau={params.tau}"
        )
    return Trajectory(
        _embed_array(ts.samples, params.m, params.tau),
        params,
        source_label=ts.label,
        sample_rate_hz=ts.sample_rate_hz,
    )


def average_displacement(series, max_tau: int, probe_dim: int = 3) -> np.ndarray:
    """Average displacement curve ``S(tau)`` for ``tau = 0..max_tau``.

    ``S(tau)`` is the mean distance between each delay vector and its
    zero-delay reference ``(x(t), ..., x(t))``.
    """
    ts = _as_series(series)
    x = ts.samples
    if probe_dim < 2:
        raise ValueError("probe_dim must be >= 2")
    if x.size - (probe_dim - 1) * max_tau < 2:
        raise SeriesTooShort(
            f"{x.size} samples too short for probe_dim={probe_dim} at tau={max_tau}"
        )
    curve = np.zeros(max_tau + 1)
    for tau in range(1, max_tau + 1):
        X = _embed_array(x, probe_dim, tau)
        curve[tau] = np.linalg.norm(X[:, 1:] - X[:, :1], axis=1).mean()
    return curve


def estimate_delay_ad(
    series, max_tau: int = 50, slope_fraction: float = 0.1, probe_dim: int = 3
) -> int:
    """Delay at which the average displacement curve stops growing.

    Returns the smallest ``tau >= 1`` whose next increment
    ``S(tau + 1) - S(tau)`` falls below ``slope_fraction * S(1)``, i.e. the
    last delay before the plateau. Falls back to ``max_tau``.
    """
    if max_tau < 2:
        raise ValueError("max_tau must be >= 2")
    if not 0 < slope_fraction < 1:
        raise ValueError("slope_fraction must lie in (0, 1)")
    curve = average_displacement(series, max_tau, probe_dim)
    first = curve[1] - curve[0]
    if not first > 0:
        raise SeriesDegenerate("average displacement is identically zero (constant series)")
    increments = np.diff(curve)
    for tau in range(1, max_tau):
        if increments[tau] < slope_fraction * first:
            return tau
    return max_tau


def fnn_fractions(
    series, tau: int, max_m: int = 10, rtol: float = 15.0, atol: float = 2.0
) -> np.ndarray:
    """False-nearest-neighbour fraction for ``m = 1..max_m``.

    Element ``m - 1`` is the fraction of points whose nearest neighbour in
    dimension ``m`` is false by the distance-ratio test (``rtol``) or
    the attractor-size test (``atol``, relative to the series std).
    """
    ts = _as_series(series)
    x = ts.samples
    if max_m < 1 or tau < 1:
        raise ValueError("max_m and tau must be >= 1")
    if x.size - max_m * tau < 2:
        raise SeriesTooShort(f"{x.size} samples too short for m={max_m + 1}, tau={tau}")
    sigma = x.std()
    if not sigma > 0:
        raise SeriesDegenerate("constant series has no false-neighbour structure")
    # distances below this are treated as exact repeats (periodic signals)
    floor = 1e-12 * sigma
    out = np.empty(max_m)
    for m in range(1, max_m + 1):
        n = x.size - m * tau
        X = _embed_array(x[: n + (m - 1) * tau], m, tau)
        nxt = x[m * tau : m * tau + n]
        dist, idx = cKDTree(X).query(X, k=2)
        self_first = idx[:, 0] == np.arange(n)
        j = np.where(self_first, idx[:, 1], idx[:, 0])
        d = np.where(self_first, dist[:, 1], dist[:, 0])
        gap = np.abs(nxt - nxt[j])
        ratio_false = gap > rtol * np.maximum(d, floor)
        size_false = np.sqrt(d**2 + gap**2) > atol * sigma
        out[m - 1] = np.mean(ratio_false | size_false)
    return out


def estimate_dimension_fnn(
    series,
    tau: int,
    max_m: int = 10,
    rtol: float = 15.0,
    atol: float = 2.0,
    fnn_threshold: float = 0.01,
) -> int:
    """Smallest ``m`` whose false-neighbour fraction is below ``fnn_threshold``.

    Emits :class:`FNNNotConverged` and returns ``max_m`` when no dimension
    qualifies.
    """
    if max_m < 2:
        raise ValueError("max_m must be >= 2")
    if not (rtol > 0 and atol > 0):
        raise ValueError("rtol and atol must be positive")
    if not 0 < fnn_threshold < 1:
        raise ValueError("fnn_threshold must lie in (0, 1)")
    fractions = fnn_fractions(series, tau, max_m, rtol, atol)
    below = np.flatnonzero(fractions < fnn_threshold)
    if below.size == 0:
        warnings.warn(
            f"FNN fraction never dropped below {fnn_threshold} up to m={max_m} "
            f"(last {fractions[-1]:.3f})",
            FNNNotConverged,
            stacklevel=2,
        )
        return max_m
    return int(below[0]) + 1


def estimate_params(
    series,
    max_tau: int = 50,
    max_m: int = 10,
    slope_fraction: float = 0.1,
    rtol: float = 15.0,
    atol: float = 2.0,
    fnn_threshold: float = 0.01,
) -> EmbeddingParams:
    """AD delay followed by FNN dimension at that delay."""
    ts = _as_series(series)
    # keep AD feasible on short records
    max_tau = max(2, min(max_tau, (len(ts) - 2) // 2))
    tau = estimate_delay_ad(ts, max_tau=max_tau, slope_fraction=slope_fraction)
    max_m = max(2, min(max_m, (len(ts) - 2) // tau))
    m = estimate_dimension_fnn(ts, tau, max_m, rtol, atol, fnn_threshold)
    return EmbeddingParams(m, tau)


def select_joint_params(per_lead: Sequence[EmbeddingParams]) -> EmbeddingParams:
    """Largest dimension and smallest delay over all leads."""
    per_lead = list(per_lead)
    if not per_lead:
        raise EmptyInput("no per-lead embedding parameters given")
    return EmbeddingParams(max(p.m for p in per_lead), min(p.tau for p in per_lead))
