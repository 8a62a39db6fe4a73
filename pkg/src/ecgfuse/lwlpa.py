"""Local weighted linear prediction of a reconstructed trajectory.

For a query state ``X_k`` the ``n`` nearest states with a known successor are
weighted by ``exp(-lambda (d_i - d_min))`` (normalised), a single affine map
``Y = a e + b X`` is fitted to the neighbour -> successor pairs by weighted
least squares, and the prediction is the weighted mean of the fitted
successors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .embedding import TimeSeries, Trajectory
from .errors import DimensionMismatch, IndexOutOfRange, NotEnoughStates

__all__ = [
    "NeighborSet",
    "AffineFit",
    "find_neighbors",
    "neighbor_weights",
    "weighted_affine_fit",
    "predict_next",
    "predict_from_library",
    "forecast_one_step",
    "extract_series",
    "persistence_forecast",
    "default_neighbors",
]


@dataclass(frozen=True, eq=False)
class NeighborSet:
    indices: np.ndarray
    distances: np.ndarray

    def __len__(self):
        return self.indices.size


@dataclass(frozen=True)
class AffineFit:
    a: float
    b: float
    residual: float
    degenerate: bool = False

    def apply(self, states):
        return self.a + self.b * np.asarray(states, dtype=float)


def default_neighbors(m: int) -> int:
    return 2 * (m + 1)


def _nearest(candidates: np.ndarray, pool: np.ndarray, query: np.ndarray, n: int) -> NeighborSet:
    if pool.size < n:
        raise NotEnoughStates(f"need {n} neighbour candidates, only {pool.size} eligible")
    d = np.linalg.norm(candidates[pool] - query, axis=1)
    # stable sort keeps the lower index first among equal distances
    order = np.argsort(d, kind="stable")[:n]
    return NeighborSet(pool[order], d[order])


def find_neighbors(traj: Trajectory, k: int, n: int, theiler: int = 0) -> NeighborSet:
    """The ``n`` states nearest to state ``k`` that have a successor.

    Excludes ``k`` itself, the final state, and (when ``theiler > 0``) every
    state within ``theiler`` steps of ``k``. Ties go to the lower index.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    P = len(traj)
    if not 0 <= k < P:
        raise IndexOutOfRange(f"state index {k} outside [0, {P})")
    pool = np.arange(P - 1)
    pool = pool[np.abs(pool - k) > theiler] if theiler > 0 else pool[pool != k]
    return _nearest(traj.states, pool, traj.states[k], n)


def neighbor_weights(neighbors, lam: float = 1.0) -> np.ndarray:
    """Normalised exponential weights of neighbour distances."""
    if not lam > 0:
        raise ValueError("lambda must be positive")
    d = np.asarray(getattr(neighbors, "distances", neighbors), dtype=float)
    w = np.exp(-lam * (d - d.min()))
    return w / w.sum()


def weighted_affine_fit(current_states, next_states, weights) -> AffineFit:
    """Weighted least-squares ``(a, b)`` for ``Y_i ~ a e + b X_i``.

    Minimises ``sum_i w_i ||Y_i - a e - b X_i||^2`` over all components. When
    the ``X`` components carry no spread (normal matrix singular to
    ``1e-12`` relative) the fit falls back to ``b = 0`` and ``a`` the weighted
    mean of ``Y``, flagged as ``degenerate``.
    """
    X = np.atleast_2d(np.asarray(current_states, dtype=float))
    Y = np.atleast_2d(np.asarray(next_states, dtype=float))
    w = np.asarray(weights, dtype=float).ravel()
    if X.shape != Y.shape:
        raise DimensionMismatch(f"current states {X.shape} vs next states {Y.shape}")
    if X.shape[0] != w.size or w.size == 0:
        raise DimensionMismatch(f"{X.shape[0]} state pairs but {w.size} weights")
    if np.any(w < 0) or not w.sum() > 0:
        raise ValueError("weights must be non-negative and not all zero")

    wsum = w.sum() * X.shape[1]
    x_bar = (w @ X.sum(axis=1)) / wsum
    y_bar = (w @ Y.sum(axis=1)) / wsum
    dx = X - x_bar
    dy = Y - y_bar
    sxx = w @ (dx * dx).sum(axis=1)
    sxy = w @ (dx * dy).sum(axis=1)
    scale = w @ (X * X).sum(axis=1)
    degenerate = not sxx > 1e-12 * scale
    if degenerate:
        a, b = y_bar, 0.0
    else:
        b = sxy / sxx
        a = y_bar - b * x_bar
    r = Y - a - b * X
    residual = float(w @ (r * r).sum(axis=1))
    return AffineFit(float(a), float(b), residual, degenerate)


def _predict(library: np.ndarray, neighbors: NeighborSet, lam: float) -> np.ndarray:
    w = neighbor_weights(neighbors, lam)
    X = library[neighbors.indices]
    Y = library[neighbors.indices + 1]
    fit = weighted_affine_fit(X, Y, w)
    return w @ fit.apply(X)


def predict_next(traj: Trajectory, k: int, n: int | None = None, lam: float = 1.0, theiler: int = 0) -> np.ndarray:
    """Estimate the successor of state ``k`` from its neighbours in ``traj``."""
    n = default_neighbors(traj.m) if n is None else n
    nb = find_neighbors(traj, k, n, theiler)
    return _predict(traj.states, nb, lam)


def predict_from_library(library: Trajectory, query, n: int | None = None, lam: float = 1.0) -> np.ndarray:
    """Estimate the successor of an out-of-sample ``query`` state.

    Neighbours come from ``library`` only, so held-out data never leaks in.
    """
    q = np.asarray(query, dtype=float).ravel()
    if q.size != library.m:
        raise DimensionMismatch(f"query has {q.size} components, library m={library.m}")
    n = default_neighbors(library.m) if n is None else n
    nb = _nearest(library.states, np.arange(len(library) - 1), q, n)
    return _predict(library.states, nb, lam)


def forecast_one_step(traj: Trajectory, horizon: int, n: int | None = None, lam: float = 1.0):
    """One-step predictions for the last ``horizon`` transitions of ``traj``.

    The library is every state before the held-out block. Returns
    ``(predicted, actual)`` arrays of shape ``(horizon, m)``; row ``i``
    predicts state ``P - horizon + i``.
    """
    P = len(traj)
    if not 1 <= horizon < P - 1:
        raise NotEnoughStates(f"horizon {horizon} leaves no library in {P} states")
    start = P - horizon
    library = Trajectory(traj.states[:start], traj.params, traj.source_label, traj.sample_rate_hz)
    pred = np.array([predict_from_library(library, traj.states[k - 1], n, lam) for k in range(start, P)])
    return pred, traj.states[start:].copy()


def extract_series(traj: Trajectory) -> TimeSeries:
    """First component of every state as a scalar series."""
    if len(traj) == 0:
        raise NotEnoughStates("empty trajectory")
    return TimeSeries(traj.states[:, 0].copy(), traj.sample_rate_hz, traj.source_label)


def persistence_forecast(traj: Trajectory, horizon: int) -> np.ndarray:
    """Naive baseline ``X_{k+1} = X_k`` for the same block as :func:`forecast_one_step`."""
    P = len(traj)
    return traj.states[P - horizon - 1 : P - 1].copy()
