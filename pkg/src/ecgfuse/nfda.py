"""Fusion of several reconstructed trajectories into one.

Every lead's trajectory is scored step by step on how sharply it moves: the
step length ``D`` and its change ``D_r`` feed one fuzzy system, the turning
cosine ``alpha`` and its change ``alpha_r`` feed the other. Their summed
outputs become per-lead weights through a softmax of sharpness ``gamma``.
Each step then fits one affine map ``X(p+1) = a e + b X(p)`` to the weighted
lead transitions and pushes the fused state through it.

The weights and fits depend only on the input leads, so they are computed for
all steps up front; only the final recursion is sequential.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .embedding import Trajectory
from .errors import (
    DimensionMismatch,
    EmptyInput,
    IndexOutOfRange,
    NonFiniteState,
    TooFewStates,
    TooFewTrajectories,
)
from .fis import FuzzySystem, build_fis_alpha, build_fis_d

__all__ = [
    "StepFeatures",
    "FusionWeights",
    "FusionConfig",
    "FusionResult",
    "raw_step_features",
    "normalizers",
    "step_features",
    "softmax_weights",
    "trajectory_weights",
    "initial_state",
    "fuse",
    "fuse_detailed",
    "disorder_metric",
]

log = logging.getLogger(__name__)

NORMALIZATIONS = ("global_max", "amplitude_range")


@dataclass(frozen=True)
class StepFeatures:
    d: float
    d_r: float
    alpha: float
    alpha_r: float


@dataclass(frozen=True, eq=False)
class FusionWeights:
    per_lead: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "per_lead", np.asarray(self.per_lead, dtype=float))


@dataclass(frozen=True)
class FusionConfig:
    gamma: float = 1.0
    bootstrap_steps: int = 3
    normalization: str = "global_max"
    fis_d: FuzzySystem = field(default_factory=build_fis_d)
    fis_alpha: FuzzySystem = field(default_factory=build_fis_alpha)

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if self.bootstrap_steps < 3:
            raise ValueError("bootstrap_steps must be >= 3 (features need three steps of history)")
        if self.normalization not in NORMALIZATIONS:
            raise ValueError(f"normalization must be one of {NORMALIZATIONS}")


def raw_step_features(states) -> dict[str, np.ndarray]:
    """Unnormalised ``D, D_r, alpha, alpha_r`` for every step ``p``.

    Entries that need more history than ``p`` provides are NaN: ``D`` from
    ``p = 1``, ``D_r`` and ``alpha`` from ``p = 2``, ``alpha_r`` from ``p = 3``.
    A zero-length step counts as no turn (``alpha = 1``).
    """
    X = np.asarray(states, dtype=float)
    P = X.shape[0]
    V = np.full_like(X, np.nan)
    V[1:] = np.diff(X, axis=0)
    D = np.linalg.norm(V, axis=1)
    D_r = np.full(P, np.nan)
    D_r[2:] = np.abs(D[2:] - D[1:-1])
    alpha = np.full(P, np.nan)
    if P > 2:
        dot = np.einsum("ij,ij->i", V[2:], V[1:-1])
        norms = D[2:] * D[1:-1]
        with np.errstate(invalid="ignore", divide="ignore"):
            cos = np.where(norms > 0, dot / np.where(norms > 0, norms, 1.0), 1.0)
        alpha[2:] = np.clip(cos, -1.0, 1.0)
    alpha_r = np.full(P, np.nan)
    alpha_r[3:] = np.abs(alpha[3:] - alpha[2:-1])
    return {"D": D, "D_r": D_r, "alpha": alpha, "alpha_r": alpha_r}


def normalizers(trajs: Sequence[Trajectory], normalization: str = "global_max") -> np.ndarray:
    """Per-trajectory divisors that map ``D`` and ``D_r`` into ``[0, 1]``.

    ``global_max`` uses the largest step length found in any lead, so leads
    stay comparable. ``amplitude_range`` uses each lead's own bound
    ``sqrt(m) * (max - min)``, the largest possible step inside its box.
    """
    if normalization == "global_max":
        peak = 0.0
        for t in trajs:
            if len(t) > 1:
                peak = max(peak, float(np.linalg.norm(np.diff(t.states, axis=0), axis=1).max()))
        scales = np.full(len(trajs), peak)
    elif normalization == "amplitude_range":
        scales = np.array([np.sqrt(t.m) * float(np.ptp(t.states)) for t in trajs])
    else:
        raise ValueError(f"unknown normalization {normalization!r}")
    # all-stationary input: any positive divisor maps zeros to zeros
    return np.where(scales > 0, scales, 1.0)


def _normalize(raw: dict, scale: float) -> dict[str, np.ndarray]:
    return {
        "D": raw["D"] / scale,
        "D_r": raw["D_r"] / scale,
        "alpha": raw["alpha"],
        "alpha_r": raw["alpha_r"] / 2.0,
    }


def step_features(traj: Trajectory, p: int, normalizer: float) -> StepFeatures:
    """Normalised features of ``traj`` at step ``p`` (``p >= 3``)."""
    if not 3 <= p < len(traj):
        raise IndexOutOfRange(f"step {p} outside [3, {len(traj)})")
    lo = p - 3
    f = _normalize(raw_step_features(traj.states[lo : p + 1]), normalizer)
    return StepFeatures(float(f["D"][3]), float(f["D_r"][3]), float(f["alpha"][3]), float(f["alpha_r"][3]))


def softmax_weights(scores, gamma: float = 1.0, axis: int = -1) -> np.ndarray:
    """``exp(gamma (s_l - min s)) / sum`` along ``axis``."""
    s = np.asarray(scores, dtype=float)
    if s.shape[axis] == 0:
        raise EmptyInput("no scores to weight")
    # shifting by the max instead of the min gives identical ratios without overflow
    z = np.exp(gamma * (s - s.max(axis=axis, keepdims=True)))
    return z / z.sum(axis=axis, keepdims=True)


def _combined_scores(d, d_r, alpha, alpha_r, config: FusionConfig) -> np.ndarray:
    return config.fis_d(d, d_r) + config.fis_alpha(alpha, alpha_r)


def trajectory_weights(features: Sequence[StepFeatures], config: FusionConfig | None = None) -> FusionWeights:
    """Per-lead weights at one step from each lead's features."""
    config = config or FusionConfig()
    if len(features) == 0:
        raise EmptyInput("no lead features")
    d = np.array([f.d for f in features])
    d_r = np.array([f.d_r for f in features])
    alpha = np.array([f.alpha for f in features])
    alpha_r = np.array([f.alpha_r for f in features])
    scores = np.atleast_1d(_combined_scores(d, d_r, alpha, alpha_r, config))
    return FusionWeights(softmax_weights(scores, config.gamma))


def initial_state(trajs: Sequence[Trajectory]) -> np.ndarray:
    """Centroid of the leads' first states."""
    if len(trajs) == 0:
        raise TooFewTrajectories("no trajectories")
    dims = {t.m for t in trajs}
    if len(dims) != 1:
        raise DimensionMismatch(f"trajectories have differing dimensions {sorted(dims)}")
    if any(len(t) == 0 for t in trajs):
        raise TooFewStates("empty trajectory")
    return np.mean([t.states[0] for t in trajs], axis=0)


@dataclass(frozen=True, eq=False)
class FusionResult:
    trajectory: Trajectory
    weights: np.ndarray  # (P - 1, L): weight of each lead at each transition
    a: np.ndarray
    b: np.ndarray
    degenerate: np.ndarray  # steps that used the b = 0 fallback


def _stack(trajs: Sequence[Trajectory]) -> np.ndarray:
    if len(trajs) < 2:
        raise TooFewTrajectories(f"fusion needs at least 2 trajectories, got {len(trajs)}")
    dims = {t.m for t in trajs}
    if len(dims) != 1:
        raise DimensionMismatch(f"trajectories have differing dimensions {sorted(dims)}")
    P = min(len(t) for t in trajs)
    if P < 2:
        raise TooFewStates("every trajectory needs at least 2 states")
    if any(len(t) != P for t in trajs):
        log.info("truncating trajectories to the shortest (%d states)", P)
    return np.stack([t.states[:P] for t in trajs])  # (L, P, m)


def lead_weights(trajs: Sequence[Trajectory], config: FusionConfig) -> np.ndarray:
    """Weights of every lead at every step, shape ``(P, L)``."""
    S = _stack(trajs)
    L, P, _ = S.shape
    scales = normalizers(trajs, config.normalization)
    W = np.full((P, L), 1.0 / L)
    if P > config.bootstrap_steps:
        feats = [_normalize(raw_step_features(S[l]), scales[l]) for l in range(L)]
        sl = slice(config.bootstrap_steps, P)
        cols = [np.stack([f[k][sl] for f in feats], axis=1) for k in ("D", "D_r", "alpha", "alpha_r")]
        scores = _combined_scores(*cols, config)
        W[sl] = softmax_weights(scores, config.gamma, axis=1)
    return W


def _step_fits(S: np.ndarray, W: np.ndarray):
    # vectorised weighted_affine_fit for every transition p -> p+1
    X, Y = S[:, :-1, :], S[:, 1:, :]  # (L, P-1, m)
    w = W[:-1].T  # (L, P-1)
    m = S.shape[2]
    wsum = w.sum(axis=0) * m
    x_bar = (w * X.sum(axis=2)).sum(axis=0) / wsum
    y_bar = (w * Y.sum(axis=2)).sum(axis=0) / wsum
    dx = X - x_bar[None, :, None]
    dy = Y - y_bar[None, :, None]
    sxx = (w * (dx * dx).sum(axis=2)).sum(axis=0)
    sxy = (w * (dx * dy).sum(axis=2)).sum(axis=0)
    scale = (w * (X * X).sum(axis=2)).sum(axis=0)
    degenerate = ~(sxx > 1e-12 * scale)
    b = np.where(degenerate, 0.0, sxy / np.where(degenerate, 1.0, sxx))
    a = y_bar - b * x_bar
    return a, b, degenerate


def fuse_detailed(trajs: Sequence[Trajectory], config: FusionConfig | None = None) -> FusionResult:
    """Like :func:`fuse`, also returning per-step weights and fits."""
    config = config or FusionConfig()
    S = _stack(trajs)
    L, P, m = S.shape
    W = lead_weights(trajs, config)
    a, b, degenerate = _step_fits(S, W)
    out = np.empty((P, m))
    out[0] = S[:, 0, :].mean(axis=0)
    with np.errstate(over="ignore", invalid="ignore"):
        for p in range(P - 1):
            out[p + 1] = a[p] + b[p] * out[p]
            if not np.all(np.isfinite(out[p + 1])):
                raise NonFiniteState(f"fused state became non-finite at step {p + 1}", step=p + 1)
    first = trajs[0]
    traj = Trajectory(
        out,
        first.params,
        source_label="fused",
        sample_rate_hz=first.sample_rate_hz,
        meta={"leads": [t.source_label for t in trajs]},
    )
    return FusionResult(traj, W[:-1], a, b, degenerate)


def fuse(trajs: Sequence[Trajectory], config: FusionConfig | None = None) -> Trajectory:
    """Fuse equally embedded lead trajectories into a single trajectory.

    The fused path starts at the centroid of the leads' first states and
    follows ``X_F(p+1) = a_p e + b_p X_F(p)``, where ``(a_p, b_p)`` is the
    weighted fit to the leads' transitions at step ``p``. The first
    ``config.bootstrap_steps`` steps use uniform weights. Ragged inputs are
    truncated to the shortest.
    """
    return fuse_detailed(trajs, config).trajectory


def disorder_metric(traj) -> float:
    """Mean step-length change divided by the RMS state norm.

    Zero for uniform straight-line motion; unchanged by rescaling the
    trajectory.
    """
    X = np.asarray(getattr(traj, "states", traj), dtype=float)
    if X.ndim != 2 or X.shape[0] < 4:
        raise TooFewStates("disorder metric needs at least 4 states")
    D = np.linalg.norm(np.diff(X, axis=0), axis=1)
    rms = np.sqrt(np.mean(np.sum(X * X, axis=1)))
    if rms == 0:
        return 0.0
    return float(np.mean(np.abs(np.diff(D))) / rms)
