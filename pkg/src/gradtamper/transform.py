"""Power transform of probability vectors and its stationary threshold.

The transform rescales a probability vector entrywise to ``p_i**alpha`` and
renormalizes.  ``alpha = 1`` is the identity, ``alpha = 0`` collapses any
distribution to uniform, and intermediate values flatten the distribution
while preserving rank order.  For ``alpha < 1`` there is a single crossover
probability, the stationary threshold: entries below it grow under the
transform, entries above it shrink, and an entry exactly at the threshold is
a fixed point.  The threshold is a non-decreasing function of alpha, which is
what makes the transform a controlled "flattening" knob.

Everything here is a pure function of its inputs and safe to call from any
number of threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "SIMPLEX_TOL",
    "MONOTONE_TOL",
    "TamperSpec",
    "MonotonicityReport",
    "prob_vec",
    "transform_probabilities",
    "stationary_threshold",
    "threshold_partition",
    "threshold_monotonicity_check",
]

# Construction tolerance on the input simplex; outputs of the transform stay
# within ~C*eps of exact normalization, far inside this.
SIMPLEX_TOL = 1e-9

# Successive threshold differences more negative than this fail monotonicity.
MONOTONE_TOL = -1e-10


@dataclass(frozen=True)
class TamperSpec:
    """Tampering configuration: strength ``alpha`` and activation epoch.

    ``alpha`` must lie in [0, 1]; 1 disables tampering, 0 replaces the
    backward-pass probabilities with the uniform distribution.  Tampering
    activates at ``start_epoch`` (0 = from the first epoch), which lets a run
    warm up untampered before the transform kicks in.
    """

    alpha: float
    start_epoch: int = 0

    def __post_init__(self) -> None:
        if not (isinstance(self.alpha, (int, float)) and math.isfinite(self.alpha)):
            raise ValueError(f"alpha must be a finite real, got {self.alpha!r}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha!r}")
        if not (isinstance(self.start_epoch, int) and self.start_epoch >= 0):
            raise ValueError(f"start_epoch must be a non-negative int, got {self.start_epoch!r}")


def prob_vec(values, *, tol: float = SIMPLEX_TOL) -> np.ndarray:
    """Validate a probability vector and return it as a fresh float64 array.

    Requires at least two entries, all finite and non-negative, summing to 1
    within ``tol``.  Raises ValueError otherwise.
    """
    p = np.asarray(values, dtype=np.float64)
    if p.ndim != 1:
        raise ValueError(f"probability vector must be 1-D, got shape {p.shape}")
    if p.size < 2:
        raise ValueError(f"probability vector needs at least 2 entries, got {p.size}")
    if not np.all(np.isfinite(p)):
        raise ValueError("probability vector contains NaN or Inf")
    if np.any(p < 0.0):
        raise ValueError(f"probability vector has negative entries (min {p.min()!r})")
    total = float(p.sum())
    if abs(total - 1.0) > tol:
        raise ValueError(f"probability vector sums to {total!r}, expected 1 within {tol}")
    return p.copy()


def _check_alpha(alpha: float, *, exclude_one: bool = False) -> float:
    if not (isinstance(alpha, (int, float)) and math.isfinite(alpha)):
        raise ValueError(f"alpha must be a finite real, got {alpha!r}")
    alpha = float(alpha)
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha!r}")
    if exclude_one and alpha == 1.0:
        raise ValueError("alpha = 1 has no stationary threshold: every point is stationary")
    return alpha


def power_transform_rows(p: np.ndarray, alpha: float) -> np.ndarray:
    """Apply the power transform along the last axis, without validation.

    Kernel shared by the public vector operation and the batched backward
    pass.  Powers are evaluated as exp(alpha * log p) with zero entries
    short-circuited to zero, avoiding pow() edge behavior near 0.
    """
    if alpha == 0.0:
        return np.full_like(p, 1.0 / p.shape[-1])
    if alpha == 1.0:
        return p.copy()
    t = np.zeros_like(p)
    pos = p > 0.0
    t[pos] = np.exp(alpha * np.log(p[pos]))
    return t / t.sum(axis=-1, keepdims=True)


def transform_probabilities(p, alpha: float) -> np.ndarray:
    """Rescale a probability vector to ``p_i**alpha / sum_j p_j**alpha``.

    At ``alpha = 0`` the result is defined as exactly uniform (the limit of
    the transform), regardless of zero entries; at ``alpha = 1`` the input is
    returned unchanged.  Rank order of entries is preserved for alpha > 0,
    ties included.
    """
    p = prob_vec(p)
    alpha = _check_alpha(alpha)
    return power_transform_rows(p, alpha)


def stationary_threshold(p, alpha: float) -> float:
    """Crossover probability ``(sum_j p_j**alpha) ** (1 / (alpha - 1))``.

    Entries of ``p`` at most this value do not decrease under the transform;
    entries above it strictly decrease.  Defined for alpha in [0, 1); alpha=1
    is rejected because the exponent is singular there (the transform is the
    identity and every point is stationary).  The result always lies in
    [1/C, 1]; both ends are clamped to guard against last-ulp rounding since
    the bounds are attained (at alpha = 0 and at uniform ``p``).
    """
    p = prob_vec(p)
    alpha = _check_alpha(alpha, exclude_one=True)
    c = p.size
    if alpha == 0.0:
        return 1.0 / c
    pos = p[p > 0.0]
    total = float(np.exp(alpha * np.log(pos)).sum())
    tau = math.exp(math.log(total) / (alpha - 1.0))
    return min(max(tau, 1.0 / c), 1.0)


def threshold_partition(p, alpha: float) -> tuple[set[int], set[int]]:
    """Split indices of ``p`` into (rising, falling) around the threshold.

    ``rising`` holds indices with ``p_i <= threshold`` (these do not decrease
    under the transform), ``falling`` the rest (these strictly decrease).
    Zero entries always land in ``rising``.
    """
    p = prob_vec(p)
    tau = stationary_threshold(p, alpha)
    rising = set(np.flatnonzero(p <= tau).tolist())
    falling = set(range(p.size)) - rising
    return rising, falling


@dataclass(frozen=True)
class MonotonicityReport:
    """Threshold evaluated over an alpha grid plus the worst successive step."""

    alphas: np.ndarray
    thresholds: np.ndarray
    min_successive_diff: float
    passed: bool


def threshold_monotonicity_check(p, alpha_grid) -> MonotonicityReport:
    """Evaluate the stationary threshold across an increasing alpha grid.

    Passes iff every successive difference of the threshold is at least
    ``MONOTONE_TOL`` (the tolerance absorbs double-precision rounding; the
    threshold is analytically non-decreasing in alpha).
    """
    p = prob_vec(p)
    grid = np.asarray(alpha_grid, dtype=np.float64)
    if grid.ndim != 1 or grid.size == 0:
        raise ValueError("alpha grid must be a non-empty 1-D sequence")
    if not np.all(np.isfinite(grid)):
        raise ValueError("alpha grid contains NaN or Inf")
    if grid[0] < 0.0 or grid[-1] >= 1.0:
        raise ValueError(f"alpha grid values must lie in [0, 1), got range [{grid[0]}, {grid[-1]}]")
    if grid.size > 1 and np.any(np.diff(grid) <= 0.0):
        raise ValueError("alpha grid must be strictly increasing")

    c = p.size
    logp = np.log(p[p > 0.0])
    # sum_j p_j**a for the whole grid at once; a = 0 rows use the uniform-limit
    # convention where zero entries still count toward C.
    totals = np.exp(grid[:, None] * logp[None, :]).sum(axis=1)
    with np.errstate(divide="ignore"):
        taus = np.exp(np.log(totals) / (grid - 1.0))
    taus = np.clip(taus, 1.0 / c, 1.0)
    taus[grid == 0.0] = 1.0 / c

    min_diff = float(np.diff(taus).min()) if grid.size > 1 else math.inf
    return MonotonicityReport(
        alphas=grid.copy(),
        thresholds=taus,
        min_successive_diff=min_diff,
        passed=min_diff >= MONOTONE_TOL,
    )
