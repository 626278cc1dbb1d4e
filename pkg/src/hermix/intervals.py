"""Locate the two unknown support intervals from raw samples.

The estimator needs a pair of disjoint intervals, one per component,
before it can set up its projection system.  This module recovers them
by scanning a geometric ladder of grid scales: at each scale every grid
point is scored by how many samples fall inside a fixed window around
it, the heavy points are clustered, and the coarsest scale that yields a
clean two-cluster split wins.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InsufficientSamples, NoValidPartition
from .mixture import SampleSet

# Window constant 4 / (0.4 * sqrt(2*pi)) = 10 / sqrt(2*pi) from the
# tail bound behind the counting threshold.
_WINDOW_CONST = 10.0 / math.sqrt(2.0 * math.pi)

# Multiplier c0 in the sample-size requirement
# n >= c0 * (1/w_min) * log(r/s) * log log(r/s).
_SAMPLE_CONSTANT = 50.0


@dataclass(frozen=True)
class IntervalSearchConfig:
    """Knobs for the interval search.

    w_min is a lower bound on the smaller mixture weight, s_min the
    finest grid scale to consider, and r_hint the expected overall
    spread of the data (defaults to the observed sample range).
    heavy_fraction scales the count threshold and window_inflation
    scales the window half-width; both default to the analysed values.
    """

    w_min: float
    s_min: float
    r_hint: float | None = None
    heavy_fraction: float = 0.5
    window_inflation: float = 1.0

    def __post_init__(self) -> None:
        if not 0.0 < self.w_min <= 0.5:
            raise ValueError("w_min must lie in (0, 1/2]")
        if self.s_min <= 0.0:
            raise ValueError("s_min must be positive")
        if self.r_hint is not None and self.r_hint <= 0.0:
            raise ValueError("r_hint must be positive when given")
        if self.heavy_fraction <= 0.0:
            raise ValueError("heavy_fraction must be positive")
        if self.window_inflation <= 0.0:
            raise ValueError("window_inflation must be positive")


@dataclass(frozen=True)
class IntervalPair:
    """Result of a successful search: two intervals plus diagnostics.

    i1 is always the left interval.  j_star is the selected scale index,
    t the window half-width used at that scale, and grid_points the
    accepted heavy grid points (both clusters, ascending).
    """

    i1: tuple[float, float]
    i2: tuple[float, float]
    j_star: int
    t: float
    grid_points: tuple[float, ...]

    def __post_init__(self) -> None:
        if self.i1[1] >= self.i2[0]:
            raise ValueError("intervals must be disjoint with i1 on the left")
        c1 = 0.5 * (self.i1[0] + self.i1[1])
        c2 = 0.5 * (self.i2[0] + self.i2[1])
        longest = max(self.i1[1] - self.i1[0], self.i2[1] - self.i2[0])
        if not c2 - c1 > 4.0 * longest:
            raise ValueError("center gap must exceed four interval lengths")


def window_halfwidth(scale: float, w_min: float, inflation: float = 1.0) -> float:
    """Half-width t of the counting window at the given grid scale."""
    a = scale + math.sqrt(2.0 * math.log(_WINDOW_CONST / w_min))
    b = 2.0 * scale + math.sqrt(2.0 * math.log(_WINDOW_CONST))
    return inflation * max(a, b)


def cluster_grid(
    points: tuple[float, ...] | list[float], gap: float
) -> tuple[tuple[float, ...], tuple[float, ...]] | None:
    """Split sorted points into two clusters at a gap wider than `gap`.

    Succeeds only when exactly one internal gap exceeds `gap` and each
    side then has diameter strictly below `gap`; returns None otherwise.
    """
    pts = tuple(float(p) for p in points)
    if len(pts) < 2:
        return None
    wide = [
        k for k in range(len(pts) - 1) if pts[k + 1] - pts[k] > gap
    ]
    if len(wide) != 1:
        return None
    cut = wide[0]
    left, right = pts[: cut + 1], pts[cut + 1 :]
    if left[-1] - left[0] >= gap or right[-1] - right[0] >= gap:
        return None
    return left, right


def _evaluate_scale(
    batch: np.ndarray, scale: float, t: float, config: IntervalSearchConfig
) -> tuple[tuple[float, float], tuple[float, float], tuple[float, ...]] | None:
    """Try one grid scale on its sample batch; None when it fails."""
    threshold = config.heavy_fraction * config.w_min * batch.size
    lo_idx = math.floor(batch[0] / scale)
    hi_idx = math.ceil(batch[-1] / scale)
    ys = np.arange(lo_idx, hi_idx + 1, dtype=float) * scale
    counts = np.searchsorted(batch, ys + t, side="right") - np.searchsorted(
        batch, ys - t, side="left"
    )
    heavy = ys[counts > threshold]
    if heavy.size < 2:
        return None
    split = cluster_grid(tuple(heavy), 4.0 * t)
    if split is None:
        return None
    left, right = split
    i1 = (left[0] - scale, left[-1] + scale)
    i2 = (right[0] - scale, right[-1] + scale)
    # Only accept a scale whose output already meets the separation
    # guarantee; coarser scales produce wide intervals that fail it.
    c1 = 0.5 * (i1[0] + i1[1])
    c2 = 0.5 * (i2[0] + i2[1])
    longest = max(i1[1] - i1[0], i2[1] - i2[0])
    if not c2 - c1 > 4.0 * longest:
        return None
    return i1, i2, tuple(float(y) for y in heavy)


def find_intervals(samples: SampleSet, config: IntervalSearchConfig) -> IntervalPair:
    """Recover the two component intervals from samples.

    Scans scales s' = 2^j * s_min for j = 0..m over per-scale sample
    batches, keeps grid points whose window count clears the weight
    threshold, and demands a unique two-cluster split with a 4t gap.
    The largest passing scale index is selected and each cluster is
    padded by s' on both sides.

    Raises InsufficientSamples when n is below the configured bound and
    NoValidPartition when no scale admits the split.
    """
    x = np.asarray(samples.values, dtype=float)
    n = x.size
    spread = float(x.max() - x.min()) if n > 1 else 0.0
    r_hint = config.r_hint if config.r_hint is not None else max(spread, config.s_min)
    ratio = max(r_hint / config.s_min, 1.0)
    growth = math.log(ratio)
    if growth > 1.0:
        required = math.ceil(
            _SAMPLE_CONSTANT / config.w_min * growth * math.log(growth)
        )
    else:
        required = 1
    m = math.ceil(math.log2(ratio)) + 2
    n_batch = n // (m + 1)
    if n < required or n_batch < 1:
        raise InsufficientSamples(
            f"interval search needs at least {max(required, m + 1)} samples "
            f"for this configuration, got {n}"
        )

    best: tuple[int, tuple, tuple, float, tuple] | None = None
    for j in range(m + 1):
        scale = (2.0**j) * config.s_min
        t = window_halfwidth(scale, config.w_min, config.window_inflation)
        # Batches split the stream in arrival order (each one is an iid
        # subsample); sorting happens per batch, for the window counts.
        batch = np.sort(x[j * n_batch : (j + 1) * n_batch])
        outcome = _evaluate_scale(batch, scale, t, config)
        if outcome is not None:
            i1, i2, heavy = outcome
            best = (j, i1, i2, t, heavy)
    if best is None:
        raise NoValidPartition(
            "no grid scale produced a two-cluster split with the required gap"
        )
    j_star, i1, i2, t, heavy = best
    return IntervalPair(i1=i1, i2=i2, j_star=j_star, t=t, grid_points=heavy)


def interval_pair_to_dict(pair: IntervalPair) -> dict:
    """JSON-ready form of an IntervalPair."""
    return {
        "i1": [pair.i1[0], pair.i1[1]],
        "i2": [pair.i2[0], pair.i2[1]],
        "scale_index": pair.j_star,
        "t": pair.t,
        "q_points": list(pair.grid_points),
    }
