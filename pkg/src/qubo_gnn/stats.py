"""Benchmark statistics: bootstrap error bars, Gset relative error, scaling fits."""

from __future__ import annotations

from typing import Sequence, Tuple

import numpy as np

from .errors import EmptyInputError


def bootstrap_stats(values: Sequence[float], resamples: int = 1000, seed: int = 0) -> Tuple[float, float]:
    """Sample mean and twice the standard deviation of bootstrap-resampled means."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.size == 0:
        raise EmptyInputError("bootstrap needs at least one value")
    if resamples < 1:
        raise ValueError("resamples must be at least 1")
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, arr.size, size=(resamples, arr.size))
    means = arr[idx].mean(axis=1)
    return float(arr.mean()), float(2.0 * means.std())


def relative_error(best_known: float, cut: float, num_edges: int) -> float:
    """Fraction of edges left uncut relative to the best known solution."""
    if num_edges <= 0:
        raise ValueError("relative error needs at least one edge")
    return (best_known - cut) / num_edges


def scaling_exponent(sizes: Sequence[float], times: Sequence[float]) -> float:
    """Least-squares slope of ``log(time)`` against ``log(size)``."""
    n = np.asarray(sizes, dtype=np.float64)
    t = np.asarray(times, dtype=np.float64)
    if n.size < 2 or np.unique(n).size < 2:
        raise EmptyInputError("scaling fit needs at least two distinct sizes")
    if np.any(n <= 0) or np.any(t <= 0):
        raise ValueError("sizes and times must be positive")
    slope, _ = np.polyfit(np.log(n), np.log(t), 1)
    return float(slope)
