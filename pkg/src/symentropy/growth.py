"""Exponential growth-rate fitting shared by every entropy estimator."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

LOG2E = 1.0 / math.log(2.0)


@dataclass(frozen=True)
class EntropyEstimate:
    """A growth-rate measurement in natural-log units.

    ``value`` is the fitted slope of ``log+`` of the counts, ``growth_factor``
    is ``exp(value)``, ``fit_window`` the ``(n_min, n_max)`` range the slope was
    fitted on and ``residual`` the RMS deviation of the fit.
    """

    value: float
    growth_factor: float
    fit_window: tuple[int, int]
    residual: float
    diagnostics: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.residual < 0:
            raise ValueError("residual must be non-negative")

    @property
    def value_base2(self) -> float:
        return self.value * LOG2E

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "value_base2": self.value_base2,
            "growth_factor": self.growth_factor,
            "fit_window": list(self.fit_window),
            "residual": self.residual,
        }

    @classmethod
    def exact(cls, value: float, fit_window: tuple[int, int] = (0, 0), **diagnostics):
        return cls(value, math.exp(value), fit_window, 0.0, dict(diagnostics))


def log_plus(x) -> float:
    """``log`` with ``log+(0) = 0``; accepts Python ints of any size."""
    if x < 0:
        raise ValueError(f"log+ of a negative count: {x}")
    if x == 0:
        return 0.0
    return math.log(x)


def upper_half(n_points: int) -> slice:
    """Slice selecting the last ``ceil(n/2)`` entries, but at least three."""
    return slice(n_points - min(n_points, max((n_points + 1) // 2, 3)), n_points)


def growth_rate_fit(counts: Iterable[tuple[int, float]], min_points: int = 4,
                    whole: bool = False) -> EntropyEstimate:
    """Least-squares slope of ``log+(value)`` against ``n`` over the upper half.

    Parameters
    ----------
    counts : iterable of (n, value)
        Non-negative values. Values may be arbitrarily large Python ints.
    min_points : int
        Minimum number of points required.
    whole : bool
        Fit every point instead of the upper half, for callers that have
        already chosen the window.

    Returns
    -------
    EntropyEstimate
        The slope is not clipped at zero; a decaying series returns a
        negative value.
    """
    pts = sorted((int(n), v) for n, v in counts)
    if len(pts) < min_points:
        raise ValueError(f"need at least {min_points} points, got {len(pts)}")
    ns = np.array([n for n, _ in pts], dtype=float)
    if len(set(ns.tolist())) != len(ns):
        raise ValueError("duplicate n in counts")
    logs = np.array([log_plus(v) for _, v in pts])
    win = slice(0, len(pts)) if whole else upper_half(len(pts))
    x, y = ns[win], logs[win]
    if np.all(y == y[0]):
        slope, resid = 0.0, 0.0
    else:
        slope, intercept = np.polyfit(x, y, 1)
        slope = float(slope)
        resid = float(np.sqrt(np.mean((y - (slope * x + intercept)) ** 2)))
    return EntropyEstimate(
        value=slope,
        growth_factor=math.exp(slope),
        fit_window=(int(x[0]), int(x[-1])),
        residual=resid,
        diagnostics={"n_points": len(x), "all_zero": bool(np.all(logs == 0.0))},
    )


def fit_series(values: Sequence[float], start: int = 0, min_points: int = 4) -> EntropyEstimate:
    return growth_rate_fit(zip(range(start, start + len(values)), values), min_points)
