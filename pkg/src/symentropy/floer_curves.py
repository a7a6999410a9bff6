"""Filtered complexes from pairs of curves, and barcode-entropy experiments.

Two models feed the persistence code:

* graph pairs in the cotangent bundle of the circle, where the complex of
  ``(graph df1, graph df2)`` is the circle Morse complex of ``h = f2 - f1``
  filtered by the value of ``h``;
* straight geodesics on the torus (an analogue model without an action
  filtration), where minimal position makes the differential vanish.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import brentq

from .errors import DegeneracyError, ParallelCurvesError, ValidationError
from .growth import EntropyEstimate, growth_rate_fit
from .persistence import INF, Barcode, FilteredComplex, barcode, count_b_epsilon, quantize_action

ACTION_TOL = 1e-9


@dataclass(frozen=True)
class TrigPoly:
    """``a0 + sum_k a_k cos(2 pi k q) + b_k sin(2 pi k q)`` on ``R/Z``.

    ``cos`` holds ``(a0, a1, ...)``, ``sin`` holds ``(b1, b2, ...)``.
    """

    cos: tuple = (0.0,)
    sin: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "cos", tuple(float(c) for c in self.cos) or (0.0,))
        object.__setattr__(self, "sin", tuple(float(c) for c in self.sin))

    @property
    def degree(self) -> int:
        return max(len(self.cos) - 1, len(self.sin))

    def _coeffs(self):
        d = self.degree
        a = np.zeros(d + 1)
        b = np.zeros(d + 1)
        a[: len(self.cos)] = self.cos
        b[1: len(self.sin) + 1] = self.sin
        return a, b

    def __call__(self, q, deriv: int = 0):
        q = np.asarray(q, dtype=float)
        a, b = self._coeffs()
        out = np.zeros_like(q) + (a[0] if deriv == 0 else 0.0)
        for k in range(1, len(a)):
            w = 2 * np.pi * k
            t = w * q
            # d^m/dq^m of cos and sin cycle with period 4
            c_terms = (np.cos(t), -np.sin(t), -np.cos(t), np.sin(t))
            s_terms = (np.sin(t), np.cos(t), -np.sin(t), -np.cos(t))
            out = out + w**deriv * (a[k] * c_terms[deriv % 4] + b[k] * s_terms[deriv % 4])
        return out

    def __add__(self, other: "TrigPoly") -> "TrigPoly":
        a1, b1 = self._coeffs()
        a2, b2 = other._coeffs()
        n = max(len(a1), len(a2))
        a = np.zeros(n); a[: len(a1)] += a1; a[: len(a2)] += a2
        b = np.zeros(n); b[: len(b1)] += b1; b[: len(b2)] += b2
        return TrigPoly(tuple(a), tuple(b[1:]))

    def __neg__(self) -> "TrigPoly":
        return TrigPoly(tuple(-c for c in self.cos), tuple(-c for c in self.sin))

    def __sub__(self, other: "TrigPoly") -> "TrigPoly":
        return self + (-other)

    def is_constant(self, tol: float = 1e-12) -> bool:
        a, b = self._coeffs()
        return bool(np.all(np.abs(a[1:]) <= tol) and np.all(np.abs(b[1:]) <= tol))

    @classmethod
    def parse(cls, text: str) -> "TrigPoly":
        """Parse ``"cos: a0 a1 ...; sin: b1 b2 ..."`` (either part optional)."""
        parts = {"cos": (), "sin": ()}
        for chunk in filter(None, (c.strip() for c in text.split(";"))):
            key, _, vals = chunk.partition(":")
            key = key.strip().lower()
            if key not in parts:
                raise ValueError(f"unknown trig polynomial part {key!r}")
            parts[key] = tuple(float(v) for v in vals.replace(",", " ").split())
        return cls(parts["cos"] or (0.0,), parts["sin"])


@dataclass(frozen=True)
class CriticalPoint:
    q: float
    index: int  # 0 = minimum, 1 = maximum
    value: float


@dataclass(frozen=True)
class GraphPair:
    """Graphs of ``df1`` and ``df2`` in ``T*S^1``; ``resolution`` samples per period."""

    f1: TrigPoly
    f2: TrigPoly
    resolution: int = 4096

    def __post_init__(self):
        if self.resolution < 8:
            raise ValueError("resolution must be at least 8")

    @property
    def h(self) -> TrigPoly:
        return self.f2 - self.f1


def critical_points(h: TrigPoly, resolution: int = 4096, tol: float = ACTION_TOL) -> list[CriticalPoint]:
    """Critical points of ``h`` in circular order, with Morse index.

    Roots of ``h'`` are bracketed by sign changes on a uniform grid and
    polished with Brent's method.  A root where ``|h''|`` is below a
    scale-aware threshold, two roots closer than ``tol``, or a sequence that
    fails to alternate between minima and maxima raises ``DegeneracyError``.
    """
    if h.is_constant():
        raise DegeneracyError("difference function is constant: every point is critical")
    n = resolution
    q = np.arange(n) / n
    d1 = h(q, 1)
    scale = float(np.max(np.abs(d1)))
    zero = np.abs(d1) <= 1e-12 * scale
    s = np.where(zero, 0, np.sign(d1)).astype(int)
    roots = []
    for i in range(n):
        j = (i + 1) % n
        if s[i] == 0:
            if s[(i - 1) % n] == 0:
                raise DegeneracyError(f"flat critical set near q={q[i]:.9f}", location=float(q[i]))
            roots.append(float(q[i]))
        elif s[j] != 0 and s[i] != s[j]:
            hi = q[j] if j else 1.0
            roots.append(float(brentq(lambda x: float(h(x, 1)), q[i], hi, xtol=1e-14)) % 1.0)
    if not roots:
        raise DegeneracyError("no critical points resolved; increase the resolution")
    roots.sort()
    gaps = np.diff(roots + [roots[0] + 1])
    if np.min(gaps) < tol:
        k = int(np.argmin(gaps))
        raise DegeneracyError(f"critical points collide near q={roots[k]:.9f}", location=roots[k])
    curv = h(np.array(roots), 2)
    curv_scale = max(float(np.max(np.abs(h(q, 2)))), 1e-300)
    out = []
    for x, c in zip(roots, curv):
        if abs(c) <= 1e-6 * curv_scale:
            raise DegeneracyError(f"degenerate critical point at q={x:.9f}", location=x)
        out.append(CriticalPoint(x, 1 if c < 0 else 0, float(h(x))))
    idx = [c.index for c in out]
    if any(a == b for a, b in zip(idx, idx[1:] + idx[:1])):
        k = next(i for i, (a, b) in enumerate(zip(idx, idx[1:] + idx[:1])) if a == b)
        raise DegeneracyError(f"minima and maxima fail to alternate near q={out[k].q:.9f}", location=out[k].q)
    return out


def graph_pair_complex(pair: GraphPair) -> FilteredComplex:
    """Circle Morse complex of ``h = f2 - f1`` filtered by ``h``.

    Generators are named ``min<i>`` / ``max<i>`` by circular position.  Each
    maximum bounds its two neighbouring minima; when both neighbours are the
    same minimum the two contributions cancel.
    """
    cps = critical_points(pair.h, pair.resolution)
    names = [f"{'max' if c.index else 'min'}{i}" for i, c in enumerate(cps)]
    gens = [(nm, c.index, quantize_action(c.value, ACTION_TOL)) for nm, c in zip(names, cps)]
    m = len(cps)
    diff = []
    for i, c in enumerate(cps):
        if c.index == 1:
            diff.append((names[i], names[(i - 1) % m]))
            diff.append((names[i], names[(i + 1) % m]))
    try:
        return FilteredComplex(gens, diff)
    except ValidationError as err:
        raise DegeneracyError(f"critical values collide at tolerance {ACTION_TOL}: {err}") from None


# -- torus geodesics (analogue model) ---------------------------------------------


def _primitive(v) -> tuple[int, int]:
    a, b = (int(x) for x in v)
    if math.gcd(a, b) != 1:
        raise ValidationError(f"direction {v} is not primitive")
    return a, b


@dataclass(frozen=True)
class GeodesicPair:
    """Straight geodesics with directions ``v1`` and ``A^n v2`` on ``T^2``."""

    v1: tuple
    v2: tuple
    A: tuple = ((2, 1), (1, 1))
    n: int = 0

    def __post_init__(self):
        object.__setattr__(self, "v1", _primitive(self.v1))
        object.__setattr__(self, "v2", _primitive(self.v2))
        a = tuple(tuple(int(x) for x in row) for row in self.A)
        if len(a) != 2 or any(len(r) != 2 for r in a):
            raise ValidationError("A must be 2x2")
        if abs(a[0][0] * a[1][1] - a[0][1] * a[1][0]) != 1:
            raise ValidationError("A must have determinant +-1")
        object.__setattr__(self, "A", a)
        if self.n < 0:
            raise ValidationError("n must be non-negative")

    def moved(self) -> tuple[int, int]:
        """``A^n v2`` in exact integer arithmetic."""
        x, y = self.v2
        (p, q), (r, s) = self.A
        for _ in range(self.n):
            x, y = p * x + q * y, r * x + s * y
        return x, y


def geodesic_intersection_count(pair: GeodesicPair) -> int:
    """``|det(v1, A^n v2)|``, the minimal number of intersection points."""
    x, y = pair.moved()
    det = pair.v1[0] * y - pair.v1[1] * x
    if det == 0:
        raise ParallelCurvesError(f"A^{pair.n} v2 = {(x, y)} is parallel to v1 = {pair.v1}")
    return abs(det)


def geodesic_pair_barcode(pair: GeodesicPair) -> Barcode:
    """All-infinite barcode: minimal position leaves no differential."""
    return Barcode.infinite(geodesic_intersection_count(pair))


def geodesic_generator(v1, v2, A=((2, 1), (1, 1))) -> Callable[[int], Barcode]:
    return lambda n: geodesic_pair_barcode(GeodesicPair(v1, v2, A, n))


def support_avoiding_generator(pair: GraphPair, support: tuple[float, float]) -> Callable[[int], FilteredComplex]:
    """Complexes of ``(L1, phi^n(L2))`` for a twist supported in ``p in support``.

    ``L2 = graph(df2)`` must stay outside the support band, so
    ``phi^n(L2) = L2`` and every complex equals the ``n = 0`` one.
    """
    a, b = support
    q = np.arange(pair.resolution) / pair.resolution
    p = pair.f2(q, 1)
    if np.any((p > a) & (p < b)):
        raise ValidationError("L2 meets the support of the twist")
    cx = graph_pair_complex(pair)
    return lambda n: cx


# -- experiments ------------------------------------------------------------------


@dataclass
class ExperimentTable:
    """``b_eps(n)`` counts and fitted rates for a barcode-entropy experiment."""

    eps_grid: tuple
    counts: dict  # eps -> list of b_eps(n), n = 0..n_max
    h_eps: dict  # eps -> EntropyEstimate
    h_bar: float
    plateau: float
    trivial: dict = field(default_factory=dict)  # eps -> all counts zero

    def to_csv(self) -> str:
        lines = ["n,epsilon,b_epsilon"]
        for eps in self.eps_grid:
            for n, b in enumerate(self.counts[eps]):
                lines.append(f"{n},{_fmt_eps(eps)},{b}")
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        return {
            "h_bar": self.h_bar,
            "plateau": self.plateau,
            "h_eps": {_fmt_eps(e): self.h_eps[e].to_dict() for e in self.eps_grid},
            "trivial": {_fmt_eps(e): self.trivial[e] for e in self.eps_grid},
        }


def _fmt_eps(eps) -> str:
    return "inf" if eps == INF else str(eps)


def barcode_entropy_experiment(generator: Callable[[int], "FilteredComplex | Barcode"],
                               eps_grid: Sequence, n_max: int) -> ExperimentTable:
    """Fit ``h_eps`` from ``log+ b_eps(n)``, ``n = 0..n_max``, for each ``eps``.

    Slopes are fitted over the upper half of the ``n`` range and clipped at
    zero (``(1/n) log+`` is never negative; the raw slope is kept in the
    estimate's diagnostics).  ``h_bar`` is ``h_eps`` at the smallest ``eps``;
    ``plateau`` is the largest pairwise difference among the last three.
    """
    if n_max < 6:
        raise ValueError("n_max must be at least 6")
    eps_grid = tuple(eps_grid)
    if not eps_grid:
        raise ValueError("empty eps grid")
    if any(not a > b for a, b in zip(eps_grid, eps_grid[1:])):
        raise ValueError("eps grid must be strictly decreasing")
    bars = []
    for n in range(n_max + 1):
        obj = generator(n)
        bars.append(obj if isinstance(obj, Barcode) else barcode(obj))
    counts, h_eps, trivial = {}, {}, {}
    for eps in eps_grid:
        cs = [count_b_epsilon(bc, eps) for bc in bars]
        est = growth_rate_fit(enumerate(cs))
        trivial[eps] = all(c == 0 for c in cs)
        value = max(est.value, 0.0)
        h_eps[eps] = EntropyEstimate(value, math.exp(value), est.fit_window, est.residual,
                                     {**est.diagnostics, "raw_slope": est.value})
        counts[eps] = cs
    tail = [h_eps[e].value for e in eps_grid[-3:]]
    return ExperimentTable(eps_grid, counts, h_eps, h_eps[eps_grid[-1]].value,
                           max(tail) - min(tail), trivial)
