"""Lagrangian tomographs on the cylinder ``T*S^1`` and a Monte-Carlo Crofton check.

Coordinates are ``(q, p)`` with ``q`` in ``R/Z`` the base and ``p`` the fibre.
The base curve ``L1`` is the graph of ``f1'`` (the zero section by default),
``W = {|p| <= p_max}`` is the compact region.  A tomograph perturbs ``L1``
by graphs of ``d(s_1 g_1 + ... + s_d g_d)`` with bump functions ``g_i``
supported in a base arc, and ``N(s)`` counts intersections of the perturbed
curve with a second curve ``L2``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .dynamics import Curve, bump, bump_derivative
from .errors import ConfigurationError, ValidationError
from .floer_curves import TrigPoly

TANGENCY_TOL = 1e-9


class TransversalityWarning(UserWarning):
    """Too many sampled curves were tangent to ``L2``."""


def _arc_offset(q, lo):
    """Position of ``q`` along the circle measured from ``lo`` in ``[0, 1)``."""
    return np.mod(np.asarray(q, dtype=float) - lo, 1.0)


@dataclass(frozen=True)
class Bump:
    """``height * bump((q - center) / width)`` on the circle, periodic."""

    center: float
    width: float
    height: float = 1.0

    def _u(self, q):
        d = np.mod(np.asarray(q, dtype=float) - self.center + 0.5, 1.0) - 0.5
        return d / self.width

    def __call__(self, q):
        return self.height * bump(self._u(q))

    def derivative(self, q):
        return self.height * bump_derivative(self._u(q)) / self.width


@dataclass(frozen=True)
class TargetPair:
    """``L1 = graph(f1')`` and a curve ``L2`` in the cylinder, with ``W = {|p| <= p_max}``."""

    l2: Curve
    f1: TrigPoly = TrigPoly()
    p_max: float = 1.0
    resolution: int = 2048

    def l1_points(self) -> np.ndarray:
        q = np.linspace(0, 1, self.resolution + 1)
        return np.column_stack([q, self.f1(q, 1)])

    def check_good(self):
        """Raise unless ``L1`` and ``L2`` are disjoint in the cylindrical part ``|p| >= p_max``."""
        pts = self.l2.points
        ok = np.all(np.isfinite(pts), axis=1)
        d = pts[:, 1] - self.f1(np.nan_to_num(pts[:, 0]), 1)
        crossing = ok[:-1] & ok[1:] & (np.sign(d[:-1]) != np.sign(d[1:]))
        outside = np.abs(pts[:, 1]) >= self.p_max
        if np.any(crossing & (outside[:-1] | outside[1:])):
            raise ValidationError("L1 and L2 meet in the cylindrical region; not a good pair")


@dataclass(frozen=True)
class Tomograph:
    bumps: tuple
    radius: float
    pair: TargetPair
    window: tuple  # base arc W0 = (lo, hi), spanning holds there
    support: tuple  # base arc containing every bump support
    ell: float
    eps: float
    diagnostics: dict = field(default_factory=dict, compare=False)

    @property
    def d(self) -> int:
        return len(self.bumps)

    def perturbation(self, q, s) -> np.ndarray:
        """``sum s_i g_i'(q)`` for one ``s`` (shape ``(d,)``) or many (``(m, d)``)."""
        G = np.array([b.derivative(q) for b in self.bumps])  # (d, len(q))
        return np.asarray(s, dtype=float) @ G

    def ball_volume(self) -> float:
        d = self.d
        return math.pi ** (d / 2) / math.gamma(d / 2 + 1) * self.radius**d


def _spanning_margin(bumps, window, n=2048) -> float:
    lo, hi = window
    q = lo + (np.arange(n) + 0.5) / n * ((hi - lo) % 1.0 or 1.0)
    dg = np.array([b.derivative(q) for b in bumps])
    return float(np.min(np.max(np.abs(dg), axis=0))) if len(bumps) else 0.0


def _min_distance_outside(pair: TargetPair, window, n=2048) -> float:
    """Distance from ``L1`` over the base outside ``Int W0`` to ``L2``."""
    lo, hi = window
    span = (hi - lo) % 1.0 or 1.0
    if span >= 1.0:
        return math.inf
    q = lo + span + (np.arange(n) + 0.5) / n * (1 - span)
    l1 = np.column_stack([q % 1.0, pair.f1(q, 1)])
    l2 = pair.l2.points[np.all(np.isfinite(pair.l2.points), axis=1)]
    best = math.inf
    for i in range(0, len(l2), 512):
        blk = l2[i:i + 512]
        dq = np.abs(blk[:, None, 0] % 1.0 - l1[None, :, 0])
        dq = np.minimum(dq, 1 - dq)
        dp = blk[:, None, 1] - l1[None, :, 1]
        best = min(best, float(np.sqrt(dq**2 + dp**2).min()))
    return best


def default_bumps(d: int, window) -> tuple:
    """``d`` bumps of half-width ``1.5 |W0| / d`` centred evenly across ``W0``.

    Where one ``g_i'`` vanishes (its centre) each neighbour sits at
    ``|u| = 2/3`` with a nonzero derivative.
    """
    lo, hi = window
    span = (hi - lo) % 1.0 or 1.0
    w = 1.5 * span / d
    return tuple(Bump(float((lo + span * (j + 0.5) / d) % 1.0), float(w)) for j in range(d))


def default_support(d: int, window) -> tuple:
    lo, hi = window
    span = (hi - lo) % 1.0 or 1.0
    pad = span / d
    if span + 2 * pad >= 1.0:
        return (0.0, 1.0)
    return ((lo - pad) % 1.0, (hi + pad) % 1.0)


def build_tomograph(d: int, eps: float, pair: TargetPair, window=(0.0, 1.0), support=None,
                    bumps=None, r0: float = 1.0, max_halvings: int = 60) -> Tomograph:
    """Tomograph for ``pair`` with radius from a halving search.

    Starting at ``r0`` the radius is halved until ``r * osc_bound < eps / 2``
    (oscillation of ``f_s``, a Hofer-distance surrogate), ``r * slope_bound <
    ell`` (fibre displacement below the distance from ``L1`` outside ``W0`` to
    ``L2``) and the perturbed curves stay in ``W``.
    """
    if d < 2:
        raise ConfigurationError("need d >= 2 bump functions")
    if not eps > 0:
        raise ValueError("eps must be positive")
    pair.check_good()
    if bumps is None:
        bumps = default_bumps(d, window)
        support = default_support(d, window) if support is None else support
    support = (0.0, 1.0) if support is None else support
    bumps = tuple(bumps)
    if len(bumps) != d:
        raise ConfigurationError(f"expected {d} bumps, got {len(bumps)}")
    q = np.arange(4096) / 4096
    s_lo = support[0]
    s_span = (support[1] - support[0]) % 1.0 or 1.0
    for b in bumps:
        outside = _arc_offset(q, s_lo) > s_span + 1e-12
        if np.any(np.abs(b(q[outside])) > 0):
            raise ConfigurationError(f"bump at {b.center} does not vanish outside W")
    margin = _spanning_margin(bumps, window)
    if not margin > 1e-9:
        raise ConfigurationError(
            f"dg_1..dg_{d} do not span the fibre on W0 (margin {margin:.3g}); use a larger d"
        )
    G = np.array([b(q) for b in bumps])
    dG = np.array([b.derivative(q) for b in bumps])
    # sup over |s| <= 1 of osc(f_s) is at most max_{x,y} |G(x) - G(y)|
    osc = max(float(np.linalg.norm(G[:, i:i + 1] - G, axis=0).max()) for i in range(0, 4096, 8))
    slope = float(np.linalg.norm(dG, axis=0).max())
    ell = _min_distance_outside(pair, window)
    room = pair.p_max - float(np.max(np.abs(pair.f1(q, 1))))
    if room <= 0:
        raise ConfigurationError("L1 leaves the compact region W")
    r = float(r0)
    for _ in range(max_halvings):
        if r * osc < eps / 2 and r * slope < ell and r * slope <= room:
            break
        r /= 2
    else:
        raise ConfigurationError("radius search did not converge")
    return Tomograph(bumps, r, pair, tuple(window), tuple(support), ell, eps,
                     {"osc_bound": osc * r, "slope_bound": slope * r, "spanning_margin": margin})


def sample_curve(t: Tomograph, s, resolution: int | None = None) -> Curve:
    """Polyline of ``L^s``, the graph of ``f1' + d f_s`` over one period."""
    s = np.asarray(s, dtype=float)
    if s.shape != (t.d,):
        raise ValueError(f"s must have shape ({t.d},)")
    if np.linalg.norm(s) > t.radius * (1 + 1e-12):
        raise ValueError("parameter outside the tomograph ball")
    n = resolution or t.pair.resolution
    q = np.linspace(0, 1, n + 1)
    return Curve(np.column_stack([q, t.pair.f1(q, 1) + t.perturbation(q, s)]))


def sample_ball(rng: np.random.Generator, d: int, radius: float, n: int) -> np.ndarray:
    """Uniform points in the ``d``-ball by rejection from the bounding cube."""
    out = np.empty((0, d))
    while len(out) < n:
        m = max(64, int(1.3 * (n - len(out)) * 2**d / (math.pi ** (d / 2) / math.gamma(d / 2 + 1))))
        c = rng.uniform(-radius, radius, size=(m, d))
        out = np.vstack([out, c[np.linalg.norm(c, axis=1) <= radius]])
    return out[:n]


def intersection_counts(t: Tomograph, l2: Curve, S: np.ndarray, block: int = 512):
    """``N(s)`` for each row of ``S`` and a per-row tangency flag.

    Counts sign changes of ``p - (f1' + df_s)(q)`` along the vertices of
    ``l2``.  Vertices farther from ``L1`` than any perturbation can reach
    keep a fixed sign, so only pairs touching the reachable band are
    evaluated per sample.
    """
    pts = l2.points
    finite = np.all(np.isfinite(pts), axis=1)
    q, p = pts[:, 0], pts[:, 1]
    base = np.where(finite, p - t.pair.f1(np.nan_to_num(q), 1), np.nan)
    reach = t.radius * float(np.linalg.norm([b.derivative(np.arange(4096) / 4096) for b in t.bumps], axis=0).max())
    active = finite & (np.abs(base) <= reach * (1 + 1e-9) + TANGENCY_TOL)
    pair_ok = finite[:-1] & finite[1:]
    touch = pair_ok & (active[:-1] | active[1:])
    fixed = pair_ok & ~touch
    fixed_count = int(np.sum(np.sign(base[:-1][fixed]) != np.sign(base[1:][fixed])))
    pi = np.flatnonzero(touch)
    verts = np.unique(np.concatenate([pi, pi + 1]))
    pos = {v: i for i, v in enumerate(verts)}
    a_idx = np.array([pos[i] for i in pi], dtype=int)
    b_idx = np.array([pos[i + 1] for i in pi], dtype=int)
    counts = np.full(len(S), fixed_count, dtype=np.int64)
    tangent = np.zeros(len(S), dtype=bool)
    if len(verts):
        G = np.array([b.derivative(q[verts]) for b in t.bumps])
        for i in range(0, len(S), block):
            D = base[verts][None, :] - S[i:i + block] @ G
            da, db = D[:, a_idx], D[:, b_idx]
            change = np.sign(da) != np.sign(db)
            counts[i:i + block] += change.sum(axis=1)
            near = (np.abs(da) < TANGENCY_TOL) | (np.abs(db) < TANGENCY_TOL)
            tangent[i:i + block] = np.any(change & near, axis=1)
    return counts, tangent


@dataclass
class CroftonReport:
    d: int
    r: float
    n_samples: int
    integral: float
    stderr: float
    volume: float
    ratio: float
    tangency_rate: float
    counts: np.ndarray = field(repr=False, default=None)

    def to_dict(self) -> dict:
        return {"d": self.d, "r": self.r, "n_samples": self.n_samples, "integral": self.integral,
                "stderr": self.stderr, "volume": self.volume, "ratio": self.ratio}

    def to_csv(self) -> str:
        return "sample,N\n" + "".join(f"{i},{int(c)}\n" for i, c in enumerate(self.counts))


def crofton_check(t: Tomograph, l2: Curve, n_samples: int, seed=0) -> CroftonReport:
    """Monte-Carlo ``int_B N(s) ds`` against ``Vol(L2 ∩ W)``."""
    if n_samples < 100:
        raise ValueError("n_samples must be at least 100")
    rng = np.random.default_rng(seed)
    S = sample_ball(rng, t.d, t.radius, n_samples)
    counts, tangent = intersection_counts(t, l2, S)
    vol_ball = t.ball_volume()
    n = counts.astype(float)
    integral = vol_ball * float(np.sum(n)) / n_samples
    stderr = vol_ball * float(np.std(n, ddof=1)) / math.sqrt(n_samples)
    inside = np.abs(np.nan_to_num(l2.points[:, 1], nan=np.inf)) <= t.pair.p_max
    volume = l2.length(inside)
    if volume > 0:
        ratio = integral / volume
    else:
        ratio = 0.0 if integral == 0 else math.inf
    rate = float(tangent.mean())
    if rate > 0.01:
        warnings.warn(f"{rate:.1%} of samples were tangent to L2", TransversalityWarning, stacklevel=2)
    return CroftonReport(t.d, t.radius, n_samples, integral, stderr, volume, ratio, rate, counts)
