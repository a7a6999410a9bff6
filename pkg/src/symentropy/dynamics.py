"""Planar test maps and two estimators of topological entropy.

``capacity_entropy`` counts occupied ``eps``-boxes of sampled orbit strings
``(x, f(x), ..., f^{k-1}(x))`` and fits their growth in ``k``.  Box counting
over-counts the minimal cube cover by at most a dimension-dependent constant
and under-counts when the sample grid cannot resolve every cell, so the result
is an estimate; ``diagnostics["saturation"]`` reports occupied boxes per live
sample for judging the second effect.

``curve_volume_growth`` and ``graph_volume_growth`` follow a polyline under the
map on the universal cover, refining wherever the image of a segment midpoint
leaves the image chord by more than the tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import ConfigurationError, ResourceError
from .growth import EntropyEstimate, growth_rate_fit, upper_half


class MapSystem:
    """Base class for a planar map.

    Subclasses provide ``forward`` on domain coordinates (rows that leave the
    domain become NaN), optionally ``inverse``, and ``lift`` acting on the
    universal cover, where curve lengths are measured.
    """

    kind = "abstract"
    #: sampling window ``((x_lo, x_hi), (y_lo, y_hi))``
    window: tuple = ((0.0, 1.0), (0.0, 1.0))
    invertible = False
    may_escape = False

    def forward(self, pts: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def inverse(self, pts: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def lift(self, pts: np.ndarray) -> np.ndarray:
        return self.forward(pts)

    def in_support_region(self, pts: np.ndarray) -> np.ndarray:
        """Mask of points inside the compact region ``W`` used for volumes."""
        return np.all(np.isfinite(pts), axis=1)

    def describe(self) -> dict:
        return {"kind": self.kind}


@dataclass
class TorusAutomorphism(MapSystem):
    """``x -> A x mod 1`` for an integer matrix with ``|det A| = 1``."""

    matrix: Sequence = ((2, 1), (1, 1))
    kind = "torus_automorphism"
    invertible = True

    def __post_init__(self):
        a = np.array(self.matrix, dtype=np.int64)
        if a.shape != (2, 2):
            raise ValueError("torus automorphism needs a 2x2 matrix")
        det = int(round(np.linalg.det(a)))
        if abs(det) != 1:
            raise ValueError(f"|det| must be 1, got {det}")
        self.matrix = tuple(map(tuple, a.tolist()))
        self._a = a.astype(float)
        adj = np.array([[a[1, 1], -a[0, 1]], [-a[1, 0], a[0, 0]]], dtype=float)
        self._ainv = adj * det

    @staticmethod
    def _apply(m, pts):
        x, y = pts[:, 0], pts[:, 1]
        return np.column_stack([m[0, 0] * x + m[0, 1] * y, m[1, 0] * x + m[1, 1] * y])

    def forward(self, pts):
        out = self._apply(self._a, pts)
        return np.mod(out, 1.0, out=out)

    def inverse(self, pts):
        out = self._apply(self._ainv, pts)
        return np.mod(out, 1.0, out=out)

    def lift(self, pts):
        return self._apply(self._a, pts)

    def describe(self):
        return {"kind": self.kind, "matrix": [list(r) for r in self.matrix]}


class IdentityMap(TorusAutomorphism):
    def __init__(self):
        super().__init__(((1, 0), (0, 1)))

    kind = "identity"

    def forward(self, pts):
        return pts.copy()

    def inverse(self, pts):
        return pts.copy()

    def lift(self, pts):
        return pts.copy()


@dataclass
class Horseshoe(MapSystem):
    """Piecewise-affine two-branch horseshoe on the unit square.

    The strip ``y < 1/stretch`` maps to ``x in [0, contraction]`` and the strip
    ``y > 1 - 1/stretch`` maps, folded, to ``x in [1 - contraction, 1]``.
    Points in the middle strip leave the square and are discarded.  With
    ``pad > 0`` the sampling window grows to ``[-pad, 1 + pad]^2`` and the map
    is the identity outside the unit square, giving a compactly supported map
    on a larger domain.
    """

    contraction: float = 1 / 3
    stretch: float = 3.0
    pad: float = 0.0
    kind = "horseshoe"
    invertible = True
    may_escape = True

    def __post_init__(self):
        if not 0 < self.contraction < 0.5:
            raise ValueError("contraction rate must lie in (0, 1/2)")
        if not self.stretch > 2:
            raise ValueError("stretch rate must exceed 2")
        if self.pad < 0:
            raise ValueError("pad must be non-negative")
        self.window = ((-self.pad, 1 + self.pad), (-self.pad, 1 + self.pad))

    def _inside(self, pts):
        return np.all((pts >= 0) & (pts <= 1), axis=1)

    def forward(self, pts):
        x, y = pts[:, 0], pts[:, 1]
        out = np.full_like(pts, np.nan)
        lam, mu = self.contraction, self.stretch
        lo = y <= 1 / mu
        hi = y >= 1 - 1 / mu
        out[lo, 0], out[lo, 1] = lam * x[lo], mu * y[lo]
        out[hi, 0], out[hi, 1] = 1 - lam * x[hi], mu * (1 - y[hi])
        inside = self._inside(pts)
        out[~inside] = pts[~inside]
        return out

    def inverse(self, pts):
        x, y = pts[:, 0], pts[:, 1]
        out = np.full_like(pts, np.nan)
        lam, mu = self.contraction, self.stretch
        left = x <= lam
        right = x >= 1 - lam
        out[left, 0], out[left, 1] = x[left] / lam, y[left] / mu
        out[right, 0], out[right, 1] = (1 - x[right]) / lam, 1 - y[right] / mu
        inside = self._inside(pts)
        out[~inside] = pts[~inside]
        return out

    def in_support_region(self, pts):
        return np.all(np.isfinite(pts), axis=1) & self._inside(np.nan_to_num(pts, nan=-1.0))

    def describe(self):
        return {"kind": self.kind, "contraction": self.contraction, "stretch": self.stretch, "pad": self.pad}


def bump(u):
    """Smooth bump ``exp(1 - 1/(1 - u^2))`` on ``|u| < 1``, zero outside."""
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    m = np.abs(u) < 1
    out[m] = np.exp(1 - 1 / (1 - u[m] ** 2))
    return out


def bump_derivative(u):
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    m = np.abs(u) < 1
    w = 1 - u[m] ** 2
    out[m] = np.exp(1 - 1 / w) * (-2 * u[m] / w**2)
    return out


@dataclass
class AnnulusTwist(MapSystem):
    """Twist ``(q, p) -> (q + amplitude * bump(p), p)`` on ``S^1 x [p_lo, p_hi]``.

    The shear profile is a smooth bump centred in ``support`` and vanishing
    outside it; ``support`` must sit strictly inside ``(p_lo, p_hi)``.
    Coordinates: ``q`` in ``[0, 1)`` (the circle), ``p`` the fibre coordinate.
    """

    amplitude: float = 1.0
    support: tuple = (-0.5, 0.5)
    p_range: tuple = (-1.0, 1.0)
    kind = "annulus_twist"
    invertible = True

    def __post_init__(self):
        a, b = self.support
        lo, hi = self.p_range
        if not lo < a < b < hi:
            raise ValueError("twist support must lie strictly inside the annulus")
        self.window = ((0.0, 1.0), (float(lo), float(hi)))

    def profile(self, p):
        a, b = self.support
        return self.amplitude * bump((2 * np.asarray(p) - a - b) / (b - a))

    def profile_derivative(self, p):
        a, b = self.support
        return self.amplitude * bump_derivative((2 * np.asarray(p) - a - b) / (b - a)) * 2 / (b - a)

    def lift(self, pts):
        out = pts.copy()
        out[:, 0] = pts[:, 0] + self.profile(pts[:, 1])
        return out

    def forward(self, pts):
        out = self.lift(pts)
        out[:, 0] %= 1.0
        return out

    def inverse(self, pts):
        out = pts.copy()
        out[:, 0] = (pts[:, 0] - self.profile(pts[:, 1])) % 1.0
        return out

    def in_support_region(self, pts):
        lo, hi = self.p_range
        ok = np.all(np.isfinite(pts), axis=1)
        p = np.nan_to_num(pts[:, 1], nan=lo - 1)
        return ok & (p >= lo) & (p <= hi)

    def describe(self):
        return {"kind": self.kind, "amplitude": self.amplitude, "support": list(self.support),
                "p_range": list(self.p_range)}


# -- capacity -----------------------------------------------------------------


@dataclass(frozen=True)
class OrbitGraphSpec:
    """One capacity measurement: string length ``k``, box size ``eps``, grid."""

    k: int
    eps: float
    grid: int | tuple[int, int] = 1024

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be at least 1")
        if not self.eps > 0:
            raise ValueError("eps must be positive")

    @property
    def grid_shape(self) -> tuple[int, int]:
        g = self.grid
        return (int(g), int(g)) if np.isscalar(g) else (int(g[0]), int(g[1]))


_OFFSET = np.uint64(0xCBF29CE484222325)
_PRIME = np.uint64(0x100000001B3)


def _grid_points(window, shape, rows: slice, cols: slice = slice(None)) -> np.ndarray:
    (x0, x1), (y0, y1) = window
    nx, ny = shape
    xs = x0 + (np.arange(nx)[rows] + 0.5) * (x1 - x0) / nx
    ys = y0 + (np.arange(ny)[cols] + 0.5) * (y1 - y0) / ny
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    return np.column_stack([X.ravel(), Y.ravel()])


def _tiles(n: int, per_box: float, target: int):
    """Tile length along one axis, box-aligned when ``per_box`` is integral."""
    step = round(per_box)
    if abs(per_box - step) < 1e-9:
        return max(1, target // step) * step, True
    return max(1, target), False


def string_box_counts(system: MapSystem, ks: Sequence[int], eps: float, grid, chunk: int = 1 << 16,
                      merge: bool = False) -> dict:
    """Occupied ``eps``-box counts of sampled ``k``-strings for several ``k``.

    Strings are sampled through their middle entry when the map is invertible
    (index ``(k-1)//2``), otherwise through their first entry.  Tuples of box
    indices are packed exactly into 64 bits when they fit and otherwise
    hashed (FNV-1a over box codes); a collision can only lower a count.

    The sample grid is processed in tiles of about ``chunk`` points.  When
    the grid puts a whole number of samples in each box side the tiles are
    box-aligned, so tuples from different tiles differ in the sampled entry
    and per-tile counts add up exactly.  Otherwise, or with ``merge=True``,
    distinct keys are merged across tiles.

    Returns a dict ``k -> (count, live_samples)``.
    """
    ks = sorted(set(int(k) for k in ks))
    (x0, x1), (y0, y1) = system.window
    nx, ny = (int(grid), int(grid)) if np.isscalar(grid) else map(int, grid)
    sx, sy = nx * eps / (x1 - x0), ny * eps / (y1 - y0)
    if min(sx, sy) < 4:
        raise ConfigurationError(
            f"sample grid {nx}x{ny} gives {min(sx, sy):.2f} samples per box side at eps={eps}; need >= 4"
        )
    nbx = math.ceil((x1 - x0) / eps - 1e-9)
    nby = math.ceil((y1 - y0) / eps - 1e-9)
    nbox = nbx * nby
    bits = max(1, math.ceil(math.log2(nbox)))
    mid = {k: ((k - 1) // 2 if system.invertible else 0) for k in ks}
    back = max(mid.values())
    fwd = max(k - 1 - mid[k] for k in ks)
    side = int(math.isqrt(chunk))
    tx, ax = _tiles(nx, sx, side)
    ty, ay = _tiles(ny, sy, side)
    aligned = ax and ay and not merge
    inv_eps = 1.0 / eps

    def codes(p):
        with np.errstate(invalid="ignore"):
            return _codes(p)

    def _codes(p):
        ix = np.minimum(((p[:, 0] - x0) * inv_eps).astype(np.int64), nbx - 1)
        iy = np.minimum(((p[:, 1] - y0) * inv_eps).astype(np.int64), nby - 1)
        c = ix * nby + iy
        if system.may_escape:
            c[np.isnan(p[:, 0]) | np.isnan(p[:, 1])] = -1
        return c

    total = {k: 0 for k in ks}
    uniques = {k: [] for k in ks}
    pending = {k: 0 for k in ks}
    live = {k: 0 for k in ks}
    for r0 in range(0, nx, tx):
        for c0 in range(0, ny, ty):
            pts = _grid_points(system.window, (nx, ny), slice(r0, r0 + tx), slice(c0, c0 + ty))
            traj = {0: codes(pts)}
            p = pts
            for t in range(1, fwd + 1):
                p = system.forward(p)
                traj[t] = codes(p)
            p = pts
            for t in range(1, back + 1):
                p = system.inverse(p)
                traj[-t] = codes(p)
            for k in ks:
                times = range(-mid[k], k - mid[k])
                alive = traj[times[0]] >= 0
                for t in times[1:]:
                    alive &= traj[t] >= 0
                n_alive = int(alive.sum())
                if n_alive == 0:
                    continue
                if k * bits <= 63:
                    key = np.zeros(n_alive, dtype=np.int64)
                    for t in times:
                        key = key * nbox + traj[t][alive]
                else:
                    key = np.full(n_alive, _OFFSET, dtype=np.uint64)
                    for t in times:
                        key = (key ^ traj[t][alive].astype(np.uint64)) * _PRIME
                key = np.unique(key)
                live[k] += n_alive
                if aligned:
                    total[k] += len(key)
                    continue
                uniques[k].append(key)
                pending[k] += len(key)
                if pending[k] > 1 << 23:
                    uniques[k] = [np.unique(np.concatenate(uniques[k]))]
                    pending[k] = len(uniques[k][0])
    if not aligned:
        for k in ks:
            total[k] = int(len(np.unique(np.concatenate(uniques[k])))) if uniques[k] else 0
    return {k: (total[k], live[k]) for k in ks}


def capacity_entropy(system: MapSystem, schedule: Sequence[OrbitGraphSpec], chunk: int = 1 << 16) -> EntropyEstimate:
    """Entropy from occupied-box counts of orbit strings.

    For each ``eps`` the slope of ``log count`` against ``k`` is fitted over
    the scheduled ``k`` in the upper half of the string-length range
    ``1..k_max``, i.e. ``k > k_max / 2``; smaller ``k`` are measured and
    reported but not fitted.  The estimate is the slope at the smallest
    ``eps``.  Per-``eps`` slopes, raw counts and saturation ratios (occupied
    boxes per live sample) are kept in ``diagnostics``.
    """
    by_eps: dict[float, list[OrbitGraphSpec]] = {}
    for s in schedule:
        by_eps.setdefault(float(s.eps), []).append(s)
    if len(by_eps) < 2:
        raise ConfigurationError("capacity schedule needs at least two eps values")
    per_eps, rows = {}, []
    for eps in sorted(by_eps, reverse=True):
        specs = by_eps[eps]
        k_max = max(s.k for s in specs)
        if len({s.k for s in specs if 2 * s.k > k_max}) < 3:
            raise ConfigurationError(f"eps={eps}: need at least three k values above k_max/2")
        by_grid: dict = {}
        for s in specs:
            by_grid.setdefault(s.grid_shape, []).append(s.k)
        counts = {}
        for shape, ks in by_grid.items():
            for k, (c, live) in string_box_counts(system, ks, eps, shape, chunk).items():
                counts[k] = (c, live, shape)
        est = growth_rate_fit(((k, counts[k][0]) for k in counts if 2 * k > k_max), min_points=3, whole=True)
        per_eps[eps] = est
        for k in sorted(counts):
            c, live, shape = counts[k]
            rows.append({"eps": eps, "k": k, "count": c, "live": live,
                         "grid": list(shape), "saturation": c / live if live else 0.0})
    eps_min = min(per_eps)
    final = per_eps[eps_min]
    return EntropyEstimate(
        final.value, final.growth_factor, final.fit_window, final.residual,
        {"per_eps": {e: per_eps[e].value for e in sorted(per_eps, reverse=True)},
         "eps": eps_min, "counts": rows, "map": system.describe()},
    )


def symbolic_horseshoe_oracle(k: int) -> int:
    """Number of length-``k`` itineraries of the full two-branch horseshoe."""
    if k < 0:
        raise ValueError("k must be non-negative")
    if k > 62:
        raise OverflowError("itinerary count exceeds the supported range (k > 62)")
    return 2**k


# -- curves -------------------------------------------------------------------


@dataclass
class Curve:
    """Polyline on the universal cover; NaN rows separate components."""

    points: np.ndarray
    closed: bool = False
    tol: float = 1e-3

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float).reshape(-1, 2)
        if self.closed and len(self.points) and np.all(np.isfinite(self.points[0])):
            if not np.allclose(self.points[0], self.points[-1]):
                self.points = np.vstack([self.points, self.points[:1]])

    @classmethod
    def segment(cls, start, end, n: int = 2, tol: float = 1e-3) -> "Curve":
        t = np.linspace(0, 1, max(n, 2))[:, None]
        return cls((1 - t) * np.asarray(start, float) + t * np.asarray(end, float), tol=tol)

    def __len__(self):
        return len(self.points)

    def segments(self) -> tuple[np.ndarray, np.ndarray]:
        return self.points[:-1], self.points[1:]

    def length(self, mask: np.ndarray | None = None) -> float:
        """Total length of segments with both ends finite (and in ``mask``)."""
        a, b = self.segments()
        ok = np.all(np.isfinite(a), axis=1) & np.all(np.isfinite(b), axis=1)
        if mask is not None:
            ok &= mask[:-1] & mask[1:]
        return float(np.linalg.norm(b[ok] - a[ok], axis=1).sum())


def _refine_once(system: MapSystem, pts: np.ndarray, tol: float, min_seg: float):
    """Insert midpoints where the image chord misses the midpoint image."""
    img = system.lift(pts)
    a, b = pts[:-1], pts[1:]
    fa, fb = img[:-1], img[1:]
    src_ok = np.all(np.isfinite(a), axis=1) & np.all(np.isfinite(b), axis=1)
    mids = 0.5 * (a + b)
    fm = system.lift(np.where(src_ok[:, None], mids, 0.0))
    seglen = np.linalg.norm(b - a, axis=1)
    fin_a = np.all(np.isfinite(fa), axis=1)
    fin_b = np.all(np.isfinite(fb), axis=1)
    fin_m = np.all(np.isfinite(fm), axis=1)
    dev = np.linalg.norm(fm - 0.5 * (fa + fb), axis=1)
    split = src_ok & (seglen > min_seg) & (
        (fin_a & fin_b & fin_m & (dev > tol)) | ((fin_a != fin_b) | (fin_a & fin_b & ~fin_m))
    )
    if not split.any():
        return pts, img, False
    idx = np.flatnonzero(split)
    new = np.insert(pts, idx + 1, mids[idx], axis=0)
    return new, None, True


def _step_curve(system: MapSystem, pts: np.ndarray, tol: float, min_seg: float, budget: int):
    while True:
        pts, img, again = _refine_once(system, pts, tol, min_seg)
        if len(pts) > budget:
            raise ResourceError(f"curve refinement exceeded {budget} vertices")
        if not again:
            return _compact_nan(img)


def _compact_nan(pts: np.ndarray) -> np.ndarray:
    bad = ~np.all(np.isfinite(pts), axis=1)
    if not bad.any():
        return pts
    keep = ~bad | np.concatenate([[False], ~bad[:-1]])  # keep one NaN separator
    out = pts[keep]
    while len(out) and not np.all(np.isfinite(out[0])):
        out = out[1:]
    return out


def iterate_curve(system: MapSystem, curve: Curve, n: int, max_vertices: int = 2_000_000,
                  min_seg: float | None = None) -> list[Curve]:
    """``[curve, f(curve), ..., f^n(curve)]`` on the cover, adaptively refined.

    Segments whose image leaves the domain at one end are bisected down to
    ``min_seg`` (default ``tol / 1000``); the escaped part is then dropped.
    """
    min_seg = curve.tol * 1e-3 if min_seg is None else min_seg
    out = [curve]
    pts = curve.points
    for j in range(n):
        try:
            pts = _step_curve(system, pts, curve.tol, min_seg, max_vertices)
        except ResourceError as err:
            raise ResourceError(str(err), partial=out) from None
        out.append(Curve(pts, tol=curve.tol))
    return out


def _volume_fit(values: list[float], start: int, system: MapSystem, kind: str) -> EntropyEstimate:
    est = growth_rate_fit_polylog(list(zip(range(start, start + len(values)), values)))
    est.diagnostics.update({"lengths": values, "map": system.describe(), "estimator": kind})
    return est


def growth_rate_fit_polylog(points: list[tuple[int, float]]) -> EntropyEstimate:
    """Fit ``log y = h n + p log n + c`` over the upper half of ``n >= 1``.

    The ``log n`` term absorbs polynomial growth (shears, graph lengths of
    isometries), leaving ``h`` as the exponential rate.
    """
    pts = [(n, y) for n, y in points if n >= 1]
    if len(pts) < 4:
        raise ValueError("need at least four points with n >= 1")
    base = growth_rate_fit(pts)
    n = np.array([p[0] for p in pts], float)
    y = np.array([math.log(p[1]) if p[1] > 0 else 0.0 for p in pts])
    sl = upper_half(len(n))
    if sl.stop - sl.start < 4:
        sl = slice(len(n) - 4, len(n))
    n, y = n[sl], y[sl]
    if np.all(y == y[0]):
        return EntropyEstimate(0.0, 1.0, base.fit_window, 0.0, {"poly_degree": 0.0})
    design = np.column_stack([n, np.log(n), np.ones_like(n)])
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    h, p = float(coef[0]), float(coef[1])
    if abs(h) < 1e-12:
        h = 0.0
    resid = float(np.sqrt(np.mean((design @ coef - y) ** 2)))
    return EntropyEstimate(h, math.exp(h), (int(n[0]), int(n[-1])), resid,
                           {"poly_degree": p, "plain_slope": base.value})


def _check_inside(system: MapSystem, curve: Curve):
    if isinstance(system, TorusAutomorphism):
        return  # curves live on the universal cover
    pts = curve.points[np.all(np.isfinite(curve.points), axis=1)]
    (x0, x1), (y0, y1) = system.window
    if not np.all((pts[:, 0] >= x0) & (pts[:, 0] <= x1) & (pts[:, 1] >= y0) & (pts[:, 1] <= y1)):
        raise ValueError("curve leaves the map's domain")


def curve_volume_growth(system: MapSystem, curve: Curve, n_max: int = 20,
                        max_vertices: int = 2_000_000) -> EntropyEstimate:
    """Growth rate of the length of ``f^n(curve) ∩ W`` for ``n = 0..n_max``."""
    if n_max < 4:
        raise ValueError("n_max must be at least 4")
    _check_inside(system, curve)
    try:
        curves = iterate_curve(system, curve, n_max, max_vertices)
    except ResourceError as err:
        lengths = [c.length(system.in_support_region(c.points)) for c in err.partial]
        raise ResourceError(str(err), partial=lengths) from None
    lengths = [c.length(system.in_support_region(c.points)) for c in curves]
    return _volume_fit(lengths, 0, system, "curve_volume")


def graph_lengths(system: MapSystem, curve: Curve, k_max: int, max_vertices: int = 2_000_000,
                  min_seg: float | None = None) -> list[float]:
    """Lengths of ``{(y, f y, ..., f^{k-1} y) : y in curve}`` for ``k = 1..k_max``.

    Refinement happens in the base curve's parameter so every vertex carries
    its exact string; lengths use the Euclidean product metric.
    """
    # refinement happens before stretching, so the floor must be much finer
    min_seg = curve.tol * 1e-9 if min_seg is None else min_seg
    base = curve.points.copy()
    out = []
    for k in range(1, k_max + 1):
        while True:
            imgs = [base]
            for _ in range(k - 1):
                imgs.append(system.lift(imgs[-1]))
            a, b = base[:-1], base[1:]
            ok = np.all(np.isfinite(a), axis=1) & np.all(np.isfinite(b), axis=1)
            mids = np.where(ok[:, None], 0.5 * (a + b), 0.0)
            seglen = np.linalg.norm(b - a, axis=1)
            split = np.zeros(len(a), dtype=bool)
            m = mids
            for j in range(1, k):
                m = system.lift(m)
                fa, fb = imgs[j][:-1], imgs[j][1:]
                fin_a = np.all(np.isfinite(fa), axis=1)
                fin_b = np.all(np.isfinite(fb), axis=1)
                fin_m = np.all(np.isfinite(m), axis=1)
                dev = np.linalg.norm(m - 0.5 * (fa + fb), axis=1)
                split |= (fin_a & fin_b & fin_m & (dev > curve.tol)) | (fin_a != fin_b) | (fin_a & fin_b & ~fin_m)
            split &= ok & (seglen > min_seg)
            if not split.any():
                break
            idx = np.flatnonzero(split)
            base = np.insert(base, idx + 1, mids[idx], axis=0)
            if len(base) > max_vertices:
                raise ResourceError(f"graph refinement exceeded {max_vertices} vertices", partial=out)
        sq = np.zeros(len(base) - 1)
        good = np.ones(len(base) - 1, dtype=bool)
        for img in imgs:
            d = img[1:] - img[:-1]
            good &= np.all(np.isfinite(d), axis=1) & system.in_support_region(img)[1:] & system.in_support_region(img)[:-1]
            sq += np.where(np.isfinite(d), d, 0.0).__pow__(2).sum(axis=1)
        out.append(float(np.sqrt(sq[good]).sum()))
    return out


def graph_volume_growth(system: MapSystem, curve: Curve, k_max: int = 20,
                        max_vertices: int = 2_000_000) -> EntropyEstimate:
    """Growth rate of the length of the ``k``-string graph over ``curve``."""
    if k_max < 4:
        raise ValueError("k_max must be at least 4")
    _check_inside(system, curve)
    lengths = graph_lengths(system, curve, k_max, max_vertices)
    return _volume_fit(lengths, 1, system, "graph_volume")


def series_csv(values: Sequence[float], start: int = 0) -> str:
    """Raw counts or lengths as ``n_or_k,count_or_length`` CSV."""
    lines = ["n_or_k,count_or_length"]
    lines += [f"{start + i},{v!r}" for i, v in enumerate(values)]
    return "\n".join(lines) + "\n"


def capacity_csv(estimate: EntropyEstimate) -> str:
    """Per-``(eps, k)`` box counts from a ``capacity_entropy`` result."""
    lines = ["eps,n_or_k,count_or_length,live_samples,saturation"]
    for r in estimate.diagnostics["counts"]:
        lines.append(f"{r['eps']!r},{r['k']},{r['count']},{r['live']},{r['saturation']:.6g}")
    return "\n".join(lines) + "\n"


def _num(x) -> float:
    """Float from a number or a string such as ``0.5`` or ``1/3``."""
    return float(Fraction(x)) if isinstance(x, str) else float(x)


def _floats(v, n=None):
    vals = [_num(x) for x in (v.replace(",", " ").split() if isinstance(v, str) else v)]
    if n is not None and len(vals) != n:
        raise ValueError(f"expected {n} numbers, got {vals}")
    return vals


def build_map(spec: dict) -> MapSystem:
    """Construct a map from a flat config dict.

    ``map`` is one of ``torus`` (``matrix = a b c d``), ``horseshoe``
    (``contraction``, ``stretch``, ``pad``), ``annulus_twist``
    (``amplitude``, ``support = lo hi``, ``p_range = lo hi``) or ``identity``.
    """
    kind = str(spec.get("map", "torus")).strip()
    if kind in ("torus", "torus_automorphism", "cat"):
        m = [int(round(x)) for x in _floats(spec.get("matrix", "2 1 1 1"), 4)]
        return TorusAutomorphism(((m[0], m[1]), (m[2], m[3])))
    if kind == "horseshoe":
        return Horseshoe(_num(spec.get("contraction", 1 / 3)), _num(spec.get("stretch", 3.0)),
                         _num(spec.get("pad", 0.0)))
    if kind == "annulus_twist":
        return AnnulusTwist(_num(spec.get("amplitude", 1.0)),
                            tuple(_floats(spec.get("support", "-0.5 0.5"), 2)),
                            tuple(_floats(spec.get("p_range", "-1 1"), 2)))
    if kind == "identity":
        return IdentityMap()
    raise ValueError(f"unknown map kind {kind!r}")
