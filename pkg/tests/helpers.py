"""Random filtered complexes and independent reference computations for tests."""

import math
from fractions import Fraction

import numpy as np

from symentropy.persistence import FilteredComplex, Generator


def random_complex(rng, n_max=12, action_range=6, denominators=(1, 2)):
    """Random valid complex with a known barcode.

    A normal form (pairs gamma -> beta plus free cycles) is conjugated by a
    random unitriangular change of basis in filtration order, which preserves
    the barcode and the strict action decrease of the differential.
    """
    n = int(rng.integers(0, n_max + 1))
    acts = [Fraction(int(rng.integers(-action_range, action_range + 1)), int(rng.choice(denominators)))
            for _ in range(n)]
    ids = [f"g{i}" for i in range(n)]
    order = sorted(range(n), key=lambda i: (acts[i], ids[i]))
    rank = {i: r for r, i in enumerate(order)}
    free = list(rng.permutation(n))
    d = np.zeros((n, n), dtype=np.uint8)
    expected = []
    while len(free) >= 2 and rng.random() < 0.7:
        a, b = int(free.pop()), int(free.pop())
        if acts[a] == acts[b]:
            free += [a, b]
            break
        hi, lo = (a, b) if acts[a] > acts[b] else (b, a)
        d[lo, hi] = 1
        expected.append(acts[hi] - acts[lo])
    expected += [math.inf] * (n - 2 * len(expected))
    # unitriangular T: column x gains earlier generators in filtration order
    T = np.eye(n, dtype=np.uint8)
    for x in range(n):
        for y in range(n):
            if rank[y] < rank[x] and rng.random() < 0.3:
                T[y, x] = 1
    Tinv = gf2_inverse(T)
    dd = (T.astype(np.int64) @ d @ Tinv) % 2
    gens = [Generator(ids[i], int(rng.integers(0, 2)), acts[i]) for i in range(n)]
    diff = [(ids[x], ids[y]) for x in range(n) for y in range(n) if dd[y, x]]
    return FilteredComplex(gens, diff), sorted(expected)


def gf2_inverse(m):
    n = m.shape[0]
    a = np.concatenate([m.copy() % 2, np.eye(n, dtype=np.uint8)], axis=1)
    for c in range(n):
        piv = next(r for r in range(c, n) if a[r, c])
        a[[c, piv]] = a[[piv, c]]
        for r in range(n):
            if r != c and a[r, c]:
                a[r] ^= a[c]
    return a[:, n:].astype(np.int64)


def oracle_barcode(cx):
    """Standard persistence on a dense 0/1 matrix, columns sorted by action."""
    order = sorted(cx.ids, key=lambda g: (cx.action(g), str(g)))
    D = cx.boundary_matrix(order).astype(bool)
    n = len(order)
    lows = {}
    paired_rows = set()
    bars = []
    for j in range(n):
        col = D[:, j].copy()
        while col.any():
            low = int(np.flatnonzero(col)[-1])
            if low not in lows:
                break
            col ^= D[:, lows[low]]
        D[:, j] = col
        if col.any():
            low = int(np.flatnonzero(col)[-1])
            lows[low] = j
            paired_rows.add(low)
            bars.append(cx.action(order[j]) - cx.action(order[low]))
    for j in range(n):
        if not D[:, j].any() and j not in paired_rows:
            bars.append(math.inf)
    return sorted(bars)


def sublevel_persistence_circle(values):
    """Sublevel-set 0-dim persistence of a sampled periodic function.

    Union-find over vertices of a cycle graph in increasing value order.
    Returns the finite bar lengths (elder rule) and the global minimum.
    """
    v = np.asarray(values, dtype=float)
    n = len(v)
    parent = list(range(n))
    birth = v.copy()

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    seen = np.zeros(n, dtype=bool)
    bars = []
    for i in np.argsort(v, kind="stable"):
        seen[i] = True
        for j in ((i - 1) % n, (i + 1) % n):
            if seen[j]:
                ri, rj = find(i), find(j)
                if ri == rj:
                    continue
                young, old = (ri, rj) if birth[ri] > birth[rj] else (rj, ri)
                bars.append(v[i] - birth[young])
                parent[young] = old
    return [b for b in bars if b > 1e-12]


# one-line acceptance summaries, printed by conftest.pytest_terminal_summary
ACCEPTANCE = []
