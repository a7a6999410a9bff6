"""Filtered chain complexes over GF(2), singular-basis reduction and barcodes.

Actions are exact :class:`fractions.Fraction` values.  The differential must
strictly lower action, so every sublevel set ``{action <= t}`` spans a
subcomplex and bars are born at the action of a boundary ``beta`` and die at
the action of the chain ``gamma`` that bounds it.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Hashable, Iterable, Mapping, Sequence

from .errors import ValidationError

INF = math.inf


def as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        raise TypeError("actions must be exact; quantize floats with quantize_action()")
    return Fraction(x)


def quantize_action(x: float, tol: float = 1e-9) -> Fraction:
    """Round a float to the nearest multiple of ``tol`` as an exact rational."""
    scale = round(1 / tol)
    return Fraction(round(x * scale), scale)


@dataclass(frozen=True)
class Generator:
    id: Hashable
    degree: int
    action: Fraction

    def __post_init__(self):
        object.__setattr__(self, "degree", int(self.degree) % 2)
        object.__setattr__(self, "action", as_fraction(self.action))


class FilteredComplex:
    """Finite filtered chain complex over the two-element field.

    Parameters
    ----------
    generators : sequence of Generator or (id, degree, action) tuples
    differential : iterable of (from_id, to_id)
        Nonzero matrix entries.  A repeated entry cancels (coefficients mod 2).
    validate : bool
        Check uniqueness, ``d∘d = 0`` and strict action decrease.
    """

    def __init__(self, generators: Sequence, differential: Iterable = (), validate: bool = True):
        gens = tuple(g if isinstance(g, Generator) else Generator(*g) for g in generators)
        self.generators = gens
        self._by_id = {g.id: g for g in gens}
        entries = Counter((a, b) for a, b in differential)
        bd: dict = {g.id: set() for g in gens}
        for (a, b), c in entries.items():
            if c % 2:
                if a not in bd or b not in self._by_id:
                    raise ValidationError(f"differential entry ({a!r}, {b!r}) names an unknown generator")
                bd[a].add(b)
        self._boundary = {k: frozenset(v) for k, v in bd.items()}
        if validate:
            self.validate()

    def __len__(self):
        return len(self.generators)

    def __repr__(self):
        return f"FilteredComplex({len(self)} generators, {len(self.entries())} differential entries)"

    @property
    def ids(self) -> list:
        return [g.id for g in self.generators]

    def action(self, gid) -> Fraction:
        return self._by_id[gid].action

    def degree(self, gid) -> int:
        return self._by_id[gid].degree

    def boundary(self, gid) -> frozenset:
        return self._boundary[gid]

    def entries(self) -> list[tuple]:
        return [(a, b) for a in self.ids for b in sorted(self._boundary[a], key=str)]

    def validate(self) -> None:
        if len(self._by_id) != len(self.generators):
            raise ValidationError("generator ids are not unique")
        for a, targets in self._boundary.items():
            for b in targets:
                if not self.action(b) < self.action(a):
                    raise ValidationError(
                        f"differential {a!r} -> {b!r} does not decrease action "
                        f"({self.action(a)} -> {self.action(b)})"
                    )
        for a in self.ids:
            if apply_differential(self, self._boundary[a]):
                raise ValidationError(f"d(d({a!r})) != 0")

    def order(self) -> list:
        """Generator ids sorted by (action, id); the filtration order."""
        return sorted(self.ids, key=lambda i: (self.action(i), str(i)))

    def shifted(self, shifts: Mapping | Fraction | int) -> "FilteredComplex":
        """Copy with actions shifted, either globally or per generator id."""
        if isinstance(shifts, Mapping):
            get = lambda i: as_fraction(shifts.get(i, 0))
        else:
            c = as_fraction(shifts)
            get = lambda i: c
        gens = [Generator(g.id, g.degree, g.action + get(g.id)) for g in self.generators]
        return FilteredComplex(gens, self.entries())

    def relabeled(self, mapping: Mapping) -> "FilteredComplex":
        gens = [Generator(mapping[g.id], g.degree, g.action) for g in self.generators]
        return FilteredComplex(gens, [(mapping[a], mapping[b]) for a, b in self.entries()])

    def boundary_matrix(self, order: Sequence | None = None):
        """Dense 0/1 numpy matrix with column j the boundary of ``order[j]``."""
        import numpy as np

        order = list(order) if order is not None else self.ids
        pos = {g: i for i, g in enumerate(order)}
        m = np.zeros((len(order), len(order)), dtype=np.uint8)
        for a in order:
            for b in self._boundary[a]:
                m[pos[b], pos[a]] = 1
        return m


Chain = frozenset


def chain(*ids) -> frozenset:
    """Chain over GF(2) from generator ids; repeated ids cancel."""
    counts = Counter(ids)
    return frozenset(i for i, c in counts.items() if c % 2)


def _as_chain(c) -> frozenset:
    if isinstance(c, Mapping):
        return frozenset(i for i, a in c.items() if int(a) % 2)
    if isinstance(c, frozenset):
        return c
    return chain(*c)


def apply_differential(cx: FilteredComplex, c) -> frozenset:
    out: set = set()
    for g in _as_chain(c):
        out ^= cx.boundary(g)
    return frozenset(out)


def norm(c, cx: FilteredComplex):
    """Non-Archimedean action norm: largest action on the support, ``-inf`` for 0."""
    support = _as_chain(c)
    for g in support:
        if g not in cx._by_id:
            raise ValueError(f"unknown generator {g!r}")
    if not support:
        return -INF
    return max(cx.action(g) for g in support)


@dataclass(frozen=True)
class SingularBasis:
    """Basis ``{alpha_i} ∪ {(beta_j, gamma_j)}`` with ``d gamma_j = beta_j``.

    Pairs are sorted by non-decreasing length ``A(gamma_j) - A(beta_j)``.
    """

    alphas: tuple[frozenset, ...]
    pairs: tuple[tuple[frozenset, frozenset], ...]

    def __len__(self):
        return len(self.alphas) + 2 * len(self.pairs)

    def pair_lengths(self, cx: FilteredComplex) -> list[Fraction]:
        return [norm(g, cx) - norm(b, cx) for b, g in self.pairs]

    def check(self, cx: FilteredComplex) -> None:
        """Raise ValidationError unless the singular-basis invariants hold."""
        for a in self.alphas:
            if apply_differential(cx, a):
                raise ValidationError("alpha is not a cycle")
        for b, g in self.pairs:
            if apply_differential(cx, g) != b:
                raise ValidationError("d(gamma) != beta")
        lengths = self.pair_lengths(cx)
        if any(x > y for x, y in zip(lengths, lengths[1:])):
            raise ValidationError("pair lengths are not sorted")
        vectors = list(self.alphas) + [b for b, _ in self.pairs] + [g for _, g in self.pairs]
        if len(vectors) != len(cx) or gf2_rank_chains(vectors, cx.ids) != len(cx):
            raise ValidationError("basis does not span the complex")


def gf2_rank_chains(chains: Sequence[frozenset], ids: Sequence) -> int:
    pos = {g: i for i, g in enumerate(ids)}
    return gf2_rank_bitmasks([sum(1 << pos[g] for g in c) for c in chains])


def gf2_rank_bitmasks(rows: Iterable[int]) -> int:
    basis: dict[int, int] = {}
    for r in rows:
        while r:
            top = r.bit_length() - 1
            if top not in basis:
                basis[top] = r
                break
            r ^= basis[top]
    return len(basis)


def homology_rank(cx: FilteredComplex) -> int:
    """``dim H`` over GF(2) as ``n - 2 rank(d)``, independent of the reduction."""
    pos = {g: i for i, g in enumerate(cx.ids)}
    cols = [sum(1 << pos[b] for b in cx.boundary(a)) for a in cx.ids]
    return len(cx) - 2 * gf2_rank_bitmasks(cols)


def reduce(cx: FilteredComplex) -> SingularBasis:
    """Column reduction in filtration order with basis tracking.

    Columns are the generators sorted by (action, id).  A column is reduced
    against earlier columns until its lowest entry (the top-action term of its
    boundary) is unclaimed.  The surviving reduced boundaries are the
    ``beta``'s, the tracked column combinations are the ``gamma``'s and the
    columns that reduce to zero without being claimed are the ``alpha``'s.
    """
    cx.validate()
    order = cx.order()
    pos = {g: i for i, g in enumerate(order)}
    n = len(order)
    R = [sum(1 << pos[b] for b in cx.boundary(g)) for g in order]
    V = [1 << j for j in range(n)]
    owner: dict[int, int] = {}
    for j in range(n):
        r, v = R[j], V[j]
        while r:
            low = r.bit_length() - 1
            i = owner.get(low)
            if i is None:
                owner[low] = j
                break
            r ^= R[i]
            v ^= V[i]
        R[j], V[j] = r, v

    def to_chain(mask: int) -> frozenset:
        out = []
        while mask:
            low = mask & -mask
            out.append(order[low.bit_length() - 1])
            mask ^= low
        return frozenset(out)

    alphas = [to_chain(V[j]) for j in range(n) if R[j] == 0 and j not in owner]
    pairs = []
    for low, j in owner.items():
        length = cx.action(order[j]) - cx.action(order[low])
        pairs.append((length, j, to_chain(R[j]), to_chain(V[j])))
    pairs.sort(key=lambda p: (p[0], p[1]))
    return SingularBasis(tuple(alphas), tuple((b, g) for _, _, b, g in pairs))


class Barcode:
    """Multiset of bar lengths in ``Q>=0 ∪ {inf}``, stored with multiplicities.

    ``Barcode.infinite(n)`` builds ``n`` infinite bars in constant space, which
    matters for models whose bar counts grow exponentially.
    """

    def __init__(self, bars: Iterable = (), multiplicities: Mapping | None = None):
        mult: Counter = Counter()
        items = list(multiplicities.items()) if multiplicities else []
        items += [(b, 1) for b in bars]
        for b, m in items:
            if b != INF:
                b = as_fraction(b)
                if b < 0:
                    raise ValueError(f"negative bar length {b}")
            if m < 0:
                raise ValueError("negative multiplicity")
            if m:
                mult[b] += int(m)
        self._mult = dict(sorted(mult.items()))

    @classmethod
    def infinite(cls, n: int) -> "Barcode":
        return cls(multiplicities={INF: n})

    @property
    def multiplicities(self) -> dict:
        return dict(self._mult)

    @property
    def bars(self) -> tuple:
        """Sorted bar lengths, expanded; avoid on very large barcodes."""
        return tuple(b for b, m in self._mult.items() for _ in range(m))

    def __eq__(self, other):
        return isinstance(other, Barcode) and self._mult == other._mult

    def __hash__(self):
        return hash(tuple(self._mult.items()))

    def __len__(self):
        return sum(self._mult.values())

    def __repr__(self):
        parts = [("inf" if b == INF else str(b)) + (f" x{m}" if m > 1 else "") for b, m in self._mult.items()]
        return "Barcode({" + ", ".join(parts) + "})"

    @property
    def n_infinite(self) -> int:
        return self._mult.get(INF, 0)

    @property
    def finite(self) -> tuple[Fraction, ...]:
        return tuple(b for b, m in self._mult.items() if b != INF for _ in range(m))

    def count_at_least(self, eps) -> int:
        return sum(m for b, m in self._mult.items() if b >= eps)

    def to_csv(self) -> str:
        rows = ["length"] + ["inf" if b == INF else str(b) for b in self.bars]
        return "\n".join(rows) + "\n"

    @classmethod
    def from_csv(cls, text: str) -> "Barcode":
        lines = [ln.strip() for ln in text.strip().splitlines()]
        if not lines or lines[0] != "length":
            raise ValueError("barcode CSV must start with a 'length' header")
        return cls(INF if ln == "inf" else Fraction(ln) for ln in lines[1:] if ln)


def barcode(cx: FilteredComplex) -> Barcode:
    basis = reduce(cx)
    return Barcode([INF] * len(basis.alphas) + basis.pair_lengths(cx))


def count_b_epsilon(bc: Barcode, eps) -> int:
    """Number of bars of length ``>= eps``; ``eps = inf`` counts infinite bars."""
    if eps != INF:
        eps = as_fraction(eps) if not isinstance(eps, float) else Fraction(eps)
    if eps < 0:
        raise ValueError("epsilon must be non-negative")
    return bc.count_at_least(eps)


@dataclass(frozen=True)
class StabilityReport:
    eps: Fraction
    delta: Fraction
    b_perturbed_upper: int  # b_{eps+delta}(perturbed)
    b_base: int  # b_eps(base)
    b_perturbed_lower: int  # b_{eps-delta}(perturbed)

    @property
    def holds(self) -> bool:
        return self.b_perturbed_upper <= self.b_base <= self.b_perturbed_lower

    def __bool__(self):
        return self.holds


def check_stability(base: FilteredComplex, perturbed: FilteredComplex, delta, eps) -> StabilityReport:
    """Check ``b_{eps+delta}(P) <= b_eps(B) <= b_{eps-delta}(P)``.

    ``perturbed`` must have the same generators and differential as ``base``
    with every action moved by at most ``delta / 2``; this stands in for a
    Hofer-distance bound of ``delta / 2``.
    """
    delta, eps = as_fraction(delta), as_fraction(eps)
    if delta >= eps:
        raise ValueError("stability check requires delta < eps")
    if delta < 0:
        raise ValueError("delta must be non-negative")
    if set(base.ids) != set(perturbed.ids) or set(base.entries()) != set(perturbed.entries()):
        raise ValidationError("perturbed complex must keep generators and differential")
    for g in base.ids:
        if abs(base.action(g) - perturbed.action(g)) > delta / 2:
            raise ValidationError(f"action of {g!r} moved by more than delta/2")
    bb, bp = barcode(base), barcode(perturbed)
    return StabilityReport(
        eps,
        delta,
        count_b_epsilon(bp, eps + delta),
        count_b_epsilon(bb, eps),
        count_b_epsilon(bp, eps - delta),
    )


def good_pair_b_epsilon(schedule: Sequence, eps) -> int:
    """Finite stand-in for ``liminf`` of ``b_eps`` as the perturbation shrinks.

    ``schedule`` holds complexes (or barcodes) ordered by decreasing
    perturbation size.  Returns the minimum of ``b_eps`` over the last
    ``ceil(len/2)`` entries.  This is an approximation of the limit, not the
    limit itself.
    """
    if not schedule:
        raise ValueError("empty perturbation schedule")
    tail = schedule[len(schedule) - (len(schedule) + 1) // 2 :]
    return min(count_b_epsilon(x if isinstance(x, Barcode) else barcode(x), eps) for x in tail)


# -- text format -------------------------------------------------------------


def format_fcx(cx: FilteredComplex) -> str:
    lines = [f"fcx v1 {len(cx)}"]
    for g in cx.generators:
        a = g.action
        lines.append(f"{g.id} {g.degree} {a.numerator}/{a.denominator}")
    lines += [f"d {a} {b}" for a, b in cx.entries()]
    return "\n".join(lines) + "\n"


def parse_fcx(text: str) -> FilteredComplex:
    rows = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not rows or rows[0][:2] != ["fcx", "v1"] or len(rows[0]) != 3:
        raise ValueError("missing 'fcx v1 <n>' header")
    n = int(rows[0][2])
    gens, diff = [], []
    for r in rows[1:]:
        if r[0] == "d" and len(r) == 3:
            diff.append((r[1], r[2]))
        elif len(r) == 3 and len(gens) < n:
            gens.append(Generator(r[0], int(r[1]), Fraction(r[2])))
        else:
            raise ValueError(f"malformed fcx line: {' '.join(r)}")
    if len(gens) != n:
        raise ValueError(f"header announces {n} generators, found {len(gens)}")
    return FilteredComplex(gens, diff)


def read_fcx(path) -> FilteredComplex:
    with open(path) as fh:
        return parse_fcx(fh.read())


def write_fcx(cx: FilteredComplex, path) -> None:
    with open(path, "w") as fh:
        fh.write(format_fcx(cx))
