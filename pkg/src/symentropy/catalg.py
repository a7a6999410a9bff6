"""Matrix models of Dehn-twist words on plumbings of spheres along a tree.

Homology classes of the vertex spheres form a basis; a twist along the sphere
at ``v`` acts by the Picard-Lefschetz formula.  Column ``j`` of every matrix is
the image of basis vector ``j``.  On the A2 tree with vertices (A, B)::

    (tau_A)_* = [[(-1)^(n-1), 1], [0, 1]]
    (tau_B)_* = [[1, 0], [(-1)^n, (-1)^(n-1)]]

For a general tree the neighbour coefficient is ``+1`` when the neighbour comes
after the twisted vertex in the tree's vertex order and ``(-1)^n`` otherwise,
which reproduces both A2 matrices.

The Hom-growth model replaces every letter by the entry-wise absolute value of
its integer matrix and measures the growth of ``|M^n v|_1``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

from .growth import EntropyEstimate, growth_rate_fit

EVEN, ODD = "even", "odd"

#: square ``dtype=object`` array of Python ints, rows and columns in tree vertex order
IntegerMatrix = np.ndarray


@dataclass(frozen=True)
class PlumbingTree:
    vertices: tuple[str, ...]
    edges: frozenset
    parity: str = EVEN

    def __post_init__(self):
        verts = tuple(str(v) for v in self.vertices)
        object.__setattr__(self, "vertices", verts)
        object.__setattr__(self, "edges", frozenset(frozenset(map(str, e)) for e in self.edges))
        if self.parity not in (EVEN, ODD):
            raise ValueError("parity must be 'even' or 'odd'")
        if not verts:
            raise ValueError("a plumbing tree needs at least one vertex")
        if len(set(verts)) != len(verts):
            raise ValueError("duplicate vertex names")
        for e in self.edges:
            if len(e) != 2 or not e <= set(verts):
                raise ValueError(f"bad edge {set(e)}")
        if len(self.edges) != len(verts) - 1 or not self._connected():
            raise ValueError("edges do not form a tree")

    def _connected(self) -> bool:
        seen, stack = {self.vertices[0]}, [self.vertices[0]]
        while stack:
            v = stack.pop()
            for w in self.neighbors(v):
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return len(seen) == len(self.vertices)

    def neighbors(self, v) -> list[str]:
        return [w for e in self.edges if v in e for w in e if w != v]

    def index(self, v) -> int:
        try:
            return self.vertices.index(str(v))
        except ValueError:
            raise ValueError(f"vertex {v!r} is not in the tree") from None

    def with_parity(self, parity: str) -> "PlumbingTree":
        return PlumbingTree(self.vertices, self.edges, parity)

    @classmethod
    def path(cls, n: int, parity: str = EVEN) -> "PlumbingTree":
        """A_n tree on vertices A, B, C, ... joined in a line."""
        names = _letters(n)
        return cls(names, {(a, b) for a, b in zip(names, names[1:])}, parity)

    @classmethod
    def star(cls, n: int, parity: str = EVEN) -> "PlumbingTree":
        """D_n tree: a path of n-1 vertices with an extra leaf on the second-to-last."""
        if n < 4:
            raise ValueError("D_n needs n >= 4")
        names = _letters(n)
        edges = {(a, b) for a, b in zip(names[: n - 1], names[1 : n - 1])}
        edges.add((names[n - 3], names[n - 1]))
        return cls(names, edges, parity)

    @classmethod
    def from_name(cls, name: str, parity: str = EVEN) -> "PlumbingTree":
        m = re.fullmatch(r"([AD])(\d+)", name.strip())
        if not m:
            raise ValueError(f"unknown tree {name!r}; use A<n> or D<n>")
        kind, n = m.group(1), int(m.group(2))
        return cls.path(n, parity) if kind == "A" else cls.star(n, parity)


def _letters(n: int) -> tuple[str, ...]:
    if n < 1:
        raise ValueError("need at least one vertex")
    alphabet = "ABCDEFGHIJKLMNOPQRSTUVWXYZ"
    return tuple(alphabet[i] if n <= 26 else f"S{i}" for i in range(n))


@dataclass(frozen=True)
class TwistWord:
    """Letters ``(vertex, +1 | -1)``, composed left to right as maps.

    The word ``A+ B-`` is ``tau_A ∘ tau_B^{-1}``, so its homology matrix is the
    product ``(tau_A)_* @ (tau_B)_*^{-1}``.
    """

    letters: tuple[tuple[str, int], ...] = ()

    def __post_init__(self):
        letters = tuple((str(v), int(e)) for v, e in self.letters)
        for _, e in letters:
            if e not in (1, -1):
                raise ValueError("twist exponents must be +1 or -1")
        object.__setattr__(self, "letters", letters)

    def __len__(self):
        return len(self.letters)

    def __str__(self):
        return " ".join(f"{v}{'+' if e > 0 else '-'}" for v, e in self.letters)

    @classmethod
    def parse(cls, text: str) -> "TwistWord":
        letters = []
        for tok in text.split():
            m = re.fullmatch(r"(\w+?)([+-])", tok)
            if not m:
                raise ValueError(f"bad letter {tok!r}; expected e.g. 'A+' or 'B-'")
            letters.append((m.group(1), 1 if m.group(2) == "+" else -1))
        return cls(tuple(letters))

    def inverse(self) -> "TwistWord":
        return TwistWord(tuple((v, -e) for v, e in reversed(self.letters)))

    def __add__(self, other: "TwistWord") -> "TwistWord":
        return TwistWord(self.letters + other.letters)

    def check(self, tree: PlumbingTree) -> None:
        for v, _ in self.letters:
            tree.index(v)

    def cyclically_reduced(self) -> "TwistWord":
        """Cancel adjacent ``v+ v-`` pairs, including across the word's ends."""
        stack: list[tuple[str, int]] = []
        for v, e in self.letters:
            if stack and stack[-1] == (v, -e):
                stack.pop()
            else:
                stack.append((v, e))
        lo, hi = 0, len(stack) - 1
        while lo < hi and stack[lo][0] == stack[hi][0] and stack[lo][1] == -stack[hi][1]:
            lo += 1
            hi -= 1
        return TwistWord(tuple(stack[lo : hi + 1]))


# -- integer matrices -------------------------------------------------------


def _identity(n: int) -> IntegerMatrix:
    m = np.zeros((n, n), dtype=object)
    for i in range(n):
        m[i, i] = 1
    return m


def homology_twist_matrix(tree: PlumbingTree, vertex, parity: str | None = None) -> IntegerMatrix:
    """Integer matrix of the twist along the sphere at ``vertex``."""
    parity = parity or tree.parity
    if parity not in (EVEN, ODD):
        raise ValueError("parity must be 'even' or 'odd'")
    v = tree.index(vertex)
    n_even = parity == EVEN
    self_sign = -1 if n_even else 1  # (-1)^(n-1)
    back_sign = 1 if n_even else -1  # (-1)^n
    m = _identity(len(tree.vertices))
    m[v, v] = self_sign
    for w_name in tree.neighbors(tree.vertices[v]):
        w = tree.index(w_name)
        m[v, w] = 1 if w > v else back_sign
    return m


def integer_inverse(m: np.ndarray) -> IntegerMatrix:
    """Exact inverse of a unimodular integer matrix."""
    import sympy

    sm = sympy.Matrix(m.tolist())
    det = sm.det()
    if det not in (1, -1):
        raise ValueError(f"matrix is not unimodular (det={det})")
    inv = sm.inv()
    return np.array([[int(x) for x in row] for row in inv.tolist()], dtype=object)


def _letter_matrix(tree, v, e, parity, cache) -> IntegerMatrix:
    key = (v, e)
    if key not in cache:
        t = homology_twist_matrix(tree, v, parity)
        cache[key] = t if e > 0 else integer_inverse(t)
    return cache[key]


def word_homology_action(tree: PlumbingTree, word: TwistWord, parity: str | None = None) -> IntegerMatrix:
    """Ordered product of the letters' twist matrices (inverses for ``-``)."""
    word.check(tree)
    cache: dict = {}
    m = _identity(len(tree.vertices))
    for v, e in word.letters:
        m = m.dot(_letter_matrix(tree, v, e, parity or tree.parity, cache))
    return m


def unsigned_transfer_matrix(tree: PlumbingTree, word: TwistWord, parity: str | None = None) -> IntegerMatrix:
    """Product over letters of the entry-wise absolute twist matrices.

    The word is cyclically reduced first: ``v+ v-`` cancels in the mapping
    class, but ``|T| |T^{-1}|`` is not the identity.
    """
    word.check(tree)
    word = word.cyclically_reduced()
    cache: dict = {}
    m = _identity(len(tree.vertices))
    for v, e in word.letters:
        m = m.dot(np.abs(_letter_matrix(tree, v, e, parity or tree.parity, cache)))
    return m


def int_det(m: np.ndarray) -> int:
    import sympy

    return int(sympy.Matrix(m.tolist()).det())


# -- spectral radius --------------------------------------------------------


def spectral_radius(m) -> float:
    """Largest eigenvalue modulus of a square matrix.

    Integer matrices of size <= 4 use the roots of the square-free part of the
    exact characteristic polynomial, so repeated eigenvalues stay accurate.
    Larger matrices use repeated squaring with renormalisation (Gelfand's
    formula), tracking only the log-norm.
    """
    a = np.asarray(m, dtype=object)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("spectral radius needs a square matrix")
    n = a.shape[0]
    if n == 0:
        return 0.0
    if n <= 4 and all(float(x).is_integer() for x in a.flat):
        return _charpoly_radius(a)
    return _gelfand_radius(np.array(a, dtype=float))


def _charpoly_radius(a: np.ndarray) -> float:
    import sympy

    x = sympy.Symbol("x")
    p = sympy.Matrix([[int(v) for v in row] for row in a.tolist()]).charpoly(x).as_expr()
    sf = sympy.Poly(sympy.sqf_part(p), x)
    if sf.degree() == 0:
        return 0.0
    roots = sf.nroots(n=30)
    return float(max(abs(complex(r)) for r in roots))


def _gelfand_radius(a: np.ndarray, squarings: int = 60) -> float:
    scale = np.abs(a).max()
    if scale == 0:
        return 0.0
    b = a / scale
    log_acc = math.log(scale)
    power = 1
    for _ in range(squarings):
        b = b @ b
        s = np.abs(b).max()
        if s == 0:
            return 0.0
        b /= s
        power *= 2
        log_acc = 2 * log_acc + math.log(s)
    return math.exp(log_acc / power)


# -- entropy models ---------------------------------------------------------


def _l1_growth(m: np.ndarray, v: np.ndarray, n_max: int) -> list[int]:
    out, cur = [], v.copy()
    for _ in range(n_max + 1):
        out.append(int(sum(abs(int(x)) for x in cur)))
        cur = m.dot(cur)
    return out


def _column_sum_growth(m: np.ndarray, n_max: int) -> list[int]:
    out, cur = [], _identity(m.shape[0])
    for _ in range(n_max + 1):
        out.append(int(sum(abs(int(x)) for x in cur.flat)))
        cur = m.dot(cur)
    return out


def _finish(counts: list[int], m: np.ndarray, **diag) -> EntropyEstimate:
    est = growth_rate_fit(enumerate(counts))
    rho = spectral_radius(m)
    diag.update(est.diagnostics, counts=counts, perron_root=rho, raw_slope=est.value)
    # A non-negative integer matrix has Perron root 0 or >= 1; a root of 1 means
    # polynomial growth, whose finite-window log slope is only a transient.
    if abs(rho - 1.0) < 1e-6 or rho == 0.0:
        return EntropyEstimate(0.0, 1.0, est.fit_window, est.residual, diag | {"polynomial": True})
    return EntropyEstimate(est.value, est.growth_factor, est.fit_window, est.residual, diag)


def _check_n(n_max: int) -> None:
    if n_max < 4:
        raise ValueError("n_max must be at least 4")


def hom_growth_entropy(tree: PlumbingTree, word: TwistWord, n_max: int = 30,
                       parity: str | None = None) -> EntropyEstimate:
    """Growth of ``|M^n 1|_1`` for the unsigned transfer matrix ``M``."""
    _check_n(n_max)
    m = unsigned_transfer_matrix(tree, word, parity)
    ones = np.array([1] * m.shape[0], dtype=object)
    return _finish(_l1_growth(m, ones, n_max), m, model="hom_growth", word=str(word))


def compact_model_entropy(tree: PlumbingTree, word: TwistWord, n_max: int = 30,
                          parity: str | None = None) -> EntropyEstimate:
    """Growth of the total pairing of ``M^n``-images of spheres with dual cocores.

    The cocore basis is dual to the spheres (identity intersection matrix), so
    the pairing count is the entry sum of ``M^n``.
    """
    _check_n(n_max)
    m = unsigned_transfer_matrix(tree, word, parity)
    return _finish(_column_sum_growth(m, n_max), m, model="compact", word=str(word))


@dataclass(frozen=True)
class SpectralBoundReport:
    word: str
    rad: float
    log_rad: float
    h_cat_model: float
    tol: float

    @property
    def holds(self) -> bool:
        return self.log_rad <= self.h_cat_model + self.tol

    def __bool__(self):
        return self.holds


def spectral_lower_bound_check(tree: PlumbingTree, word: TwistWord, parity: str | None = None,
                               n_max: int = 30, tol: float = 1e-6) -> SpectralBoundReport:
    """Check ``log Rad(phi_*) <= h_cat`` for the Hom-growth model."""
    rad = spectral_radius(word_homology_action(tree, word, parity))
    h = hom_growth_entropy(tree, word, n_max, parity).value
    return SpectralBoundReport(str(word), rad, math.log(rad) if rad > 0 else -math.inf, h, tol)


def catent_report(tree: PlumbingTree, word: TwistWord, parity: str | None = None,
                  n_max: int = 30) -> dict:
    """JSON-ready summary with natural-log and base-2 values."""
    rad = spectral_radius(word_homology_action(tree, word, parity))
    log_rad = math.log(rad) if rad > 0 else -math.inf
    h = hom_growth_entropy(tree, word, n_max, parity)
    c = compact_model_entropy(tree, word, n_max, parity)
    return {
        "word": str(word),
        "rad": rad,
        "log_rad": log_rad,
        "h_cat_model": h.value,
        "h_compact_model": c.value,
        "growth_factor": h.growth_factor,
        "base2_values": {
            "log_rad": log_rad / math.log(2),
            "h_cat_model": h.value_base2,
            "h_compact_model": c.value_base2,
        },
    }


def parse_catent_config(text: str) -> tuple[PlumbingTree, TwistWord]:
    """Read ``tree: A2`` / ``parity: even`` / ``word: A+ B-`` lines."""
    fields = {}
    for ln in text.splitlines():
        ln = ln.split("#", 1)[0].strip()
        if ln:
            k, _, v = ln.partition(":")
            fields[k.strip()] = v.strip()
    parity = fields.get("parity", EVEN)
    tree = PlumbingTree.from_name(fields.get("tree", "A2"), parity)
    word = TwistWord.parse(fields.get("word", ""))
    word.check(tree)
    return tree, word


def random_word(rng, tree: PlumbingTree, max_len: int) -> TwistWord:
    n = int(rng.integers(0, max_len + 1))
    return TwistWord(tuple((tree.vertices[int(rng.integers(len(tree.vertices)))], int(rng.choice([-1, 1])))
                           for _ in range(n)))
