"""The boundary of a free group with its uniform harmonic measure.

The boundary of ``F_r`` is the space of infinite reduced words; the
harmonic measure ``m`` of the simple random walk gives every cylinder of
depth ``k`` the mass ``1 / (2r (2r-1)^{k-1})``.  Everything here is computed
on finite sigma-algebras of cylinders, so measures are exact rationals.

Conventions.  ``g`` acts on infinite words by left multiplication with free
reduction, and for ``|w| > |g|`` this maps ``cyl(w)`` onto ``cyl(g w)``.
The Radon-Nikodym cocycle is the density of the translated measure

    sigma(g, xi) = dm(g^-1 .) / dm (xi),  i.e.  sigma(g, cyl(w)) = m(g^-1 cyl(w)) / m(cyl(w)),

which equals ``(2r-1)^{-(|g| - 2 (g, xi))}`` and satisfies
``sigma(g1 g2, xi) = sigma(g1, xi) sigma(g2, g1^-1 xi)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Iterable

import numpy as np

from .errors import CapExceeded, DepthError, StructuralError
from .groups import FreeGroup
from .measures import FiniteMeasure

DEFAULT_DEPTH_CAP = 10


def cylinder_measure(rank: int, depth: int) -> Fraction:
    """Mass of any cylinder of the given depth."""
    if depth == 0:
        return Fraction(1)
    return Fraction(1, 2 * rank * (2 * rank - 1) ** (depth - 1))


@dataclass(frozen=True)
class Cylinder:
    """The set of boundary points whose reduced expansion starts with ``word``."""

    word: tuple
    rank: int = 2

    def __post_init__(self):
        FreeGroup(self.rank).check(self.word)

    @classmethod
    def parse(cls, text: str, rank: int = 2) -> "Cylinder":
        return cls(FreeGroup(rank).parse(text), rank)

    @property
    def depth(self) -> int:
        return len(self.word)

    def measure(self) -> Fraction:
        return cylinder_measure(self.rank, len(self.word))

    def contains(self, xi: tuple) -> bool:
        """Whether a (long enough) boundary prefix ``xi`` lies in the cylinder."""
        return tuple(xi[: len(self.word)]) == self.word

    def __str__(self):
        return FreeGroup(self.rank).format(self.word)


# --------------------------------------------------------------------------
# depth-k cylinder tables


class CylinderSpace:
    """The depth-``k`` cylinders of ``F_r``, indexed in lexicographic order.

    The children of a depth-``k`` cylinder form the contiguous block
    ``[i*(q-1), (i+1)*(q-1))`` at depth ``k+1`` (``q = 2r``), so conditional
    expectation is a reshape-mean and refinement is a repeat.
    """

    def __init__(self, rank: int, depth: int, cap: int = DEFAULT_DEPTH_CAP):
        if depth < 0:
            raise ValueError("depth must be nonnegative")
        if depth > cap:
            raise CapExceeded(f"depth {depth} exceeds cap {cap}")
        self.rank = rank
        self.depth = depth
        self.group = FreeGroup(rank)
        self._words = None

    @property
    def q(self) -> int:
        return 2 * self.rank

    @property
    def size(self) -> int:
        return 1 if self.depth == 0 else self.group.sphere_size(self.depth)

    def __len__(self):
        return self.size

    @property
    def words(self) -> list:
        if self._words is None:
            self._words = self.group.sphere(self.depth)
        return self._words

    def index(self, w: tuple) -> int:
        """Position of the depth-``k`` cylinder containing ``w`` (``len(w) >= k``)."""
        if len(w) < self.depth:
            raise DepthError(f"word of length {len(w)} does not determine a depth-{self.depth} cylinder")
        return word_index(w[: self.depth], self.rank)

    def cylinder_measure(self) -> Fraction:
        return cylinder_measure(self.rank, self.depth)

    def block(self, depth: int) -> int:
        """Number of depth-``self.depth`` cylinders inside one depth-``depth`` cylinder."""
        if depth > self.depth:
            raise DepthError("block depth exceeds space depth")
        if depth == self.depth:
            return 1
        if depth == 0:
            return self.size
        return (self.q - 1) ** (self.depth - depth)

    def __eq__(self, other):
        return isinstance(other, CylinderSpace) and (other.rank, other.depth) == (self.rank, self.depth)

    def __hash__(self):
        return hash((self.rank, self.depth))

    def __repr__(self):
        return f"CylinderSpace(rank={self.rank}, depth={self.depth})"


def word_index(w: tuple, rank: int) -> int:
    """Lexicographic rank of a reduced word among the words of its length."""
    if not w:
        return 0
    q = 2 * rank

    def key(x):
        return 2 * (abs(x) - 1) + (x < 0)

    idx = key(w[0])
    for prev, x in zip(w, w[1:]):
        k = key(x)
        # skip the slot of the forbidden letter -prev
        if k > key(-prev):
            k -= 1
        idx = idx * (q - 1) + k
    return idx


class CylinderFunction:
    """A step function constant on the depth-``k`` cylinders.

    ``values`` is a numpy array (float64, or object dtype holding Fractions
    for exact work) in the order of :attr:`CylinderSpace.words`.
    """

    __slots__ = ("space", "values")

    def __init__(self, space: CylinderSpace, values):
        arr = np.asarray(values)
        if arr.shape != (space.size,):
            raise ValueError(f"expected {space.size} values, got shape {arr.shape}")
        self.space = space
        self.values = arr

    @classmethod
    def from_callable(cls, rank: int, depth: int, f: Callable, exact: bool = False) -> "CylinderFunction":
        sp = CylinderSpace(rank, depth)
        vals = [f(w) for w in sp.words] if depth else [f(())]
        return cls(sp, np.array(vals, dtype=object if exact else float))

    @classmethod
    def indicator(cls, cyl: Cylinder, depth: int | None = None, exact: bool = True) -> "CylinderFunction":
        depth = cyl.depth if depth is None else depth
        if depth < cyl.depth:
            raise DepthError("indicator needs depth at least the cylinder depth")
        one, zero = (Fraction(1), Fraction(0)) if exact else (1.0, 0.0)
        return cls.from_callable(cyl.rank, depth, lambda w: one if cyl.contains(w) else zero, exact=exact)

    @classmethod
    def constant(cls, rank: int, c, depth: int = 0) -> "CylinderFunction":
        sp = CylinderSpace(rank, depth)
        return cls(sp, np.full(sp.size, c, dtype=object if isinstance(c, Fraction) else float))

    @property
    def depth(self) -> int:
        return self.space.depth

    @property
    def rank(self) -> int:
        return self.space.rank

    @property
    def exact(self) -> bool:
        return self.values.dtype == object

    def __call__(self, xi: tuple):
        return self.values[self.space.index(xi)]

    def sup_norm(self):
        return max(abs(v) for v in self.values)

    def integral(self):
        """Integral against the harmonic measure (cylinders have equal mass)."""
        if self.exact:
            return sum(self.values, Fraction(0)) / len(self.values)
        return float(np.mean(self.values))

    def refine(self, depth: int) -> "CylinderFunction":
        if depth < self.depth:
            raise DepthError("cannot refine to a shallower depth")
        sp = CylinderSpace(self.rank, depth, cap=max(depth, DEFAULT_DEPTH_CAP))
        return CylinderFunction(sp, np.repeat(self.values, sp.block(self.depth)))

    def conditional_expectation(self, depth: int) -> "CylinderFunction":
        """Average over the depth-``depth`` cylinders."""
        if depth > self.depth:
            raise DepthError("conditional expectation onto a finer sigma-algebra")
        sp = CylinderSpace(self.rank, depth)
        blk = self.space.block(depth)
        v = self.values.reshape(sp.size, blk)
        if self.exact:
            vals = np.array([sum(row, Fraction(0)) / blk for row in v], dtype=object)
        else:
            vals = v.mean(axis=1)
        return CylinderFunction(sp, vals)

    def astype_float(self) -> "CylinderFunction":
        return CylinderFunction(self.space, self.values.astype(float))

    def _binary(self, other, op):
        if isinstance(other, CylinderFunction):
            if other.rank != self.rank:
                raise StructuralError("functions on different boundaries")
            d = max(self.depth, other.depth)
            a, b = self.refine(d), other.refine(d)
            return CylinderFunction(a.space, op(a.values, b.values))
        return CylinderFunction(self.space, op(self.values, other))

    def __add__(self, other):
        return self._binary(other, lambda x, y: x + y)

    def __sub__(self, other):
        return self._binary(other, lambda x, y: x - y)

    def __mul__(self, other):
        return self._binary(other, lambda x, y: x * y)

    __radd__ = __add__
    __rmul__ = __mul__

    def __neg__(self):
        return CylinderFunction(self.space, -self.values)

    def __eq__(self, other):
        if not isinstance(other, CylinderFunction) or other.rank != self.rank:
            return NotImplemented
        d = max(self.depth, other.depth)
        return bool(np.all(self.refine(d).values == other.refine(d).values))

    def __repr__(self):
        return f"CylinderFunction(rank={self.rank}, depth={self.depth})"


# --------------------------------------------------------------------------
# boundary sets and the action


@dataclass(frozen=True)
class BoundarySet:
    """A finite union of depth-``k`` cylinders."""

    rank: int
    depth: int
    words: frozenset

    def __init__(self, rank: int, depth: int, words: Iterable):
        G = FreeGroup(rank)
        ws = frozenset(G.check(tuple(w)) for w in words)
        if any(len(w) != depth for w in ws):
            raise DepthError(f"all cylinders must have depth {depth}")
        object.__setattr__(self, "rank", rank)
        object.__setattr__(self, "depth", depth)
        object.__setattr__(self, "words", ws)

    @classmethod
    def from_cylinders(cls, cylinders: Iterable, rank: int = 2, cap: int = DEFAULT_DEPTH_CAP) -> "BoundarySet":
        """Union of cylinders of possibly different depths (refined to the deepest)."""
        ws = [c.word if isinstance(c, Cylinder) else tuple(c) for c in cylinders]
        depth = max((len(w) for w in ws), default=0)
        if depth > cap:
            raise CapExceeded(f"depth {depth} exceeds cap {cap}")
        G = FreeGroup(rank)
        out = set()
        for w in ws:
            out.update(G.extensions(w, depth))
        return cls(rank, depth, out)

    @classmethod
    def whole(cls, rank: int = 2) -> "BoundarySet":
        return cls(rank, 0, [()])

    def measure(self) -> Fraction:
        return len(self.words) * cylinder_measure(self.rank, self.depth)

    def refine(self, depth: int, cap: int = DEFAULT_DEPTH_CAP) -> "BoundarySet":
        if depth < self.depth:
            raise DepthError("cannot refine to a shallower depth")
        if depth > cap:
            raise CapExceeded(f"depth {depth} exceeds cap {cap}")
        G = FreeGroup(self.rank)
        out = set()
        for w in self.words:
            out.update(G.extensions(w, depth))
        return BoundarySet(self.rank, depth, out)

    def coarsen(self) -> "BoundarySet":
        """The same set written at the smallest possible common depth."""
        merged = coarsen_cylinders(self.words, self.rank)
        depth = max((len(w) for w in merged), default=self.depth)
        G = FreeGroup(self.rank)
        return BoundarySet(self.rank, depth, [x for w in merged for x in G.extensions(w, depth)])

    def _align(self, other: "BoundarySet"):
        if other.rank != self.rank:
            raise StructuralError("boundary sets of different free groups")
        d = max(self.depth, other.depth)
        return self.refine(d, cap=d), other.refine(d, cap=d)

    def __or__(self, other):
        a, b = self._align(other)
        return BoundarySet(self.rank, a.depth, a.words | b.words)

    def __and__(self, other):
        a, b = self._align(other)
        return BoundarySet(self.rank, a.depth, a.words & b.words)

    def complement(self) -> "BoundarySet":
        allw = set(FreeGroup(self.rank).sphere(self.depth)) if self.depth else {()}
        return BoundarySet(self.rank, self.depth, allw - self.words)

    def same_set(self, other: "BoundarySet") -> bool:
        a, b = self._align(other)
        return a.words == b.words

    def __str__(self):
        G = FreeGroup(self.rank)
        return "{" + ", ".join(sorted(G.format(w) for w in self.words)) + "}"


def coarsen_cylinders(words: Iterable, rank: int) -> set:
    """Merge complete sibling families of disjoint cylinders, deepest first."""
    cur = set(words)
    if not cur:
        return cur
    q = 2 * rank
    for depth in range(max(len(w) for w in cur), 0, -1):
        groups: dict = {}
        for w in cur:
            if len(w) == depth:
                groups.setdefault(w[:-1], []).append(w)
        for parent, kids in groups.items():
            if len(kids) == (q if not parent else q - 1):
                cur.difference_update(kids)
                cur.add(parent)
    return cur


def image_cylinders(g, A: BoundarySet | Cylinder) -> list:
    """``g . A`` as a list of disjoint cylinders of varying depth."""
    if isinstance(A, Cylinder):
        A = BoundarySet(A.rank, A.depth, [A.word])
    G = FreeGroup(A.rank)
    g = G.element(g)
    if A.depth <= len(g):
        A = A.refine(len(g) + 1, cap=len(g) + 1)
    # |w| > |g|: cancellation stops inside w, so the image is cyl(g w)
    return [G._mul(g, w) for w in A.words]


def act(g, A: BoundarySet | Cylinder, cap: int = DEFAULT_DEPTH_CAP) -> BoundarySet:
    """The image ``g . A``, written at the coarsest common depth."""
    rank = A.rank
    merged = coarsen_cylinders(image_cylinders(g, A), rank)
    depth = max(len(w) for w in merged)
    if depth > cap:
        raise CapExceeded(f"image needs depth {depth} (cap {cap})")
    G = FreeGroup(rank)
    return BoundarySet(rank, depth, [x for w in merged for x in G.extensions(w, depth)])


def act_measure(g, A: BoundarySet | Cylinder) -> Fraction:
    """``m(g . A)`` without normalizing the image to a common depth."""
    return sum((cylinder_measure(A.rank, len(w)) for w in image_cylinders(g, A)), Fraction(0))


def image_measure(g, cyl: Cylinder) -> Fraction:
    """``m(g . cyl(w))`` for ``|w| > |g|``."""
    G = FreeGroup(cyl.rank)
    g = G.element(g)
    if cyl.depth <= len(g):
        raise DepthError(f"cylinder depth {cyl.depth} must exceed |g| = {len(g)}")
    return cylinder_measure(cyl.rank, len(G._mul(g, cyl.word)))


def rn_derivative(g, cyl: Cylinder) -> Fraction:
    """``sigma(g, cyl(w)) = m(g^-1 cyl(w)) / m(cyl(w))``, exactly."""
    G = FreeGroup(cyl.rank)
    g = G.element(g)
    return image_measure(G._inv(g), cyl) / cyl.measure()


def rn_closed_form(g, xi, rank: int = 2) -> Fraction:
    """``(2r-1)^{-(|g| - 2 (g, xi))}`` with ``(g, xi)`` the common prefix length."""
    G = FreeGroup(rank)
    g = G.element(g)
    xi = G.element(xi)
    if len(xi) <= len(g):
        raise DepthError("boundary prefix must be longer than g")
    c = G.common_prefix(g, xi)
    return Fraction(2 * rank - 1) ** (2 * c - len(g))


def rn_vector(g, depth: int, rank: int = 2) -> list:
    """``sigma(g, .)`` on all depth-``depth`` cylinders, in lexicographic order."""
    G = FreeGroup(rank)
    g = G.element(g)
    if depth <= len(g):
        raise DepthError(f"depth {depth} must exceed |g| = {len(g)}")
    ginv = G._inv(g)
    b = 2 * rank - 1
    return [Fraction(b) ** (depth - len(G._mul(ginv, w))) for w in G.sphere(depth)]


def cocycle_identity_check(g1, g2, depth: int, rank: int = 2) -> bool:
    """``sigma(g1 g2, xi) == sigma(g1, xi) sigma(g2, g1^-1 xi)`` on every depth-``k`` cylinder."""
    G = FreeGroup(rank)
    g1, g2 = G.element(g1), G.element(g2)
    if depth <= len(g1) + len(g2):
        raise DepthError("depth must exceed |g1| + |g2|")
    g12 = G._mul(g1, g2)
    g1inv = G._inv(g1)
    for w in G.sphere(depth):
        lhs = rn_derivative(g12, Cylinder(w, rank))
        moved = Cylinder(G._mul(g1inv, w), rank)
        rhs = rn_derivative(g1, Cylinder(w, rank)) * rn_derivative(g2, moved)
        if lhs != rhs:
            return False
    return True


@dataclass
class HarmonicityReport:
    n: int
    depth: int
    holds: bool
    worst: Fraction  # max |integral - 1| over cylinders

    def __bool__(self):
        return self.holds


def harmonicity_check(n: int, depth: int, rank: int = 2, mu: FiniteMeasure | None = None) -> HarmonicityReport:
    """``int sigma(g, xi) dmu^{*n}(g) = 1`` exactly on all depth-``k`` cylinders."""
    G = FreeGroup(rank)
    mu = FiniteMeasure.simple_random_walk(G) if mu is None else mu
    if mu.group != G:
        raise StructuralError("measure lives on a different group")
    mun = mu.power(n)
    if depth <= mun.max_radius():
        raise DepthError(f"depth {depth} must exceed the support radius {mun.max_radius()}")
    words = G.sphere(depth)
    total = [Fraction(0)] * len(words)
    for g, w in mun.items():
        for i, v in enumerate(rn_vector(g, depth, rank)):
            total[i] += w * v
    worst = max(abs(t - 1) for t in total)
    return HarmonicityReport(n, depth, worst == 0, worst)


def rn_sup(g, rank: int = 2) -> Fraction:
    """``||sigma(g, .)||_inf``."""
    return max(rn_vector(g, len(FreeGroup(rank).element(g)) + 1, rank))


def canonical_semimetric(g, rank: int = 2) -> float:
    """``rho(g) = max_xi |log sigma(g, xi)|``, evaluated on the depth ``|g|+1`` cylinders."""
    G = FreeGroup(rank)
    g = G.element(g)
    vals = rn_vector(g, len(g) + 1, rank)
    return max(abs(math.log(v.numerator) - math.log(v.denominator)) for v in vals)


# --------------------------------------------------------------------------
# Poisson transform


def poisson_transform(phi: CylinderFunction, g):
    """``P phi(g) = int phi(g^-1 xi) dm(xi) = sum_C phi(C) m(g . C)``."""
    G = FreeGroup(phi.rank)
    g = G.element(g)
    if phi.depth <= len(g):
        phi = phi.refine(len(g) + 1)
    r = phi.rank
    zero = Fraction(0) if phi.exact else 0.0
    acc = zero
    words = phi.space.words if phi.depth else [()]
    if phi.depth == 0:
        return phi.values[0]
    for w, v in zip(words, phi.values):
        if v:
            m = cylinder_measure(r, len(G._mul(g, w)))
            acc += v * (m if phi.exact else float(m))
    return acc


def poisson_harmonicity_check(phi: CylinderFunction, radius: int, mu: FiniteMeasure | None = None) -> Fraction:
    """Largest ``|sum_s mu(s) P phi(s^-1 g) - P phi(g)|`` over ``g`` in ``B_radius``."""
    G = FreeGroup(phi.rank)
    mu = FiniteMeasure.simple_random_walk(G) if mu is None else mu
    cache: dict = {}

    def P(x):
        if x not in cache:
            cache[x] = poisson_transform(phi, x)
        return cache[x]

    worst = Fraction(0) if phi.exact else 0.0
    for g in G.ball(radius):
        avg = sum(w * P(G._mul(G._inv(s), g)) for s, w in (mu.items() if phi.exact else mu.float_items()))
        worst = max(worst, abs(avg - P(g)))
    return worst


@dataclass
class SatCertificate:
    element: tuple
    measure: Fraction
    bound: Fraction

    @property
    def holds(self) -> bool:
        return self.measure >= self.bound


def sat_certificate(cyl: Cylinder, n: int) -> SatCertificate:
    """An element ``g`` with ``m(g . cyl(w)) >= 1 - (1/2r)(1/(2r-1))^{n-1}``.

    ``w^-1`` maps ``cyl(w)`` onto the complement of ``cyl(x)``, ``x`` the
    inverse of the last letter of ``w``; then ``s^n`` with ``s`` different
    from the last letter of ``w`` pushes ``cyl(x)`` into ``cyl(s^n x)``.
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    r = cyl.rank
    G = FreeGroup(r)
    w = cyl.word
    if not w:
        return SatCertificate((), Fraction(1), Fraction(1))
    s = next(x for x in G.letters if x != w[-1])
    g = G._mul((s,) * n, G._inv(w))
    measure = act_measure(g, cyl)
    bound = 1 - Fraction(1, 2 * r) * Fraction(1, 2 * r - 1) ** (n - 1) if n >= 1 else 1 - Fraction(2 * r - 1, 2 * r)
    return SatCertificate(g, measure, bound)


# --------------------------------------------------------------------------
# span of the cocycle


def bareiss_rank(rows: list) -> int:
    """Rank of an integer matrix by fraction-free Gaussian elimination."""
    M = [list(r) for r in rows]
    if not M:
        return 0
    nrows, ncols = len(M), len(M[0])
    rank = 0
    prev = 1
    for col in range(ncols):
        piv = next((i for i in range(rank, nrows) if M[i][col] != 0), None)
        if piv is None:
            continue
        M[rank], M[piv] = M[piv], M[rank]
        p = M[rank][col]
        for i in range(rank + 1, nrows):
            a = M[i][col]
            M[i] = [(p * M[i][j] - a * M[rank][j]) // prev for j in range(ncols)]
        prev = p
        rank += 1
        if rank == nrows:
            break
    return rank


@dataclass
class SpanRank:
    radius: int
    depth: int
    rank: int
    dimension: int


@lru_cache(maxsize=64)
def rn_span_rank(radius: int, depth: int, rank: int = 2) -> SpanRank:
    """Rank of ``{sigma(g, .) : g in B_R}`` as vectors over the depth-``k`` cylinders.

    ``sigma(g, .)`` only depends on the first ``|g|`` letters, so columns are
    repeated ``(2r-1)^{k-R}`` times beyond depth ``R``; dropping duplicate
    columns leaves the rank unchanged.
    """
    if depth <= radius:
        raise DepthError("depth must exceed the radius")
    G = FreeGroup(rank)
    dim = G.sphere_size(depth)
    eff = max(radius, 1)
    scale = (2 * rank - 1) ** radius
    rows = []
    for g in G.ball(radius):
        vec = rn_vector(g, eff + 1, rank)
        # one column per depth-eff cylinder: first child of each block
        col = vec[:: 2 * rank - 1] if eff + 1 > 1 else vec
        rows.append([int(v * scale) for v in col])
    return SpanRank(radius, depth, bareiss_rank(rows), dim)


__all__ = [
    "BoundarySet",
    "Cylinder",
    "CylinderFunction",
    "CylinderSpace",
    "HarmonicityReport",
    "SatCertificate",
    "SpanRank",
    "act",
    "act_measure",
    "coarsen_cylinders",
    "image_cylinders",
    "bareiss_rank",
    "canonical_semimetric",
    "cocycle_identity_check",
    "cylinder_measure",
    "harmonicity_check",
    "image_measure",
    "poisson_harmonicity_check",
    "poisson_transform",
    "rn_closed_form",
    "rn_derivative",
    "rn_span_rank",
    "rn_sup",
    "rn_vector",
    "sat_certificate",
    "word_index",
]
