"""Product sets in free groups at finite window size.

Sets are described by small immutable specs with a ``contains`` test that
never looks outside the ball containing the element.  Everything here works
inside a window ``B_K``: densities are exact sphere counts, difference sets
are truncated to the window and thickness can only be certified, never
refuted.
"""

from __future__ import annotations

import hashlib
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable, Iterable, Sequence

from .errors import ParseError, Status
from .groups import ALPHABET, FreeGroup, Group
from .measures import FiniteMeasure

_FORMATTER = FreeGroup(len(ALPHABET))


def _length(g) -> int:
    return abs(g) if isinstance(g, int) else len(g)


# --- set specs ---------------------------------------------------------------


class SetSpec:
    """A subset of a free group (or of Z) with decidable membership."""

    #: membership depends on word length only
    radial = False

    def contains(self, g) -> bool:
        raise NotImplementedError

    def __contains__(self, g) -> bool:
        return self.contains(g)

    def text(self) -> str:
        raise NotImplementedError

    def by_length(self, n: int) -> bool:
        """Membership of every word of length ``n`` (radial specs only)."""
        raise TypeError(f"{self.text()} is not radial")

    def sphere_count(self, group: FreeGroup, n: int) -> int:
        """``|A ∩ S_n|`` in ``group``; enumerates the sphere unless a closed form exists."""
        if self.radial:
            return group.sphere_size(n) if self.by_length(n) else 0
        return sum(1 for g in group.sphere(n) if self.contains(g))


@dataclass(frozen=True)
class Everything(SetSpec):
    radial = True

    def contains(self, g) -> bool:
        return True

    def by_length(self, n: int) -> bool:
        return True

    def text(self) -> str:
        return "all"


@dataclass(frozen=True)
class Parity(SetSpec):
    """Elements whose word length is even (``even=True``) or odd."""

    even: bool = True
    radial = True

    def contains(self, g) -> bool:
        return self.by_length(_length(g))

    def by_length(self, n: int) -> bool:
        return (n % 2 == 0) == self.even

    def text(self) -> str:
        return "parity:" + ("even" if self.even else "odd")


@dataclass(frozen=True)
class AnnulusUnion(SetSpec):
    """Union of annuli ``B_b \\ B_a`` for the intervals ``(a, b)``: radii ``a < n <= b``."""

    intervals: tuple[tuple[int, int], ...]
    radial = True

    def __post_init__(self):
        for a, b in self.intervals:
            if not 0 <= a < b:
                raise ValueError(f"bad annulus {a}-{b}")

    @classmethod
    def sparse(cls, radii: Iterable[int]) -> "AnnulusUnion":
        """``⋃ B_{r+1} \\ B_r``: the union of the spheres of radius ``r+1``."""
        return cls(tuple((r, r + 1) for r in radii))

    def contains(self, g) -> bool:
        return self.by_length(_length(g))

    def by_length(self, n: int) -> bool:
        return any(a < n <= b for a, b in self.intervals)

    def text(self) -> str:
        return "annuli:" + ",".join(f"{a}-{b}" for a, b in self.intervals)


@dataclass(frozen=True)
class Ball(SetSpec):
    radius: int
    radial = True

    def contains(self, g) -> bool:
        return _length(g) <= self.radius

    def by_length(self, n: int) -> bool:
        return n <= self.radius

    def text(self) -> str:
        return f"ball:{self.radius}"


@dataclass(frozen=True)
class PrefixCone(SetSpec):
    """Reduced words beginning with ``word``."""

    word: tuple

    def contains(self, g) -> bool:
        return tuple(g[: len(self.word)]) == self.word

    def sphere_count(self, group: FreeGroup, n: int) -> int:
        k = len(self.word)
        if n < k:
            return 0
        if k == 0:
            return group.sphere_size(n)
        return (2 * group.rank - 1) ** (n - k)

    def text(self) -> str:
        return "cone:" + _FORMATTER.format(self.word)


@dataclass(frozen=True)
class Explicit(SetSpec):
    """A finite set of elements; ``note`` records how it was produced."""

    elements: frozenset
    group: Group = field(default_factory=lambda: FreeGroup(2), compare=False)
    note: str = field(default="", compare=False)

    def contains(self, g) -> bool:
        return g in self.elements

    def sphere_count(self, group: FreeGroup, n: int) -> int:
        return sum(1 for g in self.elements if len(g) == n)

    def sorted(self) -> list:
        return sorted(self.elements, key=lambda g: (self.group.length(g), g))

    def text(self) -> str:
        return "explicit:" + ",".join(self.group.format(g) for g in self.sorted())


@dataclass(frozen=True)
class RandomDensity(SetSpec):
    """Each element is kept independently with probability ``p``.

    Membership is a hash of ``(seed, element)`` so it needs no state and no
    enumeration.
    """

    p: Fraction
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "p", Fraction(self.p).limit_denominator(10**9))
        if not 0 <= self.p <= 1:
            raise ValueError("p must lie in [0, 1]")

    def contains(self, g) -> bool:
        key = f"{self.seed}:{','.join(map(str, g))}".encode()
        u = int.from_bytes(hashlib.blake2b(key, digest_size=8).digest(), "big")
        return u * self.p.denominator < self.p.numerator << 64

    def text(self) -> str:
        return f"random:{self.p}:{self.seed}"


@dataclass(frozen=True)
class PeriodicZ(SetSpec):
    """The subset ``residues + period·Z`` of the integers."""

    period: int
    residues: frozenset

    def __post_init__(self):
        if self.period < 1:
            raise ValueError("period must be positive")
        object.__setattr__(self, "residues", frozenset(r % self.period for r in self.residues))

    @classmethod
    def multiples(cls, k: int) -> "PeriodicZ":
        return cls(k, frozenset({0}))

    def contains(self, g) -> bool:
        x = g if isinstance(g, int) else g[0]
        return x % self.period in self.residues

    def differences(self) -> "PeriodicZ":
        """``A - A``, periodic with the same period."""
        return PeriodicZ(self.period, frozenset(r - s for r in self.residues for s in self.residues))

    def text(self) -> str:
        return f"periodic:{self.period}:" + ",".join(str(r) for r in sorted(self.residues))


@dataclass(frozen=True)
class Complement(SetSpec):
    inner: SetSpec

    @property
    def radial(self):
        return self.inner.radial

    def contains(self, g) -> bool:
        return not self.inner.contains(g)

    def by_length(self, n: int) -> bool:
        return not self.inner.by_length(n)

    def sphere_count(self, group: FreeGroup, n: int) -> int:
        return group.sphere_size(n) - self.inner.sphere_count(group, n)

    def text(self) -> str:
        return "not:" + self.inner.text()


@dataclass(frozen=True)
class ProductSet(SetSpec):
    """``F·S = {f s : f ∈ F, s ∈ S}`` for a finite ``F``."""

    group: Group
    left: tuple
    inner: SetSpec

    def contains(self, g) -> bool:
        G = self.group
        return any(self.inner.contains(G._mul(G._inv(f), g)) for f in self.left)

    def text(self) -> str:
        return "product:" + ",".join(self.group.format(f) for f in self.left) + "|" + self.inner.text()


def parse_setspec(text: str, group: Group | None = None) -> SetSpec:
    """Decode the textual set syntax.

    ``all``, ``parity:even``, ``annuli:2-3,8-9``, ``ball:3``, ``cone:ab``,
    ``random:0.3:seed``, ``explicit:a,bA`` or ``explicit:@file``,
    ``periodic:6:0,2``, ``not:<spec>``, ``product:e,a|<spec>`` and
    ``diff:K|<spec>`` (the difference set in the window ``B_K``).
    """
    group = group or FreeGroup(2)
    s = text.strip()
    kind, _, rest = s.partition(":")
    kind = kind.lower()
    try:
        if kind == "all":
            return Everything()
        if kind == "parity":
            if rest not in ("even", "odd"):
                raise ParseError(f"parity must be even or odd, got {rest!r}")
            return Parity(rest == "even")
        if kind == "annuli":
            pairs = []
            for part in rest.split(","):
                a, _, b = part.partition("-")
                pairs.append((int(a), int(b)))
            return AnnulusUnion(tuple(pairs))
        if kind == "ball":
            return Ball(int(rest))
        if kind == "cone":
            return PrefixCone(group.parse(rest))
        if kind == "random":
            p, _, seed = rest.partition(":")
            return RandomDensity(Fraction(p), int(seed or 0))
        if kind == "explicit":
            if rest.startswith("@"):
                lines = Path(rest[1:]).read_text().splitlines()
                items = [ln.split("#", 1)[0].strip() for ln in lines]
            else:
                items = rest.split(",")
            return Explicit(frozenset(group.parse(x) for x in items if x.strip()), group)
        if kind == "periodic":
            p, _, res = rest.partition(":")
            return PeriodicZ(int(p), frozenset(int(r) for r in res.split(",") if r))
        if kind == "not":
            return Complement(parse_setspec(rest, group))
        if kind in ("product", "diff"):
            head, sep, inner = rest.partition("|")
            if not sep:
                raise ParseError(f"{kind} needs '|' before the inner set")
            inner_spec = parse_setspec(inner, group)
            if kind == "diff":
                return difference_set(inner_spec, int(head), group)
            left = tuple(group.parse(x) for x in head.split(","))
            return ProductSet(group, left, inner_spec)
    except (ValueError, OSError) as exc:
        if isinstance(exc, ParseError):
            raise
        raise ParseError(f"cannot parse set {text!r}: {exc}") from exc
    raise ParseError(f"unknown set kind {kind!r} in {text!r}")


# --- densities -----------------------------------------------------------------


@dataclass
class SphereDensity:
    """Exact ``|A ∩ S_n| / |S_n|`` for ``n = 0..m`` with Cesàro and ball averages."""

    counts: list
    sizes: list

    @property
    def m(self) -> int:
        return len(self.counts) - 1

    @property
    def densities(self) -> list:
        return [Fraction(c, s) for c, s in zip(self.counts, self.sizes)]

    @property
    def cesaro(self) -> Fraction:
        """``(1/m) Σ_{n=1}^m |A ∩ S_n| / |S_n|``."""
        if self.m == 0:
            return Fraction(0)
        return sum(self.densities[1:], Fraction(0)) / self.m

    def cesaro_sequence(self) -> list:
        out, acc = [], Fraction(0)
        for n, d in enumerate(self.densities[1:], start=1):
            acc += d
            out.append(acc / n)
        return out

    def ball_densities(self) -> list:
        """``|A ∩ B_n| / |B_n|``."""
        out, c, s = [], 0, 0
        for cn, sn in zip(self.counts, self.sizes):
            c += cn
            s += sn
            out.append(Fraction(c, s))
        return out

    def rows(self):
        ball = self.ball_densities()
        for n, (c, s) in enumerate(zip(self.counts, self.sizes)):
            yield n, c, s, Fraction(c, s), ball[n]


def sphere_density(A: SetSpec, m: int, group: FreeGroup | None = None) -> SphereDensity:
    """Exact sphere densities of ``A`` up to radius ``m``.

    Radial sets and cones use closed-form counts; other sets enumerate the
    spheres and raise :class:`CapExceeded` past the group's enumeration cap.
    """
    group = group or FreeGroup(2)
    if m < 0:
        raise ValueError("m must be nonnegative")
    counts = [A.sphere_count(group, n) for n in range(m + 1)]
    sizes = [group.sphere_size(n) for n in range(m + 1)]
    return SphereDensity(counts, sizes)


# --- sphere recursion -------------------------------------------------------------


def sphere_recursion_rhs(group: FreeGroup, n: int) -> FiniteMeasure:
    """``(q/(q+1))·σ_{n+1} + (1/(q+1))·σ_{n-1}`` with ``q = 2r - 1``."""
    q = 2 * group.rank - 1
    w: dict = {}
    up = Fraction(q, q + 1) / group.sphere_size(n + 1)
    for g in group.sphere(n + 1):
        w[g] = up
    down = Fraction(1, q + 1) / group.sphere_size(n - 1)
    for g in group.sphere(n - 1):
        w[g] = down
    return FiniteMeasure(group, w)


def recursion_check(n: int, group: FreeGroup | None = None) -> bool:
    """True iff ``σ_n * σ_1`` equals the recursion mixture atom by atom."""
    group = group or FreeGroup(2)
    if n < 1:
        raise ValueError("n must be at least 1")
    G = group
    lhs = FiniteMeasure.sphere_average(G, n).convolve(FiniteMeasure.sphere_average(G, 1))
    return lhs == sphere_recursion_rhs(G, n)


# --- difference sets ----------------------------------------------------------------


def _length_difference_possible(n: int, i: int, j: int, rank: int) -> bool:
    """Is there ``h`` with ``|h| = i`` and ``|x h| = j`` for some (any) ``|x| = n``?"""
    lo, hi = abs(n - i), n + i
    if not lo <= j <= hi or (j - lo) % 2:
        return False
    if rank == 1:
        return j in (lo, hi)
    return True


def difference_set(A: SetSpec, K: int, group: FreeGroup | None = None) -> Explicit:
    """``{g h^{-1} : g, h ∈ A ∩ B_K} ∩ B_K`` as an explicit set.

    Products that leave ``B_K`` are dropped; the returned ``note`` says so.
    Radial sets are decided from word lengths alone, which is exact since
    every cancellation pattern is realised in rank at least 2.
    """
    group = group or FreeGroup(2)
    ball = group.ball(K)
    if A.radial and isinstance(group, FreeGroup):
        lengths = [n for n in range(K + 1) if A.by_length(n)]
        ok = {
            n
            for n in range(K + 1)
            if any(_length_difference_possible(n, i, j, group.rank) for i in lengths for j in lengths)
        }
        members = frozenset(x for x in ball if len(x) in ok)
    else:
        inside = [g for g in ball if A.contains(g)]
        inside_set = set(inside)
        mul = group._mul
        found = set()
        for x in ball:
            # x = g h^{-1}  <=>  x h ∈ A for some h ∈ A
            if any(mul(x, h) in inside_set for h in inside):
                found.add(x)
        members = frozenset(found)
    note = f"window B_{K}: differences of length > {K} are discarded"
    return Explicit(members, group, note)


# --- thickness -------------------------------------------------------------------------


@dataclass
class ThicknessReport:
    """Largest ``k* <= k`` with ``B_{k*}·g ⊆ T`` for some ``g ∈ B_{K-k*}``."""

    target: int
    window: int
    certified_radius: int
    witnesses: dict
    status: Status

    def rows(self):
        for k in range(self.target + 1):
            yield k, self.witnesses.get(k)


def thickness_certificate(T: SetSpec, k: int, K: int, group: FreeGroup | None = None) -> ThicknessReport:
    """Search right translates of balls inside ``T`` within the window ``B_K``.

    Candidates ``g`` are scanned in shortlex order and the first hit is kept.
    A ball ``B_j`` that fits nowhere in the window makes every larger ball
    fail too, so the search stops there with status inconclusive.
    """
    group = group or FreeGroup(2)
    if not 0 <= k < K:
        raise ValueError("need 0 <= k < K")
    mul = group._mul
    witnesses: dict = {}
    best = -1
    for j in range(k + 1):
        ball = group.ball(j)
        hit = None
        for g in group.ball(K - j):
            if all(T.contains(mul(x, g)) for x in ball):
                hit = g
                break
        if hit is None:
            break
        witnesses[j] = hit
        best = j
    status = Status.TRUE if best == k else Status.INCONCLUSIVE
    return ThicknessReport(k, K, best, witnesses, status)


# --- integers -------------------------------------------------------------------------


@dataclass
class FolnerReport:
    """A finite ``F`` with ``F + ⋂(A_i - A_i) = Z``, checked over one period."""

    F: tuple
    period: int
    differences: frozenset
    verified: bool
    status: Status


def folner_khintchine_Z(sets: Sequence[PeriodicZ], bound: int) -> FolnerReport:
    """Smallest ``F ⊆ [-bound, bound]`` covering Z by translates of ``⋂(A_i - A_i)``.

    Sizes are tried upward from the counting lower bound, candidates ordered
    ``0, 1, ..., bound, -1, ..., -bound`` so ties go to the lexicographically
    first subset in that order.
    """
    if not sets:
        raise ValueError("need at least one set")
    for A in sets:
        if not isinstance(A, PeriodicZ):
            raise TypeError("folner_khintchine_Z needs periodic sets")
        if not A.residues:
            raise ValueError(f"{A.text()} is empty, so it has zero density")
    L = math.lcm(*(A.period for A in sets))
    D = frozenset(
        r for r in range(L) if all(r % A.period in A.differences().residues for A in sets)
    )
    candidates = list(range(0, bound + 1)) + list(range(-1, -bound - 1, -1))

    def covers(F) -> bool:
        return len({(f + d) % L for f in F for d in D}) == L

    lower = -(-L // len(D))
    for size in range(lower, len(candidates) + 1):
        for F in itertools.combinations(candidates, size):
            if covers(F):
                return FolnerReport(tuple(sorted(F)), L, D, _verify_cover(F, D, L), Status.TRUE)
    return FolnerReport((), L, D, False, Status.INCONCLUSIVE)


def _verify_cover(F, D, L) -> bool:
    """Independent check: every ``z`` in one period is ``f + d`` with ``d ≡`` a residue of ``D``."""
    return all(any((z - f) % L in D for f in F) for z in range(L))


# --- Cesàro means -------------------------------------------------------------------------


@dataclass(frozen=True)
class RadialFunction:
    """A function on a free group depending only on word length."""

    f: Callable[[int], Fraction]

    def __call__(self, g) -> Fraction:
        return self.f(len(g))


@dataclass
class CesaroHarmonicity:
    m: int
    mean: Fraction
    averaged: Fraction
    sup_norm: Fraction
    closed_form: Fraction | None = None

    @property
    def defect(self) -> Fraction:
        return abs(self.mean - self.averaged)

    @property
    def bound(self) -> Fraction:
        """``2‖φ‖_∞ / m``, from telescoping the sphere recursion."""
        return 2 * self.sup_norm / self.m

    @property
    def holds(self) -> bool:
        return self.defect <= self.bound


def _as_radial(phi) -> Callable[[int], Fraction] | None:
    if isinstance(phi, RadialFunction):
        return lambda n: Fraction(phi.f(n))
    if isinstance(phi, SetSpec) and phi.radial:
        return lambda n: Fraction(int(phi.by_length(n)))
    if isinstance(phi, (int, Fraction)):
        return lambda n: Fraction(phi)
    return None


def cesaro_mean_harmonicity(phi, m: int, group: FreeGroup | None = None) -> CesaroHarmonicity:
    """Compare ``λ_m(φ)`` with ``∫ λ_m(φ(g^{-1}·)) dσ_1(g)``.

    ``λ_m = (1/m) Σ_{n=1}^m σ_n``.  ``phi`` is a set spec (its indicator), a
    constant, a :class:`RadialFunction` or any callable on elements.  Radial
    inputs are summed by length (a word of length ``n >= 1`` keeps length
    ``n - 1`` after ``s^{-1}`` with probability ``1/2r``); other callables
    enumerate ``B_{m+1}`` exactly.
    """
    group = group or FreeGroup(2)
    if m < 1:
        raise ValueError("m must be at least 1")
    r = group.rank
    radial = _as_radial(phi)
    if radial is not None:
        vals = [radial(n) for n in range(m + 2)]
        mean = sum(vals[1 : m + 1], Fraction(0)) / m
        down = Fraction(1, 2 * r)
        averaged = sum((down * vals[n - 1] + (1 - down) * vals[n + 1] for n in range(1, m + 1)), Fraction(0)) / m
        sup = max(abs(v) for v in vals)
        q = Fraction(2 * r - 1, 2 * r)
        closed = abs(q * vals[1] + down * vals[m] - q * vals[m + 1] - down * vals[0]) / m
        return CesaroHarmonicity(m, mean, averaged, sup, closed)

    f = phi.contains if isinstance(phi, SetSpec) else phi
    cache: dict = {}

    def val(g):
        v = cache.get(g)
        if v is None:
            v = cache[g] = Fraction(f(g))
        return v

    mul, inv = group._mul, group._inv
    gens = group.generators
    mean = Fraction(0)
    averaged = Fraction(0)
    for n in range(1, m + 1):
        sphere = group.sphere(n)
        mean += sum((val(x) for x in sphere), Fraction(0)) / len(sphere)
        acc = Fraction(0)
        for s in gens:
            si = inv(s)
            acc += sum((val(mul(si, x)) for x in sphere), Fraction(0))
        averaged += acc / (len(gens) * len(sphere))
    sup = max(abs(val(g)) for g in group.ball(m + 1))
    return CesaroHarmonicity(m, mean / m, averaged / m, sup)


__all__ = [
    "SetSpec",
    "Everything",
    "Parity",
    "AnnulusUnion",
    "Ball",
    "PrefixCone",
    "Explicit",
    "RandomDensity",
    "PeriodicZ",
    "Complement",
    "ProductSet",
    "parse_setspec",
    "SphereDensity",
    "sphere_density",
    "sphere_recursion_rhs",
    "recursion_check",
    "difference_set",
    "ThicknessReport",
    "thickness_certificate",
    "FolnerReport",
    "folner_khintchine_Z",
    "RadialFunction",
    "CesaroHarmonicity",
    "cesaro_mean_harmonicity",
]
