"""Finitely supported measures with exact rational weights.

A :class:`FiniteMeasure` keeps integer numerators over one common
denominator, so convolution is integer multiply-add and the total mass stays
exactly 1.  Measures on a free group that are uniform on each sphere
("radial") also have a compact form, :class:`RadialMeasure`, which stores
only the mass per sphere.  Radial measures form a commutative algebra
generated by the sphere average ``sigma_1``; that is what makes drift and
entropy of the simple random walk cheap at large ``n``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce
from typing import Callable, Iterable, Iterator, Mapping

from .errors import CapExceeded, Status, StructuralError
from .groups import FreeGroup, Group, Lattice, WordMetric

DEFAULT_SUPPORT_CAP = 3_000_000


def _as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        raise TypeError("weights must be exact (int, Fraction or 'p/q' string), not float")
    return Fraction(x)


class FiniteMeasure:
    """A probability measure with finite support and rational weights."""

    __slots__ = ("group", "_num", "_den", "_cache")

    def __init__(self, group: Group, weights: Mapping, *, normalize: bool = False):
        self.group = group
        fr: dict[tuple, Fraction] = {}
        for g, w in weights.items():
            g = group.element(g)
            w = _as_fraction(w)
            if w < 0:
                raise ValueError(f"negative weight {w} at {group.format(g)}")
            if w:
                fr[g] = fr.get(g, Fraction(0)) + w
        total = sum(fr.values(), Fraction(0))
        if not fr:
            raise ValueError("empty measure")
        if total != 1:
            if not normalize:
                raise ValueError(f"weights sum to {total}, not 1")
            fr = {g: w / total for g, w in fr.items()}
        den = reduce(math.lcm, (w.denominator for w in fr.values()), 1)
        self._num = {g: w.numerator * (den // w.denominator) for g, w in fr.items()}
        self._den = den
        self._cache: dict = {}

    @classmethod
    def _raw(cls, group: Group, num: dict, den: int) -> "FiniteMeasure":
        """Build from integer numerators without validation; reduces the denominator."""
        obj = cls.__new__(cls)
        obj.group = group
        gcd = den
        for v in num.values():
            gcd = math.gcd(gcd, v)
            if gcd == 1:
                break
        if gcd > 1:
            num = {g: v // gcd for g, v in num.items()}
            den //= gcd
        obj._num = num
        obj._den = den
        obj._cache = {}
        return obj

    # --- constructors -----------------------------------------------------
    @classmethod
    def dirac(cls, group: Group, g=None) -> "FiniteMeasure":
        g = group.identity if g is None else group.element(g)
        return cls._raw(group, {g: 1}, 1)

    @classmethod
    def uniform(cls, group: Group, elements: Iterable) -> "FiniteMeasure":
        elems = [group.element(g) for g in elements]
        if len(set(elems)) != len(elems):
            raise ValueError("repeated element in uniform measure")
        return cls._raw(group, {g: 1 for g in elems}, len(elems))

    @classmethod
    def simple_random_walk(cls, group: Group) -> "FiniteMeasure":
        return cls.uniform(group, group.generators)

    @classmethod
    def sphere_average(cls, group: Group, n: int) -> "FiniteMeasure":
        return cls.uniform(group, group.sphere(n))

    # --- access -----------------------------------------------------------
    @property
    def denominator(self) -> int:
        return self._den

    def numerators(self) -> dict:
        return dict(self._num)

    def __getitem__(self, g) -> Fraction:
        return Fraction(self._num.get(self.group.element(g), 0), self._den)

    def weight(self, g) -> Fraction:
        return self[g]

    def items(self) -> Iterator[tuple[tuple, Fraction]]:
        d = self._den
        for g, v in self._num.items():
            yield g, Fraction(v, d)

    def float_items(self) -> Iterator[tuple[tuple, float]]:
        d = self._den
        for g, v in self._num.items():
            yield g, v / d

    @property
    def support(self) -> frozenset:
        return frozenset(self._num)

    def __len__(self):
        return len(self._num)

    def total(self) -> Fraction:
        return Fraction(sum(self._num.values()), self._den)

    def __eq__(self, other):
        return (
            isinstance(other, FiniteMeasure)
            and other.group == self.group
            and other._den == self._den
            and other._num == self._num
        )

    def __hash__(self):
        return hash((self.group, self._den, frozenset(self._num.items())))

    def __repr__(self):
        body = ", ".join(f"{self.group.format(g)}: {w}" for g, w in sorted(self.items(), key=lambda t: (self.group._len(t[0]), t[0]))[:8])
        more = "" if len(self) <= 8 else f", ... ({len(self)} atoms)"
        return f"FiniteMeasure({self.group.descriptor()}, {{{body}{more}}})"

    # --- algebra ----------------------------------------------------------
    def convolve(self, other: "FiniteMeasure", cap: int = DEFAULT_SUPPORT_CAP) -> "FiniteMeasure":
        """``(self * other)(g) = sum_h self(h) other(h^-1 g)``."""
        if other.group != self.group:
            raise StructuralError("measures live on different groups")
        mul = self.group._mul
        out: dict = {}
        get = out.get
        right = list(other._num.items())
        for h, a in self._num.items():
            for k, b in right:
                x = mul(h, k)
                out[x] = get(x, 0) + a * b
            if len(out) > cap:
                raise CapExceeded(f"convolution support exceeds {cap} atoms")
        return FiniteMeasure._raw(self.group, out, self._den * other._den)

    __mul__ = convolve

    def reverse(self) -> "FiniteMeasure":
        """``mu_check(g) = mu(g^-1)``."""
        inv = self.group._inv
        return FiniteMeasure._raw(self.group, {inv(g): v for g, v in self._num.items()}, self._den)

    def is_symmetric(self) -> bool:
        return self.reverse() == self

    def push_forward(self, f: Callable) -> dict:
        """Distribution of ``f`` under the measure, as ``{value: Fraction}``."""
        out: dict = {}
        for g, v in self._num.items():
            y = f(g)
            out[y] = out.get(y, 0) + v
        return {y: Fraction(v, self._den) for y, v in out.items()}

    def integrate(self, f: Callable) -> Fraction:
        """Exact integral of an integer- or rational-valued function."""
        return sum((Fraction(f(g)) * v for g, v in self._num.items()), Fraction(0)) / self._den

    def integrate_float(self, f: Callable) -> float:
        d = self._den
        return math.fsum(f(g) * (v / d) for g, v in self._num.items())

    def powers(self, n: int, cap: int = DEFAULT_SUPPORT_CAP) -> Iterator["FiniteMeasure"]:
        """Yield ``mu^{*0} = delta_e, mu^{*1}, ..., mu^{*n}``."""
        cur = FiniteMeasure.dirac(self.group)
        yield cur
        for _ in range(n):
            cur = cur.convolve(self, cap=cap)
            yield cur

    def power(self, n: int, cap: int = DEFAULT_SUPPORT_CAP) -> "FiniteMeasure":
        """``mu^{*n}`` by repeated squaring."""
        if n < 0:
            raise ValueError("power must be nonnegative")
        result = FiniteMeasure.dirac(self.group)
        base = self
        while n:
            if n & 1:
                result = result.convolve(base, cap=cap)
            n >>= 1
            if n:
                base = base.convolve(base, cap=cap)
        return result

    def entropy(self) -> float:
        """Shannon entropy in nats."""
        logd = math.log(self._den)
        d = self._den
        return -math.fsum((v / d) * (math.log(v) - logd) for v in self._num.values())

    def max_radius(self) -> int:
        return max(self.group._len(g) for g in self._num)

    def as_radial(self) -> "RadialMeasure | None":
        """The radial form, if the group is free and the measure is uniform on spheres."""
        G = self.group
        if not isinstance(G, FreeGroup):
            return None
        mass: dict[int, int] = {}
        per_atom: dict[int, int] = {}
        for g, v in self._num.items():
            k = len(g)
            if per_atom.setdefault(k, v) != v:
                return None
            mass[k] = mass.get(k, 0) + v
        for k, m in mass.items():
            if m != per_atom[k] * G.sphere_size(k):
                return None
        R = max(mass)
        return RadialMeasure(G.rank, [Fraction(mass.get(k, 0), self._den) for k in range(R + 1)])


# --------------------------------------------------------------------------
# radial measures on free groups


@dataclass(frozen=True)
class RadialMeasure:
    """A measure on ``F_r`` that is uniform on each sphere.

    ``mass[k]`` is the total mass of the sphere of radius ``k``.
    """

    rank: int
    mass: tuple

    def __init__(self, rank: int, mass: Iterable):
        m = [Fraction(x) for x in mass]
        while len(m) > 1 and m[-1] == 0:
            m.pop()
        object.__setattr__(self, "rank", rank)
        object.__setattr__(self, "mass", tuple(m))

    @property
    def radius(self) -> int:
        return len(self.mass) - 1

    def _step(self, v: list) -> list:
        """Right convolution of the radial vector ``v`` with ``sigma_1``."""
        q = 2 * self.rank
        fwd = Fraction(q - 1, q)
        back = Fraction(1, q)
        out = [Fraction(0)] * (len(v) + 1)
        if v:
            out[1] += v[0]
        for k in range(1, len(v)):
            if v[k]:
                out[k + 1] += v[k] * fwd
                out[k - 1] += v[k] * back
        return out

    def convolve_vector(self, v: list) -> list:
        """Mass vector of ``self * nu`` for radial ``nu`` with mass vector ``v``.

        Uses ``sigma_j * nu = P_j(T) nu`` with ``T`` convolution by ``sigma_1``
        and the sphere recursion ``sigma_1 sigma_j = (q-1)/q sigma_{j+1} + 1/q sigma_{j-1}``.
        """
        q = 2 * self.rank
        c = Fraction(q, q - 1)
        out = [Fraction(0)] * (len(v) + self.radius)

        def add(acc, w, coef):
            if coef:
                for i, x in enumerate(w):
                    acc[i] += coef * x

        prev, cur = None, list(v)
        add(out, cur, self.mass[0])
        for j in range(1, self.radius + 1):
            t = self._step(cur)
            if j == 1:
                nxt = t
            else:
                nxt = [c * (t[i] - (prev[i] / q if i < len(prev) else 0)) for i in range(len(t))]
            prev, cur = cur, nxt
            add(out, cur, self.mass[j])
        while len(out) > 1 and out[-1] == 0:
            out.pop()
        return out

    def convolve(self, other: "RadialMeasure") -> "RadialMeasure":
        if other.rank != self.rank:
            raise StructuralError("radial measures on different free groups")
        return RadialMeasure(self.rank, self.convolve_vector(list(other.mass)))

    def powers(self, n: int) -> Iterator["RadialMeasure"]:
        cur = RadialMeasure(self.rank, [1])
        yield cur
        for _ in range(n):
            cur = RadialMeasure(self.rank, self.convolve_vector(list(cur.mass)))
            yield cur

    def sphere_size(self, k: int) -> int:
        return 1 if k == 0 else 2 * self.rank * (2 * self.rank - 1) ** (k - 1)

    def mean_length(self) -> Fraction:
        return sum((k * p for k, p in enumerate(self.mass)), Fraction(0))

    def entropy(self) -> float:
        """``-sum_k p_k log(p_k / |S_k|)``: each sphere is uniformly weighted."""
        out = []
        for k, p in enumerate(self.mass):
            if p:
                out.append(-float(p) * (_log_fraction(p) - math.log(self.sphere_size(k))))
        return math.fsum(out)

    def expand(self) -> FiniteMeasure:
        G = FreeGroup(self.rank)
        weights = {}
        for k, p in enumerate(self.mass):
            if p:
                w = p / self.sphere_size(k)
                for g in G.sphere(k):
                    weights[g] = w
        return FiniteMeasure(G, weights)

    def expected_distance_from(self, m: int) -> Fraction:
        """``E |g^-1 x|`` for ``x`` with this law and any fixed ``g`` of length ``m``."""
        q = 2 * self.rank
        total = Fraction(0)
        for k, p in enumerate(self.mass):
            if p:
                total += p * (m + k - 2 * _expected_prefix(q, m, k))
        return total


def _log_fraction(p: Fraction) -> float:
    return math.log(p.numerator) - math.log(p.denominator)


def _expected_prefix(q: int, m: int, k: int) -> Fraction:
    """Mean common-prefix length of a fixed word of length m and a uniform word of length k."""
    n = min(m, k)
    if n == 0:
        return Fraction(0)
    # P(prefix >= i) = (1/q) (1/(q-1))^{i-1}
    return sum((Fraction(1, q) * Fraction(1, q - 1) ** (i - 1) for i in range(1, n + 1)), Fraction(0))


# --------------------------------------------------------------------------
# power sequences


def power_sequence(mu: FiniteMeasure, n: int, cap: int = DEFAULT_SUPPORT_CAP):
    """``[mu^{*0}, ..., mu^{*n}]`` in radial form when possible, else as FiniteMeasures."""
    rad = mu.as_radial()
    if rad is not None:
        return list(rad.powers(n))
    return list(mu.powers(n, cap=cap))


def _mean_length(m, metric: WordMetric | None) -> Fraction:
    if isinstance(m, RadialMeasure) and (metric is None or metric.standard):
        return m.mean_length()
    if isinstance(m, RadialMeasure):
        m = m.expand()
    if metric is None or metric.standard:
        return m.integrate(m.group._len)
    return m.integrate(metric.length)


# --------------------------------------------------------------------------
# generation


@dataclass
class GenerationReport:
    status: Status
    steps: int | None
    radius: int

    def __bool__(self):
        return bool(self.status)


def generates_semigroup(mu: FiniteMeasure, radius: int, max_steps: int = 64) -> GenerationReport:
    """Does ``supp(mu)`` generate the ball ``B_radius`` as a semigroup?

    TRUE with the least ``N`` such that the supports of ``mu^{*1..N}`` cover
    the ball; FALSE if the union of supports stops growing first (then it
    never grows); INCONCLUSIVE if ``max_steps`` runs out.
    """
    G = mu.group
    target = set(G.ball(radius))
    supp = list(mu.support)
    union: set = set()
    layer = {G.identity}
    mul = G._mul
    for n in range(1, max_steps + 1):
        layer = {mul(x, s) for x in layer for s in supp}
        before = len(union)
        union |= layer
        if target <= union:
            return GenerationReport(Status.TRUE, n, radius)
        if len(union) == before:
            return GenerationReport(Status.FALSE, None, radius)
        if len(layer) > DEFAULT_SUPPORT_CAP:
            break
    return GenerationReport(Status.INCONCLUSIVE, None, radius)


# --------------------------------------------------------------------------
# drift and entropy


@dataclass
class DriftReport:
    a: list  # exact a_n, n = 0..N
    metric: str = "standard"

    @property
    def N(self) -> int:
        return len(self.a) - 1

    @property
    def ratios(self) -> list:
        return [None] + [self.a[n] / n for n in range(1, len(self.a))]

    @property
    def increments(self) -> list:
        """``a_{n+1} - a_n`` for n = 0..N-1."""
        return [self.a[n + 1] - self.a[n] for n in range(len(self.a) - 1)]

    @property
    def increment_estimate(self) -> Fraction:
        return self.a[-1] - self.a[-2]

    @property
    def fekete_bound(self) -> Fraction:
        return min(self.a[n] / n for n in range(1, len(self.a)))

    def subadditivity_violations(self) -> list:
        a, N = self.a, self.N
        return [(m, n) for m in range(1, N + 1) for n in range(m, N + 1 - m) if a[m + n] > a[m] + a[n]]

    def rows(self):
        for n in range(1, len(self.a)):
            yield n, self.a[n], self.a[n] / n, self.a[n] - self.a[n - 1]


def drift_report(mu: FiniteMeasure, N: int, metric: WordMetric | None = None, cap: int = DEFAULT_SUPPORT_CAP) -> DriftReport:
    if N < 1:
        raise ValueError("N must be at least 1")
    seq = power_sequence(mu, N, cap=cap)
    return DriftReport([_mean_length(m, metric) for m in seq], "standard" if metric is None or metric.standard else "custom")


@dataclass
class EntropyReport:
    H: list  # H_n, n = 0..N
    power_sizes: list  # |S^n| for the standard generators

    @property
    def N(self) -> int:
        return len(self.H) - 1

    @property
    def increments(self) -> list:
        return [self.H[n + 1] - self.H[n] for n in range(len(self.H) - 1)]

    @property
    def increment_estimate(self) -> float:
        return self.H[-1] - self.H[-2]

    @property
    def volume_growth(self) -> list:
        return [None] + [math.log(self.power_sizes[n]) / n for n in range(1, len(self.power_sizes))]

    @property
    def volume_increment(self) -> float:
        return math.log(self.power_sizes[-1]) - math.log(self.power_sizes[-2])

    def subadditivity_violations(self, tol: float = 1e-9) -> list:
        H, N = self.H, self.N
        return [(m, n) for m in range(1, N + 1) for n in range(m, N + 1 - m) if H[m + n] > H[m] + H[n] + tol]


def entropy_report(mu: FiniteMeasure, N: int, cap: int = DEFAULT_SUPPORT_CAP) -> EntropyReport:
    if N < 1:
        raise ValueError("N must be at least 1")
    seq = power_sequence(mu, N, cap=cap)
    G = mu.group
    return EntropyReport([m.entropy() for m in seq], [G.power_set_size(n) for n in range(N + 1)])


@dataclass
class FundamentalInequality:
    h: float
    v: float
    ell: float
    tolerance: float

    @property
    def holds(self) -> bool:
        return self.h <= self.v * self.ell + self.tolerance

    @property
    def slack(self) -> float:
        return self.v * self.ell - self.h


def fundamental_inequality(mu: FiniteMeasure, N: int, tolerance: float = 0.02, cap: int = DEFAULT_SUPPORT_CAP) -> FundamentalInequality:
    """Increment estimators of entropy, growth and drift at ``n = N``."""
    d = drift_report(mu, N, cap=cap)
    e = entropy_report(mu, N, cap=cap)
    return FundamentalInequality(e.increment_estimate, e.volume_increment, float(d.increment_estimate), tolerance)


# --------------------------------------------------------------------------
# Cesaro quasi-harmonic profile


@dataclass
class CesaroProfile:
    """``u_N(g) = (1/N) sum_{k<N} int (d(g,x) - d(x,e)) dmu^{*k}(x)``, exactly.

    The averaged step satisfies, for every ``g``,
    ``sum_s mu(s) u_N(s^-1 g) = u_N(g) + a_N/N + (E_N d(g,x) - |g|)/N``,
    so ``ell_hat = a_N / N`` and the residual is at most ``2|g|/N``.
    """

    mu: FiniteMeasure
    N: int
    metric: WordMetric | None = None
    cap: int = DEFAULT_SUPPORT_CAP
    _powers: list = field(init=False, repr=False)
    _a: list = field(init=False, repr=False)
    _cache: dict = field(init=False, repr=False, default_factory=dict)

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("N must be at least 1")
        self._powers = power_sequence(self.mu, self.N, cap=self.cap)
        if self.metric is not None and not self.metric.standard:
            self._powers = [p.expand() if isinstance(p, RadialMeasure) else p for p in self._powers]
        self._a = [_mean_length(p, self.metric) for p in self._powers]

    @property
    def group(self) -> Group:
        return self.mu.group

    def _dist(self, g, x) -> int:
        G = self.group
        if self.metric is None or self.metric.standard:
            return G._len(G._mul(G._inv(g), x))
        return self.metric.distance(g, x)

    def _expected_distance(self, k: int, g) -> Fraction:
        p = self._powers[k]
        if isinstance(p, RadialMeasure):
            return p.expected_distance_from(len(g))
        return p.integrate(lambda x: self._dist(g, x))

    def __call__(self, g) -> Fraction:
        return self.value(g)

    def value(self, g) -> Fraction:
        g = self.group.element(g)
        if g not in self._cache:
            s = sum((self._expected_distance(k, g) - self._a[k] for k in range(self.N)), Fraction(0))
            self._cache[g] = s / self.N
        return self._cache[g]

    @property
    def ell_hat(self) -> Fraction:
        return self._a[self.N] / self.N

    @property
    def drift_terms(self) -> list:
        return list(self._a)

    def averaged(self, g) -> Fraction:
        """``int u_N(s g) d mu_check(s) = sum_s mu(s) u_N(s^-1 g)``."""
        G = self.group
        g = G.element(g)
        return sum((w * self.value(G._mul(G._inv(s), g)) for s, w in self.mu.items()), Fraction(0))

    def residual(self, g) -> Fraction:
        """``|int u_N(sg) dmu_check(s) - u_N(g) - ell_hat|``."""
        return abs(self.averaged(g) - self.value(g) - self.ell_hat)

    def lipschitz_witness(self, g, m: int) -> Fraction:
        """``max_{s in B_m} |u_N(sg) - u_N(s)|``; left-Lipschitz means this is ``<= d(g, e)``."""
        G = self.group
        g = G.element(g)
        return max(abs(self.value(G._mul(s, g)) - self.value(s)) for s in G.ball(m))

    def homomorphism_defect(self, g, h) -> Fraction:
        G = self.group
        g, h = G.element(g), G.element(h)
        return abs(self.value(G._mul(g, h)) - self.value(g) - self.value(h))


def quasi_harmonic_profile(mu: FiniteMeasure, g, N: int, metric: WordMetric | None = None) -> dict:
    """Value of the Cesaro profile at ``g`` together with its residuals."""
    prof = CesaroProfile(mu, N, metric)
    G = mu.group
    g = G.element(g)
    return {
        "value": prof.value(g),
        "ell_hat": prof.ell_hat,
        "residual": prof.residual(g),
        "lipschitz_witness": prof.lipschitz_witness(g, 2),
        "length": G._len(g) if metric is None else metric.length(g),
    }


__all__ = [
    "CesaroProfile",
    "DriftReport",
    "EntropyReport",
    "FiniteMeasure",
    "FundamentalInequality",
    "GenerationReport",
    "RadialMeasure",
    "drift_report",
    "entropy_report",
    "fundamental_inequality",
    "generates_semigroup",
    "power_sequence",
    "quasi_harmonic_profile",
]
