"""Free groups, integer lattices and word metrics.

Elements are plain tuples so they hash cheaply and can be used as dict keys
in the convolution kernels:

* a free-group element is a reduced tuple of nonzero ints, ``i`` for the
  i-th generator and ``-i`` for its inverse (``()`` is the identity);
* a lattice element is a tuple of ``d`` ints.

Group objects carry the law, the metric and the enumeration machinery.  The
``multiply``/``inverse`` methods validate their arguments; the underscore
variants skip validation and are meant for hot loops.
"""

from __future__ import annotations

import math
import re
from collections import deque
from fractions import Fraction
from typing import Iterable, Iterator, Sequence

from .errors import CapExceeded, ParseError, RadiusExceeded, StructuralError

# 'e' is reserved for the identity.
ALPHABET = "abcdfghijklmnopqrstuvwxyz"

DEFAULT_ENUMERATION_CAP = 2_000_000
DEFAULT_BFS_RADIUS = 12


def letter_key(x: int) -> int:
    """Sort key giving the order a < A < b < B < ..."""
    return 2 * (abs(x) - 1) + (x < 0)


class Group:
    """Common interface of :class:`FreeGroup` and :class:`Lattice`."""

    kind: str
    identity: tuple

    # --- validation -------------------------------------------------------
    def check(self, g) -> tuple:
        raise NotImplementedError

    def contains(self, g) -> bool:
        try:
            self.check(g)
        except StructuralError:
            return False
        return True

    # --- law --------------------------------------------------------------
    def multiply(self, g, h) -> tuple:
        return self._mul(self.check(g), self.check(h))

    def inverse(self, g) -> tuple:
        return self._inv(self.check(g))

    def product(self, elements: Iterable) -> tuple:
        out = self.identity
        for g in elements:
            out = self._mul(out, self.check(g))
        return out

    def power(self, g, n: int) -> tuple:
        g = self.check(g)
        if n < 0:
            g, n = self._inv(g), -n
        out = self.identity
        for _ in range(n):
            out = self._mul(out, g)
        return out

    # --- metric -----------------------------------------------------------
    def length(self, g) -> int:
        """Word length with respect to the standard generators."""
        return self._len(self.check(g))

    def distance(self, g, h) -> int:
        return self._len(self._mul(self._inv(self.check(g)), self.check(h)))

    def gromov_product(self, g, h) -> Fraction:
        """``(|g| + |h| - |g^-1 h|) / 2`` based at the identity."""
        g, h = self.check(g), self.check(h)
        return Fraction(self._len(g) + self._len(h) - self._len(self._mul(self._inv(g), h)), 2)

    # --- enumeration ------------------------------------------------------
    def sphere_size(self, n: int) -> int:
        raise NotImplementedError

    def ball_size(self, n: int) -> int:
        return sum(self.sphere_size(k) for k in range(n + 1))

    def power_set_size(self, n: int) -> int:
        """``|S^n|``, the number of products of exactly ``n`` standard generators.

        For both families these are the elements of length ``<= n`` whose
        length has the parity of ``n``.
        """
        return sum(self.sphere_size(k) for k in range(n % 2, n + 1, 2))

    def _check_cap(self, n: int, cap: int | None):
        cap = self.enumeration_cap if cap is None else cap
        if self.sphere_size(n) > cap:
            raise CapExceeded(f"sphere of radius {n} has {self.sphere_size(n)} elements (cap {cap})")

    def sphere(self, n: int, cap: int | None = None) -> list:
        if n < 0:
            raise ValueError("radius must be nonnegative")
        self._check_cap(n, cap)
        return list(self._iter_sphere(n))

    def ball(self, n: int, cap: int | None = None) -> list:
        """Spheres of radius 0..n concatenated, each in lexicographic order."""
        if n < 0:
            raise ValueError("radius must be nonnegative")
        cap = self.enumeration_cap if cap is None else cap
        if self.ball_size(n) > cap:
            raise CapExceeded(f"ball of radius {n} has {self.ball_size(n)} elements (cap {cap})")
        out = []
        for k in range(n + 1):
            out.extend(self._iter_sphere(k))
        return out

    def _iter_sphere(self, n: int) -> Iterator[tuple]:
        raise NotImplementedError

    @property
    def generators(self) -> tuple:
        raise NotImplementedError

    # --- text -------------------------------------------------------------
    def parse(self, text: str) -> tuple:
        raise NotImplementedError

    def format(self, g) -> str:
        raise NotImplementedError

    def element(self, x) -> tuple:
        """Coerce text or a sequence into a validated element."""
        if isinstance(x, str):
            return self.parse(x)
        return self.check(tuple(x))

    def descriptor(self) -> str:
        raise NotImplementedError

    def __repr__(self):
        return f"{type(self).__name__}({self.descriptor()!r})"


class FreeGroup(Group):
    """The free group on ``rank`` generators with its standard word metric."""

    kind = "free"
    identity = ()

    def __init__(self, rank: int, enumeration_cap: int = DEFAULT_ENUMERATION_CAP):
        if not 1 <= rank <= len(ALPHABET):
            raise ValueError(f"rank must be between 1 and {len(ALPHABET)}")
        self.rank = rank
        self.enumeration_cap = enumeration_cap
        self._letters = tuple(sorted((s * i for i in range(1, rank + 1) for s in (1, -1)), key=letter_key))

    def __eq__(self, other):
        return isinstance(other, FreeGroup) and other.rank == self.rank

    def __hash__(self):
        return hash(("free", self.rank))

    def descriptor(self) -> str:
        return f"free:{self.rank}"

    @property
    def letters(self) -> tuple:
        """Signed letters in enumeration order a, A, b, B, ..."""
        return self._letters

    @property
    def generators(self) -> tuple:
        return tuple((x,) for x in self._letters)

    def check(self, g) -> tuple:
        if not isinstance(g, tuple):
            raise StructuralError(f"free group elements are tuples, got {type(g).__name__}")
        prev = 0
        for x in g:
            if not isinstance(x, int) or x == 0 or abs(x) > self.rank:
                raise StructuralError(f"{g!r} is not a word over {self.descriptor()}")
            if x == -prev:
                raise StructuralError(f"{g!r} is not freely reduced")
            prev = x
        return g

    def reduce(self, letters: Iterable[int]) -> tuple:
        """Freely reduce an arbitrary sequence of signed letters."""
        out: list[int] = []
        for x in letters:
            if not isinstance(x, int) or x == 0 or abs(x) > self.rank:
                raise StructuralError(f"invalid letter {x!r} for {self.descriptor()}")
            if out and out[-1] == -x:
                out.pop()
            else:
                out.append(x)
        return tuple(out)

    @staticmethod
    def _mul(g: tuple, h: tuple) -> tuple:
        n = min(len(g), len(h))
        c = 0
        lg = len(g)
        while c < n and g[lg - 1 - c] == -h[c]:
            c += 1
        if c == 0:
            return g + h
        return g[: lg - c] + h[c:]

    @staticmethod
    def _inv(g: tuple) -> tuple:
        return tuple(-x for x in reversed(g))

    @staticmethod
    def _len(g: tuple) -> int:
        return len(g)

    @staticmethod
    def common_prefix(g: Sequence[int], h: Sequence[int]) -> int:
        n = min(len(g), len(h))
        i = 0
        while i < n and g[i] == h[i]:
            i += 1
        return i

    def sphere_size(self, n: int) -> int:
        if n == 0:
            return 1
        return 2 * self.rank * (2 * self.rank - 1) ** (n - 1)

    def _iter_sphere(self, n: int) -> Iterator[tuple]:
        if n == 0:
            yield ()
            return
        letters = self._letters
        # depth-first, children in letter order: lexicographic output
        stack = [(x,) for x in reversed(letters)]
        while stack:
            w = stack.pop()
            if len(w) == n:
                yield w
                continue
            last = w[-1]
            for x in reversed(letters):
                if x != -last:
                    stack.append(w + (x,))

    def extensions(self, word: tuple, k: int) -> list:
        """All reduced words of length ``k`` extending ``word``, lexicographically."""
        if k < len(word):
            raise ValueError("target length shorter than word")
        if not word:
            return list(self._iter_sphere(k))
        out = [word]
        for _ in range(k - len(word)):
            out = [w + (x,) for w in out for x in self._letters if x != -w[-1]]
        return out

    def parse(self, text: str) -> tuple:
        s = text.strip()
        if s in ("e", ""):
            return ()
        out = []
        for ch in s:
            if ch in "·*. ":
                continue
            i = ALPHABET.find(ch.lower())
            if i < 0 or i >= self.rank:
                raise ParseError(f"unknown letter {ch!r} in {text!r} for {self.descriptor()}")
            out.append(-(i + 1) if ch.isupper() else i + 1)
        return self.reduce(out)

    def format(self, g) -> str:
        if not g:
            return "e"
        return "".join(ALPHABET[abs(x) - 1].upper() if x < 0 else ALPHABET[x - 1] for x in g)


class Lattice(Group):
    """The integer lattice Z^d with the l1 (standard word) metric."""

    kind = "lattice"

    def __init__(self, dimension: int, enumeration_cap: int = DEFAULT_ENUMERATION_CAP):
        if dimension < 1:
            raise ValueError("dimension must be positive")
        self.dimension = dimension
        self.enumeration_cap = enumeration_cap
        self.identity = (0,) * dimension

    def __eq__(self, other):
        return isinstance(other, Lattice) and other.dimension == self.dimension

    def __hash__(self):
        return hash(("lattice", self.dimension))

    def descriptor(self) -> str:
        return f"lattice:{self.dimension}"

    @property
    def generators(self) -> tuple:
        out = []
        for i in range(self.dimension):
            for s in (1, -1):
                v = [0] * self.dimension
                v[i] = s
                out.append(tuple(v))
        return tuple(out)

    def check(self, g) -> tuple:
        if not isinstance(g, tuple) or len(g) != self.dimension or not all(isinstance(x, int) for x in g):
            raise StructuralError(f"{g!r} is not an element of {self.descriptor()}")
        return g

    @staticmethod
    def _mul(g: tuple, h: tuple) -> tuple:
        return tuple(x + y for x, y in zip(g, h))

    @staticmethod
    def _inv(g: tuple) -> tuple:
        return tuple(-x for x in g)

    @staticmethod
    def _len(g: tuple) -> int:
        return sum(abs(x) for x in g)

    def sphere_size(self, n: int) -> int:
        if n == 0:
            return 1
        d = self.dimension
        return sum(2**j * math.comb(d, j) * math.comb(n - 1, j - 1) for j in range(1, min(d, n) + 1))

    def _iter_sphere(self, n: int) -> Iterator[tuple]:
        d = self.dimension

        def rec(prefix, remaining, slots):
            if slots == 1:
                for x in sorted({-remaining, remaining}):
                    yield prefix + (x,)
                return
            for x in range(-remaining, remaining + 1):
                yield from rec(prefix + (x,), remaining - abs(x), slots - 1)

        yield from rec((), n, d)

    def parse(self, text: str) -> tuple:
        s = text.strip()
        if s == "e":
            return self.identity
        m = re.fullmatch(r"\(?\s*(-?\d+(?:\s*,\s*-?\d+)*)\s*\)?", s)
        if not m:
            raise ParseError(f"cannot parse lattice element {text!r}")
        v = tuple(int(x) for x in m.group(1).split(","))
        if len(v) != self.dimension:
            raise ParseError(f"{text!r} has {len(v)} coordinates, expected {self.dimension}")
        return v

    def format(self, g) -> str:
        return "(" + ",".join(str(x) for x in g) + ")"


def parse_group(text: str) -> Group:
    """Decode ``free:r`` or ``lattice:d`` (``Z^d``/``Zd`` also accepted)."""
    s = text.strip().lower()
    m = re.fullmatch(r"(free|f|lattice|z)\s*[:^]?\s*(\d+)", s)
    if not m:
        raise ParseError(f"unknown group descriptor {text!r}")
    n = int(m.group(2))
    if m.group(1) in ("free", "f"):
        return FreeGroup(n)
    return Lattice(n)


class WordMetric:
    """Word metric for a finite symmetric generating set.

    With the default generators the metric is the reduced word length (free
    groups) or the l1 norm (lattices).  Any other generating set is handled
    by breadth-first search in the Cayley graph, up to ``radius``.
    """

    def __init__(self, group: Group, generators: Iterable | None = None, radius: int = DEFAULT_BFS_RADIUS):
        self.group = group
        self.radius = radius
        if generators is None:
            self.generators = tuple(group.generators)
            self.standard = True
        else:
            gens = tuple(dict.fromkeys(group.element(s) for s in generators))
            inv = {group._inv(s) for s in gens}
            if not inv <= set(gens):
                raise ValueError("generating set must be symmetric")
            if group.identity in gens:
                raise ValueError("generating set must not contain the identity")
            self.generators = gens
            self.standard = set(gens) == set(group.generators)
        self._cache: dict = {group.identity: 0}

    def length(self, g) -> int:
        g = self.group.check(g)
        if self.standard:
            return self.group._len(g)
        if g in self._cache:
            return self._cache[g]
        return self._bfs(g)

    def distance(self, g, h) -> int:
        G = self.group
        return self.length(G._mul(G._inv(G.check(g)), G.check(h)))

    def __call__(self, g, h=None) -> int:
        return self.length(g) if h is None else self.distance(g, h)

    def _bfs(self, target) -> int:
        G = self.group
        seen = {G.identity: 0}
        frontier = deque([G.identity])
        while frontier:
            x = frontier.popleft()
            dx = seen[x]
            if dx >= self.radius:
                continue
            for s in self.generators:
                y = G._mul(x, s)
                if y in seen:
                    continue
                seen[y] = dx + 1
                if y == target:
                    self._cache.update(seen)
                    return dx + 1
                frontier.append(y)
        raise RadiusExceeded(f"{G.format(target)} not reached within radius {self.radius}")


def random_element(group: Group, length: int, rng) -> tuple:
    """A uniformly random element of the sphere of the given radius (free groups),
    or a random lattice vector with that l1 norm (not uniform)."""
    if isinstance(group, FreeGroup):
        out = []
        for _ in range(length):
            choices = [x for x in group.letters if not out or x != -out[-1]]
            out.append(choices[rng.integers(len(choices))])
        return tuple(out)
    v = [0] * group.dimension
    for _ in range(length):
        i = int(rng.integers(group.dimension))
        v[i] += 1 if v[i] > 0 or (v[i] == 0 and rng.integers(2)) else -1
    return tuple(v)


def enumerate_products(group: Group, generators: Sequence, n: int) -> set:
    """Exhaustive ``S^n`` as a set (independent of the parity counting shortcut)."""
    cur = {group.identity}
    for _ in range(n):
        cur = {group._mul(g, s) for g in cur for s in generators}
    return cur


__all__ = [
    "ALPHABET",
    "FreeGroup",
    "Group",
    "Lattice",
    "WordMetric",
    "enumerate_products",
    "letter_key",
    "parse_group",
    "random_element",
]

