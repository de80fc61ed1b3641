"""Besov seminorm, convolution operator and its contraction on the boundary of F_r.

On pairs of boundary points the product current is ``rho(xi, eta) =
(2r-1)^{2 (xi|eta)}`` with ``(xi|eta)`` the common prefix length.  The
density that makes ``rho (m x m)`` invariant is the pullback density
``sigma*(g, xi) = dm(g .)/dm (xi) = m(g . C) / m(C)``:

    rho(g xi, g eta) sigma*(g, xi) sigma*(g, eta) = rho(xi, eta).

For the convolution operator ``Q u(xi) = sum_g mu(g) u(g^-1 xi)`` this gives
``N(Q^n u) <= tau_n N(u)`` with ``tau_n = max_xi sum_s mu^{*n}(s) sigma*(s, xi)^{1-2 eps}``.
For symmetric ``mu``, ``sigma*`` may be replaced by ``sigma`` in ``tau``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .boundary import CylinderFunction, CylinderSpace, cylinder_measure, word_index
from .errors import CapExceeded, DepthError, NoContractionCertificate, StructuralError
from .groups import FreeGroup
from .measures import FiniteMeasure

DEFAULT_SOLVER_DEPTH = 8
DEFAULT_MAX_ITERATIONS = 2000


def _eps(eps) -> Fraction:
    e = Fraction(eps) if not isinstance(eps, float) else Fraction(eps).limit_denominator(10**9)
    if not 0 <= e < Fraction(1, 2):
        raise ValueError("epsilon must lie in [0, 1/2)")
    return e


@dataclass(frozen=True)
class ProductCurrent:
    """``rho(xi, eta) = scale * (2r-1)^{2 (xi|eta)}``."""

    rank: int = 2
    scale: Fraction = Fraction(1)

    def exponent(self, x: tuple, y: tuple) -> int:
        return 2 * FreeGroup.common_prefix(x, y)

    def __call__(self, x: tuple, y: tuple) -> Fraction:
        return self.scale * Fraction(2 * self.rank - 1) ** self.exponent(x, y)


def pullback_density(g, cyl_word: tuple, rank: int = 2) -> Fraction:
    """``m(g . cyl(w)) / m(cyl(w))`` for ``|w| > |g|``."""
    G = FreeGroup(rank)
    g = G.element(g)
    if len(cyl_word) <= len(g):
        raise DepthError("cylinder depth must exceed |g|")
    return Fraction(2 * rank - 1) ** (len(cyl_word) - len(G._mul(g, cyl_word)))


def _prefix_matrix(words: list) -> np.ndarray:
    """Common prefix lengths of all pairs of words."""
    L = max(len(w) for w in words)
    A = np.zeros((len(words), L), dtype=np.int64)
    for i, w in enumerate(words):
        A[i, : len(w)] = w
    n = len(words)
    cp = np.zeros((n, n), dtype=np.int64)
    alive = np.ones((n, n), dtype=bool)
    lens = np.array([len(w) for w in words])
    for j in range(L):
        col = A[:, j]
        valid = lens > j
        alive &= (col[:, None] == col[None, :]) & valid[:, None] & valid[None, :]
        cp += alive
    return cp


def current_equivariance_check(g, depth: int, rank: int = 2) -> list:
    """Pairs of distinct depth-``k`` cylinders violating the invariance equation.

    Only pairs with ``(x|y) < k - |g|`` are tested; for those the image pair
    has a determined Gromov product.  All quantities are integer powers of
    ``2r-1`` so the check compares exponents exactly.
    """
    G = FreeGroup(rank)
    g = G.element(g)
    if depth <= len(g) + 1:
        raise DepthError("depth must exceed |g| + 1")
    words = G.sphere(depth)
    images = [G._mul(g, w) for w in words]
    cp = _prefix_matrix(words)
    cpi = _prefix_matrix(images)
    # log_{2r-1} of sigma*(g, w) = depth - |g w|
    ls = np.array([depth - len(x) for x in images], dtype=np.int64)
    lhs = 2 * cpi + ls[:, None] + ls[None, :]
    rhs = 2 * cp
    mask = (cp < depth - len(g)) & ~np.eye(len(words), dtype=bool)
    bad = np.argwhere(mask & (lhs != rhs))
    return [(G.format(words[i]), G.format(words[j])) for i, j in bad]


# --------------------------------------------------------------------------
# seminorm


def _pair_abs_sums(values: np.ndarray, block: int):
    """Sum over ordered pairs inside each block of ``|v_i - v_j|``, summed over blocks."""
    v = values.reshape(-1, block)
    if v.dtype == object:
        total = Fraction(0)
        for row in v:
            s = sorted(row)
            n = len(s)
            total += 2 * sum((2 * i - n + 1) * x for i, x in enumerate(s))
        return total
    s = np.sort(v, axis=1)
    n = block
    w = 2 * np.arange(n) - n + 1
    return float(2 * np.sum(s * w))


def besov_seminorm(phi: CylinderFunction, eps) -> float | Fraction:
    """``N(phi) = int int |phi(x) - phi(y)| rho(x, y)^{1/2 + eps} dm(x) dm(y)``.

    Pairs with Gromov product exactly ``j`` are the pairs inside a depth-``j``
    block that are not inside a depth-``j+1`` block, so the double sum is
    ``m_k^2 sum_j (2r-1)^{(1+2 eps) j} (S_j - S_{j+1})`` with ``S_j`` the
    within-block pair sums.  Exact when ``phi`` is exact and
    ``(1 + 2 eps) j`` is integral for every ``j``.
    """
    e = _eps(eps)
    k = phi.depth
    if k == 0:
        return Fraction(0) if phi.exact else 0.0
    sp = phi.space
    b = 2 * phi.rank - 1
    S = [_pair_abs_sums(phi.values, sp.block(j)) for j in range(k)] + [0]
    mk = cylinder_measure(phi.rank, k)
    expo = 1 + 2 * e
    exact = phi.exact and expo.denominator == 1
    if exact:
        return mk * mk * sum((Fraction(b) ** int(expo * j) * (S[j] - S[j + 1]) for j in range(k)), Fraction(0))
    mkf = float(mk)
    return mkf * mkf * math.fsum(b ** (float(expo) * j) * float(S[j] - S[j + 1]) for j in range(k))


def besov_seminorm_direct(phi: CylinderFunction, eps) -> float:
    """The same double sum by brute force over all ordered pairs (test oracle)."""
    e = float(_eps(eps))
    words = phi.space.words
    b = 2 * phi.rank - 1
    m = float(cylinder_measure(phi.rank, phi.depth))
    tot = []
    for i, x in enumerate(words):
        for j, y in enumerate(words):
            if i != j:
                c = FreeGroup.common_prefix(x, y)
                tot.append(abs(float(phi.values[i]) - float(phi.values[j])) * b ** ((1 + 2 * e) * c) * m * m)
    return math.fsum(tot)


# --------------------------------------------------------------------------
# convolution operator


@lru_cache(maxsize=256)
def _gather_index(rank: int, depth: int, radius: int, g: tuple) -> np.ndarray:
    """For each depth-(k+R) word w, the depth-k index of the prefix of g^-1 w."""
    G = FreeGroup(rank)
    ginv = G._inv(g)
    out_words = G.sphere(depth + radius)
    return np.fromiter((word_index(G._mul(ginv, w)[:depth], rank) for w in out_words), dtype=np.int64, count=len(out_words))


def transfer_operator(phi: CylinderFunction, mu: FiniteMeasure | None = None, n: int = 1, cap: int = 12) -> CylinderFunction:
    """``Q^n phi`` with ``Q u(xi) = sum_g mu(g) u(g^-1 xi)``, exactly on step functions.

    Each application deepens the function by the support radius of ``mu``.
    """
    G = FreeGroup(phi.rank)
    mu = FiniteMeasure.simple_random_walk(G) if mu is None else mu
    if mu.group != G:
        raise StructuralError("measure lives on a different group")
    R = mu.max_radius()
    out = phi
    for _ in range(n):
        if out.depth + R > cap:
            raise CapExceeded(f"depth {out.depth + R} exceeds cap {cap}")
        out = _apply_once(out, mu, R)
    return out


def _apply_once(phi: CylinderFunction, mu: FiniteMeasure, R: int) -> CylinderFunction:
    k = phi.depth
    if k == 0:
        return phi
    sp = CylinderSpace(phi.rank, k + R, cap=max(k + R, 10))
    if phi.exact:
        acc = np.full(sp.size, Fraction(0), dtype=object)
        for g, w in mu.items():
            acc = acc + w * phi.values[_gather_index(phi.rank, k, R, g)]
    else:
        acc = np.zeros(sp.size)
        for g, w in mu.float_items():
            acc += w * phi.values[_gather_index(phi.rank, k, R, g)]
    return CylinderFunction(sp, acc)


# --------------------------------------------------------------------------
# contraction factor


@dataclass
class ContractionFactor:
    eps: Fraction
    n: int
    tau: float | Fraction
    argmax: str  # a depth-n cylinder where the maximum is attained


def contraction_factor(eps, n: int, mu: FiniteMeasure | None = None, rank: int = 2) -> ContractionFactor:
    """``tau_{eps,n} = max_xi sum_s mu^{*n}(s) sigma*(s, xi)^{1 - 2 eps}``.

    ``sigma*(s, .)`` is constant on depth-``|s|`` cylinders, so the maximum is
    over depth-``n`` cylinders (evaluated at depth ``R n + 1``).  Exact when
    ``1 - 2 eps`` is an integer.
    """
    e = _eps(eps)
    if n < 1:
        raise ValueError("n must be positive")
    G = FreeGroup(rank)
    mu = FiniteMeasure.simple_random_walk(G) if mu is None else mu
    mun = mu.power(n)
    R = mun.max_radius()
    depth = R + 1
    words = G.sphere(depth)
    b = 2 * rank - 1
    expo = 1 - 2 * e
    # log_b sigma*(s, w) = depth - |s w|
    L = np.array([[depth - len(G._mul(s, w)) for w in words] for s in mun.support], dtype=np.int64)
    weights = [mun[s] for s in mun.support]
    if expo.denominator == 1:
        p = int(expo)
        vals = [sum((wt * Fraction(b) ** (p * int(L[i, j])) for i, wt in enumerate(weights)), Fraction(0)) for j in range(len(words))]
    else:
        W = np.array([float(x) for x in weights])
        vals = list(W @ np.power(float(b), float(expo) * L))
    j = max(range(len(vals)), key=lambda t: vals[t])
    return ContractionFactor(e, n, vals[j], G.format(words[j][: max(n, 1)]))


def contraction_check(eps, n: int = 1, trials: int = 100, depth: int = 2, seed: int = 0, mu: FiniteMeasure | None = None) -> list:
    """``N(Q^n phi) - tau N(phi)`` for ``trials`` seeded random depth-``depth`` functions."""
    tau = float(contraction_factor(eps, n, mu).tau)
    rng = np.random.default_rng(seed)
    sp = CylinderSpace(2, depth)
    gaps = []
    for _ in range(trials):
        phi = CylinderFunction(sp, rng.normal(size=sp.size))
        lhs = besov_seminorm(transfer_operator(phi, mu, n), eps)
        gaps.append(lhs - tau * besov_seminorm(phi, eps))
    return gaps


# --------------------------------------------------------------------------
# cohomological equation


@dataclass
class CohomologicalSolution:
    u: CylinderFunction
    iterations: int
    depth: int
    residual: float  # ||u - Q u - psi||_inf at depth D + R, psi mean-corrected
    tail_bound: float  # certified bound on ||P^K psi||_inf
    series_tail_bound: float  # certified bound on sum_{j >= K} ||P^j psi||_inf
    projection_error: float  # ||(Q - E_D Q) u||_inf
    tau: float
    n0: int
    besov_psi: float
    comparison_constant: float  # rigorous sup/N constant 1/m_D for mean-zero depth-D functions
    empirical_comparison: float  # max sup/N over the iterates
    mean_subtracted: float
    converged: bool

    def to_dict(self) -> dict:
        d = {k: v for k, v in self.__dict__.items() if k != "u"}
        d["u_depth"] = self.u.depth
        return d


def solve_cohomological(
    psi: CylinderFunction,
    eps=Fraction(1, 4),
    tol: float = 1e-3,
    mu: FiniteMeasure | None = None,
    depth: int = DEFAULT_SOLVER_DEPTH,
    max_n0: int = 4,
    max_iterations: int = DEFAULT_MAX_ITERATIONS,
) -> CohomologicalSolution:
    """Truncated Neumann series ``u = sum_{j<K} P^j psi`` for ``u - Q u = psi``.

    ``P = E_D Q`` keeps iterates at depth ``D``.  ``E_D`` does not increase
    the seminorm, so ``N(P^j psi) <= tau^{floor(j/n0)} N(psi)`` with the
    certified ``tau = tau_{eps,n0} < 1``; mean-zero depth-``D`` functions obey
    ``||f||_inf <= N(f) / m_D``.  Iteration stops once the certified bound on
    ``||P^K psi||_inf`` is below ``tol / 2``; the residual of the returned
    ``u`` is then computed directly at depth ``D + R``.
    """
    G = FreeGroup(psi.rank)
    mu = FiniteMeasure.simple_random_walk(G) if mu is None else mu
    if depth < psi.depth:
        raise DepthError(f"solver depth {depth} below the depth of psi ({psi.depth})")
    cf = None
    for n0 in range(1, max_n0 + 1):
        c = contraction_factor(eps, n0, mu, psi.rank)
        if float(c.tau) < 1:
            cf = c
            break
    if cf is None:
        raise NoContractionCertificate(f"no n0 <= {max_n0} with tau_(eps,n0) < 1 at eps = {eps}")
    tau = float(cf.tau)
    n0 = cf.n

    f = psi.astype_float().refine(depth)
    mean = float(np.mean(f.values))
    f = CylinderFunction(f.space, f.values - mean)
    psi_d = f
    R = mu.max_radius()
    Npsi = float(besov_seminorm(f, eps))
    C = 1.0 / float(cylinder_measure(psi.rank, depth))

    def bound(j):
        return C * Npsi * tau ** (j // n0)

    u = np.zeros(f.space.size)
    cur = f
    emp = 0.0
    K = 0
    converged = False
    while K < max_iterations:
        if bound(K) <= tol / 2 or not np.any(cur.values):
            converged = True
            break
        u += cur.values
        nrm = float(besov_seminorm(cur, eps))
        if nrm > 0:
            emp = max(emp, float(np.max(np.abs(cur.values))) / nrm)
        cur = transfer_operator(cur, mu, 1, cap=depth + R).conditional_expectation(depth)
        K += 1
    U = CylinderFunction(f.space, u)
    QU = transfer_operator(U, mu, 1, cap=depth + R)
    res = U.refine(depth + R).values - QU.values - psi_d.refine(depth + R).values
    proj = QU.values - QU.conditional_expectation(depth).refine(depth + R).values
    t = bound(K) if np.any(cur.values) else 0.0
    series = t * (1 if tau == 0 else n0 / (1 - tau)) if t else 0.0
    return CohomologicalSolution(
        u=U,
        iterations=K,
        depth=depth,
        residual=float(np.max(np.abs(res))),
        tail_bound=t,
        series_tail_bound=series,
        projection_error=float(np.max(np.abs(proj))),
        tau=tau,
        n0=n0,
        besov_psi=Npsi,
        comparison_constant=C,
        empirical_comparison=emp,
        mean_subtracted=mean,
        converged=converged,
    )


__all__ = [
    "CohomologicalSolution",
    "ContractionFactor",
    "ProductCurrent",
    "besov_seminorm",
    "besov_seminorm_direct",
    "contraction_check",
    "contraction_factor",
    "current_equivariance_check",
    "pullback_density",
    "solve_cohomological",
    "transfer_operator",
]
