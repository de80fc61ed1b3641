"""Monte Carlo random walks, the normalized length statistic and martingale diagnostics.

Every sample owns a counter-based stream: Philox keyed by ``(seed, stream)``
with the sample index in the high counter word.  A sample's increments are
therefore fixed by ``(seed, stream, index)`` alone, and any partitioning of
the indices across threads yields bit-identical statistics.

Increments are drawn by exact inverse CDF: an integer uniform on
``[0, D)`` (``D`` the common denominator of the weights) is located among the
cumulative integer numerators.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np
from scipy import stats

from .errors import QuasiHarmonicityError
from .groups import FreeGroup, Group, Lattice
from .measures import FiniteMeasure, drift_report

MIN_SAMPLES = 100
SIGMA2_F2_SRW = Fraction(3, 4)
DEFAULT_DRIFT_HORIZON = 40


def _generator(seed: int, stream: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=[seed, stream], counter=[0, 0, 0, index]))


@dataclass(frozen=True)
class StepSampler:
    """Exact inverse-CDF sampler for the atoms of a finite measure."""

    atoms: tuple
    cumulative: np.ndarray  # integer numerators, cumulative
    denominator: int

    @classmethod
    def of(cls, mu: FiniteMeasure) -> "StepSampler":
        atoms = tuple(sorted(mu.support, key=lambda g: (mu.group._len(g), g)))
        num = mu.numerators()
        if mu.denominator >= 2**63:
            raise ValueError("weight denominator too large for exact 64-bit sampling")
        cum = np.cumsum([num[g] for g in atoms], dtype=np.int64)
        return cls(atoms, cum, mu.denominator)

    def draw(self, rng: np.random.Generator, n: int) -> np.ndarray:
        u = rng.integers(0, self.denominator, size=n, dtype=np.int64)
        return np.searchsorted(self.cumulative, u, side="right")


def draw_indices(mu: FiniteMeasure, n: int, samples: int, seed: int, stream: int = 0, start: int = 0, threads: int = 1) -> np.ndarray:
    """Atom indices ``(samples, n)``; row ``i`` is sample ``start + i``."""
    sampler = StepSampler.of(mu)
    out = np.empty((samples, n), dtype=np.int64)

    def fill(lo, hi):
        for i in range(lo, hi):
            out[i] = sampler.draw(_generator(seed, stream, start + i), n)

    threads = max(1, int(threads))
    if threads == 1 or samples < 2 * threads:
        fill(0, samples)
    else:
        bounds = np.linspace(0, samples, threads + 1, dtype=int)
        with ThreadPoolExecutor(threads) as ex:
            list(ex.map(lambda t: fill(bounds[t], bounds[t + 1]), range(threads)))
    return out


# --------------------------------------------------------------------------
# trajectories


@dataclass
class WalkSample:
    seed: int
    index: int
    increments: list
    trajectory: list
    group: Group = field(repr=False)

    @property
    def final(self) -> tuple:
        return self.trajectory[-1]

    @property
    def final_length(self) -> int:
        return self.group._len(self.final)

    def recompute(self) -> tuple:
        return self.group.product(self.increments)


def sample_walk(mu: FiniteMeasure, n: int, seed: int, index: int = 0, stream: int = 0) -> WalkSample:
    """One trajectory ``z_0 = e, z_k = z_{k-1} w_{k-1}`` with exact group arithmetic."""
    G = mu.group
    sampler = StepSampler.of(mu)
    idx = sampler.draw(_generator(seed, stream, index), n) if n else []
    inc = [sampler.atoms[i] for i in idx]
    traj = [G.identity]
    for w in inc:
        traj.append(G._mul(traj[-1], w))
    return WalkSample(seed, index, inc, traj, G)


def _letter_table(atoms: tuple) -> np.ndarray:
    L = max(1, max(len(a) for a in atoms))
    tab = np.zeros((len(atoms), L), dtype=np.int16)
    for i, a in enumerate(atoms):
        tab[i, : len(a)] = a
    return tab


def free_lengths(mu: FiniteMeasure, idx: np.ndarray, final_only: bool = False) -> np.ndarray:
    """Word lengths ``|z_0|, ..., |z_n|`` for every sample, by vectorized free reduction.

    With ``final_only`` only ``|z_n|`` is returned (shape ``(samples,)``).
    """
    G = mu.group
    if not isinstance(G, FreeGroup):
        raise TypeError("free_lengths needs a free group")
    sampler = StepSampler.of(mu)
    tab = _letter_table(sampler.atoms)
    S, n = idx.shape
    cap = n * tab.shape[1] + 1
    stack = np.zeros((S, cap), dtype=np.int8 if G.rank < 127 else np.int16)
    top = np.zeros(S, dtype=np.int64)
    rows = np.arange(S)
    out = None if final_only else np.zeros((S, n + 1), dtype=np.int64)
    for k in range(n):
        letters = tab[idx[:, k]]
        for c in range(tab.shape[1]):
            x = letters[:, c]
            live = x != 0
            prev = stack[rows, np.maximum(top - 1, 0)]
            cancel = live & (top > 0) & (prev == -x)
            push = live & ~cancel
            top = top - cancel
            stack[rows[push], top[push]] = x[push]
            top = top + push
        if out is not None:
            out[:, k + 1] = top
    return top if final_only else out


def lattice_positions(mu: FiniteMeasure, idx: np.ndarray) -> np.ndarray:
    """Positions ``(samples, n+1, d)`` of lattice walks."""
    sampler = StepSampler.of(mu)
    steps = np.array(sampler.atoms, dtype=np.int64)
    S, n = idx.shape
    out = np.zeros((S, n + 1, steps.shape[1]), dtype=np.int64)
    np.cumsum(steps[idx], axis=1, out=out[:, 1:])
    return out


def walk_lengths(mu: FiniteMeasure, n: int, samples: int, seed: int, stream: int = 0, threads: int = 1) -> np.ndarray:
    """Standard word length of ``z_0..z_n`` for each sample, shape ``(samples, n+1)``."""
    idx = draw_indices(mu, n, samples, seed, stream, threads=threads)
    if isinstance(mu.group, FreeGroup):
        return free_lengths(mu, idx)
    return np.abs(lattice_positions(mu, idx)).sum(axis=2)


def final_lengths(mu: FiniteMeasure, n: int, samples: int, seed: int, stream: int = 0, threads: int = 1, chunk: int = 2000) -> np.ndarray:
    """``|z_n|`` per sample, processed in chunks of samples to bound memory."""
    out = np.empty(samples, dtype=np.int64)
    for lo in range(0, samples, chunk):
        hi = min(samples, lo + chunk)
        idx = draw_indices(mu, n, hi - lo, seed, stream, start=lo, threads=threads)
        if isinstance(mu.group, FreeGroup):
            out[lo:hi] = free_lengths(mu, idx, final_only=True)
        else:
            out[lo:hi] = np.abs(lattice_positions(mu, idx)[:, -1, :]).sum(axis=1)
    return out


# --------------------------------------------------------------------------
# CLT


@dataclass
class CltReport:
    n: int
    samples: int
    ell: float
    ell_source: str
    sigma2_hat: float
    mean: float
    ks_fitted: float
    ks_fitted_pvalue: float
    ks_reference: float | None
    ks_reference_pvalue: float | None
    sigma2_reference: float | None
    histogram: list
    bin_edges: list
    seed: int

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def clt_experiment(
    mu: FiniteMeasure,
    n: int,
    samples: int,
    seed: int,
    ell=None,
    sigma2_reference=None,
    stream: int = 0,
    threads: int = 1,
    drift_horizon: int = DEFAULT_DRIFT_HORIZON,
    return_samples: bool = False,
):
    """``Y_n = (|z_n| - n ell) / sqrt(n)`` over independent samples.

    ``ell`` defaults to the exact drift increment ``a_N - a_{N-1}`` with
    ``N = min(n, drift_horizon)``.  For the simple random walk on ``F_2`` the
    reference variance ``3/4`` is used unless another is given.
    """
    if samples < MIN_SAMPLES:
        raise ValueError(f"at least {MIN_SAMPLES} samples are needed, got {samples}")
    if n < 1:
        raise ValueError("n must be positive")
    if ell is None:
        N = max(1, min(n, drift_horizon))
        ell = drift_report(mu, N).increment_estimate if N > 1 else drift_report(mu, 1).a[1]
        source = f"exact increment a_{N}-a_{N-1}"
    else:
        source = "given"
    if sigma2_reference is None and isinstance(mu.group, FreeGroup) and mu.group.rank == 2 and mu == FiniteMeasure.simple_random_walk(mu.group):
        sigma2_reference = SIGMA2_F2_SRW
    lengths = final_lengths(mu, n, samples, seed, stream, threads=threads)
    Y = (lengths - n * float(ell)) / math.sqrt(n)
    s2 = float(np.var(Y, ddof=1))
    ksf = stats.kstest(Y, "norm", args=(0.0, math.sqrt(s2))) if s2 > 0 else None
    ksr = stats.kstest(Y, "norm", args=(0.0, math.sqrt(float(sigma2_reference)))) if sigma2_reference else None
    edges = np.linspace(-5, 5, 41)
    hist, _ = np.histogram(Y, bins=edges)
    rep = CltReport(
        n=n,
        samples=samples,
        ell=float(ell),
        ell_source=source,
        sigma2_hat=s2,
        mean=float(np.mean(Y)),
        ks_fitted=float(ksf.statistic) if ksf else 1.0,
        ks_fitted_pvalue=float(ksf.pvalue) if ksf else 0.0,
        ks_reference=float(ksr.statistic) if ksr else None,
        ks_reference_pvalue=float(ksr.pvalue) if ksr else None,
        sigma2_reference=float(sigma2_reference) if sigma2_reference else None,
        histogram=hist.tolist(),
        bin_edges=edges.tolist(),
        seed=seed,
    )
    if return_samples:
        return rep, lengths, Y
    return rep


def population_ks(mu: FiniteMeasure, n: int, ell, sigma2) -> float:
    """KS distance between the exact law of ``Y_n`` and ``Normal(0, sigma2)``.

    Needs a radial measure on a free group; the law of ``|z_n|`` is
    propagated in floating point through the sphere recursion.
    """
    rad = mu.as_radial()
    if rad is None:
        raise ValueError("population KS needs a measure that is uniform on spheres")
    v = [1.0]
    for _ in range(n):
        v = [float(x) for x in rad.convolve_vector(v)]
    p = np.array(v)
    k = np.arange(len(p))
    y = (k - n * float(ell)) / math.sqrt(n)
    F = np.cumsum(p)
    Phi = stats.norm.cdf(y, scale=math.sqrt(float(sigma2)))
    m = p > 0
    return float(max(np.max(np.abs(F - Phi)[m]), np.max(np.abs(F - p - Phi)[m])))


# --------------------------------------------------------------------------
# quasi-harmonic functions and martingale diagnostics


@dataclass
class QuasiHarmonicFunction:
    """A function on the group, right quasi-harmonic with constant ``ell``.

    ``kind`` selects a vectorized evaluator for sampled walks:
    ``"word_length"``, ``"linear"`` (lattice, ``coefficients``),
    ``"constant"`` or ``"generic"`` (``evaluate`` applied along each path).
    ``exclude_identity`` marks functions that are quasi-harmonic only away
    from ``e``; steps leaving ``e`` are then left out of every statistic.
    """

    evaluate: Callable
    ell: Fraction | float
    kind: str = "generic"
    coefficients: tuple = ()
    exclude_identity: bool = False
    name: str = "phi"

    @classmethod
    def word_length(cls, group: FreeGroup, ell=Fraction(1, 2)) -> "QuasiHarmonicFunction":
        return cls(group._len, ell, "word_length", exclude_identity=True, name="word length")

    @classmethod
    def linear(cls, group: Lattice, coefficients) -> "QuasiHarmonicFunction":
        c = tuple(int(x) for x in coefficients)
        return cls(lambda g: sum(a * b for a, b in zip(c, g)), Fraction(0), "linear", c, name="linear")

    @classmethod
    def constant(cls, value=0) -> "QuasiHarmonicFunction":
        return cls(lambda g: value, Fraction(0), "constant", (value,), name="constant")


def right_defect(phi: QuasiHarmonicFunction, mu: FiniteMeasure, g) -> Fraction:
    """``int phi(g s) dmu(s) - phi(g) - ell``."""
    G = mu.group
    return sum((w * Fraction(phi.evaluate(G._mul(g, s))) for s, w in mu.items()), Fraction(0)) - Fraction(phi.evaluate(g)) - Fraction(phi.ell)


def quasi_harmonic_precheck(phi: QuasiHarmonicFunction, mu: FiniteMeasure, radius: int = 5) -> int:
    """Verify right quasi-harmonicity on ``B_radius`` (minus ``e`` if excluded); returns the count checked."""
    G = mu.group
    checked = 0
    for g in G.ball(radius):
        if phi.exclude_identity and g == G.identity:
            continue
        d = right_defect(phi, mu, g)
        if d != 0:
            raise QuasiHarmonicityError(f"{phi.name} is not right quasi-harmonic at {G.format(g)} (defect {d})", witness=g)
        checked += 1
    return checked


def left_lipschitz_profile(phi: QuasiHarmonicFunction, mu: FiniteMeasure, radius: int = 5) -> dict:
    """``rho_phi(g) = max_{s in B_m} |phi(s g) - phi(s)|`` for ``g`` in the support of ``mu``."""
    G = mu.group
    ball = G.ball(radius)
    return {g: max(abs(Fraction(phi.evaluate(G._mul(s, g))) - Fraction(phi.evaluate(s))) for s in ball) for g in mu.support}


def _values(phi: QuasiHarmonicFunction, mu: FiniteMeasure, idx: np.ndarray):
    """``phi(z_j)`` and ``|z_j|`` along every sampled path."""
    G = mu.group
    if isinstance(G, FreeGroup):
        lengths = free_lengths(mu, idx)
    else:
        pos = lattice_positions(mu, idx)
        lengths = np.abs(pos).sum(axis=2)
    if phi.kind == "word_length":
        return lengths.astype(float), lengths
    if phi.kind == "constant":
        return np.full(lengths.shape, float(phi.coefficients[0] if phi.coefficients else 0)), lengths
    if phi.kind == "linear":
        return (pos @ np.array(phi.coefficients, dtype=np.int64)).astype(float), lengths
    sampler = StepSampler.of(mu)
    vals = np.empty(lengths.shape)
    for i in range(idx.shape[0]):
        z = G.identity
        vals[i, 0] = float(phi.evaluate(z))
        for k, a in enumerate(idx[i]):
            z = G._mul(z, sampler.atoms[a])
            vals[i, k + 1] = float(phi.evaluate(z))
    return vals, lengths


@dataclass
class MartingaleDiagnostics:
    n: int
    samples: int
    checked_ball: int
    bins: list  # (label, count, mean, stderr, ok)
    increments_centered: bool
    quadratic_variation: float
    quadratic_variation_std: float
    psi: dict  # n' -> mean of psi_{n'}
    psi_bound: dict  # n' -> (n'^{-eps/2} int (rho + |ell|)^{2+eps} dmu)^{1/(2+eps)}
    epsilon: float
    excluded_steps: int

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def martingale_check(
    phi: QuasiHarmonicFunction,
    mu: FiniteMeasure,
    n: int,
    samples: int,
    seed: int,
    epsilon: float = 1.0,
    precheck_radius: int = 5,
    stream: int = 0,
    threads: int = 1,
) -> MartingaleDiagnostics:
    """Diagnostics for ``M_k = phi(z_k) - k ell``.

    (i) increments ``D_j = phi(z_{j+1}) - phi(z_j) - ell`` averaged within bins
    of ``|z_j|`` must vanish within 3 standard errors; (ii) the per-path
    quadratic variation ``mean_j D_j^2``; (iii) ``psi_n = max_j |D_j| / sqrt(n)``
    against the moment bound.
    """
    checked = quasi_harmonic_precheck(phi, mu, precheck_radius)
    idx = draw_indices(mu, n, samples, seed, stream, threads=threads)
    vals, lengths = _values(phi, mu, idx)
    D = np.diff(vals, axis=1) - float(phi.ell)
    at_z = lengths[:, :-1]
    keep = np.ones_like(D, dtype=bool)
    if phi.exclude_identity:
        keep = at_z != 0
    excluded = int((~keep).sum())

    bins = []
    edges = [1, 2, 4, 8, 16, 32, 64, 128, 256, 512, 10**9]
    if not phi.exclude_identity:
        edges = [0] + edges
    ok_all = True
    for lo, hi in zip(edges, edges[1:]):
        sel = keep & (at_z >= lo) & (at_z < hi)
        cnt = int(sel.sum())
        if cnt < 30:
            continue
        x = D[sel]
        m = float(x.mean())
        se = float(x.std(ddof=1) / math.sqrt(cnt))
        ok = abs(m) <= 3 * se if se > 0 else abs(m) < 1e-12
        ok_all &= ok
        bins.append((f"[{lo},{hi})", cnt, m, se, ok))

    D2 = np.where(keep, D * D, 0.0)
    per_path = D2.sum(axis=1) / np.maximum(keep.sum(axis=1), 1)
    absD = np.where(keep, np.abs(D), 0.0)

    rho = left_lipschitz_profile(phi, mu, precheck_radius)
    moment = sum(float(w) * (float(rho[g]) + abs(float(phi.ell))) ** (2 + epsilon) for g, w in mu.items())
    psi, bound = {}, {}
    for m_ in sorted({max(2, n // 4), max(2, n // 2), n}):
        psi[m_] = float(np.mean(absD[:, 1:m_].max(axis=1) if m_ > 1 else 0.0) / math.sqrt(m_))
        bound[m_] = (m_ ** (-epsilon / 2) * moment) ** (1 / (2 + epsilon))
    return MartingaleDiagnostics(
        n=n,
        samples=samples,
        checked_ball=checked,
        bins=bins,
        increments_centered=ok_all,
        quadratic_variation=float(per_path.mean()),
        quadratic_variation_std=float(per_path.std()),
        psi=psi,
        psi_bound=bound,
        epsilon=epsilon,
        excluded_steps=excluded,
    )


# --------------------------------------------------------------------------
# neglect ratio


@dataclass
class NeglectReport:
    ell: Fraction
    ratios: list  # (a_n - n ell)/sqrt(n), n = 1..N
    limit_estimate: float  # A in the fit ratio ~ A + B/sqrt(n) on the second half
    decreasing_tail: bool
    vanishes: bool

    def to_dict(self) -> dict:
        return {
            "ell": str(self.ell),
            "ratios": [float(r) for r in self.ratios],
            "limit_estimate": self.limit_estimate,
            "decreasing_tail": self.decreasing_tail,
            "vanishes": self.vanishes,
        }


def neglect_check(mu: FiniteMeasure, N: int, ell=None, threshold: float = 0.1) -> NeglectReport:
    """``(a_n - n ell)/sqrt(n)`` for ``n <= N`` from exact drift terms.

    The ratio tends to 0 exactly when ``a_n - n ell = o(sqrt n)``; the
    limit is estimated by a least-squares fit ``A + B/sqrt(n)`` over the
    second half of the range and the check passes when ``|A| < threshold``.
    """
    rep = drift_report(mu, N)
    ell = rep.increment_estimate if ell is None else Fraction(ell)
    ratios = [(rep.a[n] - n * ell) / math.sqrt(n) for n in range(1, N + 1)]
    half = list(range(max(1, N // 2), N + 1))
    X = np.column_stack([np.ones(len(half)), [1 / math.sqrt(n) for n in half]])
    y = np.array([float(ratios[n - 1]) for n in half])
    A, _ = np.linalg.lstsq(X, y, rcond=None)[0]
    tail = [abs(float(r)) for r in ratios[N // 2 :]]
    decreasing = all(b <= a + 1e-15 for a, b in zip(tail[::2], tail[2::2]))
    return NeglectReport(ell, ratios, float(A), decreasing, abs(A) < threshold)


__all__ = [
    "CltReport",
    "MartingaleDiagnostics",
    "NeglectReport",
    "QuasiHarmonicFunction",
    "StepSampler",
    "WalkSample",
    "clt_experiment",
    "draw_indices",
    "final_lengths",
    "free_lengths",
    "lattice_positions",
    "left_lipschitz_profile",
    "martingale_check",
    "neglect_check",
    "population_ks",
    "quasi_harmonic_precheck",
    "right_defect",
    "sample_walk",
    "walk_lengths",
]
