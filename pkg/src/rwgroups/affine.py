"""Affine isometric actions on R^d and the harmonic functions they produce.

An action is given by an orthogonal matrix ``π(s)`` and a vector ``b(s)`` for
each positive generator ``s``.  Inverses follow from ``b(s^{-1}) =
-π(s)^T b(s)`` and words are evaluated with the cocycle rule
``b(gh) = b(g) + π(g) b(h)``, so every derived value is a genuine action.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.stats import special_ortho_group

from .errors import HarmonicityError, NonSymmetricMeasure, ParseError, StructuralError
from .groups import FreeGroup, Group, Lattice
from .measures import FiniteMeasure

ORTHOGONALITY_TOL = 1e-12
SOLVE_TOL = 1e-10
HARMONICITY_TOL = 1e-9


class AffineIsometricAction:
    """``α(g)x = π(g)x + b(g)`` for a free group or a lattice."""

    def __init__(self, group: Group, linear: Sequence, translation: Sequence, check: bool = True):
        self.group = group
        n_gens = group.rank if isinstance(group, FreeGroup) else group.dimension
        if len(linear) != n_gens or len(translation) != n_gens:
            raise StructuralError(f"{group.descriptor()} needs {n_gens} generator(s), got {len(linear)}")
        self.linear = [np.array(m, dtype=float) for m in linear]
        self.translation = [np.array(v, dtype=float).reshape(-1) for v in translation]
        d = self.linear[0].shape[0]
        self.dimension = d
        for m, v in zip(self.linear, self.translation):
            if m.shape != (d, d) or v.shape != (d,):
                raise StructuralError("matrices must be d x d and vectors of length d")
        if check:
            err = self.orthogonality_error()
            if err > ORTHOGONALITY_TOL:
                raise StructuralError(f"linear part is not orthogonal (error {err:.3e})")
            if isinstance(group, Lattice):
                comm = self.commutation_error()
                if comm > ORTHOGONALITY_TOL:
                    raise StructuralError(f"lattice generators do not commute (error {comm:.3e})")
        self._cache: dict = {}

    # --- constructors -------------------------------------------------------
    @classmethod
    def translation_Z(cls, step: float = 1.0) -> "AffineIsometricAction":
        return cls(Lattice(1), [[[1.0]]], [[step]])

    @classmethod
    def rotation_Z(cls, theta: float, v) -> "AffineIsometricAction":
        c, s = np.cos(theta), np.sin(theta)
        return cls(Lattice(1), [[[c, -s], [s, c]]], [v])

    @classmethod
    def random(cls, group: FreeGroup, dimension: int, seed: int = 0, scale: float = 1.0) -> "AffineIsometricAction":
        """Haar-random rotations and Gaussian translations, one per generator."""
        rng = np.random.default_rng(seed)
        mats = [special_ortho_group.rvs(dimension, random_state=rng) for _ in range(group.rank)]
        vecs = [scale * rng.standard_normal(dimension) for _ in range(group.rank)]
        return cls(group, mats, vecs)

    # --- evaluation ---------------------------------------------------------
    def orthogonality_error(self) -> float:
        eye = np.eye(self.dimension)
        return max(float(np.abs(m.T @ m - eye).max()) for m in self.linear)

    def commutation_error(self) -> float:
        out = 0.0
        for i, m in enumerate(self.linear):
            for n in self.linear[i + 1 :]:
                out = max(out, float(np.abs(m @ n - n @ m).max()))
        return out

    def _letters(self, g) -> list:
        """Signed generator letters spelling ``g``."""
        g = self.group.element(g)
        if isinstance(self.group, FreeGroup):
            return list(g)
        out = []
        for i, k in enumerate(g):
            out.extend([(i + 1) if k > 0 else -(i + 1)] * abs(k))
        return out

    def _letter(self, x: int):
        m, v = self.linear[abs(x) - 1], self.translation[abs(x) - 1]
        if x > 0:
            return m, v
        return m.T, -(m.T @ v)

    def parts(self, g) -> tuple[np.ndarray, np.ndarray]:
        """``(π(g), b(g))`` via the cocycle rule, composing left to right."""
        key = self.group.element(g)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        P = np.eye(self.dimension)
        b = np.zeros(self.dimension)
        for x in self._letters(key):
            m, v = self._letter(x)
            b = b + P @ v
            P = P @ m
        self._cache[key] = (P, b)
        return P, b

    def pi(self, g) -> np.ndarray:
        return self.parts(g)[0]

    def b(self, g) -> np.ndarray:
        return self.parts(g)[1]

    def __call__(self, g, x) -> np.ndarray:
        P, b = self.parts(g)
        return P @ np.asarray(x, dtype=float) + b

    evaluate = __call__

    def cocycle_error(self, g, h) -> float:
        """``‖b(gh) - b(g) - π(g)b(h)‖_∞``."""
        gh = self.group.multiply(self.group.element(g), self.group.element(h))
        return float(np.abs(self.b(gh) - self.b(g) - self.pi(g) @ self.b(h)).max())

    # --- serialisation ---------------------------------------------------------
    def to_text(self) -> str:
        lines = [str(self.dimension)]
        names = [self.group.format(s) for s in self.group.generators[::2]]
        for name, m, v in zip(names, self.linear, self.translation):
            lines.append(name)
            lines.extend(" ".join(repr(float(x)) for x in row) for row in m)
            lines.append(" ".join(repr(float(x)) for x in v))
        return "\n".join(lines) + "\n"


def parse_action(text: str, group: Group | None = None) -> AffineIsometricAction:
    """Read the action file format.

    The first line is the dimension ``d``.  Each generator follows as an
    optional label line, ``d`` matrix rows and one translation row, all
    whitespace separated decimals.  ``#`` starts a comment.  Without a
    ``group`` the free group on as many generators as blocks is used.
    """
    rows = []
    for ln in text.splitlines():
        ln = ln.split("#", 1)[0].strip()
        if ln:
            rows.append(ln)
    if not rows:
        raise ParseError("empty action file")
    try:
        d = int(rows[0])
    except ValueError:
        raise ParseError(f"first line must be the dimension, got {rows[0]!r}") from None
    mats, vecs = [], []
    i = 1
    while i < len(rows):
        if not _is_numeric(rows[i]):
            i += 1
        block = rows[i : i + d + 1]
        if len(block) < d + 1:
            raise ParseError(f"generator block {len(mats) + 1} is truncated")
        try:
            nums = [[float(x) for x in r.split()] for r in block]
        except ValueError as exc:
            raise ParseError(f"bad number in generator block {len(mats) + 1}: {exc}") from None
        if any(len(r) != d for r in nums):
            raise ParseError(f"generator block {len(mats) + 1} rows must have {d} entries")
        mats.append(nums[:d])
        vecs.append(nums[d])
        i += d + 1
    group = group or FreeGroup(len(mats))
    try:
        return AffineIsometricAction(group, mats, vecs)
    except StructuralError as exc:
        raise ParseError(str(exc)) from None


def _is_numeric(row: str) -> bool:
    try:
        [float(x) for x in row.split()]
        return True
    except ValueError:
        return False


# --- energy ---------------------------------------------------------------------


def _weights(mu: FiniteMeasure) -> list:
    return [(g, float(w)) for g, w in mu.items()]


def energy(action: AffineIsometricAction, mu: FiniteMeasure, x) -> float:
    """``E(x) = ∫ ‖α(s)x - x‖² dμ(s)``."""
    x = np.asarray(x, dtype=float)
    return float(sum(w * np.sum((action(s, x) - x) ** 2) for s, w in _weights(mu)))


def displacement(action: AffineIsometricAction, mu: FiniteMeasure, x) -> np.ndarray:
    """``∫ (x - α(s)x) dμ(s)``."""
    x = np.asarray(x, dtype=float)
    return sum((w * (x - action(s, x)) for s, w in _weights(mu)), np.zeros(action.dimension))


def energy_gradient(action: AffineIsometricAction, mu: FiniteMeasure, x) -> np.ndarray:
    """``4 ∫ (x - α(s)x) dμ(s)``, the gradient of ``E`` for symmetric ``μ``."""
    return 4.0 * displacement(action, mu, x)


def gradient_check(action, mu, points: int = 10, seed: int = 0, h: float = 1e-3) -> list:
    """Relative errors between central differences of ``E`` and the closed form.

    One random point and one random unit direction per trial.
    """
    _require_symmetric(mu)
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(points):
        x = rng.standard_normal(action.dimension)
        v = rng.standard_normal(action.dimension)
        v /= np.linalg.norm(v)
        fd = (energy(action, mu, x + h * v) - energy(action, mu, x - h * v)) / (2 * h)
        exact = float(v @ energy_gradient(action, mu, x))
        out.append(abs(fd - exact) / max(abs(exact), 1e-300))
    return out


def _require_symmetric(mu: FiniteMeasure):
    if not mu.is_symmetric():
        raise NonSymmetricMeasure("the energy identity needs a symmetric measure")


@dataclass
class EnergySolution:
    x_o: np.ndarray
    residual: np.ndarray
    y: np.ndarray
    status: str
    rank: int
    singular_values: np.ndarray = field(repr=False)

    @property
    def residual_norm(self) -> float:
        return float(np.linalg.norm(self.residual))

    def to_dict(self) -> dict:
        return {
            "x_o": [float(v) for v in self.x_o],
            "y": [float(v) for v in self.y],
            "residual": [float(v) for v in self.residual],
            "residual_norm": self.residual_norm,
            "status": self.status,
            "rank": self.rank,
        }


def minimize_energy(action: AffineIsometricAction, mu: FiniteMeasure, tol: float = SOLVE_TOL,
                    probe_radius: int = 3) -> EnergySolution:
    """Solve ``(I - Σ μ(s)π(s)) x = Σ μ(s) b(s)``.

    Singular systems get the minimum-norm least-squares solution: status
    ``least-squares`` if it still solves the system to ``tol``, otherwise
    ``no-solution``.  The residual is re-evaluated from the action itself.
    ``y`` is the leading direction of the orbit ``{α(g)x_o - x_o}`` over
    ``B_probe_radius``, a heuristic choice for a non-constant ``f``.
    """
    _require_symmetric(mu)
    d = action.dimension
    A = np.eye(d)
    c = np.zeros(d)
    for s, w in _weights(mu):
        P, b = action.parts(s)
        A -= w * P
        c += w * b
    x, _, rank, sv = np.linalg.lstsq(A, c, rcond=None)
    residual = displacement(action, mu, x)
    if rank == d:
        status = "unique"
    elif np.linalg.norm(residual) <= tol:
        status = "least-squares"
    else:
        status = "no-solution"
    orbit = np.array([action(g, x) - x for g in action.group.ball(probe_radius)])
    if np.abs(orbit).max() > 0:
        y = np.linalg.svd(orbit)[2][0]
        y = y if y[np.argmax(np.abs(y))] > 0 else -y
    else:
        y = np.eye(d)[0]
    return EnergySolution(x, residual, y, status, int(rank), sv)


# --- harmonic functions ------------------------------------------------------------


@dataclass
class HarmonicityTable:
    radius: int
    max_residual: float
    witness: tuple
    rows: list

    @property
    def holds(self) -> bool:
        return self.max_residual <= HARMONICITY_TOL


class HarmonicFunction:
    """``f(g) = <y, α(g) x_o>``."""

    def __init__(self, action: AffineIsometricAction, x_o, y):
        self.action = action
        self.x_o = np.asarray(x_o, dtype=float)
        self.y = np.asarray(y, dtype=float)

    def __call__(self, g) -> float:
        return float(self.y @ self.action(g, self.x_o))

    def right_harmonicity(self, mu: FiniteMeasure, radius: int = 5, tol: float = HARMONICITY_TOL,
                          strict: bool = True) -> HarmonicityTable:
        """``max_{g ∈ B_radius} |∫ f(gs) dμ(s) - f(g)|``; raises past ``tol`` when strict."""
        G = self.action.group
        ws = _weights(mu)
        scale = max(1.0, float(np.linalg.norm(self.y)))
        rows = []
        worst, witness = 0.0, G.identity
        for g in G.ball(radius):
            avg = sum(w * self(G._mul(g, s)) for s, w in ws)
            r = abs(avg - self(g))
            rows.append((g, self(g), avg, r))
            if r > worst:
                worst, witness = r, g
        table = HarmonicityTable(radius, worst, witness, rows)
        if strict and worst > tol * scale:
            raise HarmonicityError(
                f"right harmonicity fails at {G.format(witness)} by {worst:.3e}", witness=witness
            )
        return table

    def lipschitz_check(self, pairs) -> float:
        """Largest ``|f(sg) - f(s)| - ‖y‖(2‖x_o‖ + ‖b(g)‖)``; nonpositive when the bound holds."""
        G = self.action.group
        ny, nx = np.linalg.norm(self.y), np.linalg.norm(self.x_o)
        worst = -np.inf
        for s, g in pairs:
            lhs = abs(self(G._mul(s, g)) - self(s))
            rhs = ny * (2 * nx + np.linalg.norm(self.action.b(g)))
            worst = max(worst, lhs - rhs)
        return float(worst)

    def growth_probe(self, radius: int) -> list:
        """``max_{B_n} |f|`` for ``n = 0..radius``."""
        G = self.action.group
        out, m = [], 0.0
        for n in range(radius + 1):
            for g in G.sphere(n):
                m = max(m, abs(self(g)))
            out.append(m)
        return out


def harmonic_function(action: AffineIsometricAction, x_o, y) -> HarmonicFunction:
    return HarmonicFunction(action, x_o, y)


# --- fixed vectors -------------------------------------------------------------------


def _null_space(M: np.ndarray, tol: float) -> np.ndarray:
    """Orthonormal basis (columns) of ``{v : ‖Mv‖ <= tol‖v‖}``."""
    _, s, vt = np.linalg.svd(M)
    s = np.concatenate([s, np.zeros(vt.shape[0] - len(s))])
    return vt[s <= tol].T


@dataclass
class FixedVectorReport:
    averaged_basis: np.ndarray
    common_basis: np.ndarray
    violations: list
    max_deviation: float

    @property
    def dimension(self) -> int:
        return self.averaged_basis.shape[1]

    @property
    def common_dimension(self) -> int:
        return self.common_basis.shape[1]

    @property
    def consistent(self) -> bool:
        return not self.violations and self.dimension == self.common_dimension


def averaged_operator(linear: Callable, mu: FiniteMeasure) -> np.ndarray:
    return sum(float(w) * linear(s) for s, w in mu.items())


def fixed_vector_check(action: AffineIsometricAction, mu: FiniteMeasure, tol: float = SOLVE_TOL) -> FixedVectorReport:
    """Eigenvalue-1 space of ``π(μ) = Σ μ(s)π(s)`` against the common fixed space.

    Only the linear part of ``action`` is used.  Every basis vector of the
    first space is tested against each ``π(s)``, ``s ∈ supp μ``; a failing
    pair is listed in ``violations``.
    """
    d = action.dimension
    P = averaged_operator(action.pi, mu)
    avg = _null_space(P - np.eye(d), tol)
    support = sorted(mu.support)
    stacked = np.vstack([action.pi(s) - np.eye(d) for s in support])
    common = _null_space(stacked, tol)
    violations, worst = [], 0.0
    for j in range(avg.shape[1]):
        v = avg[:, j]
        for s in support:
            dev = float(np.linalg.norm(action.pi(s) @ v - v))
            worst = max(worst, dev)
            if dev > tol:
                violations.append((j, s, dev))
    return FixedVectorReport(avg, common, violations, worst)


def rotation_about(axis, theta: float) -> np.ndarray:
    """The rotation of R^3 by ``theta`` about ``axis`` (Rodrigues)."""
    k = np.asarray(axis, dtype=float)
    k = k / np.linalg.norm(k)
    K = np.array([[0, -k[2], k[1]], [k[2], 0, -k[0]], [-k[1], k[0], 0]])
    return np.eye(3) + np.sin(theta) * K + (1 - np.cos(theta)) * (K @ K)


__all__ = [
    "AffineIsometricAction",
    "parse_action",
    "energy",
    "displacement",
    "energy_gradient",
    "gradient_check",
    "EnergySolution",
    "minimize_energy",
    "HarmonicFunction",
    "HarmonicityTable",
    "harmonic_function",
    "FixedVectorReport",
    "averaged_operator",
    "fixed_vector_check",
    "rotation_about",
]
