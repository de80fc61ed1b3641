"""Command-line front end: one subcommand per computation.

Exit codes: 0 when the computation finished and its check (if any) passed,
2 when a window- or cap-limited statement is inconclusive, 1 on errors and
on refuted checks.  Data go to ``--out`` (or stdout) as CSV or JSON; a
one-line summary goes to stderr.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path

from . import __version__
from .errors import (
    CapExceeded,
    DepthError,
    NoContractionCertificate,
    ParseError,
    QuasiHarmonicityError,
    RandomWalkError,
    Status,
    StructuralError,
)
from .groups import FreeGroup, parse_group
from .io import format_value, load_measure, to_csv, to_json

THREADS_ENV = "RWGROUPS_THREADS"

EXIT_OK, EXIT_ERROR, EXIT_INCONCLUSIVE = 0, 1, 2


@dataclass
class ExperimentConfig:
    """Everything that determines a run; serialises to JSON and back losslessly."""

    command: str
    group: str = "free:2"
    measure: str = "srw"
    params: dict = field(default_factory=dict)
    seed: int = 0
    threads: int = 1
    format: str = "csv"
    out: str | None = None

    def to_text(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_text(cls, text: str) -> "ExperimentConfig":
        try:
            return cls(**json.loads(text))
        except (json.JSONDecodeError, TypeError) as exc:
            raise ParseError(f"malformed config: {exc}") from None


@dataclass
class Outcome:
    summary: str
    header: list | None = None
    rows: list | None = None
    report: dict | None = None
    status: int = EXIT_OK


# --- handlers ------------------------------------------------------------------


def _group_measure(cfg):
    G = parse_group(cfg.group)
    return G, load_measure(cfg.measure, G)


def _free(cfg) -> FreeGroup:
    G = parse_group(cfg.group)
    if not isinstance(G, FreeGroup):
        raise StructuralError(f"{cfg.command} needs a free group, got {cfg.group}")
    return G


def run_drift(cfg):
    from .measures import drift_report

    _, mu = _group_measure(cfg)
    rep = drift_report(mu, cfg.params["N"])
    rows = list(rep.rows())
    inc = rep.increment_estimate
    return Outcome(
        f"drift increment ≈ {float(inc):.4f} (a_N/N = {float(rep.a[-1] / rep.N):.4f})",
        ["n", "a_n", "a_n_over_n", "increment"],
        rows,
        {"a": rep.a, "increment": inc, "fekete_bound": rep.fekete_bound,
         "subadditivity_violations": rep.subadditivity_violations()},
    )


def run_entropy(cfg):
    from .measures import entropy_report

    _, mu = _group_measure(cfg)
    rep = entropy_report(mu, cfg.params["N"])
    rows = [(n, rep.H[n], rep.H[n] - rep.H[n - 1], rep.H[n] / n) for n in range(1, rep.N + 1)]
    return Outcome(
        f"Avez entropy increment ≈ {rep.increment_estimate:.4f}",
        ["n", "H_n", "increment", "H_n_over_n"],
        rows,
        {"H": rep.H, "increment": rep.increment_estimate, "subadditivity_violations": rep.subadditivity_violations()},
    )


def run_growth(cfg):
    G = parse_group(cfg.group)
    N = cfg.params["N"]
    sizes = [G.power_set_size(n) for n in range(N + 1)]
    rows = [(n, sizes[n], math.log(sizes[n]) / n, math.log(sizes[n]) - math.log(sizes[n - 1])) for n in range(1, N + 1)]
    return Outcome(
        f"volume growth increment ≈ {rows[-1][3]:.4f}",
        ["n", "power_set_size", "log_size_over_n", "increment"],
        rows,
        {"sizes": sizes},
    )


def run_fundamental(cfg):
    from .measures import fundamental_inequality

    _, mu = _group_measure(cfg)
    fi = fundamental_inequality(mu, cfg.params["N"], cfg.params["tolerance"])
    rep = {"h": fi.h, "v": fi.v, "ell": fi.ell, "v_times_ell": fi.v * fi.ell, "slack": fi.slack,
           "tolerance": fi.tolerance, "holds": fi.holds}
    return Outcome(
        f"fundamental inequality h ≤ v·ℓ: h = {fi.h:.4f}, v·ℓ = {fi.v * fi.ell:.4f}, "
        + ("holds" if fi.holds else "not observed at this N"),
        ["h", "v", "ell", "slack", "holds"],
        [(fi.h, fi.v, fi.ell, fi.slack, fi.holds)],
        rep,
        EXIT_OK if fi.holds else EXIT_INCONCLUSIVE,
    )


def run_quasiharmonic(cfg):
    from .measures import quasi_harmonic_profile

    G, mu = _group_measure(cfg)
    rows = []
    for text in cfg.params["element"]:
        g = G.parse(text)
        d = quasi_harmonic_profile(mu, g, cfg.params["N"])
        rows.append((G.format(g), d["length"], d["value"], d["ell_hat"], d["residual"], d["lipschitz_witness"]))
    return Outcome(
        f"Cesàro quasi-harmonic profile: ℓ̂ = {float(rows[0][3]):.4f}",
        ["g", "length", "value", "ell_hat", "residual", "lipschitz_witness"],
        rows,
    )


def run_boundary_rn(cfg):
    from .boundary import rn_closed_form, rn_vector

    G = _free(cfg)
    depth, radius = cfg.params["depth"], cfg.params["radius"]
    if depth <= radius:
        raise DepthError("depth must exceed the radius")
    words = G.sphere(depth)
    rows, mismatches = [], 0
    for g in G.ball(radius):
        for w, v in zip(words, rn_vector(g, depth, G.rank)):
            if v != rn_closed_form(g, w, G.rank):
                mismatches += 1
            rows.append((G.format(g), G.format(w), v.numerator, v.denominator))
    ok = mismatches == 0
    return Outcome(
        f"Radon–Nikodym cocycle σ(g,ξ): {len(rows)} values, closed form "
        + ("exact" if ok else f"violated {mismatches} times"),
        ["g", "cylinder", "num", "den"],
        rows,
        {"mismatches": mismatches},
        EXIT_OK if ok else EXIT_ERROR,
    )


def run_boundary_sat(cfg):
    from .boundary import Cylinder, sat_certificate

    G = _free(cfg)
    cyl = Cylinder(G.parse(cfg.params["cylinder"]), G.rank)
    c = sat_certificate(cyl, cfg.params["n"])
    rep = {"cylinder": str(cyl), "n": cfg.params["n"], "element": G.format(c.element), "measure": c.measure,
           "bound": c.bound, "holds": c.holds}
    return Outcome(
        f"SAT certificate: m(g·cyl({cyl})) = {format_value(c.measure)} ≥ {format_value(c.bound)}: {c.holds}",
        list(rep), [list(rep.values())], rep,
        EXIT_OK if c.holds else EXIT_ERROR,
    )


def run_boundary_cocycle(cfg):
    from .boundary import harmonicity_check

    G, mu = _group_measure(cfg)
    if not isinstance(G, FreeGroup):
        raise StructuralError("boundary-cocycle needs a free group")
    rows = []
    for n in range(1, cfg.params["n"] + 1):
        r = harmonicity_check(n, cfg.params["depth"], G.rank, mu)
        rows.append((n, r.depth, r.holds, r.worst))
    ok = all(r[2] for r in rows)
    return Outcome(
        f"cocycle harmonicity ∫σ(g,·)dμ^n(g) = 1 for n ≤ {cfg.params['n']}: " + ("exact" if ok else "violated"),
        ["n", "depth", "holds", "worst"], rows, None,
        EXIT_OK if ok else EXIT_ERROR,
    )


def run_besov_tau(cfg):
    from .besov import contraction_factor

    G, mu = _group_measure(cfg)
    eps = Fraction(cfg.params["eps"])
    c = contraction_factor(eps, cfg.params["n"], mu, G.rank)
    return Outcome(
        f"tau = {format_value(float(c.tau))}",
        ["epsilon", "n", "tau", "argmax_cylinder"],
        [(eps, c.n, c.tau, c.argmax)],
    )


def run_besov_solve(cfg):
    from .besov import solve_cohomological
    from .boundary import Cylinder, CylinderFunction

    G, mu = _group_measure(cfg)
    cyl = Cylinder(G.parse(cfg.params["cylinder"]), G.rank)
    psi = CylinderFunction.indicator(cyl) - cyl.measure()
    sol = solve_cohomological(psi, Fraction(cfg.params["eps"]), cfg.params["tol"], mu, cfg.params["depth"])
    rep = sol.to_dict()
    rep["cylinder"] = str(cyl)
    rows = [(G.format(w), v) for w, v in zip(sol.u.space.words, sol.u.values)]
    return Outcome(
        f"cohomological equation u − Qu = ψ: residual = {sol.residual:.3e}, certified tail ≤ {sol.series_tail_bound:.3e}",
        ["cylinder", "u"], rows, rep,
        EXIT_OK if sol.converged and sol.residual <= cfg.params["tol"] else EXIT_INCONCLUSIVE,
    )


def run_besov_current(cfg):
    from .besov import current_equivariance_check

    G = _free(cfg)
    rows = []
    for text in cfg.params["element"]:
        g = G.parse(text)
        bad = current_equivariance_check(g, cfg.params["depth"], G.rank)
        rows.append((G.format(g), cfg.params["depth"], len(bad)))
    ok = all(r[2] == 0 for r in rows)
    return Outcome(
        "product current equivariance: " + ("exact" if ok else "violated"),
        ["g", "depth", "violations"], rows, None,
        EXIT_OK if ok else EXIT_ERROR,
    )


def run_clt(cfg):
    from .clt import clt_experiment

    _, mu = _group_measure(cfg)
    p = cfg.params
    rep, lengths, Y = clt_experiment(mu, p["n"], p["samples"], cfg.seed, ell=p.get("ell"),
                                     threads=cfg.threads, return_samples=True)
    rows = [(i, int(lengths[i]), float(Y[i])) for i in range(len(Y))]
    ks = rep.ks_reference if rep.ks_reference is not None else rep.ks_fitted
    return Outcome(
        f"CLT Y_n: sigma2_hat = {rep.sigma2_hat:.4f}, KS = {ks:.4f}",
        ["seed_index", "length", "Yn"], rows, rep.to_dict(),
    )


def run_martingale(cfg):
    from .clt import QuasiHarmonicFunction, martingale_check

    G, mu = _group_measure(cfg)
    p = cfg.params
    if isinstance(G, FreeGroup):
        phi = QuasiHarmonicFunction.word_length(G, Fraction(p["ell"]) if p.get("ell") else Fraction(G.rank - 1, G.rank))
    else:
        coeffs = [int(x) for x in (p.get("coefficients") or "1").split(",")]
        coeffs += [0] * (G.dimension - len(coeffs))
        phi = QuasiHarmonicFunction.linear(G, coeffs[: G.dimension])
    d = martingale_check(phi, mu, p["n"], p["samples"], cfg.seed, threads=cfg.threads)
    rows = [b for b in d.bins]
    return Outcome(
        f"martingale increments centred: {d.increments_centered}, quadratic variation ≈ {d.quadratic_variation:.4f}",
        ["bin", "count", "mean", "stderr", "ok"], rows, d.to_dict(),
        EXIT_OK if d.increments_centered else EXIT_INCONCLUSIVE,
    )


def run_neglect(cfg):
    from .clt import neglect_check

    _, mu = _group_measure(cfg)
    r = neglect_check(mu, cfg.params["N"])
    rows = [(n, x) for n, x in enumerate(r.ratios, start=1)]
    return Outcome(
        f"neglect ratio (a_n − nℓ)/√n → {r.limit_estimate:.4f}: " + ("vanishes" if r.vanishes else "not observed to vanish"),
        ["n", "ratio"], rows, r.to_dict(),
        EXIT_OK if r.vanishes else EXIT_INCONCLUSIVE,
    )


def run_productset_density(cfg):
    from .productsets import parse_setspec, sphere_density

    G = _free(cfg)
    A = parse_setspec(cfg.params["set"], G)
    d = sphere_density(A, cfg.params["m"], G)
    return Outcome(
        f"Cesàro sphere density of {A.text()} = {format_value(d.cesaro)} ({float(d.cesaro):.4f})",
        ["n", "count", "sphere_size", "density", "ball_density"], list(d.rows()),
        {"set": A.text(), "cesaro": d.cesaro},
    )


def run_productset_recursion(cfg):
    from .productsets import recursion_check

    G = _free(cfg)
    rows = [(n, recursion_check(n, G)) for n in range(1, cfg.params["n"] + 1)]
    ok = all(r[1] for r in rows)
    return Outcome(
        f"sphere recursion σ_n*σ_1 for n = 1..{cfg.params['n']}: " + ("exact" if ok else "FAILS"),
        ["n", "exact"], rows, None,
        EXIT_OK if ok else EXIT_ERROR,
    )


def run_productset_thick(cfg):
    from .productsets import parse_setspec, thickness_certificate

    G = _free(cfg)
    T = parse_setspec(cfg.params["set"], G)
    r = thickness_certificate(T, cfg.params["k"], cfg.params["K"], G)
    rows = [(k, G.format(g) if g is not None else "") for k, g in r.rows()]
    return Outcome(
        f"right thickness: translate of B_{r.certified_radius} found in window B_{r.window} ({r.status.value})",
        ["k", "witness"], rows,
        {"set": T.text(), "certified_radius": r.certified_radius, "window": r.window, "status": r.status},
        EXIT_OK if r.status is Status.TRUE else EXIT_INCONCLUSIVE,
    )


def run_folner_z(cfg):
    from .productsets import PeriodicZ, folner_khintchine_Z, parse_setspec

    sets = []
    for text in cfg.params["set"]:
        A = parse_setspec(text)
        if not isinstance(A, PeriodicZ):
            raise ParseError(f"folner-z needs periodic sets (periodic:p:r,...), got {text!r}")
        sets.append(A)
    r = folner_khintchine_Z(sets, cfg.params["bound"])
    rep = {"F": list(r.F), "period": r.period, "differences": sorted(r.differences), "verified": r.verified,
           "status": r.status}
    return Outcome(
        f"F + ⋂(A_i − A_i) = Z with F = {{{', '.join(map(str, r.F))}}} (period {r.period})"
        if r.status is Status.TRUE else f"no F within [-{cfg.params['bound']}, {cfg.params['bound']}] (inconclusive)",
        ["f"], [(f,) for f in r.F], rep,
        EXIT_OK if r.status is Status.TRUE and r.verified else EXIT_INCONCLUSIVE,
    )


def _action(cfg, G):
    from .affine import AffineIsometricAction, parse_action

    path = cfg.params.get("action")
    if path:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ParseError(f"cannot read action file {path!r}: {exc.strerror}") from None
        return parse_action(text, G)
    if not isinstance(G, FreeGroup):
        raise ParseError("random actions need a free group; pass --action for lattices")
    return AffineIsometricAction.random(G, cfg.params["dim"], seed=cfg.seed)


def run_affine_minimize(cfg):
    from .affine import gradient_check, minimize_energy

    G, mu = _group_measure(cfg)
    act = _action(cfg, G)
    sol = minimize_energy(act, mu)
    grads = gradient_check(act, mu, points=10, seed=cfg.seed)
    rep = sol.to_dict()
    rep["gradient_relative_errors"] = grads
    rows = [(i, sol.x_o[i], sol.residual[i], sol.y[i]) for i in range(act.dimension)]
    return Outcome(
        f"energy minimiser ({sol.status}): residual ‖∫(x_o − α(s)x_o)dμ‖ = {sol.residual_norm:.3e}, "
        f"gradient error ≤ {max(grads):.1e}",
        ["coordinate", "x_o", "residual", "y"], rows, rep,
        EXIT_ERROR if sol.status == "no-solution" else EXIT_OK,
    )


def run_affine_check(cfg):
    from .affine import harmonic_function, minimize_energy

    G, mu = _group_measure(cfg)
    act = _action(cfg, G)
    sol = minimize_energy(act, mu)
    f = harmonic_function(act, sol.x_o, sol.y)
    table = f.right_harmonicity(mu, cfg.params["radius"], strict=False)
    rows = [(G.format(g), v, a, r) for g, v, a, r in table.rows]
    rep = {"energy": sol.to_dict(), "max_residual": table.max_residual, "witness": G.format(table.witness),
           "growth": f.growth_probe(cfg.params["radius"])}
    return Outcome(
        f"right μ-harmonicity of f = ⟨y, α(g)x_o⟩ on B_{cfg.params['radius']}: max residual {table.max_residual:.3e}",
        ["g", "f", "right_average", "residual"], rows, rep,
        EXIT_OK if table.holds else EXIT_ERROR,
    )


def run_fixedvector(cfg):
    from .affine import fixed_vector_check

    G, mu = _group_measure(cfg)
    act = _action(cfg, G)
    r = fixed_vector_check(act, mu)
    rows = [(j, *r.averaged_basis[:, j]) for j in range(r.dimension)]
    rep = {"dimension": r.dimension, "common_dimension": r.common_dimension, "max_deviation": r.max_deviation,
           "violations": [(j, G.format(s), d) for j, s, d in r.violations], "consistent": r.consistent}
    return Outcome(
        f"fixed space of π(μ): dimension {r.dimension}, common fixed dimension {r.common_dimension}",
        ["basis_index"] + [f"x{i}" for i in range(act.dimension)], rows, rep,
        EXIT_OK if r.consistent else EXIT_ERROR,
    )


# --- argument parsing ------------------------------------------------------------

COMMANDS = {
    "drift": (run_drift, "exact drift a_n = E|z_n| and increments a_{n+1} - a_n"),
    "entropy": (run_entropy, "Shannon entropy H(mu^n) and its increments (Avez entropy)"),
    "growth": (run_growth, "volume growth log|S^n|/n of the standard generating set"),
    "fundamental": (run_fundamental, "the fundamental inequality h <= v * ell from increment estimators"),
    "quasiharmonic": (run_quasiharmonic, "Cesàro quasi-harmonic profile of the distance function"),
    "boundary-rn": (run_boundary_rn, "Radon-Nikodym cocycle sigma(g, xi) on depth-k cylinders of the boundary"),
    "boundary-sat": (run_boundary_sat, "SAT certificate: g with m(g . cyl(w)) >= 1 - (1/2r)(1/(2r-1))^(n-1)"),
    "boundary-cocycle": (run_boundary_cocycle, "cocycle harmonicity: integral of sigma(g, .) against mu^n equals 1"),
    "besov-tau": (run_besov_tau, "contraction factor tau_{eps,n} of the convolution operator on the Besov seminorm"),
    "besov-solve": (run_besov_solve, "solve the cohomological equation u - Q u = psi for a cylinder indicator"),
    "besov-current": (run_besov_current, "equivariance of the product current under the boundary action"),
    "clt": (run_clt, "Monte Carlo law of Y_n = (|z_n| - n ell)/sqrt(n) against Normal(0, sigma^2)"),
    "martingale": (run_martingale, "martingale diagnostics for phi(z_n) - n ell"),
    "neglect": (run_neglect, "the neglect ratio (a_n - n ell)/sqrt(n)"),
    "productset-density": (run_productset_density, "exact sphere densities |A cap S_n|/|S_n| and their Cesàro mean"),
    "productset-recursion": (run_productset_recursion, "the sphere recursion sigma_n * sigma_1 = 3/4 sigma_{n+1} + 1/4 sigma_{n-1}"),
    "productset-thick": (run_productset_thick, "right thickness certificate: a translate B_k g inside T within B_K"),
    "folner-z": (run_folner_z, "finite F with F + intersection of (A_i - A_i) = Z for periodic A_i"),
    "affine-minimize": (run_affine_minimize, "energy minimiser x_o of an affine isometric action"),
    "affine-check": (run_affine_check, "right mu-harmonicity of f(g) = <y, alpha(g) x_o> on a ball"),
    "fixedvector": (run_fixedvector, "eigenvalue-1 space of pi(mu) against the common fixed space"),
}

DEFAULT_FORMAT = {"besov-solve": "json", "boundary-sat": "json", "folner-z": "json", "affine-minimize": "json",
                  "fixedvector": "json"}


def _default_threads() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--group", default="free:2", help="free:r or lattice:d (default free:2)")
    common.add_argument("--measure", default="srw", help="'srw' or a measure file of '<element> p/q' lines")
    common.add_argument("--seed", type=int, default=0, help="RNG seed (default 0)")
    common.add_argument("--threads", type=int, default=None, help=f"worker threads (default ${THREADS_ENV} or 1)")
    common.add_argument("--format", choices=("csv", "json"), default=None, help="output format")
    common.add_argument("--out", default=None, help="output file (default stdout)")
    common.add_argument("--print-config", action="store_true", help="print the run configuration as JSON and exit")

    parser = argparse.ArgumentParser(prog="rwgroups", description="Random walks on free groups and lattices.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def add(name, *params):
        fn, text = COMMANDS[name]
        p = sub.add_parser(name, parents=[common], help=text, description=text[0].upper() + text[1:] + ".")
        for args, kw in params:
            p.add_argument(*args, **kw)
        return p

    N = (("--N",), {"type": int, "default": 12, "help": "horizon N (default 12)"})
    add("drift", N)
    add("entropy", N)
    add("growth", N)
    add("fundamental", N, (("--tolerance",), {"type": float, "default": 0.02}))
    add("quasiharmonic", N, (("--element",), {"action": "append", "default": None, "help": "element g (repeatable)"}))
    add("boundary-rn", (("--depth",), {"type": int, "default": 5}), (("--radius",), {"type": int, "default": 3}))
    add("boundary-sat", (("--cylinder",), {"default": "ab"}), (("--n",), {"type": int, "default": 5}))
    add("boundary-cocycle", (("--n",), {"type": int, "default": 4}), (("--depth",), {"type": int, "default": 6}))
    add("besov-tau", (("--eps",), {"default": "1/4", "help": "epsilon (rational, default 1/4)"}),
        (("--n",), {"type": int, "default": 1}))
    add("besov-solve", (("--cylinder",), {"default": "a"}), (("--eps",), {"default": "1/4"}),
        (("--tol",), {"type": float, "default": 1e-3}), (("--depth",), {"type": int, "default": 8}))
    add("besov-current", (("--element",), {"action": "append", "default": None}),
        (("--depth",), {"type": int, "default": 6}))
    add("clt", (("--n",), {"type": int, "default": 400}), (("--samples",), {"type": int, "default": 20000}),
        (("--ell",), {"default": None, "help": "drift (default: exact increment estimate)"}))
    add("martingale", (("--n",), {"type": int, "default": 200}), (("--samples",), {"type": int, "default": 2000}),
        (("--ell",), {"default": None}), (("--coefficients",), {"default": None, "help": "lattice: linear functional"}))
    add("neglect", (("--N",), {"type": int, "default": 40}))
    add("productset-density", (("--set",), {"default": "parity:even", "help": "set spec, e.g. annuli:2-3,8-9"}),
        (("--m",), {"type": int, "default": 16}))
    add("productset-recursion", (("--n",), {"type": int, "default": 8}))
    add("productset-thick", (("--set",), {"default": "product:e,a|diff:8|parity:even"}),
        (("--k",), {"type": int, "default": 6}), (("--K",), {"type": int, "default": 8}))
    add("folner-z", (("--set",), {"action": "append", "default": None, "help": "periodic:p:r,... (repeatable)"}),
        (("--bound",), {"type": int, "default": 10}))
    action = (("--action",), {"default": None, "help": "action file (default: random rotations)"})
    dim = (("--dim",), {"type": int, "default": 3})
    add("affine-minimize", action, dim)
    add("affine-check", action, dim, (("--radius",), {"type": int, "default": 5}))
    add("fixedvector", action, dim)
    return parser


_COMMON = {"group", "measure", "seed", "threads", "format", "out", "print_config", "command"}


def config_from_args(ns: argparse.Namespace) -> ExperimentConfig:
    params = {k: v for k, v in vars(ns).items() if k not in _COMMON}
    if ns.command in ("quasiharmonic", "besov-current") and not params.get("element"):
        params["element"] = ["ab"]
    if ns.command == "folner-z" and not params.get("set"):
        params["set"] = ["periodic:2:0", "periodic:3:0"]
    return ExperimentConfig(
        command=ns.command,
        group=ns.group,
        measure=ns.measure,
        params=params,
        seed=ns.seed,
        threads=ns.threads if ns.threads is not None else _default_threads(),
        format=ns.format or DEFAULT_FORMAT.get(ns.command, "csv"),
        out=ns.out,
    )


def render(cfg: ExperimentConfig, res: Outcome) -> str:
    if cfg.format == "json":
        doc = {"command": cfg.command, "config": json.loads(cfg.to_text()), "summary": res.summary}
        if res.report is not None:
            doc["report"] = res.report
        if res.header is not None:
            doc["columns"] = res.header
            doc["rows"] = res.rows
        return to_json(doc)
    if res.header is not None:
        return to_csv(res.header, res.rows)
    return to_csv(["key", "value"], sorted((res.report or {}).items()))


def execute(cfg: ExperimentConfig) -> tuple[int, str, str]:
    """Run a config; returns ``(exit code, output text, summary)``."""
    fn = COMMANDS[cfg.command][0]
    res = fn(cfg)
    return res.status, render(cfg, res), res.summary


_ERRORS = (
    (ParseError, "malformed input"),
    (QuasiHarmonicityError, "harmonicity check failed"),
    (DepthError, "depth error"),
    (CapExceeded, "cap exceeded"),
    (StructuralError, "structural error"),
    (NoContractionCertificate, "no contraction certificate"),
    (RandomWalkError, "error"),
)


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    cfg = config_from_args(ns)
    if ns.print_config:
        print(cfg.to_text())
        return EXIT_OK
    try:
        code, text, summary = execute(cfg)
    except tuple(e for e, _ in _ERRORS) as exc:
        label = next(lbl for e, lbl in _ERRORS if isinstance(exc, e))
        print(f"rwgroups {cfg.command}: {label}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (ValueError, OSError) as exc:
        print(f"rwgroups {cfg.command}: invalid parameters: {exc}", file=sys.stderr)
        return EXIT_ERROR
    if cfg.out:
        Path(cfg.out).write_text(text)
    else:
        sys.stdout.write(text)
    print(summary, file=sys.stderr)
    return code


__all__ = ["ExperimentConfig", "Outcome", "COMMANDS", "build_parser", "config_from_args", "execute", "main"]
