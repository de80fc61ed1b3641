"""Exit criteria, each at its stated tolerance and time budget.

Every criterion prints one ``PASS``/``FAIL`` line (collected again in the
terminal summary).  Run this file directly for the lines alone.
"""

import math
import time
from fractions import Fraction

import numpy as np
import pytest

from rwgroups import FreeGroup, Lattice
from rwgroups.affine import (
    AffineIsometricAction,
    fixed_vector_check,
    gradient_check,
    harmonic_function,
    minimize_energy,
    rotation_about,
)
from rwgroups.besov import contraction_check, contraction_factor, solve_cohomological
from rwgroups.boundary import (
    Cylinder,
    CylinderFunction,
    canonical_semimetric,
    harmonicity_check,
    rn_derivative,
    sat_certificate,
)
from rwgroups.clt import clt_experiment
from rwgroups.measures import FiniteMeasure, drift_report, fundamental_inequality
from rwgroups.productsets import (
    Parity,
    PeriodicZ,
    ProductSet,
    difference_set,
    folner_khintchine_Z,
    recursion_check,
    thickness_certificate,
)

pytestmark = pytest.mark.acceptance

F2 = FreeGroup(2)
SRW = FiniteMeasure.simple_random_walk(F2)
RESULTS: list = []


def verdict(number: int, title: str, ok: bool, detail: str, elapsed: float, budget: float):
    timely = elapsed < budget
    line = f"{'PASS' if ok and timely else 'FAIL'} #{number:<2} {title}: {detail} [{elapsed:.2f}s < {budget:g}s: {timely}]"
    RESULTS.append(line)
    print(line)
    assert ok, line
    assert timely, line


def timed(fn):
    t0 = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t0


def test_01_sphere_recursion():
    res, dt = timed(lambda: [recursion_check(n) for n in range(1, 9)])
    verdict(1, "sphere recursion", all(res), f"exact for n=1..8: {res}", dt, 5)


def test_02_rn_closed_form():
    def run():
        bad = 0
        words = F2.sphere(5)
        for g in F2.ball(3):
            for w in words:
                c = F2.common_prefix(g, w)
                if rn_derivative(g, Cylinder(w)) != Fraction(1, 3) ** (len(g) - 2 * c):
                    bad += 1
        return bad, F2.ball_size(3) * len(words)

    (bad, total), dt = timed(run)
    verdict(2, "RN cocycle closed form", bad == 0, f"{total - bad}/{total} exact", dt, 10)


def test_03_cocycle_harmonicity():
    res, dt = timed(lambda: [harmonicity_check(n, 6) for n in range(1, 5)])
    verdict(3, "cocycle harmonicity", all(r.holds for r in res), f"worst |∫σ dμ^n - 1| = {max(r.worst for r in res)}", dt, 30)


def test_04_canonical_semimetric():
    res, dt = timed(lambda: max(abs(canonical_semimetric(g) - len(g) * math.log(3)) for g in F2.ball(4)))
    verdict(4, "canonical semi-metric", res <= 1e-12, f"max |ρ(g) - |g| ln 3| = {res:.2e}", dt, 10)


def test_05_contraction_factor():
    def run():
        t1 = contraction_factor(Fraction(1, 4), 1).tau
        t0 = contraction_factor(Fraction(0), 1).tau
        t2 = contraction_factor(Fraction(1, 4), 2).tau
        return float(t1), t0, float(t2)

    (t1, t0, t2), dt = timed(run)
    ok = abs(t1 - math.sqrt(3) / 2) <= 1e-12 and t0 == 1 and t2 <= t1**2 + 1e-12
    verdict(5, "contraction factor", ok, f"τ_(1/4,1) = {t1:.15f}, τ_(0,1) = {t0}, τ_(1/4,2) = {t2:.6f} ≤ {t1 ** 2:.6f}", dt, 5)


def test_06_besov_contraction():
    gaps, dt = timed(lambda: contraction_check(Fraction(1, 4), n=1, trials=100, depth=2, seed=0))
    worst = max(float(g) for g in gaps)
    verdict(6, "Besov contraction", worst <= 1e-9, f"max N(Qφ) - τN(φ) over 100 seeded φ = {worst:.4f}", dt, 30)


def test_07_cohomological_solver():
    psi = CylinderFunction.indicator(Cylinder.parse("a")) - Fraction(1, 4)
    sol, dt = timed(lambda: solve_cohomological(psi, Fraction(1, 4), 1e-3))
    ok = sol.residual <= 1e-3 and math.isfinite(sol.series_tail_bound)
    verdict(7, "cohomological solver", ok,
            f"‖u - Qu - ψ‖ = {sol.residual:.2e}, certified tail ≤ {sol.series_tail_bound:.2e} (τ = {sol.tau:.4f}, n0 = {sol.n0})",
            dt, 60)


def test_08_drift():
    def run():
        a = drift_report(SRW, 14).a
        Z2 = Lattice(2)
        b = drift_report(FiniteMeasure.simple_random_walk(Z2), 30).a
        return a[14] - a[13], b[30] / 30

    (inc, z2), dt = timed(run)
    ok_f2 = 0.4999 <= inc <= 0.52
    ok_z2 = z2 <= 0.15
    verdict(8, "drift", ok_f2 and ok_z2,
            f"F2 a14-a13 = {float(inc):.6f} ({ok_f2}); Z2 a30/30 = {float(z2):.4f} ≤ 0.15 ({ok_z2})", dt, 120)


def test_09_fundamental_inequality():
    fi, dt = timed(lambda: fundamental_inequality(SRW, 12, 0.02))
    ok_ineq = fi.h <= fi.v * fi.ell + 0.02
    ok_h = 0.50 <= fi.h <= 0.60
    ok_v = abs(fi.v - math.log(3)) <= 0.02
    verdict(9, "fundamental inequality", ok_ineq and ok_h and ok_v,
            f"ĥ = {fi.h:.4f} in [0.50,0.60] ({ok_h}); v̂ = {fi.v:.6f} ({ok_v}); "
            f"ĥ ≤ v̂ℓ̂ + 0.02 = {fi.v * fi.ell + 0.02:.4f} ({ok_ineq})", dt, 120)


def test_10_clt():
    rep, dt = timed(lambda: clt_experiment(SRW, 400, 20_000, seed=0))
    ok_ks = rep.ks_reference <= 0.05
    ok_s2 = 0.70 <= rep.sigma2_hat <= 0.80
    verdict(10, "CLT", ok_ks and ok_s2,
            f"KS to N(0,3/4) = {rep.ks_reference:.4f} ≤ 0.05 ({ok_ks}); σ̂² = {rep.sigma2_hat:.4f} ({ok_s2})", dt, 60)


def test_11_sat_certificate():
    c, dt = timed(lambda: sat_certificate(Cylinder.parse("ab"), 5))
    bound = 1 - Fraction(1, 4) * Fraction(1, 3) ** 4
    verdict(11, "SAT certificate", c.measure >= bound,
            f"g = {F2.format(c.element)}, m(g·cyl(ab)) = {c.measure} ≥ {bound}", dt, 5)


def test_12_thickness():
    def run():
        T = ProductSet(F2, ((), (1,)), difference_set(Parity(True), 8))
        return thickness_certificate(T, 6, 8)

    r, dt = timed(run)
    verdict(12, "thickness", r.certified_radius == 6 and bool(r.status),
            f"B_6·{F2.format(r.witnesses.get(6, ()))} ⊆ F·AA⁻¹ within B_8 ({r.status.value})", dt, 60)


def test_13_folner_z():
    r, dt = timed(lambda: folner_khintchine_Z([PeriodicZ.multiples(2), PeriodicZ.multiples(3)], 6))
    covered = {(f + 6 * k) % 6 for f in r.F for k in range(-2, 3)} == set(range(6))
    ok = r.F == (0, 1, 2, 3, 4, 5) and r.period == 6 and r.verified and covered
    verdict(13, "Z Khintchine-Følner", ok, f"F = {r.F}, period {r.period}", dt, 1)


def test_14_affine_construction():
    def run():
        act = AffineIsometricAction.random(F2, 3, seed=0)
        sol = minimize_energy(act, SRW)
        f = harmonic_function(act, sol.x_o, sol.y)
        table = f.right_harmonicity(SRW, radius=5, strict=False)
        grads = gradient_check(act, SRW, points=10, seed=0)
        return sol, table, grads

    (sol, table, grads), dt = timed(run)
    ok = sol.residual_norm <= 1e-10 and table.max_residual <= 1e-9 and max(grads) <= 1e-6
    verdict(14, "affine construction", ok,
            f"energy residual {sol.residual_norm:.1e}, harmonicity on B_5 {table.max_residual:.1e}, "
            f"gradient rel. error {max(grads):.1e}", dt, 10)


def test_15_fixed_vector():
    def run():
        axis = np.array([2.0, -1.0, 2.0]) / 3
        act = AffineIsometricAction(F2, [rotation_about(axis, 0.8), rotation_about(axis, 2.3)], [[0, 0, 0]] * 2)
        r = fixed_vector_check(act, SRW)
        v = r.averaged_basis[:, 0] if r.dimension else np.zeros(3)
        dev = max(float(np.linalg.norm(act.pi(s) @ v - v)) for s in F2.generators)
        return r, dev, abs(abs(float(v @ axis)) - 1)

    (r, dev, align), dt = timed(run)
    ok = r.dimension == 1 and dev <= 1e-10 and align <= 1e-10
    verdict(15, "fixed-vector lemma", ok, f"dim = {r.dimension}, max ‖π(s)v - v‖ = {dev:.1e}", dt, 1)


if __name__ == "__main__":
    import sys

    for name, fn in sorted(globals().items()):
        if name.startswith("test_"):
            try:
                fn()
            except AssertionError:
                pass
    sys.exit(0 if all(line.startswith("PASS") for line in RESULTS) else 1)
