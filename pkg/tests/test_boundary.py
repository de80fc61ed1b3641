import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rwgroups import DepthError, FreeGroup
from rwgroups.boundary import (
    BoundarySet,
    Cylinder,
    CylinderFunction,
    CylinderSpace,
    act,
    bareiss_rank,
    canonical_semimetric,
    cocycle_identity_check,
    cylinder_measure,
    harmonicity_check,
    poisson_harmonicity_check,
    poisson_transform,
    rn_closed_form,
    rn_derivative,
    rn_span_rank,
    rn_sup,
    rn_vector,
    sat_certificate,
    word_index,
)
from rwgroups.measures import FiniteMeasure

F2 = FreeGroup(2)
C = Cylinder.parse


def test_cylinder_measures_sum_to_one():
    for k in range(1, 9):
        assert F2.sphere_size(k) * cylinder_measure(2, k) == 1
    assert C("aba").measure() == Fraction(1, 36)


def test_word_index_is_lexicographic_position():
    for k in range(1, 6):
        for i, w in enumerate(F2.sphere(k)):
            assert word_index(w, 2) == i
    G3 = FreeGroup(3)
    for i, w in enumerate(G3.sphere(3)):
        assert word_index(w, 3) == i


def test_act_examples():
    assert act("a", C("ba")).same_set(BoundarySet(2, 3, [F2.parse("aba")]))
    assert act("A", C("ab")).same_set(BoundarySet(2, 1, [F2.parse("b")]))
    assert act("BA", C("aba")).same_set(BoundarySet(2, 1, [F2.parse("a")]))
    # a . cyl(A) is the complement of cyl(a)
    assert act("a", C("A")).same_set(BoundarySet(2, 1, [(1,)]).complement())


def test_act_composes():
    A = BoundarySet.from_cylinders([C("ab"), C("Ba")])
    for g1 in F2.ball(2):
        for g2 in F2.ball(1):
            assert act(g2, act(g1, A)).same_set(act(F2.multiply(g2, g1), A))
            assert act(g1, A).measure() == sum(cylinder_measure(2, len(F2.multiply(g1, w))) for w in A.refine(3).words)


def test_rn_examples():
    assert rn_derivative("a", C("aba")) == 3
    assert rn_derivative("a", C("bab")) == Fraction(1, 3)
    assert all(rn_derivative((), Cylinder(w)) == 1 for w in F2.sphere(2))
    with pytest.raises(DepthError):
        rn_derivative("ab", C("ab"))


def test_rn_matches_closed_form_ball3_depth5():
    for g in F2.ball(3):
        for w in F2.sphere(5):
            assert rn_derivative(g, Cylinder(w)) == Fraction(3) ** -(len(g) - 2 * F2.common_prefix(g, w))
            assert rn_closed_form(g, w) == rn_derivative(g, Cylinder(w))


def test_rn_bounds():
    srw = FiniteMeasure.simple_random_walk(F2)
    for n, mun in enumerate(srw.powers(4)):
        for s, w in mun.items():
            assert rn_sup(s) <= 1 / w
    for s in F2.ball(3):
        lower = 1 / rn_sup(F2.inverse(s))
        assert all(v >= lower for v in rn_vector(s, len(s) + 1))


def test_cocycle_identity():
    assert cocycle_identity_check("a", "a", 4)
    assert cocycle_identity_check("a", "A", 3)
    assert cocycle_identity_check("ab", "Ba", 6)


def test_cocycle_identity_needs_inverse_shift():
    # the variant with g1 xi in place of g1^-1 xi fails already for (a, a)
    g = F2.parse("a")
    w = F2.parse("baaa")
    lhs = rn_derivative(F2.multiply(g, g), Cylinder(w))
    rhs = rn_derivative(g, Cylinder(w)) * rn_derivative(g, Cylinder(F2.multiply(g, w)))
    assert lhs != rhs


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(F2.ball(2)), st.sampled_from(F2.ball(2)))
def test_cocycle_identity_random(g1, g2):
    assert cocycle_identity_check(g1, g2, len(g1) + len(g2) + 1)


def test_harmonicity():
    assert harmonicity_check(0, 1)
    assert harmonicity_check(1, 2)
    # n = 1 by hand: one generator agrees with xi (3), three do not (1/3)
    assert Fraction(1, 4) * 3 + Fraction(3, 4) * Fraction(1, 3) == 1
    assert harmonicity_check(4, 6)


def test_semimetric():
    assert canonical_semimetric("ab") == pytest.approx(2 * math.log(3), abs=1e-12)
    assert canonical_semimetric(()) == 0
    for g in F2.ball(4):
        assert abs(canonical_semimetric(g) - len(g) * math.log(3)) <= 1e-12


@settings(max_examples=50, deadline=None)
@given(st.sampled_from(F2.ball(3)), st.sampled_from(F2.ball(3)))
def test_semimetric_triangle(g, h):
    assert canonical_semimetric(F2.multiply(g, h)) <= canonical_semimetric(g) + canonical_semimetric(h) + 1e-12


def test_poisson_examples():
    one = CylinderFunction.constant(2, Fraction(1), depth=2)
    assert all(poisson_transform(one, g) == 1 for g in F2.ball(2))
    phi = CylinderFunction.indicator(C("a"))
    assert poisson_transform(phi, ()) == Fraction(1, 4)
    assert poisson_transform(phi, "a") == Fraction(1, 12)
    # a^-1 moves the complement of cyl(A), of mass 3/4, onto cyl(a)
    assert poisson_transform(phi, "A") == Fraction(3, 4)
    assert poisson_harmonicity_check(phi, 4) == 0


def _kernel(radius, depth):
    """Integer kernel K[g, w] = m(g . cyl(w)) * 4 * 3^(depth + radius - 1)."""
    scale = 4 * 3 ** (depth + radius - 1)
    words = F2.sphere(depth)
    ball = F2.ball(radius)
    K = np.empty((len(ball), len(words)), dtype=np.int64)
    for i, g in enumerate(ball):
        for j, w in enumerate(words):
            K[i, j] = scale // (4 * 3 ** (len(F2.multiply(g, w)) - 1))
    return ball, K


def test_poisson_transform_harmonic_random_depth3():
    ball, K = _kernel(5, 6)
    pos = {g: i for i, g in enumerate(ball)}
    rng = np.random.default_rng(7)
    phis = rng.integers(-50, 51, size=(F2.sphere_size(3), 100))
    Phi = np.repeat(phis, 27, axis=0)  # refine depth 3 -> 6
    P = K @ Phi
    for g in F2.ball(4):
        avg = sum(P[pos[F2.multiply(F2.inverse(s), g)]] for s in F2.generators)
        assert np.array_equal(avg, 4 * P[pos[g]])
    # the library transform agrees with the kernel
    for t in range(3):
        phi = CylinderFunction(CylinderSpace(2, 3), np.array([Fraction(int(x)) for x in phis[:, t]], dtype=object))
        for g in F2.ball(2):
            assert poisson_transform(phi, g) * 4 * 3**10 == P[pos[g], t]


def test_sat_certificates():
    c = sat_certificate(C("ab"), 1)
    assert c.measure >= Fraction(3, 4) and c.holds
    c = sat_certificate(C("ab"), 5)
    assert c.measure >= 1 - Fraction(1, 4) * Fraction(1, 3) ** 4
    assert act(c.element, C("ab")).measure() == c.measure
    c = sat_certificate(C("a"), 0)
    assert c.measure >= Fraction(1, 4)
    for w in F2.sphere(3):
        for n in range(1, 5):
            assert sat_certificate(Cylinder(w), n).holds


def test_bareiss():
    assert bareiss_rank([[1, 2], [2, 4]]) == 1
    assert bareiss_rank([[0, 1], [1, 0]]) == 2
    rng = np.random.default_rng(0)
    for _ in range(20):
        A = rng.integers(-3, 4, size=(6, 3)) @ rng.integers(-3, 4, size=(3, 8))
        assert bareiss_rank(A.tolist()) == np.linalg.matrix_rank(A)


def _numpy_rank(R, k):
    M = np.array([[float(x) for x in rn_vector(g, k)] for g in F2.ball(R)])
    return int(np.linalg.matrix_rank(M))


def test_rn_span_rank():
    # frozen from an independent floating-point rank on the full vectors
    expected = {0: 1, 1: 4, 2: 12, 3: 36}
    for R, r in expected.items():
        got = rn_span_rank(R, R + 1)
        assert got.rank == r == _numpy_rank(R, R + 1)
        assert got.dimension == F2.sphere_size(R + 1)
    assert rn_span_rank(1, 3).rank == 4 == _numpy_rank(1, 3)
    ranks = [rn_span_rank(R, 5).rank for R in range(5)]
    assert ranks == sorted(ranks)
    # the span is every depth-R step function
    assert all(rn_span_rank(R, R + 1).rank == F2.sphere_size(R) for R in range(1, 5))


def test_cylinder_function_refine_and_expectation():
    rng = np.random.default_rng(3)
    f = CylinderFunction(CylinderSpace(2, 3), rng.normal(size=36))
    g = f.refine(5)
    assert g.integral() == pytest.approx(f.integral())
    assert np.allclose(g.conditional_expectation(3).values, f.values)
    e = f.conditional_expectation(1)
    for i, w in enumerate(CylinderSpace(2, 1).words):
        assert e.values[i] == pytest.approx(np.mean([f(x) for x in F2.extensions(w, 3)]))


def test_boundary_set_algebra():
    A = BoundarySet.from_cylinders([C("a"), C("bA")])
    assert A.measure() == Fraction(1, 4) + Fraction(1, 12)
    assert (A | A.complement()).measure() == 1
    assert (A & A.complement()).measure() == 0
    assert BoundarySet.from_cylinders([C(x) for x in ["a", "A", "b", "B"]]).coarsen().depth == 0
