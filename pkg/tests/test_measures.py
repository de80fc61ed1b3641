import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rwgroups import CapExceeded, FreeGroup, Lattice, Status, StructuralError, WordMetric
from rwgroups.measures import (
    CesaroProfile,
    FiniteMeasure,
    RadialMeasure,
    drift_report,
    entropy_report,
    fundamental_inequality,
    generates_semigroup,
    quasi_harmonic_profile,
)

F2 = FreeGroup(2)
Z = Lattice(1)
Z2 = Lattice(2)
SRW = FiniteMeasure.simple_random_walk(F2)
ZSRW = FiniteMeasure.simple_random_walk(Z)


def test_convolution_on_z():
    assert ZSRW * ZSRW == FiniteMeasure(Z, {(-2,): Fraction(1, 4), (0,): Fraction(1, 2), (2,): Fraction(1, 4)})


def test_dirac_is_identity():
    assert FiniteMeasure.dirac(F2) * SRW == SRW
    assert SRW * FiniteMeasure.dirac(F2) == SRW


def test_return_probability_two_steps():
    assert (SRW * SRW)[()] == Fraction(1, 4)


def test_rejects_bad_weights():
    with pytest.raises(ValueError):
        FiniteMeasure(F2, {"a": Fraction(1, 2)})
    with pytest.raises(TypeError):
        FiniteMeasure(F2, {"a": 1.0})
    with pytest.raises(StructuralError):
        SRW * ZSRW


def test_reverse():
    assert SRW.reverse() == SRW
    assert FiniteMeasure.dirac(F2, "a").reverse() == FiniteMeasure.dirac(F2, "A")
    mu = FiniteMeasure(F2, {"a": Fraction(2, 3), "b": Fraction(1, 3)})
    assert mu.reverse() == FiniteMeasure(F2, {"A": Fraction(2, 3), "B": Fraction(1, 3)})


def test_symmetry():
    assert SRW.is_symmetric()
    assert not FiniteMeasure.dirac(Z, (1,)).is_symmetric()


def test_generation():
    rep = generates_semigroup(SRW, 3)
    assert rep.status is Status.TRUE and rep.steps == 3
    # the identity alone stops growing at once
    assert generates_semigroup(FiniteMeasure.dirac(F2), 1).status is Status.FALSE
    # <a> never covers b, but its support keeps growing
    sub = FiniteMeasure.uniform(F2, ["a", "A"])
    assert generates_semigroup(sub, 1, max_steps=12).status is Status.INCONCLUSIVE
    # positive steps on Z never reach -1, but the support keeps growing
    assert generates_semigroup(FiniteMeasure.dirac(Z, (1,)), 1, max_steps=10).status is Status.INCONCLUSIVE


def test_radial_powers_match_exact_convolution():
    rad = list(SRW.as_radial().powers(7))
    for r, e in zip(rad, SRW.powers(7)):
        assert r.expand() == e
    nu = FiniteMeasure(F2, {**{g: Fraction(1, 8) for g in F2.sphere(1)}, **{g: Fraction(1, 24) for g in F2.sphere(2)}})
    r = nu.as_radial()
    assert r is not None
    assert r.convolve(r).expand() == nu * nu
    assert list(r.powers(3))[3].expand() == nu.power(3)
    assert FiniteMeasure(F2, {"a": Fraction(1, 2), "b": Fraction(1, 2)}).as_radial() is None


def test_power_by_squaring_matches_iteration():
    mu = FiniteMeasure(F2, {"a": Fraction(1, 2), "b": Fraction(1, 3), "B": Fraction(1, 6)})
    assert mu.power(5) == list(mu.powers(5))[5]


def test_cap():
    with pytest.raises(CapExceeded):
        SRW.power(8, cap=1000)


def test_drift_small_n():
    d = drift_report(SRW, 3)
    assert d.a[1:] == [1, Fraction(3, 2), Fraction(17, 8)]


def test_drift_increment_f2():
    d = drift_report(SRW, 14)
    # frozen from the exact dictionary/radial convolution
    assert d.a[13] == Fraction(30363667, 4194304)
    assert d.a[14] == Fraction(32460819, 4194304)
    assert 0.4999 <= d.increment_estimate <= 0.52
    assert d.subadditivity_violations() == []
    assert d.fekete_bound == d.a[14] / 14


def _binomial_drift(n):
    return Fraction(sum(math.comb(n, k) * abs(2 * k - n) for k in range(n + 1)), 2**n)


def test_drift_z_matches_binomial():
    d = drift_report(ZSRW, 40)
    for n in range(1, 41):
        assert d.a[n] == _binomial_drift(n)
        assert d.a[n] / n <= 1 / math.sqrt(n)


def test_drift_z2_symmetric_properties():
    d = drift_report(FiniteMeasure.simple_random_walk(Z2), 20)
    r = d.ratios
    assert all(r[n + 1] <= r[n] for n in range(1, 20))
    assert r[20] <= 2 / math.sqrt(20)
    assert d.subadditivity_violations() == []


def test_drift_reverse_equal():
    mu = FiniteMeasure(F2, {"a": Fraction(1, 2), "ab": Fraction(1, 4), "B": Fraction(1, 4)})
    assert drift_report(mu, 5).a == drift_report(mu.reverse(), 5).a


def test_drift_custom_metric():
    m = WordMetric(F2, ["a", "A", "b", "B", "ab", "BA"])
    mu = FiniteMeasure.dirac(F2, "ab")
    d = drift_report(mu, 3, metric=m)
    assert d.a == [0, 1, 2, 3]


def test_entropy():
    e = entropy_report(SRW, 12)
    assert e.H[1] == pytest.approx(math.log(4), abs=1e-12)
    assert all(h >= 0 for h in e.H)
    assert e.subadditivity_violations() == []
    assert e.volume_increment == pytest.approx(math.log(3), abs=0.02)
    # entropy of exact powers computed atom by atom
    for n, m in enumerate(SRW.powers(6)):
        assert e.H[n] == pytest.approx(m.entropy(), abs=1e-12)


def test_entropy_z_half_log():
    e = entropy_report(ZSRW, 40)
    dev = [e.H[n] - 0.5 * math.log(n) for n in range(1, 41)]
    assert max(dev) - min(dev) < 1.0


def test_fundamental_inequality_lattices():
    # increments of H decay like 1/N, faster-decaying v*ell only catches up past N ~ 50
    r = fundamental_inequality(FiniteMeasure.simple_random_walk(Z2), 60)
    assert r.holds
    assert r.h < 0.02 and r.ell < 0.1
    mu = FiniteMeasure(Z, {(1,): Fraction(1, 2), (2,): Fraction(1, 2)})
    r = fundamental_inequality(mu, 30)
    assert r.ell == 1.5
    assert r.holds


def test_profile_identity():
    assert CesaroProfile(SRW, 10).value(()) == 0
    p = CesaroProfile(ZSRW, 20)
    oracle = Fraction(sum(math.comb(k, k // 2) for k in range(0, 20, 2)) * 1, 1)
    oracle = sum((Fraction(math.comb(k, k // 2), 2**k) for k in range(0, 20, 2)), Fraction(0)) / 20
    assert p.value((1,)) == oracle


def test_profile_f2_near_half():
    p = CesaroProfile(SRW, 200)
    assert abs(p.value("a") - Fraction(1, 2)) < 0.01
    # same value from explicit convolution powers
    small = CesaroProfile(SRW, 6)
    exact = sum((m.integrate(lambda x: len(F2.multiply(F2.parse("A"), x)) - len(x)) for m in list(SRW.powers(5))), Fraction(0)) / 6
    assert small.value("a") == exact


def test_profile_residual_bound():
    p = CesaroProfile(SRW, 30)
    for g in F2.ball(2):
        assert p.residual(g) <= Fraction(2 * len(g), 30)
    q = CesaroProfile(FiniteMeasure(F2, {"a": Fraction(1, 2), "b": Fraction(1, 4), "B": Fraction(1, 4)}), 6)
    for g in F2.ball(2):
        assert q.residual(g) <= Fraction(2 * len(g), 6)


def test_profile_left_lipschitz():
    p = CesaroProfile(SRW, 12)
    for g in F2.ball(2):
        assert p.lipschitz_witness(g, 2) <= len(g)


def test_profile_report():
    r = quasi_harmonic_profile(SRW, "a", 20)
    assert r["residual"] <= Fraction(2, 20)


def test_homomorphism_defect_decreasing_on_z():
    defects = [CesaroProfile(ZSRW, n).homomorphism_defect((1,), (2,)) for n in (10, 20, 40, 80)]
    assert all(b < a for a, b in zip(defects, defects[1:]))


@st.composite
def f2_measures(draw):
    elems = draw(st.lists(st.sampled_from(F2.ball(2)), min_size=1, max_size=4, unique=True))
    ws = draw(st.lists(st.integers(1, 5), min_size=len(elems), max_size=len(elems)))
    return FiniteMeasure(F2, dict(zip(elems, ws)), normalize=True)


@settings(max_examples=40, deadline=None)
@given(f2_measures(), f2_measures())
def test_convolution_properties(mu, nu):
    c = mu * nu
    assert c.total() == 1
    assert (mu * nu).reverse() == nu.reverse() * mu.reverse()
    assert drift_report(mu, 3).a == drift_report(mu.reverse(), 3).a


@settings(max_examples=20, deadline=None)
@given(f2_measures())
def test_drift_subadditive(mu):
    assert drift_report(mu, 5).subadditivity_violations() == []
