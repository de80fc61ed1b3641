from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rwgroups import CapExceeded, FreeGroup, Lattice, ParseError, RadiusExceeded, StructuralError, WordMetric, parse_group
from rwgroups.groups import enumerate_products

F2 = FreeGroup(2)
Z2 = Lattice(2)

letters = st.sampled_from([1, -1, 2, -2])
raw_words = st.lists(letters, max_size=30)
words = raw_words.map(F2.reduce)


def test_free_cancellation():
    assert F2.multiply(F2.parse("ab"), F2.parse("Ba")) == F2.parse("aa")


def test_inverse_gives_identity():
    g = F2.parse("abAAb")
    assert F2.multiply(g, F2.inverse(g)) == ()


def test_lattice_addition():
    assert Z2.multiply((1, 0), (0, -3)) == (1, -3)
    assert Z2.format((1, -3)) == "(1,-3)"
    assert Z2.parse("(1,-3)") == (1, -3)


def test_mismatched_elements_rejected():
    with pytest.raises(StructuralError):
        F2.multiply((1, -1), (2,))
    with pytest.raises(StructuralError):
        F2.multiply((3,), ())
    with pytest.raises(StructuralError):
        Z2.multiply((1, 0, 0), (0, 0))
    with pytest.raises(StructuralError):
        F2.multiply((0, 1), (1,))


def test_word_lengths():
    assert F2.length(F2.parse("abA")) == 3
    assert Z2.length((2, -1)) == 3


def test_bfs_word_length():
    m = WordMetric(F2, ["a", "A", "b", "B", "ab", "BA"])
    assert m.length(F2.parse("ab")) == 1
    assert m.length(F2.parse("aba")) == 2
    assert m.length(F2.parse("abab")) == 2
    # standard generators agree with reduced length
    std = WordMetric(F2, ["a", "A", "b", "B"])
    assert std.length(F2.parse("abAB")) == 4


def test_bfs_radius_exceeded():
    m = WordMetric(F2, ["a", "A", "b", "B", "ab", "BA"], radius=2)
    with pytest.raises(RadiusExceeded):
        m.length(F2.parse("aaaaa"))


def test_non_symmetric_generators_rejected():
    with pytest.raises(ValueError):
        WordMetric(F2, ["a", "b", "B"])


def test_spheres():
    assert [F2.format(g) for g in F2.sphere(1)] == ["a", "A", "b", "B"]
    s3 = F2.sphere(3)
    assert len(s3) == 36 == F2.sphere_size(3)
    assert set(s3) == {g for g in enumerate_products(F2, F2.generators, 3) if len(g) == 3}
    assert s3 == sorted(s3, key=lambda w: [2 * (abs(x) - 1) + (x < 0) for x in w])
    assert Lattice(1).sphere(2) == [(-2,), (2,)]


def test_ball_sizes():
    for n in range(11):
        assert F2.ball_size(n) == 2 * 3**n - 1
    for n in range(8):
        assert len(F2.ball(n)) == 2 * 3**n - 1
        assert len(set(F2.ball(n))) == 2 * 3**n - 1


def test_lattice_sphere_sizes_match_enumeration():
    for d in (1, 2, 3):
        L = Lattice(d)
        for n in range(6):
            s = L.sphere(n)
            assert len(s) == len(set(s)) == L.sphere_size(n)
            assert all(L.length(v) == n for v in s)
            assert s == sorted(s)


def test_enumeration_cap():
    with pytest.raises(CapExceeded):
        F2.sphere(20)
    with pytest.raises(CapExceeded):
        F2.ball(5, cap=100)


def test_power_set_size_matches_enumeration():
    for G in (F2, Z2, FreeGroup(3)):
        for n in range(6):
            assert G.power_set_size(n) == len(enumerate_products(G, G.generators, n))


def test_gromov_examples():
    assert F2.gromov_product(F2.parse("ab"), F2.parse("aB")) == 1
    g = F2.parse("abbA")
    assert F2.gromov_product(g, g) == 4
    assert F2.gromov_product((1,), (-1,)) == 0


def test_parse_and_format():
    assert F2.parse("e") == ()
    assert F2.format(()) == "e"
    assert F2.parse("aA") == ()
    assert FreeGroup(5).format(FreeGroup(5).parse("abcdfF")) == "abcd"
    with pytest.raises(ParseError):
        F2.parse("ac")
    with pytest.raises(ParseError):
        Z2.parse("(1,2,3)")


def test_parse_group():
    assert parse_group("free:2") == F2
    assert parse_group("lattice:3") == Lattice(3)
    with pytest.raises(ParseError):
        parse_group("sl:2")


@settings(max_examples=300)
@given(raw_words)
def test_reduction_idempotent(w):
    once = F2.reduce(w)
    assert F2.reduce(once) == once
    F2.check(once)


@settings(max_examples=300)
@given(words, words, words)
def test_associative(g, h, k):
    assert F2.multiply(F2.multiply(g, h), k) == F2.multiply(g, F2.multiply(h, k))


@settings(max_examples=300)
@given(words, words)
def test_triangle_and_gromov_bounds(g, h):
    assert F2.length(F2.multiply(g, h)) <= F2.length(g) + F2.length(h)
    gp = F2.gromov_product(g, h)
    assert 0 <= gp <= min(len(g), len(h))
    assert gp == Fraction(F2.common_prefix(g, h))


@settings(max_examples=100)
@given(words, words, words)
def test_bfs_metric_left_invariant(g, h, x):
    m = WordMetric(F2, ["a", "A", "b", "B", "ab", "BA"], radius=40)
    g, h, x = g[:4], h[:4], x[:4]
    assert m.distance(g, h) == m.distance(F2.multiply(x, g), F2.multiply(x, h))
    assert m.distance(g, h) == m.distance(h, g)


@settings(max_examples=200)
@given(st.lists(st.integers(-5, 5), min_size=2, max_size=2), st.lists(st.integers(-5, 5), min_size=2, max_size=2))
def test_lattice_triangle(g, h):
    g, h = tuple(g), tuple(h)
    assert Z2.length(Z2.multiply(g, h)) <= Z2.length(g) + Z2.length(h)
