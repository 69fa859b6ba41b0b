import itertools
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from limitgroups.gad import DehnTwist, ModAut, Splitting, apply_aut, dehn_twist, inner, parse_gad
from limitgroups.homs import Hom, free_presentation, hom_length, parse_presentation
from limitgroups.shortening import (
    ShorteningProblem, certify_local_min, edge_twists, optimal_conjugation, optimal_conjugator,
    replay, rescaled_length_table, shorten,
)
from limitgroups.words import Word, ball, conjugate, inverse, parse_word
from tests.conftest import FIXTURES
from tests.strategies import words

AB = ("a", "b")
XY = ("x", "y")


def hom(p, texts, names=XY):
    return Hom(p, len(names), tuple(parse_word(t, names) for t in texts), names)


@pytest.fixture(scope="module")
def double():
    return parse_gad((FIXTURES / "double.gad").read_text())


@pytest.fixture(scope="module")
def base(double):
    return hom(double.presentation, ["x", "y", "y", "x"])


@pytest.fixture(scope="module")
def mod_gens(double):
    return edge_twists(double) + [inner(double, Word.gen(i, 4)) for i in range(1, 5)]


def conj_by(f, u):
    # g -> u^-1 f(g) u
    return Hom(f.domain, f.target_rank, tuple(conjugate(x, inverse(u)) for x in f.images), f.target_names)


def bfs_best_conjugation_length(f, radius):
    return min(hom_length(conj_by(f, u)) for u in ball(f.target_rank, radius))


def test_optimal_conjugation_examples():
    p = free_presentation(2, AB)
    f = hom(p, ["a", "a b a^-1"], AB)
    g, u = optimal_conjugator(f)
    assert g.images == (parse_word("a", AB), parse_word("b", AB))
    assert u == parse_word("a", AB)
    ident = hom(p, ["a", "b"], AB)
    assert optimal_conjugation(ident) == ident


def test_conjugated_identities_recovered():
    rng = random.Random(21)
    p = free_presentation(2, AB)
    ident = hom(p, ["a", "b"], AB)
    us = ball(2, 4)
    for _ in range(200):
        u = rng.choice(us)
        f = conj_by(ident, u)
        assert hom_length(optimal_conjugation(f)) == 1 == bfs_best_conjugation_length(f, 4)


@settings(max_examples=100, deadline=None)
@given(st.lists(words(max_size=6), min_size=2, max_size=2), st.sampled_from(ball(2, 3)))
def test_conjugation_invariant_under_preconjugation(imgs, u):
    f = Hom(free_presentation(2), 2, tuple(imgs))
    best = optimal_conjugation(f)
    assert hom_length(optimal_conjugation(conj_by(f, u))) <= hom_length(best)
    # greedy reaches the BFS optimum over |u| <= 3 conjugators
    assert hom_length(best) <= bfs_best_conjugation_length(f, 3)


@given(st.lists(words(max_size=8), min_size=2, max_size=3))
def test_optimal_conjugation_idempotent(imgs):
    f = Hom(free_presentation(len(imgs)), 2, tuple(imgs))
    once = optimal_conjugation(f)
    assert optimal_conjugation(once) == once
    assert hom_length(once) <= hom_length(f)


def test_stationary_hom_unchanged(base, mod_gens):
    res = shorten(ShorteningProblem(base, mod_gens))
    assert res.f_short == base
    assert res.applied == ()
    assert res.certified_radius == 1


def test_twist_cubed_is_undone(double, base, mod_gens):
    twist = edge_twists(double)[0]
    f = apply_aut(twist.power(3), base)
    assert hom_length(f) > hom_length(base)
    p = ShorteningProblem(f, mod_gens)
    res = shorten(p)
    assert hom_length(res.f_short) == hom_length(base)
    assert res.certified_radius == 1
    assert replay(p, res.applied) == res.f_short
    assert all(line.startswith("move ") for line in res.lines())
    assert any(line.startswith("move twist E ") for line in res.lines())


def test_random_mod_words(double, base, mod_gens):
    rng = random.Random(5)
    for _ in range(100):
        f = base
        for _ in range(rng.randint(0, 5)):
            a = rng.choice(mod_gens)
            f = apply_aut(a if rng.random() < 0.5 else a.inverse(), f)
        res = shorten(ShorteningProblem(f, mod_gens), certify_radius=2)
        assert hom_length(res.f_short) <= hom_length(f)
        assert hom_length(res.f_short) <= hom_length(base)
        assert res.certified_radius == 2


def partial_conjugation(p, i, u):
    """Twist of the free splitting <a> * <b>: generator ``i`` goes to ``u x_i u^-1``."""
    n = p.rank
    imgs = [Word.gen(j, n) for j in range(1, n + 1)]
    inv = list(imgs)
    imgs[i - 1] = conjugate(imgs[i - 1], u)
    inv[i - 1] = conjugate(inv[i - 1], inverse(u))
    return ModAut(p, tuple(imgs), tuple(inv), DehnTwist("free", u, i))


def test_certify_examples(double, base, mod_gens):
    p = free_presentation(2, AB)
    ident = hom(p, ["a", "b"], AB)
    twists = [partial_conjugation(p, 2, parse_word("a", AB)), partial_conjugation(p, 1, parse_word("b", AB))]
    assert certify_local_min(ident, twists, 2)
    twisted = apply_aut(edge_twists(double)[0], base)
    assert not certify_local_min(twisted, mod_gens, 1)
    assert certify_local_min(twisted, mod_gens, 0)


def test_rescaled_table():
    p = parse_presentation("gens a t\nrel a t a^-1 t^-1\n")
    fs = [Hom(p, 1, (Word.gen(1, 1), Word.gen(1, 1) ** k)) for k in range(1, 6)]
    t, a = p.word("t"), p.word("a")
    table = rescaled_length_table(fs, [t, a])
    assert [row[0] for row in table] == [Fraction(1)] * 5
    assert [row[1] for row in table] == [Fraction(1, k) for k in range(1, 6)]
    same = rescaled_length_table([fs[2]] * 3, [t, a])
    assert same[0] == same[1] == same[2]
    with pytest.raises(ValueError):
        rescaled_length_table([], [t])


def test_shorten_property_single_move_certificate(double, base, mod_gens):
    rng = random.Random(44)
    s = Splitting(double, "E")
    z = double.word("a b a^-1 b^-1")
    for k, side in itertools.product((1, 2), (1, 2)):
        f = apply_aut(dehn_twist(s, z, side).power(k), base)
        f = conj_by(f, ball(2, 2)[rng.randrange(17)])
        res = shorten(ShorteningProblem(f, mod_gens), certify_radius=0)
        assert certify_local_min(res.f_short, mod_gens, 1)
        assert hom_length(res.f_short) <= hom_length(f)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 4), st.sampled_from([1, -1])), max_size=5),
       st.sampled_from(ball(2, 2)))
def test_shorten_never_lengthens_and_replays(moves, u):
    g = parse_gad((FIXTURES / "double.gad").read_text())
    gens = edge_twists(g) + [inner(g, Word.gen(i, 4)) for i in range(1, 5)]
    f = hom(g.presentation, ["x", "y", "y", "x"])
    for i, e in moves:
        f = apply_aut(gens[i] if e > 0 else gens[i].inverse(), f)
    f = conj_by(f, u)
    p = ShorteningProblem(f, gens)
    res = shorten(p)
    assert hom_length(res.f_short) <= hom_length(f)
    assert replay(p, res.applied) == res.f_short
    assert certify_local_min(res.f_short, gens, 1)
