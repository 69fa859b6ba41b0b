import itertools
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from limitgroups.words import (
    RankError,
    Word,
    ball,
    commutes,
    conjugate,
    conjugator,
    cyclic_reduce,
    format_word,
    inverse,
    multiply,
    parse_word,
    power,
    primitive_root,
    reduce,
    reduced_words,
    share_root,
    translation_length,
)
from tests.strategies import nontrivial_words, raw_letters, words

AB = ("a", "b")


def w(text, names=AB):
    return parse_word(text, names)


def naive_reduce(letters):
    stack = []
    for x in letters:
        if stack and stack[-1] == -x:
            stack.pop()
        else:
            stack.append(x)
    return tuple(stack)


def divisor_scan_exponent(x):
    core = cyclic_reduce(x)[1].letters
    n = len(core)
    return max(k for k in range(1, n + 1) if n % k == 0 and core == core[: n // k] * k)


def test_forced_cancellations():
    assert reduce([1, -1], 2) == Word.identity(2)
    assert reduce([1, 2, -2, 1], 2) == w("a a")


def test_reduce_matches_stack_oracle_on_random_sequences():
    rng = random.Random(7)
    for _ in range(200):
        raw = [rng.choice([1, -1, 2, -2]) for _ in range(50)]
        assert reduce(raw, 2).letters == naive_reduce(raw)


def test_letter_out_of_rank():
    with pytest.raises(ValueError):
        reduce([3], 2)


def test_unreduced_word_rejected():
    with pytest.raises(ValueError):
        Word((1, -1), 2)


def test_multiply_examples():
    assert multiply(w("a b"), w("b^-1 a")) == w("a^2")
    x = w("a b^-1 a")
    assert multiply(x, inverse(x)) == Word.identity(2)


def test_rank_mismatch():
    with pytest.raises(RankError):
        multiply(Word.gen(1, 2), Word.gen(1, 3))


def test_multiply_matches_concatenation():
    rng = random.Random(3)
    for _ in range(100):
        u = reduce([rng.choice([1, -1, 2, -2]) for _ in range(10)], 2)
        v = reduce([rng.choice([1, -1, 2, -2]) for _ in range(10)], 2)
        assert multiply(u, v).letters == naive_reduce(u.letters + v.letters)


def test_cyclic_reduce_examples():
    assert cyclic_reduce(w("a b a^-1")) == (w("a"), w("b"))
    assert cyclic_reduce(w("a b")) == (Word.identity(2), w("a b"))


def test_cyclic_core_of_conjugates():
    cores = [x for n in range(1, 5) for x in reduced_words(2, n) if len(cyclic_reduce(x)[1]) == n]
    for core in cores[::7]:
        for u in ball(2, 4)[::5]:
            c = conjugate(core, u)
            assert len(cyclic_reduce(c)[1]) == len(core)


def test_primitive_root_examples():
    assert primitive_root(w("a b a b")) == (w("a b"), 2)
    assert primitive_root(w("a")) == (w("a"), 1)
    with pytest.raises(ValueError):
        primitive_root(Word.identity(2))


def test_cube_exponent_divisible_by_three():
    rng = random.Random(11)
    for _ in range(100):
        x = reduce([rng.choice([1, -1, 2, -2]) for _ in range(rng.randint(1, 9))], 2)
        if not x:
            continue
        _, e = primitive_root(power(x, 3))
        assert e % 3 == 0 and e == divisor_scan_exponent(power(x, 3))


def test_commutes_examples():
    assert commutes(w("a b"), w("a b a b"))
    assert not commutes(w("a"), w("b"))


def test_commutes_agrees_with_root_test_exhaustively():
    words4 = ball(2, 4)
    for u, v in itertools.product(words4, repeat=2):
        assert commutes(u, v) == share_root(u, v)


def test_translation_length_examples():
    assert translation_length(w("a b a^-1")) == 1
    assert translation_length(Word.identity(2)) == 0


def test_translation_length_of_powers():
    rng = random.Random(5)
    for _ in range(100):
        x = reduce([rng.choice([1, -1, 2, -2]) for _ in range(8)], 2)
        k = rng.randint(1, 5)
        assert translation_length(power(x, k)) == k * translation_length(x)


def test_translation_length_conjugacy_invariant_exhaustive():
    b5 = ball(2, 5)
    for x in b5:
        t = translation_length(x)
        for u in b5:
            assert translation_length(conjugate(x, u)) == t


def test_group_laws_on_random_triples():
    rng = random.Random(1)
    e = Word.identity(2)
    for _ in range(10_000):
        x, y, z = (reduce([rng.choice([1, -1, 2, -2]) for _ in range(rng.randint(0, 8))], 2) for _ in range(3))
        assert multiply(multiply(x, y), z) == multiply(x, multiply(y, z))
        assert multiply(x, e) == x and multiply(x, inverse(x)) == e


def test_conjugator_finds_witness():
    x, u = w("a b^2"), w("b a^-1 b")
    g = conjugator(x, conjugate(x, u))
    assert conjugate(x, g) == conjugate(x, u)
    assert conjugator(w("a"), w("b")) is None


def test_reduced_word_counts():
    for n in range(1, 7):
        assert len(list(reduced_words(2, n))) == 4 * 3 ** (n - 1)


def test_text_round_trip():
    x = parse_word("a^3 b^-2 a b a^-1 a", AB)
    assert x == w("a^3 b^-2 a b")
    assert parse_word(format_word(x, AB), AB) == x
    assert parse_word("1", AB) == Word.identity(2)
    with pytest.raises(ValueError):
        parse_word("c", AB)
    with pytest.raises(ValueError):
        parse_word("a^0", AB)


@given(raw_letters())
def test_reduce_idempotent(raw):
    once = reduce(raw, 2)
    assert reduce(once.letters, 2) == once


@settings(max_examples=300)
@given(words(), words(), words())
def test_group_laws(x, y, z):
    e = Word.identity(2)
    assert multiply(multiply(x, y), z) == multiply(x, multiply(y, z))
    assert multiply(x, e) == x == multiply(e, x)
    assert multiply(x, inverse(x)) == e


@given(nontrivial_words(), st.integers(1, 4))
def test_power_of_root(x, k):
    r, e = primitive_root(power(x, k))
    assert power(r, e) == power(x, k)
    assert e % k == 0


@given(words(), words())
def test_cyclic_reduce_decomposes(x, u):
    c, core = cyclic_reduce(conjugate(x, u))
    assert conjugate(core, c) == conjugate(x, u)
    if len(core) > 1:
        assert core.letters[0] != -core.letters[-1]
