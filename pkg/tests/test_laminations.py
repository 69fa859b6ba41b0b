from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from limitgroups.laminations import (
    Complex2,
    LaminationError,
    corner_coordinates,
    format_complex,
    format_weights,
    octahedron,
    parse_complex,
    parse_weights,
    projectivize,
    validate,
    weights,
)

TRIANGLE = Complex2(("e1", "e2", "e3"), (("e1", "e2", "e3"),))
OCT = octahedron()

fractions = st.fractions(min_value=0, max_value=50, max_denominator=12)
oct_weights = st.fixed_dictionaries({e: fractions for e in OCT.edges})


def tri(a, b, c):
    return weights({"e1": a, "e2": b, "e3": c})


def test_corner_examples():
    assert corner_coordinates(3, 4, 5) == (1, 3, 2)
    assert corner_coordinates(1, 1, 3) == (Fraction(-1, 2), Fraction(3, 2), Fraction(3, 2))
    assert corner_coordinates(0, 0, 0) == (0, 0, 0)


def test_validate_examples():
    assert validate(TRIANGLE, tri(3, 4, 5))
    assert not validate(TRIANGLE, tri(1, 1, 3))
    assert validate(TRIANGLE, tri(1, 1, 2))
    assert validate(TRIANGLE, tri(0, 0, 0))
    with pytest.raises(LaminationError):
        validate(TRIANGLE, weights({"e1": 1, "e2": 1}))


def test_negative_weight_rejected():
    with pytest.raises(LaminationError):
        tri(-1, 1, 1)


def test_projectivize_examples():
    pw = projectivize(tri(3, 4, 5))
    assert pw == {"e1": Fraction(1, 4), "e2": Fraction(1, 3), "e3": Fraction(5, 12)}
    assert projectivize(pw) == pw
    with pytest.raises(LaminationError):
        projectivize(tri(0, 0, 0))


def test_octahedron_shape():
    assert len(OCT.edges) == 12 and len(OCT.cells) == 8
    # every edge lies in exactly two triangles
    for e in OCT.edges:
        assert sum(e in c for c in OCT.cells) == 2


def test_bad_cells_rejected():
    with pytest.raises(LaminationError):
        Complex2(("a", "b"), (("a", "b", "c"),))
    with pytest.raises(LaminationError):
        Complex2(("a", "a"), ())


def oracle(k, w):
    # edge weights come from non-negative corner counts in every triangle
    for a, b, c in k.cells:
        if w[a] + w[b] < w[c] or w[b] + w[c] < w[a] or w[c] + w[a] < w[b]:
            return False
    return True


@given(oct_weights)
def test_validate_matches_triangle_inequalities(w):
    assert validate(OCT, w) == oracle(OCT, w)


@given(oct_weights, st.fractions(min_value=Fraction(1, 10), max_value=20))
def test_scale_invariance(w, t):
    assert validate(OCT, w) == validate(OCT, {k: t * v for k, v in w.items()})


@given(oct_weights, oct_weights, st.fractions(min_value=0, max_value=1))
def test_convexity(w1, w2, t):
    if validate(OCT, w1) and validate(OCT, w2):
        mix = {k: t * w1[k] + (1 - t) * w2[k] for k in OCT.edges}
        assert validate(OCT, mix)


@given(st.tuples(fractions, fractions, fractions))
def test_corners_reconstruct_weights(ws):
    x, y, z = corner_coordinates(*ws)
    # corner at vertex i is counted on both edges through it
    assert (x + z, x + y, y + z) == ws


@given(oct_weights)
def test_projectivize_idempotent(w):
    if sum(w.values()) == 0:
        return
    p = projectivize(w)
    assert sum(p.values()) == 1
    assert projectivize(p) == p
    assert validate(OCT, p) == validate(OCT, w)


def test_floating_mode_tolerance():
    w = parse_weights("w e1 0.1\nw e2 0.2\nw e3 0.30000000000000004\n", floating=True)
    assert validate(TRIANGLE, w)
    w = parse_weights("w e1 0.1\nw e2 0.2\nw e3 0.31\n", floating=True)
    assert not validate(TRIANGLE, w)


def test_file_round_trips():
    assert parse_complex(format_complex(OCT)) == OCT
    w = {e: Fraction(i, 3) for i, e in enumerate(OCT.edges)}
    assert parse_weights(format_weights(w)) == w
    fw = {e: i / 7 for i, e in enumerate(OCT.edges)}
    assert parse_weights(format_weights(fw), floating=True) == fw


def test_malformed_files():
    with pytest.raises(LaminationError):
        parse_complex("edge a b\n")
    with pytest.raises(LaminationError):
        parse_weights("w a x\n")
    with pytest.raises(LaminationError):
        parse_weights("weight a 1\n")
