import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lampspeed.ball import (
    MarkedProduct,
    ball_distances,
    balls_coincide,
    check_witness,
    dgen_constants,
    first_difference,
    marked_ball,
    quotient_check,
)
from lampspeed.groups import INF, DiagonalSpec, GroupSpec, evaluate
from lampspeed.metric import ResourceError, UnsupportedSpecError

TAIL = GroupSpec(1, 0, 2, INF)

# vertex counts of the marked balls of Gamma(0, 2, inf), R = 0..4
BALL_SIZES = (1, 5, 16, 46, 120)


def _klein_ball_sizes(R):
    # independent model: position plus a frozenset of (site, letter) toggles
    start = (0, frozenset())
    seen = {start}
    frontier = [start]
    sizes = [1]
    for _ in range(R):
        new = []
        for pos, lamps in frontier:
            for nxt in ((pos + 1, lamps), (pos - 1, lamps),
                        (pos, lamps ^ {(pos, "a")}), (pos, lamps ^ {(pos, "b")})):
                if nxt not in seen:
                    seen.add(nxt)
                    new.append(nxt)
        frontier = new
        sizes.append(len(seen))
    return tuple(sizes)


def test_ball_sizes_fixture():
    assert _klein_ball_sizes(4) == BALL_SIZES
    assert tuple(len(marked_ball(TAIL, R)) for R in range(5)) == BALL_SIZES


def test_ball_structure():
    b0 = marked_ball(TAIL, 0)
    assert len(b0) == 1 and b0.edges == {}
    b = marked_ball(TAIL, 3)
    inner = [v for v, d in enumerate(b.depth) if d < 3]
    for v in inner:
        assert all((v, x) in b.edges for x in "Ttab")
    with pytest.raises(ValueError):
        marked_ball(TAIL, -1)
    with pytest.raises(ResourceError):
        marked_ball(GroupSpec(1, 1, INF, INF), 8, state_cap=500)


def test_small_k_large_l_example():
    assert balls_coincide(GroupSpec(1, 7, 5, 20), TAIL, 3).coincide


@given(st.integers(0, 3), st.sampled_from([2, 3, INF]), st.integers(0, 3))
def test_reflexive(k, l, R):
    X = GroupSpec(1, k, l, INF)
    assert balls_coincide(X, X, R).coincide


@pytest.mark.parametrize("k", range(1, 8))
def test_half_k_grid(k):
    R = (k - 1) // 2
    for l in (3, 4, 5, INF):
        for m in (2 * k + 1, INF):
            assert balls_coincide(GroupSpec(1, k, l, m), TAIL, R).coincide


@pytest.mark.parametrize("k", range(1, 6))
def test_l2_marked_isomorphism(k):
    for R in range(5):
        assert balls_coincide(GroupSpec(1, k, 2, INF), TAIL, R).coincide


def test_first_difference_witness():
    A = GroupSpec(1, 1, 4, INF)
    res = first_difference(A, TAIL, max_radius=6)
    assert not res.coincide and res.radius == 4
    assert res.witness == "atbTatbT"
    assert check_witness(A, TAIL, res.witness)
    assert balls_coincide(A, TAIL, 3).coincide
    doc = res.to_json(A, TAIL)
    assert set(doc) == {"specA", "specB", "radius", "coincide", "witness"}


def test_diagonal_with_large_offsets_coincides():
    # min k >= 2R + 2
    D = DiagonalSpec((GroupSpec(1, 4, 3, 11), GroupSpec(1, 6, INF, INF)))
    assert balls_coincide(D, TAIL, 1).coincide


def test_quotient_check():
    A = DiagonalSpec((GroupSpec(1, 3, 2, 9), GroupSpec(1, 5, 4, INF)))
    rep = quotient_check(A, TAIL, samples=300, max_len=5)
    assert rep.holds and rep.words_checked > 4**5
    assert quotient_check(TAIL, TAIL, samples=50, max_len=3).holds


def test_quotient_check_finds_violation():
    # Gamma(0, 2, inf) is not a quotient of Gamma(0, 1, inf): a = b there only
    rep = quotient_check(GroupSpec(1, 0, 1, INF), TAIL, samples=10, max_len=2)
    assert not rep.holds and rep.witness == "ab"


def test_dgen_trivial():
    c = dgen_constants(DiagonalSpec(()), TAIL)
    assert (c.C1, c.C2) == (1, 0)


def test_dgen_fixture():
    c = dgen_constants(GroupSpec(1, 0, 2, 2), TAIL)
    assert (c.C1, c.C2, c.R) == (1, 6, 1)
    assert c.order_F == 32 and c.diam_F == 6 and c.C2 == c.C1 * c.diam_F


def test_dgen_locality():
    F = GroupSpec(1, 0, 2, 2)
    a = dgen_constants(F, TAIL)
    b = dgen_constants(F, GroupSpec(1, 9, 5, 20))
    assert balls_coincide(TAIL, GroupSpec(1, 9, 5, 20), a.R).coincide
    assert (a.C1, a.C2) == (b.C1, b.C2)


def test_dgen_rejects_infinite():
    with pytest.raises(UnsupportedSpecError):
        dgen_constants(TAIL, TAIL)


def test_dgen_sandwich_sample():
    F = GroupSpec(1, 0, 2, 2)
    c = dgen_constants(F, TAIL)
    D = MarkedProduct(TAIL, F)
    dG, dD = ball_distances(TAIL, 8), ball_distances(D, 8)
    rng = random.Random(11)
    for _ in range(2000):
        w = "".join(rng.choice("Ttab") for _ in range(rng.randint(0, 8)))
        g, d = evaluate(TAIL, w), evaluate(D, w)
        assert dG[g] <= dD[d] <= c.C1 * dG[g] + c.C2


@settings(max_examples=30)
@given(st.text(alphabet="Ttab", min_size=1, max_size=6))
def test_witness_check_consistent(w):
    A = GroupSpec(1, 1, 4, INF)
    ta = evaluate(A, w).is_identity()
    tb = evaluate(TAIL, w).is_identity()
    assert check_witness(A, TAIL, w) == (ta != tb)
