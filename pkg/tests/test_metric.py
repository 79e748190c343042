import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lampspeed.groups import INF, DihedralElem, GroupSpec, eval_word
from lampspeed.metric import (
    LengthBounds,
    ResourceError,
    UnsupportedSpecError,
    construct_word,
    ell_function,
    exact_length_bfs,
    is_sws_step,
    lemma_max_bounds,
    local_time,
    range_of,
    sws_generators,
    sws_words,
)

from strategies import line_specs, short_words


# sws generators --------------------------------------------------------------

def test_sws_word_count():
    words = sws_words()
    assert len(words) == 128
    # u in {"", a, b, ab, ba} on each side of the move
    assert len(set(words)) == 5 * 2 * 5
    assert all(is_sws_step(w) for w in words)


def _klein_oracle(k):
    # Gamma(k, 2, inf) with Klein-four lamps: toggle sets of a-sites and b-sites
    out = set()
    for w in sws_words():
        pos, a_bits, b_bits = 0, set(), set()
        for ch in w:
            if ch == "T":
                pos += 1
            elif ch == "t":
                pos -= 1
            elif ch == "a":
                a_bits ^= {pos}
            else:
                b_bits ^= {pos + k}
        out.add((pos, frozenset(a_bits), frozenset(b_bits)))
    return out


@pytest.mark.parametrize("k", [0, 1, 2])
def test_sws_distinct_values_match_oracle(k):
    gens = sws_generators(GroupSpec(1, k, 2, INF))
    assert len(gens) == len(_klein_oracle(k))
    assert sum(gens.multiplicity) == 128


@pytest.mark.parametrize("spec", [GroupSpec(1, 1, 2, INF), GroupSpec(1, 0, 3, INF), GroupSpec(1, 2, INF, 9)])
def test_sws_generators_symmetric_and_length_one(spec):
    gens = sws_generators(spec)
    elems = set(gens.elements)
    for g in gens.elements:
        assert g.inverse() in elems
        assert exact_length_bfs(g, spec, cap=2) == 1


# exact lengths -----------------------------------------------------------------

def test_exact_examples():
    spec = GroupSpec(1, 0, 2, INF)
    assert exact_length_bfs(spec.identity(), spec) == 0
    assert exact_length_bfs(eval_word("a", spec), spec) == 2
    assert exact_length_bfs(eval_word("T", spec), spec) == 1


def test_exact_cap_and_budget():
    spec = GroupSpec(1, 0, 2, INF)
    assert exact_length_bfs(eval_word("TTTTT", spec), spec, cap=3) is None
    with pytest.raises(ResourceError):
        exact_length_bfs(eval_word("TTTTTTaTTTT", GroupSpec(1, 1, 5, INF)), GroupSpec(1, 1, 5, INF),
                         cap=30, node_cap=2000)


# range and L-function ---------------------------------------------------------

def test_range_examples():
    spec = GroupSpec(1, 2, INF, INF)
    assert range_of(spec.identity()).sites == {0}
    g = eval_word("T" * 5 + "a" + "t" * 2 + "b" + "t" * 3, spec)  # (0, (ab) at 5)
    assert g.lamp_dict() == {5: DihedralElem.from_word("ab", INF).code}
    r = range_of(g)
    assert r.sites == {0, 3, 5} and r.extent == 5
    h = eval_word("tbT" + "TTTT", GroupSpec(1, 1, INF, INF))  # (4, b at 0)
    assert range_of(h).sites == {-1, 0, 4} and range_of(h).extent == 5


def test_range_rejects_finite_m():
    with pytest.raises(UnsupportedSpecError):
        range_of(GroupSpec(1, 1, 3, 5).identity())


def _template_shape(word):
    # smallest (e1, L, e2) with b^e1 (ab)^L a^e2 == word in D_inf, by enumeration
    target = DihedralElem.from_word(word, INF)
    best = None
    for e1, L, e2 in itertools.product((0, 1), range(4), (0, 1)):
        w = "b" * e1 + "ab" * L + "a" * e2
        if DihedralElem.from_word(w, INF) == target and (best is None or len(w) < best[0]):
            best = (len(w), L, e1, e2)
    return best[1:]


@pytest.mark.parametrize("word", ["ab", "bab", "a", "b", "abab", "baba", "aba", "ba"])
def test_ell_function_matches_enumeration(word):
    spec = GroupSpec(1, 0, INF, INF)
    # k = 0: both letters act at site 0
    g = eval_word(word, spec)
    shape = ell_function(g)[0]
    assert (shape.core, shape.e1, shape.e2) == _template_shape(word)


def test_ell_function_identity_and_examples():
    spec = GroupSpec(1, 0, INF, INF)
    assert ell_function(spec.identity()) == {}
    assert tuple(ell_function(eval_word("ab", spec))[0]) == (1, 0, 0)
    assert tuple(ell_function(eval_word("bab", spec))[0]) == (1, 1, 0)


# bounds -------------------------------------------------------------------------

def test_bounds_identity():
    b = lemma_max_bounds(GroupSpec(1, 2, INF, INF).identity())
    assert (b.lower, b.upper) == (0, 0)


def test_bounds_ab_cubed():
    spec = GroupSpec(1, 2, INF, INF)
    g = eval_word("attbTT" * 3, spec)
    assert g.position == 0 and g.lamp_dict() == {0: 6}
    b = lemma_max_bounds(g)
    assert (b.window_sum, b.formula_upper) == (12, 22)
    # frozen from a breadth-first search (about 15 s): exact length 12
    assert b.lower <= 12 <= b.upper
    assert (b.lower, b.upper) == (12, 12)


def test_window_sum_counterexample():
    # a single generator (ab t ab) whose window sum claims length >= 2
    spec = GroupSpec(1, 1, 3, INF)
    g = eval_word("abtab", spec)
    assert g.lamp_dict() == {-1: 1, 0: 2, 1: 5}
    assert exact_length_bfs(g, spec) == 1
    assert lemma_max_bounds(g).window_sum == 2
    assert lemma_max_bounds(g).lower <= 1


@given(line_specs(), st.text(alphabet="Tt", max_size=6), st.text(alphabet="ab", max_size=4))
def test_small_lamps_have_no_sum_term(spec, moves, lamps_):
    g = eval_word(moves + "".join(ch + "T" for ch in lamps_), spec)
    if all(DihedralElem(v, spec.l).norm() <= 1 for _, v in g.lamps):
        assert lemma_max_bounds(g).window_sum == 0


def test_length_bounds_invariant():
    with pytest.raises(ValueError):
        LengthBounds(3, 2)
    with pytest.raises(ValueError):
        LengthBounds(1, 4, exact=5)


@settings(max_examples=80)
@given(line_specs(ls=(2, 3, 4, INF)), short_words)
def test_sandwich_and_range(spec, w):
    g = eval_word(w, spec)
    exact = exact_length_bfs(g, spec, cap=16)
    b = lemma_max_bounds(g)
    assert b.lower <= exact <= b.upper
    assert exact >= range_of(g).extent
    assert exact_length_bfs(g.inverse(), spec, cap=16) == exact


@settings(max_examples=40)
@given(line_specs(ls=(2, 3, INF)), st.text(alphabet="Ttab", max_size=5), st.text(alphabet="Ttab", max_size=5))
def test_triangle_inequality(spec, u, v):
    g, h = eval_word(u, spec), eval_word(v, spec)
    assert exact_length_bfs(g * h, spec, cap=16) <= exact_length_bfs(g, spec) + exact_length_bfs(h, spec)


@settings(max_examples=40)
@given(st.integers(0, 2), st.sampled_from([1, 2, 3]), short_words)
def test_quotient_monotone(k, l, w):
    big, small = GroupSpec(1, k, 2 * l, INF), GroupSpec(1, k, l, INF)
    g = eval_word(w, big)
    assert exact_length_bfs(g.project(l), small, cap=16) <= exact_length_bfs(g, big, cap=16)


@settings(max_examples=150)
@given(line_specs(max_k=3, ls=(1, 2, 3, 4, 5, 6, INF)), st.text(alphabet="Ttab", max_size=40))
def test_constructed_word_realizes_upper(spec, w):
    g = eval_word(w, spec)
    steps = construct_word(g)
    assert all(is_sws_step(s) for s in steps)
    assert eval_word("".join(steps), spec) == g
    b = lemma_max_bounds(g)
    assert len(steps) == b.upper
    assert b.lower <= b.upper


@settings(max_examples=60)
@given(st.sampled_from([1, 2, 3, 4, INF]), st.text(alphabet="Ttab", max_size=10))
def test_k0_bounds_are_exact(l, w):
    spec = GroupSpec(1, 0, l, INF)
    g = eval_word(w, spec)
    b = lemma_max_bounds(g)
    assert b.lower == b.upper == exact_length_bfs(g, spec, cap=20)


# local time ---------------------------------------------------------------------

def test_local_time_empty_path():
    assert local_time([], 1) == {}
    assert local_time([], 1, include_start=True) == {0: 1, 1: 1}


@pytest.mark.parametrize("k", [1, 2, 5])
def test_local_time_round_trip(k):
    path = [-1] * k + [1] * k
    assert local_time(path, k)[0] >= 2


def test_local_time_k0_counts_visits():
    t = local_time([1, -1, 1, 1, -1], 0, include_start=True)
    assert t == {0: 2, 1: 3, 2: 1}


@given(st.lists(st.sampled_from([1, -1]), max_size=60), st.integers(0, 4))
def test_local_time_total(incs, k):
    t = local_time(incs, k)
    assert sum(t.values()) <= 2 * len(incs)
    pos, visited = 0, set()
    for s in incs:
        pos += s
        visited |= {pos, pos + k}
    assert set(t) <= visited


def test_local_time_rejects_bad_steps():
    with pytest.raises(ValueError):
        local_time([2], 1)
