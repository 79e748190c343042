import pytest
from hypothesis import given
from hypothesis import strategies as st

from lampspeed.groups import (
    INF,
    DiagonalSpec,
    DihedralElem,
    FreeWord,
    GroupSpec,
    WreathElem,
    diagonal_eval,
    dihedral_mul,
    dihedral_word,
    eval_word,
    evaluate,
    is_identity,
    parse_spec,
    wreath_inv,
    wreath_mul,
)

from strategies import sizes, specs, words


def letters(word, l):
    out = DihedralElem.identity(l)
    for ch in word:
        out = out * (DihedralElem.a(l) if ch == "a" else DihedralElem.b(l))
    return out


# dihedral ------------------------------------------------------------------

def test_a_squared_is_identity_in_dinf():
    a = DihedralElem.a(INF)
    assert dihedral_mul(a, a, INF).is_identity()


def test_abab_equals_ba_in_d3():
    assert letters("abab", 3) == letters("ba", 3)


def test_norm_of_abab_in_d4():
    assert letters("abab", 4).norm() == 4


@given(sizes, st.text(alphabet="ab", max_size=20))
def test_norm_is_minimal_word_length(l, w):
    x = letters(w, l)
    assert len(x.word()) == x.norm()
    assert letters(x.word(), l) == x
    if l is not INF:
        assert x.norm() <= l


@given(sizes)
def test_relators(l):
    a, b = DihedralElem.a(l), DihedralElem.b(l)
    assert (a * a).is_identity() and (b * b).is_identity()
    if l is not INF:
        assert ((a * b) ** l).is_identity()


def test_tie_at_norm_l():
    # even l: the b-word has the shorter (ab)-core; odd l: a-word
    assert dihedral_word(4, 4) == "baba"
    assert dihedral_word(3, 3) == "aba"


@given(sizes, st.text(alphabet="ab", max_size=12), st.text(alphabet="ab", max_size=12),
       st.text(alphabet="ab", max_size=12))
def test_dihedral_associative(l, u, v, w):
    x, y, z = letters(u, l), letters(v, l), letters(w, l)
    assert (x * y) * z == x * (y * z)
    assert (x * x.inverse()).is_identity()


# evaluation ----------------------------------------------------------------

def test_empty_word_is_identity():
    assert eval_word("", GroupSpec(1, 2, 3, INF)).is_identity()


def test_alpha_beta_in_gamma_2_3():
    g = eval_word("ab", GroupSpec(1, 2, 3, INF))
    assert g.position == 0
    assert g.lamp_dict() == {0: 1, 2: DihedralElem.b(3).code}


def test_shifted_alpha_beta():
    g = eval_word("τ α β τ⁻¹", GroupSpec(1, 1, INF, INF))
    assert g.position == 0
    assert g.lamp_dict() == {1: 1, 2: -1}


def test_shift_action():
    spec = GroupSpec(1, 0, 2, INF)
    g = wreath_mul(eval_word("T", spec), eval_word("a", spec))
    assert g.position == 1 and g.lamp_dict() == {1: 1}


def test_identity_and_inverse():
    spec = GroupSpec(1, 2, 5, 11)
    g = eval_word("TaTbtta", spec)
    assert wreath_mul(spec.identity(), g) == g
    assert wreath_mul(g, wreath_inv(g)).is_identity()


def test_spec_mismatch_is_error():
    with pytest.raises(ValueError):
        eval_word("a", GroupSpec(1, 0, 2, INF)) * eval_word("a", GroupSpec(1, 0, 3, INF))


def test_invalid_specs():
    with pytest.raises(ValueError):
        GroupSpec(1, 3, 2, 6)
    with pytest.raises(ValueError):
        GroupSpec(0, 0, 2, INF)
    with pytest.raises(ValueError):
        DiagonalSpec((GroupSpec(1, 3, 2, INF), GroupSpec(1, 1, 2, INF)))


@given(specs(), words, words)
def test_homomorphism(spec, u, v):
    assert eval_word(u + v, spec) == eval_word(u, spec) * eval_word(v, spec)


@given(specs(), words)
def test_involutions_and_free_inverse(spec, w):
    assert eval_word("aa", spec).is_identity()
    assert eval_word("bb", spec).is_identity()
    word = FreeWord.parse(w)
    g = evaluate(spec, word)
    assert evaluate(spec, word.inverse()) == g.inverse()
    assert evaluate(spec, word.reduced()) == g


@given(st.integers(1, 6), st.sampled_from([INF, 7, 9]))
def test_common_site_relator(l, m):
    # with k = 0 both letters act on site 0, so (ab)^l is a relator
    spec = GroupSpec(1, 0, l, m)
    assert eval_word("ab" * l, spec).is_identity()


@given(st.integers(0, 3), st.sampled_from([1, 2, 3, 4, INF]), words)
def test_projection_commutes_with_eval(k, l, w):
    big = 2 * l if l is not INF else INF
    g = eval_word(w, GroupSpec(1, k, big, INF))
    assert g.project(l) == eval_word(w, GroupSpec(1, k, l, INF))


@given(specs(), words)
def test_no_identity_lamps_stored(spec, w):
    g = spec.identity()
    for ch in w:
        g = g * spec.gen(ch)
        assert all(v != 0 for _, v in g.lamps)
        if spec.m is not INF:
            assert all(0 <= x < spec.m for x, _ in g.lamps)


@given(st.integers(0, 2), st.sampled_from([2, 3, INF]),
       st.lists(st.sampled_from(["T", "t", "a", "b", "T1", "t1"]), max_size=12))
def test_level2_homomorphism(k, l, letters_):
    spec = GroupSpec(2, k, l, INF)
    word = FreeWord(tuple(letters_))
    half = len(word) // 2
    left, right = FreeWord(word.letters[:half]), FreeWord(word.letters[half:])
    g = evaluate(spec, word)
    assert g == evaluate(spec, left) * evaluate(spec, right)
    assert all(not v.is_identity() for _, v in g.lamps)


def test_level2_generators_act_at_zero():
    spec = GroupSpec(2, 3, 4, INF)
    g = eval_word("Tb", spec)
    lamp = g.lamp(1)
    assert isinstance(lamp, WreathElem) and lamp.lamp_dict() == {3: DihedralElem.b(4).code}


# diagonal products ---------------------------------------------------------

def test_diagonal_empty_word():
    spec = DiagonalSpec((GroupSpec(1, 1, 2, INF), GroupSpec(1, 3, 2, INF)))
    assert all(x.is_identity() for x in diagonal_eval("", spec))


def test_diagonal_abab_is_trivial():
    spec = DiagonalSpec((GroupSpec(1, 1, 2, INF), GroupSpec(1, 3, 2, INF)))
    assert is_identity(diagonal_eval("abab", spec))


@given(st.text(alphabet="Ttab", min_size=1, max_size=6))
def test_diagonal_detects_nontrivial_words(w):
    base = GroupSpec(1, 0, 2, INF)
    spec = DiagonalSpec((GroupSpec(1, 7, 3, 15), GroupSpec(1, 8, 2, INF)))
    if not eval_word(w, base).is_identity():
        assert not is_identity(diagonal_eval(w, spec))


# serialization ---------------------------------------------------------------

@given(specs(max_k=6))
def test_spec_round_trip(spec):
    assert GroupSpec.parse(spec.to_text()) == spec
    assert parse_spec(spec.to_text()) == spec


def test_diagonal_round_trip():
    spec = DiagonalSpec((GroupSpec(1, 9, 2, 513), GroupSpec(1, 0, 2, INF)), tail=True)
    text = spec.to_text()
    assert text == "diag: i=1,k=9,l=2,m=513; i=1,k=0,l=2,m=inf,tail"
    assert parse_spec(text) == spec
    assert DiagonalSpec.parse("diag:") == DiagonalSpec(())


def test_word_parsing():
    assert FreeWord.parse("τ α β τ⁻¹").text == "Tabt"
    assert FreeWord.parse("ε").text == ""
    assert str(FreeWord.parse("")) == "ε"
    with pytest.raises(ValueError):
        FreeWord.parse("axb")
