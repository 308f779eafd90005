from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from lmspectra.errors import InvalidParameterError, InvalidWordError
from lmspectra.words import beta_value, canonicalize, catalan_check, class_cardinality, enumerate_tilde_W, \
    enumerate_W, expected_moment, iter_tilde_words, labelled_path, moment_table, sign_of_word, signs_by_s, \
    unbounded_witness_count, validate_word, verify_unbounded_witness, word_supports

D2_ROWS = {3: [0, 2, 2, 6, 10, 22, 42, 86], 4: [0, 0, 0, 8, 20, 84, 224, 688],
           5: [0, 0, 0, 0, 0, 40, 168, 896], 6: [0, 0, 0, 0, 0, 0, 0, 224]}
D3_ROWS = {4: [0, 3, 6, 21, 60, 183, 546, 1641], 5: [0, 0, 0, 18, 90, 486, 2142, 9198],
           6: [0, 0, 0, 0, 0, 135, 1134, 8316], 7: [0, 0, 0, 0, 0, 0, 0, 1134]}

SAMPLE_WORD = [(3, 4), (3, 6), (6, 5), (3, 6), (3, 4)]


def test_canonical_form_by_first_appearance():
    assert canonicalize(SAMPLE_WORD) == ((1, 2), (1, 3), (3, 4), (1, 3), (1, 2))


def test_canonical_words_are_fixed_points():
    for word in iter_tilde_words(2, 4):
        assert canonicalize(word) == word


def test_labelled_path():
    assert labelled_path(SAMPLE_WORD) == [(2, 3), (1, 4), (4, 1), (3, 2)]


def test_word_supports():
    supports = word_supports(SAMPLE_WORD)
    assert supports.supp0 == frozenset({3, 4, 5, 6})
    assert supports.suppd == frozenset({(3, 4, 6), (3, 5, 6)})
    assert supports.multiplicities == {(3, 4, 6): 2, (3, 5, 6): 2}


@pytest.mark.parametrize("word", [[], [(1, 2), (3, 4)], [(1, 2), (1, 2, 3)], [(1, 1), (1, 2)], [(0, 1), (1, 2)],
                                  [("a", 2)]])
def test_invalid_words(word):
    with pytest.raises(InvalidWordError):
        validate_word(word)


def test_sign_needs_closed_word():
    with pytest.raises(InvalidWordError):
        sign_of_word([(1, 2), (1, 3)])


def test_sign_of_short_word():
    assert sign_of_word([(1, 2), (1, 3), (1, 2)]) == 1
    assert sign_of_word([(1, 2), (1, 3), (2, 3), (1, 2)]) == -1


@pytest.mark.parametrize("k", range(1, 9))
def test_d2_table(k):
    counts = enumerate_tilde_W(2, k).coefficients
    for s, row in D2_ROWS.items():
        assert counts.get(s, 0) == row[k - 1]


@pytest.mark.parametrize("k", range(1, 8))
def test_d3_table(k):
    counts = enumerate_tilde_W(3, k).coefficients
    for s, row in D3_ROWS.items():
        assert counts.get(s, 0) == row[k - 1]


@pytest.mark.slow
def test_d3_table_longest_words():
    counts = enumerate_tilde_W(3, 8).coefficients
    assert {s: counts[s] for s in D3_ROWS} == {s: row[7] for s, row in D3_ROWS.items()}


@pytest.mark.parametrize("d", [2, 3, 4])
def test_low_order_beta(d):
    assert enumerate_tilde_W(d, 1).nonzero() == {}
    assert enumerate_tilde_W(d, 2).value(Fraction(3)) == 3 * d
    assert enumerate_tilde_W(d, 3).value(Fraction(3)) == 3 * d * (d - 1)


def test_beta_value():
    assert beta_value(2, 4, 1.0) == 14
    assert beta_value(2, 2, 0.5) == pytest.approx(1.0)
    with pytest.raises(InvalidParameterError):
        beta_value(2, 4, 0.0)


@pytest.mark.parametrize("d", [2, 3])
@pytest.mark.parametrize("k", [2, 4, 6])
def test_catalan_top_coefficient(d, k):
    assert catalan_check(d, k)


def test_catalan_needs_even_order():
    with pytest.raises(InvalidParameterError):
        catalan_check(2, 3)


@pytest.mark.parametrize("d,k", [(2, 2), (2, 3), (2, 4), (2, 5), (3, 3), (3, 4)])
def test_tilde_signs_are_uniform(d, k):
    for tally in signs_by_s(d, k).values():
        assert set(tally) == {(-1) ** k}


def test_signs_agree_with_explicit_words():
    for d, k in [(2, 4), (3, 3)]:
        assert {sign_of_word(word) for word in iter_tilde_words(d, k)} == {(-1) ** k}


def test_listed_words_match_counts():
    words = list(iter_tilde_words(2, 4))
    assert len(words) == 14
    assert len(set(words)) == 14
    assert all(word[0] == word[-1] == (1, 2) for word in words)


def test_full_and_tilde_counts():
    assert enumerate_W(2, 2) == {3: 2}
    assert enumerate_W(2, 4) == {3: 6, 4: 8}
    for k in (3, 5, 6):
        full, tilde = enumerate_W(2, k), enumerate_tilde_W(2, k).coefficients
        for s in full:
            assert tilde[s] <= full[s] <= (2 * s) ** k


def test_class_cardinality():
    assert class_cardinality(2, 3, 4) == 12
    assert class_cardinality(2, 2, 2) == 1
    with pytest.raises(InvalidParameterError):
        class_cardinality(3, 2, 5)


@pytest.mark.parametrize("d,k,witnesses", [(2, 1, 4), (2, 2, 64), (3, 1, 9)])
def test_unbounded_witness(d, k, witnesses):
    assert unbounded_witness_count(d, k) == witnesses
    assert verify_unbounded_witness(d, k)


def test_exact_expected_moments():
    assert expected_moment(2, 2, 100, 0.01) == pytest.approx(1.9404)
    assert expected_moment(2, 3, 100, 0.01) == pytest.approx(2 * 98 * 0.01 * 0.99 * 0.98)
    assert expected_moment(2, 0, 100, 0.01) == 1.0
    assert expected_moment(2, 1, 100, 0.01) == 0.0
    assert expected_moment(2, 4, 100, 0.0) == 0.0


def test_moment_table_rows():
    table = moment_table(2, k_max=4)
    assert list(table) == [1, 2, 3, 4]
    assert table[4].nonzero() == {3: 6, 4: 8}


@pytest.mark.parametrize("d,k", [(0, 2), (2, 0)])
def test_invalid_enumeration_parameters(d, k):
    with pytest.raises(InvalidParameterError):
        enumerate_tilde_W(d, k)


@given(st.permutations(list(range(1, 13))), st.sampled_from(list(iter_tilde_words(2, 6))))
def test_relabeling_keeps_class(perm, word):
    mapping = dict(zip(range(1, 13), perm))
    # σ_1 keeps its relative order so the canonical form is unchanged
    first = sorted(mapping[v] for v in word[0])
    mapping.update(zip(word[0], first))
    relabelled = [tuple(mapping[v] for v in letter) for letter in word]
    assert canonicalize(relabelled) == word
    assert labelled_path(relabelled) == labelled_path(word)
