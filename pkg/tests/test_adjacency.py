import math

import numpy as np
import pytest

from lmspectra.adjacency import SparseSymMatrix, build_matrix, centred, complete_adjacency, complete_eigensystem, \
    complete_matvec, complete_signed_eigs, complete_unsigned_eigs, rank_of_shifted_complete, sample_row, \
    signed_adjacency, unsigned_adjacency
from lmspectra.cells import rank_cell, sample_complex, unrank_cell
from lmspectra.errors import InvalidParameterError, KindMismatchError
from lmspectra.lm_types import MatrixKind, SampleMode
from lmspectra.spectra import eigenvalues_dense, ks_distance


def test_single_triangle_unsigned(single_triangle):
    a = unsigned_adjacency(single_triangle).to_dense()
    faces = [rank_cell(c, 4) for c in [(1, 2), (1, 3), (2, 3)]]
    block = a[np.ix_(faces, faces)]
    assert np.array_equal(block, np.ones((3, 3)) - np.eye(3))
    assert a.sum() == 6


def test_single_triangle_signs(single_triangle):
    a = signed_adjacency(single_triangle)
    r = {c: rank_cell(c, 4) for c in [(1, 2), (1, 3), (2, 3)]}
    assert a.entry(r[(1, 2)], r[(1, 3)]) == 1
    assert a.entry(r[(1, 2)], r[(2, 3)]) == -1
    assert a.entry(r[(1, 3)], r[(2, 3)]) == 1


@pytest.mark.parametrize("kind", list(MatrixKind)[:4])
def test_sample_matrices_are_symmetric(small_sample, kind):
    dense = build_matrix(small_sample, kind).to_dense()
    assert np.array_equal(dense, dense.T)
    assert not np.any(np.diag(dense))


def test_row_sums_count_cofaces(small_sample):
    a = unsigned_adjacency(small_sample)
    present = set(small_sample.present_ranks().tolist())
    n, d = small_sample.n, small_sample.d
    for i in range(0, a.dim, 7):
        cols, _ = a.row(i)
        sigma_cofaces = sum(1 for r in present if _contains(r, i, n, d))
        assert cols.size == d * sigma_cofaces


def _contains(tau_rank, sigma_rank, n, d):
    return set(unrank_cell(sigma_rank, d - 1, n)) <= set(unrank_cell(tau_rank, d, n))


def test_oracle_rows_match_matrix(small_sample):
    lazy = sample_complex(small_sample.n, small_sample.d, small_sample.p, small_sample.seed, mode=SampleMode.LAZY)
    for signed in (False, True):
        matrix = signed_adjacency(small_sample) if signed else unsigned_adjacency(small_sample)
        for i in (0, 5, 40, matrix.dim - 1):
            cols, vals = sample_row(lazy, i, signed=signed)
            expected_cols, expected_vals = matrix.row(i)
            assert np.array_equal(cols, expected_cols)
            assert np.array_equal(vals, expected_vals)


@pytest.mark.parametrize("kind", [MatrixKind.CENTRED_UNSIGNED, MatrixKind.CENTRED_SIGNED])
def test_centred_matrix_operations(small_sample, kind):
    b = build_matrix(small_sample, kind)
    explicit = build_matrix(small_sample, MatrixKind.SIGNED if kind.is_signed else MatrixKind.UNSIGNED).to_dense()
    complete = complete_adjacency(small_sample.n, small_sample.d, kind.is_signed).to_dense()
    dense = b.to_dense()
    assert np.allclose(dense, explicit - small_sample.p * complete)
    x = np.random.default_rng(0).standard_normal(b.dim)
    assert np.allclose(b.matvec(x), dense @ x)
    assert b.trace_square() == pytest.approx(float(np.sum(dense * dense)))
    cols, vals = b.row(3)
    assert np.allclose(dense[3, cols], vals)
    assert np.count_nonzero(dense[3]) <= cols.size


def test_centring_twice_is_rejected(small_sample):
    b = build_matrix(small_sample, MatrixKind.CENTRED_UNSIGNED)
    with pytest.raises(KindMismatchError):
        centred(b, small_sample)
    with pytest.raises(KindMismatchError):
        build_matrix(small_sample, MatrixKind.COMPLETE_UNSIGNED)


def test_from_dense_checks_symmetry():
    with pytest.raises(InvalidParameterError):
        SparseSymMatrix.from_dense([[0, 1], [0, 0]])
    m = SparseSymMatrix.from_dense([[0, 2], [2, 0]])
    assert m.kind == MatrixKind.GENERIC
    assert m.is_symmetric()


@pytest.mark.parametrize("signed", [False, True])
def test_complete_matvec_matches_explicit(signed):
    n, d = 8, 3
    x = np.random.default_rng(1).standard_normal(math.comb(n, d))
    explicit = complete_adjacency(n, d, signed)
    assert np.allclose(complete_matvec(n, d, x, signed), explicit.matvec(x))


def test_complete_unsigned_closed_form():
    assert complete_unsigned_eigs(6, 2).as_tuples() == [(8.0, 1), (2.0, 5), (-2.0, 9)]


def _alternating_alpha(n, d, s):
    return sum((-1) ** (s - r) * math.comb(s, r) * (d - r) * math.comb(n - d - s + r, 1 - s + r)
               for r in range(max(s - 1, 0), min(s, d - 1) + 1))


@pytest.mark.parametrize("d", [2, 3])
def test_complete_unsigned_matches_alternating_sum(d):
    for n in range(2 * d, 13):
        expected = sorted(((float(_alternating_alpha(n, d, s)), math.comb(n, s) - math.comb(n, s - 1) if s else 1)
                           for s in range(d + 1)), reverse=True)
        assert complete_unsigned_eigs(n, d).as_tuples() == expected


def test_complete_signed_closed_form():
    assert complete_signed_eigs(6, 2).as_tuples() == [(4.0, 5), (-2.0, 10)]


@pytest.mark.parametrize("d,n", [(2, 6), (2, 8), (3, 7)])
@pytest.mark.parametrize("kind", [MatrixKind.COMPLETE_UNSIGNED, MatrixKind.COMPLETE_SIGNED])
def test_complete_spectra_match_dense(d, n, kind):
    system = complete_eigensystem(n, d, kind)
    dense = eigenvalues_dense(complete_adjacency(n, d, kind.is_signed))
    assert system.dim == math.comb(n, d)
    assert np.allclose(dense.as_array(), system.values(), atol=1e-8)


def test_shifted_complete_rank():
    assert rank_of_shifted_complete(6, 2) == 6
    assert rank_of_shifted_complete(7, 3) == math.comb(7, 2)
    assert rank_of_shifted_complete(6, 2, signed=True) == math.comb(5, 1)


def test_rank_inequality_between_a_and_b():
    n, d, p = 12, 2, 0.2
    sample = sample_complex(n, d, p, seed=4)
    a = eigenvalues_dense(build_matrix(sample, MatrixKind.UNSIGNED)).as_array()
    b = eigenvalues_dense(build_matrix(sample, MatrixKind.CENTRED_UNSIGNED)).as_array()
    bound = rank_of_shifted_complete(n, d) / math.comb(n, d)
    assert ks_distance(a + p * d, b, tol=1e-8) <= bound + 1e-12


def test_small_complete_unsigned_needs_n_at_least_2d():
    with pytest.raises(InvalidParameterError):
        complete_unsigned_eigs(5, 3)
