import logging
import math
from functools import lru_cache
from typing import Optional

import numpy as np
import scipy.sparse as sp

from lmspectra import settings
from lmspectra.cells import ComplexSample, facet_ranks, ridge_neighborhood, unrank_many
from lmspectra.errors import InvalidParameterError, KindMismatchError, ResourceCapError
from lmspectra.lm_types import EigenPair, EigenSystem, MatrixKind, SpectrumMeta

logger = logging.getLogger(__name__)


class SparseSymMatrix:
    """
    Symmetric matrix over (d-1)-cells indexed by colex rank.

    The explicit part is a CSR matrix with sorted column indices. Centred kinds keep
    A (or A⁺) explicit and apply the -shift·𝔸 correction on the fly, so B = base - shift·𝔸.
    """

    def __init__(self, base: sp.csr_matrix, kind: MatrixKind, n: Optional[int] = None, d: Optional[int] = None,
                 p: Optional[float] = None, seed: Optional[int] = None, shift: float = 0.0):
        base = sp.csr_matrix(base, dtype=np.float64)
        base.sum_duplicates()
        base.sort_indices()
        if base.shape[0] != base.shape[1]:
            raise InvalidParameterError(f"matrix must be square, got shape {base.shape}")
        if shift and (n is None or d is None):
            raise InvalidParameterError("centred matrices need (n, d) for the complete-complex correction")
        self.base = base
        self.kind = MatrixKind(kind)
        self.n = n
        self.d = d
        self.p = p
        self.seed = seed
        self.shift = float(shift)

    @classmethod
    def from_dense(cls, array, kind: MatrixKind = MatrixKind.GENERIC) -> "SparseSymMatrix":
        """Wrap an externally supplied symmetric matrix."""
        array = np.asarray(array, dtype=np.float64)
        if array.ndim != 2 or array.shape[0] != array.shape[1]:
            raise InvalidParameterError(f"expected a square matrix, got shape {array.shape}")
        if not np.array_equal(array, array.T):
            raise InvalidParameterError("matrix is not symmetric")
        return cls(sp.csr_matrix(array), kind=kind)

    @property
    def dim(self) -> int:
        return self.base.shape[0]

    @property
    def nnz(self) -> int:
        """Stored entries of the explicit part."""
        return int(self.base.nnz)

    def meta(self) -> SpectrumMeta:
        return SpectrumMeta(n=self.n, d=self.d, p=self.p, seed=self.seed, kind=self.kind)

    def row(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        """(sorted column indices, values) of row i, correction included."""
        start, stop = self.base.indptr[i], self.base.indptr[i + 1]
        cols, vals = self.base.indices[start:stop].astype(np.int64), self.base.data[start:stop]
        if not self.shift:
            return cols, vals.copy()
        neighbors, signs, _ = ridge_neighborhood(self.n, self.d, i)
        weights = signs.astype(np.float64) if self.kind.is_signed else np.ones(neighbors.size)
        full = -self.shift * weights
        # the explicit support sits inside the complete support
        full[np.searchsorted(neighbors, cols)] += vals
        return neighbors, full

    def entry(self, i: int, j: int) -> float:
        cols, vals = self.row(i)
        k = np.searchsorted(cols, j)
        return float(vals[k]) if k < cols.size and cols[k] == j else 0.0

    def matvec(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        y = self.base @ x
        if self.shift:
            y = y - self.shift * complete_matvec(self.n, self.d, x, signed=self.kind.is_signed)
        return y

    def to_dense(self) -> np.ndarray:
        dense = self.base.toarray()
        if self.shift:
            dense -= self.shift * complete_adjacency(self.n, self.d, self.kind.is_signed).base.toarray()
        return dense

    def is_symmetric(self) -> bool:
        difference = self.base - self.base.T
        return difference.count_nonzero() == 0

    def trace_square(self) -> float:
        """trace(M²) from the sparse structure; exact for centred kinds as well."""
        if not self.shift:
            return float(np.dot(self.base.data, self.base.data))
        # entries of B are sign·(χ - p) on the d(n-d) Johnson neighbors of every row
        p = self.shift
        return self.nnz * (1.0 - 2.0 * p) + p * p * self.dim * self.d * (self.n - self.d)


def _check_sample_kind(kind: MatrixKind, allowed: tuple) -> MatrixKind:
    kind = MatrixKind(kind)
    if kind not in allowed:
        raise KindMismatchError(f"kind {kind.value} not supported here, expected one of {[k.value for k in allowed]}")
    return kind


def _matrix_from_dcells(dcell_ranks: np.ndarray, n: int, d: int, signed: bool) -> sp.csr_matrix:
    """Sum over the given d-cells of their (d+1)-clique on facets, signed by position parity."""
    dim = math.comb(n, d)
    dcell_ranks = np.asarray(dcell_ranks, dtype=np.int64)
    if dcell_ranks.size == 0:
        return sp.csr_matrix((dim, dim), dtype=np.float64)
    facets = facet_ranks(unrank_many(dcell_ranks, d, n), n)
    rows, cols, vals = [], [], []
    for i in range(d + 1):
        for j in range(d + 1):
            if i == j:
                continue
            rows.append(facets[:, i])
            cols.append(facets[:, j])
            sign = 1.0 if (not signed or (i - j) % 2 == 1) else -1.0
            vals.append(np.full(facets.shape[0], sign))
    return sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(dim, dim))


def unsigned_adjacency(sample: ComplexSample) -> SparseSymMatrix:
    """A[σ, σ'] = 1 iff σ ∪ σ' is a present d-cell."""
    base = _matrix_from_dcells(sample.present_ranks(), sample.n, sample.d, signed=False)
    logger.debug(f"[MATRIX] unsigned n={sample.n} d={sample.d}: dim={base.shape[0]} nnz={base.nnz}")
    return SparseSymMatrix(base, MatrixKind.UNSIGNED, n=sample.n, d=sample.d, p=sample.p, seed=sample.seed)


def signed_adjacency(sample: ComplexSample) -> SparseSymMatrix:
    """A⁺[σ, σ'] = +1 for removed positions of different parity in σ ∪ σ', -1 for equal parity."""
    base = _matrix_from_dcells(sample.present_ranks(), sample.n, sample.d, signed=True)
    logger.debug(f"[MATRIX] signed n={sample.n} d={sample.d}: dim={base.shape[0]} nnz={base.nnz}")
    return SparseSymMatrix(base, MatrixKind.SIGNED, n=sample.n, d=sample.d, p=sample.p, seed=sample.seed)


def centred(matrix: SparseSymMatrix, sample: ComplexSample) -> SparseSymMatrix:
    """B = A - p·𝔸 (resp. B⁺ = A⁺ - p·𝔸⁺), with 𝔸 applied implicitly."""
    kind = _check_sample_kind(matrix.kind, (MatrixKind.UNSIGNED, MatrixKind.SIGNED))
    if matrix.n != sample.n or matrix.d != sample.d:
        raise KindMismatchError("matrix and sample describe different complexes")
    target = MatrixKind.CENTRED_SIGNED if kind == MatrixKind.SIGNED else MatrixKind.CENTRED_UNSIGNED
    return SparseSymMatrix(matrix.base, target, n=sample.n, d=sample.d, p=sample.p, seed=sample.seed, shift=sample.p)


def build_matrix(sample: ComplexSample, kind: MatrixKind) -> SparseSymMatrix:
    """Any of the four sample-based kinds."""
    kind = _check_sample_kind(kind, (MatrixKind.UNSIGNED, MatrixKind.SIGNED,
                                     MatrixKind.CENTRED_UNSIGNED, MatrixKind.CENTRED_SIGNED))
    matrix = signed_adjacency(sample) if kind.is_signed else unsigned_adjacency(sample)
    return centred(matrix, sample) if kind.is_centred else matrix


def sample_row(sample: ComplexSample, rank: int, signed: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """Row of A (or A⁺) generated from the presence oracle alone."""
    neighbors, signs, owners = ridge_neighborhood(sample.n, sample.d, rank)
    keep = sample.contains_ranks(owners)
    values = signs[keep].astype(np.float64) if signed else np.ones(int(keep.sum()))
    return neighbors[keep], values


@lru_cache(maxsize=8)
def _complete_facets(n: int, d: int) -> np.ndarray:
    total = math.comb(n, d + 1)
    if total > settings.COMPLETE_TABLE_CAP:
        raise ResourceCapError(f"complete complex on n={n}, d={d} has {total} d-cells, "
                               f"above LM_SPECTRA_COMPLETE_TABLE_CAP={settings.COMPLETE_TABLE_CAP}")
    facets = facet_ranks(unrank_many(np.arange(total, dtype=np.int64), d, n), n)
    facets.setflags(write=False)
    return facets


def complete_adjacency(n: int, d: int, signed: bool = False) -> SparseSymMatrix:
    """Explicit 𝔸ₙ (or 𝔸ₙ⁺): every d-cell present."""
    if d < 1 or n < d + 1:
        raise InvalidParameterError(f"complete complex needs d >= 1 and n >= d+1, got n={n}, d={d}")
    base = _matrix_from_dcells(np.arange(math.comb(n, d + 1), dtype=np.int64), n, d, signed)
    kind = MatrixKind.COMPLETE_SIGNED if signed else MatrixKind.COMPLETE_UNSIGNED
    return SparseSymMatrix(base, kind, n=n, d=d, p=1.0)


def complete_matvec(n: int, d: int, x: np.ndarray, signed: bool = False) -> np.ndarray:
    """𝔸x (or 𝔸⁺x) summed d-cell by d-cell, without storing 𝔸."""
    facets = _complete_facets(n, d)
    dim = math.comb(n, d)
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (dim,):
        raise InvalidParameterError(f"vector has shape {x.shape}, expected ({dim},)")
    gathered = x[facets]
    y = np.zeros(dim)
    if not signed:
        total = gathered.sum(axis=1)
        for i in range(d + 1):
            y += np.bincount(facets[:, i], weights=total - gathered[:, i], minlength=dim)
        return y
    even = gathered[:, 0::2].sum(axis=1)
    odd = gathered[:, 1::2].sum(axis=1)
    for i in range(d + 1):
        # +1 towards the other parity class, -1 towards the rest of its own class
        contribution = (odd - even if i % 2 == 0 else even - odd) + gathered[:, i]
        y += np.bincount(facets[:, i], weights=contribution, minlength=dim)
    return y


def _binom(a: int, b: int) -> int:
    if a < 0 or b < 0 or b > a:
        return 0
    return math.comb(a, b)


def complete_unsigned_eigs(n: int, d: int) -> EigenSystem:
    """Spectrum of the complete line graph 𝔸ₙ (a Johnson graph J(n, d))."""
    if d < 1 or n < 2 * d:
        raise InvalidParameterError(f"complete_unsigned_eigs needs n >= 2d, got n={n}, d={d}")
    pairs = []
    for s in range(d + 1):
        alpha = (d - s) * (n - d - s) - s
        multiplicity = _binom(n, s) - _binom(n, s - 1)
        pairs.append(EigenPair(value=float(alpha), multiplicity=multiplicity))
    pairs.sort(key=lambda pair: -pair.value)
    return EigenSystem(pairs=pairs)


def complete_signed_eigs(n: int, d: int) -> EigenSystem:
    """{(n-d, C(n-1, d-1)), (-d, C(n-1, d))}."""
    if d < 1 or n < d + 1:
        raise InvalidParameterError(f"complete_signed_eigs needs n >= d+1, got n={n}, d={d}")
    pairs = [EigenPair(value=float(n - d), multiplicity=math.comb(n - 1, d - 1)),
             EigenPair(value=float(-d), multiplicity=math.comb(n - 1, d))]
    return EigenSystem(pairs=[pair for pair in pairs if pair.multiplicity > 0])


def complete_eigensystem(n: int, d: int, kind: MatrixKind) -> EigenSystem:
    kind = _check_sample_kind(kind, (MatrixKind.COMPLETE_UNSIGNED, MatrixKind.COMPLETE_SIGNED))
    return complete_signed_eigs(n, d) if kind.is_signed else complete_unsigned_eigs(n, d)


def rank_of_shifted_complete(n: int, d: int, signed: bool = False, tol: float = 1e-8) -> int:
    """rank(𝔸 + dI) from the closed-form spectrum."""
    system = complete_signed_eigs(n, d) if signed else complete_unsigned_eigs(n, d)
    return sum(pair.multiplicity for pair in system.pairs if abs(pair.value + d) > tol)
