"""
Cell combinatorics and sampling of Linial-Meshulam complexes Y_d(n, p).

Cells are strictly increasing tuples of 1-based vertices. j-cells on [1, n] are
indexed by their colexicographic rank r({v_1<...<v_{j+1}}) = Σ_i C(v_i - 1, i),
which does not depend on n, so matrix rows keep their order when n grows.

Presence of a d-cell τ is a pure function of (p, seed, rank(τ)):

    h = splitmix64_finalizer(seed XOR (rank(τ) * 0x9E3779B97F4A7C15 mod 2^64))
    τ present  iff  h < floor(p * 2^64)        (p == 1: always present)

so every cell can be queried without materializing the complex, and for a
fixed seed the complexes are nested in p.
"""
import logging
import math
from functools import lru_cache
from typing import Iterable, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PrivateAttr, model_validator

from lmspectra import settings
from lmspectra.errors import InvalidCellError, InvalidParameterError
from lmspectra.lm_types import ComplexRecord, SampleMode

logger = logging.getLogger(__name__)

Cell = tuple[int, ...]

GOLDEN_GAMMA = 0x9E3779B97F4A7C15
MIX_MUL_1 = 0xBF58476D1CE4E5B9
MIX_MUL_2 = 0x94D049BB133111EB
MASK64 = (1 << 64) - 1
INT64_MAX = (1 << 63) - 1

_SCAN_CHUNK = 1 << 20

_U30 = np.uint64(30)
_U27 = np.uint64(27)
_U31 = np.uint64(31)


def validate_cell(cell: Iterable[int], n: Optional[int] = None, dim: Optional[int] = None) -> Cell:
    """Return cell as a tuple after checking order, range and (optionally) dimension."""
    try:
        vertices = tuple(int(v) for v in cell)
    except (TypeError, ValueError):
        raise InvalidCellError(f"cell must be a sequence of integers, got {cell!r}")
    if not vertices:
        raise InvalidCellError("cell must contain at least one vertex")
    if any(b <= a for a, b in zip(vertices, vertices[1:])):
        raise InvalidCellError(f"cell {vertices} is not strictly increasing")
    if vertices[0] < 1:
        raise InvalidCellError(f"cell {vertices} has a vertex below 1")
    if n is not None and vertices[-1] > n:
        raise InvalidCellError(f"cell {vertices} has a vertex above n={n}")
    if dim is not None and len(vertices) != dim + 1:
        raise InvalidCellError(f"cell {vertices} has dimension {len(vertices) - 1}, expected {dim}")
    return vertices


def rank_cell(cell: Iterable[int], n: int) -> int:
    """Colex rank of a cell on [1, n]."""
    vertices = validate_cell(cell, n)
    return sum(math.comb(v - 1, i) for i, v in enumerate(vertices, start=1))


def unrank_cell(r: int, j: int, n: int) -> Cell:
    """Inverse of rank_cell for j-cells on [1, n]."""
    if j < 0:
        raise InvalidParameterError(f"cell dimension must be >= 0, got {j}")
    total = math.comb(n, j + 1)
    if not 0 <= r < total:
        raise InvalidParameterError(f"rank {r} out of range [0, {total}) for {j}-cells on n={n}")
    vertices = []
    upper = n - 1  # largest admissible value of v_i - 1
    for i in range(j + 1, 0, -1):
        # largest c in [i-1, upper] with C(c, i) <= r
        lo, hi = i - 1, upper
        while lo < hi:
            mid = (lo + hi + 1) // 2
            if math.comb(mid, i) <= r:
                lo = mid
            else:
                hi = mid - 1
        vertices.append(lo + 1)
        r -= math.comb(lo, i)
        upper = lo - 1
    return tuple(reversed(vertices))


def boundary(tau: Iterable[int]) -> list[Cell]:
    """Facets of tau, ordered by the position of the removed vertex."""
    vertices = validate_cell(tau)
    if len(vertices) < 2:
        raise InvalidCellError(f"boundary needs a cell of dimension >= 1, got {vertices}")
    return [vertices[:i] + vertices[i + 1:] for i in range(len(vertices))]


def mix64(z: int) -> int:
    """splitmix64 output finalizer on a 64-bit integer."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * MIX_MUL_1) & MASK64
    z = ((z ^ (z >> 27)) * MIX_MUL_2) & MASK64
    return z ^ (z >> 31)


def presence_hash(seed: int, rank: int) -> int:
    return mix64((seed & MASK64) ^ ((rank * GOLDEN_GAMMA) & MASK64))


def presence_threshold(p: float) -> Optional[int]:
    """floor(p * 2^64); None means every cell is present."""
    if p >= 1.0:
        return None
    return int(math.ldexp(p, 64))


def _mix64_array(z: np.ndarray) -> np.ndarray:
    z = z ^ (z >> _U30)
    z = z * np.uint64(MIX_MUL_1)
    z = z ^ (z >> _U27)
    z = z * np.uint64(MIX_MUL_2)
    return z ^ (z >> _U31)


def presence_mask(ranks, p: float, seed: int) -> np.ndarray:
    """Vectorized presence rule, bit-identical to contains_dcell."""
    ranks = np.asarray(ranks)
    threshold = presence_threshold(p)
    if threshold is None:
        return np.ones(ranks.shape, dtype=bool)
    if threshold == 0:
        return np.zeros(ranks.shape, dtype=bool)
    scrambled = ranks.astype(np.uint64) * np.uint64(GOLDEN_GAMMA)
    h = _mix64_array(np.uint64(seed & MASK64) ^ scrambled)
    return h < np.uint64(threshold)


@lru_cache(maxsize=32)
def binomial_table(n: int, k_max: int) -> np.ndarray:
    """table[c, i] = C(c, i) for 0 <= c <= n, 0 <= i <= k_max (int64, read-only)."""
    if math.comb(n, min(k_max, n // 2)) > INT64_MAX:
        raise InvalidParameterError(f"C({n}, <= {k_max}) does not fit in 64 bits")
    table = np.zeros((n + 1, k_max + 1), dtype=np.int64)
    for c in range(n + 1):
        for i in range(min(c, k_max) + 1):
            table[c, i] = math.comb(c, i)
    table.setflags(write=False)
    return table


def rank_many(cells: np.ndarray, n: int) -> np.ndarray:
    """Colex ranks of the rows of an (m, j+1) array of sorted 1-based cells."""
    cells = np.asarray(cells, dtype=np.int64)
    if cells.ndim != 2:
        raise InvalidParameterError("rank_many expects a 2-d array of cells")
    width = cells.shape[1]
    table = binomial_table(n, width)
    return table[cells - 1, np.arange(1, width + 1)].sum(axis=1)


def unrank_many(ranks, j: int, n: int) -> np.ndarray:
    """Vectorized unrank_cell: returns an (m, j+1) array of sorted 1-based cells."""
    remaining = np.array(ranks, dtype=np.int64, copy=True).reshape(-1)
    if remaining.size and (remaining.min() < 0 or remaining.max() >= math.comb(n, j + 1)):
        raise InvalidParameterError(f"ranks out of range for {j}-cells on n={n}")
    table = binomial_table(n, j + 1)
    out = np.empty((remaining.size, j + 1), dtype=np.int64)
    for i in range(j + 1, 0, -1):
        column = table[:, i]
        c = np.searchsorted(column, remaining, side="right") - 1
        out[:, i - 1] = c + 1
        remaining -= column[c]
    return out


def completions(sigma: Sequence[int], n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    The n - d d-cells containing the (d-1)-cell sigma.

    Returns (cells, ranks, added_position): cells is (n-d, d+1) sorted, and
    added_position[t] is the 0-based position of the added vertex inside cells[t].
    """
    base = np.asarray(sigma, dtype=np.int64)
    extra = np.setdiff1d(np.arange(1, n + 1, dtype=np.int64), base, assume_unique=True)
    cells = np.sort(np.concatenate([np.broadcast_to(base, (extra.size, base.size)), extra[:, None]], axis=1), axis=1)
    added_position = np.searchsorted(base, extra)
    return cells, rank_many(cells, n), added_position


def facet_ranks(cells: np.ndarray, n: int) -> np.ndarray:
    """(m, d+1) ranks of the facets of each row; column i drops vertex position i."""
    cells = np.asarray(cells, dtype=np.int64)
    width = cells.shape[1]
    return np.stack([rank_many(np.delete(cells, i, axis=1), n) for i in range(width)], axis=1)


def ridge_neighborhood(n: int, d: int, rank: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Neighbors of a (d-1)-cell in the complete complex.

    Returns (neighbor ranks, signs, d-cell ranks), sorted by neighbor rank. The sign of
    σ' is +1 when the removed vertices of σ and σ' sit at positions of different
    parity inside τ = σ ∪ σ', and -1 otherwise.
    """
    sigma = unrank_cell(rank, d - 1, n)
    cells, cell_ranks, added_position = completions(sigma, n)
    facets = facet_ranks(cells, n)
    position = np.arange(d + 1)[None, :]
    keep = position != added_position[:, None]
    signs = np.where((position - added_position[:, None]) % 2 == 1, 1, -1)
    owners = np.broadcast_to(cell_ranks[:, None], facets.shape)
    neighbors, signs, owners = facets[keep], signs[keep], owners[keep]
    order = np.argsort(neighbors, kind="stable")
    return neighbors[order], signs[order].astype(np.int8), owners[order]


@lru_cache(maxsize=4)
def _pair_indices(m: int) -> tuple[np.ndarray, np.ndarray]:
    rows, cols = np.triu_indices(m, k=1)
    rows, cols = rows.astype(np.int32), cols.astype(np.int32)
    rows.setflags(write=False)
    cols.setflags(write=False)
    return rows, cols


def face_cofaces(sample: "ComplexSample", face: Sequence[int]) -> np.ndarray:
    """
    Present d-cells containing a (d-2)-dimensional face.

    Returns a (K, 2) array of the added vertex pairs (x < y), in lexicographic order.
    """
    n, d = sample.n, sample.d
    base = np.asarray(validate_cell(face, n, d - 2), dtype=np.int64)
    extra = np.setdiff1d(np.arange(1, n + 1, dtype=np.int64), base, assume_unique=True)
    rows, cols = _pair_indices(extra.size)
    parts = []
    for start in range(0, rows.size, _SCAN_CHUNK):
        x, y = extra[rows[start:start + _SCAN_CHUNK]], extra[cols[start:start + _SCAN_CHUNK]]
        cells = np.sort(np.column_stack([np.broadcast_to(base, (x.size, base.size)), x, y]), axis=1)
        keep = sample.contains_ranks(rank_many(cells, n))
        parts.append(np.column_stack([x[keep], y[keep]]))
    return np.concatenate(parts) if parts else np.empty((0, 2), dtype=np.int64)


def _validate_parameters(n: int, d: int, p: float) -> None:
    if d < 2:
        raise InvalidParameterError(f"d must be >= 2, got {d}")
    if n < d + 1:
        raise InvalidParameterError(f"n must be >= d+1, got n={n}, d={d}")
    if not 0.0 <= p <= 1.0 or math.isnan(p):
        raise InvalidParameterError(f"p must lie in [0, 1], got {p}")
    if math.comb(n, d + 1) > INT64_MAX:
        raise InvalidParameterError(f"C({n}, {d + 1}) d-cells do not fit in 64-bit ranks")


class ComplexSample(BaseModel):
    """A realized (materialized/explicit) or lazily queried Y_d(n, p)."""
    model_config = ConfigDict(frozen=True)

    n: int
    d: int
    p: float
    seed: int = Field(default=settings.DEFAULT_SEED)
    mode: SampleMode = SampleMode.LAZY

    _present: Optional[np.ndarray] = PrivateAttr(default=None)

    @model_validator(mode="after")
    def _check(self):
        _validate_parameters(self.n, self.d, self.p)
        return self

    def __eq__(self, other) -> bool:
        if not isinstance(other, ComplexSample):
            return NotImplemented
        same_fields = (self.n, self.d, self.p, self.seed, self.mode) == (other.n, other.d, other.p, other.seed, other.mode)
        return same_fields and np.array_equal(self.present_ranks(), other.present_ranks())

    @classmethod
    def from_present_ranks(cls, n: int, d: int, ranks: Iterable[int], p: Optional[float] = None,
                           seed: int = 0) -> "ComplexSample":
        """Explicit complex with exactly the given d-cell ranks present."""
        _validate_parameters(n, d, 0.0 if p is None else p)
        present = np.unique(np.asarray(list(ranks), dtype=np.int64))
        total = math.comb(n, d + 1)
        if present.size and (present[0] < 0 or present[-1] >= total):
            raise InvalidParameterError(f"present ranks must lie in [0, {total})")
        if p is None:
            p = present.size / total
        sample = cls(n=n, d=d, p=p, seed=seed, mode=SampleMode.EXPLICIT)
        present.setflags(write=False)
        sample._present = present
        return sample

    @classmethod
    def from_cells(cls, n: int, d: int, cells: Iterable[Iterable[int]], p: Optional[float] = None) -> "ComplexSample":
        return cls.from_present_ranks(n, d, [rank_cell(validate_cell(c, n, d), n) for c in cells], p=p)

    @property
    def num_dcells(self) -> int:
        return math.comb(self.n, self.d + 1)

    @property
    def num_ridges(self) -> int:
        """Number of (d-1)-cells, the matrix dimension."""
        return math.comb(self.n, self.d)

    def contains_rank(self, rank: int) -> bool:
        if self._present is not None:
            i = np.searchsorted(self._present, rank)
            return bool(i < self._present.size and self._present[i] == rank)
        threshold = presence_threshold(self.p)
        return threshold is None or presence_hash(self.seed, rank) < threshold

    def contains_ranks(self, ranks) -> np.ndarray:
        ranks = np.asarray(ranks, dtype=np.int64)
        if self._present is not None:
            i = np.searchsorted(self._present, ranks)
            inside = i < self._present.size
            hit = np.zeros(ranks.shape, dtype=bool)
            hit[inside] = self._present[i[inside]] == ranks[inside]
            return hit
        return presence_mask(ranks, self.p, self.seed)

    def contains(self, tau: Iterable[int]) -> bool:
        return self.contains_rank(rank_cell(validate_cell(tau, self.n, self.d), self.n))

    def present_ranks(self) -> np.ndarray:
        """Sorted ranks of present d-cells (scans the hash rule in lazy mode)."""
        if self._present is not None:
            return self._present
        return _scan_present(self.n, self.d, self.p, self.seed)

    @property
    def present_count(self) -> int:
        return int(self.present_ranks().size)

    def to_record(self) -> ComplexRecord:
        return ComplexRecord(n=self.n, d=self.d, p=self.p, seed=self.seed,
                             present_ranks=self.present_ranks().tolist())


def _scan_present(n: int, d: int, p: float, seed: int) -> np.ndarray:
    total = math.comb(n, d + 1)
    if p <= 0.0:
        return np.empty(0, dtype=np.int64)
    if p >= 1.0:
        return np.arange(total, dtype=np.int64)
    parts = []
    for start in range(0, total, _SCAN_CHUNK):
        ranks = np.arange(start, min(start + _SCAN_CHUNK, total), dtype=np.int64)
        parts.append(ranks[presence_mask(ranks, p, seed)])
    return np.concatenate(parts) if parts else np.empty(0, dtype=np.int64)


def sample_complex(n: int, d: int, p: float, seed: int = settings.DEFAULT_SEED,
                   mode: SampleMode = SampleMode.MATERIALIZED) -> ComplexSample:
    """Draw Y_d(n, p) under the hash presence rule."""
    mode = SampleMode(mode)
    if mode == SampleMode.EXPLICIT:
        raise InvalidParameterError("explicit complexes are built with ComplexSample.from_present_ranks")
    _validate_parameters(n, d, p)
    sample = ComplexSample(n=n, d=d, p=p, seed=seed & MASK64, mode=mode)
    if mode == SampleMode.MATERIALIZED:
        present = _scan_present(n, d, p, sample.seed)
        present.setflags(write=False)
        sample._present = present
        logger.debug(f"[SAMPLE] n={n} d={d} p={p} seed={sample.seed}: {present.size} of {sample.num_dcells} d-cells")
    return sample


def contains_dcell(sample: ComplexSample, tau: Iterable[int]) -> bool:
    return sample.contains(tau)


def dump_complex(sample: ComplexSample) -> dict:
    return sample.to_record().model_dump()


def load_complex(record) -> ComplexSample:
    """Rebuild a complex from its JSON record; the stored ranks are authoritative."""
    record = ComplexRecord.model_validate(record)
    return ComplexSample.from_present_ranks(record.n, record.d, record.present_ranks, p=record.p, seed=record.seed)
