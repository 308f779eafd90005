import logging
import math
import threading
from collections import OrderedDict
from typing import Callable, Optional, Sequence, Union

import numpy as np

from lmspectra import settings
from lmspectra.adjacency import SparseSymMatrix, build_matrix, sample_row
from lmspectra.cells import ComplexSample, completions, face_cofaces, ridge_neighborhood, sample_complex, \
    unrank_cell
from lmspectra.errors import BallCapExceededError, DenseCapExceededError, InvalidParameterError, \
    KindMismatchError, NumericalCheckError
from lmspectra.lm_types import ESD, Atom, Histogram, HistogramMode, MatrixKind, MomentEstimate, MomentMethod
from lmspectra.workers import parallel_map, substream

logger = logging.getLogger(__name__)

RESIDUAL_SPOT_CHECKS = 10
RESIDUAL_TOL = 1e-8
HISTOGRAM_PAD = 1e-9
FACE_CACHE_SIZE = 64

_SAMPLED_KINDS = (MatrixKind.UNSIGNED, MatrixKind.SIGNED, MatrixKind.CENTRED_UNSIGNED, MatrixKind.CENTRED_SIGNED)


def eigenvalues_dense(matrix: SparseSymMatrix, dense_cap: Optional[int] = None) -> ESD:
    """All eigenvalues of a symmetric matrix, sorted ascending."""
    cap = settings.DENSE_CAP if dense_cap is None else dense_cap
    if matrix.dim > cap:
        raise DenseCapExceededError(f"dimension {matrix.dim} is above the dense cap {cap}")
    dense = matrix.to_dense()
    if matrix.dim <= settings.RESIDUAL_CHECK_MAX_DIM:
        values, vectors = np.linalg.eigh(dense)
        _spot_check_residuals(dense, values, vectors)
    else:
        values = np.linalg.eigvalsh(dense)
        trace_identity_check(dense, values)
    logger.debug(f"[SPECTRUM] {matrix.kind.value} dim={matrix.dim}: range [{values[0]:.4f}, {values[-1]:.4f}]")
    return ESD(eigenvalues=np.sort(values).tolist(), meta=matrix.meta())


def _spot_check_residuals(dense: np.ndarray, values: np.ndarray, vectors: np.ndarray) -> None:
    rng = substream(0, "residual-check")
    picks = rng.choice(values.size, size=min(RESIDUAL_SPOT_CHECKS, values.size), replace=False)
    for i in picks:
        residual = np.linalg.norm(dense @ vectors[:, i] - values[i] * vectors[:, i])
        if residual > RESIDUAL_TOL * (1.0 + abs(values[i])):
            raise NumericalCheckError(f"eigenpair {i} has residual {residual:.3e} (eigenvalue {values[i]:.6f})")


def trace_identity_check(dense: np.ndarray, values: np.ndarray) -> None:
    """Σλ = trace(M) and Σλ² = ‖M‖_F², up to RESIDUAL_TOL relative to ‖M‖_F²."""
    trace, frobenius = float(np.trace(dense)), float(np.sum(dense * dense))
    scale = 1.0 + frobenius
    if abs(values.sum() - trace) > RESIDUAL_TOL * scale or abs(np.dot(values, values) - frobenius) > RESIDUAL_TOL * scale:
        raise NumericalCheckError("eigenvalues violate the trace identities")


def esd_moment(esd: ESD, k: int) -> MomentEstimate:
    """(1/dim)·Σ λ_i^k."""
    if k < 0:
        raise InvalidParameterError(f"moment order must be >= 0, got {k}")
    value = math.fsum(x ** k for x in esd.eigenvalues) / esd.dim
    return MomentEstimate(k=k, value=value, stderr=0.0, method=MomentMethod.DENSE_EXACT)


class _LRUCache:
    """Bounded map shared by worker threads; least recently used entries are evicted first."""

    def __init__(self, maxsize: int):
        self.maxsize = maxsize
        self._data: OrderedDict = OrderedDict()
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return len(self._data)

    def get(self, key, build: Callable):
        with self._lock:
            value = self._data.get(key)
            if value is not None:
                self._data.move_to_end(key)
                return value
        value = build(key)
        with self._lock:
            self._data[key] = value
            self._data.move_to_end(key)
            while len(self._data) > self.maxsize:
                self._data.popitem(last=False)
        return value


class _RootWalker:
    """
    (M^k)_oo for one sample and matrix kind.

    Rows are generated lazily from the presence oracle and kept in a bounded LRU.
    Centred unsigned moments of order 3 and 4 are evaluated per Johnson-distance
    class of the root instead, because a centred row has d(n-d) entries and B²e_o
    reaches every cell within distance 2.
    """

    def __init__(self, sample: ComplexSample, kind: MatrixKind, work_cap: int):
        self.sample = sample
        self.kind = kind
        self.work_cap = work_cap
        self.rows = _LRUCache(settings.ROW_CACHE_SIZE)
        self.faces = _LRUCache(FACE_CACHE_SIZE)

    def moment(self, root: int, k: int) -> float:
        if self.kind == MatrixKind.CENTRED_UNSIGNED and k in (3, 4):
            return self._centred_moment(root, k)
        return self._walk_moment(root, k)

    def _row(self, rank: int) -> tuple[np.ndarray, np.ndarray]:
        if not self.kind.is_centred:
            return sample_row(self.sample, rank, signed=self.kind.is_signed)
        neighbors, signs, owners = ridge_neighborhood(self.sample.n, self.sample.d, rank)
        present = self.sample.contains_ranks(owners)
        weights = signs.astype(np.float64) if self.kind.is_signed else np.ones(neighbors.size)
        return neighbors, weights * (present - self.sample.p)

    def _apply(self, support: np.ndarray, values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Sparse M·v for v given as (sorted support, values)."""
        cols, vals = [], []
        for rank, x in zip(support.tolist(), values.tolist()):
            row_cols, row_vals = self.rows.get(rank, self._row)
            cols.append(row_cols)
            vals.append(row_vals * x)
        if not cols:
            return support[:0], values[:0]
        cols, vals = np.concatenate(cols), np.concatenate(vals)
        out_support, inverse = np.unique(cols, return_inverse=True)
        if out_support.size > self.work_cap:
            raise BallCapExceededError(f"root walk support reached {out_support.size} cells, "
                                       f"above the cap {self.work_cap}")
        return out_support, np.bincount(inverse, weights=vals, minlength=out_support.size)

    def _walk_moment(self, root: int, k: int) -> float:
        """<M^a e_o, M^b e_o> with a = floor(k/2), b = k - a."""
        half, rest = k // 2, k - k // 2
        vectors = [(np.array([root], dtype=np.int64), np.array([1.0]))]
        for _ in range(rest):
            vectors.append(self._apply(*vectors[-1]))
        (left, left_vals), (right, right_vals) = vectors[half], vectors[rest]
        _, i, j = np.intersect1d(left, right, assume_unique=True, return_indices=True)
        return math.fsum((left_vals[i] * right_vals[j]).tolist())

    def _centred_moment(self, root: int, k: int) -> float:
        """
        (B³)_oo = <Be_o, B²e_o> and (B⁴)_oo = ‖B²e_o‖² for B = A - p𝔸.

        With ξ_τ = 1{τ present} - p, α_x = ξ(o+x) and β_a(x, y) = ξ(o-a+x+y) for a in o
        and x, y outside o, the entries of B²e_o are
            o:               Σ_{a,x} α_x²
            o-a+x:           (d-1)α_x² + Σ_y α_y β_a(x, y)
            o-a-b+x+y:       (α_x + α_y)(β_a(x, y) + β_b(x, y))
        and every other entry is 0. Only the present cells among the β_a are enumerated;
        the -p background is summed in closed form.
        """
        n, d, p = self.sample.n, self.sample.d, self.sample.p
        o = unrank_cell(root, d - 1, n)
        outside = np.setdiff1d(np.arange(1, n + 1, dtype=np.int64), np.asarray(o, dtype=np.int64))
        _, cofaces, _ = completions(o, n)
        inside = self.sample.contains_ranks(cofaces).astype(np.float64)
        alpha = inside - p
        m, s = outside.size, float(inside.sum())

        centre = d * float(alpha @ alpha)
        along, across, pair_keys = 0.0, 0.0, []
        for a in o:
            face = tuple(v for v in o if v != a)
            pairs = self.faces.get(face, lambda f: face_cofaces(self.sample, f))
            pairs = pairs[(pairs != a).all(axis=1)]
            i, j = np.searchsorted(outside, pairs[:, 0]), np.searchsorted(outside, pairs[:, 1])
            degree = np.bincount(i, minlength=m) + np.bincount(j, minlength=m)
            hits = np.bincount(i, weights=inside[j], minlength=m) + np.bincount(j, weights=inside[i], minlength=m)
            step = (d - 1) * alpha ** 2 + hits - p * (s - inside) - p * degree + p * p * (m - 1)
            along += float(alpha @ step)
            across += float(step @ step)
            pair_keys.append(i.astype(np.int64) * m + j)
        if k == 3:
            return along

        def weight(keys: np.ndarray) -> float:
            return float(np.sum((inside[keys // m] + inside[keys % m] - 2 * p) ** 2))

        # Σ over all pairs {x, y} of (α_x + α_y)²
        background = (s * (s - 1) / 2 * (2 - 2 * p) ** 2 + s * (m - s) * (1 - 2 * p) ** 2
                      + (m - s) * (m - s - 1) / 2 * (2 * p) ** 2)
        weights = [weight(keys) for keys in pair_keys]
        far = 0.0
        for a in range(d):
            for b in range(a + 1, d):
                shared = np.intersect1d(pair_keys[a], pair_keys[b], assume_unique=True)
                far += 4 * p * p * background + (1 - 4 * p) * (weights[a] + weights[b]) + 2 * weight(shared)
        return centre * centre + across + far


def root_moment(sample: ComplexSample, kind: MatrixKind, k: int, root: int, work_cap: Optional[int] = None) -> float:
    """(M^k)_oo for the (d-1)-cell of rank `root`, without building M."""
    kind = _check_root_sampling(kind, k)
    if not 0 <= root < sample.num_ridges:
        raise InvalidParameterError(f"root rank {root} out of range [0, {sample.num_ridges})")
    walker = _RootWalker(sample, kind, settings.ROOT_WORK_CAP if work_cap is None else work_cap)
    return walker.moment(root, k)


def _check_root_sampling(kind: MatrixKind, k: int) -> MatrixKind:
    kind = MatrixKind(kind)
    if kind not in _SAMPLED_KINDS:
        raise KindMismatchError(f"root sampling supports {[x.value for x in _SAMPLED_KINDS]}, got {kind.value}")
    if k < 1:
        raise InvalidParameterError(f"moment order must be >= 1, got {k}")
    return kind


def moment_root_sampled(sample: ComplexSample, kind: MatrixKind, k: int, roots: int,
                        seed: int = settings.DEFAULT_SEED, work_cap: Optional[int] = None,
                        threads: Optional[int] = None) -> MomentEstimate:
    """
    Estimate m_k as the mean of (M^k)_oo over uniformly drawn root cells o.

    Each term only looks at cells near o, generated from the presence oracle, so the
    cost does not depend on C(n, d).
    """
    kind = _check_root_sampling(kind, k)
    if roots < 1:
        raise InvalidParameterError(f"need at least one root, got {roots}")
    walker = _RootWalker(sample, kind, settings.ROOT_WORK_CAP if work_cap is None else work_cap)

    drawn = substream(seed, "roots").integers(0, sample.num_ridges, size=roots)
    drawn = np.sort(drawn)  # aggregation order by root rank
    values = np.asarray(parallel_map(lambda root: walker.moment(int(root), k), drawn, threads))

    mean = math.fsum(values.tolist()) / roots
    stderr = float(np.std(values, ddof=1) / math.sqrt(roots)) if roots > 1 else 0.0
    logger.info(f"[MOMENT] {kind.value} k={k} roots={roots}: {mean:.6f} ± {stderr:.6f}")
    return MomentEstimate(k=k, value=mean, stderr=stderr, method=MomentMethod.ROOT_SAMPLED, samples=roots)


def frobenius_normalized(matrix: SparseSymMatrix) -> float:
    """‖M‖_F / sqrt(dim)."""
    return math.sqrt(matrix.trace_square() / matrix.dim)


def reflect(esd: ESD) -> ESD:
    """Distribution of -X."""
    meta = esd.meta.model_copy(update={"reflected": not esd.meta.reflected})
    return ESD(eigenvalues=sorted(-x for x in esd.eigenvalues), meta=meta)


def _as_sorted_values(values: Union[ESD, Sequence[float]]) -> np.ndarray:
    array = values.as_array() if isinstance(values, ESD) else np.sort(np.asarray(values, dtype=float))
    if array.size == 0:
        raise InvalidParameterError("empty spectrum")
    return array


def ks_distance(a: Union[ESD, Sequence[float]], b: Union[ESD, Sequence[float]], tol: float = 0.0) -> float:
    """
    sup_x |F_a(x) - F_b(x)| by a merge over all jump points.

    With tol > 0, values are snapped to a tol-grid first so that equal eigenvalues
    computed with different rounding do not register as separate jumps.
    """
    x, y = _as_sorted_values(a), _as_sorted_values(b)
    if tol > 0:
        x, y = np.round(x / tol) * tol, np.round(y / tol) * tol
    grid = np.union1d(x, y)
    fx = np.searchsorted(x, grid, side="right") / x.size
    fy = np.searchsorted(y, grid, side="right") / y.size
    return float(np.max(np.abs(fx - fy)))


def semicircle_moment(k: int) -> float:
    """Moments of the standard semicircle law: Catalan C_{k/2} for even k, 0 for odd k."""
    if k < 0:
        raise InvalidParameterError(f"moment order must be >= 0, got {k}")
    if k % 2:
        return 0.0
    half = k // 2
    return float(math.comb(2 * half, half) // (half + 1))


def scaled_moment_check(sample: ComplexSample, lam: float, k: int, roots: int = 10_000,
                        seed: int = settings.DEFAULT_SEED, threads: Optional[int] = None) -> float:
    """m_k(B) / (λd)^(k/2) for the centred unsigned matrix; tends to the semicircle moment as λ grows."""
    if lam <= 0:
        raise InvalidParameterError(f"lambda must be positive, got {lam}")
    estimate = moment_root_sampled(sample, MatrixKind.CENTRED_UNSIGNED, k, roots, seed=seed, threads=threads)
    ratio = estimate.value / (lam * sample.d) ** (k / 2)
    logger.info(f"[MOMENT] scaled m_{k} = {ratio:.4f} (semicircle {semicircle_moment(k):.0f})")
    return ratio


def atom_detect(esd: ESD, tol: Optional[float] = None) -> list[Atom]:
    """Clusters of eigenvalues within tol of each other carrying mass >= 2/dim."""
    tol = settings.ATOM_TOL if tol is None else tol
    values = esd.as_array()
    breaks = np.flatnonzero(np.diff(values) > tol) + 1
    return [Atom(value=float(group.mean()), mass=group.size / values.size)
            for group in np.split(values, breaks) if group.size >= 2]


def histogram(esd: ESD, bins: int, mode: HistogramMode = HistogramMode.PROBABILITY) -> Histogram:
    """Uniform bins over [min, max] widened by 1e-9 on each side."""
    if bins < 1:
        raise InvalidParameterError(f"bins must be >= 1, got {bins}")
    mode = HistogramMode(mode)
    values = esd.as_array()
    edges = np.linspace(values[0] - HISTOGRAM_PAD, values[-1] + HISTOGRAM_PAD, bins + 1)
    counts, _ = np.histogram(values, bins=edges)
    if mode == HistogramMode.PROBABILITY:
        heights = counts / values.size
    else:
        heights = counts / (values.size * np.diff(edges))
    return Histogram(edges=edges.tolist(), counts=counts.tolist(), mode=mode, values=heights.tolist(), meta=esd.meta)


def figure_panels(n: int = 100, d: int = 2, lambdas: Sequence[float] = (1.0, 0.5), bins: int = 50,
                  seed: int = settings.DEFAULT_SEED, dense_cap: Optional[int] = None) -> dict[str, Histogram]:
    """Unsigned and signed eigenvalue histograms for each λ (p = λ/n)."""
    panels = {}
    for lam in lambdas:
        sample = sample_complex(n, d, lam / n, seed)
        for kind in (MatrixKind.UNSIGNED, MatrixKind.SIGNED):
            esd = eigenvalues_dense(build_matrix(sample, kind), dense_cap=dense_cap)
            panels[f"{kind.value}_lambda{lam:g}"] = histogram(esd, bins, HistogramMode.DENSITY)
            logger.info(f"[SPECTRUM] panel {kind.value} λ={lam:g}: {len(atom_detect(esd))} atoms")
    return panels
