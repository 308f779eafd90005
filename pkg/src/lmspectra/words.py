"""
Closed words over (d-1)-cells and the moment polynomials they count.

A word is a sequence of (d-1)-cells in which consecutive letters share d-1
vertices. Words equal up to a vertex relabeling form one class; the canonical
representative starts at {1..d} and numbers every new vertex by first appearance.
The search below walks canonical words directly, with cells stored as bitmasks
over bits 1..s, so each class is produced exactly once.
"""
import logging
import math
from collections import Counter
from functools import lru_cache
from typing import Callable, Iterable, Iterator, Optional, Sequence

from lmspectra import settings
from lmspectra.cells import Cell
from lmspectra.errors import EnumerationCapError, InvalidParameterError, InvalidWordError
from lmspectra.lm_types import MomentPolynomial, WordSupports
from lmspectra.workers import process_map, resolve_threads

logger = logging.getLogger(__name__)

Word = tuple[Cell, ...]
# (s, sorted crossing counts, sign) -> number of classes
LeafKey = tuple[int, tuple[int, ...], int]

_SPLIT_DEPTH = 2


def validate_word(word: Iterable[Iterable[int]]) -> Word:
    """Letters as sorted tuples; every step must swap exactly one vertex."""
    try:
        letters = tuple(tuple(sorted(int(v) for v in letter)) for letter in word)
    except (TypeError, ValueError):
        raise InvalidWordError(f"word letters must be integer sequences, got {word!r}")
    if not letters:
        raise InvalidWordError("word must have at least one letter")
    d = len(letters[0])
    for i, letter in enumerate(letters):
        if len(letter) != d or len(set(letter)) != d:
            raise InvalidWordError(f"letter {i} = {letter} is not a set of {d} vertices")
        if letter[0] < 1:
            raise InvalidWordError(f"letter {i} = {letter} has a vertex below 1")
    for i, (a, b) in enumerate(zip(letters, letters[1:])):
        if len(set(a) | set(b)) != d + 1:
            raise InvalidWordError(f"letters {i} and {i + 1} ({a}, {b}) do not span a d-cell")
    return letters


def _first_appearance(letters: Word) -> dict[int, int]:
    """η: σ_1 in natural order, then new vertices by first appearance."""
    eta = {v: i for i, v in enumerate(letters[0], start=1)}
    for letter in letters[1:]:
        for v in letter:
            if v not in eta:
                eta[v] = len(eta) + 1
    return eta


def canonicalize(word: Iterable[Iterable[int]]) -> Word:
    letters = validate_word(word)
    eta = _first_appearance(letters)
    return tuple(tuple(sorted(eta[v] for v in letter)) for letter in letters)


def _steps(letters: Word) -> Iterator[tuple[int, int]]:
    """(removed x_i, added y_i) for each step."""
    for a, b in zip(letters, letters[1:]):
        (x,), (y,) = set(a) - set(b), set(b) - set(a)
        yield x, y


def labelled_path(word: Iterable[Iterable[int]]) -> list[tuple[int, int]]:
    """
    Step labels (η(x_i), η(y_i)); two words are equivalent iff their labels agree.
    """
    letters = validate_word(word)
    eta = _first_appearance(letters)
    return [(eta[x], eta[y]) for x, y in _steps(letters)]


def word_supports(word: Iterable[Iterable[int]]) -> WordSupports:
    letters = validate_word(word)
    crossings = Counter(tuple(sorted(set(a) | set(b))) for a, b in zip(letters, letters[1:]))
    return WordSupports(
        supp0=frozenset(v for letter in letters for v in letter),
        suppd=frozenset(crossings),
        multiplicities=dict(crossings),
    )


def _step_sign(tau: Sequence[int], x: int, y: int) -> int:
    """Signed-matrix entry between τ−{y} and τ−{x}."""
    return 1 if (tau.index(x) - tau.index(y)) % 2 else -1


def sign_of_word(word: Iterable[Iterable[int]]) -> int:
    """Product of the signed adjacency entries along a closed word."""
    letters = validate_word(word)
    if letters[0] != letters[-1]:
        raise InvalidWordError("sign is defined for closed words only")
    sign = 1
    for (x, y), a in zip(_steps(letters), letters):
        sign *= _step_sign(tuple(sorted(set(a) | {y})), x, y)
    return sign


def _position(tau: int, v: int) -> int:
    return (tau & ((1 << v) - 1)).bit_count()


def _mask_to_cell(mask: int) -> Cell:
    return tuple(v for v in range(1, mask.bit_length()) if mask >> v & 1)


class _WordSearch:
    """
    Depth-first walk over canonical closed words with k steps.

    State is (current letter, vertices used, crossing counts per d-cell). With
    tilde=True only words whose every prefix satisfies |supp_d| = |supp_0| - d are
    walked: an old vertex may be added only when it recrosses a known d-cell.
    """

    def __init__(self, d: int, k: int, tilde: bool, node_cap: Optional[int] = None):
        self.d = d
        self.k = k
        self.tilde = tilde
        self.first = ((1 << d) - 1) << 1
        self.s_max = d + k // 2
        self.node_cap = settings.ENUM_NODE_CAP if node_cap is None else node_cap
        self.nodes = 0

    def initial_state(self) -> tuple:
        return self.first, self.d, {}, 0, 1, 0, (self.first,)

    def moves(self, cur: int, used: int, counts: dict):
        for x in range(1, used + 1):
            if not cur >> x & 1:
                continue
            base = cur & ~(1 << x)
            for y in range(1, min(used + 1, self.s_max) + 1):
                bit = 1 << y
                if cur & bit:
                    continue
                tau = cur | bit
                fresh = y > used
                if self.tilde and not fresh and tau not in counts:
                    continue
                sign = 1 if (_position(tau, x) - _position(tau, y)) % 2 else -1
                yield tau, base | bit, used + fresh, sign

    def walk(self, state: tuple, on_leaf: Callable, stop_depth: Optional[int] = None) -> None:
        cur, used, counts, singles, sign, steps, path = state
        self.nodes += 1
        if self.nodes > self.node_cap:
            raise EnumerationCapError(f"word search for d={self.d}, k={self.k} passed {self.node_cap} nodes")
        if steps == self.k or steps == stop_depth:
            on_leaf((cur, used, dict(counts), singles, sign, steps, path))
            return
        remaining = self.k - steps - 1
        for tau, nxt, nxt_used, step_sign in self.moves(cur, used, counts):
            seen = counts.get(tau, 0)
            nxt_singles = singles + (1 if seen == 0 else -1 if seen == 1 else 0)
            if nxt_singles > remaining or (nxt & ~self.first).bit_count() > remaining:
                continue
            counts[tau] = seen + 1
            self.walk((nxt, nxt_used, counts, nxt_singles, sign * step_sign, steps + 1, path + (nxt,)),
                      on_leaf, stop_depth)
            if seen:
                counts[tau] = seen
            else:
                del counts[tau]

    def is_member(self, state: tuple) -> bool:
        cur, used, counts, singles, _, _, _ = state
        if cur != self.first or singles:
            return False
        assert used <= len(counts) + self.d, "vertex support exceeds d-cell support + d"
        if self.tilde:
            assert len(counts) == used - self.d, "prefix support condition broken"
        return True

    def collect(self, state: tuple) -> Counter:
        leaves: Counter = Counter()

        def record(leaf):
            if self.is_member(leaf):
                _, used, counts, _, sign, _, _ = leaf
                leaves[(used, tuple(sorted(counts.values())), sign)] += 1

        self.walk(state, record)
        return leaves


def _search_task(args: tuple) -> list[tuple[LeafKey, int]]:
    d, k, tilde, node_cap, state = args
    return sorted(_WordSearch(d, k, tilde, node_cap).collect(state).items())


def _validate_dk(d: int, k: int) -> None:
    if d < 1:
        raise InvalidParameterError(f"d must be >= 1, got {d}")
    if k < 1:
        raise InvalidParameterError(f"k must be >= 1, got {k}")


@lru_cache(maxsize=64)
def _leaf_profile(d: int, k: int, tilde: bool, threads: int) -> tuple[tuple[LeafKey, int], ...]:
    """All class leaves of the (tilde) search, merged in prefix order."""
    search = _WordSearch(d, k, tilde)
    frontier = []
    search.walk(search.initial_state(), frontier.append, stop_depth=min(_SPLIT_DEPTH, k))
    tasks = [(d, k, tilde, search.node_cap, state) for state in frontier]
    merged: Counter = Counter()
    for part in process_map(_search_task, tasks, threads):
        merged.update(dict(part))
    logger.info(f"[WORDS] d={d} k={k} {'tilde' if tilde else 'full'}: "
                f"{sum(merged.values())} classes from {len(tasks)} prefixes")
    return tuple(sorted(merged.items()))


def _leaves(d: int, k: int, tilde: bool, threads: Optional[int] = None) -> dict[LeafKey, int]:
    _validate_dk(d, k)
    return dict(_leaf_profile(d, k, tilde, resolve_threads(threads)))


def _counts_by_s(leaves: dict[LeafKey, int], d: int, k: int) -> dict[int, int]:
    out = {s: 0 for s in range(d + 1, d + k // 2 + 1)}
    for (s, _, _), count in leaves.items():
        out[s] += count
    return out


def enumerate_tilde_W(d: int, k: int, threads: Optional[int] = None) -> MomentPolynomial:
    """|W̃_s^k| for s = d+1 .. d + k//2."""
    return MomentPolynomial(d=d, k=k, coefficients=_counts_by_s(_leaves(d, k, True, threads), d, k))


def enumerate_W(d: int, k: int, threads: Optional[int] = None) -> dict[int, int]:
    """|W_s^k|: closed classes with no d-cell crossed exactly once."""
    return _counts_by_s(_leaves(d, k, False, threads), d, k)


def signs_by_s(d: int, k: int, tilde: bool = True, threads: Optional[int] = None) -> dict[int, Counter]:
    """Sign tallies of the canonical representatives, per s."""
    out: dict[int, Counter] = {}
    for (s, _, sign), count in _leaves(d, k, tilde, threads).items():
        out.setdefault(s, Counter())[sign] += count
    return out


def iter_tilde_words(d: int, k: int) -> Iterator[Word]:
    """Canonical members of W̃^k, in search order."""
    _validate_dk(d, k)
    search = _WordSearch(d, k, tilde=True)
    found = []

    def keep(leaf):
        if search.is_member(leaf):
            found.append(leaf[-1])

    search.walk(search.initial_state(), keep)
    for path in found:
        yield tuple(_mask_to_cell(mask) for mask in path)


def beta_value(d: int, k: int, lam: float) -> float:
    """β_k(λ) = Σ_s |W̃_s^k|·λ^(s-d)."""
    if not lam > 0:
        raise InvalidParameterError(f"lambda must be positive, got {lam}")
    return enumerate_tilde_W(d, k).value(lam)


def catalan_check(d: int, k: int) -> bool:
    """|W̃_{k/2+d}^k| == Catalan(k/2)·d^(k/2)."""
    if k % 2 or k < 2:
        raise InvalidParameterError(f"catalan check needs an even k >= 2, got {k}")
    half = k // 2
    expected = math.comb(k, half) // (half + 1) * d ** half
    return enumerate_tilde_W(d, k).coefficients.get(half + d, 0) == expected


def class_cardinality(d: int, s: int, n: int) -> int:
    """Labelled words on [n] in one class with s vertices: n!/((n-s)!·d!)."""
    if d < 1 or s < d or n < s:
        raise InvalidParameterError(f"need 1 <= d <= s <= n, got d={d}, s={s}, n={n}")
    return math.perm(n, s) // math.factorial(d)


def unbounded_witness_count(d: int, k: int) -> int:
    """d^k·(kd)^k, a lower bound on |W̃_{k+d}^{4k}|."""
    if d < 1 or k < 1:
        raise InvalidParameterError(f"need d >= 1 and k >= 1, got d={d}, k={k}")
    return d ** k * (k * d) ** k


def verify_unbounded_witness(d: int, k: int, threads: Optional[int] = None) -> bool:
    witnesses = unbounded_witness_count(d, k)
    found = enumerate_tilde_W(d, 4 * k, threads).coefficients.get(k + d, 0)
    logger.info(f"[WORDS] witness bound d={d} k={k}: {witnesses} <= {found}")
    return witnesses <= found


def _centred_moment(j: int, p: float) -> float:
    """E (X - p)^j for X ~ Bernoulli(p)."""
    return p * (1 - p) ** j + (1 - p) * (-p) ** j


def expected_moment(d: int, k: int, n: int, p: float, threads: Optional[int] = None) -> float:
    """
    Exact E m_k of the centred unsigned matrix of Y_d(n, p).

    Each class of W_s^k contributes |[w]|/C(n, d) = (n-d)!/(n-s)! times the product
    of centred Bernoulli moments over its crossing counts.
    """
    if n < d + 1 or not 0.0 <= p <= 1.0:
        raise InvalidParameterError(f"need n >= d+1 and p in [0, 1], got n={n}, p={p}")
    if k == 0:
        return 1.0
    terms = [count * math.perm(n - d, s - d) * math.prod(_centred_moment(j, p) for j in profile)
             for (s, profile, _), count in sorted(_leaves(d, k, False, threads).items())]
    return math.fsum(terms)


def moment_table(d: int, k_max: int = 8, threads: Optional[int] = None) -> dict[int, MomentPolynomial]:
    return {k: enumerate_tilde_W(d, k, threads) for k in range(1, k_max + 1)}
