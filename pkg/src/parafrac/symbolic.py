"""Finite words, cylinder enumeration, induced alphabets and stopping sets.

Words are plain tuples of non-negative ints.  The empty tuple is the empty
word and concatenation is tuple addition, so associativity and the identity
law come for free.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .errors import CapacityError

Word = tuple[int, ...]

DEFAULT_BUDGET = 20_000_000
# lengths such as 3**-2 built from endpoint images land a few ulps off delta
STOP_RTOL = 1e-12


def enumerate_words(alphabet_size: int, n: int, budget: int = DEFAULT_BUDGET) -> Iterator[Word]:
    """Yield every word of length ``n`` over ``range(alphabet_size)`` in lexicographic order."""
    if n < 0:
        raise ValueError("word length must be non-negative")
    if alphabet_size < 1:
        raise ValueError("alphabet must be non-empty")
    if alphabet_size ** n > budget:
        raise CapacityError(f"{alphabet_size}^{n} words exceed the enumeration budget {budget}")
    return itertools.product(range(alphabet_size), repeat=n)


def is_prefix_free(words: Sequence[Word]) -> bool:
    """True when no word is a proper prefix of another (duplicates also fail)."""
    ordered = sorted(words)
    for a, b in zip(ordered, ordered[1:]):
        if b[: len(a)] == a:
            return False
    return True


@dataclass(frozen=True)
class InducedAlphabet:
    """Words ``j i0`` with ``j`` avoiding ``i0``, truncated at length ``cutoff``."""

    hyperbolic_symbol: int
    cutoff: int
    entries: tuple[Word, ...]

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)


def induced_alphabet_size(alphabet_size: int, cutoff: int) -> int:
    k = alphabet_size - 1
    return sum(k ** m for m in range(cutoff))


def induced_alphabet(alphabet_size: int, i0: int, cutoff: int, budget: int = DEFAULT_BUDGET) -> InducedAlphabet:
    """Build the truncated induced alphabet.

    Entries are ordered by length, then lexicographically.  The count is
    ``sum((alphabet_size - 1) ** m for m < cutoff)``.
    """
    if cutoff < 1:
        raise ValueError("cutoff must be at least 1")
    if not 0 <= i0 < alphabet_size:
        raise ValueError(f"hyperbolic symbol {i0} outside alphabet of size {alphabet_size}")
    if induced_alphabet_size(alphabet_size, cutoff) > budget:
        raise CapacityError(f"induced alphabet with cutoff {cutoff} exceeds the budget {budget}")
    others = [j for j in range(alphabet_size) if j != i0]
    entries: list[Word] = []
    for m in range(cutoff):
        entries.extend(head + (i0,) for head in itertools.product(others, repeat=m))
    return InducedAlphabet(i0, cutoff, tuple(entries))


@dataclass
class StoppingSet:
    """Antichain of words whose cylinders first reach scale ``delta``.

    ``x_intervals``/``y_intervals`` hold the image of the unit interval
    (unit square for carpets) under each stopped word; ``y_intervals`` is
    ``None`` for Cantor systems.
    """

    delta: float
    words: list[Word]
    masses: np.ndarray
    x_intervals: np.ndarray
    y_intervals: np.ndarray | None
    truncated_mass: float
    depth_reached: int = 0
    blocks_excluded_mass: float = 0.0
    warn_threshold: float = field(default=0.01, repr=False)

    @property
    def warning(self) -> bool:
        return self.truncated_mass > self.warn_threshold

    def __len__(self) -> int:
        return len(self.words)

    @property
    def entries(self) -> list[tuple[Word, float, tuple]]:
        out = []
        for k, w in enumerate(self.words):
            geom = (tuple(self.x_intervals[k]),) if self.y_intervals is None else (
                tuple(self.x_intervals[k]), tuple(self.y_intervals[k]))
            out.append((w, float(self.masses[k]), geom))
        return out


def _stop_length(x_int: np.ndarray, y_int: np.ndarray | None) -> np.ndarray:
    lx = np.abs(x_int[:, 1] - x_int[:, 0])
    if y_int is None:
        return lx
    return np.minimum(lx, np.abs(y_int[:, 1] - y_int[:, 0]))


def _row_keys(words: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(words)
    return arr.view(np.dtype((np.void, arr.dtype.itemsize * arr.shape[1]))).ravel()


def delta_stopping(geom_source, measure, delta: float, depth_cap: int = 5000,
                   induced: int | None = None, budget: int = DEFAULT_BUDGET,
                   warn_threshold: float = 0.01) -> StoppingSet:
    """Expand the word tree until cylinders reach scale ``delta``.

    A word stops as soon as its stopping length (interval length for Cantor
    systems, shorter rectangle side for carpets) is ``<= delta`` up to a
    relative ``STOP_RTOL``.  Words still alive after ``depth_cap``
    expansions contribute their mass to ``truncated_mass``.  With ``induced=N`` the tree is expanded one induced
    block at a time, so the parent of a stopped word is obtained by removing
    its final block; mass outside the truncated induced alphabet is also
    booked as truncated.

    ``geom_source`` must provide ``n_symbols``, ``hyperbolic_symbol``,
    ``word_intervals(words)`` and ``apply_symbols(symbols, intervals)``;
    ``measure`` must provide ``log_mass_many``.
    """
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    if depth_cap < 1:
        raise ValueError("depth_cap must be at least 1")
    if induced is None:
        return _stopping_full(geom_source, measure, delta, depth_cap, budget, warn_threshold)
    return _stopping_induced(geom_source, measure, delta, depth_cap, induced, budget, warn_threshold)


def _collect(geom_source, delta, stopped, frontier_mass, excluded, depth, warn_threshold) -> StoppingSet:
    words_out: list[Word] = []
    for arr in stopped["words"]:
        words_out.extend(tuple(int(s) for s in row) for row in arr)
    masses = np.concatenate(stopped["mass"]) if stopped["mass"] else np.zeros(0)
    x_all = np.vstack(stopped["x"]) if stopped["x"] else np.zeros((0, 2))
    y_all = None
    if geom_source.is_carpet:
        y_all = np.vstack(stopped["y"]) if stopped["y"] else np.zeros((0, 2))
    return StoppingSet(delta=delta, words=words_out, masses=masses, x_intervals=x_all,
                       y_intervals=y_all, truncated_mass=frontier_mass + excluded, depth_reached=depth,
                       blocks_excluded_mass=excluded, warn_threshold=warn_threshold)


def _record(stopped, words, logm, intervals, done):
    stopped["words"].append(words[done])
    stopped["mass"].append(np.exp(logm[done]))
    stopped["x"].append(intervals[0][done])
    if len(intervals) > 1:
        stopped["y"].append(intervals[1][done])


def _stopping_full(geom_source, measure, delta, depth_cap, budget, warn_threshold) -> StoppingSet:
    cut = delta * (1 + STOP_RTOL)
    # Alive words (stopping length > delta) are closed under dropping the
    # first or the last symbol, so the suffix of every child evaluated at
    # depth d was itself evaluated at depth d-1.  Each child interval is then
    # one map application to its suffix's interval.
    k = geom_source.n_symbols
    dtype = np.int16 if k < 2 ** 15 else np.int32
    logp = getattr(measure, "log_weights", None)
    stopped = {"words": [], "mass": [], "x": [], "y": []}
    alive = np.zeros((1, 0), dtype=dtype)
    alive_logm = np.zeros(1)
    prev_keys = prev_order = prev_ivals = None
    depth = 0
    while len(alive) and depth < depth_cap:
        depth += 1
        m = len(alive)
        syms = np.tile(np.arange(k, dtype=dtype), m)
        words = np.hstack([np.repeat(alive, k, axis=0), syms[:, None]])
        if logp is not None:
            logm = np.repeat(alive_logm, k) + logp[syms]
        else:
            logm = measure.log_mass_many(words)
        if depth == 1:
            base = [np.tile(np.array([0.0, 1.0]), (len(words), 1)) for _ in range(2 if geom_source.is_carpet else 1)]
        else:
            keys = _row_keys(words[:, 1:])
            pos = np.searchsorted(prev_keys[prev_order], keys)
            idx = prev_order[pos]
            base = [iv[idx] for iv in prev_ivals]
        intervals = geom_source.apply_symbols(words[:, 0], base)
        done = _stop_lengths(intervals) <= cut
        if done.any():
            _record(stopped, words, logm, intervals, done)
        prev_keys = _row_keys(words)
        prev_order = np.argsort(prev_keys, kind="stable")
        prev_ivals = intervals
        alive = words[~done]
        alive_logm = logm[~done]
        if len(alive) * k > budget:
            raise CapacityError(f"stopping frontier of {len(alive)} words exceeds the budget {budget}")
    truncated = float(np.exp(alive_logm).sum()) if len(alive) else 0.0
    return _collect(geom_source, delta, stopped, truncated, 0.0, depth, warn_threshold)


def _stop_lengths(intervals) -> np.ndarray:
    return _stop_length(intervals[0], intervals[1] if len(intervals) > 1 else None)


def _stopping_induced(geom_source, measure, delta, depth_cap, induced, budget, warn_threshold) -> StoppingSet:
    cut = delta * (1 + STOP_RTOL)
    k = geom_source.n_symbols
    blocks = list(induced_alphabet(k, geom_source.hyperbolic_symbol, induced, budget).entries)
    frontier: dict[int, tuple[np.ndarray, np.ndarray]] = {0: (np.zeros((1, 0), dtype=np.int32), np.zeros(1))}
    stopped = {"words": [], "mass": [], "x": [], "y": []}
    excluded = 0.0
    depth = 0
    while frontier and depth < depth_cap:
        depth += 1
        children: dict[int, list[np.ndarray]] = {}
        parent_mass = 0.0
        for words, logm in frontier.values():
            parent_mass += float(np.exp(logm).sum())
            for b in blocks:
                tail = np.broadcast_to(np.asarray(b, dtype=np.int32), (len(words), len(b)))
                children.setdefault(words.shape[1] + len(b), []).append(np.hstack([words, tail]))
        frontier = {}
        child_mass = 0.0
        alive = 0
        for length, parts in sorted(children.items()):
            words = np.vstack(parts)
            logm = measure.log_mass_many(words)
            child_mass += float(np.exp(logm).sum())
            intervals = geom_source.word_intervals(words)
            done = _stop_lengths(intervals) <= cut
            if done.any():
                _record(stopped, words, logm, intervals, done)
            if (~done).any():
                frontier[length] = (words[~done], logm[~done])
                alive += int((~done).sum())
        excluded += max(parent_mass - child_mass, 0.0)
        if alive > budget:
            raise CapacityError(f"stopping frontier of {alive} words exceeds the budget {budget}")
    truncated = sum(float(np.exp(logm).sum()) for _, logm in frontier.values())
    return _collect(geom_source, delta, stopped, truncated, excluded, depth, warn_threshold)
