"""Viseme search: locate the query's phones in the source footage.

A query segment is matched against every contiguous run of corpus phones with
a length-aware Levenshtein distance; the full query is split into contiguous
segments so that the summed match cost plus a short-segment penalty is
minimal.

All costs are accumulated along the alignment path in order, so the values
are reproducible bit for bit by any evaluator that sums in the same order.
"""

from __future__ import annotations

import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .core import DEFAULT_PARAMS, CostParams, PhoneSequence, base_phoneme, viseme_of
from .errors import EmptyInput, QueryTooLong

MAX_QUERY = 64

_DIAG, _UP, _LEFT, _ORIGIN = 0, 1, 2, 3

Pair = tuple["int | None", "int | None"]


@dataclass(frozen=True)
class SubsequenceMatch:
    """Best corpus match for the query phones ``query_range``.

    Ranges are half-open.  ``alignment`` pairs a query index with a corpus
    index; ``None`` marks a gap (query phone inserted / corpus phone deleted).
    An empty ``corpus_range`` means every query phone was inserted at that
    corpus position.
    """

    query_range: tuple[int, int]
    corpus_range: tuple[int, int]
    alignment: tuple[Pair, ...]
    cost: float

    @property
    def length(self) -> int:
        return self.query_range[1] - self.query_range[0]


@dataclass(frozen=True)
class SearchResult:
    split: tuple[SubsequenceMatch, ...]
    total_cost: float
    table: dict[tuple[int, int], SubsequenceMatch] = field(default_factory=dict, compare=False, repr=False)

    @property
    def segments(self) -> list[tuple[int, int]]:
        return [m.query_range for m in self.split]


def enumerate_splits(m: int) -> int:
    """Number of ways to cut ``m`` phones into contiguous non-empty runs."""
    if m < 1:
        raise ValueError("query length must be at least 1")
    return 2 ** (m - 1)


def iter_splits(m: int) -> Iterator[tuple[tuple[int, int], ...]]:
    """Yield every contiguous split of ``range(m)`` as half-open ranges."""
    if m < 1:
        raise ValueError("query length must be at least 1")
    for mask in range(2 ** (m - 1)):
        cuts = [0] + [i + 1 for i in range(m - 1) if mask >> i & 1] + [m]
        yield tuple(zip(cuts[:-1], cuts[1:]))


def length_penalty(n_phones: int, params: CostParams = DEFAULT_PARAMS) -> float:
    return params.phi / n_phones


class _Corpus:
    """Array view of a corpus plus the query, shared by all segment DPs."""

    def __init__(self, query: PhoneSequence, corpus: PhoneSequence, params: CostParams, excluded: np.ndarray):
        self.params = params
        self.n = len(corpus)
        labels: dict[str, int] = {}
        bases: dict[str, int] = {}

        def ids(seq: PhoneSequence):
            lbl = np.array([labels.setdefault(p.label, len(labels)) for p in seq], dtype=np.int64)
            base = np.array([bases.setdefault(base_phoneme(p.label), len(bases)) for p in seq], dtype=np.int64)
            vis = np.array([viseme_of(p.label) for p in seq], dtype=np.int64)
            dur = np.array([p.duration for p in seq], dtype=np.float64)
            return lbl, base, vis, dur

        ql, qb, qv, qd = ids(query)
        cl, cb, cv, cd = ids(corpus)
        same = (ql[:, None] == cl[None, :]) if params.strict_stress else (qb[:, None] == cb[None, :])
        dist = np.where(same, 0.0, np.where(qv[:, None] == cv[None, :], 0.5, 1.0))
        swap = dist * (qd[:, None] + cd[None, :]) + params.chi * np.abs(qd[:, None] - cd[None, :])
        self.swap = [row.tolist() for row in swap]
        # column j of the DP consumes corpus phone j-1
        self.allowed = [False] + (~excluded).tolist()

    def rows_from(self, s: int, stop: int):
        """DP rows for query phones s..stop-1 with a free corpus start.

        Yields, per row r (query phone s+r-1 consumed), the lists
        (cost, start, back).  Cells hold the lexicographic minimum of
        (cost, corpus start) over all paths.
        """
        n = self.n
        ins = self.params.c_insert
        dele = self.params.c_delete
        allowed = self.allowed

        cost = [0.0] * (n + 1)
        start = list(range(n + 1))
        back = bytearray([_ORIGIN]) * (n + 1)
        for j in range(1, n + 1):
            if allowed[j]:
                lc = cost[j - 1] + dele
                if lc < 0.0 or (lc == 0.0 and start[j - 1] < j):
                    cost[j] = lc
                    start[j] = start[j - 1]
                    back[j] = _LEFT
        yield cost, start, back

        for qi in range(s, stop):
            sw = self.swap[qi]
            pc, ps = cost, start
            cost = [0.0] * (n + 1)
            start = [0] * (n + 1)
            back = bytearray(n + 1)
            c = pc[0] + ins
            st = ps[0]
            cost[0] = c
            start[0] = st
            back[0] = _UP
            for j in range(1, n + 1):
                if allowed[j]:
                    bc = pc[j - 1] + sw[j - 1]
                    bs = ps[j - 1]
                    bb = _DIAG
                    uc = pc[j] + ins
                    if uc < bc or (uc == bc and ps[j] < bs):
                        bc = uc
                        bs = ps[j]
                        bb = _UP
                    lc = c + dele
                    if lc < bc or (lc == bc and st < bs):
                        bc = lc
                        bs = st
                        bb = _LEFT
                else:
                    bc = pc[j] + ins
                    bs = ps[j]
                    bb = _UP
                cost[j] = bc
                start[j] = bs
                back[j] = bb
                c = bc
                st = bs
            yield cost, start, back

    def matches_from(self, s: int, stop: int) -> dict[tuple[int, int], SubsequenceMatch]:
        """Best matches for query ranges (s, e) for every e in (s, stop]."""
        backs: list[bytearray] = []
        out: dict[tuple[int, int], SubsequenceMatch] = {}
        for r, (cost, start, back) in enumerate(self.rows_from(s, stop)):
            backs.append(back)
            if r == 0:
                continue
            best_j = 0
            best_c = cost[0]
            best_s = start[0]
            for j in range(1, self.n + 1):
                cj = cost[j]
                if cj < best_c or (cj == best_c and start[j] < best_s):
                    best_j, best_c, best_s = j, cj, start[j]
            out[(s, s + r)] = SubsequenceMatch(
                query_range=(s, s + r),
                corpus_range=(best_s, best_j),
                alignment=_traceback(backs, s, r, best_j),
                cost=best_c,
            )
        return out


def _traceback(backs: list[bytearray], s: int, r: int, j: int) -> tuple[Pair, ...]:
    pairs: list[Pair] = []
    while True:
        b = backs[r][j]
        if b == _ORIGIN:
            break
        if b == _DIAG:
            pairs.append((s + r - 1, j - 1))
            r -= 1
            j -= 1
        elif b == _UP:
            pairs.append((s + r - 1, None))
            r -= 1
        else:
            pairs.append((None, j - 1))
            j -= 1
    pairs.reverse()
    return tuple(pairs)


def _excluded_mask(n: int, exclude: Sequence[range] | np.ndarray | None) -> np.ndarray:
    if exclude is None:
        return np.zeros(n, dtype=bool)
    if isinstance(exclude, np.ndarray) and exclude.dtype == bool:
        if exclude.shape != (n,):
            raise ValueError("exclusion mask must match the corpus length")
        return exclude.copy()
    mask = np.zeros(n, dtype=bool)
    for r in exclude:
        mask[max(r.start, 0) : max(min(r.stop, n), 0)] = True
    return mask


def _check_inputs(query: PhoneSequence, corpus: PhoneSequence) -> None:
    if len(query) == 0:
        raise EmptyInput("query is empty")
    if len(corpus) == 0:
        raise EmptyInput("corpus is empty")


def match_subsequence(
    query: PhoneSequence,
    corpus: PhoneSequence,
    params: CostParams = DEFAULT_PARAMS,
    exclude: Sequence[range] | np.ndarray | None = None,
) -> SubsequenceMatch:
    """Cheapest alignment of the whole query to any contiguous corpus run.

    Ties go to the earlier corpus start, then the shorter corpus span.
    Excluded corpus phones are never part of the matched run.
    """
    _check_inputs(query, corpus)
    c = _Corpus(query, corpus, params, _excluded_mask(len(corpus), exclude))
    return c.matches_from(0, len(query))[(0, len(query))]


def search(
    query: PhoneSequence,
    corpus: PhoneSequence,
    params: CostParams = DEFAULT_PARAMS,
    exclude: Sequence[range] | np.ndarray | None = None,
    max_query: int = MAX_QUERY,
    threads: int = 1,
) -> SearchResult:
    """Split the query into segments minimising sum(match cost + phi / length).

    Each segment's match is computed once.  Among equal totals the split
    with fewer segments wins, then the one whose corpus starts are
    lexicographically earliest.
    """
    _check_inputs(query, corpus)
    m = len(query)
    if m > max_query:
        raise QueryTooLong(f"query has {m} phones, limit is {max_query}")
    c = _Corpus(query, corpus, params, _excluded_mask(len(corpus), exclude))

    table: dict[tuple[int, int], SubsequenceMatch] = {}
    if threads > 1 and m > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda s: c.matches_from(s, m), range(m)))
    else:
        parts = [c.matches_from(s, m) for s in range(m)]
    for part in parts:
        table.update(part)

    # best[e]: (total, n_segments, corpus starts, split) over splits of query[:e]
    best: list[tuple[float, int, tuple[int, ...], tuple[SubsequenceMatch, ...]] | None] = [None] * (m + 1)
    best[0] = (0.0, 0, (), ())
    for e in range(1, m + 1):
        cand = None
        for s in range(e):
            prev = best[s]
            seg = table[(s, e)]
            key = (
                prev[0] + (seg.cost + length_penalty(e - s, params)),
                prev[1] + 1,
                prev[2] + (seg.corpus_range[0],),
            )
            if cand is None or key < cand[:3]:
                cand = key + (prev[3] + (seg,),)
        best[e] = cand
    total, _, _, split = best[m]
    return SearchResult(split=split, total_cost=total, table=table)


def dp_table_csv(result: SearchResult) -> str:
    """Segment cost table as CSV (debug output)."""
    buf = io.StringIO()
    buf.write("q_start,q_end,n_phones,cost,corpus_start,corpus_end,chosen\n")
    chosen = {m.query_range for m in result.split}
    for (s, e), m in sorted(result.table.items()):
        buf.write(
            f"{s},{e},{m.length},{m.cost!r},{m.corpus_range[0]},{m.corpus_range[1]},{int((s, e) in chosen)}\n"
        )
    return buf.getvalue()
