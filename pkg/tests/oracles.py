"""Slow, independent reference evaluators used to check the search DPs.

Nothing here shares code with talkedit.search: swap costs come from the
scalar ``swap_cost``, subsequences are enumerated explicitly and splits are
generated from bit masks.
"""

from __future__ import annotations

import itertools

from talkedit.core import CostParams, Phone, swap_cost


def global_edit_costs(query: list[Phone], sub: list[Phone], params: CostParams) -> list[float]:
    """Edit distance of ``query`` against every prefix of ``sub``.

    Entry k is the minimum over all alignments of query with sub[:k], each
    alignment's cost summed from its first operation to its last.
    """
    m, n = len(query), len(sub)
    g = [[0.0] * (n + 1) for _ in range(m + 1)]
    for k in range(1, n + 1):
        g[0][k] = g[0][k - 1] + params.c_delete
    for i in range(1, m + 1):
        g[i][0] = g[i - 1][0] + params.c_insert
        for k in range(1, n + 1):
            g[i][k] = min(
                g[i - 1][k - 1] + swap_cost(sub[k - 1], query[i - 1], params),
                g[i - 1][k] + params.c_insert,
                g[i][k - 1] + params.c_delete,
            )
    return g[m]


def brute_match_cost(query, corpus, params: CostParams, excluded=None) -> float:
    """Minimum over every contiguous corpus run (empty included) of the edit distance."""
    query = list(query)
    corpus = list(corpus)
    n = len(corpus)
    excluded = excluded if excluded is not None else [False] * n
    best = float("inf")
    for a in range(n + 1):
        b = a
        while b < n and not excluded[b]:
            b += 1
        costs = global_edit_costs(query, corpus[a:b], params)
        best = min(best, min(costs))
    return best


def all_alignment_costs(query: list[Phone], sub: list[Phone], params: CostParams):
    """Yield the cost of every alignment of query against sub (tiny inputs only)."""

    def rec(i: int, k: int, acc: float):
        if i == len(query) and k == len(sub):
            yield acc
            return
        if i < len(query) and k < len(sub):
            yield from rec(i + 1, k + 1, acc + swap_cost(sub[k], query[i], params))
        if i < len(query):
            yield from rec(i + 1, k, acc + params.c_insert)
        if k < len(sub):
            yield from rec(i, k + 1, acc + params.c_delete)

    yield from rec(0, 0, 0.0)


def exhaustive_match_cost(query, corpus, params: CostParams) -> float:
    """Minimum over every contiguous run and every explicit alignment."""
    query, corpus = list(query), list(corpus)
    n = len(corpus)
    return min(
        min(all_alignment_costs(query, corpus[a:b], params))
        for a in range(n + 1)
        for b in range(a, n + 1)
    )


def brute_search_cost(query, corpus, params: CostParams, excluded=None) -> float:
    query = list(query)
    m = len(query)
    best = float("inf")
    for cuts in itertools.product((False, True), repeat=m - 1):
        bounds = [0] + [i + 1 for i, c in enumerate(cuts) if c] + [m]
        total = 0.0
        for s, e in zip(bounds[:-1], bounds[1:]):
            total = total + (brute_match_cost(query[s:e], corpus, params, excluded) + params.phi / (e - s))
        best = min(best, total)
    return best


# Viseme grouping typed in separately from talkedit.core, for the cost oracle.
_GROUPING = """
v01 AA0 AA1 AA2
v02 AH0 AH1 AH2 HH
v03 AO0 AO1 AO2
v04 AW0 AW1 AW2 OW0 OW1 OW2
v05 OY0 OY1 OY2 UH0 UH1 UH2 UW0 UW1 UW2
v06 EH0 EH1 EH2 AE0 AE1 AE2
v07 IH0 IH1 IH2 AY0 AY1 AY2
v08 EY0 EY1 EY2
v09 Y IY0 IY1 IY2
v10 R ER0 ER1 ER2
v11 L
v12 W
v13 M P B
v14 N NG DH D G T Z ZH TH K S
v15 CH JH SH
v16 F V
v17 sp
"""
GROUP_OF = {code: line.split()[0] for line in _GROUPING.strip().splitlines() for code in line.split()[1:]}


def direct_swap_cost(p_label: str, p_len: float, q_label: str, q_len: float, chi: float) -> float:
    """Swap cost written straight from its definition."""
    if p_label == q_label:
        cv = 0.0
    elif GROUP_OF[p_label] == GROUP_OF[q_label]:
        cv = 0.5
    else:
        cv = 1.0
    return cv * (p_len + q_len) + chi * abs(p_len - q_len)
