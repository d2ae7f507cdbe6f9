import random
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import CODES, random_sequence
from oracles import brute_match_cost, brute_search_cost, exhaustive_match_cost
from talkedit.core import CostParams, PhoneSequence, swap_cost
from talkedit.errors import EmptyInput, QueryTooLong
from talkedit.search import (
    dp_table_csv,
    enumerate_splits,
    iter_splits,
    match_subsequence,
    search,
)

P = CostParams()


def seq(*items):
    """seq(("AA1", 0.1), ...) laid out contiguously."""
    return PhoneSequence.contiguous([a for a, _ in items], [d for _, d in items])


def check_alignment(m, query_len=None):
    qs = [q for q, _ in m.alignment if q is not None]
    cs = [c for _, c in m.alignment if c is not None]
    assert qs == list(range(*m.query_range))
    assert cs == list(range(*m.corpus_range))


def test_exact_subsequence_is_free():
    corpus = seq(("M", 0.1), ("F", 0.07), ("R", 0.05), ("EH1", 0.12), ("S", 0.1))
    m = match_subsequence(corpus[1:4], corpus)
    assert m.cost == 0.0
    assert m.corpus_range == (1, 4)
    assert m.alignment == ((0, 1), (1, 2), (2, 3))


def test_same_viseme_swap():
    q = seq(("AA1", 0.1))
    corpus = seq(("M", 0.1), ("AA2", 0.1), ("S", 0.1))
    m = match_subsequence(q, corpus)
    assert m.corpus_range == (1, 2)
    assert m.cost == brute_match_cost(q, corpus, P)
    assert m.cost == pytest.approx(0.1, abs=1e-12)


def test_two_phone_query_against_one_phone_corpus():
    q = seq(("M", 0.1), ("F", 0.1))
    corpus = seq(("AA1", 0.1))
    m = match_subsequence(q, corpus)
    # oracle: one swap (viseme mismatch, 1 * 0.2) plus one insertion
    assert m.cost == brute_match_cost(q, corpus, P) == exhaustive_match_cost(q, corpus, P)
    assert m.cost == pytest.approx(1.2, abs=1e-12)
    assert sum(1 for a, b in m.alignment if a is not None and b is not None) == 1
    assert sum(1 for a, b in m.alignment if b is None) == 1


def test_ties_prefer_earliest_start():
    corpus = seq(("B", 0.1), ("AA1", 0.1), ("B", 0.1), ("AA1", 0.1))
    m = match_subsequence(seq(("AA1", 0.1)), corpus)
    assert m.corpus_range == (1, 2)


def test_empty_inputs():
    with pytest.raises(EmptyInput):
        match_subsequence(PhoneSequence(), seq(("AA1", 0.1)))
    with pytest.raises(EmptyInput):
        search(seq(("AA1", 0.1)), PhoneSequence())


def test_query_too_long():
    q = PhoneSequence.contiguous(["AA1"] * 5, [0.1] * 5)
    with pytest.raises(QueryTooLong):
        search(q, q, max_query=4)


@pytest.mark.parametrize("m, expected", [(1, 1), (4, 8), (10, 512)])
def test_enumerate_splits(m, expected):
    assert enumerate_splits(m) == expected
    assert sum(1 for _ in iter_splits(m)) == expected


def test_exhaustive_alignment_oracle_agrees_with_dp_oracle():
    rng = random.Random(7)
    for _ in range(60):
        q = random_sequence(rng, rng.randint(1, 3))
        c = random_sequence(rng, rng.randint(1, 5))
        assert exhaustive_match_cost(q, c, P) == brute_match_cost(q, c, P)


def test_match_against_exhaustive_enumeration_small():
    rng = random.Random(11)
    for _ in range(60):
        q = random_sequence(rng, rng.randint(1, 3), codes=["AA1", "AA2", "M", "B", "F"])
        c = random_sequence(rng, rng.randint(1, 5), codes=["AA1", "AA2", "M", "B", "F"])
        m = match_subsequence(q, c)
        assert m.cost == exhaustive_match_cost(q, c, P)
        check_alignment(m)


@pytest.mark.parametrize("params", [P, CostParams(c_insert=0.3, c_delete=0.2, chi=0.5), CostParams(c_delete=0.0)])
def test_match_against_oracle_random(params):
    rng = random.Random(3)
    for _ in range(80):
        q = random_sequence(rng, rng.randint(1, 6))
        c = random_sequence(rng, rng.randint(1, 20))
        m = match_subsequence(q, c, params)
        assert m.cost == brute_match_cost(q, c, params)
        check_alignment(m)
        # re-evaluate the reported alignment along the path
        total = 0.0
        for qi, ci in m.alignment:
            if qi is None:
                total += params.c_delete
            elif ci is None:
                total += params.c_insert
            else:
                total += swap_cost(c[ci], q[qi], params)
        assert total == m.cost


def test_exclusion_window():
    rng = random.Random(5)
    for _ in range(50):
        q = random_sequence(rng, rng.randint(1, 4))
        c = random_sequence(rng, rng.randint(2, 15))
        lo = rng.randrange(len(c))
        hi = rng.randint(lo, len(c))
        mask = np.zeros(len(c), dtype=bool)
        mask[lo:hi] = True
        m = match_subsequence(q, c, exclude=[range(lo, hi)])
        assert m.cost == brute_match_cost(q, c, P, mask.tolist())
        a, b = m.corpus_range
        assert not mask[a:b].any()


def test_exclusion_blocks_verbatim_copy():
    corpus = seq(("F", 0.1), ("R", 0.1), ("EH1", 0.1), ("M", 0.1), ("F", 0.1), ("R", 0.1), ("EH1", 0.1))
    q = corpus[0:3]
    assert search(q, corpus).split[0].corpus_range == (0, 3)
    # durations differ from the original (t positions do not matter)
    r = search(q, corpus, exclude=[range(0, 3)])
    assert r.split[0].corpus_range == (4, 7)


def test_search_single_phone():
    q = seq(("AA1", 0.1))
    r = search(q, seq(("M", 0.1), ("AA1", 0.1)))
    assert len(r.split) == 1
    assert r.total_cost == 0.0 + P.phi


def test_verbatim_query_single_segment():
    corpus = seq(("M", 0.1), ("F", 0.08), ("R", 0.05), ("EH1", 0.12), ("SH", 0.1), ("D", 0.04))
    r = search(corpus[1:4], corpus)
    assert len(r.split) == 1
    assert r.split[0].corpus_range == (1, 4)
    assert r.total_cost == pytest.approx(0.001 / 3, abs=1e-15)
    assert r.total_cost == 0.0 + 0.001 / 3


def test_search_against_split_oracle():
    rng = random.Random(21)
    for _ in range(40):
        q = random_sequence(rng, rng.randint(1, 5))
        c = random_sequence(rng, rng.randint(1, 15))
        r = search(q, c)
        assert r.total_cost == brute_search_cost(q, c, P)
        bounds = [s for s, _ in r.segments] + [r.segments[-1][1]]
        assert bounds[0] == 0 and bounds[-1] == len(q)
        assert all(a < b for a, b in zip(bounds, bounds[1:]))
        recomputed = 0.0
        for m in r.split:
            recomputed = recomputed + (m.cost + P.phi / m.length)
        assert recomputed == r.total_cost


def test_search_prefers_fewer_segments_on_ties():
    # phi = 0 makes every split of a verbatim query cost 0
    corpus = seq(("F", 0.1), ("R", 0.1), ("EH1", 0.1))
    r = search(corpus, corpus, CostParams(phi=0.0))
    assert len(r.split) == 1


def test_appending_corpus_never_increases_cost():
    rng = random.Random(8)
    for _ in range(30):
        q = random_sequence(rng, rng.randint(1, 5))
        c = random_sequence(rng, rng.randint(1, 10))
        extra = random_sequence(rng, rng.randint(1, 5))
        longer = PhoneSequence.contiguous(c.labels + extra.labels, c.durations + extra.durations)
        assert search(q, longer).total_cost <= search(q, c).total_cost


def test_scale_covariance():
    rng = random.Random(4)
    s = 3.0
    for _ in range(20):
        q = random_sequence(rng, rng.randint(1, 4))
        c = random_sequence(rng, rng.randint(1, 10))
        p = CostParams(phi=0.0)
        ps = CostParams(c_insert=s, c_delete=s, phi=0.0)
        scale = lambda x: PhoneSequence.contiguous(x.labels, [d * s for d in x.durations])
        a, b = search(q, c, p), search(scale(q), scale(c), ps)
        assert b.total_cost == pytest.approx(s * a.total_cost, rel=1e-9, abs=1e-12)


def test_determinism_and_threads():
    rng = random.Random(9)
    q = random_sequence(rng, 7)
    c = random_sequence(rng, 300, codes=CODES[:12])
    ref = search(q, c)
    assert search(q, c) == ref
    assert search(q, c, threads=4) == ref
    with ThreadPoolExecutor(4) as pool:
        results = list(pool.map(lambda _: search(q, c), range(4)))
    assert all(r == ref for r in results)


def test_dp_table_csv():
    corpus = seq(("F", 0.1), ("R", 0.1), ("EH1", 0.1))
    text = dp_table_csv(search(corpus, corpus))
    lines = text.strip().splitlines()
    assert lines[0].startswith("q_start,q_end")
    assert len(lines) == 1 + 6
    assert lines[-1].endswith(",1") or any(l.endswith(",1") for l in lines)


@settings(max_examples=40, deadline=None)
@given(st.data())
def test_verbatim_retrieval_property(data):
    n = data.draw(st.integers(3, 25))
    labels = data.draw(st.lists(st.sampled_from(CODES), min_size=n, max_size=n))
    durs = data.draw(st.lists(st.floats(0.02, 0.5), min_size=n, max_size=n))
    corpus = PhoneSequence.contiguous(labels, durs)
    a = data.draw(st.integers(0, n - 1))
    b = data.draw(st.integers(a + 1, min(n, a + 8)))
    q = corpus[a:b]
    r = search(q, corpus)
    assert len(r.split) == 1
    assert r.total_cost == 0.001 / (b - a)
    lo, hi = r.split[0].corpus_range
    assert corpus.labels[lo:hi] == labels[a:b]
    assert lo <= a  # earliest identical occurrence
