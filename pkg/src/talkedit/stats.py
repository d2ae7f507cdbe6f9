"""Corpus statistics: how often label n-grams recur, and how long visemes last."""

from __future__ import annotations

import csv
import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Hashable, Iterable, Literal, Sequence

import numpy as np

from .core import SILENCE, PhoneSequence, viseme_of
from .errors import InsufficientCorpus
from .ingest import AlignedTranscript

Mode = Literal["phoneme", "viseme"]
MODES: tuple[Mode, ...] = ("phoneme", "viseme")


def sentence_sequences(corpus: AlignedTranscript | Iterable[AlignedTranscript]) -> list[list[str]]:
    """Phone labels of every sentence (silences kept)."""
    if isinstance(corpus, AlignedTranscript):
        corpus = [corpus]
    out = []
    for tr in corpus:
        for s in range(len(tr.sentences)):
            out.append([tr.phones[i].label for i in tr.sentence_phone_range(s)])
    return out


def _symbols(labels: Sequence[str], mode: Mode) -> list[Hashable]:
    if mode == "phoneme":
        return list(labels)
    if mode == "viseme":
        return [viseme_of(lbl) for lbl in labels]
    raise ValueError(f"unknown mode {mode!r}")


class _WindowIndex:
    """All sp-free length-k windows, and whether each recurs in another sentence."""

    def __init__(
        self,
        sentences: Sequence[Sequence[str]],
        k: int,
        mode: Mode,
        sources: Iterable[int] | None = None,
    ):
        if len(sentences) < 2:
            raise InsufficientCorpus("need at least two sentences for leave-one-out matching")
        if k < 1:
            raise ValueError("k must be at least 1")
        wanted = set(range(len(sentences)) if sources is None else sources)
        grams: list[tuple] = []
        # gram -> first sentence seen, or -1 once seen in two sentences
        seen: dict[tuple, int] = {}
        for sid, labels in enumerate(sentences):
            sym = _symbols(labels, mode)
            bad = [lbl == SILENCE for lbl in labels]
            run = 0  # sp-free phones ending at i
            for i in range(len(sym)):
                run = 0 if bad[i] else run + 1
                if i + 1 >= k:
                    g = tuple(sym[i + 1 - k : i + 1])
                    first = seen.get(g)
                    if first is None:
                        seen[g] = sid
                    elif first != sid and first != -1:
                        seen[g] = -1
                    if run >= k and sid in wanted:
                        grams.append(g)
        self.hit = np.array([seen[g] == -1 for g in grams], dtype=bool)

    def __len__(self) -> int:
        return len(self.hit)


def match_probability(
    sentences: Sequence[Sequence[str]],
    k: int,
    mode: Mode = "phoneme",
    trials: int | None = 100_000,
    seed: int = 0,
    threads: int = 1,
    sources: Iterable[int] | None = None,
) -> tuple[float, int]:
    """Chance that a random length-k window recurs verbatim in another sentence.

    Windows containing silence are never sampled.  ``trials=None`` enumerates
    every window.  ``sources`` restricts sampling to windows of those
    sentences (all of them by default); matches are still sought in every
    other sentence.  Returns (probability, number of windows evaluated); the
    probability is NaN when no window qualifies.

    Sampling depends on ``seed`` and ``k`` only, so both modes draw the same
    windows and the viseme estimate never falls below the phoneme estimate.
    """
    index = _WindowIndex(sentences, k, mode, sources)
    n = len(index)
    if n == 0:
        return float("nan"), 0
    if trials is None:
        return float(index.hit.mean()), n
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, k])))
    picks = rng.integers(0, n, size=trials)
    if threads > 1:
        chunks = np.array_split(picks, threads)
        with ThreadPoolExecutor(threads) as pool:
            hits = sum(pool.map(lambda c: int(index.hit[c].sum()), chunks))
    else:
        hits = int(index.hit[picks].sum())
    return hits / trials, trials


@dataclass(frozen=True)
class MatchProbabilityCurve:
    mode: Mode
    ks: tuple[int, ...]
    probability: tuple[float, ...]
    trials: tuple[int, ...]


def match_probability_curve(
    sentences: Sequence[Sequence[str]],
    mode: Mode = "phoneme",
    k_max: int = 10,
    trials: int | None = 100_000,
    seed: int = 0,
    threads: int = 1,
) -> MatchProbabilityCurve:
    ks = tuple(range(1, k_max + 1))
    vals = [match_probability(sentences, k, mode, trials, seed, threads) for k in ks]
    return MatchProbabilityCurve(mode, ks, tuple(v for v, _ in vals), tuple(t for _, t in vals))


@dataclass(frozen=True)
class VisemeDuration:
    count: int
    min: float
    q1: float
    median: float
    q3: float
    max: float


DurationStats = dict[int, VisemeDuration]


def _phones_of(corpus: AlignedTranscript | PhoneSequence | Iterable[AlignedTranscript]) -> list:
    if isinstance(corpus, PhoneSequence):
        return list(corpus)
    if isinstance(corpus, AlignedTranscript):
        return list(corpus.phones)
    return [p for tr in corpus for p in tr.phones]


def duration_stats(corpus: AlignedTranscript | PhoneSequence | Iterable[AlignedTranscript]) -> DurationStats:
    by_viseme: dict[int, list[float]] = {}
    for p in _phones_of(corpus):
        by_viseme.setdefault(p.viseme, []).append(p.duration)
    out = {}
    for vid in sorted(by_viseme):
        d = np.asarray(by_viseme[vid])
        q1, med, q3 = np.percentile(d, [25, 50, 75])
        out[vid] = VisemeDuration(len(d), float(d.min()), float(q1), float(med), float(q3), float(d.max()))
    return out


def median_durations(corpus: AlignedTranscript | PhoneSequence | Iterable[AlignedTranscript]) -> dict[int, float]:
    """Median phone duration per viseme, used to time words with no timing."""
    return {vid: s.median for vid, s in duration_stats(corpus).items()}


def curves_csv(curves: Iterable[MatchProbabilityCurve]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["k", "probability", "trials", "mode"])
    for c in curves:
        for k, p, t in zip(c.ks, c.probability, c.trials):
            w.writerow([k, repr(p), t, c.mode])
    return buf.getvalue()


def durations_csv(stats: DurationStats) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["viseme", "count", "min", "q1", "median", "q3", "max"])
    for vid, s in sorted(stats.items()):
        w.writerow([f"v{vid:02d}", s.count, repr(s.min), repr(s.q1), repr(s.median), repr(s.q3), repr(s.max)])
    return buf.getvalue()


def export_curves(
    curves: MatchProbabilityCurve | Iterable[MatchProbabilityCurve],
    stats: DurationStats,
) -> tuple[str, str]:
    """CSV documents for the match-probability curves and the duration table."""
    if isinstance(curves, MatchProbabilityCurve):
        curves = [curves]
    return curves_csv(curves), durations_csv(stats)
