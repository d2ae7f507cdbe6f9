"""Synthetic aligned corpora and parameter tracks for tests and demos.

Sentences are drawn from a Zipf-weighted vocabulary of real and pseudo
English words; phone durations are log-normal around class-typical means;
the face track's expression follows per-viseme prototypes so that matching
visemes really do look alike in parameter space.
"""

from __future__ import annotations

import math
from typing import Mapping, Sequence

import numpy as np

from .core import SILENCE, VISEME_GROUPS, base_phoneme, viseme_of
from .ingest import (
    EXPRESSION,
    GEOMETRY,
    ILLUMINATION,
    PARAM_DIM,
    POSE,
    REFLECTANCE,
    AlignedTranscript,
    ParameterTrack,
    PronunciationDict,
    parse_alignment,
)

LEXICON: dict[str, tuple[str, ...]] = {
    "a": ("AH0",),
    "and": ("AH0", "N", "D"),
    "big": ("B", "IH1", "G"),
    "bread": ("B", "R", "EH1", "D"),
    "brown": ("B", "R", "AW1", "N"),
    "coffee": ("K", "AA1", "F", "IY0"),
    "dog": ("D", "AO1", "G"),
    "drenched": ("D", "R", "EH1", "N", "CH", "T"),
    "eggs": ("EH1", "G", "Z"),
    "fox": ("F", "AA1", "K", "S"),
    "french": ("F", "R", "EH1", "N", "CH"),
    "fresh": ("F", "R", "EH1", "SH"),
    "hello": ("HH", "AH0", "L", "OW1"),
    "i": ("AY1",),
    "in": ("IH0", "N"),
    "is": ("IH1", "Z"),
    "jumps": ("JH", "AH1", "M", "P", "S"),
    "lazy": ("L", "EY1", "Z", "IY0"),
    "like": ("L", "AY1", "K"),
    "morning": ("M", "AO1", "R", "N", "IH0", "NG"),
    "napalm": ("N", "EY1", "P", "AA2", "L", "M"),
    "of": ("AH1", "V"),
    "over": ("OW1", "V", "ER0"),
    "ox": ("AA1", "K", "S"),
    "quick": ("K", "W", "IH1", "K"),
    "roast": ("R", "OW1", "S", "T"),
    "she": ("SH", "IY1"),
    "smell": ("S", "M", "EH1", "L"),
    "spider": ("S", "P", "AY1", "D", "ER0"),
    "sun": ("S", "AH1", "N"),
    "the": ("DH", "AH0"),
    "toast": ("T", "OW1", "S", "T"),
    "viper": ("V", "AY1", "P", "ER0"),
    "we": ("W", "IY1"),
    "with": ("W", "IH1", "DH"),
    "wonderful": ("W", "AH1", "N", "D", "ER0", "F", "AH0", "L"),
    "world": ("W", "ER1", "L", "D"),
}

# rough English frequencies
_ONSETS = {
    "": 12, "T": 6, "N": 4, "S": 6, "R": 4, "D": 4, "L": 4, "K": 5, "M": 5, "W": 4, "Z": 1,
    "V": 2, "P": 4, "B": 4, "F": 4, "HH": 4, "DH": 3, "G": 2, "Y": 1, "SH": 2, "TH": 1,
    "CH": 1, "JH": 1, "S T": 1, "S P": 1, "S K": 1, "P R": 1, "T R": 1, "K R": 1, "B R": 1,
    "D R": 1, "G R": 1, "F R": 1, "P L": 1, "B L": 1, "K L": 1, "F L": 1, "S L": 1, "S M": 0.5,
    "S N": 0.5, "S W": 0.5, "T W": 0.3, "K W": 0.7,
}
_NUCLEI = {
    "AH": 10, "IH": 8, "IY": 5, "EH": 5, "AE": 5, "AA": 4, "ER": 4, "EY": 3, "AY": 3,
    "OW": 3, "UW": 3, "AO": 2, "AW": 1, "UH": 1, "OY": 0.3,
}
_CODAS = {
    "": 10, "N": 6, "T": 5, "D": 3, "S": 4, "Z": 3, "L": 3, "R": 3, "K": 3, "M": 2, "NG": 1.5,
    "S T": 1, "N D": 1, "N T": 1, "K S": 0.7, "T S": 0.7, "L D": 0.4, "R T": 0.4, "V": 1, "F": 0.7,
    "P": 1, "B": 0.5, "G": 0.5, "SH": 0.5, "CH": 0.4, "TH": 0.4,
}
_SPELL = {
    "AA": "a", "AE": "a", "AH": "u", "AO": "o", "AW": "ow", "AY": "i", "EH": "e", "ER": "er",
    "EY": "ay", "IH": "i", "IY": "ee", "OW": "o", "OY": "oy", "UH": "oo", "UW": "oo", "B": "b",
    "CH": "ch", "D": "d", "DH": "th", "F": "f", "G": "g", "HH": "h", "JH": "j", "K": "k", "L": "l",
    "M": "m", "N": "n", "NG": "ng", "P": "p", "R": "r", "S": "s", "SH": "sh", "T": "t", "TH": "th",
    "V": "v", "W": "w", "Y": "y", "Z": "z", "ZH": "zh",
}

# mean durations in seconds by phone class
_STOPS = {"P", "B", "T", "D", "K", "G"}
_FRICATIVES = {"F", "V", "S", "Z", "SH", "ZH", "TH", "DH", "HH"}
_AFFRICATES = {"CH", "JH"}
_NASALS = {"M", "N", "NG"}


def mean_duration(label: str) -> float:
    if label == SILENCE:
        return 0.12
    if label[-1].isdigit():
        return {"0": 0.055, "1": 0.12, "2": 0.09}[label[-1]]
    if label in _STOPS:
        return 0.055
    if label in _FRICATIVES:
        return 0.085
    if label in _AFFRICATES:
        return 0.095
    if label in _NASALS:
        return 0.06
    return 0.05


_CDF_CACHE: dict[int, tuple[list[str], np.ndarray]] = {}


def _choice(rng: np.random.Generator, table: Mapping[str, float]) -> str:
    cached = _CDF_CACHE.get(id(table))
    if cached is None:
        keys = list(table)
        w = np.array([table[k] for k in keys], dtype=float)
        cached = _CDF_CACHE[id(table)] = (keys, np.cumsum(w / w.sum()))
    keys, cdf = cached
    return keys[min(int(np.searchsorted(cdf, rng.random(), side="right")), len(keys) - 1)]


def pseudo_word(rng: np.random.Generator) -> tuple[str, ...]:
    n_syll = 1 + int(rng.choice(3, p=[0.5, 0.35, 0.15]))
    phones: list[str] = []
    for k in range(n_syll):
        onset = _choice(rng, _ONSETS).split()
        stress = "1" if k == 0 else ("2" if rng.random() < 0.15 else "0")
        nucleus = _choice(rng, _NUCLEI) + stress
        coda = _choice(rng, _CODAS).split()
        phones += onset + [nucleus] + coda
    return tuple(phones)


def spell(phones: Sequence[str]) -> str:
    return "".join(_SPELL[base_phoneme(p)] for p in phones)


def make_lexicon(n_pseudo: int, seed: int = 0, base: Mapping[str, tuple[str, ...]] = LEXICON) -> dict[str, tuple[str, ...]]:
    """Real words plus ``n_pseudo`` pseudo-words with distinct spellings."""
    rng = np.random.default_rng([seed, 1])
    lex = dict(base)
    while len(lex) < len(base) + n_pseudo:
        p = pseudo_word(rng)
        w = spell(p)
        if w not in lex:
            lex[w] = p
    return lex


def _quantize(t: float, q: float | None) -> float:
    return t if q is None else round(t / q) * q


def synth_transcript(
    sentences: Sequence[Sequence[str]],
    lexicon: Mapping[str, tuple[str, ...]],
    seed: int = 0,
    quantum: float | None = None,
    sigma: float = 0.3,
    pause_prob: float = 0.1,
) -> AlignedTranscript:
    """Align the given word sentences with random but plausible timings.

    ``quantum`` snaps every phone boundary to a grid (e.g. 1 / fps).  Each
    sentence ends with a silence longer than the sentence-break threshold.
    """
    rng = np.random.default_rng([seed, 2])
    words = []
    sent_idx = []
    t = _quantize(0.2, quantum)

    def phone_dur(lbl: str) -> float:
        d = float(np.clip(mean_duration(lbl) * math.exp(sigma * rng.standard_normal()), 0.02, 0.45))
        if quantum is not None:
            d = max(round(d / quantum), 1) * quantum
        return d

    def add_word(text: str, labels: Sequence[str], durs: Sequence[float] | None = None):
        nonlocal t
        phones = []
        t0 = t
        for i, lbl in enumerate(labels):
            d = durs[i] if durs is not None else phone_dur(lbl)
            t1 = _quantize(t + d, quantum)
            phones.append({"lbl": lbl, "t_in": t, "t_out": t1})
            t = t1
        words.append({"text": text, "t_in": t0, "t_out": t, "phones": phones})

    for sent in sentences:
        ids = []
        for wi, w in enumerate(sent):
            if wi and rng.random() < pause_prob:
                ids.append(len(words))
                add_word(SILENCE, [SILENCE])
            ids.append(len(words))
            add_word(w, lexicon[w])
        ids.append(len(words))
        pause = float(rng.uniform(0.35, 0.6))
        if quantum is not None:
            pause = max(round(pause / quantum), 1) * quantum
        add_word(SILENCE, [SILENCE], [pause])
        sent_idx.append(ids)
    return parse_alignment({"words": words, "sentences": sent_idx})


def synth_corpus(
    n_sentences: int,
    seed: int = 0,
    vocab: int = 20000,
    zipf: float = 0.7,
    words_per_sentence: tuple[int, int] = (5, 11),
    quantum: float | None = None,
) -> tuple[AlignedTranscript, PronunciationDict]:
    """A corpus of random sentences over a Zipf-distributed vocabulary."""
    lex = make_lexicon(vocab, seed)
    names = list(lex)
    rng = np.random.default_rng([seed, 3])
    order = rng.permutation(len(names))
    # short real words are the most frequent, like function words
    short = sorted(LEXICON, key=lambda w: len(LEXICON[w]))[:8]
    ranked = short + [names[i] for i in order if names[i] not in short]
    weights = 1.0 / np.arange(1, len(ranked) + 1) ** zipf
    weights /= weights.sum()
    sentences = []
    for _ in range(n_sentences):
        n = int(rng.integers(words_per_sentence[0], words_per_sentence[1] + 1))
        sentences.append([ranked[i] for i in rng.choice(len(ranked), size=n, p=weights)])
    tr = synth_transcript(sentences, lex, seed, quantum)
    return tr, PronunciationDict({w.upper(): (p,) for w, p in lex.items()})


def dictionary_text(pron: PronunciationDict) -> str:
    lines = []
    for word in sorted(pron.entries):
        for i, codes in enumerate(pron.entries[word]):
            name = word if i == 0 else f"{word}({i + 1})"
            lines.append(f"{name}  {' '.join(codes)}")
    return "\n".join(lines) + "\n"


def synth_track(
    transcript: AlignedTranscript,
    fps: float = 60.0,
    seed: int = 0,
    pad: float = 0.0,
) -> ParameterTrack:
    """A face-parameter track consistent with the transcript's phones."""
    rng = np.random.default_rng([seed, 4])
    n = int(math.ceil((transcript.duration + pad) * fps))
    t = np.arange(n) / fps
    frames = np.zeros((n, PARAM_DIM))

    frames[:, GEOMETRY] = rng.normal(0, 1, 80) + rng.normal(0, 1e-3, (n, 80))
    frames[:, REFLECTANCE] = rng.normal(0, 1, 80) + rng.normal(0, 1e-3, (n, 80))
    walk = np.cumsum(rng.normal(0, 0.002, (n, 6)), axis=0)
    frames[:, POSE] = walk + np.array([0, 0, 0, 0, 0, 5.0])

    protos = {vid: rng.normal(0, 1, 64) for vid in VISEME_GROUPS}
    protos[viseme_of(SILENCE)] = np.zeros(64)
    starts = np.array([p.t_in for p in transcript.phones])
    idx = np.clip(np.searchsorted(starts, t, side="right") - 1, 0, len(starts) - 1)
    target = np.array([protos[transcript.phones[i].viseme] for i in idx])
    inside = t < np.array([transcript.phones[i].t_out for i in idx])
    target[~inside] = 0.0
    expr = np.empty_like(target)
    acc = np.zeros(64)
    alpha = 1.0 - math.exp(-1.0 / (0.03 * fps))  # ~30 ms articulation lag
    for k in range(n):
        acc = acc + alpha * (target[k] - acc)
        expr[k] = acc
    frames[:, EXPRESSION] = expr + rng.normal(0, 0.01, (n, 64))

    phase = rng.uniform(0, 2 * np.pi, 27)
    frames[:, ILLUMINATION] = 0.3 * np.sin(2 * np.pi * t[:, None] / 20.0 + phase) + rng.normal(0, 0.1, 27)
    return ParameterTrack(fps, frames)
