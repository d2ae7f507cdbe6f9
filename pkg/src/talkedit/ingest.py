"""Readers and writers for alignments, dictionaries, parameter tracks and edits.

Also assembles the timed phone query an edit has to realise.
"""

from __future__ import annotations

import enum
import json
import math
import re
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from .core import SILENCE, Phone, PhoneSequence, canonical_label, viseme_of
from .errors import (
    DimensionError,
    MissingTiming,
    OutOfVocabulary,
    OverlapError,
    ParseError,
    UnknownPhoneme,
)

# Block layout of one face-model parameter vector.
POSE = slice(0, 6)
GEOMETRY = slice(6, 86)
REFLECTANCE = slice(86, 166)
EXPRESSION = slice(166, 230)
ILLUMINATION = slice(230, 257)
PARAM_DIM = 257
BLOCKS: dict[str, slice] = {
    "pose": POSE,
    "geometry": GEOMETRY,
    "reflectance": REFLECTANCE,
    "expression": EXPRESSION,
    "illumination": ILLUMINATION,
}

TRACK_MAGIC = b"VFTK"
TRACK_VERSION = 1
_TRACK_HEADER = struct.Struct("<4sIdQ")

SENTENCE_PAUSE = 0.3
_SENTENCE_END = re.compile(r"[.!?]['\")\]]*$")


# --------------------------------------------------------------------------
# Alignment


@dataclass(frozen=True)
class Word:
    text: str
    t_in: float
    t_out: float
    phone_start: int
    phone_end: int

    @property
    def phone_range(self) -> range:
        return range(self.phone_start, self.phone_end)

    @property
    def is_silence(self) -> bool:
        return self.text.lower() == SILENCE


@dataclass(frozen=True)
class AlignedTranscript:
    words: tuple[Word, ...]
    phones: PhoneSequence
    sentences: tuple[tuple[int, int], ...]  # half-open word index ranges

    def __post_init__(self) -> None:
        nxt = 0
        for w in self.words:
            if w.phone_start != nxt or w.phone_end <= w.phone_start:
                raise ParseError(f"word {w.text!r} has an inconsistent phone range")
            nxt = w.phone_end
        if nxt != len(self.phones):
            raise ParseError("word phone ranges do not cover the phone sequence")
        nxt = 0
        for lo, hi in self.sentences:
            if lo != nxt or hi <= lo:
                raise ParseError("sentences must partition the word list in order")
            nxt = hi
        if nxt != len(self.words):
            raise ParseError("sentences do not cover every word")

    def word_phones(self, index: int) -> PhoneSequence:
        w = self.words[index]
        return self.phones[w.phone_start : w.phone_end]

    def sentence_of_word(self, index: int) -> int:
        for s, (lo, hi) in enumerate(self.sentences):
            if lo <= index < hi:
                return s
        raise IndexError(index)

    def sentence_phone_range(self, s: int) -> range:
        lo, hi = self.sentences[s]
        return range(self.words[lo].phone_start, self.words[hi - 1].phone_end)

    def sentence_time_range(self, s: int) -> tuple[float, float]:
        lo, hi = self.sentences[s]
        return self.words[lo].t_in, self.words[hi - 1].t_out

    def word_of_phone(self, index: int) -> int:
        lo, hi = 0, len(self.words)
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if self.words[mid].phone_start <= index:
                lo = mid
            else:
                hi = mid
        return lo

    @property
    def duration(self) -> float:
        return self.phones[-1].t_out if len(self.phones) else 0.0


def _load_json(source: Any) -> Any:
    if isinstance(source, (dict, list)):
        return source
    if isinstance(source, Path) or (isinstance(source, str) and not source.lstrip().startswith(("{", "["))):
        try:
            text = Path(source).read_text()
        except OSError as exc:
            raise ParseError(f"cannot read {source}: {exc}") from exc
    else:
        text = source
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from exc


def _num(value: Any, what: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ParseError(f"{what} must be a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        raise ParseError(f"{what} must be finite")
    return value


def infer_sentences(words: Sequence[Word], phones: PhoneSequence) -> list[tuple[int, int]]:
    """Sentence ranges from trailing punctuation, else from long silences."""
    ends: list[int] = []
    if any(_SENTENCE_END.search(w.text) for w in words):
        ends = [i + 1 for i, w in enumerate(words) if _SENTENCE_END.search(w.text)]
    else:
        for i, w in enumerate(words):
            if all(phones[j].label == SILENCE for j in w.phone_range) and w.t_out - w.t_in > SENTENCE_PAUSE:
                ends.append(i + 1)
    if not ends or ends[-1] != len(words):
        ends.append(len(words))
    out = []
    lo = 0
    for hi in ends:
        if hi > lo:
            out.append((lo, hi))
            lo = hi
    return out


def parse_alignment(source: Any) -> AlignedTranscript:
    """Parse the JSON alignment document (path, JSON text, or decoded dict)."""
    doc = _load_json(source)
    if not isinstance(doc, dict) or not isinstance(doc.get("words"), list):
        raise ParseError("alignment document needs a 'words' list")
    phones: list[Phone] = []
    words: list[Word] = []
    for wi, w in enumerate(doc["words"]):
        if not isinstance(w, dict) or "text" not in w or not isinstance(w.get("phones"), list):
            raise ParseError(f"word {wi} is malformed")
        if not w["phones"]:
            raise ParseError(f"word {wi} ({w['text']!r}) has no phones")
        start = len(phones)
        for pi, p in enumerate(w["phones"]):
            try:
                lbl = p["lbl"]
                t_in = _num(p["t_in"], f"word {wi} phone {pi} t_in")
                t_out = _num(p["t_out"], f"word {wi} phone {pi} t_out")
            except (KeyError, TypeError) as exc:
                raise ParseError(f"word {wi} phone {pi} is malformed") from exc
            phone = Phone(canonical_label(str(lbl)), t_in, t_out)
            if phones:
                prev = phones[-1]
                if phone.t_in < prev.t_in or prev.t_out > phone.t_in:
                    raise OverlapError(
                        len(phones),
                        f"phone {len(phones)} ({phone.label} [{t_in}, {t_out}]) overlaps "
                        f"phone {len(phones) - 1} ({prev.label} [{prev.t_in}, {prev.t_out}])",
                    )
            phones.append(phone)
        t_in = _num(w["t_in"], f"word {wi} t_in") if "t_in" in w else phones[start].t_in
        t_out = _num(w["t_out"], f"word {wi} t_out") if "t_out" in w else phones[-1].t_out
        words.append(Word(str(w["text"]), t_in, t_out, start, len(phones)))
    seq = PhoneSequence(phones)

    raw = doc.get("sentences")
    if raw is None:
        sentences = infer_sentences(words, seq)
    else:
        sentences = []
        if not isinstance(raw, list):
            raise ParseError("'sentences' must be a list of word index lists")
        for si, idxs in enumerate(raw):
            if not isinstance(idxs, list) or not idxs or any(
                isinstance(i, bool) or not isinstance(i, int) for i in idxs
            ):
                raise ParseError(f"sentence {si} must be a non-empty list of word indices")
            if idxs != list(range(idxs[0], idxs[0] + len(idxs))):
                raise ParseError(f"sentence {si} word indices are not contiguous")
            sentences.append((idxs[0], idxs[-1] + 1))
    if not words:
        raise ParseError("alignment has no words")
    return AlignedTranscript(tuple(words), seq, tuple(sentences))


def alignment_to_dict(tr: AlignedTranscript) -> dict:
    return {
        "words": [
            {
                "text": w.text,
                "t_in": w.t_in,
                "t_out": w.t_out,
                "phones": [
                    {"lbl": p.label, "t_in": p.t_in, "t_out": p.t_out}
                    for p in tr.phones[w.phone_start : w.phone_end]
                ],
            }
            for w in tr.words
        ],
        "sentences": [list(range(lo, hi)) for lo, hi in tr.sentences],
    }


def write_alignment(tr: AlignedTranscript, path: str | Path) -> None:
    Path(path).write_text(json.dumps(alignment_to_dict(tr), indent=1) + "\n")


# --------------------------------------------------------------------------
# Pronunciation dictionary


@dataclass(frozen=True)
class PronunciationDict:
    entries: Mapping[str, tuple[tuple[str, ...], ...]]

    def __contains__(self, word: str) -> bool:
        return word.upper() in self.entries

    def variants(self, word: str) -> tuple[tuple[str, ...], ...]:
        try:
            return self.entries[word.upper()]
        except KeyError:
            raise OutOfVocabulary(word) from None

    def lookup(self, word: str, variant: int = 1) -> tuple[str, ...]:
        """Pronunciation ``variant`` (1-based, CMU numbering) of ``word``."""
        vs = self.variants(word)
        if not 1 <= variant <= len(vs):
            raise OutOfVocabulary(f"{word}({variant})")
        return vs[variant - 1]


_VARIANT = re.compile(r"^(.*)\((\d+)\)$")


def parse_dictionary(source: str | Path | Iterable[str]) -> PronunciationDict:
    """Parse CMU-style lines ``WORD  CODE CODE ...``; ``WORD(2)`` adds a variant."""
    if isinstance(source, Path) or (isinstance(source, str) and "\n" not in source and Path(source).exists()):
        lines = Path(source).read_text().splitlines()
    elif isinstance(source, str):
        lines = source.splitlines()
    else:
        lines = list(source)
    entries: dict[str, list[tuple[str, ...]]] = {}
    for lineno, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line or line.startswith(";;;"):
            continue
        parts = line.split()
        if len(parts) < 2:
            raise ParseError(f"dictionary line {lineno}: no pronunciation for {parts[0]!r}")
        word = parts[0].upper()
        m = _VARIANT.match(word)
        if m:
            word = m.group(1)
        try:
            codes = tuple(canonical_label(c) for c in parts[1:])
        except UnknownPhoneme as exc:
            raise UnknownPhoneme(exc.label) from None
        entries.setdefault(word, []).append(codes)
    return PronunciationDict({k: tuple(v) for k, v in entries.items()})


# --------------------------------------------------------------------------
# Parameter tracks


@dataclass(frozen=True, eq=False)
class ParameterTrack:
    """Per-frame face-model parameters; frame i covers [i/fps, (i+1)/fps)."""

    fps: float
    frames: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        frames = np.asarray(self.frames, dtype=np.float64)
        if frames.ndim != 2 or frames.shape[1] != PARAM_DIM:
            raise DimensionError(f"frames must be (n, {PARAM_DIM}), got {frames.shape}")
        if not (self.fps > 0 and math.isfinite(self.fps)):
            raise ParseError(f"fps must be positive, got {self.fps}")
        frames.setflags(write=False)
        object.__setattr__(self, "frames", frames)
        object.__setattr__(self, "fps", float(self.fps))

    def __len__(self) -> int:
        return self.frames.shape[0]

    @property
    def duration(self) -> float:
        return len(self) / self.fps

    def block(self, name: str) -> np.ndarray:
        return self.frames[:, BLOCKS[name]]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ParameterTrack):
            return NotImplemented
        return self.fps == other.fps and np.array_equal(self.frames, other.frames)

    __hash__ = None  # type: ignore[assignment]


def track_to_bytes(track: ParameterTrack) -> bytes:
    header = _TRACK_HEADER.pack(TRACK_MAGIC, TRACK_VERSION, track.fps, len(track))
    return header + track.frames.astype("<f8").tobytes()


def write_track(track: ParameterTrack, path: str | Path) -> None:
    Path(path).write_bytes(track_to_bytes(track))


def _track_from_json(doc: Any) -> ParameterTrack:
    if not isinstance(doc, dict) or "fps" not in doc or "frames" not in doc:
        raise ParseError("track JSON needs 'fps' and 'frames'")
    fps = _num(doc["fps"], "fps")
    rows = doc["frames"]
    if not isinstance(rows, list):
        raise ParseError("'frames' must be a list")
    count = doc.get("frame_count", len(rows))
    if count != len(rows):
        raise ParseError(f"header declares {count} frames, body has {len(rows)}")
    for i, row in enumerate(rows):
        if not isinstance(row, list):
            raise ParseError(f"frame {i} is not a list")
        if len(row) != PARAM_DIM:
            raise DimensionError(f"frame {i} has {len(row)} values, expected {PARAM_DIM}")
    frames = np.array(rows, dtype=np.float64).reshape(len(rows), PARAM_DIM)
    return ParameterTrack(fps, frames)


def parse_parameter_track(source: str | Path | bytes | dict) -> ParameterTrack:
    """Read a VFTK binary track, or its JSON equivalent."""
    if isinstance(source, dict):
        return _track_from_json(source)
    if isinstance(source, (str, Path)):
        try:
            data = Path(source).read_bytes()
        except OSError as exc:
            raise ParseError(f"cannot read {source}: {exc}") from exc
    else:
        data = bytes(source)
    if not data.startswith(TRACK_MAGIC):
        try:
            doc = json.loads(data)
        except (json.JSONDecodeError, UnicodeDecodeError) as exc:
            raise ParseError("not a VFTK track or track JSON") from exc
        return _track_from_json(doc)
    if len(data) < _TRACK_HEADER.size:
        raise ParseError("truncated VFTK header")
    _, version, fps, count = _TRACK_HEADER.unpack_from(data)
    if version != TRACK_VERSION:
        raise ParseError(f"unsupported VFTK version {version}")
    body = data[_TRACK_HEADER.size :]
    if len(body) % 8:
        raise ParseError("VFTK body is not a whole number of f64 values")
    values = len(body) // 8
    if values != count * PARAM_DIM:
        if count and values % count == 0:
            raise DimensionError(f"VFTK rows have {values // count} values, expected {PARAM_DIM}")
        raise ParseError(f"VFTK header declares {count} frames but body holds {values} values")
    frames = np.frombuffer(body, dtype="<f8").reshape(count, PARAM_DIM).astype(np.float64)
    return ParameterTrack(fps, frames)


# --------------------------------------------------------------------------
# Edit specifications


class EditKind(enum.Enum):
    INSERT = "insert"
    DELETE = "delete"
    REARRANGE = "rearrange"


@dataclass(frozen=True)
class EditWord:
    text: str
    orig_index: int | None = None
    phone_timings: tuple[float, ...] | None = None
    variant: int = 1


@dataclass(frozen=True)
class EditSpec:
    """Words of the edited region, each optionally mapped to an original word.

    ``span`` is the half-open range of original words the edit replaces.  When
    omitted it runs from ``min(anchor, mapped)`` to ``max(mapped) + 1``; with no
    mapped words the edit is a pure insertion before word ``anchor``.
    """

    kind: EditKind
    words: tuple[EditWord, ...]
    anchor: int
    span: tuple[int, int] | None = None

    def __post_init__(self) -> None:
        if self.kind is not EditKind.INSERT:
            for w in self.words:
                if w.orig_index is None:
                    raise ParseError(f"{self.kind.value} edit word {w.text!r} must map to an original word")

    @property
    def mapped(self) -> list[int]:
        return [w.orig_index for w in self.words if w.orig_index is not None]

    def replaced_span(self) -> tuple[int, int]:
        if self.span is not None:
            return self.span
        mapped = self.mapped
        if not mapped:
            return (self.anchor, self.anchor)
        return (min(min(mapped), self.anchor), max(mapped) + 1)


def parse_edit(source: Any) -> EditSpec:
    doc = _load_json(source)
    if not isinstance(doc, dict):
        raise ParseError("edit spec must be a JSON object")
    try:
        kind = EditKind(str(doc["kind"]).lower())
    except (KeyError, ValueError) as exc:
        raise ParseError(f"edit spec has an invalid 'kind': {doc.get('kind')!r}") from exc
    anchor = doc.get("anchor")
    if isinstance(anchor, bool) or not isinstance(anchor, int) or anchor < 0:
        raise ParseError("edit spec 'anchor' must be a non-negative integer")
    raw_words = doc.get("words")
    if not isinstance(raw_words, list):
        raise ParseError("edit spec needs a 'words' list")
    words = []
    for i, w in enumerate(raw_words):
        if not isinstance(w, dict) or not isinstance(w.get("text"), str):
            raise ParseError(f"edit word {i} is malformed")
        orig = w.get("orig_index")
        if orig is not None and (isinstance(orig, bool) or not isinstance(orig, int) or orig < 0):
            raise ParseError(f"edit word {i} has an invalid orig_index")
        timings = w.get("phone_timings")
        if timings is not None:
            if not isinstance(timings, list):
                raise ParseError(f"edit word {i} phone_timings must be a list")
            timings = tuple(_num(t, f"edit word {i} timing") for t in timings)
            if any(t <= 0 for t in timings):
                raise ParseError(f"edit word {i} has non-positive phone timings")
        variant = w.get("variant", 1)
        if isinstance(variant, bool) or not isinstance(variant, int) or variant < 1:
            raise ParseError(f"edit word {i} has an invalid variant")
        words.append(EditWord(w["text"], orig, timings, variant))
    span = doc.get("span")
    if span is not None:
        if (
            not isinstance(span, list)
            or len(span) != 2
            or not all(isinstance(s, int) and not isinstance(s, bool) for s in span)
            or not 0 <= span[0] <= span[1]
        ):
            raise ParseError("edit spec 'span' must be [lo, hi] word indices")
        span = (span[0], span[1])
    return EditSpec(kind, tuple(words), anchor, span)


def edit_to_dict(edit: EditSpec) -> dict:
    out: dict[str, Any] = {
        "kind": edit.kind.value,
        "anchor": edit.anchor,
        "words": [
            {
                "text": w.text,
                "orig_index": w.orig_index,
                "phone_timings": list(w.phone_timings) if w.phone_timings is not None else None,
                **({"variant": w.variant} if w.variant != 1 else {}),
            }
            for w in edit.words
        ],
    }
    if edit.span is not None:
        out["span"] = list(edit.span)
    return out


def check_edit(edit: EditSpec, transcript: AlignedTranscript) -> None:
    """Check the edit against the transcript it refers to."""
    n = len(transcript.words)
    lo, hi = edit.replaced_span()
    if edit.anchor > n or hi > n:
        raise ParseError(f"edit refers past the last word ({n} words)")
    for w in edit.words:
        if w.orig_index is None:
            continue
        if w.orig_index >= n:
            raise ParseError(f"edit word {w.text!r} maps to missing word {w.orig_index}")
        orig = transcript.words[w.orig_index].text
        if _norm_word(orig) != _norm_word(w.text):
            raise ParseError(f"edit word {w.text!r} maps to original word {orig!r}")


def _norm_word(text: str) -> str:
    return re.sub(r"[^\w']", "", text).upper()


# --------------------------------------------------------------------------
# Query construction


def build_query(
    edit: EditSpec,
    pron: PronunciationDict | None,
    transcript: AlignedTranscript,
    defaults: Mapping[int, float] | None = None,
) -> PhoneSequence:
    """Timed phone sequence for the edited words, laid out from time 0.

    Mapped words keep their original phones and durations.  New words are
    looked up in ``pron``; their durations come from ``phone_timings`` or else
    from ``defaults`` (median duration per viseme, measured on the corpus when
    not supplied).
    """
    labels: list[str] = []
    durations: list[float] = []
    for w in edit.words:
        labels_w, durs_w = word_phone_plan(w, pron, transcript, defaults)
        if defaults is None and any(d is None for d in durs_w):
            from .stats import median_durations

            defaults = median_durations(transcript.phones)
            labels_w, durs_w = word_phone_plan(w, pron, transcript, defaults)
        labels.extend(labels_w)
        durations.extend(durs_w)  # type: ignore[arg-type]
    if not labels:
        return PhoneSequence()
    return PhoneSequence.contiguous(labels, durations)


def word_phone_plan(
    w: EditWord,
    pron: PronunciationDict | None,
    transcript: AlignedTranscript,
    defaults: Mapping[int, float] | None,
) -> tuple[list[str], list[float | None]]:
    """Labels and durations for one edit word; ``None`` where defaults are needed."""
    if w.orig_index is not None:
        phones = transcript.word_phones(w.orig_index)
        return phones.labels, list(phones.durations)
    if pron is None:
        raise OutOfVocabulary(w.text)
    codes = list(pron.lookup(w.text, w.variant))
    if w.phone_timings is not None:
        if len(w.phone_timings) != len(codes):
            raise MissingTiming(
                f"word {w.text!r} has {len(codes)} phones but {len(w.phone_timings)} timings"
            )
        return codes, list(w.phone_timings)
    if defaults is None:
        return codes, [None] * len(codes)
    durs: list[float | None] = []
    for c in codes:
        v = viseme_of(c)
        if v not in defaults:
            raise MissingTiming(f"no default duration for viseme v{v:02d} ({c}) in word {w.text!r}")
        durs.append(defaults[v])
    return codes, durs
