"""Turn search results into a retimed, blended parameter track.

The output covers a background region (by default the sentence around the
edit).  It is laid out as unedited footage before the edit, the snippets that
realise the edited words, and unedited footage after it.  Per parameter
block:

* geometry and reflectance are held at the first background frame,
* pose follows the nearest-neighbour retimed background,
* illumination ramps linearly across the edited span,
* expression comes from the snippets, cross-faded at every seam.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import DEFAULT_PARAMS, CostParams, PhoneSequence
from .errors import EmptyRegion, OutOfTrackRange, PlanError, WindowTooLarge
from .ingest import (
    EXPRESSION,
    GEOMETRY,
    ILLUMINATION,
    POSE,
    REFLECTANCE,
    AlignedTranscript,
    EditSpec,
    ParameterTrack,
    PronunciationDict,
    build_query,
    check_edit,
)
from .search import MAX_QUERY, SearchResult, SubsequenceMatch, search

DEFAULT_WINDOW = 0.067
_SNAP = 1e-9


def round_half_away(x: float) -> int:
    """Round to nearest, halves away from zero (used for every frame count)."""
    return int(math.copysign(math.floor(abs(x) + 0.5), x))


# --------------------------------------------------------------------------
# Sampling


def sample_track(track: ParameterTrack, times: Sequence[float] | np.ndarray) -> np.ndarray:
    """Parameters at arbitrary times, linearly interpolated between frames.

    Frame i sits at time i / fps.  A time on a frame returns that frame
    verbatim; times in the last frame's interval hold the last frame.
    """
    times = np.asarray(times, dtype=np.float64)
    n = len(track)
    if times.size == 0:
        return np.empty((0, track.frames.shape[1]))
    if n == 0:
        raise OutOfTrackRange("track has no frames")
    if times.min() < -_SNAP or times.max() > track.duration + _SNAP:
        raise OutOfTrackRange(
            f"sample times [{times.min():.6f}, {times.max():.6f}] s fall outside the track (0, {track.duration:.6f}) s"
        )
    x = times * track.fps
    near = np.round(x)
    x = np.where(np.abs(x - near) < _SNAP * track.fps, near, x)
    i0 = np.clip(np.floor(x).astype(np.int64), 0, n - 1)
    w = np.clip(x - i0, 0.0, 1.0)
    w[i0 >= n - 1] = 0.0
    i1 = np.minimum(i0 + 1, n - 1)
    f = track.frames
    out = f[i0] * (1.0 - w)[:, None] + f[i1] * w[:, None]
    exact = w == 0.0
    out[exact] = f[i0[exact]]
    return out


def frame_counts(query: PhoneSequence, fps_out: float) -> list[int]:
    """Output frames per query phone.

    Counts come from rounding the phone boundaries, so the total is
    round(fps_out * query end) rather than a sum of rounded durations.
    """
    return [
        round_half_away(fps_out * q.t_out) - round_half_away(fps_out * q.t_in) for q in query
    ]


def snippet_sample_times(
    snippet: SubsequenceMatch,
    query: PhoneSequence,
    corpus: PhoneSequence,
    fps_out: float,
) -> np.ndarray:
    """Source times whose parameters realise ``snippet`` at ``fps_out``.

    Each query phone aligned to a corpus phone samples its frames uniformly
    across that corpus phone.  Runs of query phones aligned to gaps share
    the corpus gap at their insertion point, split in proportion to their
    query durations.  Deleted corpus phones are skipped.
    """
    counts = frame_counts(query, fps_out)
    pieces: list[np.ndarray] = []
    pairs = list(snippet.alignment)
    pos = snippet.corpus_range[0]  # corpus phones consumed so far
    i = 0
    while i < len(pairs):
        qi, ci = pairs[i]
        if qi is None:
            pos = ci + 1
            i += 1
            continue
        if ci is not None:
            p = corpus[ci]
            pieces.append(_uniform(p.t_in, p.t_out, counts[qi]))
            pos = ci + 1
            i += 1
            continue
        run = []
        while i < len(pairs) and pairs[i][1] is None and pairs[i][0] is not None:
            run.append(pairs[i][0])
            i += 1
        a, b = _gap_at(corpus, pos)
        total = sum(query[k].duration for k in run)
        acc = 0.0
        for k in run:
            lo = a + (b - a) * (acc / total)
            acc += query[k].duration
            hi = a + (b - a) * (acc / total)
            pieces.append(_uniform(lo, hi, counts[k]))
    return np.concatenate(pieces) if pieces else np.empty(0)


def _uniform(t0: float, t1: float, n: int) -> np.ndarray:
    return t0 + (t1 - t0) * (np.arange(n, dtype=np.float64) / n) if n > 0 else np.empty(0)


def _gap_at(corpus: PhoneSequence, pos: int) -> tuple[float, float]:
    """Time interval between corpus phones pos-1 and pos."""
    if len(corpus) == 0:
        return 0.0, 0.0
    a = corpus[pos - 1].t_out if pos > 0 else corpus[0].t_in
    b = corpus[pos].t_in if pos < len(corpus) else corpus[-1].t_out
    return a, max(a, b)


def retime_snippet(
    track: ParameterTrack,
    snippet: SubsequenceMatch,
    query: PhoneSequence,
    corpus: PhoneSequence,
    fps_out: float | None = None,
) -> np.ndarray:
    fps_out = track.fps if fps_out is None else fps_out
    return sample_track(track, snippet_sample_times(snippet, query, corpus, fps_out))


# --------------------------------------------------------------------------
# Background


@dataclass(frozen=True)
class BackgroundMap:
    out_frames: int
    mapping: np.ndarray = field(repr=False)
    region: tuple[int, int]
    retime_factor: float
    fps_out: float


def retime_background(
    track: ParameterTrack,
    region: tuple[int, int],
    new_duration: float,
    fps_out: float | None = None,
) -> BackgroundMap:
    """Nearest-neighbour time warp of source frames ``region`` to ``new_duration``.

    The last output frame is pinned to the region's last frame.
    """
    a, b = region
    if b <= a:
        raise EmptyRegion(f"background region [{a}, {b}) is empty")
    if a < 0 or b > len(track):
        raise EmptyRegion(f"background region [{a}, {b}) lies outside the track ({len(track)} frames)")
    if not new_duration > 0:
        raise ValueError("new_duration must be positive")
    fps_out = track.fps if fps_out is None else float(fps_out)
    factor = new_duration / ((b - a) / track.fps)
    out = round_half_away(new_duration * fps_out)
    step = track.fps / (fps_out * factor)
    mapping = np.array([a + round_half_away(j * step) for j in range(out)], dtype=np.int64)
    mapping = np.clip(mapping, a, b - 1)
    if out:
        mapping[-1] = b - 1
    mapping.setflags(write=False)
    return BackgroundMap(out, mapping, (a, b), factor, fps_out)


# --------------------------------------------------------------------------
# Blending


@dataclass(frozen=True)
class Segment:
    """Consecutive output frames drawn from one place in the source.

    ``snippet`` is None for unedited footage around the edit.
    """

    times: np.ndarray
    snippet: int | None = None

    def __len__(self) -> int:
        return len(self.times)


@dataclass(frozen=True)
class FrameSource:
    t_src: float
    snippet: int | None
    xfade: tuple[int | None, int | None, float] | None = None  # (from, to, weight of "to")
    illumination_ramp: bool = False

    @property
    def label(self) -> str:
        if self.xfade is not None:
            return "xfade"
        return "bg" if self.snippet is None else f"snippet:{self.snippet}"


@dataclass(frozen=True)
class BlendedTrack:
    fps: float
    frames: np.ndarray = field(repr=False)
    provenance: tuple[FrameSource, ...] = field(repr=False)

    def __len__(self) -> int:
        return self.frames.shape[0]

    def as_track(self) -> ParameterTrack:
        return ParameterTrack(self.fps, self.frames)


def seam_half_width(len_a: int, len_b: int, window: float, fps: float) -> float:
    """Cross-fade half-width in frames, at most half of either neighbour."""
    if len_a == 0 and len_b == 0:
        raise WindowTooLarge("both sides of the transition are empty")
    return min(window * fps / 2.0, len_a / 2.0, len_b / 2.0)


def crossfade_weight(k: int, seam: int, half: float) -> float:
    """Weight of the incoming side at output frame k for a seam at frame ``seam``."""
    if half <= 0:
        return 0.0 if k < seam else 1.0
    return min(1.0, max(0.0, (k - seam + half) / (2.0 * half)))


def blend(
    segments: Sequence[Segment],
    background: BackgroundMap,
    track: ParameterTrack,
    window: float = DEFAULT_WINDOW,
    edited: tuple[int, int] | None = None,
) -> BlendedTrack:
    """Assemble and blend the output track.

    ``segments`` are concatenated in output order.  ``edited`` is the
    half-open output frame range whose illumination is replaced by the
    boundary ramp; by default the frames of all snippet segments.
    ``window`` is the full cross-fade length in seconds; 0 disables
    cross-fading.
    """
    if window < 0:
        raise ValueError("window must be non-negative")
    fps = background.fps_out
    segments = [s for s in segments if len(s)]
    times = np.concatenate([s.times for s in segments]) if segments else np.empty(0)
    n = len(times)
    if n != background.out_frames:
        raise PlanError(f"segments give {n} frames but the background has {background.out_frames}")
    raw = sample_track(track, times)
    out = raw.copy()

    out[:, GEOMETRY] = track.frames[background.region[0], GEOMETRY]
    out[:, REFLECTANCE] = track.frames[background.region[0], REFLECTANCE]
    out[:, POSE] = track.frames[background.mapping, POSE]

    owner: list[int | None] = []
    starts = []
    for s in segments:
        starts.append(len(owner))
        owner.extend([s.snippet] * len(s))

    if edited is None:
        idx = [i for i, o in enumerate(owner) if o is not None]
        edited = (idx[0], idx[-1] + 1) if idx else (0, 0)
    e0, e1 = edited
    if e1 > e0:
        before = raw[e0 - 1, ILLUMINATION] if e0 > 0 else track.frames[max(background.region[0] - 1, 0), ILLUMINATION]
        after = raw[e1, ILLUMINATION] if e1 < n else track.frames[min(background.region[1], len(track) - 1), ILLUMINATION]
        count = e1 - e0
        for k in range(count):
            out[e0 + k, ILLUMINATION] = before + (after - before) * ((k + 1) / (count + 1))

    xfade: dict[int, tuple[int | None, int | None, float]] = {}
    if window > 0:
        for i in range(1, len(segments)):
            seam = starts[i]
            a, b = segments[i - 1], segments[i]
            half = seam_half_width(len(a), len(b), window, fps)
            jump = raw[seam, EXPRESSION] - raw[seam - 1, EXPRESSION]
            lo = max(int(math.floor(seam - half)), 0)
            hi = min(int(math.ceil(seam + half)), n - 1)
            for k in range(lo, hi + 1):
                w = crossfade_weight(k, seam, half)
                if k < seam:
                    if w > 0:
                        out[k, EXPRESSION] += w * jump
                        xfade[k] = (a.snippet, b.snippet, w)
                elif w < 1:
                    out[k, EXPRESSION] -= (1.0 - w) * jump
                    xfade[k] = (a.snippet, b.snippet, w)

    prov = tuple(
        FrameSource(float(times[k]), owner[k], xfade.get(k), e0 <= k < e1) for k in range(n)
    )
    out.setflags(write=False)
    return BlendedTrack(fps, out, prov)


# --------------------------------------------------------------------------
# Edit planning


@dataclass(frozen=True)
class EditPlan:
    edit: EditSpec
    query: PhoneSequence
    searches: tuple[SearchResult, ...]
    snippets: tuple[SubsequenceMatch, ...]
    background: BackgroundMap
    track: BlendedTrack
    transitions: tuple[tuple[float, float], ...]
    edited_frames: tuple[int, int]
    params: CostParams = DEFAULT_PARAMS
    window: float = DEFAULT_WINDOW
    excluded_phones: tuple[int, int] = (0, 0)

    @property
    def duration(self) -> float:
        return self.background.out_frames / self.track.fps


def _identity_match(q_lo: int, phone_lo: int, n: int) -> SubsequenceMatch:
    return SubsequenceMatch(
        query_range=(q_lo, q_lo + n),
        corpus_range=(phone_lo, phone_lo + n),
        alignment=tuple((q_lo + k, phone_lo + k) for k in range(n)),
        cost=0.0,
    )


def _shift(m: SubsequenceMatch, dq: int) -> SubsequenceMatch:
    return SubsequenceMatch(
        query_range=(m.query_range[0] + dq, m.query_range[1] + dq),
        corpus_range=m.corpus_range,
        alignment=tuple((None if q is None else q + dq, c) for q, c in m.alignment),
        cost=m.cost,
    )


def _word_runs(edit: EditSpec, transcript: AlignedTranscript) -> list[tuple[bool, list[int], int]]:
    """Group edit words into runs: (mapped, word positions in W, phone count)."""
    runs: list[tuple[bool, list[int], int]] = []
    for i, w in enumerate(edit.words):
        mapped = w.orig_index is not None
        if runs:
            prev_mapped, idx, _ = runs[-1]
            prev = edit.words[idx[-1]]
            if mapped == prev_mapped and (
                not mapped or w.orig_index == prev.orig_index + 1  # type: ignore[operator]
            ):
                idx.append(i)
                continue
        runs.append((mapped, [i], 0))
    return runs


def edit_time_span(edit: EditSpec, transcript: AlignedTranscript) -> tuple[float, float]:
    """Source time range replaced by the edit."""
    lo, hi = edit.replaced_span()
    words = transcript.words
    if hi > lo:
        return words[lo].t_in, words[hi - 1].t_out
    t = words[lo].t_in if lo < len(words) else words[-1].t_out
    return t, t


def default_region(edit: EditSpec, transcript: AlignedTranscript, track: ParameterTrack) -> tuple[int, int]:
    """Frames of the sentence(s) touched by the edit."""
    lo, hi = edit.replaced_span()
    last = len(transcript.words) - 1
    s0 = transcript.sentence_of_word(min(lo, last))
    s1 = transcript.sentence_of_word(min(max(hi - 1, lo), last))
    t0 = transcript.sentence_time_range(s0)[0]
    t1 = transcript.sentence_time_range(s1)[1]
    a = max(int(math.floor(t0 * track.fps + _SNAP)), 0)
    b = min(int(math.ceil(t1 * track.fps - _SNAP)), len(track))
    return a, b


def plan_edit(
    edit: EditSpec,
    transcript: AlignedTranscript,
    track: ParameterTrack,
    pron: PronunciationDict | None = None,
    params: CostParams = DEFAULT_PARAMS,
    *,
    window: float = DEFAULT_WINDOW,
    fps_out: float | None = None,
    region: tuple[int, int] | None = None,
    defaults: dict[int, float] | None = None,
    max_query: int = MAX_QUERY,
    threads: int = 1,
) -> EditPlan:
    """Plan one edit end to end.

    New words are retrieved by viseme search over the transcript, excluding
    the phones of the background region.  Words that map to the original
    transcript are reused in place, one snippet per run of consecutive
    original words.
    """
    check_edit(edit, transcript)
    fps = track.fps if fps_out is None else float(fps_out)
    if not fps > 0:
        raise ValueError("fps_out must be positive")
    if region is None:
        region = default_region(edit, transcript, track)
    a, b = region
    if b <= a:
        raise EmptyRegion(f"background region [{a}, {b}) is empty")
    if a < 0 or b > len(track):
        raise EmptyRegion(f"background region [{a}, {b}) lies outside the track ({len(track)} frames)")
    ts, te = edit_time_span(edit, transcript)
    t_a, t_b = a / track.fps, b / track.fps
    if ts < t_a - _SNAP or te > t_b + _SNAP:
        raise PlanError(f"background region [{a}, {b}) does not contain the edit ({ts:.3f}-{te:.3f} s)")

    query = build_query(edit, pron, transcript, defaults)
    phones = transcript.phones

    # corpus phones inside the background region may not be retrieved
    ex_lo = next((i for i, p in enumerate(phones) if p.t_out > t_a), len(phones))
    ex_hi = next((i for i in range(len(phones) - 1, -1, -1) if phones[i].t_in < t_b), -1) + 1
    ex_hi = max(ex_hi, ex_lo)
    exclude = [range(ex_lo, ex_hi)]

    snippets: list[SubsequenceMatch] = []
    searches: list[SearchResult] = []
    q_pos = 0
    for mapped, idx, _ in _word_runs(edit, transcript):
        if mapped:
            first = transcript.words[edit.words[idx[0]].orig_index]  # type: ignore[index]
            last = transcript.words[edit.words[idx[-1]].orig_index]  # type: ignore[index]
            n = last.phone_end - first.phone_start
            snippets.append(_identity_match(q_pos, first.phone_start, n))
            q_pos += n
        else:
            n = 0
            for i in idx:
                w = edit.words[i]
                n += len(pron.lookup(w.text, w.variant)) if pron is not None else 0
            sub = query[q_pos : q_pos + n]
            result = search(sub, phones, params, exclude=exclude, max_query=max_query, threads=threads)
            searches.append(result)
            snippets.extend(_shift(m, q_pos) for m in result.split)
            q_pos += n
    if q_pos != len(query):
        raise PlanError("query phones and snippets disagree")

    n_pre = round_half_away(fps * (ts - t_a))
    n_edit = sum(frame_counts(query, fps)) if len(query) else 0
    total = round_half_away(fps * ((ts - t_a) + (query[-1].t_out if len(query) else 0.0) + (t_b - te)))
    n_post = max(total - n_pre - n_edit, 0)
    total = n_pre + n_edit + n_post
    if total == 0:
        raise PlanError("edit leaves no output frames")

    segs: list[Segment] = [Segment(t_a + np.arange(n_pre) / fps)]
    for k, m in enumerate(snippets):
        segs.append(Segment(snippet_sample_times(m, query, phones, fps), snippet=k))
    segs.append(Segment(t_b - (n_post - np.arange(n_post)) / fps))

    background = retime_background(track, (a, b), total / fps, fps)
    if background.out_frames != total:
        raise PlanError("background frame count disagrees with the planned timeline")
    edited = (n_pre, n_pre + n_edit)
    blended = blend(segs, background, track, window, edited=edited)

    transitions = []
    nonempty = [s for s in segs if len(s)]
    pos = 0
    for i, s in enumerate(nonempty):
        if i:
            half = seam_half_width(len(nonempty[i - 1]), len(s), window, fps) / fps if window > 0 else 0.0
            transitions.append((pos / fps, half))
        pos += len(s)
    return EditPlan(
        edit=edit,
        query=query,
        searches=tuple(searches),
        snippets=tuple(snippets),
        background=background,
        track=blended,
        transitions=tuple(transitions),
        edited_frames=edited,
        params=params,
        window=window,
        excluded_phones=(ex_lo, ex_hi),
    )
