"""Edit decision list output: JSON plan, blended track and a text report."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Any

from .core import PhoneSequence
from .ingest import AlignedTranscript, ParameterTrack, edit_to_dict, track_to_bytes, write_track
from .plan import EditPlan
from .search import SubsequenceMatch

EDL_VERSION = 1


def track_digest(track: ParameterTrack) -> str:
    return hashlib.sha256(track_to_bytes(track)).hexdigest()


def _phones(seq: PhoneSequence) -> list[dict]:
    return [{"lbl": p.label, "t_in": p.t_in, "t_out": p.t_out} for p in seq]


def _match(m: SubsequenceMatch) -> dict:
    return {
        "query_range": list(m.query_range),
        "corpus_range": list(m.corpus_range),
        "cost": m.cost,
        "alignment": [[q, c] for q, c in m.alignment],
    }


def plan_to_edl(plan: EditPlan, source: ParameterTrack) -> dict[str, Any]:
    bg = plan.background
    frames = []
    for j, src in enumerate(plan.track.provenance):
        if src.xfade is not None:
            a, b, w = src.xfade
            param_source: Any = "xfade"
            weights: Any = {"from": "bg" if a is None else a, "to": "bg" if b is None else b, "w": w}
        elif src.snippet is None:
            param_source = "bg"
            weights = None
        else:
            param_source = {"snippet": src.snippet, "t_src": src.t_src}
            weights = None
        frames.append(
            {
                "frame": j,
                "bg_src_frame": int(bg.mapping[j]),
                "param_source": param_source,
                "t_src": src.t_src,
                "weights": weights,
                "illumination": "interpolated" if src.illumination_ramp else "source",
            }
        )
    p = plan.params
    return {
        "format": "talkedit-edl",
        "version": EDL_VERSION,
        "header": {
            "fps": plan.track.fps,
            "source_fps": source.fps,
            "source_track_sha256": track_digest(source),
            "frame_count": len(plan.track),
            "edit": edit_to_dict(plan.edit),
            "params": {"c_insert": p.c_insert, "c_delete": p.c_delete, "chi": p.chi, "phi": p.phi},
            "window": plan.window,
            "background": {
                "region": list(bg.region),
                "retime_factor": bg.retime_factor,
                "out_frames": bg.out_frames,
            },
            "edited_frames": list(plan.edited_frames),
            "excluded_phones": list(plan.excluded_phones),
            "query": _phones(plan.query),
            "snippets": [_match(m) for m in plan.snippets],
            "search": [
                {"total_cost": r.total_cost, "split": [_match(m) for m in r.split]} for r in plan.searches
            ],
            "transitions": [{"time": t, "half_width": h} for t, h in plan.transitions],
        },
        "frames": frames,
    }


def _source_words(tr: AlignedTranscript, lo: int, hi: int) -> str:
    if hi <= lo:
        return "(gap)"
    w0, w1 = tr.word_of_phone(lo), tr.word_of_phone(hi - 1)
    return " ".join(f"'{tr.words[i].text}'" for i in range(w0, w1 + 1))


def format_report(plan: EditPlan, transcript: AlignedTranscript) -> str:
    phones = transcript.phones
    q = plan.query
    lines = [
        f"edit: {plan.edit.kind.value} ({' '.join(w.text for w in plan.edit.words) or '-'})",
        f"replaced words: [{plan.edit.replaced_span()[0]}, {plan.edit.replaced_span()[1]})",
        f"query: {' '.join(q.labels) or '-'} ({q.total_duration if len(q) else 0.0:.3f} s)",
        "",
        "search:",
    ]
    if not plan.searches:
        lines.append("  (none: edit reuses original words only)")
    for r in plan.searches:
        lines.append(f"  total cost {r.total_cost:.6f} over {len(r.split)} segment(s)")
        for m in r.split:
            qs, qe = m.query_range
            cs, ce = m.corpus_range
            t0 = phones[cs].t_in if ce > cs else float("nan")
            t1 = phones[ce - 1].t_out if ce > cs else float("nan")
            lines.append(
                f"  {' '.join(q.labels[qs:qe]):<16} <- {' '.join(phones.labels[cs:ce]) or '-':<16} "
                f"match {m.cost:.6f} + len {plan.params.phi / (qe - qs):.6f}  "
                f"from {_source_words(transcript, cs, ce)} [{t0:.3f}-{t1:.3f} s]"
            )
    bg = plan.background
    lines += [
        "",
        "snippets:",
    ]
    for k, m in enumerate(plan.snippets):
        cs, ce = m.corpus_range
        lines.append(
            f"  {k}: query {m.query_range[0]}-{m.query_range[1]} <- phones {cs}-{ce} {_source_words(transcript, cs, ce)}"
        )
    lines += [
        "",
        f"background: frames [{bg.region[0]}, {bg.region[1]}) retimed x{bg.retime_factor:.6f} to {bg.out_frames} frames",
        f"edited frames: [{plan.edited_frames[0]}, {plan.edited_frames[1]}) at {plan.track.fps:g} fps",
        f"transitions: {', '.join(f'{t:.3f}s+-{h * 1000:.1f}ms' for t, h in plan.transitions) or '-'}",
    ]
    return "\n".join(lines) + "\n"


def write_plan(plan: EditPlan, source: ParameterTrack, transcript: AlignedTranscript, out_dir: str | Path) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    edl_path = out / "plan.edl.json"
    track_path = out / "blended.vftk"
    report_path = out / "report.txt"
    edl_path.write_text(json.dumps(plan_to_edl(plan, source), indent=1) + "\n")
    write_track(plan.track.as_track(), track_path)
    report_path.write_text(format_report(plan, transcript))
    return [edl_path, track_path, report_path]
