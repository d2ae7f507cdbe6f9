"""Command-line front end: ``talkedit plan | stats | validate | synth``.

Exit codes: 0 success, 2 bad input, 3 search failure, 4 planning failure.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence, TypeVar

from .core import DEFAULT_PARAMS, CostParams
from .edl import write_plan
from .errors import InputError, PlanError, SearchError, TalkEditError
from .ingest import (
    AlignedTranscript,
    EditSpec,
    EditWord,
    ParameterTrack,
    check_edit,
    parse_alignment,
    parse_dictionary,
    parse_edit,
    parse_parameter_track,
    write_alignment,
    write_track,
)
from .plan import DEFAULT_WINDOW, plan_edit
from .search import dp_table_csv
from .stats import (
    duration_stats,
    export_curves,
    match_probability_curve,
    sentence_sequences,
)

log = logging.getLogger("talkedit")

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_SEARCH = 3
EXIT_PLAN = 4

T = TypeVar("T")


@dataclass
class RunConfig:
    command: str
    alignment: list[Path] = field(default_factory=list)
    dictionary: Path | None = None
    track: Path | None = None
    edit: Path | None = None
    out: Path | None = None
    params: CostParams = field(default_factory=CostParams)
    window: float = DEFAULT_WINDOW
    fps_out: float | None = None
    bg_region: tuple[int, int] | None = None
    seed: int = 0
    threads: int = 1
    exhaustive: bool = False
    trials: int = 100_000
    k_max: int = 10
    variants: dict[str, int] = field(default_factory=dict)
    sentences: int = 20
    fps: float = 60.0
    verbose: int = 0


class UsageError(InputError):
    pass


def exit_code(exc: TalkEditError) -> int:
    if isinstance(exc, SearchError):
        return EXIT_SEARCH
    if isinstance(exc, PlanError):
        return EXIT_PLAN
    return EXIT_INPUT


def _region(text: str) -> tuple[int, int]:
    try:
        a, b = (int(x) for x in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a:b frame indices, got {text!r}") from None
    return a, b


def _variant(text: str) -> tuple[str, int]:
    word, sep, n = text.rpartition("=")
    if not sep or not word or not n.isdigit():
        raise argparse.ArgumentTypeError(f"expected WORD=N, got {text!r}")
    return word.upper(), int(n)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="talkedit",
        description="Plan text-based edits of talking-head parameter tracks.",
        allow_abbrev=False,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("-v", "--verbose", action="count", default=0, help="more logging; plan also dumps dp_table.csv")
        p.add_argument("--threads", type=int, default=1, help="worker threads (outputs do not depend on it)")

    p = sub.add_parser("plan", help="plan one edit and write the EDL, blended track and report", allow_abbrev=False)
    common(p)
    p.add_argument("--alignment", type=Path, required=True, help="aligned transcript JSON")
    p.add_argument("--dict", dest="dictionary", type=Path, required=True, help="CMU-style pronunciation dictionary")
    p.add_argument("--track", type=Path, required=True, help="parameter track (VFTK or JSON)")
    p.add_argument("--edit", type=Path, required=True, help="edit specification JSON")
    p.add_argument("--out", type=Path, required=True, help="output directory")
    p.add_argument("--chi", type=float, default=DEFAULT_PARAMS.chi, help="duration-mismatch weight (default %(default)g)")
    p.add_argument("--phi", type=float, default=DEFAULT_PARAMS.phi, help="short-segment penalty (default %(default)g)")
    p.add_argument("--window-ms", type=float, default=DEFAULT_WINDOW * 1000, help="cross-fade window (default %(default)g ms; 0 disables)")
    p.add_argument("--fps-out", type=float, default=None, help="output frame rate (default: the track's)")
    p.add_argument("--bg-region", type=_region, default=None, metavar="A:B", help="background frames [A, B)")
    p.add_argument("--seed", type=int, default=0, help="recorded for reproducibility; planning is deterministic")
    p.add_argument("--variant", type=_variant, action="append", default=[], metavar="WORD=N", help="use pronunciation N of WORD")

    p = sub.add_parser("stats", help="match-probability curves and viseme duration table", allow_abbrev=False)
    common(p)
    p.add_argument("--alignment", type=Path, action="append", required=True, help="aligned transcript JSON (repeatable)")
    p.add_argument("--out", type=Path, required=True, help="output directory")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=100_000, help="Monte Carlo trials per K (default %(default)d)")
    p.add_argument("--exhaustive", action="store_true", help="enumerate every window instead of sampling")
    p.add_argument("--kmax", dest="k_max", type=int, default=10, help="largest window length (default %(default)d)")

    p = sub.add_parser("validate", help="check input files without planning", allow_abbrev=False)
    common(p)
    p.add_argument("--alignment", type=Path)
    p.add_argument("--dict", dest="dictionary", type=Path)
    p.add_argument("--track", type=Path)
    p.add_argument("--edit", type=Path)

    p = sub.add_parser("synth", help="write a synthetic aligned corpus, dictionary and track", allow_abbrev=False)
    common(p)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--sentences", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--fps", type=float, default=60.0)
    return parser


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    cfg = RunConfig(command=ns.command, verbose=ns.verbose, threads=ns.threads)
    if ns.threads < 1:
        raise UsageError("--threads must be at least 1")
    alignment = getattr(ns, "alignment", None)
    if isinstance(alignment, Path):
        cfg.alignment = [alignment]
    elif alignment:
        cfg.alignment = list(alignment)
    for name in ("dictionary", "track", "edit", "out", "seed"):
        if getattr(ns, name, None) is not None:
            setattr(cfg, name, getattr(ns, name))
    if ns.command == "plan":
        for flag, v in (("--chi", ns.chi), ("--phi", ns.phi), ("--window-ms", ns.window_ms)):
            if not (math.isfinite(v) and v >= 0):
                raise UsageError(f"{flag} must be a non-negative number, got {v}")
        cfg.params = CostParams(chi=ns.chi, phi=ns.phi)
        cfg.window = ns.window_ms / 1000.0
        if ns.fps_out is not None and not (math.isfinite(ns.fps_out) and ns.fps_out > 0):
            raise UsageError(f"--fps-out must be positive, got {ns.fps_out}")
        cfg.fps_out = ns.fps_out
        if ns.bg_region is not None:
            a, b = ns.bg_region
            if not 0 <= a < b:
                raise UsageError(f"--bg-region needs 0 <= a < b, got {a}:{b}")
            cfg.bg_region = ns.bg_region
        cfg.variants = dict(ns.variant)
    elif ns.command == "stats":
        if ns.trials < 1:
            raise UsageError("--trials must be at least 1")
        if ns.k_max < 1:
            raise UsageError("--kmax must be at least 1")
        cfg.trials, cfg.exhaustive, cfg.k_max = ns.trials, ns.exhaustive, ns.k_max
    elif ns.command == "synth":
        if ns.sentences < 2:
            raise UsageError("--sentences must be at least 2")
        if not (math.isfinite(ns.fps) and ns.fps > 0):
            raise UsageError("--fps must be positive")
        cfg.sentences, cfg.fps = ns.sentences, ns.fps
    return cfg


def _load(path: Path, what: str, parse: Callable[[Path], T]) -> T:
    """Parse one input file, prefixing any error with the file it came from."""
    try:
        return parse(path)
    except TalkEditError as exc:
        raise _relabel(exc, f"{what} {path}: {exc}")


def _relabel(exc: TalkEditError, message: str) -> TalkEditError:
    exc.args = (message,)
    return exc


def _with_variants(edit: EditSpec, variants: dict[str, int]) -> EditSpec:
    if not variants:
        return edit
    words = tuple(
        EditWord(w.text, w.orig_index, w.phone_timings, variants.get(w.text.upper(), w.variant)) for w in edit.words
    )
    return EditSpec(edit.kind, words, edit.anchor, edit.span)


def cmd_plan(cfg: RunConfig) -> int:
    transcript = _load(cfg.alignment[0], "alignment", parse_alignment)
    pron = _load(cfg.dictionary, "dictionary", parse_dictionary)
    track = _load(cfg.track, "track", parse_parameter_track)
    edit = _load(cfg.edit, "edit", parse_edit)
    edit = _with_variants(edit, cfg.variants)
    try:
        check_edit(edit, transcript)
    except TalkEditError as exc:
        raise _relabel(exc, f"edit {cfg.edit}: {exc}")
    try:
        plan = plan_edit(
            edit,
            transcript,
            track,
            pron,
            cfg.params,
            window=cfg.window,
            fps_out=cfg.fps_out,
            region=cfg.bg_region,
            threads=cfg.threads,
        )
    except SearchError as exc:
        raise _relabel(exc, f"search: {exc}")
    except PlanError as exc:
        raise _relabel(exc, f"plan: {exc}")
    paths = write_plan(plan, track, transcript, cfg.out)
    if cfg.verbose:
        # one CSV per searched run of new words, concatenated under one header
        tables = [dp_table_csv(r).split("\n", 1) for r in plan.searches]
        dump = cfg.out / "dp_table.csv"
        dump.write_text(tables[0][0] + "\n" + "".join(body for _, body in tables) if tables else "")
        paths.append(dump)
    for p in paths:
        print(f"wrote {p}")
    return EXIT_OK


def cmd_stats(cfg: RunConfig) -> int:
    transcripts: list[AlignedTranscript] = [_load(p, "alignment", parse_alignment) for p in cfg.alignment]
    sentences = sentence_sequences(transcripts)
    trials = None if cfg.exhaustive else cfg.trials
    curves = []
    for mode in ("phoneme", "viseme"):
        log.info("computing %s curve over %d sentences", mode, len(sentences))
        curves.append(match_probability_curve(sentences, mode, cfg.k_max, trials, cfg.seed, cfg.threads))
    curves_text, durations_text = export_curves(curves, duration_stats(transcripts))
    cfg.out.mkdir(parents=True, exist_ok=True)
    for name, text in (("match_probability.csv", curves_text), ("viseme_durations.csv", durations_text)):
        (cfg.out / name).write_text(text)
        print(f"wrote {cfg.out / name}")
    return EXIT_OK


def cmd_validate(cfg: RunConfig) -> int:
    problems: list[str] = []
    loaded: dict[str, object] = {}
    checks = (
        ("alignment", cfg.alignment[0] if cfg.alignment else None, parse_alignment),
        ("dictionary", cfg.dictionary, parse_dictionary),
        ("track", cfg.track, parse_parameter_track),
        ("edit", cfg.edit, parse_edit),
    )
    for what, path, parse in checks:
        if path is None:
            continue
        try:
            loaded[what] = parse(path)
            print(f"ok      {what} {path}")
        except TalkEditError as exc:
            problems.append(f"{what} {path}: {exc}")
            print(f"FAILED  {what} {path}: {exc}")
    tr, track, edit = loaded.get("alignment"), loaded.get("track"), loaded.get("edit")
    if isinstance(tr, AlignedTranscript) and isinstance(track, ParameterTrack):
        if abs(track.duration - tr.duration) > 1.0 / track.fps + 1e-9:
            msg = f"track lasts {track.duration:.4f} s but transcript lasts {tr.duration:.4f} s"
            problems.append(f"track {cfg.track}: {msg}")
            print(f"FAILED  {msg}")
    if isinstance(tr, AlignedTranscript) and isinstance(edit, EditSpec):
        try:
            check_edit(edit, tr)
        except TalkEditError as exc:
            problems.append(f"edit {cfg.edit}: {exc}")
            print(f"FAILED  edit {cfg.edit}: {exc}")
    if problems:
        print(f"{len(problems)} problem(s)", file=sys.stderr)
        for p in problems:
            print(f"  {p}", file=sys.stderr)
        return EXIT_INPUT
    print("all inputs valid")
    return EXIT_OK


def cmd_synth(cfg: RunConfig) -> int:
    from .synth import dictionary_text, synth_corpus, synth_track

    tr, pron = synth_corpus(cfg.sentences, seed=cfg.seed, quantum=1.0 / cfg.fps)
    track = synth_track(tr, cfg.fps, seed=cfg.seed)
    cfg.out.mkdir(parents=True, exist_ok=True)
    write_alignment(tr, cfg.out / "alignment.json")
    (cfg.out / "dict.txt").write_text(dictionary_text(pron))
    write_track(track, cfg.out / "track.vftk")
    for name in ("alignment.json", "dict.txt", "track.vftk"):
        print(f"wrote {cfg.out / name}")
    return EXIT_OK


COMMANDS: dict[str, Callable[[RunConfig], int]] = {
    "plan": cmd_plan,
    "stats": cmd_stats,
    "validate": cmd_validate,
    "synth": cmd_synth,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if ns.verbose > 1 else logging.INFO if ns.verbose else logging.WARNING,
        format="%(levelname)s %(message)s",
    )
    try:
        cfg = config_from_args(ns)
        return COMMANDS[cfg.command](cfg)
    except TalkEditError as exc:
        print(f"talkedit {ns.command}: error: {exc}", file=sys.stderr)
        return exit_code(exc)
    except OSError as exc:
        print(f"talkedit {ns.command}: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
