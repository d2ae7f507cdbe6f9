"""Exception hierarchy shared by every stage of the pipeline."""

from __future__ import annotations


class TalkEditError(Exception):
    """Base class; the CLI maps subclasses onto exit codes."""


class InputError(TalkEditError):
    """Bad input data (exit code 2)."""


class SearchError(TalkEditError):
    """Query construction or viseme search failed (exit code 3)."""


class PlanError(TalkEditError):
    """Retiming or blending failed (exit code 4)."""


class UnknownPhoneme(InputError):
    def __init__(self, label: str):
        super().__init__(f"unknown phoneme code {label!r}")
        self.label = label


class ParseError(InputError):
    pass


class OverlapError(InputError):
    def __init__(self, index: int, message: str | None = None):
        super().__init__(message or f"phone {index} overlaps its predecessor")
        self.index = index


class DimensionError(InputError):
    pass


class OutOfVocabulary(SearchError):
    def __init__(self, word: str):
        super().__init__(f"word {word!r} is not in the pronunciation dictionary")
        self.word = word


class MissingTiming(SearchError):
    pass


class EmptyInput(SearchError):
    pass


class QueryTooLong(SearchError):
    pass


class EmptyRegion(PlanError):
    pass


class OutOfTrackRange(PlanError):
    pass


class WindowTooLarge(PlanError):
    pass


class InsufficientCorpus(InputError):
    pass
