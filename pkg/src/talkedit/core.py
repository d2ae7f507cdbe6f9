"""Phoneme and viseme domain types and the elementary matching costs.

Phones are labelled with ARPABET codes.  Visually similar codes are grouped
into 17 visemes (numbered 1..17); silence ``sp`` has a group of its own.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence, overload

from .errors import OverlapError, ParseError, UnknownPhoneme

VISEME_GROUPS: dict[int, tuple[str, ...]] = {
    1: ("AA0", "AA1", "AA2"),
    2: ("AH0", "AH1", "AH2", "HH"),
    3: ("AO0", "AO1", "AO2"),
    4: ("AW0", "AW1", "AW2", "OW0", "OW1", "OW2"),
    5: ("OY0", "OY1", "OY2", "UH0", "UH1", "UH2", "UW0", "UW1", "UW2"),
    6: ("EH0", "EH1", "EH2", "AE0", "AE1", "AE2"),
    7: ("IH0", "IH1", "IH2", "AY0", "AY1", "AY2"),
    8: ("EY0", "EY1", "EY2"),
    9: ("Y", "IY0", "IY1", "IY2"),
    10: ("R", "ER0", "ER1", "ER2"),
    11: ("L",),
    12: ("W",),
    13: ("M", "P", "B"),
    14: ("N", "NG", "DH", "D", "G", "T", "Z", "ZH", "TH", "K", "S"),
    15: ("CH", "JH", "SH"),
    16: ("F", "V"),
    17: ("sp",),
}

SILENCE = "sp"

_VISEME_OF: dict[str, int] = {}
for _vid, _codes in VISEME_GROUPS.items():
    for _code in _codes:
        _VISEME_OF[_code] = _vid
        # vowels may be written without their stress digit
        if _code[-1].isdigit():
            _VISEME_OF.setdefault(_code[:-1], _vid)

TABLE_CODES: frozenset[str] = frozenset(c for codes in VISEME_GROUPS.values() for c in codes)
ALL_LABELS: frozenset[str] = frozenset(_VISEME_OF)


def canonical_label(text: str) -> str:
    """Return the canonical spelling of an ARPABET code.

    Codes compare case-insensitively; the canonical form is upper-case except
    for silence, which stays ``sp``.
    """
    code = text.strip()
    if code.lower() == SILENCE:
        return SILENCE
    code = code.upper()
    if code not in _VISEME_OF:
        raise UnknownPhoneme(text)
    return code


def is_valid_label(text: str) -> bool:
    try:
        canonical_label(text)
    except UnknownPhoneme:
        return False
    return True


def base_phoneme(label: str) -> str:
    """Strip the vowel stress digit: ``AA1`` -> ``AA``."""
    return label[:-1] if label[-1].isdigit() else label


def viseme_of(label: str) -> int:
    return _VISEME_OF[canonical_label(label)]


def viseme_distance(a: str, b: str, strict_stress: bool = True) -> float:
    """0 for the same phoneme, 0.5 for different phonemes of one viseme, else 1.

    With ``strict_stress`` (the default) stress variants such as ``AA1`` and
    ``AA2`` count as different phonemes.
    """
    a = canonical_label(a)
    b = canonical_label(b)
    if a == b or (not strict_stress and base_phoneme(a) == base_phoneme(b)):
        return 0.0
    if _VISEME_OF[a] == _VISEME_OF[b]:
        return 0.5
    return 1.0


@dataclass(frozen=True, slots=True)
class Phone:
    label: str
    t_in: float
    t_out: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "label", canonical_label(self.label))
        object.__setattr__(self, "t_in", float(self.t_in))
        object.__setattr__(self, "t_out", float(self.t_out))
        if not self.t_out > self.t_in:
            raise ParseError(
                f"phone {self.label} has non-positive duration [{self.t_in}, {self.t_out}]"
            )

    @property
    def duration(self) -> float:
        return self.t_out - self.t_in

    @property
    def viseme(self) -> int:
        return _VISEME_OF[self.label]


class PhoneSequence(Sequence[Phone]):
    """Immutable, time-ordered, non-overlapping run of phones."""

    __slots__ = ("_phones",)

    def __init__(self, phones: Iterable[Phone] = ()):
        phones = tuple(phones)
        for i in range(1, len(phones)):
            prev, cur = phones[i - 1], phones[i]
            if cur.t_in < prev.t_in or prev.t_out > cur.t_in:
                raise OverlapError(
                    i,
                    f"phone {i} ({cur.label} [{cur.t_in}, {cur.t_out}]) overlaps or precedes "
                    f"phone {i - 1} ({prev.label} [{prev.t_in}, {prev.t_out}])",
                )
        self._phones = phones

    @classmethod
    def contiguous(cls, labels: Sequence[str], durations: Sequence[float], start: float = 0.0) -> PhoneSequence:
        """Lay phones end to end starting at ``start``."""
        if len(labels) != len(durations):
            raise ValueError("labels and durations differ in length")
        out = []
        t = float(start)
        for lbl, d in zip(labels, durations):
            out.append(Phone(lbl, t, t + d))
            t = t + d
        return cls(out)

    @overload
    def __getitem__(self, i: int) -> Phone: ...
    @overload
    def __getitem__(self, i: slice) -> PhoneSequence: ...

    def __getitem__(self, i):
        if isinstance(i, slice):
            return PhoneSequence(self._phones[i])
        return self._phones[i]

    def __len__(self) -> int:
        return len(self._phones)

    def __iter__(self) -> Iterator[Phone]:
        return iter(self._phones)

    def __eq__(self, other: object) -> bool:
        if isinstance(other, PhoneSequence):
            return self._phones == other._phones
        return NotImplemented

    def __hash__(self) -> int:
        return hash(self._phones)

    def __repr__(self) -> str:
        body = " ".join(f"{p.label}[{p.t_in:g},{p.t_out:g}]" for p in self._phones)
        return f"PhoneSequence({body})"

    @property
    def labels(self) -> list[str]:
        return [p.label for p in self._phones]

    @property
    def durations(self) -> list[float]:
        return [p.duration for p in self._phones]

    @property
    def total_duration(self) -> float:
        return sum(self.durations)


@dataclass(frozen=True, slots=True)
class CostParams:
    c_insert: float = 1.0
    c_delete: float = 1.0
    chi: float = 1e-4
    phi: float = 0.001
    strict_stress: bool = True

    def __post_init__(self) -> None:
        for name in ("c_insert", "c_delete", "chi", "phi"):
            value = getattr(self, name)
            if not value >= 0:
                raise ValueError(f"{name} must be non-negative, got {value}")


DEFAULT_PARAMS = CostParams()


def swap_cost(p: Phone, q: Phone, params: CostParams = DEFAULT_PARAMS) -> float:
    dp = p.duration
    dq = q.duration
    cv = viseme_distance(p.label, q.label, params.strict_stress)
    return cv * (dp + dq) + params.chi * abs(dp - dq)
