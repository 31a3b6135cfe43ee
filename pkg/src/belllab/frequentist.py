"""Collectives, finite-sample convergence and place-selection diagnostics, and
the single-collective rule for combining probabilities.

Infinite collectives are stood in for by finite sequences; every verdict
carries the ``eps`` / ``tail_fraction`` it was computed with. Positions in
selection rules are 1-based.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from belllab.core import PAIR_NAMES, DomainError, InsufficientDataError
from belllab.models import TrialBatch

DEFAULT_EPS = 0.01
DEFAULT_TAIL_FRACTION = 0.2
DEFAULT_SELECTION_EPS = 0.02
MIN_LENGTH = 100

Attribute = tuple[int, int]


@dataclass(frozen=True, eq=False)
class Collective:
    """Outcome pairs observed under one setting pair, in trial order."""

    label: str                 # one of PAIR_NAMES
    attributes: np.ndarray     # (n, 2) int8
    source: str = ""

    def __post_init__(self):
        att = np.asarray(self.attributes, dtype=np.int8).reshape(-1, 2)
        att.setflags(write=False)
        object.__setattr__(self, "attributes", att)

    def __len__(self) -> int:
        return len(self.attributes)

    @classmethod
    def from_stream(cls, bits, label: str = "ab", source: str = "stream") -> "Collective":
        """Single 0/1 stream mirrored on both sides, so attribute (1, 1) is bit 1."""
        bits = np.asarray(bits, dtype=np.int8)
        return cls(label, np.stack([bits, bits], axis=1), source)

    def indicator(self, attribute: Attribute) -> np.ndarray:
        a, b = attribute
        return (self.attributes[:, 0] == a) & (self.attributes[:, 1] == b)

    def frequency(self, attribute: Attribute) -> float:
        if len(self) == 0:
            raise InsufficientDataError(f"collective {self.label} is empty")
        return float(self.indicator(attribute).mean())


def build_collectives(batch: TrialBatch, source: str = "") -> dict[str, Collective]:
    """One collective per setting pair, keyed by pair name; some may be empty."""
    pair = batch.pair
    att = np.stack([batch.a, batch.b], axis=1).astype(np.int8)
    return {name: Collective(name, att[pair == p], source) for p, name in enumerate(PAIR_NAMES)}


@dataclass(frozen=True, eq=False)
class ConvergenceDiagnostic:
    trajectory: np.ndarray
    stabilized: bool
    tail_deviation: float
    n_star: Optional[int]
    eps: float
    tail_fraction: float

    def to_dict(self, points: int = 200) -> dict:
        n = len(self.trajectory)
        idx = np.unique(np.linspace(0, n - 1, min(points, n)).astype(int))
        return {
            "stabilized": self.stabilized,
            "tail_deviation": self.tail_deviation,
            "n_star": self.n_star,
            "eps": self.eps,
            "tail_fraction": self.tail_fraction,
            "final_frequency": float(self.trajectory[-1]),
            "trajectory_sample": {"n": (idx + 1).tolist(),
                                  "frequency": self.trajectory[idx].tolist()},
        }


def convergence_diagnostic(c: Collective, attribute: Attribute = (1, 1),
                           eps: float = DEFAULT_EPS,
                           tail_fraction: float = DEFAULT_TAIL_FRACTION) -> ConvergenceDiagnostic:
    """Stabilized iff the running frequency stays within ``eps`` of its final
    value over the last ``tail_fraction`` of the sequence.

    ``n_star`` is the shortest prefix length from which the running
    frequency never again strays ``eps`` or more from the final value.
    """
    if not 0.0 < tail_fraction < 1.0:
        raise DomainError("tail_fraction must lie strictly between 0 and 1")
    if eps <= 0:
        raise DomainError("eps must be positive")
    n = len(c)
    if n < MIN_LENGTH:
        raise InsufficientDataError(f"collective {c.label} has {n} < {MIN_LENGTH} elements")
    hits = c.indicator(attribute).astype(np.int64)
    trajectory = np.cumsum(hits) / np.arange(1, n + 1)
    dev = np.abs(trajectory - trajectory[-1])
    tail_start = n - int(np.floor(tail_fraction * n))
    tail_deviation = float(dev[tail_start:].max())
    suffix_max = np.maximum.accumulate(dev[::-1])[::-1]
    ok = np.flatnonzero(suffix_max < eps)
    n_star = int(ok[0]) + 1 if ok.size else None
    return ConvergenceDiagnostic(trajectory, tail_deviation < eps, tail_deviation,
                                 n_star, eps, tail_fraction)


class RuleKind(enum.Enum):
    EVEN_POSITIONS = "even_positions"
    EVERY_KTH = "every_kth"
    AFTER_ATTRIBUTE = "after_attribute"


@dataclass(frozen=True)
class SelectionRule:
    kind: RuleKind
    k: Optional[int] = None
    attribute: Optional[Attribute] = None

    def __post_init__(self):
        if self.kind is RuleKind.EVERY_KTH and (self.k is None or self.k < 2):
            raise DomainError("EveryKth needs k >= 2")
        if self.kind is RuleKind.AFTER_ATTRIBUTE:
            if self.attribute is None or tuple(self.attribute) not in {(0, 0), (0, 1), (1, 0), (1, 1)}:
                raise DomainError("AfterAttribute needs an outcome pair")
            object.__setattr__(self, "attribute", tuple(self.attribute))

    @classmethod
    def even_positions(cls) -> "SelectionRule":
        return cls(RuleKind.EVEN_POSITIONS)

    @classmethod
    def every_kth(cls, k: int) -> "SelectionRule":
        return cls(RuleKind.EVERY_KTH, k=k)

    @classmethod
    def after_attribute(cls, attribute: Attribute) -> "SelectionRule":
        return cls(RuleKind.AFTER_ATTRIBUTE, attribute=attribute)

    @property
    def name(self) -> str:
        if self.kind is RuleKind.EVERY_KTH:
            return f"every_kth_{self.k}"
        if self.kind is RuleKind.AFTER_ATTRIBUTE:
            return "after_attribute_{}{}".format(*self.attribute)
        return self.kind.value


#: Fixed library standing in for "all admissible place selections".
STANDARD_RULES = (
    SelectionRule.even_positions(),
    SelectionRule.every_kth(3),
    SelectionRule.every_kth(5),
    SelectionRule.after_attribute((1, 1)),
)


def _selected_indices(c: Collective, rule: SelectionRule) -> np.ndarray:
    n = len(c)
    if rule.kind is RuleKind.EVEN_POSITIONS:
        return np.arange(1, n, 2)
    if rule.kind is RuleKind.EVERY_KTH:
        return np.arange(rule.k - 1, n, rule.k)
    hit = np.flatnonzero(c.indicator(rule.attribute)) + 1
    return hit[hit < n]


def apply_selection(c: Collective, rule: SelectionRule) -> Collective:
    return Collective(c.label, c.attributes[_selected_indices(c, rule)], c.source)


@dataclass(frozen=True)
class RuleResult:
    rule: SelectionRule
    length: int
    sub_frequency: Optional[float]
    deviation: Optional[float]
    flagged: bool
    insufficient: bool = False

    def to_dict(self) -> dict:
        return {"rule": self.rule.name, "length": self.length,
                "sub_frequency": self.sub_frequency, "deviation": self.deviation,
                "flagged": self.flagged, "insufficient_data": self.insufficient}


def randomness_diagnostic(c: Collective, rules: Iterable[SelectionRule] = STANDARD_RULES,
                          attribute: Attribute = (1, 1),
                          eps: float = DEFAULT_SELECTION_EPS) -> list[RuleResult]:
    """Flag a rule iff its subsequence frequency differs from the full one by >= eps.

    Subsequences shorter than the minimum length get an insufficient-data
    marker rather than a verdict.
    """
    if eps <= 0:
        raise DomainError("eps must be positive")
    full = c.frequency(attribute)
    out = []
    for rule in rules:
        sub = apply_selection(c, rule)
        if len(sub) < MIN_LENGTH:
            out.append(RuleResult(rule, len(sub), None, None, False, insufficient=True))
            continue
        f = sub.frequency(attribute)
        d = abs(f - full)
        out.append(RuleResult(rule, len(sub), f, d, d >= eps))
    return out


# combining probabilities across collectives

TERM_NAMES = ("p11_ab", "p11_abp", "p11_apb", "p11_apbp", "pA_a", "pB_b")


@dataclass(frozen=True)
class TermSource:
    """Which collective supplies a term, and whether the term is read as a
    probability conditional on that collective (space 1) or as an
    unconditional probability in one common space (space 2)."""

    term: str
    collective: str
    conditional: bool


@dataclass(frozen=True)
class GuardVerdict:
    admissible: bool
    details: tuple[str, ...] = ()
    citation: Optional[str] = None

    def to_dict(self) -> dict:
        return {"admissible": self.admissible, "details": list(self.details),
                "citation": self.citation}


def collective_compatibility_guard(request: Iterable[TermSource]) -> GuardVerdict:
    """Probabilities may only be added within a single collective.

    Conditional terms stay inside their own collective and are never pooled.
    Unconditional terms are summed as members of one space, so they must all
    come from the same collective. The verdict depends only on the request
    structure.
    """
    request = list(request)
    for ts in request:
        if ts.collective not in PAIR_NAMES:
            raise DomainError(f"unknown collective label {ts.collective!r}")
        if ts.term not in TERM_NAMES:
            raise DomainError(f"unknown term {ts.term!r}")
    pooled = sorted({ts.collective for ts in request if not ts.conditional},
                    key=PAIR_NAMES.index)
    if len(pooled) <= 1:
        return GuardVerdict(True)
    by = {c: [ts.term for ts in request if not ts.conditional and ts.collective == c]
          for c in pooled}
    details = tuple(f"{', '.join(terms)} from collective {c}" for c, terms in by.items())
    return GuardVerdict(False, details, "single-collective-addition")


def space1_request() -> list[TermSource]:
    """Space-1 request: every term conditional on its own context."""
    return [TermSource(t, c, True) for t, c in zip(TERM_NAMES, PAIR_NAMES + ("ab", "ab"))]


def space2_request() -> list[TermSource]:
    """Space-2 request: unconditional joint terms read off four different contexts."""
    return [TermSource(t, c, False) for t, c in zip(TERM_NAMES, PAIR_NAMES + ("ab", "ab"))]
