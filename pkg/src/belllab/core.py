"""Shared domain types and the CH expression.

Outcomes are 0/1 throughout, so every expectation value is a probability.
Setting pairs are indexed ``2 * alpha_slot + beta_slot`` with slot 0 the
unprimed and slot 1 the primed setting:

    0 -> (a, b)    1 -> (a, b')    2 -> (a', b)    3 -> (a', b')

Quadruples are ordered ``(a_unprimed, a_primed, b_unprimed, b_primed)``.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, fields

import numpy as np


class DomainError(ValueError):
    """An argument lies outside the domain of an operation."""


class InsufficientDataError(ValueError):
    """Not enough data to form the requested estimate."""


class UnsupportedOperationError(RuntimeError):
    """The operation is not defined for this kind of source."""


class Side(enum.Enum):
    LEFT = "left"
    RIGHT = "right"


class Slot(enum.IntEnum):
    UNPRIMED = 0
    PRIMED = 1


PAIR_NAMES = ("ab", "abp", "apb", "apbp")
PAIRS = tuple(itertools.product((0, 1), (0, 1)))  # (alpha_slot, beta_slot)


def pair_index(alpha_slot: int, beta_slot: int) -> int:
    return 2 * int(alpha_slot) + int(beta_slot)


@dataclass(frozen=True)
class Angle:
    """Polarizer angle in degrees, taken modulo 180."""

    degrees: float

    def __post_init__(self):
        if not math.isfinite(self.degrees):
            raise DomainError(f"angle must be finite, got {self.degrees!r}")
        d = math.fmod(float(self.degrees), 180.0)
        if d < 0:
            d += 180.0
        if d >= 180.0:
            d = 0.0
        object.__setattr__(self, "degrees", d)

    @property
    def radians(self) -> float:
        return math.radians(self.degrees)


@dataclass(frozen=True)
class SettingLabel:
    side: Side
    slot: Slot
    angle: Angle

    @property
    def name(self) -> str:
        base = "a" if self.side is Side.LEFT else "b"
        return base + ("'" if self.slot is Slot.PRIMED else "")


@dataclass(frozen=True)
class SettingSet:
    """The four settings (a, a', b, b') of one experiment."""

    a: SettingLabel
    a_primed: SettingLabel
    b: SettingLabel
    b_primed: SettingLabel

    def __post_init__(self):
        expected = [
            (self.a, Side.LEFT, Slot.UNPRIMED),
            (self.a_primed, Side.LEFT, Slot.PRIMED),
            (self.b, Side.RIGHT, Slot.UNPRIMED),
            (self.b_primed, Side.RIGHT, Slot.PRIMED),
        ]
        for label, side, slot in expected:
            if label.side is not side or label.slot is not slot:
                raise DomainError(f"setting {label.name} is in the wrong (side, slot)")

    @classmethod
    def from_degrees(cls, alpha: float, alpha_p: float, beta: float, beta_p: float) -> "SettingSet":
        return cls(
            SettingLabel(Side.LEFT, Slot.UNPRIMED, Angle(alpha)),
            SettingLabel(Side.LEFT, Slot.PRIMED, Angle(alpha_p)),
            SettingLabel(Side.RIGHT, Slot.UNPRIMED, Angle(beta)),
            SettingLabel(Side.RIGHT, Slot.PRIMED, Angle(beta_p)),
        )

    def left(self, slot: int) -> SettingLabel:
        return self.a_primed if slot else self.a

    def right(self, slot: int) -> SettingLabel:
        return self.b_primed if slot else self.b

    def degrees(self) -> tuple[float, float, float, float]:
        return (self.a.angle.degrees, self.a_primed.angle.degrees,
                self.b.angle.degrees, self.b_primed.angle.degrees)


#: Left {0, 45}, right {22.5, -22.5}: the set where the photon-pair law
#: reaches (sqrt(2) - 1) / 2.
CANONICAL_SETTINGS = SettingSet.from_degrees(0.0, 45.0, 22.5, -22.5)


@dataclass(frozen=True)
class TrialRecord:
    trial_index: int
    alpha: SettingLabel
    beta: SettingLabel
    a: int
    b: int

    def __post_init__(self):
        if self.trial_index < 0:
            raise DomainError("trial_index must be non-negative")
        if self.alpha.side is not Side.LEFT or self.beta.side is not Side.RIGHT:
            raise DomainError("alpha must be a left setting and beta a right setting")
        if self.a not in (0, 1) or self.b not in (0, 1):
            raise DomainError("outcomes are 0 or 1")


@dataclass(frozen=True)
class CounterfactualQuadruple:
    a_unprimed: int
    a_primed: int
    b_unprimed: int
    b_primed: int

    def __post_init__(self):
        for f in fields(self):
            if getattr(self, f.name) not in (0, 1):
                raise DomainError(f"{f.name} must be 0 or 1")

    @property
    def index(self) -> int:
        """Position in the 16-element joint (big-endian bit order)."""
        return 8 * self.a_unprimed + 4 * self.a_primed + 2 * self.b_unprimed + self.b_primed

    @classmethod
    def from_index(cls, k: int) -> "CounterfactualQuadruple":
        if not 0 <= k < 16:
            raise DomainError(f"quadruple index {k} outside 0..15")
        return cls((k >> 3) & 1, (k >> 2) & 1, (k >> 1) & 1, k & 1)

    def as_tuple(self) -> tuple[int, int, int, int]:
        return (self.a_unprimed, self.a_primed, self.b_unprimed, self.b_primed)

    def ch_terms(self) -> "ChTerms":
        """Point-mass terms: each probability is 0 or 1."""
        a0, a1, b0, b1 = self.as_tuple()
        return ChTerms(a0 * b0, a0 * b1, a1 * b0, a1 * b1, a0, b0)


ALL_QUADRUPLES = tuple(CounterfactualQuadruple.from_index(k) for k in range(16))

#: 16 x 4 matrix of quadruple bits, row k is quadruple k.
QUADRUPLE_BITS = np.array([q.as_tuple() for q in ALL_QUADRUPLES], dtype=np.int8)


@dataclass(frozen=True)
class ChTerms:
    p11_ab: float
    p11_abp: float
    p11_apb: float
    p11_apbp: float
    pA_a: float
    pB_b: float

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not (0.0 <= v <= 1.0):
                raise DomainError(f"{f.name}={v!r} is not a probability")

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, f.name) for f in fields(self)], dtype=float)

    @classmethod
    def from_array(cls, x) -> "ChTerms":
        return cls(*(float(v) for v in x))

    def to_dict(self) -> dict[str, float]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


#: Coefficients of the six terms in the CH expression.
CH_COEFFICIENTS = np.array([1.0, 1.0, 1.0, -1.0, -1.0, -1.0])

CH_LOWER = -1.0
CH_UPPER = 0.0


def ch_value(terms: ChTerms) -> float:
    """P11(a,b) + P11(a,b') + P11(a',b) - P11(a',b') - P(A=1|a) - P(B=1|b).

    No clamping; use :func:`ch_within_bounds` to test the [-1, 0] bounds.
    """
    for f in fields(terms):
        v = getattr(terms, f.name)
        if not (0.0 <= v <= 1.0):
            raise DomainError(f"{f.name}={v!r} is not a probability")
    return (terms.p11_ab + terms.p11_abp + terms.p11_apb
            - terms.p11_apbp - terms.pA_a - terms.pB_b)


def ch_within_bounds(s: float, tol: float) -> bool:
    if tol < 0:
        raise DomainError(f"tolerance must be non-negative, got {tol!r}")
    return CH_LOWER - tol <= s <= CH_UPPER + tol


def photon_pair_probability(a: int, b: int, alpha_deg: float, beta_deg: float,
                            visibility: float = 1.0) -> float:
    """Coincidence law 1/4 [1 + (-1)^(a+b) v cos 2(alpha - beta)]."""
    c = math.cos(2.0 * math.radians(alpha_deg - beta_deg))
    sign = 1.0 if (a + b) % 2 == 0 else -1.0
    return 0.25 * (1.0 + sign * visibility * c)
