"""Inequality estimators for both probability spaces and a no-signaling check."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from belllab.core import (
    CH_COEFFICIENTS,
    PAIR_NAMES,
    PAIRS,
    ChTerms,
    CounterfactualQuadruple,
    DomainError,
    InsufficientDataError,
    ch_value,
)
from belllab.models import TrialBatch

# outcome column order inside a pair: 2 * a + b
OUTCOMES = ((0, 0), (0, 1), (1, 0), (1, 1))


class Space(enum.Enum):
    SPACE1 = "space1"
    SPACE2 = "space2"


@dataclass(frozen=True, eq=False)
class SettingCounts:
    """Outcome counts, shape (4 pairs, 4 outcomes); see :mod:`belllab.core`."""

    counts: np.ndarray

    def __post_init__(self):
        c = np.array(self.counts, dtype=np.int64)
        if c.shape != (4, 4) or np.any(c < 0):
            raise DomainError("counts must be a non-negative (4, 4) array")
        c.setflags(write=False)
        object.__setattr__(self, "counts", c)

    @property
    def n_pair(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def merge(self, other: "SettingCounts") -> "SettingCounts":
        return SettingCounts(self.counts + other.counts)

    __add__ = merge

    def __eq__(self, other) -> bool:
        return isinstance(other, SettingCounts) and np.array_equal(self.counts, other.counts)

    def probabilities(self) -> np.ndarray:
        n = self.n_pair
        self.require_all_pairs()
        return self.counts / n[:, None]

    def require_all_pairs(self) -> None:
        for p, n in enumerate(self.n_pair):
            if n == 0:
                raise InsufficientDataError(f"setting pair ({PAIR_NAMES[p]}) has no trials")

    def to_dict(self) -> dict:
        return {PAIR_NAMES[p]: {"n_pair": int(self.n_pair[p]),
                                **{f"n{a}{b}": int(self.counts[p, 2 * a + b]) for a, b in OUTCOMES}}
                for p in range(4)}


def accumulate(batch: TrialBatch) -> SettingCounts:
    if len(batch) == 0:
        raise InsufficientDataError("empty batch")
    idx = 4 * batch.pair + 2 * batch.a.astype(np.int64) + batch.b
    return SettingCounts(np.bincount(idx, minlength=16).reshape(4, 4))


@dataclass(frozen=True)
class ChEvaluation:
    s: float
    stderr: float
    terms: ChTerms
    space: Space
    n_effective: dict

    def z_above_upper(self) -> float:
        return _z(self.s - 0.0, self.stderr)

    def z_below_lower(self) -> float:
        return _z(-1.0 - self.s, self.stderr)

    def violated(self, sigma: float = 3.0) -> bool:
        """True when s leaves [-1, 0] by more than ``sigma`` standard errors."""
        return (self.s > 0.0 and self.s > sigma * self.stderr) or \
               (self.s < -1.0 and -1.0 - self.s > sigma * self.stderr)

    def to_dict(self) -> dict:
        return {"s": float(self.s), "stderr": float(self.stderr), "space": self.space.value,
                "terms": self.terms.to_dict(), "n_effective": dict(self.n_effective)}


def _z(excess: float, stderr: float) -> float:
    if stderr > 0:
        return excess / stderr
    if excess == 0:
        return 0.0
    return math.copysign(math.inf, excess)


def _binomial_var(p: float, n: int) -> float:
    return p * (1.0 - p) / n


def space1_ch(counts: SettingCounts, pool_marginals: bool = False) -> ChEvaluation:
    """Conditional-frequency estimate of the CH expression.

    Marginals come from the (a, b) context unless ``pool_marginals`` is set,
    in which case P(A=1|a) pools (a, b) with (a, b') and P(B=1|b) pools
    (a, b) with (a', b). Pooling presumes no-signaling.

    The standard error uses the delta method with the six terms treated as
    independent binomial proportions; (a, b) feeds three terms, so the
    figure is approximate.
    """
    counts.require_all_pairs()
    c = counts.counts
    n = counts.n_pair
    p11 = c[:, 3] / n
    a1 = c[:, 2] + c[:, 3]
    b1 = c[:, 1] + c[:, 3]
    if pool_marginals:
        n_a, k_a = int(n[0] + n[1]), int(a1[0] + a1[1])
        n_b, k_b = int(n[0] + n[2]), int(b1[0] + b1[2])
    else:
        n_a, k_a = int(n[0]), int(a1[0])
        n_b, k_b = int(n[0]), int(b1[0])
    terms = ChTerms(p11[0], p11[1], p11[2], p11[3], k_a / n_a, k_b / n_b)
    ns = [int(x) for x in n] + [n_a, n_b]
    var = sum(_binomial_var(p, m) for p, m in zip(terms.as_array(), ns))
    n_eff = dict(zip(("p11_ab", "p11_abp", "p11_apb", "p11_apbp", "pA_a", "pB_b"), ns))
    return ChEvaluation(ch_value(terms), math.sqrt(var), terms, Space.SPACE1, n_eff)


def _quadruple_array(quadruples) -> np.ndarray:
    if isinstance(quadruples, np.ndarray):
        q = quadruples
    else:
        q = np.array([x.as_tuple() if isinstance(x, CounterfactualQuadruple) else x
                      for x in quadruples], dtype=np.int8)
    if q.size == 0:
        raise InsufficientDataError("no quadruples")
    if q.ndim != 2 or q.shape[1] != 4:
        raise DomainError("quadruples must be rows of four outcomes")
    return q


def space2_ch(quadruples: Sequence[CounterfactualQuadruple] | np.ndarray,
              weights: Optional[Sequence[float]] = None) -> ChEvaluation:
    """Unconditional relative frequencies over counterfactual quadruples.

    ``weights`` turns the sequence into a weighted mixture; without them
    every quadruple counts once. All six terms come from the same sample, so
    s is the mean of the per-quadruple CH value and its standard error is
    computed exactly from that single variable.
    """
    q = _quadruple_array(quadruples).astype(float)
    m = len(q)
    if weights is None:
        w = np.full(m, 1.0 / m)
    else:
        w = np.asarray(weights, dtype=float)
        if w.shape != (m,) or np.any(w < 0) or w.sum() <= 0:
            raise DomainError("weights must be non-negative, one per quadruple")
        w = w / w.sum()
    a0, a1, b0, b1 = q.T
    per_row = np.stack([a0 * b0, a0 * b1, a1 * b0, a1 * b1, a0, b0], axis=1)
    terms = ChTerms.from_array(np.clip(w @ per_row, 0.0, 1.0))
    s = ch_value(terms)
    f = per_row @ CH_COEFFICIENTS
    var_f = max(float(w @ (f - w @ f) ** 2), 0.0)
    n_eff = m if weights is None else 1.0 / float(np.sum(w ** 2))
    stderr = math.sqrt(var_f / n_eff)
    return ChEvaluation(s, stderr, terms, Space.SPACE2,
                        {k: n_eff for k in ("p11_ab", "p11_abp", "p11_apb", "p11_apbp",
                                            "pA_a", "pB_b")})


@dataclass(frozen=True)
class MarginalShift:
    side: str          # "A" or "B"
    fixed_slot: int    # slot of the setting whose marginal is compared
    discrepancy: float
    z: float


@dataclass(frozen=True)
class NoSignalingReport:
    shifts: tuple[MarginalShift, ...]

    def max_discrepancy(self, side: str) -> float:
        return max(s.discrepancy for s in self.shifts if s.side == side)

    def max_z(self, side: Optional[str] = None) -> float:
        return max(s.z for s in self.shifts if side is None or s.side == side)

    def to_dict(self) -> dict:
        return {
            "max_discrepancy": {side: self.max_discrepancy(side) for side in ("A", "B")},
            "max_z": {side: self.max_z(side) for side in ("A", "B")},
            "shifts": [s.__dict__ for s in self.shifts],
        }


def _two_proportion(k1: int, n1: int, k2: int, n2: int) -> tuple[float, float]:
    p1, p2 = k1 / n1, k2 / n2
    pooled = (k1 + k2) / (n1 + n2)
    d = abs(p1 - p2)
    se = math.sqrt(pooled * (1 - pooled) * (1 / n1 + 1 / n2))
    return d, (d / se if se > 0 else 0.0)


def no_signaling_report(counts: SettingCounts) -> NoSignalingReport:
    """Marginal of each side under the two settings of the other side.

    A at slot s: |P(a=1|alpha_s, b) - P(a=1|alpha_s, b')|.
    B at slot t: |P(b=1|a, beta_t) - P(b=1|a', beta_t)|.
    """
    counts.require_all_pairs()
    c = counts.counts
    n = counts.n_pair
    a1 = c[:, 2] + c[:, 3]
    b1 = c[:, 1] + c[:, 3]
    shifts = []
    for s in (0, 1):
        i, j = 2 * s, 2 * s + 1
        shifts.append(MarginalShift("A", s, *_two_proportion(a1[i], n[i], a1[j], n[j])))
    for t in (0, 1):
        i, j = t, 2 + t
        shifts.append(MarginalShift("B", t, *_two_proportion(b1[i], n[i], b1[j], n[j])))
    return NoSignalingReport(tuple(shifts))


def context_probabilities(counts: SettingCounts) -> np.ndarray:
    return counts.probabilities()


__all__ = [
    "OUTCOMES", "PAIRS", "Space", "SettingCounts", "accumulate", "ChEvaluation",
    "space1_ch", "space2_ch", "MarginalShift", "NoSignalingReport", "no_signaling_report",
]
