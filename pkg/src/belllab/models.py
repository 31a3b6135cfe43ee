"""Trial sources: local hidden-variable models, the photon-pair model, and two
deliberately broken sources (signaling, setting conspiracy)."""

from __future__ import annotations

import enum
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterator, Optional, Union

import numpy as np

from belllab import rng as _rng
from belllab.core import (
    CANONICAL_SETTINGS,
    PAIRS,
    ChTerms,
    CounterfactualQuadruple,
    DomainError,
    SettingLabel,
    SettingSet,
    TrialRecord,
    UnsupportedOperationError,
    pair_index,
)

DEFAULT_LAMBDA_CARDINALITY = 16
_WEIGHT_TOL = 1e-12


class ModelKind(enum.Enum):
    LHV_DETERMINISTIC = "lhv_deterministic"
    LHV_STOCHASTIC = "lhv_stochastic"
    QUANTUM = "quantum"
    SIGNALING = "signaling"
    CONSPIRACY = "conspiracy"

    @property
    def is_lhv(self) -> bool:
        return self in (ModelKind.LHV_DETERMINISTIC, ModelKind.LHV_STOCHASTIC)

    @property
    def has_counterfactuals(self) -> bool:
        # Conspiracy sources still assign both values per side from lambda.
        return self.is_lhv or self is ModelKind.CONSPIRACY


def _frozen(a, name: str) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class ResponseTable:
    """P(outcome = 1 | slot, lambda) per side; arrays of shape (2, K)."""

    left: np.ndarray
    right: np.ndarray

    def __post_init__(self):
        left = _frozen(self.left, "left")
        right = _frozen(self.right, "right")
        if left.ndim != 2 or left.shape[0] != 2 or left.shape != right.shape:
            raise DomainError("response arrays must both have shape (2, K)")
        if left.shape[1] < 1:
            raise DomainError("lambda cardinality must be at least 1")
        for name, arr in (("left", left), ("right", right)):
            if not np.all((arr >= 0.0) & (arr <= 1.0)):
                raise DomainError(f"{name} response entries must lie in [0, 1]")
        object.__setattr__(self, "left", left)
        object.__setattr__(self, "right", right)

    @property
    def cardinality(self) -> int:
        return self.left.shape[1]

    @property
    def deterministic(self) -> bool:
        both = np.concatenate([self.left.ravel(), self.right.ravel()])
        return bool(np.all((both == 0.0) | (both == 1.0)))

    @classmethod
    def constant(cls, p: float, k: int = 1) -> "ResponseTable":
        return cls(np.full((2, k), p), np.full((2, k), p))

    @classmethod
    def from_quadruples(cls, quads) -> "ResponseTable":
        """Deterministic table whose lambda-th column reproduces ``quads[lambda]``."""
        bits = np.array([q.as_tuple() if isinstance(q, CounterfactualQuadruple) else q
                         for q in quads], dtype=float)
        return cls(bits[:, 0:2].T, bits[:, 2:4].T)

    @classmethod
    def random(cls, gen: np.random.Generator, k: int = DEFAULT_LAMBDA_CARDINALITY,
               deterministic: bool = False) -> "ResponseTable":
        if deterministic:
            return cls(gen.integers(0, 2, size=(2, k)), gen.integers(0, 2, size=(2, k)))
        return cls(gen.random((2, k)), gen.random((2, k)))

    def to_dict(self) -> dict:
        return {"left": self.left.tolist(), "right": self.right.tolist()}


@dataclass(frozen=True, eq=False)
class ModelSpec:
    """Immutable description of a trial source.

    Use the ``lhv``, ``quantum``, ``signaling`` and ``conspiracy``
    constructors; only the fields that belong to ``kind`` may be set.
    """

    kind: ModelKind
    settings: SettingSet = CANONICAL_SETTINGS
    visibility: Optional[float] = None
    response: Optional[ResponseTable] = None
    lambda_weights: Optional[np.ndarray] = None
    conspiracy_bias: Optional[float] = None
    signaling_strength: Optional[float] = None

    def __post_init__(self):
        kind = self.kind
        uses_lambda = kind is not ModelKind.QUANTUM
        allowed = {
            "visibility": kind is ModelKind.QUANTUM,
            "response": uses_lambda,
            "lambda_weights": uses_lambda,
            "conspiracy_bias": kind is ModelKind.CONSPIRACY,
            "signaling_strength": kind is ModelKind.SIGNALING,
        }
        for name, ok in allowed.items():
            present = getattr(self, name) is not None
            if present and not ok:
                raise DomainError(f"{name} is not a field of {kind.value} models")
        required = [n for n, ok in allowed.items() if ok and n != "lambda_weights"]
        for name in required:
            if getattr(self, name) is None:
                raise DomainError(f"{kind.value} models require {name}")
        for name in ("visibility", "conspiracy_bias", "signaling_strength"):
            v = getattr(self, name)
            if v is not None and not (0.0 <= v <= 1.0):
                raise DomainError(f"{name}={v!r} must lie in [0, 1]")
        if uses_lambda:
            k = self.response.cardinality
            w = np.full(k, 1.0 / k) if self.lambda_weights is None else self.lambda_weights
            w = _frozen(w, "lambda_weights")
            if w.shape != (k,):
                raise DomainError(f"lambda_weights must have length {k}")
            if np.any(w < 0) or abs(w.sum() - 1.0) > _WEIGHT_TOL:
                raise DomainError("lambda_weights must be a probability vector")
            object.__setattr__(self, "lambda_weights", w)
            if kind is ModelKind.LHV_DETERMINISTIC and not self.response.deterministic:
                raise DomainError("deterministic models need 0/1 response entries")

    @property
    def lambda_cardinality(self) -> Optional[int]:
        return None if self.response is None else self.response.cardinality

    # constructors

    @classmethod
    def lhv(cls, response: ResponseTable, lambda_weights=None,
            settings: SettingSet = CANONICAL_SETTINGS) -> "ModelSpec":
        kind = ModelKind.LHV_DETERMINISTIC if response.deterministic else ModelKind.LHV_STOCHASTIC
        return cls(kind, settings, response=response, lambda_weights=lambda_weights)

    @classmethod
    def quantum(cls, visibility: float = 1.0,
                settings: SettingSet = CANONICAL_SETTINGS) -> "ModelSpec":
        return cls(ModelKind.QUANTUM, settings, visibility=visibility)

    @classmethod
    def signaling(cls, strength: float, response: Optional[ResponseTable] = None,
                  lambda_weights=None, settings: SettingSet = CANONICAL_SETTINGS) -> "ModelSpec":
        response = ResponseTable.constant(0.5) if response is None else response
        return cls(ModelKind.SIGNALING, settings, response=response,
                   lambda_weights=lambda_weights, signaling_strength=strength)

    @classmethod
    def conspiracy(cls, bias: float, response: ResponseTable, lambda_weights=None,
                   settings: SettingSet = CANONICAL_SETTINGS) -> "ModelSpec":
        return cls(ModelKind.CONSPIRACY, settings, response=response,
                   lambda_weights=lambda_weights, conspiracy_bias=bias)

    def to_dict(self) -> dict:
        out = {"kind": self.kind.value, "angles": list(self.settings.degrees())}
        for name in ("visibility", "conspiracy_bias", "signaling_strength"):
            if getattr(self, name) is not None:
                out[name] = getattr(self, name)
        if self.response is not None:
            out["response"] = self.response.to_dict()
            out["lambda_weights"] = self.lambda_weights.tolist()
        if self.kind is ModelKind.QUANTUM:
            out["outcome_law"] = "photon-pair cos 2(alpha - beta), implementer-supplied convention"
        return out


# setting choice

@dataclass(frozen=True)
class UniformIid:
    pass


@dataclass(frozen=True)
class ConspiracyBiased:
    """With probability ``bias`` the pair index is ``lambda mod 4``."""

    bias: float

    def __post_init__(self):
        if not (0.0 <= self.bias <= 1.0):
            raise DomainError(f"bias={self.bias!r} must lie in [0, 1]")


SettingPolicy = Union[UniformIid, ConspiracyBiased]


def _pair_indices(policy: SettingPolicy, u_bias: np.ndarray, u_pick: np.ndarray,
                  lam: Optional[np.ndarray]) -> np.ndarray:
    uniform = np.minimum((u_pick * 4).astype(np.int64), 3)
    if isinstance(policy, UniformIid):
        return uniform
    if isinstance(policy, ConspiracyBiased):
        if lam is None:
            raise DomainError("a conspiracy policy needs the hidden variable")
        return np.where(u_bias < policy.bias, np.asarray(lam) % 4, uniform)
    raise DomainError(f"unknown setting policy {policy!r}")


def choose_settings(policy: SettingPolicy, gen: np.random.Generator,
                    settings: SettingSet = CANONICAL_SETTINGS,
                    lam: Optional[int] = None) -> tuple[SettingLabel, SettingLabel]:
    """Draw one (alpha, beta) pair. ``lam`` is only read by conspiracy policies."""
    u = gen.random(2)
    lam_arr = None if lam is None else np.array([lam])
    p = int(_pair_indices(policy, u[:1], u[1:], lam_arr)[0])
    alpha_slot, beta_slot = PAIRS[p]
    return settings.left(alpha_slot), settings.right(beta_slot)


# trial generation

@dataclass(frozen=True, eq=False)
class TrialBatch:
    """Columnar trial log. ``quadruples`` rows are (a, a', b, b') values."""

    settings: SettingSet
    trial_index: np.ndarray
    alpha_slot: np.ndarray
    beta_slot: np.ndarray
    a: np.ndarray
    b: np.ndarray
    quadruples: Optional[np.ndarray] = None
    hidden: Optional[np.ndarray] = None

    def __post_init__(self):
        n = len(self.trial_index)
        for name in ("alpha_slot", "beta_slot", "a", "b"):
            if len(getattr(self, name)) != n:
                raise DomainError(f"column {name} has the wrong length")
        if self.quadruples is not None:
            q = self.quadruples
            if q.shape != (n, 4):
                raise DomainError("quadruples must have shape (n, 4)")
            if n and (np.any(q[np.arange(n), self.alpha_slot] != self.a)
                      or np.any(q[np.arange(n), 2 + self.beta_slot] != self.b)):
                raise DomainError("recorded outcomes disagree with the quadruples")

    def __len__(self) -> int:
        return len(self.trial_index)

    @property
    def pair(self) -> np.ndarray:
        return 2 * self.alpha_slot.astype(np.int64) + self.beta_slot

    def records(self) -> Iterator[TrialRecord]:
        s = self.settings
        for i in range(len(self)):
            yield TrialRecord(int(self.trial_index[i]), s.left(int(self.alpha_slot[i])),
                              s.right(int(self.beta_slot[i])), int(self.a[i]), int(self.b[i]))

    def quadruple_records(self) -> list[CounterfactualQuadruple]:
        if self.quadruples is None:
            raise UnsupportedOperationError("this batch carries no counterfactual values")
        return [CounterfactualQuadruple(*map(int, row)) for row in self.quadruples]

    def take(self, mask_or_index) -> "TrialBatch":
        sel = lambda x: None if x is None else x[mask_or_index]
        return TrialBatch(self.settings, self.trial_index[mask_or_index],
                          self.alpha_slot[mask_or_index], self.beta_slot[mask_or_index],
                          self.a[mask_or_index], self.b[mask_or_index],
                          sel(self.quadruples), sel(self.hidden))

    def equals(self, other: "TrialBatch") -> bool:
        cols = ("trial_index", "alpha_slot", "beta_slot", "a", "b", "quadruples", "hidden")
        for c in cols:
            x, y = getattr(self, c), getattr(other, c)
            if (x is None) != (y is None):
                return False
            if x is not None and (x.dtype != y.dtype or x.tobytes() != y.tobytes()):
                return False
        return self.settings == other.settings


def _sample_lambda(weights: np.ndarray, u: np.ndarray) -> np.ndarray:
    cdf = np.cumsum(weights)
    return np.minimum(np.searchsorted(cdf, u, side="right"), len(weights) - 1)


def _policy_for(spec: ModelSpec) -> SettingPolicy:
    if spec.kind is ModelKind.CONSPIRACY:
        return ConspiracyBiased(spec.conspiracy_bias)
    return UniformIid()


def _generate_chunk(spec: ModelSpec, seed: int, start: int, stop: int,
                    with_quadruples: bool) -> dict:
    n = stop - start
    u_set = _rng.uniforms(seed, "settings", start, stop)
    out = {"trial_index": np.arange(start, stop, dtype=np.int64)}
    lam = None
    if spec.kind is not ModelKind.QUANTUM:
        lam = _sample_lambda(spec.lambda_weights, _rng.uniforms(seed, "lambda", start, stop)[:, 0])
    pair = _pair_indices(_policy_for(spec), u_set[:, 0], u_set[:, 1], lam)
    alpha_slot = (pair >> 1).astype(np.int8)
    beta_slot = (pair & 1).astype(np.int8)
    rows = np.arange(n)

    if spec.kind is ModelKind.QUANTUM:
        u = _rng.uniforms(seed, "source", start, stop)
        deg = np.array(spec.settings.degrees())
        delta = np.radians(deg[alpha_slot] - deg[2 + beta_slot])
        p_same = 0.5 * (1.0 + spec.visibility * np.cos(2.0 * delta))
        a = (u[:, 0] < 0.5).astype(np.int8)
        b = np.where(u[:, 1] < p_same, a, 1 - a).astype(np.int8)
        quads = None
    else:
        u_left = _rng.uniforms(seed, "left", start, stop)
        u_right = _rng.uniforms(seed, "right", start, stop)
        resp = spec.response
        a_both = (u_left[:, :2] < resp.left[:, lam].T).astype(np.int8)
        a = a_both[rows, alpha_slot]
        if spec.kind is ModelKind.SIGNALING:
            s = spec.signaling_strength
            p_right = (1.0 - s) * resp.right[beta_slot, lam] + s * alpha_slot
            b = (u_right[rows, beta_slot] < p_right).astype(np.int8)
            quads = None
        else:
            b_both = (u_right[:, :2] < resp.right[:, lam].T).astype(np.int8)
            b = b_both[rows, beta_slot]
            quads = np.concatenate([a_both, b_both], axis=1) if with_quadruples else None
    out.update(alpha_slot=alpha_slot, beta_slot=beta_slot, a=a, b=b, quadruples=quads,
               hidden=None if lam is None else lam.astype(np.int64))
    return out


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get("BELLLAB_THREADS", "1")))
    except ValueError:
        return 1


def run_trials(spec: ModelSpec, n: int, seed: int, *, quadruples: Optional[bool] = None,
               workers: Optional[int] = None, chunk_size: int = 65536) -> TrialBatch:
    """Generate ``n`` trials from ``spec``.

    The output depends only on ``(spec, n, seed)``: chunks are generated from
    per-trial counter streams and merged by trial index, so ``workers`` and
    ``chunk_size`` never change the result. ``quadruples`` defaults to
    whatever the source supports; requesting them from a source without
    counterfactual values raises :class:`UnsupportedOperationError`.
    """
    if n < 1:
        raise DomainError("n must be at least 1")
    if quadruples is None:
        quadruples = spec.kind.has_counterfactuals
    elif quadruples and not spec.kind.has_counterfactuals:
        raise UnsupportedOperationError(
            f"{spec.kind.value} sources assign no values to unmeasured settings")
    workers = default_workers() if workers is None else max(1, int(workers))
    bounds = [(s, min(s + chunk_size, n)) for s in range(0, n, chunk_size)]
    job = lambda se: _generate_chunk(spec, seed, se[0], se[1], quadruples)
    if workers == 1 or len(bounds) == 1:
        parts = [job(se) for se in bounds]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(job, bounds))
    cat = lambda key: (None if parts[0][key] is None
                       else np.concatenate([p[key] for p in parts]))
    return TrialBatch(spec.settings, cat("trial_index"), cat("alpha_slot"), cat("beta_slot"),
                      cat("a"), cat("b"), cat("quadruples"), cat("hidden"))


# exact oracles

@dataclass(frozen=True)
class PairTerms:
    """Exact P(A=1,B=1|alpha,beta) with the marginals P(A=1|alpha), P(B=1|beta)."""

    p11: float
    p_a: float
    p_b: float


def lhv_exact_terms(spec: ModelSpec, pair: tuple[int, int]) -> PairTerms:
    """Closed-form sums over lambda for a local hidden-variable model.

    ``pair`` is ``(alpha_slot, beta_slot)``.
    """
    if not spec.kind.is_lhv:
        raise UnsupportedOperationError(f"no closed form for {spec.kind.value} sources here")
    alpha_slot, beta_slot = pair
    w = spec.lambda_weights
    pl = spec.response.left[alpha_slot]
    pr = spec.response.right[beta_slot]
    return PairTerms(float(np.sum(w * pl * pr)), float(np.sum(w * pl)), float(np.sum(w * pr)))


def lhv_exact_ch_terms(spec: ModelSpec) -> ChTerms:
    p = [lhv_exact_terms(spec, pr) for pr in PAIRS]
    return ChTerms(p[0].p11, p[1].p11, p[2].p11, p[3].p11, p[0].p_a, p[0].p_b)


def exact_context_distributions(spec: ModelSpec) -> np.ndarray:
    """Exact P(a, b | pair) as a (4, 4) array, columns ordered 00, 01, 10, 11.

    Covers every kind. For conspiracy sources the hidden variable is
    conditioned on the chosen pair.
    """
    deg = spec.settings.degrees()
    out = np.zeros((4, 4))
    for alpha_slot, beta_slot in PAIRS:
        p = pair_index(alpha_slot, beta_slot)
        if spec.kind is ModelKind.QUANTUM:
            c = np.cos(2.0 * np.radians(deg[alpha_slot] - deg[2 + beta_slot]))
            same = 0.25 * (1 + spec.visibility * c)
            diff = 0.25 * (1 - spec.visibility * c)
            out[p] = [same, diff, diff, same]
            continue
        w = spec.lambda_weights.copy()
        if spec.kind is ModelKind.CONSPIRACY:
            lam = np.arange(len(w))
            w = w * (spec.conspiracy_bias * (lam % 4 == p) + (1 - spec.conspiracy_bias) / 4)
            if w.sum() <= 0:
                raise UnsupportedOperationError(f"setting pair {p} is never chosen")
            w = w / w.sum()
        pl = spec.response.left[alpha_slot]
        pr = spec.response.right[beta_slot]
        if spec.kind is ModelKind.SIGNALING:
            s = spec.signaling_strength
            pr = (1 - s) * pr + s * alpha_slot
        out[p] = [np.sum(w * (1 - pl) * (1 - pr)), np.sum(w * (1 - pl) * pr),
                  np.sum(w * pl * (1 - pr)), np.sum(w * pl * pr)]
    return out
