"""Does a joint distribution over the 16 counterfactual quadruples reproduce
the four observed context distributions?

Decided by a dense phase-1 simplex with Bland's rule. Every verdict ships a
certificate: a witness joint distribution, or a Farkas vector ``y`` with
``y @ A <= 0`` and ``y @ b > 0`` for the system ``A q = b, q >= 0``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from belllab.core import PAIR_NAMES, PAIRS, QUADRUPLE_BITS, ChTerms, DomainError, ch_value

DEFAULT_TOL = 1e-9
MAX_ITERATIONS = 5000
FARKAS_SLACK = 1e-9
FARKAS_MARGIN = 1e-6
_DIST_TOL = 1e-9
_PIVOT_TOL = 1e-12
_COST_TOL = 1e-12


class SolverFailure(RuntimeError):
    """The simplex hit its iteration cap or could not certify its verdict."""

    def __init__(self, message: str, trace: list):
        super().__init__(message)
        self.trace = trace


@dataclass(frozen=True, eq=False)
class ContextDistributions:
    """P(a, b | pair), shape (4 pairs, 4 outcomes ordered 00, 01, 10, 11)."""

    probs: np.ndarray
    projected: bool = False

    def __post_init__(self):
        p = np.array(self.probs, dtype=float)
        if p.shape != (4, 4):
            raise DomainError("context distributions must have shape (4, 4)")
        if not np.all(np.isfinite(p)) or np.any(p < 0):
            raise DomainError("context probabilities must be finite and non-negative")
        bad = np.flatnonzero(np.abs(p.sum(axis=1) - 1.0) > _DIST_TOL)
        if bad.size:
            raise DomainError(f"context {PAIR_NAMES[bad[0]]} does not sum to 1")
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    @classmethod
    def project(cls, raw) -> "ContextDistributions":
        """Clip negatives and renormalize each context; records whether anything moved."""
        raw = np.array(raw, dtype=float)
        if raw.shape != (4, 4) or not np.all(np.isfinite(raw)):
            raise DomainError("context distributions must be a finite (4, 4) array")
        p = np.clip(raw, 0.0, None)
        sums = p.sum(axis=1, keepdims=True)
        if np.any(sums <= 0):
            raise DomainError("a context has no probability mass")
        p = p / sums
        return cls(p, projected=not np.allclose(p, raw, rtol=0.0, atol=1e-15))

    @classmethod
    def from_counts(cls, counts) -> "ContextDistributions":
        return cls.project(counts.probabilities())

    def to_dict(self) -> dict:
        return {PAIR_NAMES[i]: self.probs[i].tolist() for i in range(4)}


def ch_from_contexts(dists: ContextDistributions) -> float:
    """Space-1 CH value with marginals taken from the (a, b) context."""
    p = dists.probs
    terms = ChTerms(*np.clip([p[0, 3], p[1, 3], p[2, 3], p[3, 3],
                              p[0, 2] + p[0, 3], p[0, 1] + p[0, 3]], 0.0, 1.0))
    return ch_value(terms)


def marginal_constraints(dists: ContextDistributions) -> tuple[np.ndarray, np.ndarray]:
    """Rows 0..15: pair-major, outcome-minor marginal equations; row 16: sum q = 1."""
    if not isinstance(dists, ContextDistributions):
        dists = ContextDistributions(dists)
    A = np.zeros((17, 16))
    b = np.zeros(17)
    for p, (alpha_slot, beta_slot) in enumerate(PAIRS):
        left = QUADRUPLE_BITS[:, alpha_slot]
        right = QUADRUPLE_BITS[:, 2 + beta_slot]
        for x in (0, 1):
            for y in (0, 1):
                r = 4 * p + 2 * x + y
                A[r] = (left == x) & (right == y)
                b[r] = dists.probs[p, 2 * x + y]
    A[16] = 1.0
    b[16] = 1.0
    return A, b


@dataclass
class PhaseOneResult:
    objective: float
    x: np.ndarray          # primal values of the structural columns
    y: np.ndarray          # duals of the original rows
    basis: list
    iterations: int
    trace: list = field(default_factory=list)


def phase_one(A: np.ndarray, b: np.ndarray, max_iterations: int = MAX_ITERATIONS) -> PhaseOneResult:
    """Minimise the sum of artificials for ``A x = b, x >= 0``.

    Tableau simplex, Bland's rule for both entering and leaving choices.
    """
    A = np.array(A, dtype=float)
    b = np.array(b, dtype=float)
    m, n = A.shape
    sign = np.where(b < 0, -1.0, 1.0)
    T = np.hstack([A * sign[:, None], np.eye(m)])
    rhs = b * sign
    cost = np.concatenate([np.zeros(n), np.ones(m)])
    basis = list(range(n, n + m))
    trace = []
    for it in range(max_iterations + 1):
        reduced = cost - cost[basis] @ T
        objective = float(cost[basis] @ rhs)
        entering = next((j for j in range(n + m) if reduced[j] < -_COST_TOL), None)
        if entering is None:
            x = np.zeros(n + m)
            x[basis] = rhs
            y = (cost[basis] @ T[:, n:]) * sign
            return PhaseOneResult(objective, x[:n], y, basis, it, trace)
        if it == max_iterations:
            break
        col = T[:, entering]
        rows = np.flatnonzero(col > _PIVOT_TOL)
        if rows.size == 0:
            raise SolverFailure("phase-1 objective unbounded; numerical breakdown", trace)
        ratios = rhs[rows] / col[rows]
        best = ratios.min()
        ties = rows[ratios <= best + 1e-14 * max(1.0, abs(best))]
        leave = min(ties, key=lambda r: basis[r])
        trace.append({"iteration": it, "entering": int(entering),
                      "leaving": int(basis[leave]), "objective": objective})
        piv = T[leave, entering]
        T[leave] /= piv
        rhs[leave] /= piv
        for r in range(m):
            if r != leave and T[r, entering] != 0.0:
                f = T[r, entering]
                T[r] -= f * T[leave]
                rhs[r] -= f * rhs[leave]
        rhs[rhs < 0] = np.maximum(rhs[rhs < 0], -1e-15)
        basis[leave] = entering
    raise SolverFailure(f"simplex exceeded {max_iterations} iterations", trace)


class Verdict(enum.Enum):
    FEASIBLE = "feasible"
    INFEASIBLE = "infeasible"


@dataclass(frozen=True, eq=False)
class FeasibilityCertificate:
    verdict: Verdict
    residual: float
    objective: float
    iterations: int
    witness: Optional[np.ndarray] = None
    farkas: Optional[np.ndarray] = None
    projected: bool = False

    @property
    def feasible(self) -> bool:
        return self.verdict is Verdict.FEASIBLE

    def to_dict(self) -> dict:
        out = {"verdict": self.verdict.value, "residual": self.residual,
               "phase1_objective": self.objective, "iterations": self.iterations,
               "projected_input": self.projected}
        if self.witness is not None:
            out["witness"] = {"".join(map(str, QUADRUPLE_BITS[k])): float(self.witness[k])
                              for k in range(16)}
        if self.farkas is not None:
            out["farkas"] = self.farkas.tolist()
        return out


def _polish(A: np.ndarray, b: np.ndarray, q: np.ndarray) -> np.ndarray:
    support = np.flatnonzero(q > 0)
    if support.size == 0:
        return q
    sol, *_ = np.linalg.lstsq(A[:, support], b, rcond=None)
    if np.all(sol >= 0):
        out = np.zeros_like(q)
        out[support] = sol
        if np.abs(A @ out - b).max() <= np.abs(A @ q - b).max():
            return out
    return q


def _farkas_valid(y: np.ndarray, A: np.ndarray, b: np.ndarray) -> bool:
    return bool(np.all(y @ A <= FARKAS_SLACK) and y @ b >= FARKAS_MARGIN)


def solve_feasibility(dists: ContextDistributions, tol: float = DEFAULT_TOL,
                      max_iterations: int = MAX_ITERATIONS) -> FeasibilityCertificate:
    """Feasible iff the phase-1 minimum (the L1 norm of the equation
    residuals) is at most ``tol`` per equation, and the extracted witness
    meets every equation to within ``tol``.

    Raises :class:`SolverFailure` when the iteration cap is hit or when the
    verdict cannot be backed by a passing certificate.
    """
    if not 1e-12 <= tol <= 1e-6:
        raise DomainError("tol must lie in [1e-12, 1e-6]")
    A, b = marginal_constraints(dists)
    res = phase_one(A, b, max_iterations)
    if res.objective <= tol * A.shape[0]:
        q = np.where(res.x < 0, 0.0, res.x)
        q = _polish(A, b, q)
        residual = float(np.abs(A @ q - b).max())
        if not verify_witness(q, dists, tol):
            raise SolverFailure(f"witness residual {residual:.3g} exceeds tolerance", res.trace)
        return FeasibilityCertificate(Verdict.FEASIBLE, residual, res.objective, res.iterations,
                                      witness=q, projected=dists.projected)
    y = res.y / (res.y @ b)
    if not _farkas_valid(y, A, b):
        raise SolverFailure("could not certify infeasibility (borderline instance)", res.trace)
    residual = float(max(0.0, (y @ A).max()))
    return FeasibilityCertificate(Verdict.INFEASIBLE, residual, res.objective, res.iterations,
                                  farkas=y, projected=dists.projected)


def verify_witness(q, dists: ContextDistributions, tol: float = DEFAULT_TOL) -> bool:
    q = np.asarray(q, dtype=float)
    if q.shape != (16,) or np.any(q < -1e-12) or abs(q.sum() - 1.0) > tol:
        return False
    A, b = marginal_constraints(dists)
    return bool(np.abs(A @ q - b).max() <= tol)


def farkas_check(y, dists: ContextDistributions) -> bool:
    y = np.asarray(y, dtype=float)
    A, b = marginal_constraints(dists)
    if y.shape != (A.shape[0],):
        raise DomainError(f"Farkas vector must have length {A.shape[0]}, got {y.shape}")
    return _farkas_valid(y, A, b)


def witness_terms(q) -> ChTerms:
    """CH terms induced by a joint distribution over quadruples."""
    q = np.asarray(q, dtype=float)
    a0, a1, b0, b1 = QUADRUPLE_BITS.T.astype(float)
    vals = [q @ (a0 * b0), q @ (a0 * b1), q @ (a1 * b0), q @ (a1 * b1), q @ a0, q @ b0]
    return ChTerms(*np.clip(vals, 0.0, 1.0))


@dataclass(frozen=True, eq=False)
class RelaxedCertificate:
    """Verdict for the system with each marginal equation loosened to +- k sigma."""

    verdict: Verdict
    k_sigma: float
    sigma: np.ndarray
    objective: float
    witness: Optional[np.ndarray] = None
    max_abs_deviation: Optional[float] = None
    farkas: Optional[np.ndarray] = None

    def to_dict(self) -> dict:
        out = {"verdict": self.verdict.value, "k_sigma": self.k_sigma,
               "phase1_objective": self.objective,
               "convention": "implementer-supplied finite-sample relaxation"}
        if self.witness is not None:
            out["witness"] = self.witness.tolist()
            out["max_abs_deviation"] = self.max_abs_deviation
        if self.farkas is not None:
            out["farkas"] = self.farkas.tolist()
        return out


def relaxed_system(dists: ContextDistributions, n_pair, k_sigma: float = 3.0):
    """Equality form of |A q - b| <= k sigma with slack pairs.

    Variables: q (16), s+ (16), s- (16), t+ (16), t- (16).
    sigma per equation is the binomial sd sqrt(p (1 - p) / n) of its context.
    """
    A0, b0 = marginal_constraints(dists)
    n_pair = np.asarray(n_pair, dtype=float)
    if n_pair.shape != (4,) or np.any(n_pair <= 0):
        raise DomainError("n_pair must hold four positive sample sizes")
    p = b0[:16]
    sigma = np.sqrt(p * (1 - p) / np.repeat(n_pair, 4))
    I = np.eye(16)
    Z = np.zeros((16, 16))
    A = np.block([[A0[:16], I, -I, Z, Z],
                  [Z, I, Z, I, Z],
                  [Z, Z, I, Z, I],
                  [np.concatenate([np.ones(16), np.zeros(64)])[None, :]]])
    b = np.concatenate([p, k_sigma * sigma, k_sigma * sigma, [1.0]])
    return A, b, sigma


def solve_feasibility_relaxed(dists: ContextDistributions, n_pair, k_sigma: float = 3.0,
                              tol: float = DEFAULT_TOL) -> RelaxedCertificate:
    A, b, sigma = relaxed_system(dists, n_pair, k_sigma)
    res = phase_one(A, b)
    if res.objective <= tol * A.shape[0]:
        q = np.clip(res.x[:16], 0.0, None)
        A0, b0 = marginal_constraints(dists)
        dev = float(np.abs(A0[:16] @ q - b0[:16]).max())
        return RelaxedCertificate(Verdict.FEASIBLE, k_sigma, sigma, res.objective,
                                  witness=q, max_abs_deviation=dev)
    y = res.y / (res.y @ b)
    if not _farkas_valid(y, A, b):
        raise SolverFailure("could not certify relaxed infeasibility", res.trace)
    return RelaxedCertificate(Verdict.INFEASIBLE, k_sigma, sigma, res.objective, farkas=y)
