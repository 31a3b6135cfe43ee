"""Which inequality evaluations each interpretation of probability permits,
and which hypotheses an observed violation puts in question.

The admissibility table is a data registry (``DECISION_TABLE``); reasons are
always keys into ``CITATIONS``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Mapping, Optional

from belllab.estimators import ChEvaluation, Space

TABLE_VERSION = "1"


class InterpretationMode(enum.Enum):
    KOLMOGOROV_AXIOMATIC = "kolmogorov"
    FREQUENTIST_VON_MISES = "frequentist"
    SINGLE_CASE_PROPENSITY = "single_case_propensity"
    LONG_RUN_PROPENSITY = "long_run_propensity"


class Hypothesis(enum.Enum):
    KOLMOGOROV_AXIOMS = "kolmogorov_axioms"
    LAMBDA_INDEPENDENCE = "lambda_independence"
    LOCALITY = "locality"
    JOINT_PROBABILITY_EXISTENCE = "joint_probability_existence"
    PROBABILITY_SPACE_CHOICE = "probability_space_choice"


class Status(enum.Enum):
    ADMISSIBLE = "admissible"
    INADMISSIBLE = "inadmissible"
    CONDITIONALLY_ADMISSIBLE = "conditionally_admissible"


@dataclass(frozen=True)
class ExperimentFlags:
    spacelike_separated: bool = False
    conditions_exhaustive: bool = False


#: Grounds a verdict may cite. Keys are stable identifiers used in reports.
CITATIONS: Mapping[str, str] = {
    "kolmogorov-both-spaces":
        "Under the probability axioms alone both sample spaces describe the experiment.",
    "space1-observable-outcomes":
        "Every run yields one element of the (A, alpha, B, beta) space; nothing counterfactual is used.",
    "single-collective-addition":
        "Probabilities may be added only within a single collective; the joint terms of the "
        "counterfactual inequality come from four mutually exclusive setting contexts.",
    "single-case-setting-conditionals":
        "A single-case propensity is conditioned on the full situation, which includes the "
        "setting choice; the four joint terms then carry different conditions.",
    "single-case-light-cone":
        "Conditioning on the situation within the light cone lets spacelike-separated runs "
        "share one conditioning set for every term.",
    "single-case-reduction":
        "The conditioning sets S, S' are reduced here to the spacelike_separated flag.",
    "long-run-nonexhaustive":
        "Long-run propensities need not list exhaustive conditions, so one conditioning set "
        "serves every term.",
    "space1-local-explanations":
        "A space-1 violation can be blamed on lambda-independence or locality, or on the axioms.",
    "space2-probability-explanations":
        "A space-2 violation needs a probability-level explanation: no joint distribution, "
        "the wrong sample space, or failing axioms; locality does not enter its derivation.",
    "common-explanation-probability":
        "If one reason is to explain both violations it must concern probability itself.",
}


@dataclass(frozen=True)
class Entry:
    status: Status
    citations: tuple[str, ...] = ()
    required_flag: Optional[str] = None

    @property
    def runnable(self) -> bool:
        return self.status is not Status.INADMISSIBLE

    def to_dict(self) -> dict:
        out = {"status": self.status.value, "citations": list(self.citations)}
        if self.required_flag:
            out["required_flag"] = self.required_flag
        return out


@dataclass(frozen=True)
class TableRow:
    """``None`` in a flag column matches either value."""

    mode: InterpretationMode
    spacelike_separated: Optional[bool]
    space1: Entry
    space2: Entry
    notes: tuple[str, ...] = ()


_A = Status.ADMISSIBLE
_S1_OK = Entry(_A, ("space1-observable-outcomes",))

DECISION_TABLE: tuple[TableRow, ...] = (
    TableRow(InterpretationMode.KOLMOGOROV_AXIOMATIC, None,
             _S1_OK, Entry(_A, ("kolmogorov-both-spaces",))),
    TableRow(InterpretationMode.FREQUENTIST_VON_MISES, None,
             _S1_OK, Entry(Status.INADMISSIBLE, ("single-collective-addition",))),
    TableRow(InterpretationMode.SINGLE_CASE_PROPENSITY, True,
             _S1_OK, Entry(Status.CONDITIONALLY_ADMISSIBLE, ("single-case-light-cone",),
                           required_flag="spacelike_separated"),
             notes=("single-case-reduction",)),
    TableRow(InterpretationMode.SINGLE_CASE_PROPENSITY, False,
             _S1_OK, Entry(Status.INADMISSIBLE, ("single-case-setting-conditionals",)),
             notes=("single-case-reduction",)),
    TableRow(InterpretationMode.LONG_RUN_PROPENSITY, None,
             _S1_OK, Entry(_A, ("long-run-nonexhaustive",))),
)


@dataclass(frozen=True)
class AdmissibilityVerdict:
    mode: InterpretationMode
    flags: ExperimentFlags
    space1: Entry
    space2: Entry
    notes: tuple[str, ...] = ()
    table_version: str = TABLE_VERSION

    @property
    def citations(self) -> tuple[str, ...]:
        return tuple(dict.fromkeys(self.space1.citations + self.space2.citations + self.notes))

    def entry(self, space: Space) -> Entry:
        return self.space1 if space is Space.SPACE1 else self.space2

    def to_dict(self) -> dict:
        return {"mode": self.mode.value, "flags": self.flags.__dict__,
                "space1": self.space1.to_dict(), "space2": self.space2.to_dict(),
                "notes": list(self.notes), "citations": list(self.citations),
                "table_version": self.table_version}


def admissibility(mode: InterpretationMode, flags: ExperimentFlags) -> AdmissibilityVerdict:
    for row in DECISION_TABLE:
        if row.mode is mode and row.spacelike_separated in (None, flags.spacelike_separated):
            return AdmissibilityVerdict(mode, flags, row.space1, row.space2, row.notes)
    raise LookupError(f"decision table has no row for {mode} {flags}")  # pragma: no cover


class ContractError(RuntimeError):
    """Blame was requested for an evaluation that should never have run."""


SPACE1_CANDIDATES = (Hypothesis.LAMBDA_INDEPENDENCE, Hypothesis.LOCALITY,
                     Hypothesis.KOLMOGOROV_AXIOMS)
SPACE2_CANDIDATES = (Hypothesis.JOINT_PROBABILITY_EXISTENCE,
                     Hypothesis.PROBABILITY_SPACE_CHOICE, Hypothesis.KOLMOGOROV_AXIOMS)


@dataclass(frozen=True)
class SpaceBlame:
    space: Space
    s: float
    stderr: float
    violated: bool
    candidate_rejections: tuple[Hypothesis, ...]
    citation: Optional[str] = None

    def to_dict(self) -> dict:
        return {"s": float(self.s), "stderr": float(self.stderr), "violated": bool(self.violated),
                "candidate_rejections": [h.value for h in self.candidate_rejections],
                "citation": self.citation}


@dataclass(frozen=True)
class BlameReport:
    mode: InterpretationMode
    sigma: float
    spaces: dict = field(default_factory=dict)
    common_explanation_note: Optional[str] = None

    def to_dict(self) -> dict:
        return {"mode": self.mode.value, "sigma": self.sigma,
                "evaluations": {s.value: b.to_dict() for s, b in self.spaces.items()},
                "common_explanation_note": self.common_explanation_note}


def blame(mode: InterpretationMode, verdict: AdmissibilityVerdict,
          evals: Mapping[Space, ChEvaluation], sigma: float = 3.0) -> BlameReport:
    """Name the hypotheses a violation calls into question.

    A violation means s leaves [-1, 0] by more than ``sigma`` standard
    errors. Passing an evaluation for an inadmissible space is a
    :class:`ContractError`.
    """
    if verdict.mode is not mode:
        raise ContractError("verdict was computed for a different interpretation")
    spaces = {}
    for space, ev in evals.items():
        if ev is None:
            continue
        if not verdict.entry(space).runnable:
            raise ContractError(f"{space.value} is inadmissible under {mode.value}")
        v = ev.violated(sigma)
        if space is Space.SPACE1:
            cand, cite = SPACE1_CANDIDATES, "space1-local-explanations"
        else:
            cand, cite = SPACE2_CANDIDATES, "space2-probability-explanations"
        spaces[space] = SpaceBlame(space, ev.s, ev.stderr, v, cand if v else (),
                                   cite if v else None)
    note = None
    if (len(spaces) == 2 and all(b.violated for b in spaces.values())
            and verdict.space1.runnable and verdict.space2.runnable):
        note = "common-explanation-probability"
    return BlameReport(mode, sigma, spaces, note)
