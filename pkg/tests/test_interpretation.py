import itertools

import pytest

from belllab.core import ChTerms
from belllab.estimators import ChEvaluation, Space
from belllab.interpretation import (
    CITATIONS,
    DECISION_TABLE,
    ContractError,
    ExperimentFlags,
    Hypothesis,
    InterpretationMode as M,
    Status,
    admissibility,
    blame,
)

ALL_FLAGS = [ExperimentFlags(s, e) for s, e in itertools.product((False, True), repeat=2)]
T = ChTerms(0.5, 0.5, 0.5, 0.5, 0.5, 0.5)


def _ev(s, stderr, space):
    return ChEvaluation(s, stderr, T, space, {})


def test_frequentist_refuses_space2():
    for f in ALL_FLAGS:
        v = admissibility(M.FREQUENTIST_VON_MISES, f)
        assert v.space1.status is Status.ADMISSIBLE
        assert v.space2.status is Status.INADMISSIBLE
        assert v.space2.citations == ("single-collective-addition",)


def test_single_case_needs_spacelike_separation():
    for f in ALL_FLAGS:
        v = admissibility(M.SINGLE_CASE_PROPENSITY, f)
        assert v.space2.runnable == f.spacelike_separated
        assert "single-case-reduction" in v.notes
        if f.spacelike_separated:
            assert v.space2.status is Status.CONDITIONALLY_ADMISSIBLE
            assert v.space2.required_flag == "spacelike_separated"


def test_long_run_both_admissible():
    v = admissibility(M.LONG_RUN_PROPENSITY, ExperimentFlags(False, False))
    assert v.space1.status is Status.ADMISSIBLE and v.space2.status is Status.ADMISSIBLE


def test_citations_registered_and_nonempty():
    for row in DECISION_TABLE:
        for entry in (row.space1, row.space2):
            assert entry.citations
            assert all(c in CITATIONS for c in entry.citations)
        assert all(n in CITATIONS for n in row.notes)


def test_blame_space1_frequentist():
    v = admissibility(M.FREQUENTIST_VON_MISES, ExperimentFlags())
    r = blame(M.FREQUENTIST_VON_MISES, v, {Space.SPACE1: _ev(0.2, 0.003, Space.SPACE1)})
    assert r.spaces[Space.SPACE1].candidate_rejections == (
        Hypothesis.LAMBDA_INDEPENDENCE, Hypothesis.LOCALITY, Hypothesis.KOLMOGOROV_AXIOMS)
    assert r.common_explanation_note is None


def test_blame_long_run_both_violated():
    v = admissibility(M.LONG_RUN_PROPENSITY, ExperimentFlags())
    r = blame(M.LONG_RUN_PROPENSITY, v, {Space.SPACE1: _ev(0.2, 0.003, Space.SPACE1),
                                          Space.SPACE2: _ev(0.1, 0.003, Space.SPACE2)})
    assert r.common_explanation_note == "common-explanation-probability"
    assert Hypothesis.LOCALITY not in r.spaces[Space.SPACE2].candidate_rejections
    assert Hypothesis.JOINT_PROBABILITY_EXISTENCE in r.spaces[Space.SPACE2].candidate_rejections


def test_blame_nothing_violated():
    v = admissibility(M.KOLMOGOROV_AXIOMATIC, ExperimentFlags())
    r = blame(M.KOLMOGOROV_AXIOMATIC, v, {Space.SPACE1: _ev(-0.5, 0.01, Space.SPACE1),
                                           Space.SPACE2: _ev(0.0, 0.0, Space.SPACE2)})
    assert all(not b.violated and b.candidate_rejections == () for b in r.spaces.values())


def test_blame_threshold_in_sigma():
    v = admissibility(M.KOLMOGOROV_AXIOMATIC, ExperimentFlags())
    ev = _ev(0.02, 0.01, Space.SPACE1)
    assert not blame(M.KOLMOGOROV_AXIOMATIC, v, {Space.SPACE1: ev}).spaces[Space.SPACE1].violated
    assert blame(M.KOLMOGOROV_AXIOMATIC, v, {Space.SPACE1: ev}, sigma=1.5).spaces[Space.SPACE1].violated
    low = _ev(-1.2, 0.01, Space.SPACE2)
    assert blame(M.KOLMOGOROV_AXIOMATIC, v, {Space.SPACE2: low}).spaces[Space.SPACE2].violated


def test_blame_refuses_inadmissible_evaluation():
    v = admissibility(M.FREQUENTIST_VON_MISES, ExperimentFlags())
    with pytest.raises(ContractError):
        blame(M.FREQUENTIST_VON_MISES, v, {Space.SPACE2: _ev(0.1, 0.01, Space.SPACE2)})


@pytest.mark.parametrize("mode", list(M))
def test_never_blames_locality_for_space2(mode):
    for f in ALL_FLAGS:
        v = admissibility(mode, f)
        if not v.space2.runnable:
            continue
        r = blame(mode, v, {Space.SPACE2: _ev(0.3, 0.001, Space.SPACE2)})
        assert Hypothesis.LOCALITY not in r.spaces[Space.SPACE2].candidate_rejections
