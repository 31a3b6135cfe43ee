import numpy as np
import pytest

from belllab.core import DomainError, InsufficientDataError, SettingSet
from belllab.frequentist import (
    STANDARD_RULES,
    Collective,
    SelectionRule,
    TermSource,
    apply_selection,
    build_collectives,
    collective_compatibility_guard,
    convergence_diagnostic,
    randomness_diagnostic,
    space1_request,
    space2_request,
)
from belllab.models import ModelSpec, TrialBatch, run_trials


def _pairs_batch(pairs):
    pairs = np.asarray(pairs)
    n = len(pairs)
    ones = np.ones(n, dtype=np.int8)
    return TrialBatch(SettingSet.from_degrees(0, 45, 0, 45), np.arange(n),
                      (pairs >> 1).astype(np.int8), (pairs & 1).astype(np.int8), ones, ones)


def test_build_collectives_two_per_pair():
    cols = build_collectives(_pairs_batch([0, 1, 2, 3, 3, 2, 1, 0]))
    assert [len(c) for c in cols.values()] == [2, 2, 2, 2]


def test_build_collectives_uniform_lengths():
    batch = run_trials(ModelSpec.quantum(1.0), 100_000, seed=0)
    cols = build_collectives(batch)
    assert all(abs(len(c) - 25_000) <= 411 for c in cols.values())
    assert sum(len(c) for c in cols.values()) == len(batch)


def test_build_collectives_single_pair():
    cols = build_collectives(_pairs_batch([0] * 9))
    assert [len(c) for c in cols.values()] == [9, 0, 0, 0]


def test_build_collectives_preserves_order():
    batch = run_trials(ModelSpec.quantum(0.5), 2000, seed=1)
    cols = build_collectives(batch)
    sel = batch.pair == 2
    assert np.array_equal(cols["apb"].attributes[:, 0], batch.a[sel])


def test_convergence_iid_stabilizes():
    for seed in range(10):
        bits = np.random.default_rng(seed).integers(0, 2, 100_000)
        d = convergence_diagnostic(Collective.from_stream(bits), eps=0.01, tail_fraction=0.2)
        assert d.stabilized and d.n_star is not None and d.n_star <= 80_000
        assert len(d.trajectory) == 100_000


def test_convergence_constant_stream():
    d = convergence_diagnostic(Collective.from_stream(np.ones(500)), eps=1e-9)
    assert d.stabilized and d.tail_deviation == 0 and d.n_star == 1


def test_convergence_half_and_half():
    bits = np.r_[np.ones(50_000), np.zeros(50_000)]
    d = convergence_diagnostic(Collective.from_stream(bits), eps=0.01, tail_fraction=0.2)
    # running mean goes from 50000/80000 = 0.625 to 0.5 across the tail
    assert not d.stabilized
    assert d.tail_deviation == pytest.approx(0.125, abs=1e-4)


def test_convergence_preconditions():
    with pytest.raises(InsufficientDataError):
        convergence_diagnostic(Collective.from_stream(np.ones(99)))
    c = Collective.from_stream(np.ones(200))
    with pytest.raises(DomainError):
        convergence_diagnostic(c, tail_fraction=1.0)
    with pytest.raises(DomainError):
        convergence_diagnostic(c, eps=0)


def test_even_positions():
    c = Collective.from_stream(np.arange(10) % 2)  # positions 1..10 hold 0,1,0,1,...
    sub = apply_selection(c, SelectionRule.even_positions())
    assert len(sub) == 5 and np.all(sub.attributes == 1)
    assert np.array_equal(apply_selection(c, SelectionRule.every_kth(2)).attributes, sub.attributes)


def test_even_positions_twice_is_every_fourth():
    c = Collective("ab", np.random.default_rng(0).integers(0, 2, (1001, 2)))
    twice = apply_selection(apply_selection(c, SelectionRule.even_positions()),
                            SelectionRule.even_positions())
    assert np.array_equal(twice.attributes, apply_selection(c, SelectionRule.every_kth(4)).attributes)


def test_after_attribute():
    c = Collective("ab", [(1, 1), (0, 0), (1, 1), (1, 1)])
    sub = apply_selection(c, SelectionRule.after_attribute((1, 1)))
    assert sub.attributes.tolist() == [[0, 0], [1, 1]]


def test_rule_validation():
    with pytest.raises(DomainError):
        SelectionRule.every_kth(1)
    with pytest.raises(DomainError):
        SelectionRule.after_attribute((2, 0))


def test_randomness_iid_no_flags():
    for seed in range(10):
        bits = np.random.default_rng(seed).integers(0, 2, 100_000)
        res = randomness_diagnostic(Collective.from_stream(bits), STANDARD_RULES, eps=0.02)
        assert not any(r.flagged or r.insufficient for r in res)


def test_randomness_alternating_flagged():
    c = Collective.from_stream(np.arange(1000) % 2)
    res = randomness_diagnostic(c, [SelectionRule.even_positions()], eps=0.02)
    assert res[0].flagged and res[0].sub_frequency == 1.0


def test_randomness_constant_no_flags():
    res = randomness_diagnostic(Collective.from_stream(np.ones(5000)), STANDARD_RULES)
    assert not any(r.flagged for r in res)


def test_randomness_short_subsequence_marked():
    res = randomness_diagnostic(Collective.from_stream(np.ones(300)), [SelectionRule.every_kth(5)])
    assert res[0].insufficient and not res[0].flagged


def test_guard_space1_admissible():
    assert collective_compatibility_guard(space1_request()).admissible


def test_guard_space2_violation():
    v = collective_compatibility_guard(space2_request())
    assert not v.admissible and v.citation == "single-collective-addition"
    assert len(v.details) == 4


def test_guard_single_term():
    assert collective_compatibility_guard([TermSource("p11_ab", "abp", False)]).admissible


def test_guard_unknown_label():
    with pytest.raises(DomainError):
        collective_compatibility_guard([TermSource("p11_ab", "xy", True)])


def test_guard_ignores_values():
    # The request carries no numbers; equal structure gives equal verdicts.
    req = space2_request()
    assert collective_compatibility_guard(req) == collective_compatibility_guard(list(req))
