import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from belllab.core import InsufficientDataError, SettingSet
from belllab.estimators import (
    SettingCounts,
    Space,
    accumulate,
    no_signaling_report,
    space1_ch,
    space2_ch,
)
from belllab.models import ModelSpec, ResponseTable, TrialBatch, run_trials

QUANTUM_CH = (math.sqrt(2) - 1) / 2


def _batch(pairs, outcomes):
    pairs = np.asarray(pairs)
    outcomes = np.asarray(outcomes)
    n = len(pairs)
    return TrialBatch(SettingSet.from_degrees(0, 45, 22.5, -22.5), np.arange(n),
                      (pairs >> 1).astype(np.int8), (pairs & 1).astype(np.int8),
                      outcomes[:, 0].astype(np.int8), outcomes[:, 1].astype(np.int8))


def test_accumulate_one_per_pair():
    c = accumulate(_batch([0, 1, 2, 3], [(1, 1)] * 4))
    assert np.array_equal(c.n_pair, [1, 1, 1, 1])
    assert np.array_equal(c.counts[:, 3], [1, 1, 1, 1])


def test_accumulate_constant_model():
    c = accumulate(run_trials(ModelSpec.lhv(ResponseTable.constant(1.0)), 100, seed=0))
    assert c.counts[:, 3].sum() == 100 and c.total == 100


def test_accumulate_quantum_pair_totals():
    # 3 sigma multinomial bound: 3 * sqrt(400000 * 0.25 * 0.75) = 822 <= 900
    c = accumulate(run_trials(ModelSpec.quantum(1.0), 400_000, seed=1))
    assert np.all(np.abs(c.n_pair - 100_000) <= 900)


def test_accumulate_order_invariant_and_mergeable():
    batch = run_trials(ModelSpec.quantum(0.7), 10_000, seed=3)
    perm = np.random.default_rng(0).permutation(len(batch))
    assert accumulate(batch.take(perm)) == accumulate(batch)
    assert accumulate(batch.take(slice(0, 4000))) + accumulate(batch.take(slice(4000, None))) \
        == accumulate(batch)
    with pytest.raises(InsufficientDataError):
        accumulate(batch.take(slice(0, 0)))


def test_space1_degenerate():
    ev = space1_ch(accumulate(run_trials(ModelSpec.lhv(ResponseTable.constant(1.0)), 400, seed=0)))
    assert ev.s == 0 and ev.stderr == 0 and ev.space is Space.SPACE1


def test_space1_quantum_canonical():
    ev = space1_ch(accumulate(run_trials(ModelSpec.quantum(1.0), 400_000, seed=2)))
    assert abs(ev.s - QUANTUM_CH) <= 3 * ev.stderr
    # delta method with independent terms at these proportions
    p = [oracles.coincidence(0, 22.5)] * 3 + [oracles.coincidence(45, -22.5), 0.5, 0.5]
    approx_se = math.sqrt(sum(x * (1 - x) for x in p) / 100_000)
    assert ev.stderr == pytest.approx(approx_se, rel=0.02)


def test_space1_stochastic_half():
    ev = space1_ch(accumulate(run_trials(ModelSpec.lhv(ResponseTable.constant(0.5, 4)),
                                         200_000, seed=4)))
    assert abs(ev.s - (-0.5)) <= 3 * ev.stderr


def test_space1_missing_pair_named():
    c = SettingCounts(np.array([[1, 0, 0, 0], [1, 0, 0, 0], [0, 0, 0, 0], [1, 0, 0, 0]]))
    with pytest.raises(InsufficientDataError, match="apb"):
        space1_ch(c)


def test_space1_pooled_marginals_option():
    c = SettingCounts(np.array([[10, 0, 0, 10], [0, 10, 10, 0], [10, 0, 10, 0], [5, 5, 5, 5]]))
    assert space1_ch(c).terms.pA_a == 0.5 and space1_ch(c).terms.pB_b == 0.5
    pooled = space1_ch(c, pool_marginals=True)
    assert pooled.terms.pA_a == 0.5 and pooled.n_effective["pA_a"] == 40
    assert pooled.terms.pB_b == 0.25


def test_space2_examples():
    assert space2_ch([(1, 1, 1, 1)] * 5).s == 0
    ev = space2_ch([(1, 0, 0, 1)] * 3)
    t = ev.terms
    assert (t.p11_ab, t.p11_abp, t.p11_apb, t.p11_apbp, t.pA_a, t.pB_b) == (0, 1, 0, 0, 1, 0)
    assert ev.s == 0
    uniform = space2_ch(list(itertools.product((0, 1), repeat=4)))
    brute = sum(oracles.vertex_ch(v) for v in oracles.VERTICES) / 16
    assert brute == -0.5 and uniform.s == pytest.approx(brute, abs=1e-15)
    with pytest.raises(InsufficientDataError):
        space2_ch([])


@settings(max_examples=200)
@given(st.lists(st.tuples(*[st.integers(0, 1)] * 4), min_size=1, max_size=60))
def test_space2_always_bounded(quads):
    ev = space2_ch(quads)
    assert -1 - 1e-12 <= ev.s <= 1e-12
    assert ev.stderr >= 0


def test_space2_weighted_mixtures_bounded():
    gen = np.random.default_rng(5)
    verts = oracles.VERTICES
    for _ in range(1000):
        s = space2_ch(verts, weights=gen.dirichlet(np.full(16, 0.5))).s
        assert -1 - 1e-12 <= s <= 1e-12


def test_space1_space2_agree_for_lhv():
    gen = np.random.default_rng(31)
    for i in range(5):
        batch = run_trials(ModelSpec.lhv(ResponseTable.random(gen, 16)), 400_000, seed=i)
        e1 = space1_ch(accumulate(batch))
        e2 = space2_ch(batch.quadruples)
        assert abs(e1.s - e2.s) <= 4 * (e1.stderr + e2.stderr)


def test_stderr_scales_inverse_sqrt():
    spec = ModelSpec.quantum(1.0)
    ratios = []
    for seed in range(5):
        small = space1_ch(accumulate(run_trials(spec, 20_000, seed=seed))).stderr
        big = space1_ch(accumulate(run_trials(spec, 20_000 * 16, seed=seed))).stderr
        ratios.append(small / big)
    assert all(abs(r - 4) <= 0.8 for r in ratios)


def test_no_signaling_identical_pairs():
    c = SettingCounts(np.tile([3, 5, 7, 11], (4, 1)))
    rep = no_signaling_report(c)
    assert all(s.discrepancy == 0 and s.z == 0 for s in rep.shifts)
    assert len(rep.shifts) == 4
