import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from belllab.core import ALL_QUADRUPLES, DomainError, ch_value
from belllab.feasibility import (
    ContextDistributions,
    SolverFailure,
    Verdict,
    ch_from_contexts,
    farkas_check,
    marginal_constraints,
    phase_one,
    solve_feasibility,
    solve_feasibility_relaxed,
    verify_witness,
    witness_terms,
)
from belllab.models import ModelSpec, ResponseTable, exact_context_distributions

UNIFORM = ContextDistributions(np.full((4, 4), 0.25))
QUANTUM = ContextDistributions(oracles.quantum_contexts())


def _point_mass_contexts(q):
    ctx = np.zeros((4, 4))
    for p, (s, t) in enumerate(oracles.PAIRS):
        ctx[p, 2 * q[s] + q[2 + t]] = 1.0
    return ContextDistributions(ctx)


def test_uniform_product_satisfies_system():
    A, b = marginal_constraints(UNIFORM)
    assert A.shape == (17, 16)
    assert np.allclose(A @ np.full(16, 1 / 16), b)


def test_point_mass_satisfies_system():
    q = np.zeros(16)
    q[9] = 1.0  # (1, 0, 0, 1)
    A, b = marginal_constraints(_point_mass_contexts((1, 0, 0, 1)))
    assert np.allclose(A @ q, b)


def test_quantum_system_has_no_solution():
    assert not oracles.lp_feasible(QUANTUM.probs)
    cert = solve_feasibility(QUANTUM)
    assert cert.verdict is Verdict.INFEASIBLE
    assert farkas_check(cert.farkas, QUANTUM)
    assert farkas_check(7.5 * cert.farkas, QUANTUM)


def test_quantum_half_visibility_feasible():
    d = ContextDistributions(oracles.quantum_contexts(v=0.5))
    assert oracles.lp_feasible(d.probs)
    cert = solve_feasibility(d)
    assert cert.feasible and verify_witness(cert.witness, d)
    assert ch_from_contexts(d) == pytest.approx(0.5 * oracles.quantum_ch() + 0.5 * -0.5)


def test_lhv_contexts_feasible():
    gen = np.random.default_rng(99)
    for _ in range(20):
        spec = ModelSpec.lhv(ResponseTable.random(gen, 16), gen.dirichlet(np.ones(16)))
        d = ContextDistributions(exact_context_distributions(spec))
        cert = solve_feasibility(d)
        assert cert.feasible and cert.residual < 1e-9 and verify_witness(cert.witness, d)


def test_verify_witness_examples():
    assert verify_witness(np.full(16, 1 / 16), UNIFORM)
    q = np.zeros(16)
    q[9] = 1
    assert verify_witness(q, _point_mass_contexts((1, 0, 0, 1)))
    assert not verify_witness(np.full(16, 1 / 16), QUANTUM)
    assert not verify_witness(np.full(15, 1 / 15), UNIFORM)


def test_farkas_check_zero_and_dimension():
    assert not farkas_check(np.zeros(17), QUANTUM)
    with pytest.raises(DomainError):
        farkas_check(np.zeros(16), QUANTUM)


def test_distribution_validation():
    with pytest.raises(DomainError):
        ContextDistributions(np.full((4, 4), 0.3))
    with pytest.raises(DomainError):
        ContextDistributions(np.full((3, 4), 0.25))
    noisy = np.full((4, 4), 0.25)
    noisy[0] = [0.5, 0.5, 0.01, -0.01]
    proj = ContextDistributions.project(noisy)
    assert proj.projected and proj.probs[0, 3] == 0


def test_tol_domain():
    with pytest.raises(DomainError):
        solve_feasibility(UNIFORM, tol=1e-3)


def test_iteration_cap_raises_with_trace():
    with pytest.raises(SolverFailure) as info:
        solve_feasibility(QUANTUM, max_iterations=1)
    assert len(info.value.trace) == 1


def test_every_vertex_feasible_with_point_mass_witness():
    for q in ALL_QUADRUPLES:
        d = _point_mass_contexts(q.as_tuple())
        cert = solve_feasibility(d)
        assert cert.feasible
        assert cert.witness[q.index] == pytest.approx(1.0)


def test_bridge_random_contexts():
    """ch outside [-1, 0] must always come with an Infeasible verdict."""
    gen = np.random.default_rng(2024)
    outside = 0
    for i in range(1000):
        d = ContextDistributions(gen.dirichlet(np.full(4, 0.4), size=4))
        cert = solve_feasibility(d)
        s = ch_from_contexts(d)
        assert cert.feasible == oracles.lp_feasible(d.probs)
        if cert.feasible:
            assert verify_witness(cert.witness, d)
            assert -1 - 1e-8 <= s <= 1e-8
            assert ch_value(witness_terms(cert.witness)) == pytest.approx(s, abs=1e-8)
        else:
            assert farkas_check(cert.farkas, d)
        if not -1 <= s <= 0:
            outside += 1
            assert not cert.feasible
    assert outside > 50


def test_perturbation_does_not_flip_feasible():
    gen = np.random.default_rng(7)
    for _ in range(20):
        spec = ModelSpec.lhv(ResponseTable.random(gen, 16))
        base = exact_context_distributions(spec)
        noisy = ContextDistributions.project(base + gen.uniform(-1e-10, 1e-10, base.shape))
        assert solve_feasibility(noisy).feasible


def test_deterministic_certificates():
    a, b = solve_feasibility(QUANTUM), solve_feasibility(QUANTUM)
    assert np.array_equal(a.farkas, b.farkas) and a.iterations == b.iterations


def test_relaxed_mode():
    # At v = 0.72 the exact contexts are infeasible, but with 1000 trials per
    # pair the 3-sigma band easily contains a local point.
    d = ContextDistributions(oracles.quantum_contexts(v=0.72))
    assert not solve_feasibility(d).feasible
    assert solve_feasibility_relaxed(d, [1000] * 4).verdict is Verdict.FEASIBLE
    big = solve_feasibility_relaxed(QUANTUM, [10**6] * 4)
    assert big.verdict is Verdict.INFEASIBLE


def test_phase_one_handles_negative_rhs():
    A = np.array([[1.0, -1.0]])
    res = phase_one(A, np.array([-0.5]))
    assert res.objective == pytest.approx(0)
    assert A @ res.x == pytest.approx([-0.5])


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0, 1), min_size=16, max_size=16).filter(lambda x: sum(x) > 1e-3))
def test_any_joint_gives_feasible_contexts(raw):
    q = np.array(raw) / sum(raw)
    A, b = marginal_constraints(UNIFORM)
    ctx = (A[:16] @ q).reshape(4, 4)
    d = ContextDistributions.project(ctx)
    cert = solve_feasibility(d)
    assert cert.feasible and verify_witness(cert.witness, d)
