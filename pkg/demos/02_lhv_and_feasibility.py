"""Local hidden-variable sources obey the bound; the quantum contexts admit
no joint distribution over counterfactual quadruples."""

# %%
import numpy as np

from belllab.core import ALL_QUADRUPLES, ch_value
from belllab.estimators import space2_ch
from belllab.feasibility import (
    ContextDistributions,
    ch_from_contexts,
    farkas_check,
    solve_feasibility,
    verify_witness,
    witness_terms,
)
from belllab.models import (
    ModelSpec,
    ResponseTable,
    exact_context_distributions,
    lhv_exact_ch_terms,
    run_trials,
)

# %% the sixteen deterministic quadruples sit at -1 or 0
for q in ALL_QUADRUPLES:
    print(q.as_tuple(), space2_ch([q]).s)

# %% a random stochastic LHV table, exact and sampled
gen = np.random.default_rng(3)
spec = ModelSpec.lhv(ResponseTable.random(gen, 6))
print("exact s:", ch_value(lhv_exact_ch_terms(spec)))
batch = run_trials(spec, 200_000, seed=3)
print("space 2 from the recorded quadruples:", space2_ch(batch.quadruples).s)

# %% its contexts come from a joint distribution; here is one
dists = ContextDistributions.project(exact_context_distributions(spec))
cert = solve_feasibility(dists)
print(cert.verdict.value, "residual", cert.residual, "verified", verify_witness(cert.witness, dists))
print("witness reproduces s:", ch_value(witness_terms(cert.witness)))

# %% the quantum contexts do not, and the solver says why
qd = ContextDistributions.project(exact_context_distributions(ModelSpec.quantum(1.0)))
qc = solve_feasibility(qd)
print(qc.verdict.value, "s from contexts:", round(ch_from_contexts(qd), 5))
print("Farkas vector:", np.round(qc.farkas, 4), "valid:", farkas_check(qc.farkas, qd))

# %% the switch happens at visibility 1/sqrt(2)
for v in (0.70, 0.707, 0.708, 0.75):
    d = ContextDistributions.project(exact_context_distributions(ModelSpec.quantum(v)))
    print(f"  v = {v:.3f}: {solve_feasibility(d).verdict.value}")
