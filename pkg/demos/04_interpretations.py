"""Admissibility under each reading of probability, and what a violation implicates."""

# %%
from belllab.estimators import Space, accumulate, space1_ch, space2_ch
from belllab.interpretation import (
    CITATIONS,
    ExperimentFlags,
    InterpretationMode,
    admissibility,
    blame,
)
from belllab.models import ModelSpec, ResponseTable, run_trials

# %% the whole table
for mode in InterpretationMode:
    for spacelike in (False, True):
        v = admissibility(mode, ExperimentFlags(spacelike_separated=spacelike))
        print(f"{mode.value:24s} spacelike={spacelike!s:5s} space1={v.space1.status.value:12s} "
              f"space2={v.space2.status.value}")

# %% reasons behind a refusal
v = admissibility(InterpretationMode.FREQUENTIST_VON_MISES, ExperimentFlags())
for key in v.space2.citations:
    print(f"{key}: {CITATIONS[key]}")

# %% blame for a quantum violation (space 1 only: no quadruples exist)
ev1 = space1_ch(accumulate(run_trials(ModelSpec.quantum(1.0), 200_000, seed=5)))
for mode in InterpretationMode:
    verdict = admissibility(mode, ExperimentFlags(spacelike_separated=True))
    print(mode.value, blame(mode, verdict, {Space.SPACE1: ev1}).to_dict()["evaluations"])

# %% an LHV source yields both evaluations and neither is violated
batch = run_trials(ModelSpec.lhv(ResponseTable.constant(0.5, 2)), 100_000, seed=6)
evals = {Space.SPACE1: space1_ch(accumulate(batch)), Space.SPACE2: space2_ch(batch.quadruples)}
mode = InterpretationMode.KOLMOGOROV_AXIOMATIC
print(blame(mode, admissibility(mode, ExperimentFlags()), evals).to_dict())
