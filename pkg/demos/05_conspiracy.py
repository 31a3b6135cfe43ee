"""A deterministic local table plus setting choices that peek at lambda.

The table below maximizes space-1 CH when the setting pair equals lambda
(found by brute force over all 16**4 tables with four hidden states).
"""

# %%
import numpy as np

from belllab.core import ch_value
from belllab.estimators import accumulate, space1_ch
from belllab.models import ModelSpec, ResponseTable, lhv_exact_ch_terms, run_trials

table = ResponseTable.from_quadruples([(0, 0, 0, 0), (1, 0, 0, 1), (0, 1, 1, 0), (0, 0, 0, 0)])
w = np.full(4, 0.25)

# %% bias = 1: context p only ever sees lambda = p
for bias in (0.0, 0.25, 0.5, 1.0):
    spec = ModelSpec.conspiracy(bias, table, w)
    ev = space1_ch(accumulate(run_trials(spec, 400_000, seed=7)))
    print(f"bias {bias:.2f}: s = {ev.s:+.4f} +- {ev.stderr:.4f}  violated={ev.violated(5.0)}")

# %% the same hidden states with independent settings stay inside [-1, 0]
honest = ModelSpec.lhv(table, w)
print("exact s with uniform settings:", ch_value(lhv_exact_ch_terms(honest)))
ev = space1_ch(accumulate(run_trials(honest, 400_000, seed=7)))
print(f"sampled: {ev.s:+.4f} +- {ev.stderr:.4f}")
print("What broke is lambda-independence; the responses stayed local throughout.")
