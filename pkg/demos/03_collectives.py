"""Relative-frequency diagnostics on the four setting-pair collectives."""

# %%
import numpy as np

from belllab.frequentist import (
    STANDARD_RULES,
    Collective,
    build_collectives,
    collective_compatibility_guard,
    convergence_diagnostic,
    randomness_diagnostic,
    space1_request,
    space2_request,
)
from belllab.models import ModelSpec, run_trials

# %% an honest source: every collective settles and no rule finds a bias
batch = run_trials(ModelSpec.quantum(1.0), 400_000, seed=4)
for name, c in build_collectives(batch).items():
    conv = convergence_diagnostic(c)
    flags = [r.rule.name for r in randomness_diagnostic(c) if r.flagged]
    print(f"{name:5s} n={len(c):6d} f={conv.trajectory[-1]:.4f} stabilized={conv.stabilized} "
          f"n*={conv.n_star} flagged={flags}")

# %% an alternating stream converges but fails place selection
alt = Collective.from_stream(np.arange(100_000) % 2)
print("alternating stabilized:", convergence_diagnostic(alt).stabilized)
for r in randomness_diagnostic(alt, STANDARD_RULES):
    print(f"  {r.rule.name:22s} sub={r.sub_frequency:.3f} flagged={r.flagged}")

# %% half zeros then half ones never settles
half = Collective.from_stream(np.repeat([0, 1], 50_000))
d = convergence_diagnostic(half)
print("half-and-half stabilized:", d.stabilized, "tail deviation", round(d.tail_deviation, 3))

# %% adding terms across collectives
print("space 1 request:", collective_compatibility_guard(space1_request()).to_dict())
print("space 2 request:", collective_compatibility_guard(space2_request()).to_dict())
