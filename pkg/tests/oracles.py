"""Independent reference computations used to freeze expected values.

Nothing here imports the code paths it checks; the only shared pieces are
plain data types.
"""

import itertools
import math

import numpy as np
from scipy.optimize import linprog

PAIRS = [(0, 0), (0, 1), (1, 0), (1, 1)]
VERTICES = list(itertools.product((0, 1), repeat=4))  # (a, a', b, b')


def vertex_ch(v):
    a0, a1, b0, b1 = v
    return a0 * b0 + a0 * b1 + a1 * b0 - a1 * b1 - a0 - b0


def coincidence(alpha, beta, v=1.0):
    """P(1, 1 | alpha, beta) for the photon-pair law, by hand."""
    return 0.25 * (1 + v * math.cos(2 * math.radians(alpha - beta)))


def quantum_ch(angles=(0.0, 45.0, 22.5, -22.5), v=1.0):
    a, ap, b, bp = angles
    return (coincidence(a, b, v) + coincidence(a, bp, v) + coincidence(ap, b, v)
            - coincidence(ap, bp, v) - 0.5 - 0.5)


def quantum_contexts(angles=(0.0, 45.0, 22.5, -22.5), v=1.0):
    out = []
    for s, t in PAIRS:
        same = coincidence(angles[s], angles[2 + t], v)
        diff = 0.5 - same
        out.append([same, diff, diff, same])
    return np.array(out)


def lhv_contexts(left, right, w):
    """Brute-force sum over lambda and outcome pairs."""
    left, right, w = np.asarray(left), np.asarray(right), np.asarray(w)
    out = np.zeros((4, 4))
    for p, (s, t) in enumerate(PAIRS):
        for lam in range(len(w)):
            pl, pr = left[s, lam], right[t, lam]
            for x, y in itertools.product((0, 1), repeat=2):
                out[p, 2 * x + y] += w[lam] * (pl if x else 1 - pl) * (pr if y else 1 - pr)
    return out


def lp_feasible(contexts):
    """scipy HiGHS as the independent route to the marginal problem."""
    A, b = [], []
    for p, (s, t) in enumerate(PAIRS):
        for x, y in itertools.product((0, 1), repeat=2):
            A.append([1.0 if (v[s] == x and v[2 + t] == y) else 0.0 for v in VERTICES])
            b.append(contexts[p][2 * x + y])
    A.append([1.0] * 16)
    b.append(1.0)
    res = linprog(np.zeros(16), A_eq=np.array(A), b_eq=np.array(b), bounds=[(0, None)] * 16,
                  method="highs")
    return res.status == 0


def conspiracy_search():
    """Exhaustive search over deterministic tables with K = 4 and full setting bias.

    With bias 1 the pair index equals lambda, so context p sees only lambda = p.
    Returns (best space-1 value, lexicographically first maximizing table as
    four quadruples, its value under uniform setting choice).
    """
    best, best_tbl = -math.inf, None
    for tbl in itertools.product(range(16), repeat=4):
        q = [VERTICES[k] for k in tbl]
        p11 = [q[p][s] * q[p][2 + t] for p, (s, t) in enumerate(PAIRS)]
        val = p11[0] + p11[1] + p11[2] - p11[3] - q[0][0] - q[0][2]
        if val > best:
            best, best_tbl = val, q
    uniform = sum(vertex_ch(v) for v in best_tbl) / 4
    return best, best_tbl, uniform
