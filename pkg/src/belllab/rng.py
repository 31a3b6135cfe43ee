"""Counter-based uniform streams keyed by (seed, role, trial index).

Every trial owns one Philox block per role, so the numbers a trial sees do
not depend on how the trial range is split between workers.
"""

from __future__ import annotations

import zlib

import numpy as np

_MASK64 = (1 << 64) - 1
_TO_UNIT = 2.0 ** -53

#: Uniforms available per trial and role (one Philox block = 4 x 64 bits).
BLOCK_WIDTH = 4


def role_key(role: str) -> int:
    return zlib.crc32(role.encode("ascii"))


def uniforms(seed: int, role: str, start: int, stop: int) -> np.ndarray:
    """Uniform [0, 1) draws of shape ``(stop - start, BLOCK_WIDTH)``.

    Row ``i`` depends only on ``(seed, role, start + i)``.
    """
    if stop < start:
        raise ValueError("stop must not precede start")
    n = stop - start
    if n == 0:
        return np.empty((0, BLOCK_WIDTH))
    bitgen = np.random.Philox(key=[seed & _MASK64, role_key(role)], counter=[start, 0, 0, 0])
    raw = bitgen.random_raw(n * BLOCK_WIDTH)
    return ((raw >> np.uint64(11)).astype(np.float64) * _TO_UNIT).reshape(n, BLOCK_WIDTH)
