"""Counter-based random number derivation (SplitMix64).

Every random decision in the samplers is a pure function of
``(seed, shot index, draw index)``.  This makes shot streams reproducible
and order independent: workers can process shots in any partition and the
results are bit-identical, and the numba and numpy sampling backends
share the exact same stream.

Reserved pseudo-shot indices above 2**62 tag special streams (e.g. the
noiseless reference run).
"""

from __future__ import annotations

import numpy as np

U64 = np.uint64

GAMMA = U64(0x9E3779B97F4A7C15)
MIX1 = U64(0xBF58476D1CE4E5B9)
MIX2 = U64(0x94D049BB133111EB)
SHOT_SALT = U64(0xD6E8FEB86659FD93)
# Top 53 bits -> float keeps draws strictly inside [0, 1).
TO_UNIT = 2.0**-53

# Reserved pseudo-shot index for the reference (noiseless) tableau run.
REF_STREAM = 1 << 62


def mix64(x):
    """SplitMix64 finalizer over uint64 arrays (wraps modulo 2**64)."""
    with np.errstate(over="ignore"):  # wraparound is the point
        z = (x + GAMMA) * MIX1
        z = (z ^ (z >> U64(30))) * MIX2
        z = (z ^ (z >> U64(27))) * MIX1
        return z ^ (z >> U64(31))


def shot_base(seed: int, shots) -> np.ndarray:
    """Per-shot stream base; ``shots`` is an int array (or 0-d)."""
    s = mix64(np.asarray(seed, dtype=U64))
    return mix64(s ^ (np.asarray(shots, dtype=U64) * SHOT_SALT))


def unit_from(base, index) -> np.ndarray:
    """Uniform [0,1) float64 for draw ``index`` of stream(s) ``base``."""
    v = mix64(base ^ np.asarray(index, dtype=U64))
    return (v >> U64(11)).astype(np.float64) * TO_UNIT


def draw_unit(seed: int, shot: int, index: int) -> float:
    return float(unit_from(shot_base(seed, shot), index))


class CounterRng:
    """Sequential view over one (seed, shot) stream; Python-side use."""

    def __init__(self, seed: int, shot: int = REF_STREAM):
        self._base = shot_base(seed, shot)
        self._index = 0

    def unit(self) -> float:
        u = float(unit_from(self._base, self._index))
        self._index += 1
        return u

    def coin(self) -> int:
        return 1 if self.unit() < 0.5 else 0
