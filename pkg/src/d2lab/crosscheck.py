"""Engine-equivalence guard: frame sampler vs exact dense channel.

Random Clifford circuits (gates restricted to the device adjacency) run
through both engines; per-label outcome frequencies are compared via
binomial z-scores against the exact marginals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._rng import CounterRng
from .circuits import BARRIER, Circuit, Instruction, schedule
from .dense import run_dense_channel
from .frame import sample_pauli_frame
from .noise import NoiseModel, apply_noise_sites

_ONE_QUBIT_POOL = ("H", "S", "SDag", "SqrtX", "SqrtXDag", "X", "Z")


def random_clifford_circuit(n_qubits: int, depth: int, seed: int,
                            pairs: list[tuple[int, int]] | None = None) -> Circuit:
    """Layered random Clifford circuit ending in MeasureZ on all qubits.

    Alternates a random single-qubit layer with a random two-qubit layer
    drawn from ``pairs`` (default: all pairs).
    """
    rng = CounterRng(seed, shot=(1 << 62) + 1)
    if pairs is None:
        pairs = [(a, b) for a in range(n_qubits) for b in range(a + 1, n_qubits)]
    items: list = []
    for layer in range(depth):
        for q in range(n_qubits):
            kind = _ONE_QUBIT_POOL[int(rng.unit() * len(_ONE_QUBIT_POOL))]
            items.append(Instruction(kind, (q,)))
        items.append(BARRIER)
        used: set[int] = set()
        order = sorted(pairs, key=lambda _: rng.unit())
        for a, b in order:
            if a in used or b in used or rng.unit() < 0.5:
                continue
            used.update((a, b))
            kind = "CZ" if rng.unit() < 0.5 else "CNOT"
            items.append(Instruction(kind, (a, b)))
        items.append(BARRIER)
    for q in range(n_qubits):
        items.append(Instruction("MZ", (q,), label=f"m{q + 1}z"))
    return schedule(n_qubits, items)


@dataclass
class CrossValidationReport:
    labels: list[str]
    frame_freq: np.ndarray   # sampled P(+1) per label
    exact_freq: np.ndarray   # exact P(+1) per label
    z_scores: np.ndarray
    max_abs_z: float
    shots: int
    seed: int


def cross_validate(circuit: Circuit, nm: NoiseModel, shots: int,
                   seed: int) -> CrossValidationReport:
    """Compare per-label +1 frequencies between the two engines.

    z = (f_sampled - p_exact) / sqrt(p (1-p) / shots); deterministic
    labels (p in {0, 1}) score 0 when the frequencies agree exactly and
    inf otherwise.
    """
    ann = apply_noise_sites(circuit, nm)
    table = sample_pauli_frame(ann, shots, seed)
    exact = run_dense_channel(ann)

    pv = exact.pattern_values()
    labels = exact.labels
    z_scores = np.empty(len(labels))
    f_freq = np.empty(len(labels))
    e_freq = np.empty(len(labels))
    for k, lab in enumerate(labels):
        p = float(exact.probs[pv[:, k] == 1].sum())
        f = float((table.column(lab) == 1).mean())
        sigma = math.sqrt(max(p * (1.0 - p), 0.0) / shots)
        if sigma == 0.0:
            z = 0.0 if abs(f - p) < 1e-12 else math.inf
        else:
            z = (f - p) / sigma
        f_freq[k], e_freq[k], z_scores[k] = f, p, z
    return CrossValidationReport(labels, f_freq, e_freq, z_scores,
                                 float(np.max(np.abs(z_scores))), shots, seed)
