"""Stabilizer tableau simulation (destabilizer/stabilizer rows).

Rows are phase-tracked PauliStrings, so all sign bookkeeping reuses the
exact Pauli algebra.  The simulator serves three roles: the noiseless
reference run for the Pauli-frame sampler, explicit-error shot
simulation for cross-checks, and deterministic stabilizer assertions in
tests.  Qubit counts in this project are tiny (<= 12), so clarity wins
over bit-packing here; the hot path lives in the frame sampler instead.
"""

from __future__ import annotations

import numpy as np

from ._rng import REF_STREAM, CounterRng
from .circuits import Circuit, fold_rotation
from .paulis import CliffordGate, PauliString, commutes, conjugate, multiply


class NonCliffordError(ValueError):
    """Circuit contains a rotation that does not fold to a Clifford.

    Raised by the tableau and Pauli-frame engines; route such circuits
    through the dense engine instead.
    """


class Tableau:
    """State of n qubits as n destabilizer + n stabilizer generators."""

    def __init__(self, n: int):
        self.n = n
        self.destab = [PauliString.single(n, q, "X") for q in range(n)]
        self.stab = [PauliString.single(n, q, "Z") for q in range(n)]

    def apply(self, gate: CliffordGate) -> None:
        self.destab = [conjugate(p, gate) for p in self.destab]
        self.stab = [conjugate(p, gate) for p in self.stab]

    def expectation_sign(self, p: PauliString):
        """+1/-1 if p is (up to sign) in the stabilizer group, else None."""
        if any(not commutes(p, s) for s in self.stab):
            return None
        acc = PauliString.identity(self.n)
        for i in range(self.n):
            if not commutes(p, self.destab[i]):
                acc = multiply(acc, self.stab[i])
        if acc.key() != p.key():
            raise AssertionError("stabilizer expansion failed")
        delta = (acc.display_phase_exp - p.display_phase_exp) & 3
        if delta == 0:
            return 1
        if delta == 2:
            return -1
        raise AssertionError("non-Hermitian phase in stabilizer expansion")

    def measure_z(self, q: int, rng: CounterRng, forced=None) -> tuple[int, bool]:
        """Measure Z on qubit q.  Returns (bit, was_deterministic).

        ``forced`` overrides the coin for non-deterministic outcomes
        (used when replaying a frame-sampled shot); forcing a
        deterministic measurement raises if the value disagrees.
        """
        zq = PauliString.single(self.n, q, "Z")
        pivot = None
        for i in range(self.n):
            if not commutes(zq, self.stab[i]):
                pivot = i
                break
        if pivot is None:
            sign = self.expectation_sign(zq)
            bit = 0 if sign == 1 else 1
            if forced is not None and forced != bit:
                raise AssertionError(
                    f"forced outcome {forced} contradicts deterministic bit {bit}")
            return bit, True

        bit = rng.coin() if forced is None else int(forced)
        prow = self.stab[pivot]
        for i in range(self.n):
            if i != pivot and not commutes(zq, self.stab[i]):
                self.stab[i] = multiply(self.stab[i], prow)
            if not commutes(zq, self.destab[i]):
                self.destab[i] = multiply(self.destab[i], prow)
        self.destab[pivot] = prow
        self.stab[pivot] = zq.scaled(2 if bit else 0)
        return bit, False

    def reset(self, q: int, rng: CounterRng) -> None:
        bit, _ = self.measure_z(q, rng)
        if bit:
            self.apply(CliffordGate("X", (q,)))

    def apply_pauli(self, p: PauliString) -> None:
        """Conjugate the state by a Pauli (sign updates only)."""
        for i in range(self.n):
            if not commutes(p, self.stab[i]):
                self.stab[i] = self.stab[i].scaled(2)
            if not commutes(p, self.destab[i]):
                self.destab[i] = self.destab[i].scaled(2)


def clifford_instructions(circuit: Circuit):
    """Yield (instr, replacement) folding rotations to Cliffords.

    ``replacement`` is the folded Instruction (or None to drop an
    angle-zero rotation, or the instruction itself when untouched).
    Raises NonCliffordError on unfoldable angles.
    """
    for instr in circuit.instructions():
        if instr.op in ("RZ", "RX"):
            folded = fold_rotation(instr)
            if folded is None:
                raise NonCliffordError(
                    f"{instr.op}({instr.angle:.6g}) does not fold to a Clifford; "
                    "use the dense engine for this circuit")
            yield instr, (None if folded == "identity" else folded)
        else:
            yield instr, instr


def run_tableau(circuit: Circuit, seed: int, stream: int = REF_STREAM,
                forced=None):
    """Execute a Clifford circuit on the tableau.

    ``forced`` optionally maps measurement index -> bit, overriding the
    coin at non-deterministic outcomes (forcing a deterministic one
    asserts agreement).  Returns (bits, deterministic, tableau).
    """
    rng = CounterRng(seed, stream)
    tab = Tableau(circuit.n_qubits)
    bits: list[int] = []
    det: list[bool] = []

    for instr, replacement in clifford_instructions(circuit):
        if instr.op == "MZ":
            k = len(bits)
            force = None if forced is None else forced.get(k)
            bit, was_det = tab.measure_z(instr.qubits[0], rng, force)
            bits.append(bit)
            det.append(was_det)
        elif instr.op == "RESET":
            tab.reset(instr.qubits[0], rng)
        elif replacement is not None:
            tab.apply(replacement.gate)
    return np.array(bits, dtype=np.uint8), np.array(det, dtype=bool), tab
