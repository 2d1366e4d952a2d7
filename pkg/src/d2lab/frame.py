"""Pauli-frame Monte Carlo sampling of Clifford circuits.

One noiseless tableau run per circuit supplies reference measurement
bits; each shot then propagates a Pauli error frame through the Clifford
gates, drawing one fault per annotated noise site, and XORs frame-induced
flips (plus classical readout flips) into the reference bits.

Intrinsic measurement randomness is reproduced by the standard frame
trick: every qubit initialization injects a 50/50 Z into the frame (a
physical no-op on |0>) and every measurement re-randomizes the Z frame
of the measured qubit, so non-deterministic outcomes vary per shot with
exactly the right correlations.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from . import _kernels
from ._rng import REF_STREAM
from .circuits import fold_rotation, to_text
from .noise import AnnotatedCircuit, iter_events
from .paulis import GATE_KINDS
from .records import ShotTable
from .tableau import NonCliffordError, run_tableau

_GATE_OPCODE = {kind: k for k, kind in enumerate(GATE_KINDS)}


@dataclass(frozen=True)
class FrameProgram:
    """Compiled op stream plus the reference sample."""

    ops: np.ndarray      # (K, 4) int64: opcode, a, b, rand_index
    params: np.ndarray   # (K, 2) float64
    ref_bits: np.ndarray  # (n_meas,) uint8
    labels: list[str]
    n_qubits: int
    n_rand: int


def circuit_fingerprint(ann: AnnotatedCircuit) -> str:
    """Short hash over circuit text and noise-site parameters."""
    h = hashlib.sha256(to_text(ann.circuit).encode())
    for s in ann.sites:
        h.update(f"{s.kind}{s.qubits}{s.probs}{s.moment}".encode())
    return h.hexdigest()[:12]


def compile_frame_program(ann: AnnotatedCircuit, seed: int) -> FrameProgram:
    """Lower an annotated Clifford circuit to the kernel op stream.

    Each instruction is followed immediately by its noise site (when the
    annotation attached one), per the shared event walk.
    """
    circuit = ann.circuit
    rows: list[tuple[int, int, int, int]] = []
    params: list[tuple[float, float]] = []
    rand = 0

    def put(op, a=0, b=0, uses_rand=False, p0=0.0, p1=0.0):
        nonlocal rand
        ridx = rand if uses_rand else -1
        rows.append((op, a, b, ridx))
        params.append((p0, p1))
        if uses_rand:
            rand += 1

    def put_depol1(site):
        if site is not None:
            put(_kernels.OP_DEPOL1, site.qubits[0], uses_rand=True, p0=site.probs[0])

    out_idx = 0
    for kind, payload, site in iter_events(ann):
        if kind == "init":
            put(_kernels.OP_INITZ, payload, uses_rand=True)
            put_depol1(site)
            continue
        instr = payload
        if instr.op == "IDLE":
            put_depol1(site)
        elif instr.op == "MZ":
            q = instr.qubits[0]
            put(_kernels.OP_MEASURE, q, out_idx, uses_rand=True)
            if site is not None:
                put(_kernels.OP_FLIP, q, out_idx, uses_rand=True,
                    p0=site.probs[0], p1=site.probs[1])
            out_idx += 1
        elif instr.op == "RESET":
            put(_kernels.OP_RESET, instr.qubits[0], uses_rand=True)
            put_depol1(site)
        elif instr.op in ("RZ", "RX"):
            folded = fold_rotation(instr)
            if folded is None:
                raise NonCliffordError(
                    f"{instr.op}({instr.angle:.6g}) does not fold to a "
                    "Clifford; use the dense engine for this circuit")
            if folded != "identity":
                gate = folded.gate
                put(_GATE_OPCODE[gate.kind], gate.targets[0])
            put_depol1(site)
        else:
            gate = instr.gate
            a = gate.targets[0]
            if len(gate.targets) == 2:
                put(_GATE_OPCODE[gate.kind], a, gate.targets[1])
                if site is not None:
                    put(_kernels.OP_DEPOL2, a, gate.targets[1],
                        uses_rand=True, p0=site.probs[0])
            else:
                put(_GATE_OPCODE[gate.kind], a)
                put_depol1(site)

    ref_bits, _, _ = run_tableau(circuit, seed, REF_STREAM)
    return FrameProgram(
        ops=np.array(rows, dtype=np.int64).reshape(-1, 4),
        params=np.array(params, dtype=np.float64).reshape(-1, 2),
        ref_bits=ref_bits,
        labels=circuit.labels(),
        n_qubits=circuit.n_qubits,
        n_rand=rand,
    )


def sample_pauli_frame(ann: AnnotatedCircuit, shots: int, seed: int,
                       backend: str | None = None) -> ShotTable:
    """Sample ShotRecords from an annotated Clifford circuit.

    Raises NonCliffordError for circuits with unfoldable rotations; use
    the dense engine for those.
    """
    if not ann.circuit.is_clifford():
        raise NonCliffordError(
            "circuit contains non-Clifford rotations; use the dense engine")
    program = compile_frame_program(ann, seed)
    bits = _kernels.sample_frames(program.ops, program.params, program.ref_bits,
                                  program.n_qubits, shots, seed, backend=backend)
    values = (1 - 2 * bits.astype(np.int8)).astype(np.int8)
    return ShotTable(program.labels, values, seed,
                     circuit_hash=circuit_fingerprint(ann))


def active_backend() -> str:
    return _kernels.backend_choice()
