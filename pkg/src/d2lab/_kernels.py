"""Sampling kernels for the Pauli-frame engine.

Two interchangeable implementations of the same op-stream interpreter:

* a numba ``@njit(parallel=True)`` kernel looping over shots, and
* a pure-numpy kernel vectorized across a shot axis.

Both consume the identical counter-based random stream, so their outputs
are bit-for-bit equal; ``D2LAB_BACKEND=numpy|numba|auto`` selects which
one runs (auto prefers numba when importable).

Op stream encoding: int64 rows ``[opcode, a, b, rand_index]`` plus two
float64 params per row.  Opcodes 0..9 are the Clifford gates in
``paulis.GATE_KINDS`` order; the remainder are stochastic sites.
"""

from __future__ import annotations

import os

import numpy as np

from ._rng import GAMMA, MIX1, MIX2, SHOT_SALT, TO_UNIT, U64, shot_base, unit_from

OP_H = 0
OP_SQRTX = 1
OP_SQRTXDAG = 2
OP_S = 3
OP_SDAG = 4
OP_X = 5
OP_Y = 6
OP_Z = 7
OP_CZ = 8
OP_CNOT = 9
OP_INITZ = 10   # a=qubit; draws one coin, sets the Z frame bit
OP_DEPOL1 = 11  # a=qubit; params[0]=p
OP_DEPOL2 = 12  # a,b=qubits; params[0]=p
OP_MEASURE = 13  # a=qubit, b=output column; records ref^fx then collapses fz
OP_FLIP = 14    # a=qubit, b=output column; params=(p_flip_if_0, p_flip_if_1)
OP_RESET = 15   # a=qubit; clears X frame, randomizes Z frame


def sample_frames_numpy(ops, params, ref_bits, n_qubits, shots, seed,
                        chunk=1 << 16) -> np.ndarray:
    """Pure-numpy interpreter, vectorized over a chunked shot axis."""
    n_meas = ref_bits.shape[0]
    out = np.empty((shots, n_meas), dtype=np.uint8)
    for lo in range(0, shots, chunk):
        hi = min(lo + chunk, shots)
        ids = np.arange(lo, hi, dtype=np.uint64)
        base = shot_base(seed, ids)
        m = hi - lo
        fx = np.zeros((m, n_qubits), dtype=np.uint8)
        fz = np.zeros((m, n_qubits), dtype=np.uint8)
        res = out[lo:hi]
        for k in range(ops.shape[0]):
            op, a, b, ridx = ops[k]
            if op == OP_H:
                fx[:, a], fz[:, a] = fz[:, a], fx[:, a].copy()
            elif op <= OP_SQRTXDAG:  # SqrtX / SqrtXDag
                fx[:, a] ^= fz[:, a]
            elif op <= OP_SDAG:  # S / SDag
                fz[:, a] ^= fx[:, a]
            elif op <= OP_Z:
                pass  # Pauli gates leave frames unchanged (phase only)
            elif op == OP_CZ:
                xa = fx[:, a].copy()
                fz[:, a] ^= fx[:, b]
                fz[:, b] ^= xa
            elif op == OP_CNOT:
                fx[:, b] ^= fx[:, a]
                fz[:, a] ^= fz[:, b]
            elif op == OP_INITZ:
                u = unit_from(base, ridx)
                fz[:, a] ^= (u < 0.5).astype(np.uint8)
            elif op == OP_DEPOL1:
                p = params[k, 0]
                if p > 0.0:
                    u = unit_from(base, ridx)
                    hit = u < p
                    idx = (u * 3.0 / p).astype(np.int64)
                    fx[:, a] ^= (hit & (idx <= 1)).astype(np.uint8)
                    fz[:, a] ^= (hit & (idx >= 1)).astype(np.uint8)
            elif op == OP_DEPOL2:
                p = params[k, 0]
                if p > 0.0:
                    u = unit_from(base, ridx)
                    hit = u < p
                    pair = (u * 15.0 / p).astype(np.int64) + 1
                    pa = pair >> 2
                    pb = pair & 3
                    fx[:, a] ^= (hit & ((pa == 1) | (pa == 2))).astype(np.uint8)
                    fz[:, a] ^= (hit & (pa >= 2)).astype(np.uint8)
                    fx[:, b] ^= (hit & ((pb == 1) | (pb == 2))).astype(np.uint8)
                    fz[:, b] ^= (hit & (pb >= 2)).astype(np.uint8)
            elif op == OP_MEASURE:
                res[:, b] = ref_bits[b] ^ fx[:, a]
                u = unit_from(base, ridx)
                fz[:, a] = (u < 0.5).astype(np.uint8)
            elif op == OP_FLIP:
                p0, p1 = params[k]
                if p0 > 0.0 or p1 > 0.0:
                    u = unit_from(base, ridx)
                    pe = np.where(res[:, b] == 0, p0, p1)
                    res[:, b] ^= (u < pe).astype(np.uint8)
            elif op == OP_RESET:
                u = unit_from(base, ridx)
                fx[:, a] = 0
                fz[:, a] = (u < 0.5).astype(np.uint8)
    return out


try:
    from numba import njit, prange

    HAS_NUMBA = True

    _S30 = U64(30)
    _S27 = U64(27)
    _S31 = U64(31)
    _S11 = U64(11)

    @njit(cache=True, inline="always")
    def _mix(x):
        z = (x + GAMMA) * MIX1
        z = (z ^ (z >> _S30)) * MIX2
        z = (z ^ (z >> _S27)) * MIX1
        return z ^ (z >> _S31)

    @njit(cache=True, inline="always")
    def _unit(base, ridx):
        v = _mix(base ^ U64(ridx))
        return np.float64(v >> _S11) * TO_UNIT

    @njit(cache=True, parallel=True)
    def _sample_numba(ops, params, ref_bits, n_qubits, shots, seed):
        n_ops = ops.shape[0]
        n_meas = ref_bits.shape[0]
        out = np.empty((shots, n_meas), dtype=np.uint8)
        seed_mix = _mix(seed)
        for s in prange(shots):
            base = _mix(seed_mix ^ (U64(s) * SHOT_SALT))
            fx = np.zeros(n_qubits, dtype=np.uint8)
            fz = np.zeros(n_qubits, dtype=np.uint8)
            for k in range(n_ops):
                op = ops[k, 0]
                a = ops[k, 1]
                b = ops[k, 2]
                ridx = ops[k, 3]
                if op == OP_H:
                    t = fx[a]
                    fx[a] = fz[a]
                    fz[a] = t
                elif op <= OP_SQRTXDAG:
                    fx[a] ^= fz[a]
                elif op <= OP_SDAG:
                    fz[a] ^= fx[a]
                elif op <= OP_Z:
                    pass
                elif op == OP_CZ:
                    xa = fx[a]
                    fz[a] ^= fx[b]
                    fz[b] ^= xa
                elif op == OP_CNOT:
                    fx[b] ^= fx[a]
                    fz[a] ^= fz[b]
                elif op == OP_INITZ:
                    if _unit(base, ridx) < 0.5:
                        fz[a] ^= np.uint8(1)
                elif op == OP_DEPOL1:
                    p = params[k, 0]
                    if p > 0.0:
                        u = _unit(base, ridx)
                        if u < p:
                            idx = np.int64(u * 3.0 / p)
                            if idx <= 1:
                                fx[a] ^= np.uint8(1)
                            if idx >= 1:
                                fz[a] ^= np.uint8(1)
                elif op == OP_DEPOL2:
                    p = params[k, 0]
                    if p > 0.0:
                        u = _unit(base, ridx)
                        if u < p:
                            pair = np.int64(u * 15.0 / p) + 1
                            pa = pair >> 2
                            pb = pair & 3
                            if pa == 1 or pa == 2:
                                fx[a] ^= np.uint8(1)
                            if pa >= 2:
                                fz[a] ^= np.uint8(1)
                            if pb == 1 or pb == 2:
                                fx[b] ^= np.uint8(1)
                            if pb >= 2:
                                fz[b] ^= np.uint8(1)
                elif op == OP_MEASURE:
                    out[s, b] = ref_bits[b] ^ fx[a]
                    fz[a] = np.uint8(1) if _unit(base, ridx) < 0.5 else np.uint8(0)
                elif op == OP_FLIP:
                    p0 = params[k, 0]
                    p1 = params[k, 1]
                    if p0 > 0.0 or p1 > 0.0:
                        pe = p0 if out[s, b] == 0 else p1
                        if _unit(base, ridx) < pe:
                            out[s, b] ^= np.uint8(1)
                elif op == OP_RESET:
                    fx[a] = 0
                    fz[a] = np.uint8(1) if _unit(base, ridx) < 0.5 else np.uint8(0)
        return out

    def sample_frames_numba(ops, params, ref_bits, n_qubits, shots, seed):
        return _sample_numba(ops, params, ref_bits, np.int64(n_qubits),
                             np.int64(shots), U64(seed))

except ImportError:  # pragma: no cover - exercised only without numba
    HAS_NUMBA = False
    sample_frames_numba = None


def backend_choice() -> str:
    """Resolve D2LAB_BACKEND to 'numba' or 'numpy'."""
    choice = os.environ.get("D2LAB_BACKEND", "auto").lower()
    if choice not in ("auto", "numba", "numpy"):
        raise ValueError(f"D2LAB_BACKEND={choice!r}; expected auto, numba or numpy")
    if choice == "numba" and not HAS_NUMBA:
        raise RuntimeError("D2LAB_BACKEND=numba but numba is not importable")
    if choice == "auto":
        return "numba" if HAS_NUMBA else "numpy"
    return choice


def sample_frames(ops, params, ref_bits, n_qubits, shots, seed,
                  backend: str | None = None) -> np.ndarray:
    """Run the frame sampler on the selected backend."""
    b = backend or backend_choice()
    if b == "numba":
        if not HAS_NUMBA:
            raise RuntimeError("numba backend requested but unavailable")
        return sample_frames_numba(ops, params, ref_bits, n_qubits, shots, seed)
    if b == "numpy":
        return sample_frames_numpy(ops, params, ref_bits, n_qubits, shots, seed)
    raise ValueError(f"unknown backend {b!r}")
