"""Exact dense simulation: superoperator channels and quantum trajectories.

This engine is the oracle for everything else.  ``run_dense_channel``
evolves the full 2^n x 2^n density matrix, applying each depolarizing
site as its exact Pauli mixture, and returns the final state together
with the exact joint distribution over measurement patterns (readout
flips applied as a classical channel on the recorded bits).
``run_dense_trajectories`` samples shot records by unraveling the same
channels into stochastic Pauli kicks plus Born-rule measurement, batched
across shots.

Non-Clifford RZ/RX rotations are first-class here.  All measurements are
terminal by construction (the scheduler rejects operations on measured
qubits), so measurement projections commute past the rest of the circuit
and are evaluated once at the end.  Qubit 0 is the most significant bit
of a computational-basis index.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ._rng import shot_base, unit_from
from .noise import AnnotatedCircuit, iter_events
from .records import ShotTable

MAX_DENSE_QUBITS = 12

_SQ2 = 1.0 / math.sqrt(2.0)

PAULI_1Q = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def rz_matrix(theta: float) -> np.ndarray:
    return np.diag([np.exp(-0.5j * theta), np.exp(0.5j * theta)])


def rx_matrix(theta: float) -> np.ndarray:
    c, s = math.cos(theta / 2.0), math.sin(theta / 2.0)
    return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)


GATE_1Q = {
    "H": np.array([[_SQ2, _SQ2], [_SQ2, -_SQ2]], dtype=complex),
    "S": np.diag([1, 1j]).astype(complex),
    "SDag": np.diag([1, -1j]).astype(complex),
    "SqrtX": rx_matrix(math.pi / 2.0),
    "SqrtXDag": rx_matrix(-math.pi / 2.0),
    "X": PAULI_1Q["X"],
    "Y": PAULI_1Q["Y"],
    "Z": PAULI_1Q["Z"],
}

CZ_MAT = np.diag([1, 1, 1, -1]).astype(complex)
CNOT_MAT = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)

# The 15 non-identity two-qubit Pauli labels in (I,X,Y,Z)x(I,X,Y,Z) order
# skipping II; index k matches fault index k drawn by the frame sampler.
TWO_QUBIT_PAULIS = [(a, b) for a in "IXYZ" for b in "IXYZ" if (a, b) != ("I", "I")]


class DimensionGuardError(ValueError):
    """Dense simulation requested beyond the qubit-count guard."""


def _check_n(n: int) -> None:
    if n > MAX_DENSE_QUBITS:
        raise DimensionGuardError(
            f"dense engine limited to {MAX_DENSE_QUBITS} qubits, got {n}")


# -- local operator application (no full-size gate matrices) -------------

@lru_cache(maxsize=None)
def _bit_of(q: int, n: int) -> np.ndarray:
    return (np.arange(1 << n) >> (n - 1 - q)) & 1


@lru_cache(maxsize=None)
def _cz_signs(a: int, b: int, n: int) -> np.ndarray:
    return np.where((_bit_of(a, n) & _bit_of(b, n)) == 1, -1.0, 1.0)


@lru_cache(maxsize=None)
def _cnot_perm(c: int, t: int, n: int) -> np.ndarray:
    idx = np.arange(1 << n)
    flip = idx ^ (1 << (n - 1 - t))
    return np.where(_bit_of(c, n) == 1, flip, idx)


def apply_1q_rho(rho: np.ndarray, u: np.ndarray, q: int, n: int) -> np.ndarray:
    """rho -> U_q rho U_q^dagger via sliced multiply-adds."""
    d = 1 << n
    t = rho.reshape(1 << q, 2, -1)  # (row-pre, row-bit, row-post * d)
    a, b = t[:, 0], t[:, 1]
    new = np.empty_like(t)
    new[:, 0] = u[0, 0] * a + u[0, 1] * b
    new[:, 1] = u[1, 0] * a + u[1, 1] * b
    t2 = new.reshape(d, 1 << q, 2, -1)  # (row, col-pre, col-bit, col-post)
    uc = u.conj()
    a, b = t2[:, :, 0], t2[:, :, 1]
    out = np.empty_like(t2)
    out[:, :, 0] = uc[0, 0] * a + uc[0, 1] * b
    out[:, :, 1] = uc[1, 0] * a + uc[1, 1] * b
    return out.reshape(d, d)


def apply_2q_rho(rho: np.ndarray, u4: np.ndarray, a: int, b: int, n: int) -> np.ndarray:
    """General two-qubit conjugation (CZ/CNOT take faster paths)."""
    t = rho.reshape((2,) * (2 * n))
    u = u4.reshape(2, 2, 2, 2)
    t = np.moveaxis(np.tensordot(u, t, axes=([2, 3], [a, b])), (0, 1), (a, b))
    t = np.moveaxis(np.tensordot(u.conj(), t, axes=([2, 3], [n + a, n + b])),
                    (0, 1), (n + a, n + b))
    return t.reshape(rho.shape)


def apply_cz_rho(rho: np.ndarray, a: int, b: int, n: int) -> np.ndarray:
    s = _cz_signs(a, b, n)
    return rho * s[:, None] * s[None, :]


def apply_cnot_rho(rho: np.ndarray, c: int, t: int, n: int) -> np.ndarray:
    perm = _cnot_perm(c, t, n)
    return rho[np.ix_(perm, perm)]


def depolarize1(rho: np.ndarray, p: float, q: int, n: int) -> np.ndarray:
    """Exact E1 via the Pauli twirl identity sum_P P rho P = 2 I_q x Tr_q."""
    if p == 0.0:
        return rho
    t = rho.reshape(1 << q, 2, (1 << (n - 1 - q)) * (1 << q), 2, -1)
    traced = t[:, 0, :, 0, :] + t[:, 1, :, 1, :]
    out = (1.0 - 4.0 * p / 3.0) * rho
    o = out.reshape(t.shape)
    scale = 2.0 * p / 3.0
    o[:, 0, :, 0, :] += scale * traced
    o[:, 1, :, 1, :] += scale * traced
    return out


def depolarize2(rho: np.ndarray, p: float, a: int, b: int, n: int) -> np.ndarray:
    """Exact E2 via sum over all 16 pairs = 4 I_ab x Tr_ab(rho)."""
    if p == 0.0:
        return rho
    out = (1.0 - 16.0 * p / 15.0) * rho
    scale = 4.0 * p / 15.0
    hi, lo = (a, b) if a < b else (b, a)
    pre = 1 << hi
    mid = 1 << (lo - hi - 1)
    post = 1 << (n - 1 - lo)
    shape = (pre, 2, mid, 2, post) * 2
    t = rho.reshape(shape)
    traced = (t[:, 0, :, 0, :, :, 0, :, 0, :] + t[:, 0, :, 1, :, :, 0, :, 1, :]
              + t[:, 1, :, 0, :, :, 1, :, 0, :] + t[:, 1, :, 1, :, :, 1, :, 1, :])
    o = out.reshape(shape)
    for ba in (0, 1):
        for bb in (0, 1):
            o[:, ba, :, bb, :, :, ba, :, bb, :] += scale * traced
    return out


def depolarize1_pauli_sum(rho: np.ndarray, p: float, q: int, n: int) -> np.ndarray:
    """Reference implementation: explicit (p/3) sum over X,Y,Z."""
    if p == 0.0:
        return rho
    mix = np.zeros_like(rho)
    for c in "XYZ":
        mix += apply_1q_rho(rho, PAULI_1Q[c], q, n)
    return (1.0 - p) * rho + (p / 3.0) * mix


def depolarize2_pauli_sum(rho: np.ndarray, p: float, a: int, b: int,
                          n: int) -> np.ndarray:
    """Reference implementation: explicit (p/15) sum over the 15 pairs."""
    if p == 0.0:
        return rho
    mix = np.zeros_like(rho)
    for ca, cb in TWO_QUBIT_PAULIS:
        t = rho
        if ca != "I":
            t = apply_1q_rho(t, PAULI_1Q[ca], a, n)
        if cb != "I":
            t = apply_1q_rho(t, PAULI_1Q[cb], b, n)
        mix += t
    return (1.0 - p) * rho + (p / 15.0) * mix


def _gate_unitary(instr):
    if instr.op == "CZ":
        return CZ_MAT
    if instr.op == "CNOT":
        return CNOT_MAT
    if instr.op == "RZ":
        return rz_matrix(instr.angle)
    if instr.op == "RX":
        return rx_matrix(instr.angle)
    return GATE_1Q[instr.op]


def pauli_dense(label_or_pauli, n: int | None = None) -> np.ndarray:
    """Dense matrix of a Pauli string (by text label or PauliString)."""
    from .paulis import PauliString

    p = (label_or_pauli if isinstance(label_or_pauli, PauliString)
         else PauliString.from_label(label_or_pauli))
    if n is not None and p.n != n:
        raise ValueError(f"Pauli acts on {p.n} qubits, expected {n}")
    out = np.array([[p.phase]], dtype=complex)
    for q in range(p.n):
        out = np.kron(out, PAULI_1Q[p.char_at(q)])
    return out


# -- exact channel mode ---------------------------------------------------

@dataclass
class DenseResult:
    """Final pre-measurement state plus the exact measurement statistics.

    ``probs[p]`` is the probability (readout flips included) of pattern
    ``p``, whose bit k (MSB first) is the outcome of the k-th
    measurement label.  ``probs_ideal`` is the same distribution before
    readout flips.
    """

    rho: np.ndarray
    labels: list[str]
    measured_qubits: list[int]
    probs: np.ndarray
    probs_ideal: np.ndarray

    def pattern_values(self) -> np.ndarray:
        """(n_patterns, n_labels) array of +1/-1 outcomes per pattern."""
        m = len(self.measured_qubits)
        if m == 0:
            return np.zeros((1, 0), dtype=np.int8)
        pats = np.arange(1 << m)
        cols = [1 - 2 * ((pats >> (m - 1 - k)) & 1) for k in range(m)]
        return np.stack(cols, axis=1).astype(np.int8)

    def conditional_block(self, pattern: int) -> np.ndarray:
        """Sub-normalized state of unmeasured qubits for an ideal pattern.

        Projects the measured qubits onto ``pattern`` (pre-flip: readout
        flips act on recorded bits, not on the state) and traces them
        out.
        """
        n = int(round(math.log2(self.rho.shape[0])))
        m = len(self.measured_qubits)
        keep = [q for q in range(n) if q not in self.measured_qubits]
        fixed = 0
        for k, q in enumerate(self.measured_qubits):
            if (pattern >> (m - 1 - k)) & 1:
                fixed |= 1 << (n - 1 - q)
        idx = np.empty(1 << len(keep), dtype=np.int64)
        for r in range(1 << len(keep)):
            i = fixed
            for pos, q in enumerate(keep):
                if (r >> (len(keep) - 1 - pos)) & 1:
                    i |= 1 << (n - 1 - q)
            idx[r] = i
        return self.rho[np.ix_(idx, idx)]


def validate_density(rho: np.ndarray, herm_tol=1e-12, trace_tol=1e-12,
                     eig_tol=1e-10) -> None:
    if not np.allclose(rho, rho.conj().T, atol=herm_tol):
        raise ValueError("density matrix is not Hermitian")
    tr = float(np.real(np.trace(rho)))
    if abs(tr - 1.0) > trace_tol:
        raise ValueError(f"density trace {tr} drifted from 1")
    evals = np.linalg.eigvalsh((rho + rho.conj().T) / 2)
    if evals.min() < -eig_tol:
        raise ValueError(f"density has negative eigenvalue {evals.min()}")


def run_dense_channel(ann: AnnotatedCircuit) -> DenseResult:
    """Evolve the exact density matrix with all channels applied."""
    circuit = ann.circuit
    n = circuit.n_qubits
    _check_n(n)
    d = 1 << n
    rho = np.zeros((d, d), dtype=complex)
    rho[0, 0] = 1.0

    measured: list[int] = []
    flip_probs: list[tuple[float, float]] = []
    for kind, payload, site in iter_events(ann):
        if kind == "init":
            if site is not None:
                rho = depolarize1(rho, site.probs[0], payload, n)
            continue
        instr = payload
        if instr.op == "IDLE":
            if site is not None:
                rho = depolarize1(rho, site.probs[0], instr.qubits[0], n)
        elif instr.op == "MZ":
            measured.append(instr.qubits[0])
            flip_probs.append(tuple(site.probs) if site is not None else (0.0, 0.0))
        elif instr.op == "RESET":
            rho = _reset_rho(rho, instr.qubits[0], n)
            if site is not None:
                rho = depolarize1(rho, site.probs[0], instr.qubits[0], n)
        else:
            if instr.op == "CZ":
                rho = apply_cz_rho(rho, *instr.qubits, n)
            elif instr.op == "CNOT":
                rho = apply_cnot_rho(rho, *instr.qubits, n)
            elif len(instr.qubits) == 2:
                rho = apply_2q_rho(rho, _gate_unitary(instr), *instr.qubits, n)
            else:
                rho = apply_1q_rho(rho, _gate_unitary(instr), instr.qubits[0], n)
            if site is not None:
                if len(instr.qubits) == 2:
                    rho = depolarize2(rho, site.probs[0], *instr.qubits, n)
                else:
                    rho = depolarize1(rho, site.probs[0], instr.qubits[0], n)

    drift = abs(float(np.real(np.trace(rho))) - 1.0)
    if drift > 1e-9:
        raise ValueError(f"trace drift {drift:.3e} exceeds 1e-9; non-physical state")

    probs_ideal = _pattern_distribution(np.real(np.diagonal(rho)), measured, n)
    probs = _apply_flips(probs_ideal, flip_probs)
    return DenseResult(rho, circuit.labels(), measured, probs, probs_ideal)


def _reset_rho(rho, q, n):
    t = rho.reshape((2,) * (2 * n))
    keep0 = np.take(np.take(t, 0, axis=n + q), 0, axis=q)
    keep1 = np.take(np.take(t, 1, axis=n + q), 1, axis=q)
    out = np.zeros_like(t)
    idx = [slice(None)] * (2 * n)
    idx[q] = 0
    idx[n + q] = 0
    out[tuple(idx)] = keep0 + keep1
    return out.reshape(rho.shape)


def _measurement_rank(measured):
    """Permutation sending ascending-qubit axes to measurement order."""
    return np.argsort(np.argsort(measured))


def _pattern_distribution(diag, measured, n):
    """Joint outcome distribution over measured qubits, label order."""
    t = np.asarray(diag, dtype=float).reshape((2,) * n)
    unmeasured = tuple(q for q in range(n) if q not in measured)
    if unmeasured:
        t = np.add.reduce(t, axis=unmeasured)
    if measured:
        t = np.transpose(t, axes=_measurement_rank(measured))
    return np.maximum(t.reshape(-1), 0.0)


def _apply_flips(probs, flip_probs):
    m = len(flip_probs)
    t = probs.reshape((2,) * m) if m else probs.copy()
    for k, (p0, p1) in enumerate(flip_probs):
        if p0 == 0.0 and p1 == 0.0:
            continue
        sl0 = np.take(t, 0, axis=k)
        sl1 = np.take(t, 1, axis=k)
        new0 = sl0 * (1.0 - p0) + sl1 * p1
        new1 = sl0 * p0 + sl1 * (1.0 - p1)
        t = np.stack([new0, new1], axis=k)
    return t.reshape(-1)


# -- trajectory mode ------------------------------------------------------

def _apply_1q_batch(psi, u, q, n):
    """Apply a 1-qubit unitary to a (B, 2^n) batch of state vectors."""
    b = psi.shape[0]
    pre = 1 << q
    post = 1 << (n - 1 - q)
    t = psi.reshape(b, pre, 2, post)
    return np.einsum("ij,apjq->apiq", u, t).reshape(b, 1 << n)


def _apply_2q_batch(psi, u4, a, b_q, n):
    b = psi.shape[0]
    t = psi.reshape((b,) + (2,) * n)
    u = u4.reshape(2, 2, 2, 2)
    out = np.tensordot(t, u, axes=([a + 1, b_q + 1], [2, 3]))
    out = np.moveaxis(out, (-2, -1), (a + 1, b_q + 1))
    return out.reshape(b, 1 << n)


def run_dense_trajectories(ann: AnnotatedCircuit, shots: int, seed: int,
                           batch: int = 4096) -> ShotTable:
    """Sample ShotRecords by stochastic unraveling of the noisy circuit.

    Each noise site draws one Pauli kick (same branch indexing as the
    frame sampler); measurement outcomes are drawn from the Born
    distribution of the surviving pure state, then readout flips apply.
    """
    circuit = ann.circuit
    n = circuit.n_qubits
    _check_n(n)
    d = 1 << n

    events = []
    n_rand = 0

    def alloc():
        nonlocal n_rand
        n_rand += 1
        return n_rand - 1

    for kind, payload, site in iter_events(ann):
        r_main = alloc() if (kind == "instr" and payload.op == "RESET") else -1
        r_site = alloc() if site is not None else -1
        events.append((kind, payload, site, r_main, r_site))
    born_idx = alloc()

    measured: list[int] = []
    out = np.empty((shots, len(circuit.labels())), dtype=np.uint8)
    for lo in range(0, shots, batch):
        hi = min(lo + batch, shots)
        ids = np.arange(lo, hi, dtype=np.uint64)
        base = shot_base(seed, ids)
        m_count = hi - lo
        psi = np.zeros((m_count, d), dtype=complex)
        psi[:, 0] = 1.0
        flips = []  # (out_col, p0, p1, ridx)
        measured = []
        for kind, payload, site, r_main, r_site in events:
            if kind == "init":
                if site is not None:
                    psi = _depol1_batch(psi, site.probs[0], payload, n, base, r_site)
                continue
            instr = payload
            if instr.op == "IDLE":
                if site is not None:
                    psi = _depol1_batch(psi, site.probs[0], instr.qubits[0], n,
                                        base, r_site)
            elif instr.op == "MZ":
                col = len(measured)
                measured.append(instr.qubits[0])
                if site is not None:
                    flips.append((col, site.probs[0], site.probs[1], r_site))
            elif instr.op == "RESET":
                psi = _reset_batch(psi, instr.qubits[0], n, base, r_main)
                if site is not None:
                    psi = _depol1_batch(psi, site.probs[0], instr.qubits[0], n,
                                        base, r_site)
            else:
                u = _gate_unitary(instr)
                if len(instr.qubits) == 2:
                    psi = _apply_2q_batch(psi, u, *instr.qubits, n)
                    if site is not None:
                        psi = _depol2_batch(psi, site.probs[0], *instr.qubits, n,
                                            base, r_site)
                else:
                    psi = _apply_1q_batch(psi, u, instr.qubits[0], n)
                    if site is not None:
                        psi = _depol1_batch(psi, site.probs[0], instr.qubits[0], n,
                                            base, r_site)

        bits = _born_sample(psi, measured, n, base, born_idx)
        for col, p0, p1, ridx in flips:
            u = unit_from(base, ridx)
            pe = np.where(bits[:, col] == 0, p0, p1)
            bits[:, col] ^= (u < pe).astype(np.uint8)
        out[lo:hi] = bits

    values = (1 - 2 * out.astype(np.int8)).astype(np.int8)
    from .frame import circuit_fingerprint

    return ShotTable(circuit.labels(), values, seed,
                     circuit_hash=circuit_fingerprint(ann))


def _depol1_batch(psi, p, q, n, base, ridx):
    if p == 0.0:
        return psi
    u = unit_from(base, ridx)
    hit = u < p
    if not hit.any():
        return psi
    k = (u * 3.0 / p).astype(np.int64)
    for c, char in enumerate("XYZ"):
        rows = hit & (k == c)
        if rows.any():
            psi[rows] = _apply_1q_batch(psi[rows], PAULI_1Q[char], q, n)
    return psi


def _depol2_batch(psi, p, a, b, n, base, ridx):
    if p == 0.0:
        return psi
    u = unit_from(base, ridx)
    hit = u < p
    if not hit.any():
        return psi
    k = (u * 15.0 / p).astype(np.int64)
    for c, (ca, cb) in enumerate(TWO_QUBIT_PAULIS):
        rows = hit & (k == c)
        if rows.any():
            sub = psi[rows]
            if ca != "I":
                sub = _apply_1q_batch(sub, PAULI_1Q[ca], a, n)
            if cb != "I":
                sub = _apply_1q_batch(sub, PAULI_1Q[cb], b, n)
            psi[rows] = sub
    return psi


def _reset_batch(psi, q, n, base, ridx):
    b = psi.shape[0]
    pre = 1 << q
    post = 1 << (n - 1 - q)
    t = psi.reshape(b, pre, 2, post)
    p0 = (np.abs(t[:, :, 0, :]) ** 2).sum(axis=(1, 2))
    u = unit_from(base, ridx)
    take1 = u >= p0
    out = np.zeros_like(t)
    out[~take1, :, 0, :] = t[~take1, :, 0, :]
    out[take1, :, 0, :] = t[take1, :, 1, :]  # project to |1> then flip to |0>
    norms = np.sqrt((np.abs(out) ** 2).sum(axis=(1, 2, 3)))
    norms[norms == 0.0] = 1.0
    out /= norms[:, None, None, None]
    return out.reshape(b, 1 << n)


def _born_sample(psi, measured, n, base, ridx):
    b = psi.shape[0]
    prob = (np.abs(psi) ** 2).reshape((b,) + (2,) * n)
    unmeasured = tuple(q + 1 for q in range(n) if q not in measured)
    if unmeasured:
        prob = np.add.reduce(prob, axis=unmeasured)
    m = len(measured)
    if m == 0:
        return np.zeros((b, 0), dtype=np.uint8)
    perm = [0] + [int(x) + 1 for x in _measurement_rank(measured)]
    prob = np.transpose(prob, axes=perm).reshape(b, 1 << m)
    cum = np.cumsum(prob, axis=1)
    cum /= cum[:, -1:]
    u = unit_from(base, ridx)
    pattern = np.minimum((cum < u[:, None]).sum(axis=1), (1 << m) - 1)
    bits = np.empty((b, m), dtype=np.uint8)
    for k in range(m):
        bits[:, k] = (pattern >> (m - 1 - k)) & 1
    return bits


def run_dense(ann: AnnotatedCircuit, mode: str = "exact", shots: int = 0,
              seed: int = 0):
    """Dispatcher: mode 'exact' -> DenseResult, 'trajectory' -> ShotTable."""
    if mode == "exact":
        return run_dense_channel(ann)
    if mode == "trajectory":
        return run_dense_trajectories(ann, shots, seed)
    raise ValueError(f"unknown dense mode {mode!r}")
