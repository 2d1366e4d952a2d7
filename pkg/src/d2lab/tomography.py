"""Reconstruction and certification: tomography, PTMs, CHSH, uncertainty.

State tomography minimizes sum_i |Tr(rho P_i) - p_i|^2 subject to
rho >= 0 and Tr(rho) = 1.  Because the Pauli basis is orthogonal, the
unconstrained minimizer is the linear-inversion state, and the
constrained one is its Frobenius projection onto the trace-one PSD set,
computed here by Dykstra alternating projections (no external solver).

Gate characterization follows the same pattern: a raw transfer matrix is
solved from input/output expectation sets, embedded as a Choi operator,
projected onto the CPTP set (PSD cone intersected with the
trace-preservation affine subspace), and read back.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .code import Estimate
from .dense import PAULI_1Q

DYKSTRA_TOL = 1e-9
DYKSTRA_CAP = 100_000


class ConvergenceError(RuntimeError):
    """Iteration cap hit; carries the best iterate and its residual."""

    def __init__(self, message, best=None, residual=None):
        super().__init__(message)
        self.best = best
        self.residual = residual


def pauli_labels(n_logical: int) -> list[str]:
    """'I','X','Y','Z' words; leftmost logical qubit is the slow index."""
    return ["".join(t) for t in product("IXYZ", repeat=n_logical)]


def pauli_matrix(label: str) -> np.ndarray:
    out = np.array([[1.0 + 0j]])
    for ch in label:
        out = np.kron(out, PAULI_1Q[ch])
    return out


@dataclass
class ExpectationSet:
    """Measured logical Pauli expectations with uncertainties.

    ``entries`` maps each Pauli label to its Estimate; the identity
    label is pinned to exactly 1 with zero uncertainty.
    """

    n_logical: int
    entries: dict[str, Estimate] = field(default_factory=dict)

    def __post_init__(self):
        # the identity expectation is exactly 1 with zero uncertainty
        ident = "I" * self.n_logical
        self.entries[ident] = Estimate(1.0, 1.0, None, None, 0.0)

    def value(self, label: str) -> float:
        est = self.entries[label]
        if est.is_empty:
            raise ValueError(f"no passing shots for {label}; expectation undefined")
        return est.value

    def vector(self) -> np.ndarray:
        """Expectations in pauli_labels order."""
        return np.array([self.value(lab) for lab in pauli_labels(self.n_logical)])

    def complete(self) -> bool:
        return all(lab in self.entries and not self.entries[lab].is_empty
                   for lab in pauli_labels(self.n_logical))


def expectation_set(n_logical: int, estimates: dict[str, Estimate]) -> ExpectationSet:
    es = ExpectationSet(n_logical)
    for lab, est in estimates.items():
        es.entries[lab] = est
    missing = [lab for lab in pauli_labels(n_logical) if lab not in es.entries]
    if missing:
        raise ValueError(f"incomplete Pauli set, missing {missing}")
    return es


def linear_inversion(es: ExpectationSet) -> np.ndarray:
    d = 2 ** es.n_logical
    rho = np.zeros((d, d), dtype=complex)
    for lab in pauli_labels(es.n_logical):
        rho += es.value(lab) * pauli_matrix(lab)
    return rho / d


# -- Dykstra projections ------------------------------------------------------

def _proj_psd(mat: np.ndarray) -> np.ndarray:
    herm = (mat + mat.conj().T) / 2.0
    evals, vecs = np.linalg.eigh(herm)
    evals = np.maximum(evals, 0.0)
    return (vecs * evals) @ vecs.conj().T


def _dykstra(start: np.ndarray, proj_a, proj_b, objective,
             tol=DYKSTRA_TOL, cap=DYKSTRA_CAP):
    """Dykstra alternating projections onto convex sets A and B.

    Returns (point, objective_log).  Raises ConvergenceError past the
    iteration cap, carrying the best iterate.
    """
    x = start
    inc_a = np.zeros_like(start)
    inc_b = np.zeros_like(start)
    log: list[float] = []
    for _ in range(cap):
        ya = proj_a(x + inc_a)
        inc_a = x + inc_a - ya
        yb = proj_b(ya + inc_b)
        inc_b = ya + inc_b - yb
        log.append(float(objective(yb)))
        if np.linalg.norm(yb - x) < tol:
            return yb, log
        x = yb
    raise ConvergenceError(
        f"projection did not converge within {cap} iterations",
        best=x, residual=log[-1] if log else None)


def mle_state(es: ExpectationSet) -> np.ndarray:
    """Nearest physical density matrix to the measured expectations.

    Returns the minimizer of sum |Tr(rho P_i) - p_i|^2 over trace-one
    PSD matrices (equivalently, the Frobenius projection of the
    linear-inversion state).
    """
    if not es.complete():
        raise ValueError("complete Pauli expectation set required")
    rho0 = linear_inversion(es)
    d = rho0.shape[0]

    def proj_trace(m):
        tr = np.trace(m)
        return m - (tr - 1.0) / d * np.eye(d)

    def objective(m):
        return float(np.linalg.norm(m - rho0) ** 2) * d

    rho, _ = _dykstra(rho0, _proj_psd, proj_trace, objective)
    # clean tiny negative eigenvalues left at the tolerance boundary
    evals, vecs = np.linalg.eigh((rho + rho.conj().T) / 2.0)
    evals = np.maximum(evals, 0.0)
    evals /= evals.sum()
    return (vecs * evals) @ vecs.conj().T


def state_fidelity(rho: np.ndarray, target: np.ndarray) -> float:
    """<psi| rho |psi> for a pure target state."""
    target = np.asarray(target, dtype=complex).reshape(-1)
    if rho.shape != (target.size, target.size):
        raise ValueError(f"dimension mismatch: rho {rho.shape}, target {target.size}")
    return float(np.real(target.conj() @ rho @ target))


# -- Pauli transfer matrices --------------------------------------------------

@dataclass
class PTM:
    """Real transfer matrix over the Pauli basis: p_out = R @ p_in.

    Index order follows pauli_labels(d -> n_logical): (I,X,Y,Z) per
    qubit, leftmost logical qubit slowest.  Trace preservation makes the
    first row (1, 0, ..., 0).
    """

    d: int
    matrix: np.ndarray

    def __post_init__(self):
        want = self.d ** 2
        if self.matrix.shape != (want, want):
            raise ValueError(f"PTM for d={self.d} must be {want}x{want}")

    @property
    def labels(self) -> list[str]:
        return pauli_labels(int(math.log2(self.d)))


def ptm_of_unitary(u: np.ndarray) -> np.ndarray:
    """R_ij = Tr(P_i U P_j U^dag)/d for a logical-space unitary."""
    d = u.shape[0]
    labels = pauli_labels(int(math.log2(d)))
    mats = [pauli_matrix(lab) for lab in labels]
    r = np.empty((d * d, d * d))
    for j, pj in enumerate(mats):
        img = u @ pj @ u.conj().T
        for i, pi in enumerate(mats):
            r[i, j] = np.real(np.trace(pi @ img)) / d
    return r


def ptm_of_channel(kraus_ops: list[np.ndarray]) -> np.ndarray:
    d = kraus_ops[0].shape[0]
    labels = pauli_labels(int(math.log2(d)))
    mats = [pauli_matrix(lab) for lab in labels]
    r = np.empty((d * d, d * d))
    for j, pj in enumerate(mats):
        img = sum(k @ pj @ k.conj().T for k in kraus_ops)
        for i, pi in enumerate(mats):
            r[i, j] = np.real(np.trace(pi @ img)) / d
    return r


def ptm_raw(inputs: list[ExpectationSet], outputs: list[ExpectationSet]) -> PTM:
    """Least-squares transfer matrix from stacked expectation vectors."""
    if len(inputs) != len(outputs) or not inputs:
        raise ValueError("need matching, non-empty input/output sets")
    n_logical = inputs[0].n_logical
    d = 2 ** n_logical
    p_in = np.stack([es.vector() for es in inputs], axis=1)
    p_out = np.stack([es.vector() for es in outputs], axis=1)
    if np.linalg.matrix_rank(p_in, tol=1e-9) < d * d:
        raise ValueError("input state set does not span the Pauli space")
    r = p_out @ np.linalg.pinv(p_in)
    return PTM(d, r)


def choi_from_ptm(r: np.ndarray, d: int) -> np.ndarray:
    """Choi operator rho = (1/d^2) sum_ij R_ij P_i^T (x) P_j.

    With p_out = R p_in this embedding makes trace preservation
    equivalent to Tr_left(rho) = I/d, and complete positivity to
    rho >= 0.
    """
    labels = pauli_labels(int(math.log2(d)))
    mats = [pauli_matrix(lab) for lab in labels]
    rho = np.zeros((d * d, d * d), dtype=complex)
    for i, pi in enumerate(mats):
        for j, pj in enumerate(mats):
            if r[i, j] != 0.0:
                rho += r[i, j] * np.kron(pi.T, pj)
    return rho / (d * d)


def ptm_from_choi(rho: np.ndarray, d: int) -> np.ndarray:
    labels = pauli_labels(int(math.log2(d)))
    mats = [pauli_matrix(lab) for lab in labels]
    r = np.empty((d * d, d * d))
    for i, pi in enumerate(mats):
        for j, pj in enumerate(mats):
            r[i, j] = np.real(np.trace(rho @ np.kron(pi.T, pj)))
    return r


def _trace_left(rho: np.ndarray, d: int) -> np.ndarray:
    return np.trace(rho.reshape(d, d, d, d), axis1=0, axis2=2)


def _proj_trace_preserving(rho: np.ndarray, d: int) -> np.ndarray:
    diff = _trace_left(rho, d) - np.eye(d) / d
    return rho - np.kron(np.eye(d), diff) / d


def project_cptp(raw: PTM) -> tuple[PTM, np.ndarray, list[float]]:
    """Project a raw PTM onto the CPTP set via its Choi operator.

    Alternates between the PSD cone and the trace-preservation affine
    subspace (Dykstra), stopping when successive iterates differ by less
    than 1e-9 in Frobenius norm.  Returns the projected PTM, the
    optimal Choi operator, and the per-iteration objective log
    (sum_ij |Tr(rho P_i^T x P_j) - R_raw_ij|^2).  Dykstra approaches the
    constrained optimum from inside the input's neighbourhood, so the
    logged objective climbs monotonically to the constrained minimum and
    never exceeds it; the log certifies that no iterate overshoots.
    """
    d = raw.d
    if not np.all(np.isfinite(raw.matrix)):
        raise ValueError("raw PTM contains non-finite entries")
    rho_raw = choi_from_ptm(raw.matrix, d)

    def objective(m):
        # equals sum_ij |R(m)_ij - R_raw_ij|^2 by Pauli-basis orthogonality
        return float(np.linalg.norm(m - rho_raw) ** 2) * (d ** 2)

    rho_opt, log = _dykstra(rho_raw, _proj_psd,
                            lambda m: _proj_trace_preserving(m, d),
                            objective)
    r = ptm_from_choi(rho_opt, d)
    return PTM(d, r), rho_opt, log


def gate_fidelity(r: PTM, ideal: PTM | np.ndarray) -> float:
    """Average gate fidelity (Tr(R^T R_ideal) + d) / (d^2 + d)."""
    ideal_m = ideal.matrix if isinstance(ideal, PTM) else ideal
    if ideal_m.shape != r.matrix.shape:
        raise ValueError("PTM dimension mismatch")
    d = r.d
    return float((np.trace(r.matrix.T @ ideal_m) + d) / (d * d + d))


# -- CHSH (Horodecki criterion) ------------------------------------------------

def chsh_criterion(rho: np.ndarray) -> tuple[float, bool]:
    """Sum of the two largest eigenvalues of T^T T and the violation flag.

    T_ij = Tr(rho sigma_i x sigma_j) over i,j in {X,Y,Z}; the CHSH
    inequality is violated iff u1 + u2 > 1 (strict).
    """
    if rho.shape != (4, 4):
        raise ValueError("two-qubit density matrix required")
    paulis = ("X", "Y", "Z")
    t = np.empty((3, 3))
    for i, pi in enumerate(paulis):
        for j, pj in enumerate(paulis):
            t[i, j] = np.real(np.trace(rho @ np.kron(PAULI_1Q[pi], PAULI_1Q[pj])))
    evals = np.linalg.eigvalsh(t.T @ t)
    u1_plus_u2 = float(evals[-1] + evals[-2])
    return u1_plus_u2, u1_plus_u2 > 1.0


# -- uncertainty formatting ------------------------------------------------------

def format_value_2sigma(value: float, two_sigma: float, percent: bool = True) -> str:
    """value(2sigma) notation, e.g. 0.979 +- 0.002 -> '97.9(2)%'.

    The uncertainty is rounded to one significant digit and the value to
    the same decimal place.
    """
    scale = 100.0 if percent else 1.0
    v = value * scale
    u = abs(two_sigma) * scale
    if u == 0.0:
        text = f"{v:.10g}"
        return text + ("%" if percent else "")
    exponent = math.floor(math.log10(u))
    digit = round(u / 10.0 ** exponent)
    if digit == 10:  # rounding bumped to the next decade
        digit = 1
        exponent += 1
    decimals = max(0, -exponent)
    return f"{v:.{decimals}f}({digit})" + ("%" if percent else "")
