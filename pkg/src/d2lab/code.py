"""Distance-2 surface-code blocks and the experiments built on them.

A logical block lives on four data qubits D1..D4 with stabilizer
generators X1X2X3X4, Z1Z2, Z3Z4 and logical operators Z_L = Z1Z3,
X_L = X3X4, Y_L = i X_L Z_L = Z1 Y3 X4.  This module provides:

* fault-tolerant preparation circuits for the Z/X eigenstates (the
  CNOT+H form whose single-fault sets are exhaustively auditable) and
  the non-fault-tolerant chain encoder for arbitrary logical states,
* the transversal CNOT between two blocks and the gate-teleportation
  rotation circuits,
* logical measurement compilation with the matching post-selection
  rules,
* post-selected estimation from shot tables or exact distributions, and
* the single-fault injection auditor.

Circuits are built at the CNOT level first (that is the form the fault
audit reasons about) and lowered to the device gate set (H/CZ layers)
for execution.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, replace

import numpy as np

from .circuits import (BARRIER, Circuit, Instruction, ScheduleError,
                       compile_measurement_basis, fold_rotation, schedule)
from .paulis import PauliString, commutes, conjugate, multiply
from .records import ShotTable

# Default physical layouts on the 2x4 grid (0-based indices; q1..q8 are
# 0..7, top row 0..3, bottom row 4..7).  Grid edges: the six horizontal
# neighbours plus the four verticals (q+4).  Block position labelings
# are chosen so every two-qubit gate of the corresponding circuits acts
# on a grid edge, matching the hardware constraints described for the
# experiments.
CHAIN_A = (0, 1, 2, 3)
CHAIN_B = (4, 5, 6, 7)
# Single-block FT |0_L> on the q1-q4 chain: D1=q2, D2=q3, D3=q4, D4=q1.
FT_Z_CHAIN = (1, 2, 3, 0)
# Interleaved Bell-pair layout: |+-_L> control uses the outer columns,
# |0/1_L> target the inner ones; transversal pairs are all grid edges.
BELL_CONTROL = (4, 0, 3, 7)   # D1=q5, D2=q1, D3=q4, D4=q8
BELL_TARGET = (5, 1, 2, 6)    # D1=q6, D2=q2, D3=q3, D4=q7

_STABILIZER_PATTERNS = ("XXXX", "ZZII", "IIZZ")
_LOGICAL_PATTERNS = {"Z": "ZIZI", "X": "IIXX", "Y": "ZIYX"}


@dataclass(frozen=True)
class LogicalBlockSpec:
    """One logical qubit: position labels D1..D4 on physical qubits.

    ``name`` prefixes measurement labels when several blocks coexist
    (e.g. ``c:m1z``); single-block circuits use the empty prefix.
    """

    data_qubits: tuple[int, int, int, int]
    n_qubits: int
    name: str = ""

    def __post_init__(self):
        if len(set(self.data_qubits)) != 4:
            raise ValueError("block needs four distinct data qubits")
        if any(not 0 <= q < self.n_qubits for q in self.data_qubits):
            raise ValueError("data qubit out of range")

    def op(self, pattern: str, phase: str = "+") -> PauliString:
        """Pauli acting as ``pattern`` on D1..D4 (identity elsewhere)."""
        chars = ["I"] * self.n_qubits
        for pos, ch in enumerate(pattern):
            chars[self.data_qubits[pos]] = ch
        return PauliString.from_label(phase + "".join(chars))

    def stabilizers(self) -> list[PauliString]:
        return [self.op(p) for p in _STABILIZER_PATTERNS]

    def logical(self, basis: str) -> PauliString:
        return self.op(_LOGICAL_PATTERNS[basis])

    def label(self, position: int, basis: str) -> str:
        prefix = f"{self.name}:" if self.name else ""
        return f"{prefix}m{position}{basis.lower()}"

    def validate(self) -> None:
        stabs = self.stabilizers()
        for i, s in enumerate(stabs):
            for t in stabs[i + 1:]:
                assert commutes(s, t)
        zl, xl = self.logical("Z"), self.logical("X")
        assert all(commutes(zl, s) and commutes(xl, s) for s in stabs)
        assert not commutes(zl, xl)
        assert multiply(xl, zl).scaled(1) == self.logical("Y")


@dataclass(frozen=True)
class LogicalLayout:
    """Two disjoint blocks plus the transversal pairing D_i -> D_i."""

    control: LogicalBlockSpec
    target: LogicalBlockSpec

    def __post_init__(self):
        if self.control.n_qubits != self.target.n_qubits:
            raise ValueError("blocks must share the qubit register")
        if set(self.control.data_qubits) & set(self.target.data_qubits):
            raise ValueError("blocks overlap")

    @property
    def n_qubits(self) -> int:
        return self.control.n_qubits

    def pairs(self) -> list[tuple[int, int]]:
        return list(zip(self.control.data_qubits, self.target.data_qubits))


@dataclass(frozen=True)
class Condition:
    """A parity constraint: the product over ``labels`` must be +1."""

    name: str
    labels: tuple[str, ...]


@dataclass(frozen=True)
class PostSelectionRule:
    conditions: tuple[Condition, ...]

    def __add__(self, other: "PostSelectionRule") -> "PostSelectionRule":
        return PostSelectionRule(self.conditions + other.conditions)


EMPTY_RULE = PostSelectionRule(())


@dataclass(frozen=True)
class Observable:
    """A +-1 observable: sign times the product of measurement labels."""

    name: str
    labels: tuple[str, ...]
    sign: int = 1


@dataclass(frozen=True)
class MeasurementSpec:
    """How to measure one block logically in a given basis.

    ``mz_tag`` marks whose purpose the readout serves: tomography
    readouts default to "characterize" (so idealized-characterization
    studies can switch their flips off); measurements that are part of a
    gate (the teleportation ancilla) use "gate_measure".
    """

    block: LogicalBlockSpec
    basis: str
    bases: dict[int, str]          # physical qubit -> measurement basis
    labels: dict[int, str]         # physical qubit -> label
    rule: PostSelectionRule
    observable: Observable
    mz_tag: str = "characterize"


def logical_measure(block: LogicalBlockSpec, basis: str,
                    mz_tag: str = "characterize") -> MeasurementSpec:
    """Measurement bases, post-selection conditions and logical value.

    Z: all-Z, conditions m1z*m2z and m3z*m4z, value m1z*m3z.
    X: all-X, condition m1x*m2x*m3x*m4x, value m3x*m4x.
    Y: bases (Z,Z,Y,X) on D1..D4, condition m1z*m2z, value m1z*m3y*m4x
    (the Y measurement is not fault-tolerant; its rule checks only the
    surviving Z1Z2 parity).
    """
    d = block.data_qubits
    pre = f"{block.name}:" if block.name else ""
    if basis == "Z":
        labs = {d[i]: block.label(i + 1, "Z") for i in range(4)}
        bases = {q: "Z" for q in d}
        conds = (
            Condition(f"{pre}z12", (labs[d[0]], labs[d[1]])),
            Condition(f"{pre}z34", (labs[d[2]], labs[d[3]])),
        )
        obs = Observable(f"{pre}ZL", (labs[d[0]], labs[d[2]]))
    elif basis == "X":
        labs = {d[i]: block.label(i + 1, "X") for i in range(4)}
        bases = {q: "X" for q in d}
        conds = (Condition(f"{pre}x1234", tuple(labs[q] for q in d)),)
        obs = Observable(f"{pre}XL", (labs[d[2]], labs[d[3]]))
    elif basis == "Y":
        pos_bases = ("Z", "Z", "Y", "X")
        labs = {d[i]: block.label(i + 1, pos_bases[i]) for i in range(4)}
        bases = {d[i]: pos_bases[i] for i in range(4)}
        conds = (Condition(f"{pre}z12", (labs[d[0]], labs[d[1]])),)
        obs = Observable(f"{pre}YL", (labs[d[0]], labs[d[2]], labs[d[3]]))
    else:
        raise ValueError(f"unknown logical basis {basis!r}")
    return MeasurementSpec(block, basis, bases, labs, PostSelectionRule(conds),
                           obs, mz_tag)


def attach_measurements(circuit: Circuit, specs: list[MeasurementSpec],
                        ) -> tuple[Circuit, PostSelectionRule]:
    """Compile all blocks' logical measurements as one terminal layer."""
    bases: dict[int, str] = {}
    labels: dict[int, str] = {}
    mz_tags: dict[int, str] = {}
    rule = EMPTY_RULE
    for spec in specs:
        bases.update(spec.bases)
        labels.update(spec.labels)
        mz_tags.update({q: spec.mz_tag for q in spec.bases})
        rule = rule + spec.rule
    measured = compile_measurement_basis(circuit, bases, labels, mz_tags)
    return measured, rule


# -- preparation circuits (CNOT level) ------------------------------------

def prep_ft_z(block: LogicalBlockSpec, eigen: int = 0, tag: str = "") -> list:
    """Fault-tolerant |0_L>/|1_L> preparation items (CNOT+H form).

    H on D1, CNOT D1->D2, then CNOT D2->D3 and CNOT D1->D4 in parallel;
    eigen=1 appends the transversal logical X (X on D3, D4).  Every
    single X fault propagates to X1X2X3X4 (a stabilizer), X2X3 or X1X4
    (both detected), which the audit verifies.
    """
    d = block.data_qubits
    items = [
        Instruction("H", (d[0],), tag=tag), BARRIER,
        Instruction("CNOT", (d[0], d[1]), tag=tag), BARRIER,
        Instruction("CNOT", (d[1], d[2]), tag=tag),
        Instruction("CNOT", (d[0], d[3]), tag=tag),
    ]
    if eigen == 1:
        items += [BARRIER, Instruction("X", (d[2],), tag=tag),
                  Instruction("X", (d[3],), tag=tag)]
    elif eigen != 0:
        raise ValueError("eigen must be 0 or 1")
    return items


def prep_ft_x(block: LogicalBlockSpec, eigen: str = "+", tag: str = "") -> list:
    """Fault-tolerant |+_L>/|-_L> preparation: two Bell pairs.

    H on D1 and D3, then CNOT D1->D2 and CNOT D3->D4; '-' appends the
    transversal logical Z (Z on D1, D3).
    """
    d = block.data_qubits
    items = [
        Instruction("H", (d[0],), tag=tag),
        Instruction("H", (d[2],), tag=tag), BARRIER,
        Instruction("CNOT", (d[0], d[1]), tag=tag),
        Instruction("CNOT", (d[2], d[3]), tag=tag),
    ]
    if eigen == "-":
        items += [BARRIER, Instruction("Z", (d[0],), tag=tag),
                  Instruction("Z", (d[2],), tag=tag)]
    elif eigen != "+":
        raise ValueError("eigen must be '+' or '-'")
    return items


def prep_nft_arbitrary(block: LogicalBlockSpec, alpha: complex, beta: complex,
                       tag: str = "") -> list:
    """Chain encoder for alpha|0_L> + beta|1_L> (not fault-tolerant).

    Rotates D3 into alpha|0> + beta|1>, entangles D3->D4, builds a Bell
    pair D1->D2 and copies its parity down the chain via D2->D3, using
    only nearest-neighbour gates D1-D2-D3-D4.
    """
    norm = abs(alpha) ** 2 + abs(beta) ** 2
    if abs(norm - 1.0) > 1e-9:
        raise ValueError(f"amplitudes not normalized: |a|^2+|b|^2 = {norm}")
    d = block.data_qubits
    theta = 2.0 * math.atan2(abs(beta), abs(alpha))
    items: list = [Instruction("H", (d[0],), tag=tag)]
    if abs(beta) > 0:
        items.append(Instruction("RX", (d[2],), angle=theta, tag=tag))
        phi = cmath.phase(beta) - cmath.phase(alpha) + math.pi / 2.0
        phi = math.remainder(phi, 2.0 * math.pi)
        if abs(phi) > 1e-12:
            items += [BARRIER, Instruction("RZ", (d[2],), angle=phi, tag=tag)]
    items += [
        BARRIER,
        Instruction("CNOT", (d[0], d[1]), tag=tag), BARRIER,
        Instruction("CNOT", (d[1], d[2]), tag=tag), BARRIER,
        Instruction("CNOT", (d[2], d[3]), tag=tag),
    ]
    return items


_STATE_AMPLITUDES = {
    "0": (1.0, 0.0),
    "1": (0.0, 1.0),
    "+": (1 / math.sqrt(2), 1 / math.sqrt(2)),
    "-": (1 / math.sqrt(2), -1 / math.sqrt(2)),
    "i": (1 / math.sqrt(2), 1j / math.sqrt(2)),
    "-i": (1 / math.sqrt(2), -1j / math.sqrt(2)),
}


def state_amplitudes(state: str) -> tuple[complex, complex]:
    """(alpha, beta) for a named logical state 0/1/+/-/i/-i."""
    try:
        return _STATE_AMPLITUDES[state]
    except KeyError:
        raise ValueError(f"unknown logical state {state!r}")


# -- transversal CNOT and teleportation ------------------------------------

def transversal_cnot(layout: LogicalLayout, tag: str = "") -> list:
    """Four physical CNOTs control D_i -> target D_i, device form.

    Compiled as an H layer on the targets, two staggered CZ layers
    (positions 1,3 then 2,4 so neighbouring verticals never fire
    together), and the closing H layer.
    """
    pairs = layout.pairs()
    targets = [t for _, t in pairs]
    items: list = [Instruction("H", (t,), tag=tag) for t in targets]
    items.append(BARRIER)
    for k in (0, 2):
        c, t = pairs[k]
        items.append(Instruction("CZ", (c, t), tag=tag))
    items.append(BARRIER)
    for k in (1, 3):
        c, t = pairs[k]
        items.append(Instruction("CZ", (c, t), tag=tag))
    items.append(BARRIER)
    items += [Instruction("H", (t,), tag=tag) for t in targets]
    return items


def transversal_cnot_cnot_level(layout: LogicalLayout, tag: str = "") -> list:
    """CNOT-level form of the transversal CNOT (for the fault audit)."""
    pairs = layout.pairs()
    items: list = []
    for k in (0, 2):
        items.append(Instruction("CNOT", pairs[k], tag=tag))
    items.append(BARRIER)
    for k in (1, 3):
        items.append(Instruction("CNOT", pairs[k], tag=tag))
    return items


@dataclass(frozen=True)
class TeleportSpec:
    """Gate-teleportation pieces for one rotation gate.

    ``accept`` post-selects shots where the ancilla's logical outcome is
    +1 and its stabilizer conditions pass; ``ancilla_measure`` is the
    logical Z (axis Z) or X (axis X) measurement producing those labels.
    """

    axis: str
    theta: float
    data_block: LogicalBlockSpec
    ancilla_block: LogicalBlockSpec
    ancilla_amplitudes: tuple[complex, complex]
    layout: LogicalLayout
    ancilla_measure: MeasurementSpec
    accept: PostSelectionRule

    def items(self) -> list:
        """Standalone form: ancilla prep + transversal CNOT (the data
        block is assumed already prepared)."""
        a, b = self.ancilla_amplitudes
        out = list(prep_nft_arbitrary(self.ancilla_block, a, b,
                                      tag="ancilla_prep"))
        out.append(BARRIER)
        out += transversal_cnot(self.layout)
        return out


def teleport_rotation(axis: str, theta: float, data_block: LogicalBlockSpec,
                      ancilla_block: LogicalBlockSpec) -> TeleportSpec:
    """Teleported R_Z(theta) or R_X(theta) acting on ``data_block``.

    Axis Z: ancilla (|0_L> + e^{i theta}|1_L>)/sqrt(2), transversal CNOT
    with the data block as control, ancilla measured in the logical Z
    basis.  Axis X: ancilla cos(theta/2)|0_L> - i sin(theta/2)|1_L>,
    CNOT with the ancilla as control, ancilla measured in logical X.

    Acceptance is simply "ancilla logical outcome +1" (the rejected
    branch would need the compensation rotation; post-selection discards
    it).  The ancilla stabilizer parities are NOT checked: this retains
    shots where a gate fault spread to the ancilla, which is what makes
    the teleported gates measurably worse than the bare transversal
    CNOT even with idealized ancilla states.
    """
    if not math.isfinite(theta):
        raise ValueError("rotation angle must be finite")
    if axis == "Z":
        amps = (1 / math.sqrt(2), cmath.exp(1j * theta) / math.sqrt(2))
        layout = LogicalLayout(control=data_block, target=ancilla_block)
        meas_basis = "Z"
    elif axis == "X":
        amps = (math.cos(theta / 2.0), -1j * math.sin(theta / 2.0))
        layout = LogicalLayout(control=ancilla_block, target=data_block)
        meas_basis = "X"
    else:
        raise ValueError(f"teleportation axis must be 'Z' or 'X', got {axis!r}")

    ameas = logical_measure(ancilla_block, meas_basis, mz_tag="gate_measure")
    ameas = replace(ameas, rule=EMPTY_RULE)
    accept = PostSelectionRule(
        (Condition(ameas.observable.name + "=+1", ameas.observable.labels),))
    return TeleportSpec(axis, theta, data_block, ancilla_block, amps, layout,
                        ameas, accept)


def lower_to_device(circuit: Circuit) -> Circuit:
    """Replace CNOTs with H-CZ-H in separated H-/CZ-layers.

    Post-CNOT H layers merge with the next moment's pre-CNOT H layer
    (they commute with everything between), but never with a CZ layer.
    """
    items: list = []
    pending: list[Instruction] = []
    for moment in circuit.moments:
        phase_a = list(pending)
        pending = []
        czs: list[Instruction] = []
        for instr in moment:
            if instr.op == "IDLE":
                continue
            if instr.op == "CNOT":
                c, t = instr.qubits
                phase_a.append(Instruction("H", (t,), tag=instr.tag))
                czs.append(Instruction("CZ", (c, t), tag=instr.tag))
                pending.append(Instruction("H", (t,), tag=instr.tag))
            else:
                phase_a.append(instr)
        if phase_a:
            items += phase_a
            items.append(BARRIER)
        if czs:
            items += czs
            items.append(BARRIER)
    items += pending
    return schedule(circuit.n_qubits, items, circuit.qubit_tags)


# -- post-selected estimation ----------------------------------------------

@dataclass(frozen=True)
class Estimate:
    """Post-selected expectation value with binomial uncertainty.

    ``n_pass``/``n_total`` are None for exact-distribution estimates.
    ``value`` is None when nothing passed post-selection (the empty
    estimate signal).
    """

    value: float | None
    ps_rate: float
    n_pass: int | None
    n_total: int | None
    two_sigma: float | None

    @property
    def is_empty(self) -> bool:
        return self.value is None


def binom_2sigma(p_hat: float, n: int) -> float:
    """2 sqrt(p(1-p)/n); the standard binomial uncertainty at 2 sigma."""
    if n is None or n < 1:
        raise ValueError("uncertainty undefined for n < 1")
    if not 0.0 <= p_hat <= 1.0:
        raise ValueError(f"p_hat {p_hat} outside [0, 1]")
    return 2.0 * math.sqrt(p_hat * (1.0 - p_hat) / n)


def postselect_and_estimate(shots: ShotTable, rule: PostSelectionRule,
                            observable: Observable) -> Estimate:
    """Sampled estimate: keep shots passing every condition."""
    mask = np.ones(shots.n_shots, dtype=bool)
    for cond in rule.conditions:
        verdict = shots.product(cond.labels) == 1
        shots.verdicts[cond.name] = verdict
        mask &= verdict
    n_total = shots.n_shots
    n_pass = int(mask.sum())
    ps_rate = n_pass / n_total
    if n_pass == 0:
        return Estimate(None, ps_rate, 0, n_total, None)
    vals = shots.product(observable.labels)[mask] * observable.sign
    p_plus = float((vals == 1).mean())
    value = 2.0 * p_plus - 1.0
    two_sigma = 2.0 * binom_2sigma(p_plus, n_pass)
    return Estimate(value, ps_rate, n_pass, n_total, two_sigma)


def postselect_exact(result, rule: PostSelectionRule,
                     observable: Observable) -> Estimate:
    """Exact estimate from a DenseResult's pattern distribution."""
    labels = result.labels
    pv = result.pattern_values()

    def col_product(names):
        out = np.ones(pv.shape[0], dtype=np.int64)
        for nm in names:
            out = out * pv[:, labels.index(nm)]
        return out

    mask = np.ones(pv.shape[0], dtype=bool)
    for cond in rule.conditions:
        mask &= col_product(cond.labels) == 1
    p_total = float(result.probs.sum())
    p_pass = float(result.probs[mask].sum())
    ps_rate = p_pass / p_total if p_total > 0 else 0.0
    if p_pass <= 0.0:
        return Estimate(None, ps_rate, None, None, None)
    vals = col_product(observable.labels) * observable.sign
    value = float((result.probs[mask] * vals[mask]).sum() / p_pass)
    return Estimate(value, ps_rate, None, None, 0.0)


def estimate(engine_output, rule: PostSelectionRule, observable: Observable) -> Estimate:
    """Dispatch on ShotTable vs DenseResult."""
    if isinstance(engine_output, ShotTable):
        return postselect_and_estimate(engine_output, rule, observable)
    return postselect_exact(engine_output, rule, observable)


# -- ideal states -----------------------------------------------------------

def block_state_terms(block: LogicalBlockSpec, alpha: complex,
                      beta: complex) -> dict[int, complex]:
    """Sparse amplitudes of alpha|0_L> + beta|1_L> over the full register.

    Keys are computational-basis indices (qubit 0 = MSB); non-block
    qubits are |0>.
    """
    s = 1 / math.sqrt(2)
    logical = {(0, 0, 0, 0): alpha * s, (1, 1, 1, 1): alpha * s,
               (0, 0, 1, 1): beta * s, (1, 1, 0, 0): beta * s}
    n = block.n_qubits
    terms: dict[int, complex] = {}
    for bits, amp in logical.items():
        if amp == 0:
            continue
        idx = 0
        for pos, b in enumerate(bits):
            if b:
                idx |= 1 << (n - 1 - block.data_qubits[pos])
        terms[idx] = terms.get(idx, 0.0) + amp
    return terms


def combine_terms(n_qubits: int, *term_dicts: dict[int, complex]) -> np.ndarray:
    """Tensor product of sparse states on disjoint supports."""
    psi = np.zeros(1 << n_qubits, dtype=complex)
    acc = {0: 1.0 + 0j}
    for terms in term_dicts:
        acc = {ia | ib: aa * ab for ia, aa in acc.items()
               for ib, ab in terms.items()}
    for idx, amp in acc.items():
        psi[idx] += amp
    return psi


def ideal_block_state(block: LogicalBlockSpec, alpha: complex,
                      beta: complex) -> np.ndarray:
    return combine_terms(block.n_qubits, block_state_terms(block, alpha, beta))


def logical_qubit_state(alpha: complex, beta: complex) -> np.ndarray:
    """The 2-dim logical-space vector (for tomography fidelities)."""
    return np.array([alpha, beta], dtype=complex)


BELL_STATES = {
    # (control state, target state) -> logical 2-qubit Bell vector
    ("+", "0"): np.array([1, 0, 0, 1], dtype=complex) / math.sqrt(2),   # Phi+
    ("-", "0"): np.array([1, 0, 0, -1], dtype=complex) / math.sqrt(2),  # Phi-
    ("+", "1"): np.array([0, 1, 1, 0], dtype=complex) / math.sqrt(2),   # Psi+
    ("-", "1"): np.array([0, 1, -1, 0], dtype=complex) / math.sqrt(2),  # Psi-
}


# -- fault injection audit ---------------------------------------------------

TRIVIAL = "trivial"
DETECTED = "detected"
LOGICAL = "logical"


@dataclass
class FaultRecord:
    moment: int          # -1 = right after initialization
    qubit: int
    injected: str        # X, Y or Z
    propagated: PauliString
    klass: str


@dataclass
class AuditReport:
    counts: dict[str, int]
    records: list[FaultRecord]

    def patterns(self, klass: str, min_weight: int = 0) -> set[str]:
        return {r.propagated.bare().label().lstrip("+")
                for r in self.records
                if r.klass == klass and r.propagated.weight >= min_weight}

    def logical_locations(self) -> list[tuple[int, int, str]]:
        return [(r.moment, r.qubit, r.injected)
                for r in self.records if r.klass == LOGICAL]


def _group_keys(generators: list[PauliString]) -> set[tuple[int, int]]:
    """All (x,z) keys of the group generated mod phase."""
    n = generators[0].n if generators else 0
    keys = {PauliString.identity(n).key()}
    changed = True
    while changed:
        changed = False
        for g in generators:
            new = {(kx ^ g.x, kz ^ g.z) for (kx, kz) in keys} - keys
            if new:
                keys |= new
                changed = True
    return keys


def propagate_fault(circuit: Circuit, start_moment: int,
                    fault: PauliString) -> tuple[PauliString, list[int]]:
    """Push a fault from after ``start_moment`` to the end of the circuit.

    Returns the propagated Pauli and, for circuits with measurements,
    the list of measurement-outcome flips it causes (1 = flipped), in
    label order.
    """
    f = fault
    flips: list[int] = []
    meas_seen = 0
    for m, moment in enumerate(circuit.moments):
        for instr in moment:
            if instr.op == "MZ":
                if m > start_moment:
                    zq = PauliString.single(circuit.n_qubits, instr.qubits[0], "Z")
                    flips.append(0 if commutes(f, zq) else 1)
                else:
                    flips.append(0)
                meas_seen += 1
        if m <= start_moment:
            continue
        for instr in moment:
            if instr.op in ("IDLE", "MZ", "RESET"):
                continue
            if instr.op in ("RZ", "RX"):
                folded = fold_rotation(instr)
                if folded is None:
                    raise ScheduleError(
                        "fault audit requires a Clifford circuit")
                if folded == "identity":
                    continue
                f = conjugate(f, folded.gate)
            else:
                f = conjugate(f, instr.gate)
    return f, flips


def fault_injection_audit(circuit: Circuit, blocks: list[LogicalBlockSpec],
                          prepared_logicals: list[PauliString]) -> AuditReport:
    """Exhaustive single-Pauli fault classification for a prep circuit.

    Every location (after initialization and after each moment) on every
    qubit is hit with X, Y and Z; the propagated end-of-circuit operator
    is classified as trivial (stabilizer of the prepared state, i.e. in
    the group generated by the code stabilizers and the prepared logical
    operators), detected (anticommutes with a code stabilizer), or
    logical (an undetectable logical operator).
    """
    if circuit.measured_qubits():
        raise ValueError("audit the preparation circuit, before measurement")
    stab_gens: list[PauliString] = []
    for blk in blocks:
        stab_gens.extend(blk.stabilizers())
    state_keys = _group_keys(stab_gens + list(prepared_logicals))

    records: list[FaultRecord] = []
    counts = {TRIVIAL: 0, DETECTED: 0, LOGICAL: 0}
    for m in range(-1, circuit.n_moments):
        for q in range(circuit.n_qubits):
            for ch in "XYZ":
                f0 = PauliString.single(circuit.n_qubits, q, ch)
                f, _ = propagate_fault(circuit, m, f0)
                if f.key() in state_keys:
                    klass = TRIVIAL
                elif any(not commutes(f, s) for s in stab_gens):
                    klass = DETECTED
                else:
                    klass = LOGICAL
                counts[klass] += 1
                records.append(FaultRecord(m, q, ch, f, klass))
    return AuditReport(counts, records)
