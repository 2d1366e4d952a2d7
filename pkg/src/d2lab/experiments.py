"""Named experiment registry.

Every experiment of the study resolves here to concrete circuits plus
post-selection rules and observables:

    ft_zero | ft_one | ft_plus | ft_minus     FT single-block states
    nft(theta,phi)                            chain-encoded logical state
    bell_1..bell_4                            FT logical Bell states
    teleport_rz(theta) | teleport_rx(theta)   teleported rotations
    lptm_cnot | lptm_rz(theta) | lptm_rx(theta)  gate characterization
    phys_zero | phys_one | phys_plus | phys_minus | phys_bell_1..4
                                              unencoded baselines

Angles accept plain radians or pi fractions: ``teleport_rz(pi/4)``,
``nft(pi/2,-pi/2)``.
"""

from __future__ import annotations

import cmath
import math
import re
from dataclasses import dataclass, field

import numpy as np

from .circuits import (BARRIER, Circuit, Instruction, flatten, merge_parallel,
                       schedule)
from .code import (BELL_CONTROL, BELL_STATES, BELL_TARGET, CHAIN_A, CHAIN_B,
                   EMPTY_RULE, Condition, LogicalBlockSpec, LogicalLayout,
                   MeasurementSpec, Observable, PostSelectionRule,
                   attach_measurements, ideal_block_state, logical_measure,
                   logical_qubit_state, lower_to_device, prep_ft_x, prep_ft_z,
                   prep_nft_arbitrary, state_amplitudes, teleport_rotation,
                   transversal_cnot)

N_QUBITS = 8
BASES_1Q = ("X", "Y", "Z")


@dataclass(frozen=True)
class Setting:
    """One measurement configuration: circuit + rule + what it estimates.

    ``observables`` maps logical Pauli labels (e.g. "X" or "XZ") to the
    shot-level observable estimated in this setting.
    """

    name: str
    circuit: Circuit
    rule: PostSelectionRule
    observables: dict[str, Observable]


@dataclass
class StateExperiment:
    """A state preparation characterized by full logical tomography."""

    id: str
    n_logical: int
    settings: list[Setting]
    ideal_logical: np.ndarray
    eigen_label: str | None = None   # natural eigenbasis, for headline ps_rate
    meta: dict = field(default_factory=dict)


@dataclass
class LptmExperiment:
    """A logical gate characterized on the complete input-state set."""

    id: str
    d: int
    input_experiments: dict[str, StateExperiment]
    output_experiments: dict[str, StateExperiment]
    ideal_ptm: np.ndarray
    meta: dict = field(default_factory=dict)


class UnknownExperimentError(KeyError):
    pass


def parse_angle(text: str) -> float:
    """Parse '0.5', 'pi', '-pi/2', '3pi/4', '0.25pi' to radians."""
    t = text.strip().replace(" ", "")
    m = re.fullmatch(r"(-?)(\d+(?:\.\d+)?)?(?:\*?pi)(?:/(\d+(?:\.\d+)?))?", t)
    if m:
        sign = -1.0 if m.group(1) else 1.0
        coeff = float(m.group(2)) if m.group(2) else 1.0
        den = float(m.group(3)) if m.group(3) else 1.0
        return sign * coeff * math.pi / den
    try:
        return float(t)
    except ValueError:
        raise UnknownExperimentError(f"cannot parse angle {text!r}")


# -- single-logical-qubit experiments ---------------------------------------

def _tomography_settings_1q(base: Circuit, block: LogicalBlockSpec,
                            extra_rule: PostSelectionRule = EMPTY_RULE,
                            extra_specs: list[MeasurementSpec] | None = None,
                            ) -> list[Setting]:
    settings = []
    for basis in BASES_1Q:
        spec = logical_measure(block, basis)
        circ, rule = attach_measurements(base, [spec] + list(extra_specs or []))
        settings.append(Setting(
            name=basis,
            circuit=lower_to_device(circ),
            rule=rule + extra_rule,
            observables={basis: spec.observable},
        ))
    return settings


def _single_block_state(exp_id: str, prep_items: list,
                        block: LogicalBlockSpec, alpha: complex, beta: complex,
                        eigen_label: str | None, n_qubits: int) -> StateExperiment:
    base = schedule(n_qubits, prep_items)
    return StateExperiment(
        id=exp_id,
        n_logical=1,
        settings=_tomography_settings_1q(base, block),
        ideal_logical=logical_qubit_state(alpha, beta),
        eigen_label=eigen_label,
        meta={"ideal_physical": ideal_block_state(block, alpha, beta),
              "block": block},
    )


def make_ft_state(exp_id: str, n_qubits: int = 4) -> StateExperiment:
    """FT eigenstate preparations on their chain-compatible layouts."""
    from .code import FT_Z_CHAIN

    if exp_id in ("ft_zero", "ft_one"):
        block = LogicalBlockSpec(FT_Z_CHAIN, n_qubits)
        eigen = 0 if exp_id == "ft_zero" else 1
        items = prep_ft_z(block, eigen)
        alpha, beta = state_amplitudes("0" if eigen == 0 else "1")
        eig = "Z"
    elif exp_id in ("ft_plus", "ft_minus"):
        block = LogicalBlockSpec(CHAIN_A, n_qubits)
        eigen = "+" if exp_id == "ft_plus" else "-"
        items = prep_ft_x(block, eigen)
        alpha, beta = state_amplitudes(eigen)
        eig = "X"
    else:
        raise UnknownExperimentError(exp_id)
    return _single_block_state(exp_id, items, block, alpha, beta, eig, n_qubits)


def make_nft_state(theta: float, phi: float, n_qubits: int = 4) -> StateExperiment:
    """Chain-encoded cos(t/2)|0_L> + e^{i phi} sin(t/2)|1_L>."""
    alpha = math.cos(theta / 2.0)
    beta = cmath.exp(1j * phi) * math.sin(theta / 2.0)
    block = LogicalBlockSpec(tuple(CHAIN_A), n_qubits)
    items = prep_nft_arbitrary(block, alpha, beta)
    exp = _single_block_state(f"nft({theta:.6g},{phi:.6g})", items, block,
                              alpha, beta, None, n_qubits)
    return exp


# -- Bell experiments --------------------------------------------------------

BELL_KINDS = {  # bell_k -> (control eigenstate, target eigenstate)
    1: ("+", "0"), 2: ("-", "0"), 3: ("+", "1"), 4: ("-", "1"),
}


def _tomography_settings_2q(base: Circuit, control: LogicalBlockSpec,
                            target: LogicalBlockSpec,
                            extra_rule: PostSelectionRule = EMPTY_RULE,
                            extra_specs: list[MeasurementSpec] | None = None,
                            ) -> list[Setting]:
    """The nine two-block settings.

    Setting (B1,B2) estimates <B1 B2>; identity components come from the
    Z setting of the idle block: <P I> from (P, Z) and <I Q> from (Z, Q),
    with that block's Z-rule still applied.
    """
    settings = []
    for b1 in BASES_1Q:
        for b2 in BASES_1Q:
            spec_c = logical_measure(control, b1)
            spec_t = logical_measure(target, b2)
            circ, rule = attach_measurements(
                base, [spec_c, spec_t] + list(extra_specs or []))
            obs: dict[str, Observable] = {
                b1 + b2: Observable(
                    f"{b1}{b2}",
                    spec_c.observable.labels + spec_t.observable.labels),
            }
            if b2 == "Z":
                obs[b1 + "I"] = spec_c.observable
            if b1 == "Z":
                obs["I" + b2] = spec_t.observable
            settings.append(Setting(b1 + b2, lower_to_device(circ),
                                    rule + extra_rule, obs))
    return settings


def make_bell(k: int) -> StateExperiment:
    """FT Bell pair: staggered FT preps + transversal CNOT (interleaved
    layout; all two-qubit gates are grid edges)."""
    c_eig, t_eig = BELL_KINDS[k]
    control = LogicalBlockSpec(BELL_CONTROL, N_QUBITS, name="c")
    target = LogicalBlockSpec(BELL_TARGET, N_QUBITS, name="t")
    c_prep = schedule(N_QUBITS, prep_ft_x(control, c_eig))
    t_prep = schedule(N_QUBITS, prep_ft_z(target, 0 if t_eig == "0" else 1))
    merged = merge_parallel(c_prep, t_prep, offset=1)
    items = flatten(merged) + [BARRIER]
    items += transversal_cnot(LogicalLayout(control, target))
    base = schedule(N_QUBITS, items)
    return StateExperiment(
        id=f"bell_{k}",
        n_logical=2,
        settings=_tomography_settings_2q(base, control, target),
        ideal_logical=BELL_STATES[(c_eig, t_eig)],
        eigen_label="ZZ",
        meta={"control": control, "target": target},
    )


# -- teleported rotations -----------------------------------------------------

def _teleport_base(spec, data_prep: Circuit) -> Circuit:
    """Data prep staggered against the ancilla prep, then the CNOT."""
    a_alpha, a_beta = spec.ancilla_amplitudes
    a_prep = schedule(data_prep.n_qubits,
                      prep_nft_arbitrary(spec.ancilla_block, a_alpha, a_beta,
                                         tag="ancilla_prep"))
    merged = merge_parallel(data_prep, a_prep, offset=1)
    items = flatten(merged) + [BARRIER] + transversal_cnot(spec.layout)
    tags = {q: "ancilla_prep" for q in spec.ancilla_block.data_qubits}
    return schedule(data_prep.n_qubits, items, qubit_tags=tags)


def make_teleport(axis: str, theta: float) -> StateExperiment:
    """Teleported rotation acting on a chain-encoded data state.

    Data |+_L> (axis Z) or |0_L> (axis X) on q5-q8, ancilla on q1-q4;
    the data block is tomographed post-selected on the ancilla logical
    outcome +1 and all stabilizer conditions.
    """
    data = LogicalBlockSpec(CHAIN_B, N_QUBITS, name="d")
    ancilla = LogicalBlockSpec(CHAIN_A, N_QUBITS, name="a")
    in_state = "+" if axis == "Z" else "0"
    alpha, beta = state_amplitudes(in_state)
    spec = teleport_rotation(axis, theta, data, ancilla)

    d_prep = schedule(N_QUBITS, prep_nft_arbitrary(data, alpha, beta,
                                                   tag="data_prep"))
    base = _teleport_base(spec, d_prep)
    u = _rz_vec(theta) if axis == "Z" else _rx_vec(theta)
    out = u @ logical_qubit_state(alpha, beta)
    settings = _tomography_settings_1q(
        base, data,
        extra_rule=PostSelectionRule(
            (Condition(spec.ancilla_measure.observable.name + "=+1",
                       spec.ancilla_measure.observable.labels),)),
        extra_specs=[spec.ancilla_measure])
    return StateExperiment(
        id=f"teleport_r{axis.lower()}({theta:.6g})",
        n_logical=1,
        settings=settings,
        ideal_logical=out,
        eigen_label=None,
        meta={"axis": axis, "theta": theta, "data": data, "ancilla": ancilla},
    )


def _rz_vec(theta):
    return np.array([[cmath.exp(-0.5j * theta), 0], [0, cmath.exp(0.5j * theta)]])


def _rx_vec(theta):
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([[c, -1j * s], [-1j * s, c]])


# -- LPTM characterization experiments ----------------------------------------

STATE_SET = ("+", "-", "0", "i")


def make_lptm_rotation(axis: str, theta: float) -> LptmExperiment:
    """Teleported-rotation gate characterized on {+,-,0,i}."""
    from .tomography import ptm_of_unitary

    data = LogicalBlockSpec(CHAIN_B, N_QUBITS, name="d")
    ancilla = LogicalBlockSpec(CHAIN_A, N_QUBITS, name="a")
    u = _rz_vec(theta) if axis == "Z" else _rx_vec(theta)
    inputs: dict[str, StateExperiment] = {}
    outputs: dict[str, StateExperiment] = {}
    for s in STATE_SET:
        alpha, beta = state_amplitudes(s)
        prep = schedule(N_QUBITS, prep_nft_arbitrary(data, alpha, beta,
                                                     tag="data_prep"))
        inputs[s] = StateExperiment(
            id=f"lptm_in({s})", n_logical=1,
            settings=_tomography_settings_1q(prep, data),
            ideal_logical=logical_qubit_state(alpha, beta))

        spec = teleport_rotation(axis, theta, data, ancilla)
        base = _teleport_base(spec, prep)
        accept = PostSelectionRule((Condition(
            spec.ancilla_measure.observable.name + "=+1",
            spec.ancilla_measure.observable.labels),))
        outputs[s] = StateExperiment(
            id=f"lptm_out({s})", n_logical=1,
            settings=_tomography_settings_1q(base, data, extra_rule=accept,
                                             extra_specs=[spec.ancilla_measure]),
            ideal_logical=u @ logical_qubit_state(alpha, beta))
    return LptmExperiment(
        id=f"lptm_r{axis.lower()}({theta:.6g})",
        d=2,
        input_experiments=inputs,
        output_experiments=outputs,
        ideal_ptm=ptm_of_unitary(u),
        meta={"axis": axis, "theta": theta},
    )


def make_lptm_cnot() -> LptmExperiment:
    """Transversal CNOT characterized on the 16 product inputs.

    Control on the q1-q4 chain, target on q5-q8; transversal pairs are
    the verticals.
    """
    from .dense import CNOT_MAT
    from .tomography import ptm_of_unitary

    control = LogicalBlockSpec(CHAIN_A, N_QUBITS, name="c")
    target = LogicalBlockSpec(CHAIN_B, N_QUBITS, name="t")
    layout = LogicalLayout(control, target)
    inputs: dict[str, StateExperiment] = {}
    outputs: dict[str, StateExperiment] = {}
    for s1 in STATE_SET:
        for s2 in STATE_SET:
            key = s1 + s2
            a1, b1 = state_amplitudes(s1)
            a2, b2 = state_amplitudes(s2)
            c_prep = schedule(N_QUBITS, prep_nft_arbitrary(control, a1, b1))
            t_prep = schedule(N_QUBITS, prep_nft_arbitrary(target, a2, b2))
            merged = merge_parallel(c_prep, t_prep, offset=1)
            ideal_in = np.kron(logical_qubit_state(a1, b1),
                               logical_qubit_state(a2, b2))
            inputs[key] = StateExperiment(
                id=f"lptm_in({key})", n_logical=2,
                settings=_tomography_settings_2q(merged, control, target),
                ideal_logical=ideal_in)
            gate = schedule(N_QUBITS, flatten(merged) + [BARRIER]
                            + transversal_cnot(layout))
            outputs[key] = StateExperiment(
                id=f"lptm_out({key})", n_logical=2,
                settings=_tomography_settings_2q(gate, control, target),
                ideal_logical=CNOT_MAT @ ideal_in)
    return LptmExperiment(
        id="lptm_cnot",
        d=4,
        input_experiments=inputs,
        output_experiments=outputs,
        ideal_ptm=ptm_of_unitary(CNOT_MAT),
        meta={},
    )


# -- physical (unencoded) baselines -------------------------------------------

PHYS_STATE_QUBIT = {"phys_zero": 1, "phys_one": 2, "phys_plus": 1,
                    "phys_minus": 1}
PHYS_BELL_PAIR = (5, 6)  # q6-q7, the best CZ pair


def make_physical_state(exp_id: str, qubit: int | None = None,
                        n_qubits: int = N_QUBITS) -> StateExperiment:
    """Single physical qubit prepared and tomographed, no post-selection."""
    q = PHYS_STATE_QUBIT[exp_id] if qubit is None else qubit
    items: list = []
    state = exp_id.split("_")[1]
    if state == "one":
        items.append(Instruction("X", (q,)))
        alpha, beta = state_amplitudes("1")
        eig = "Z"
    elif state == "zero":
        alpha, beta = state_amplitudes("0")
        eig = "Z"
    elif state == "plus":
        items.append(Instruction("H", (q,)))
        alpha, beta = state_amplitudes("+")
        eig = "X"
    else:
        items += [Instruction("H", (q,)), BARRIER, Instruction("Z", (q,))]
        alpha, beta = state_amplitudes("-")
        eig = "X"
    base = schedule(n_qubits, items)
    settings = []
    for basis in BASES_1Q:
        circ = _measure_physical(base, {q: basis})
        obs = Observable(basis, (f"m{q + 1}{basis.lower()}",))
        settings.append(Setting(basis, circ, EMPTY_RULE, {basis: obs}))
    return StateExperiment(
        id=exp_id, n_logical=1, settings=settings,
        ideal_logical=logical_qubit_state(alpha, beta),
        eigen_label=eig, meta={"qubit": q, "physical": True},
    )


def make_physical_bell(k: int, pair: tuple[int, int] = PHYS_BELL_PAIR,
                       n_qubits: int = N_QUBITS) -> StateExperiment:
    """Unencoded Bell pair via H + CNOT on the best CZ pair."""
    c_eig, t_eig = BELL_KINDS[k]
    a, b = pair
    items: list = [Instruction("H", (a,)), BARRIER,
                   Instruction("CNOT", (a, b))]
    post: list = []
    if c_eig == "-":
        post.append(Instruction("Z", (a,)))
    if t_eig == "1":
        post.append(Instruction("X", (b,)))
    if post:
        items += [BARRIER] + post
    base = lower_to_device(schedule(n_qubits, items))
    settings = []
    for b1 in BASES_1Q:
        for b2 in BASES_1Q:
            circ = _measure_physical(base, {a: b1, b: b2})
            la, lb = f"m{a + 1}{b1.lower()}", f"m{b + 1}{b2.lower()}"
            obs = {b1 + b2: Observable(b1 + b2, (la, lb))}
            if b2 == "Z":
                obs[b1 + "I"] = Observable(b1 + "I", (la,))
            if b1 == "Z":
                obs["I" + b2] = Observable("I" + b2, (lb,))
            settings.append(Setting(b1 + b2, circ, EMPTY_RULE, obs))
    return StateExperiment(
        id=f"phys_bell_{k}", n_logical=2, settings=settings,
        ideal_logical=BELL_STATES[(c_eig, t_eig)],
        eigen_label="ZZ", meta={"pair": pair, "physical": True},
    )


def _measure_physical(base: Circuit, bases: dict[int, str]) -> Circuit:
    from .circuits import compile_measurement_basis

    return lower_to_device(compile_measurement_basis(base, bases))


# -- fault audits ---------------------------------------------------------------

def audit_prep(exp_id: str):
    """Single-fault injection audit of a preparation circuit.

    Supported: ft_zero/ft_one/ft_plus/ft_minus and nft(theta,phi) at
    stabilizer-state angles.  The audit runs on the CNOT-level form.
    """
    from .code import FT_Z_CHAIN, fault_injection_audit

    key = exp_id.strip()
    if key in ("ft_zero", "ft_one"):
        block = LogicalBlockSpec(FT_Z_CHAIN, 4)
        items = prep_ft_z(block, 0 if key == "ft_zero" else 1)
        prepared = [block.logical("Z")]
    elif key in ("ft_plus", "ft_minus"):
        block = LogicalBlockSpec(CHAIN_A, 4)
        items = prep_ft_x(block, "+" if key == "ft_plus" else "-")
        prepared = [block.logical("X")]
    else:
        m = re.fullmatch(r"nft\((.+?),(.+)\)", key)
        if not m:
            raise UnknownExperimentError(
                f"cannot audit {exp_id!r}; use ft_* or nft(theta,phi)")
        theta = parse_angle(m.group(1))
        phi = parse_angle(m.group(2))
        block = LogicalBlockSpec(tuple(CHAIN_A), 4)
        alpha = math.cos(theta / 2.0)
        beta = cmath.exp(1j * phi) * math.sin(theta / 2.0)
        items = prep_nft_arbitrary(block, alpha, beta)
        bloch = (math.sin(theta) * math.cos(phi),
                 math.sin(theta) * math.sin(phi), math.cos(theta))
        axis = max(range(3), key=lambda i: abs(bloch[i]))
        if abs(abs(bloch[axis]) - 1.0) > 1e-9:
            raise UnknownExperimentError(
                "audit requires a stabilizer state (Bloch vector on an axis)")
        prepared = [block.logical("XYZ"[axis])]
    circuit = schedule(block.n_qubits, items)
    return fault_injection_audit(circuit, [block], prepared)


# -- the registry -------------------------------------------------------------

_FIXED = {
    "ft_zero": lambda: make_ft_state("ft_zero"),
    "ft_one": lambda: make_ft_state("ft_one"),
    "ft_plus": lambda: make_ft_state("ft_plus"),
    "ft_minus": lambda: make_ft_state("ft_minus"),
    "lptm_cnot": make_lptm_cnot,
    "phys_zero": lambda: make_physical_state("phys_zero"),
    "phys_one": lambda: make_physical_state("phys_one"),
    "phys_plus": lambda: make_physical_state("phys_plus"),
    "phys_minus": lambda: make_physical_state("phys_minus"),
}

_PATTERNS = (
    (re.compile(r"bell_([1-4])"), lambda m: make_bell(int(m.group(1)))),
    (re.compile(r"phys_bell_([1-4])"),
     lambda m: make_physical_bell(int(m.group(1)))),
    (re.compile(r"teleport_rz\((.+)\)"),
     lambda m: make_teleport("Z", parse_angle(m.group(1)))),
    (re.compile(r"teleport_rx\((.+)\)"),
     lambda m: make_teleport("X", parse_angle(m.group(1)))),
    (re.compile(r"lptm_rz\((.+)\)"),
     lambda m: make_lptm_rotation("Z", parse_angle(m.group(1)))),
    (re.compile(r"lptm_rx\((.+)\)"),
     lambda m: make_lptm_rotation("X", parse_angle(m.group(1)))),
    (re.compile(r"nft\((.+?),(.+)\)"),
     lambda m: make_nft_state(parse_angle(m.group(1)), parse_angle(m.group(2)))),
)


def resolve(exp_id: str):
    """Look up an experiment by its registry name."""
    key = exp_id.strip()
    if key in _FIXED:
        return _FIXED[key]()
    for pattern, maker in _PATTERNS:
        m = pattern.fullmatch(key)
        if m:
            return maker(m)
    raise UnknownExperimentError(
        f"unknown experiment {exp_id!r}; see 'list' for registered names")


def registry_names() -> list[str]:
    return (list(_FIXED) +
            ["bell_1..bell_4", "phys_bell_1..phys_bell_4",
             "nft(theta,phi)", "teleport_rz(theta)", "teleport_rx(theta)",
             "lptm_rz(theta)", "lptm_rx(theta)"])
