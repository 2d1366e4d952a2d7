"""Noise-strength sweeps: logical vs physical error rates.

Modes: ``gate_only`` (p2 = p, p1 = p/10, no measurement noise),
``meas_only`` (p_m = p, no gate noise) and ``both`` (p2 = p, p1 = p/10,
p_m = p).  The logical error rate is the probability of reading the
wrong eigenvalue of the prepared logical Pauli after post-selection;
the physical baseline runs the unencoded counterpart through the same
pipeline.  The pseudo-threshold is the interpolated noise strength
where the two curves cross.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .circuits import (BARRIER, Circuit, Instruction, compile_measurement_basis,
                       flatten, merge_parallel, schedule)
from .code import (BELL_CONTROL, BELL_TARGET, CHAIN_A, EMPTY_RULE, FT_Z_CHAIN,
                   Estimate, LogicalBlockSpec, LogicalLayout, Observable,
                   PostSelectionRule, attach_measurements, binom_2sigma,
                   estimate as _estimate, logical_measure, lower_to_device,
                   prep_ft_x, prep_ft_z, transversal_cnot)
from .dense import run_dense_channel
from .frame import sample_pauli_frame
from .noise import NoiseModel, apply_noise_sites
from .runner import derive_seed

SWEEP_MODES = ("gate_only", "meas_only", "both")


@dataclass(frozen=True)
class SweepCircuit:
    """One measurable parity check: circuit + rule + expected +1 value."""

    name: str
    circuit: Circuit
    rule: PostSelectionRule
    observable: Observable


def _ft_zero_z() -> SweepCircuit:
    block = LogicalBlockSpec(FT_Z_CHAIN, 4)
    spec = logical_measure(block, "Z")
    circ, rule = attach_measurements(schedule(4, prep_ft_z(block, 0)), [spec])
    return SweepCircuit("ft_zero_z", lower_to_device(circ), rule, spec.observable)


def _ft_plus_x() -> SweepCircuit:
    block = LogicalBlockSpec(CHAIN_A, 4)
    spec = logical_measure(block, "X")
    circ, rule = attach_measurements(schedule(4, prep_ft_x(block, "+")), [spec])
    return SweepCircuit("ft_plus_x", lower_to_device(circ), rule, spec.observable)


def _bell(basis: str) -> SweepCircuit:
    control = LogicalBlockSpec(BELL_CONTROL, 8, name="c")
    target = LogicalBlockSpec(BELL_TARGET, 8, name="t")
    merged = merge_parallel(schedule(8, prep_ft_x(control, "+")),
                            schedule(8, prep_ft_z(target, 0)), offset=1)
    items = flatten(merged) + [BARRIER] + transversal_cnot(
        LogicalLayout(control, target))
    spec_c = logical_measure(control, basis)
    spec_t = logical_measure(target, basis)
    circ, rule = attach_measurements(schedule(8, items), [spec_c, spec_t])
    obs = Observable(f"{basis}L{basis}L",
                     spec_c.observable.labels + spec_t.observable.labels)
    return SweepCircuit(f"bell_{basis.lower()}{basis.lower()}",
                        lower_to_device(circ), rule, obs)


def _phys_zero_z() -> SweepCircuit:
    circ = compile_measurement_basis(schedule(1, []), {0: "Z"})
    return SweepCircuit("phys_zero_z", circ, EMPTY_RULE,
                        Observable("Z", ("m1z",)))


def _phys_plus_x() -> SweepCircuit:
    circ = compile_measurement_basis(
        schedule(1, [Instruction("H", (0,))]), {0: "X"})
    return SweepCircuit("phys_plus_x", lower_to_device(circ), EMPTY_RULE,
                        Observable("X", ("m1x",)))


def _phys_bell(basis: str) -> SweepCircuit:
    items = [Instruction("H", (0,)), BARRIER, Instruction("CNOT", (0, 1))]
    circ = compile_measurement_basis(lower_to_device(schedule(2, items)),
                                     {0: basis, 1: basis})
    b = basis.lower()
    return SweepCircuit(f"phys_bell_{b}{b}", circ, EMPTY_RULE,
                        Observable(basis * 2, (f"m1{b}", f"m2{b}")))


SWEEP_PAIRS = {
    "ft_zero_z": (_ft_zero_z, _phys_zero_z),
    "ft_plus_x": (_ft_plus_x, _phys_plus_x),
    "bell_zz": (lambda: _bell("Z"), lambda: _phys_bell("Z")),
    "bell_xx": (lambda: _bell("X"), lambda: _phys_bell("X")),
}


def sweep_noise_model(mode: str, p: float, n_qubits: int) -> NoiseModel:
    if mode == "gate_only":
        return NoiseModel.uniform(n_qubits, p / 10.0, p, 0.0)
    if mode == "meas_only":
        return NoiseModel.uniform(n_qubits, 0.0, 0.0, p)
    if mode == "both":
        return NoiseModel.uniform(n_qubits, p / 10.0, p, p)
    raise ValueError(f"unknown sweep mode {mode!r}; choose from {SWEEP_MODES}")


@dataclass
class SweepPoint:
    mode: str
    circuit: str
    p: float
    logical_error: float | None
    logical_2sigma: float | None
    ps_rate: float
    physical_error: float
    physical_2sigma: float
    n_pass: int | None
    excluded: bool = False


@dataclass
class SweepConfig:
    noise_mode: str
    p_grid: list[float]
    circuits: list[str] = field(default_factory=lambda: ["ft_zero_z", "ft_plus_x"])
    shots: int = 1_000_000
    seed: int = 1
    engine: str = "tableau"


@dataclass
class SweepResult:
    config: SweepConfig
    points: list[SweepPoint]
    crossings: dict[str, float | None]

    def curve(self, circuit: str):
        return [pt for pt in self.points if pt.circuit == circuit]


def _error_rate(sc: SweepCircuit, nm: NoiseModel, engine: str, shots: int,
                seed: int) -> tuple[Estimate, float | None]:
    ann = apply_noise_sites(sc.circuit, nm)
    if engine == "dense":
        out = run_dense_channel(ann)
    else:
        out = sample_pauli_frame(ann, shots, seed)
    est = _estimate(out, sc.rule, sc.observable)
    if est.is_empty:
        return est, None
    err = (1.0 - est.value) / 2.0  # P(wrong eigenvalue | passed)
    return est, err


def run_sweep(config: SweepConfig) -> SweepResult:
    """Sweep the grid for every configured circuit pair."""
    for p in config.p_grid:
        if not 0.0 <= p < 0.5:
            raise ValueError(f"noise strength {p} outside [0, 0.5)")
    points: list[SweepPoint] = []
    crossings: dict[str, float | None] = {}
    for name in config.circuits:
        make_logical, make_physical = SWEEP_PAIRS[name]
        logical, physical = make_logical(), make_physical()
        diffs: list[tuple[float, float]] = []
        for gi, p in enumerate(config.p_grid):
            nm_l = sweep_noise_model(config.noise_mode, p, logical.circuit.n_qubits)
            nm_p = sweep_noise_model(config.noise_mode, p, physical.circuit.n_qubits)
            seed_l = derive_seed(config.seed, 2 * gi)
            seed_p = derive_seed(config.seed, 2 * gi + 1)
            est_l, err_l = _error_rate(logical, nm_l, config.engine,
                                       config.shots, seed_l)
            est_p, err_p = _error_rate(physical, nm_p, config.engine,
                                       config.shots, seed_p)
            excluded = err_l is None
            n_pass = est_l.n_pass
            sig_l = (None if excluded or n_pass in (None, 0)
                     else binom_2sigma(err_l, n_pass))
            sig_p = (binom_2sigma(err_p, est_p.n_total)
                     if est_p.n_total else 0.0)
            points.append(SweepPoint(
                mode=config.noise_mode, circuit=name, p=p,
                logical_error=err_l, logical_2sigma=sig_l,
                ps_rate=est_l.ps_rate, physical_error=err_p,
                physical_2sigma=sig_p, n_pass=n_pass, excluded=excluded))
            if not excluded:
                diffs.append((p, err_l - err_p))
        crossings[name] = _interpolate_crossing(diffs)
    return SweepResult(config, points, crossings)


def _interpolate_crossing(diffs: list[tuple[float, float]]) -> float | None:
    """First sign change of (logical - physical), linearly interpolated."""
    for (p0, d0), (p1, d1) in zip(diffs, diffs[1:]):
        if d0 <= 0.0 < d1 or d0 < 0.0 <= d1:
            if d1 == d0:
                return p0
            return p0 + (0.0 - d0) * (p1 - p0) / (d1 - d0)
    return None
