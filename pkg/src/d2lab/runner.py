"""Experiment execution: build -> annotate -> simulate -> post-select ->
reconstruct -> metrics.

Engines: 'tableau' runs the Pauli-frame Monte Carlo sampler (Clifford
circuits only; shots split evenly across measurement settings), 'dense'
runs the exact channel (deterministic expectations, the oracle path).

Noise cases for gate-characterization studies:

    case 1: full device noise
    case 2: device gate noise, noiseless measurement flips
    case 3: case 2 plus noiseless ancilla-state preparation
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._rng import U64, mix64
from .code import Estimate, estimate as _estimate
from .dense import run_dense_channel, run_dense_trajectories
from .experiments import LptmExperiment, Setting, StateExperiment
from .frame import sample_pauli_frame
from .noise import NoiseModel, apply_noise_sites
from .tableau import NonCliffordError
from .tomography import (ExpectationSet, chsh_criterion, expectation_set,
                         gate_fidelity, mle_state, pauli_labels, project_cptp,
                         ptm_raw, state_fidelity)

ENGINES = ("tableau", "dense")


class EngineMismatchError(RuntimeError):
    """Engine cannot run this circuit; the message carries the remedy."""


def derive_seed(seed: int, index: int) -> int:
    """Stable per-setting sub-seed."""
    with np.errstate(over="ignore"):
        h = mix64(U64(seed) ^ (U64(index) * U64(0x9E3779B97F4A7C15)))
    return int(h) & (2**63 - 1)


def noise_case(nm: NoiseModel, case: int) -> tuple[NoiseModel, tuple[str, ...]]:
    """Characterization noise cases, as skip-tag sets.

    Case 2 silences tomography readout flips only: measurements that
    belong to a gate (the teleportation ancilla readout) keep their
    device flip probability.  Case 3 additionally idealizes the ancilla
    state preparation segment.
    """
    if case == 1:
        return nm, ()
    if case == 2:
        return nm, ("characterize",)
    if case == 3:
        return nm, ("characterize", "ancilla_prep")
    raise ValueError(f"unknown noise case {case}; expected 1, 2 or 3")


def run_setting(setting: Setting, nm: NoiseModel, engine: str, shots: int,
                seed: int, skip_tags: tuple[str, ...] = ()):
    """Simulate one measurement setting, returning the engine output."""
    ann = apply_noise_sites(setting.circuit, nm, skip_tags)
    if engine == "dense":
        return run_dense_channel(ann)
    if engine == "tableau":
        try:
            return sample_pauli_frame(ann, shots, seed)
        except NonCliffordError as e:
            raise EngineMismatchError(
                f"setting {setting.name}: {e} (rerun with --engine dense)")
    if engine == "trajectory":
        return run_dense_trajectories(ann, shots, seed)
    raise ValueError(f"unknown engine {engine!r}; choose from {ENGINES}")


def aggregate(settings: list[Setting], outputs: dict) -> dict[str, Estimate]:
    """Estimate every logical Pauli from its designated setting.

    ``outputs`` maps setting name -> ShotTable or DenseResult.  Each
    setting's observables are estimated under that setting's
    post-selection rule; the union over settings covers the full Pauli
    set (identity components reuse the Z settings).
    """
    estimates: dict[str, Estimate] = {}
    for setting in settings:
        out = outputs[setting.name]
        for label, obs in setting.observables.items():
            estimates[label] = _estimate(out, setting.rule, obs)
    return estimates


@dataclass
class StateReport:
    """Everything measured about one state experiment."""

    id: str
    engine: str
    shots_per_setting: int
    seed: int
    n_logical: int
    estimates: dict[str, Estimate]           # pauli label -> estimate
    ps_rates: dict[str, float]               # setting name -> ps rate
    fidelity: float
    rho: np.ndarray
    chsh: tuple[float, bool] | None = None
    eigen_label: str | None = None
    low_statistics: bool = False
    meta: dict = field(default_factory=dict)


def run_state_experiment(exp: StateExperiment, nm: NoiseModel, engine: str,
                         shots: int, seed: int,
                         skip_tags: tuple[str, ...] = ()) -> StateReport:
    shots_per = max(1, shots // max(1, len(exp.settings))) if engine != "dense" else 0
    outputs = {setting.name: run_setting(setting, nm, engine, shots_per,
                                         derive_seed(seed, k), skip_tags)
               for k, setting in enumerate(exp.settings)}
    estimates = aggregate(exp.settings, outputs)
    ps_rates: dict[str, float] = {}
    low_stats = False
    for setting in exp.settings:
        first = next(iter(setting.observables))
        ps_rates[setting.name] = estimates[first].ps_rate
    for est in estimates.values():
        if est.n_pass is not None and est.n_pass < 100:
            low_stats = True

    es = expectation_set(exp.n_logical, estimates)
    rho = mle_state(es)
    fid = state_fidelity(rho, exp.ideal_logical)
    chsh = chsh_criterion(rho) if exp.n_logical == 2 else None
    return StateReport(
        id=exp.id, engine=engine, shots_per_setting=shots_per, seed=seed,
        n_logical=exp.n_logical, estimates=estimates, ps_rates=ps_rates,
        fidelity=fid, rho=rho, chsh=chsh, eigen_label=exp.eigen_label,
        low_statistics=low_stats, meta=dict(exp.meta),
    )


@dataclass
class LptmReport:
    id: str
    engine: str
    shots_per_setting: int
    seed: int
    d: int
    raw: np.ndarray
    ptm: np.ndarray
    choi: np.ndarray
    fidelity: float
    objective_log: list[float]
    input_fidelities: dict[str, float]
    output_fidelities: dict[str, float]
    meta: dict = field(default_factory=dict)


def _tomograph(exp: StateExperiment, nm, engine, shots, seed, skip_tags):
    """Tomograph a state; return its MLE-state Pauli vector + report."""
    from .tomography import pauli_matrix

    report = run_state_experiment(exp, nm, engine, shots, seed, skip_tags)
    vec = np.array([float(np.real(np.trace(report.rho @ pauli_matrix(lab))))
                    for lab in pauli_labels(exp.n_logical)])
    return vec, report


def run_lptm_experiment(exp: LptmExperiment, nm: NoiseModel, engine: str,
                        shots: int, seed: int,
                        skip_tags: tuple[str, ...] = ()) -> LptmReport:
    """Characterize a logical gate on the complete state set.

    Input and output states are tomographed (MLE), their Pauli
    expectation vectors stacked, the raw transfer matrix solved in least
    squares and projected onto the CPTP set.
    """
    n_logical = 1 if exp.d == 2 else 2
    p_in, p_out = [], []
    in_fids, out_fids = {}, {}
    salt = 0
    for key in exp.input_experiments:
        vec_in, rep_in = _tomograph(exp.input_experiments[key], nm, engine,
                                    shots, derive_seed(seed, salt), skip_tags)
        vec_out, rep_out = _tomograph(exp.output_experiments[key], nm, engine,
                                      shots, derive_seed(seed, salt + 1), skip_tags)
        salt += 2
        p_in.append(_es_from_vec(n_logical, vec_in))
        p_out.append(_es_from_vec(n_logical, vec_out))
        in_fids[key] = rep_in.fidelity
        out_fids[key] = rep_out.fidelity

    raw = ptm_raw(p_in, p_out)
    projected, choi, log = project_cptp(raw)
    fid = gate_fidelity(projected, exp.ideal_ptm)
    return LptmReport(
        id=exp.id, engine=engine,
        shots_per_setting=0 if engine == "dense" else shots,
        seed=seed, d=exp.d, raw=raw.matrix, ptm=projected.matrix, choi=choi,
        fidelity=fid, objective_log=log,
        input_fidelities=in_fids, output_fidelities=out_fids,
        meta=dict(exp.meta),
    )


def _es_from_vec(n_logical: int, vec: np.ndarray) -> ExpectationSet:
    labels = pauli_labels(n_logical)
    return expectation_set(n_logical, {
        lab: Estimate(float(v), 1.0, None, None, 0.0)
        for lab, v in zip(labels, vec)})


def effective_noise(exp, nm: NoiseModel) -> NoiseModel:
    """Physical (unencoded) baselines flip readouts asymmetrically."""
    if getattr(exp, "meta", {}).get("physical"):
        return nm.with_symmetric_readout(False)
    return nm


def run_experiment(exp_id: str, nm: NoiseModel, engine: str, shots: int,
                   seed: int, case: int = 1):
    """Registry front door: resolve, apply the noise case, execute."""
    from .experiments import resolve

    exp = resolve(exp_id)
    nm_case, skip = noise_case(effective_noise(exp, nm), case)
    if isinstance(exp, LptmExperiment):
        return run_lptm_experiment(exp, nm_case, engine, shots, seed, skip)
    return run_state_experiment(exp, nm_case, engine, shots, seed, skip)
