"""Simulation lab for error-detecting distance-2 surface-code experiments.

Layers, bottom up:

* :mod:`d2lab.paulis` -- phase-tracked Pauli algebra and Clifford
  conjugation.
* :mod:`d2lab.circuits` / :mod:`d2lab.noise` -- moment-scheduled
  circuits and depolarizing noise-site annotation.
* :mod:`d2lab.tableau`, :mod:`d2lab.frame`, :mod:`d2lab.dense` -- the
  stabilizer/Pauli-frame Monte Carlo engine (numba-accelerated with a
  numpy fallback, D2LAB_BACKEND selects) and the exact dense oracle.
* :mod:`d2lab.code` / :mod:`d2lab.experiments` -- the distance-2
  surface-code circuits, post-selection rules, fault auditor and the
  named experiment registry.
* :mod:`d2lab.tomography` -- MLE state tomography, Pauli transfer
  matrices with CPTP projection, CHSH criterion, uncertainties.
* :mod:`d2lab.runner`, :mod:`d2lab.sweeps`, :mod:`d2lab.report`,
  :mod:`d2lab.cli` -- experiment execution, noise sweeps and reporting.
"""

__version__ = "0.1.0"

from .circuits import Circuit, CircuitBuilder, Instruction, schedule
from .code import (Estimate, LogicalBlockSpec, LogicalLayout, Observable,
                   PostSelectionRule, binom_2sigma, fault_injection_audit,
                   logical_measure, postselect_and_estimate, prep_ft_x,
                   prep_ft_z, prep_nft_arbitrary, teleport_rotation,
                   transversal_cnot)
from .crosscheck import cross_validate, random_clifford_circuit
from .dense import run_dense, run_dense_channel, run_dense_trajectories
from .device import DeviceParams, load_device
from .experiments import resolve
from .frame import active_backend, sample_pauli_frame
from .noise import NoiseModel, apply_noise_sites
from .paulis import CliffordGate, PauliString, commutes, conjugate, multiply
from .runner import (aggregate, run_experiment, run_lptm_experiment,
                     run_setting, run_state_experiment)
from .sweeps import SweepConfig, run_sweep
from .tableau import NonCliffordError, Tableau, run_tableau
from .tomography import (ExpectationSet, PTM, chsh_criterion, gate_fidelity,
                         mle_state, project_cptp, ptm_raw, state_fidelity)

__all__ = [
    "Circuit", "CircuitBuilder", "CliffordGate", "DeviceParams", "Estimate",
    "ExpectationSet", "Instruction", "LogicalBlockSpec", "LogicalLayout",
    "NoiseModel", "NonCliffordError", "Observable", "PTM", "PauliString",
    "PostSelectionRule", "SweepConfig", "Tableau", "active_backend", "aggregate",
    "apply_noise_sites", "binom_2sigma", "chsh_criterion", "commutes",
    "conjugate", "cross_validate", "fault_injection_audit", "gate_fidelity",
    "load_device", "logical_measure", "mle_state", "multiply",
    "postselect_and_estimate", "prep_ft_x", "prep_ft_z",
    "prep_nft_arbitrary", "project_cptp", "ptm_raw",
    "random_clifford_circuit", "resolve", "run_dense", "run_dense_channel",
    "run_dense_trajectories", "run_experiment", "run_lptm_experiment",
    "run_setting", "run_state_experiment", "run_sweep", "run_tableau",
    "sample_pauli_frame",
    "schedule", "state_fidelity", "teleport_rotation", "transversal_cnot",
    "__version__",
]
