import numpy as np

from d2lab.crosscheck import cross_validate, random_clifford_circuit
from d2lab.noise import NoiseModel


class TestRandomCircuits:
    def test_reproducible(self):
        a = random_clifford_circuit(4, 3, seed=9)
        b = random_clifford_circuit(4, 3, seed=9)
        c = random_clifford_circuit(4, 3, seed=10)
        assert a.moments == b.moments
        assert a.moments != c.moments

    def test_respects_pair_restriction(self):
        pairs = [(0, 1), (2, 3)]
        circ = random_clifford_circuit(4, 6, seed=2, pairs=pairs)
        for instr in circ.instructions():
            if len(instr.qubits) == 2:
                assert tuple(sorted(instr.qubits)) in pairs

    def test_measures_all_qubits(self):
        circ = random_clifford_circuit(5, 2, seed=1)
        assert sorted(circ.measured_qubits()) == list(range(5))


class TestCrossValidate:
    def test_noiseless_deterministic_labels_agree(self):
        # |0> everywhere, Z basis: all labels deterministic, z = 0
        from d2lab.circuits import compile_measurement_basis, schedule

        circ = compile_measurement_basis(schedule(3, []), {q: "Z" for q in range(3)})
        report = cross_validate(circ, NoiseModel.noiseless(3), shots=2000, seed=4)
        assert report.max_abs_z == 0.0
        assert np.allclose(report.exact_freq, 1.0)

    def test_random_circuits_within_tolerance(self, device_noise):
        worst = 0.0
        for k in range(6):
            circ = random_clifford_circuit(
                8, 4, seed=100 + k,
                pairs=sorted(device_noise.p2))
            rep = cross_validate(circ, device_noise, shots=20_000, seed=k)
            worst = max(worst, rep.max_abs_z)
        assert worst < 4.5  # a touch looser than acceptance at fewer shots

    def test_bell_logical_correlator_frame_vs_dense(self, device_noise):
        # post-selected X_L (x) X_L on the noisy Bell circuit: sampled
        # estimate agrees with the exact-channel ground truth within 3
        # sigma
        import math

        from d2lab.code import estimate
        from d2lab.dense import run_dense_channel
        from d2lab.experiments import resolve
        from d2lab.frame import sample_pauli_frame
        from d2lab.noise import apply_noise_sites

        exp = resolve("bell_1")
        setting = next(s for s in exp.settings if s.name == "XX")
        ann = apply_noise_sites(setting.circuit, device_noise)
        exact = estimate(run_dense_channel(ann), setting.rule,
                         setting.observables["XX"])
        sampled = estimate(sample_pauli_frame(ann, 50_000, seed=6),
                           setting.rule, setting.observables["XX"])
        p = (1 + exact.value) / 2
        sigma = 2 * math.sqrt(p * (1 - p) / sampled.n_pass)
        assert abs(sampled.value - exact.value) < 3 * sigma
        sigma_ps = math.sqrt(exact.ps_rate * (1 - exact.ps_rate) / 50_000)
        assert abs(sampled.ps_rate - exact.ps_rate) < 3 * sigma_ps
