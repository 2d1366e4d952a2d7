"""Pauli-frame sampler tests, including the frame-vs-explicit-error
tableau consistency replay and the numba/numpy backend equivalence."""

import numpy as np
import pytest

from d2lab import _kernels
from d2lab._rng import shot_base, unit_from
from d2lab.circuits import Instruction, compile_measurement_basis, schedule
from d2lab.code import (FT_Z_CHAIN, LogicalBlockSpec, attach_measurements,
                        logical_measure, lower_to_device, prep_ft_z)
from d2lab.frame import compile_frame_program, sample_pauli_frame
from d2lab.noise import NoiseModel, apply_noise_sites
from d2lab.paulis import GATE_KINDS, CliffordGate, PauliString, multiply
from d2lab.tableau import NonCliffordError, Tableau


def ft_zero_measured():
    block = LogicalBlockSpec(FT_Z_CHAIN, 4)
    spec = logical_measure(block, "Z")
    circ, rule = attach_measurements(schedule(4, prep_ft_z(block, 0)), [spec])
    return lower_to_device(circ), rule, spec


class TestNoiselessSampling:
    def test_ft_zero_parities_every_shot(self):
        circ, rule, spec = ft_zero_measured()
        ann = apply_noise_sites(circ, NoiseModel.noiseless(4))
        t = sample_pauli_frame(ann, shots=3000, seed=11)
        for cond in rule.conditions:
            assert (t.product(cond.labels) == 1).all()
        assert (t.product(spec.observable.labels) == 1).all()

    def test_individual_bits_random(self):
        # X-basis measurement of |0_L>: single bits uniform, product fixed
        block = LogicalBlockSpec(FT_Z_CHAIN, 4)
        spec = logical_measure(block, "X")
        circ, _ = attach_measurements(schedule(4, prep_ft_z(block, 0)), [spec])
        ann = apply_noise_sites(lower_to_device(circ), NoiseModel.noiseless(4))
        t = sample_pauli_frame(ann, shots=20000, seed=2)
        assert (t.product(spec.rule.conditions[0].labels) == 1).all()
        for lab in t.labels:
            frac = (t.column(lab) == 1).mean()
            assert abs(frac - 0.5) < 0.02

    def test_non_clifford_rejected(self):
        items = [Instruction("RX", (0,), angle=0.4)]
        circ = compile_measurement_basis(schedule(1, items), {0: "Z"})
        ann = apply_noise_sites(circ, NoiseModel.noiseless(1))
        with pytest.raises(NonCliffordError):
            sample_pauli_frame(ann, 10, 0)


def enumerate_flip_failure(flip_probs, conditions, labels):
    """Independent oracle: exact P(some condition fails) by enumerating
    all readout-flip patterns of the final bits."""
    m = len(labels)
    total = 0.0
    for pattern in range(1 << m):
        prob = 1.0
        for k in range(m):
            f = (pattern >> k) & 1
            prob *= flip_probs[k] if f else 1.0 - flip_probs[k]
        fails = False
        for cond in conditions:
            parity = sum((pattern >> labels.index(lab)) & 1
                         for lab in cond.labels) % 2
            if parity:
                fails = True
        total += prob * fails
    return total


class TestFlipStatistics:
    def test_single_qubit_flip_rate_vs_enumeration(self):
        # p_m = 0.05 on one data qubit only; failure rate within 3 sigma
        circ, rule, spec = ft_zero_measured()
        readout = {q: (1.0, 1.0) for q in range(4)}
        readout[1] = (0.95, 0.95)
        nm = NoiseModel({q: 0.0 for q in range(4)},
                        {(a, b): 0.0 for a in range(4) for b in range(a + 1, 4)},
                        readout)
        ann = apply_noise_sites(circ, nm)
        shots = 100_000
        t = sample_pauli_frame(ann, shots, seed=5)
        fail = np.zeros(shots, dtype=bool)
        for cond in rule.conditions:
            fail |= t.product(cond.labels) == -1
        observed = fail.mean()

        flip_by_label = []
        for instr in circ.instructions():
            if instr.op == "MZ":
                flip_by_label.append(nm.flip_probs(instr.qubits[0])[0])
        expected = enumerate_flip_failure(flip_by_label, rule.conditions,
                                          t.labels)
        sigma = np.sqrt(expected * (1 - expected) / shots)
        assert abs(observed - expected) < 3 * sigma

    def test_all_qubit_flips_vs_enumeration(self):
        circ, rule, spec = ft_zero_measured()
        nm = NoiseModel.uniform(4, 0.0, 0.0, 0.08)
        ann = apply_noise_sites(circ, nm)
        shots = 200_000
        t = sample_pauli_frame(ann, shots, seed=9)
        fail = np.zeros(shots, dtype=bool)
        for cond in rule.conditions:
            fail |= t.product(cond.labels) == -1
        expected = enumerate_flip_failure([0.08] * 4, rule.conditions, t.labels)
        sigma = np.sqrt(expected * (1 - expected) / shots)
        assert abs(fail.mean() - expected) < 3 * sigma


class TestAsymmetricReadout:
    def test_flip_depends_on_true_bit(self):
        # |1> measured with (f00, f11) = (0.95, 0.80): the recorded bit
        # flips with 1 - f11 = 0.20
        circ = compile_measurement_basis(
            schedule(1, [Instruction("X", (0,))]), {0: "Z"})
        nm = NoiseModel({0: 0.0}, {}, {0: (0.95, 0.80)},
                        symmetric_readout=False)
        ann = apply_noise_sites(circ, nm)
        t = sample_pauli_frame(ann, 100_000, seed=1)
        flipped = (t.column("m1z") == 1).mean()  # read +1 means flipped to 0
        assert abs(flipped - 0.20) < 3 * np.sqrt(0.2 * 0.8 / 100_000)
        from d2lab.dense import run_dense_channel

        exact = run_dense_channel(ann)
        assert exact.probs[0] == pytest.approx(0.20)


class TestBackends:
    def test_numpy_numba_bit_identical(self, device_noise):
        if not _kernels.HAS_NUMBA:
            pytest.skip("numba unavailable")
        circ, _, _ = ft_zero_measured()
        ann = apply_noise_sites(circ, device_noise)
        a = sample_pauli_frame(ann, 30_000, seed=17, backend="numpy")
        b = sample_pauli_frame(ann, 30_000, seed=17, backend="numba")
        assert np.array_equal(a.values, b.values)

    def test_deterministic_given_seed(self, device_noise):
        circ, _, _ = ft_zero_measured()
        ann = apply_noise_sites(circ, device_noise)
        a = sample_pauli_frame(ann, 5000, seed=4)
        b = sample_pauli_frame(ann, 5000, seed=4)
        c = sample_pauli_frame(ann, 5000, seed=5)
        assert np.array_equal(a.values, b.values)
        assert not np.array_equal(a.values, c.values)

    def test_backend_env_flag(self, monkeypatch):
        monkeypatch.setenv("D2LAB_BACKEND", "numpy")
        assert _kernels.backend_choice() == "numpy"
        monkeypatch.setenv("D2LAB_BACKEND", "bogus")
        with pytest.raises(ValueError):
            _kernels.backend_choice()


def interpret_program_python(program, shot, seed):
    """Reference interpreter over the compiled op stream, recording the
    drawn faults.  Returns (bits, faults) where faults is a list of
    (op_index, PauliString) applied in program order."""
    n = program.n_qubits
    base = shot_base(seed, np.array([shot], dtype=np.uint64))

    def unit(ridx):
        return float(unit_from(base, ridx)[0])

    fx = np.zeros(n, dtype=np.uint8)
    fz = np.zeros(n, dtype=np.uint8)
    out = np.zeros(len(program.ref_bits), dtype=np.uint8)
    faults = []
    single = {1: "X", 2: "Y", 3: "Z"}
    for k in range(program.ops.shape[0]):
        op, a, b, ridx = (int(v) for v in program.ops[k])
        p0, p1 = program.params[k]
        if op <= _kernels.OP_CNOT:
            kind = GATE_KINDS[op]
            gate = CliffordGate(kind, (a, b) if op >= _kernels.OP_CZ else (a,))
            # propagate the whole frame via exact conjugation (an
            # independent route vs the kernel's bitwise update rules)
            frame = PauliString(n, sum(int(fx[q]) << q for q in range(n)),
                                sum(int(fz[q]) << q for q in range(n)))
            from d2lab.paulis import conjugate
            frame = conjugate(frame, gate)
            for q in range(n):
                fx[q] = (frame.x >> q) & 1
                fz[q] = (frame.z >> q) & 1
        elif op == _kernels.OP_INITZ:
            if unit(ridx) < 0.5:
                fz[a] ^= 1
                faults.append((k, PauliString.single(n, a, "Z")))
        elif op == _kernels.OP_DEPOL1:
            u = unit(ridx)
            if p0 > 0 and u < p0:
                c = single[int(u * 3.0 / p0) + 1]
                pl = PauliString.single(n, a, c)
                faults.append((k, pl))
                fx[a] ^= c in ("X", "Y")
                fz[a] ^= c in ("Y", "Z")
        elif op == _kernels.OP_DEPOL2:
            u = unit(ridx)
            if p0 > 0 and u < p0:
                pair = int(u * 15.0 / p0) + 1
                pa, pb = pair >> 2, pair & 3
                pl = PauliString.identity(n)
                if pa:
                    pl = multiply(pl, PauliString.single(n, a, single[pa]))
                    fx[a] ^= pa in (1, 2)
                    fz[a] ^= pa >= 2
                if pb:
                    pl = multiply(pl, PauliString.single(n, b, single[pb]))
                    fx[b] ^= pb in (1, 2)
                    fz[b] ^= pb >= 2
                faults.append((k, pl))
        elif op == _kernels.OP_MEASURE:
            out[b] = program.ref_bits[b] ^ fx[a]
            fz[a] = 1 if unit(ridx) < 0.5 else 0
        elif op == _kernels.OP_FLIP:
            pe = p0 if out[b] == 0 else p1
            if unit(ridx) < pe:
                out[b] ^= 1
    return out, faults


class TestFrameVsExplicitTableau:
    def test_shot_for_shot_consistency(self, device_noise):
        """The frame sample must be a valid sample of the explicit-error
        tableau run: replay each shot's faults as Pauli gates, force the
        non-deterministic outcomes, and check the deterministic ones."""
        circ, rule, spec = ft_zero_measured()
        ann = apply_noise_sites(circ, device_noise)
        seed = 23
        program = compile_frame_program(ann, seed)
        shots = 40
        table = sample_pauli_frame(ann, shots, seed)
        kernel_bits = (1 - table.values) // 2

        for shot in range(shots):
            bits, faults = interpret_program_python(program, shot, seed)
            assert np.array_equal(bits, kernel_bits[shot]), f"shot {shot}"
            # replay: tableau with the same faults applied as real errors
            pre_flip = _bits_without_flips(program, shot, seed)
            _replay_explicit(ann.circuit, program, faults, pre_flip)


def _bits_without_flips(program, shot, seed):
    """Re-interpret the shot with readout flips disabled."""
    import dataclasses

    quiet = dataclasses.replace(program, params=program.params.copy())
    for k in range(quiet.ops.shape[0]):
        if quiet.ops[k, 0] == _kernels.OP_FLIP:
            quiet.params[k] = (0.0, 0.0)
    bits, _ = interpret_program_python(quiet, shot, seed)
    return bits


def _replay_explicit(circuit, program, faults, expected_bits):
    """Run the tableau applying the recorded faults as explicit Paulis,
    forcing non-deterministic outcomes to the frame results and checking
    deterministic ones match."""
    tab = Tableau(circuit.n_qubits)
    fault_at = {}
    for k, pl in faults:
        fault_at.setdefault(k, []).append(pl)

    # walk the compiled program so fault positions line up exactly
    meas = 0
    for k in range(program.ops.shape[0]):
        op, a, b, _ = (int(v) for v in program.ops[k])
        if op <= _kernels.OP_CNOT:
            kind = GATE_KINDS[op]
            targets = (a, b) if op >= _kernels.OP_CZ else (a,)
            tab.apply(CliffordGate(kind, targets))
        elif op == _kernels.OP_MEASURE:
            bit, det = tab.measure_z(int(a), _NoRandom(),
                                     forced=int(expected_bits[b]))
            assert bit == expected_bits[b]
            meas += 1
        for pl in fault_at.get(k, []):
            if pl.x or pl.z:  # init-Z injections are physical no-ops but
                tab.apply_pauli(pl)  # applying them is harmless
    assert meas == len(expected_bits)


class _NoRandom:
    def coin(self):
        raise AssertionError("coin requested; outcome should be forced")
