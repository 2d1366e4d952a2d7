import numpy as np
import pytest

from d2lab.sweeps import (SWEEP_PAIRS, SweepConfig, _interpolate_crossing,
                          run_sweep, sweep_noise_model)


class TestNoiseModes:
    def test_gate_only(self):
        nm = sweep_noise_model("gate_only", 0.1, 4)
        assert nm.p1[0] == pytest.approx(0.01)
        assert nm.p2[(0, 1)] == pytest.approx(0.1)
        assert nm.flip_probs(0) == (0.0, 0.0)

    def test_meas_only(self):
        nm = sweep_noise_model("meas_only", 0.1, 4)
        assert nm.p1[0] == 0.0 and nm.p2[(0, 1)] == 0.0
        assert nm.flip_probs(0)[0] == pytest.approx(0.1)

    def test_both(self):
        nm = sweep_noise_model("both", 0.1, 4)
        assert nm.p1[0] == pytest.approx(0.01)
        assert nm.flip_probs(0)[0] == pytest.approx(0.1)

    def test_unknown_mode(self):
        with pytest.raises(ValueError):
            sweep_noise_model("bogus", 0.1, 4)


class TestCrossing:
    def test_interpolation(self):
        diffs = [(0.1, -2.0), (0.2, -1.0), (0.3, 1.0)]
        assert _interpolate_crossing(diffs) == pytest.approx(0.25)

    def test_no_crossing(self):
        assert _interpolate_crossing([(0.1, -1.0), (0.2, -0.5)]) is None

    def test_grid_validation(self):
        with pytest.raises(ValueError):
            run_sweep(SweepConfig("both", [0.6], ["ft_zero_z"], shots=10))


class TestMeasOnlyAnalytic:
    def test_ft_zero_meas_only_matches_enumeration(self):
        """meas_only logical error for the FT |0_L> Z-readout has a
        closed form: flips must pair inside {1,2} and {3,4}; the value
        m1 m3 is wrong for exactly one flipped pair."""
        p = 0.08
        cfg = SweepConfig("meas_only", [p], ["ft_zero_z"],
                          shots=400_000, seed=5)
        res = run_sweep(cfg)
        pt = res.points[0]
        pass_prob = ((1 - p) ** 2 + p ** 2) ** 2
        wrong = 2 * (p * (1 - p)) ** 2 / pass_prob
        sigma = np.sqrt(wrong * (1 - wrong) / pt.n_pass)
        assert abs(pt.logical_error - wrong) < 4 * sigma
        # physical baseline is a bare readout: error rate p exactly
        sigma_p = np.sqrt(p * (1 - p) / cfg.shots)
        assert abs(pt.physical_error - p) < 4 * sigma_p

    def test_zero_noise_point(self):
        cfg = SweepConfig("both", [0.0], ["ft_zero_z"], shots=5000, seed=2)
        res = run_sweep(cfg)
        pt = res.points[0]
        assert pt.logical_error == 0.0
        assert pt.physical_error == 0.0
        assert pt.ps_rate == 1.0


class TestSweepShapes:
    def test_all_pairs_run(self):
        cfg = SweepConfig("both", [0.02, 0.1], list(SWEEP_PAIRS),
                          shots=20_000, seed=3)
        res = run_sweep(cfg)
        assert len(res.points) == 2 * len(SWEEP_PAIRS)
        assert set(res.crossings) == set(SWEEP_PAIRS)
        for pt in res.points:
            assert 0 <= pt.ps_rate <= 1
            assert pt.logical_error is not None
