import pytest

from d2lab.device import DeviceFileError, load_device
from d2lab.noise import pair_key


class TestDefaultDevice:
    def test_q1_row(self, device):
        q1 = device.qubits[0]
        assert q1.f00 == pytest.approx(0.9610)
        assert q1.f11 == pytest.approx(0.9150)
        assert q1.gate_error_1q == pytest.approx(0.0024)

    def test_average_flip_probability(self, device):
        # 1 - (0.9538 + 0.8910)/2 = 0.0776
        assert device.average_p_m() == pytest.approx(0.0776, abs=1e-4)

    def test_cz_pair_values(self, device):
        assert device.cz_fidelity[pair_key(5, 6)] == pytest.approx(0.9864)
        nm = device.noise_model()
        assert nm.p2_for(5, 6) == pytest.approx(1 - 0.9864)

    def test_average_cz(self, device):
        avg = sum(device.cz_fidelity.values()) / len(device.cz_fidelity)
        assert avg == pytest.approx(0.9702, abs=1e-4)

    def test_adjacency_is_grid(self, device):
        assert len(device.adjacency) == 10
        assert pair_key(0, 4) in device.adjacency  # q1-q5 vertical
        assert pair_key(0, 2) not in device.adjacency

    def test_noise_model_readout(self, device):
        nm = device.noise_model()
        p0, p1 = nm.flip_probs(0)
        assert p0 == p1 == pytest.approx(1 - (0.9610 + 0.9150) / 2)
        nm_a = device.noise_model(symmetric_readout=False)
        assert nm_a.flip_probs(0) == (pytest.approx(0.039), pytest.approx(0.085))

    def test_durations_metadata(self, device):
        assert device.durations_ns["rz"] == 0.0
        assert device.durations_ns["cz"] == 40.0


class TestParsing:
    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.ini"
        path.write_text("")
        with pytest.raises(DeviceFileError, match="layout"):
            load_device(path)

    def test_missing_qubit_section(self, tmp_path):
        path = tmp_path / "dev.ini"
        path.write_text("[layout]\nn_qubits = 2\nadjacency = q1-q2\n")
        with pytest.raises(DeviceFileError, match=r"qubit q1"):
            load_device(path)

    def test_missing_field_named(self, tmp_path):
        path = tmp_path / "dev.ini"
        path.write_text(
            "[layout]\nn_qubits = 1\nadjacency = q1-q1\n"
            "[qubit q1]\nf00 = 0.9\nf11 = 0.9\n")
        with pytest.raises(DeviceFileError, match="gate_error_1q"):
            load_device(path)

    def test_missing_pair_section(self, tmp_path):
        path = tmp_path / "dev.ini"
        path.write_text(
            "[layout]\nn_qubits = 2\nadjacency = q1-q2\n"
            "[qubit q1]\nf00=0.9\nf11=0.9\ngate_error_1q=0.001\n"
            "[qubit q2]\nf00=0.9\nf11=0.9\ngate_error_1q=0.001\n")
        with pytest.raises(DeviceFileError, match="q1-q2"):
            load_device(path)

    def test_pair_outside_adjacency(self, tmp_path):
        path = tmp_path / "dev.ini"
        path.write_text(
            "[layout]\nn_qubits = 3\nadjacency = q1-q2\n"
            "[qubit q1]\nf00=0.9\nf11=0.9\ngate_error_1q=0.001\n"
            "[qubit q2]\nf00=0.9\nf11=0.9\ngate_error_1q=0.001\n"
            "[qubit q3]\nf00=0.9\nf11=0.9\ngate_error_1q=0.001\n"
            "[pair q1-q2]\ncz_fidelity = 0.98\n"
            "[pair q1-q3]\ncz_fidelity = 0.98\n")
        with pytest.raises(DeviceFileError, match="adjacency"):
            load_device(path)

    def test_bad_probability(self, tmp_path):
        path = tmp_path / "dev.ini"
        path.write_text(
            "[layout]\nn_qubits = 1\nadjacency = q1-q1\n"
            "[qubit q1]\nf00=1.5\nf11=0.9\ngate_error_1q=0.001\n")
        with pytest.raises(DeviceFileError, match="f00"):
            load_device(path)

    def test_nonexistent_path(self, tmp_path):
        with pytest.raises(DeviceFileError, match="not found"):
            load_device(tmp_path / "nope.ini")

    def test_hash_stability(self, device):
        assert load_device().source_hash == device.source_hash
