"""Device parameter files: per-qubit readout/gate errors, CZ fidelities.

The bundled default file transcribes the eight-qubit 2x4 region used in
the experiments (single-qubit gate errors, readout fidelities F00/F11,
CZ XEB fidelities per coupler, gate durations).  Derived noise
strengths: p1 = single-qubit gate error, p2 = 1 - CZ fidelity,
p_m = 1 - (F00 + F11)/2 for symmetric readout flips.
"""

from __future__ import annotations

import configparser
import hashlib
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .noise import NoiseModel, pair_key


class DeviceFileError(ValueError):
    """Malformed or incomplete device parameter file."""


@dataclass(frozen=True)
class QubitParams:
    gate_error_1q: float
    f00: float
    f11: float
    t1_us: float | None = None
    t2_us: float | None = None


@dataclass
class DeviceParams:
    """Validated device description.

    ``adjacency`` lists allowed couplers (0-based qubit index pairs);
    ``cz_fidelity`` must only contain adjacent pairs.  ``durations_ns``
    is metadata only (the noise model is per-operation, not per-time).
    ``defaults`` carries optional experiment overrides from the file's
    [defaults] section (shots, seed, engine), consulted by the CLI when
    the corresponding flag is not given.
    """

    n_qubits: int
    qubits: dict[int, QubitParams]
    cz_fidelity: dict[tuple[int, int], float]
    adjacency: set[tuple[int, int]] = field(default_factory=set)
    durations_ns: dict[str, float] = field(default_factory=dict)
    defaults: dict[str, str] = field(default_factory=dict)
    source_hash: str = ""

    def noise_model(self, symmetric_readout: bool = True) -> NoiseModel:
        return NoiseModel(
            p1={q: p.gate_error_1q for q, p in self.qubits.items()},
            p2={pair: 1.0 - f for pair, f in self.cz_fidelity.items()},
            readout={q: (p.f00, p.f11) for q, p in self.qubits.items()},
            symmetric_readout=symmetric_readout,
        )

    def p_m(self, q: int) -> float:
        p = self.qubits[q]
        return 1.0 - (p.f00 + p.f11) / 2.0

    def average_p_m(self) -> float:
        return sum(self.p_m(q) for q in self.qubits) / len(self.qubits)


def default_device_path() -> Path:
    return Path(str(resources.files("d2lab").joinpath("data/device_default.ini")))


def _parse_qubit_name(name: str, n_qubits: int) -> int:
    if not name.startswith("q"):
        raise DeviceFileError(f"bad qubit name {name!r} (expected q1..q{n_qubits})")
    try:
        idx = int(name[1:]) - 1
    except ValueError:
        raise DeviceFileError(f"bad qubit name {name!r}")
    if not 0 <= idx < n_qubits:
        raise DeviceFileError(f"qubit {name} outside q1..q{n_qubits}")
    return idx


def load_device(path: str | Path | None = None) -> DeviceParams:
    """Parse and validate a device file (None -> bundled default)."""
    path = Path(path) if path is not None else default_device_path()
    if not path.exists():
        raise DeviceFileError(f"device file not found: {path}")
    text = path.read_text()
    cp = configparser.ConfigParser()
    cp.read_string(text)

    if "layout" not in cp:
        raise DeviceFileError("missing [layout] section")
    try:
        n_qubits = cp.getint("layout", "n_qubits")
    except (configparser.NoOptionError, ValueError):
        raise DeviceFileError("missing or invalid layout.n_qubits")
    adj_text = cp.get("layout", "adjacency", fallback="")
    if not adj_text.strip():
        raise DeviceFileError("missing layout.adjacency")
    adjacency: set[tuple[int, int]] = set()
    for token in adj_text.split():
        a, _, b = token.partition("-")
        adjacency.add(pair_key(_parse_qubit_name(a, n_qubits),
                               _parse_qubit_name(b, n_qubits)))

    qubits: dict[int, QubitParams] = {}
    for q in range(n_qubits):
        section = f"qubit q{q + 1}"
        if section not in cp:
            raise DeviceFileError(f"missing section [{section}]")
        sec = cp[section]
        try:
            qubits[q] = QubitParams(
                gate_error_1q=float(sec["gate_error_1q"]),
                f00=float(sec["f00"]),
                f11=float(sec["f11"]),
                t1_us=float(sec["t1_us"]) if "t1_us" in sec else None,
                t2_us=float(sec["t2_us"]) if "t2_us" in sec else None,
            )
        except KeyError as e:
            raise DeviceFileError(f"[{section}] missing field {e.args[0]!r}")
        except ValueError as e:
            raise DeviceFileError(f"[{section}]: {e}")
        for what, v in (("gate_error_1q", qubits[q].gate_error_1q),
                        ("f00", qubits[q].f00), ("f11", qubits[q].f11)):
            if not 0.0 <= v <= 1.0:
                raise DeviceFileError(f"[{section}] {what}={v} not a probability")

    cz: dict[tuple[int, int], float] = {}
    for section in cp.sections():
        if not section.startswith("pair "):
            continue
        name = section.split(None, 1)[1]
        a, _, b = name.partition("-")
        pair = pair_key(_parse_qubit_name(a, n_qubits),
                        _parse_qubit_name(b, n_qubits))
        if pair not in adjacency:
            raise DeviceFileError(f"[{section}] not in layout adjacency")
        try:
            f = float(cp[section]["cz_fidelity"])
        except KeyError:
            raise DeviceFileError(f"[{section}] missing field 'cz_fidelity'")
        if not 0.0 <= f <= 1.0:
            raise DeviceFileError(f"[{section}] cz_fidelity={f} not a probability")
        cz[pair] = f
    missing_pairs = adjacency - set(cz)
    if missing_pairs:
        names = ", ".join(f"q{a + 1}-q{b + 1}" for a, b in sorted(missing_pairs))
        raise DeviceFileError(f"missing [pair ...] sections for: {names}")

    durations = {}
    if "durations" in cp:
        durations = {k: float(v) for k, v in cp["durations"].items()}
    defaults = dict(cp["defaults"]) if "defaults" in cp else {}
    for key in defaults:
        if key not in ("shots", "seed", "engine"):
            raise DeviceFileError(f"[defaults] unknown override {key!r}")

    return DeviceParams(
        n_qubits=n_qubits,
        qubits=qubits,
        cz_fidelity=cz,
        adjacency=adjacency,
        durations_ns=durations,
        defaults=defaults,
        source_hash=hashlib.sha256(text.encode()).hexdigest()[:12],
    )
