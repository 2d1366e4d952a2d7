"""Depolarizing noise model and circuit noise-site annotation.

Single-qubit depolarizing channels (total probability p1, uniform over
X/Y/Z) are attached after state initialization, after every physical
single-qubit gate and after every idle; two-qubit channels (probability
p2, uniform over the 15 non-identity Pauli pairs) after every two-qubit
gate.  Measurements get a classical bit-flip site.

Virtual-Z rotations (RZ standing alone in a moment) are noiseless; idles
in measurement moments carry no depolarizing site (the readout flip is
the only noise at measurement time).
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .circuits import Circuit
from .paulis import ONE_QUBIT_GATES, TWO_QUBIT_GATES


class NoiseModelError(ValueError):
    """Missing or invalid noise parameter for a used qubit or pair."""


def pair_key(a: int, b: int) -> tuple[int, int]:
    return (a, b) if a < b else (b, a)


@dataclass
class NoiseModel:
    """Per-qubit/per-pair depolarizing strengths plus readout fidelities.

    ``readout`` maps qubit -> (f00, f11).  With ``symmetric_readout`` the
    recorded bit flips with p_m = 1 - (f00 + f11)/2 regardless of value;
    otherwise with 1 - f00 when the true bit is 0 and 1 - f11 when it
    is 1.
    """

    p1: dict[int, float] = field(default_factory=dict)
    p2: dict[tuple[int, int], float] = field(default_factory=dict)
    readout: dict[int, tuple[float, float]] = field(default_factory=dict)
    symmetric_readout: bool = True

    def __post_init__(self):
        for q, p in self.p1.items():
            _check_prob(p, f"p1[{q}]")
        clean = {}
        for k, p in self.p2.items():
            _check_prob(p, f"p2[{k}]")
            clean[pair_key(*k)] = p
        self.p2 = clean
        for q, (f00, f11) in self.readout.items():
            _check_prob(f00, f"f00[{q}]")
            _check_prob(f11, f"f11[{q}]")

    @classmethod
    def noiseless(cls, n_qubits: int) -> "NoiseModel":
        return cls.uniform(n_qubits, 0.0, 0.0, 0.0)

    def with_symmetric_readout(self, symmetric: bool) -> "NoiseModel":
        return NoiseModel(dict(self.p1), dict(self.p2), dict(self.readout),
                          symmetric_readout=symmetric)

    @classmethod
    def uniform(cls, n_qubits: int, p1: float, p2: float, p_m: float,
                symmetric_readout: bool = True) -> "NoiseModel":
        """Same strength everywhere; any pair allowed."""
        f = 1.0 - p_m
        return cls(
            p1={q: p1 for q in range(n_qubits)},
            p2={pair_key(a, b): p2 for a in range(n_qubits)
                for b in range(a + 1, n_qubits)},
            readout={q: (f, f) for q in range(n_qubits)},
            symmetric_readout=symmetric_readout,
        )

    def p1_for(self, q: int) -> float:
        try:
            return self.p1[q]
        except KeyError:
            raise NoiseModelError(f"no single-qubit noise parameter for qubit {q + 1}")

    def p2_for(self, a: int, b: int) -> float:
        try:
            return self.p2[pair_key(a, b)]
        except KeyError:
            raise NoiseModelError(
                f"no two-qubit noise parameter for pair q{a + 1}-q{b + 1}")

    def flip_probs(self, q: int) -> tuple[float, float]:
        """(flip prob when bit is 0, flip prob when bit is 1)."""
        try:
            f00, f11 = self.readout[q]
        except KeyError:
            raise NoiseModelError(f"no readout parameters for qubit {q + 1}")
        if self.symmetric_readout:
            pm = 1.0 - (f00 + f11) / 2.0
            return (pm, pm)
        return (1.0 - f00, 1.0 - f11)


def _check_prob(p: float, what: str) -> None:
    if not 0.0 <= p <= 1.0:
        raise NoiseModelError(f"{what} = {p} is not a probability")


# Site kinds
INIT = "init"      # frame randomization point + E1 after initialization
DEPOL1 = "depol1"
DEPOL2 = "depol2"
FLIP = "flip"


@dataclass(frozen=True)
class NoiseSite:
    """One stochastic event location in the annotated circuit."""

    kind: str
    qubits: tuple[int, ...]
    probs: tuple[float, ...]   # (p,) for depol sites, (p_flip0, p_flip1) for FLIP
    moment: int                # -1 for initialization sites


@dataclass(frozen=True)
class AnnotatedCircuit:
    """A circuit plus its ordered noise sites.

    ``sites`` lists, in execution order, first one INIT site per qubit,
    then the depolarizing/flip sites moment by moment.  FLIP sites appear
    in measurement order (matching measurement labels).
    """

    circuit: Circuit
    noise_model: NoiseModel
    sites: tuple[NoiseSite, ...]

    def counts(self) -> dict[str, int]:
        out = {INIT: 0, DEPOL1: 0, DEPOL2: 0, FLIP: 0}
        for s in self.sites:
            out[s.kind] += 1
        return out


def iter_events(ann: AnnotatedCircuit):
    """Interleave instructions with their noise sites, in execution order.

    Yields ('init', qubit, site | None) for each qubit, then
    ('instr', instruction, site | None) walking moments.  Both engines
    consume this stream so fault ordering is identical by construction.
    """
    sites = list(ann.sites)
    si = 0

    def take(kind, qubits, moment):
        nonlocal si
        if si < len(sites):
            s = sites[si]
            if s.kind == kind and s.qubits == qubits and s.moment == moment:
                si += 1
                return s
        return None

    circuit = ann.circuit
    for q in range(circuit.n_qubits):
        yield ("init", q, take(INIT, (q,), -1))
    for m, moment in enumerate(circuit.moments):
        for instr in moment:
            if instr.op in TWO_QUBIT_GATES:
                site = take(DEPOL2, instr.qubits, m)
            elif instr.op in ONE_QUBIT_GATES or instr.op in ("RX", "IDLE"):
                site = take(DEPOL1, instr.qubits, m)
            elif instr.op == "MZ":
                site = take(FLIP, instr.qubits, m)
            elif instr.op == "RESET":
                site = take(INIT, instr.qubits, m)
            else:  # RZ: virtual, never carries a site
                site = None
            yield ("instr", instr, site)
    if si != len(sites):
        raise AssertionError(f"unconsumed noise sites: {sites[si:]}")


def apply_noise_sites(circuit: Circuit, nm: NoiseModel,
                      skip_tags: tuple[str, ...] = ()) -> AnnotatedCircuit:
    """Attach noise sites to a circuit per the depolarizing model.

    ``skip_tags`` lists segment tags whose instructions (and, for
    initialization, whose tagged qubits) get no noise sites; used for
    idealized-segment studies.  Validates that the model covers every
    qubit and pair the circuit uses.
    """
    sites: list[NoiseSite] = []
    skip = set(skip_tags)

    for q in range(circuit.n_qubits):
        if circuit.qubit_tags.get(q, "") in skip:
            continue
        sites.append(NoiseSite(INIT, (q,), (nm.p1_for(q),), -1))

    for m, moment in enumerate(circuit.moments):
        has_mz = any(i.op == "MZ" for i in moment)
        # Zero-duration moments (only virtual RZ + idles) add no idle
        # noise, and neither do measurement moments (flip model only).
        idles_noisy = not has_mz and any(
            i.op not in ("RZ", "IDLE") for i in moment)
        for instr in moment:
            if instr.tag and instr.tag in skip:
                continue
            if instr.op in TWO_QUBIT_GATES:
                a, b = instr.qubits
                sites.append(NoiseSite(DEPOL2, (a, b), (nm.p2_for(a, b),), m))
            elif instr.op in ONE_QUBIT_GATES or instr.op == "RX":
                q = instr.qubits[0]
                sites.append(NoiseSite(DEPOL1, (q,), (nm.p1_for(q),), m))
            elif instr.op == "RZ":
                pass  # virtual Z: zero duration, noiseless
            elif instr.op == "IDLE":
                if idles_noisy:
                    q = instr.qubits[0]
                    sites.append(NoiseSite(DEPOL1, (q,), (nm.p1_for(q),), m))
            elif instr.op == "RESET":
                q = instr.qubits[0]
                sites.append(NoiseSite(INIT, (q,), (nm.p1_for(q),), m))
            elif instr.op == "MZ":
                q = instr.qubits[0]
                sites.append(NoiseSite(FLIP, (q,), nm.flip_probs(q), m))
    return AnnotatedCircuit(circuit, nm, tuple(sites))
