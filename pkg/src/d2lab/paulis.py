"""Phase-tracked Pauli operators and Clifford conjugation.

This module is the substrate shared by the tableau engine, the fault
auditor and every observable definition.  Operators are stored in binary
symplectic form with an exact global phase in {+1, +i, -1, -i}:

    P = i**k * prod_q X_q**x_q * Z_q**z_q

with the fixed convention ``Y = i * X * Z``, so a displayed ``Y`` on one
qubit corresponds to (x=1, z=1, k=1).  All products and conjugations are
exact, including phases.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

_PHASE_LABELS = {0: "+", 1: "+i", 2: "-", 3: "-i"}
_LABEL_PHASES = {"+": 0, "": 0, "+i": 1, "i": 1, "-": 2, "-i": 3}
_CHAR_XZ = {"I": (0, 0), "X": (1, 0), "Z": (0, 1), "Y": (1, 1)}
_XZ_CHAR = {(0, 0): "I", (1, 0): "X", (0, 1): "Z", (1, 1): "Y"}

ONE_QUBIT_GATES = ("H", "SqrtX", "SqrtXDag", "S", "SDag", "X", "Y", "Z")
TWO_QUBIT_GATES = ("CZ", "CNOT")
GATE_KINDS = ONE_QUBIT_GATES + TWO_QUBIT_GATES

_INVERSE = {
    "H": "H", "S": "SDag", "SDag": "S", "SqrtX": "SqrtXDag",
    "SqrtXDag": "SqrtX", "X": "X", "Y": "Y", "Z": "Z", "CZ": "CZ",
    "CNOT": "CNOT",
}


class DimensionError(ValueError):
    """Operands act on different qubit counts."""


@dataclass(frozen=True)
class CliffordGate:
    """A named Clifford gate applied to one or two qubits.

    ``kind`` is one of H, SqrtX, SqrtXDag, S, SDag, X, Y, Z (one target)
    or CZ, CNOT (two targets; for CNOT the first target is the control).
    """

    kind: str
    targets: tuple[int, ...]

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise ValueError(f"unknown Clifford gate kind {self.kind!r}")
        object.__setattr__(self, "targets", tuple(self.targets))
        want = 1 if self.kind in ONE_QUBIT_GATES else 2
        if len(self.targets) != want:
            raise ValueError(f"{self.kind} takes {want} target(s), got {self.targets}")
        if len(set(self.targets)) != len(self.targets):
            raise ValueError(f"{self.kind} targets must be distinct: {self.targets}")

    @property
    def inverse(self) -> "CliffordGate":
        return CliffordGate(_INVERSE[self.kind], self.targets)


class PauliString:
    """An n-qubit Pauli operator with exact phase.

    ``x`` and ``z`` are bitmasks (bit q = qubit q); ``phase_exp`` is the
    exponent k of the internal form i**k * X^x Z^z.  The *displayed* phase
    (what :meth:`label` prints) differs from k by i**(number of Y sites)
    because of the Y = iXZ convention.
    """

    __slots__ = ("n", "x", "z", "phase_exp")

    def __init__(self, n: int, x: int = 0, z: int = 0, phase_exp: int = 0):
        if n < 0:
            raise ValueError("qubit count must be non-negative")
        self.n = n
        mask = (1 << n) - 1
        self.x = x & mask
        self.z = z & mask
        self.phase_exp = phase_exp & 3

    # -- constructors -------------------------------------------------

    @classmethod
    def identity(cls, n: int) -> "PauliString":
        return cls(n)

    @classmethod
    def single(cls, n: int, qubit: int, char: str) -> "PauliString":
        """One-qubit operator ``char`` at ``qubit``, identity elsewhere."""
        if not 0 <= qubit < n:
            raise IndexError(f"qubit {qubit} out of range for n={n}")
        xb, zb = _CHAR_XZ[char.upper()]
        k = 1 if (xb and zb) else 0
        return cls(n, xb << qubit, zb << qubit, k)

    @classmethod
    def from_label(cls, label: str) -> "PauliString":
        """Parse text form: optional phase prefix then IXYZ characters.

        Leftmost character is qubit 1 (index 0), e.g. ``-iZIYX``.
        """
        s = label.strip()
        prefix = ""
        while s and s[0] in "+-i":
            prefix += s[0]
            s = s[1:]
        if prefix not in _LABEL_PHASES:
            raise ValueError(f"bad phase prefix in {label!r}")
        k = _LABEL_PHASES[prefix]
        x = z = 0
        for q, ch in enumerate(s):
            if ch.upper() not in _CHAR_XZ:
                raise ValueError(f"bad Pauli character {ch!r} in {label!r}")
            xb, zb = _CHAR_XZ[ch.upper()]
            x |= xb << q
            z |= zb << q
            if xb and zb:
                k += 1
        return cls(len(s), x, z, k)

    @classmethod
    def from_chars(cls, chars: Iterable[str]) -> "PauliString":
        return cls.from_label("".join(chars))

    # -- queries ------------------------------------------------------

    def char_at(self, qubit: int) -> str:
        return _XZ_CHAR[((self.x >> qubit) & 1, (self.z >> qubit) & 1)]

    @property
    def weight(self) -> int:
        return (self.x | self.z).bit_count()

    @property
    def display_phase_exp(self) -> int:
        return (self.phase_exp - (self.x & self.z).bit_count()) & 3

    @property
    def phase(self) -> complex:
        return 1j ** self.display_phase_exp

    def is_hermitian(self) -> bool:
        return self.display_phase_exp in (0, 2)

    def is_identity(self, up_to_phase: bool = False) -> bool:
        if self.x or self.z:
            return False
        return up_to_phase or self.display_phase_exp == 0

    def label(self) -> str:
        body = "".join(self.char_at(q) for q in range(self.n))
        return _PHASE_LABELS[self.display_phase_exp] + body

    def bare(self) -> "PauliString":
        """Same operator with the phase dropped (displayed phase +1)."""
        k = (self.x & self.z).bit_count() & 3
        return PauliString(self.n, self.x, self.z, k)

    def key(self) -> tuple[int, int]:
        """Phase-free symplectic key, for set membership mod phase."""
        return (self.x, self.z)

    # -- algebra ------------------------------------------------------

    def __mul__(self, other: "PauliString") -> "PauliString":
        return multiply(self, other)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, PauliString)
            and self.n == other.n
            and self.x == other.x
            and self.z == other.z
            and self.phase_exp == other.phase_exp
        )

    def __hash__(self) -> int:
        return hash((self.n, self.x, self.z, self.phase_exp))

    def scaled(self, phase_exp_delta: int) -> "PauliString":
        """Multiply by i**phase_exp_delta."""
        return PauliString(self.n, self.x, self.z, self.phase_exp + phase_exp_delta)

    def adjoint(self) -> "PauliString":
        return PauliString(self.n, self.x, self.z, -self.phase_exp)

    def __repr__(self) -> str:
        return f"PauliString({self.label()!r})"


def multiply(p: PauliString, q: PauliString) -> PauliString:
    """Operator product p * q with exact phase in {+1, +i, -1, -i}."""
    if p.n != q.n:
        raise DimensionError(f"length mismatch: {p.n} vs {q.n}")
    # Reordering Z^zp past X^xq picks up (-1) per overlapping site.
    sign_flips = (p.z & q.x).bit_count()
    k = p.phase_exp + q.phase_exp + 2 * sign_flips
    return PauliString(p.n, p.x ^ q.x, p.z ^ q.z, k)


def commutes(p: PauliString, q: PauliString) -> bool:
    """True iff the symplectic inner product of p and q is even."""
    if p.n != q.n:
        raise DimensionError(f"length mismatch: {p.n} vs {q.n}")
    return ((p.x & q.z).bit_count() + (p.z & q.x).bit_count()) % 2 == 0


# Images of X and Z under conjugation by each 1-qubit gate, as
# (char, sign) with sign in {+1, -1}.
_IMAGES_1Q = {
    "H": {"X": ("Z", 1), "Z": ("X", 1)},
    "S": {"X": ("Y", 1), "Z": ("Z", 1)},
    "SDag": {"X": ("Y", -1), "Z": ("Z", 1)},
    "SqrtX": {"X": ("X", 1), "Z": ("Y", -1)},
    "SqrtXDag": {"X": ("X", 1), "Z": ("Y", 1)},
    "X": {"X": ("X", 1), "Z": ("Z", -1)},
    "Y": {"X": ("X", -1), "Z": ("Z", -1)},
    "Z": {"X": ("X", -1), "Z": ("Z", 1)},
}

# Images for 2-qubit gates on (a, b): keys are the four generators.
_IMAGES_2Q = {
    "CZ": {"Xa": ("X", "Z"), "Za": ("Z", "I"), "Xb": ("Z", "X"), "Zb": ("I", "Z")},
    "CNOT": {"Xa": ("X", "X"), "Za": ("Z", "I"), "Xb": ("I", "X"), "Zb": ("Z", "Z")},
}


def conjugate(p: PauliString, gate: CliffordGate) -> PauliString:
    """Return gate * p * gate^dagger with exact phase.

    Conjugation is a group homomorphism, so the result is assembled by
    conjugating each X/Z factor of p (in fixed qubit order) and
    multiplying the images.
    """
    for t in gate.targets:
        if not 0 <= t < p.n:
            raise IndexError(f"gate target {t} out of range for n={p.n}")

    n = p.n
    out = PauliString(n, 0, 0, p.phase_exp)
    if gate.kind in ONE_QUBIT_GATES:
        (q,) = gate.targets
        images = _IMAGES_1Q[gate.kind]
        for factor in ("X", "Z"):
            bit = p.x if factor == "X" else p.z
            if (bit >> q) & 1:
                char, sign = images[factor]
                img = PauliString.single(n, q, char)
                if sign < 0:
                    img = img.scaled(2)
                out = multiply(out, img)
        untouched = ~(1 << q)
    else:
        a, b = gate.targets
        images = _IMAGES_2Q[gate.kind]
        for key, qub in (("Xa", a), ("Za", a), ("Xb", b), ("Zb", b)):
            bit = p.x if key[0] == "X" else p.z
            if (bit >> qub) & 1:
                ca, cb = images[key]
                img = PauliString(n)
                if ca != "I":
                    img = multiply(img, PauliString.single(n, a, ca))
                if cb != "I":
                    img = multiply(img, PauliString.single(n, b, cb))
                out = multiply(out, img)
        untouched = ~((1 << a) | (1 << b))

    rest = PauliString(n, p.x & untouched, p.z & untouched, 0)
    # Factors on untouched qubits commute with the images on the targets.
    return multiply(out, rest)


def conjugate_many(p: PauliString, gates: Iterable[CliffordGate]) -> PauliString:
    for g in gates:
        p = conjugate(p, g)
    return p
