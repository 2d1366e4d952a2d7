"""Moment-scheduled circuit representation.

A circuit is an ordered list of moments; within a moment no qubit appears
twice, and every qubit appears exactly once per moment (the scheduler
inserts explicit idles).  Barriers separate layers that must not merge,
mirroring the hardware convention of keeping H-layers and CZ-layers
apart.

Measurement is always MeasureZ; X/Y-basis measurements are compiled to a
basis-change prefix (H, or SDag then H) followed by MeasureZ.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .paulis import GATE_KINDS, CliffordGate

ROTATION_OPS = ("RZ", "RX")
NON_GATE_OPS = ("MZ", "RESET", "IDLE")


class ScheduleError(ValueError):
    """Invalid instruction placement (qubit conflict, double measurement...)."""


@dataclass(frozen=True)
class Instruction:
    """One primitive: a Clifford gate, RZ/RX rotation, MZ, RESET or IDLE.

    ``tag`` names the circuit segment the instruction belongs to (for
    example ``ancilla_prep``); noise annotation can exempt tagged
    segments.  ``label`` is the symbolic measurement name and is only
    meaningful on MZ.
    """

    op: str
    qubits: tuple[int, ...]
    angle: float | None = None
    tag: str = ""
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "qubits", tuple(self.qubits))
        if self.op in GATE_KINDS:
            CliffordGate(self.op, self.qubits)  # arity/duplicate validation
            if self.angle is not None:
                raise ValueError(f"{self.op} takes no angle")
        elif self.op in ROTATION_OPS:
            if len(self.qubits) != 1:
                raise ValueError(f"{self.op} takes one qubit")
            if self.angle is None or not math.isfinite(self.angle):
                raise ValueError(f"{self.op} needs a finite angle")
            object.__setattr__(self, "angle", _wrap_angle(self.angle))
        elif self.op in NON_GATE_OPS:
            if len(self.qubits) != 1:
                raise ValueError(f"{self.op} takes one qubit")
            if self.angle is not None:
                raise ValueError(f"{self.op} takes no angle")
        else:
            raise ValueError(f"unknown instruction op {self.op!r}")
        if self.label and self.op != "MZ":
            raise ValueError("only MZ instructions carry labels")

    @property
    def gate(self) -> CliffordGate:
        if self.op not in GATE_KINDS:
            raise ValueError(f"{self.op} is not a Clifford gate")
        return CliffordGate(self.op, self.qubits)

    def is_gate(self) -> bool:
        return self.op in GATE_KINDS or self.op in ROTATION_OPS


def _wrap_angle(theta: float) -> float:
    """Wrap to (-pi, pi]."""
    t = math.fmod(theta, 2.0 * math.pi)
    if t <= -math.pi:
        t += 2.0 * math.pi
    elif t > math.pi:
        t -= 2.0 * math.pi
    return t


@dataclass(frozen=True)
class Circuit:
    """Scheduled circuit: moments of instructions plus measurement names.

    ``measurement_labels`` maps the k-th MZ in execution order to its
    symbolic name, e.g. ``m1z``.  ``qubit_tags`` optionally assigns a
    segment tag to each qubit's initialization.
    """

    n_qubits: int
    moments: tuple[tuple[Instruction, ...], ...]
    measurement_labels: dict[int, str] = field(default_factory=dict)
    qubit_tags: dict[int, str] = field(default_factory=dict)

    @property
    def n_moments(self) -> int:
        return len(self.moments)

    def labels(self) -> list[str]:
        """Measurement labels in execution order."""
        return [self.measurement_labels[k] for k in range(len(self.measurement_labels))]

    def instructions(self):
        """All non-idle instructions in execution order."""
        for moment in self.moments:
            for instr in moment:
                if instr.op != "IDLE":
                    yield instr

    def is_clifford(self, fold_tol: float = 1e-12) -> bool:
        """True when every rotation folds to a Clifford angle."""
        for instr in self.instructions():
            if instr.op in ROTATION_OPS and fold_rotation(instr, fold_tol) is None:
                return False
        return True

    def measured_qubits(self) -> list[int]:
        return [i.qubits[0] for i in self.instructions() if i.op == "MZ"]


# Clifford equivalents of RZ/RX at multiples of pi/2; "identity" = drop.
_FOLD_RZ = {0: None, 1: "S", 2: "Z", -1: "SDag"}
_FOLD_RX = {0: None, 1: "SqrtX", 2: "X", -1: "SqrtXDag"}


def fold_rotation(instr: Instruction, tol: float = 1e-12):
    """Clifford replacement for an RZ/RX instruction, if the angle allows.

    Returns an Instruction, or the string "identity" for angle 0, or None
    when the angle is not a multiple of pi/2 within ``tol``.
    """
    steps = instr.angle / (math.pi / 2.0)
    k = round(steps)
    if abs(steps - k) * (math.pi / 2.0) > tol:
        return None
    k = ((k + 1) % 4) - 1  # normalize to {-1, 0, 1, 2}
    kind = (_FOLD_RZ if instr.op == "RZ" else _FOLD_RX)[k]
    if kind is None:
        return "identity"
    return Instruction(kind, instr.qubits, tag=instr.tag)


BARRIER = "BARRIER"


def schedule(n_qubits, items, qubit_tags=None) -> Circuit:
    """Greedy ASAP scheduling of an ordered instruction list.

    ``items`` mixes Instruction objects and the BARRIER sentinel; moments
    never merge across a barrier.  Idle instructions are inserted so every
    qubit appears in every moment.  Raises ScheduleError on out-of-range
    targets and on any instruction touching an already-measured qubit.
    """
    moments: list[dict[int, Instruction]] = []
    floor = 0  # first moment index allowed for new instructions
    measured: set[int] = set()

    for item in items:
        if item == BARRIER:
            floor = len(moments)
            continue
        instr: Instruction = item
        for q in instr.qubits:
            if not 0 <= q < n_qubits:
                raise ScheduleError(f"qubit {q} out of range for n={n_qubits}")
            if q in measured:
                raise ScheduleError(f"instruction {instr.op} touches measured qubit {q}")
        slot = floor
        for k in range(len(moments) - 1, floor - 1, -1):
            if any(q in moments[k] for q in instr.qubits):
                slot = k + 1
                break
        if slot == len(moments):
            moments.append({})
        for q in instr.qubits:
            moments[slot][q] = instr
        if instr.op == "MZ":
            measured.add(instr.qubits[0])

    full_moments = []
    labels: dict[int, str] = {}
    for m in moments:
        placed = []
        seen = set()
        for q in sorted(m):
            if id(m[q]) not in seen:
                placed.append(m[q])
                seen.add(id(m[q]))
        for instr in placed:
            if instr.op == "MZ":
                k = len(labels)
                labels[k] = instr.label or f"m{instr.qubits[0] + 1}"
        for q in range(n_qubits):
            if q not in m:
                placed.append(Instruction("IDLE", (q,)))
        full_moments.append(tuple(placed))

    return Circuit(n_qubits, tuple(full_moments), labels, dict(qubit_tags or {}))


def flatten(circuit: Circuit) -> list:
    """Instruction list with barriers between moments; schedule() inverse."""
    items: list = []
    for k, moment in enumerate(circuit.moments):
        if k:
            items.append(BARRIER)
        items.extend(i for i in moment if i.op != "IDLE")
    return items


class CircuitBuilder:
    """Incremental construction helper around :func:`schedule`."""

    def __init__(self, n_qubits: int):
        self.n_qubits = n_qubits
        self._items: list = []
        self._qubit_tags: dict[int, str] = {}

    def add(self, op: str, *qubits: int, angle=None, tag="") -> "CircuitBuilder":
        self._items.append(Instruction(op, qubits, angle=angle, tag=tag))
        return self

    def barrier(self) -> "CircuitBuilder":
        if self._items and self._items[-1] != BARRIER:
            self._items.append(BARRIER)
        return self

    def measure(self, qubit: int, label: str, tag="") -> "CircuitBuilder":
        self._items.append(Instruction("MZ", (qubit,), tag=tag, label=label))
        return self

    def extend(self, other: "CircuitBuilder") -> "CircuitBuilder":
        """Append another builder's items (with a barrier in between)."""
        self.barrier()
        for item in other._items:
            if item != BARRIER and item.op == "MZ":
                raise ScheduleError("extend() cannot carry measurements")
            self._items.append(item)
        self._qubit_tags.update(other._qubit_tags)
        return self

    def tag_qubits(self, qubits, tag: str) -> "CircuitBuilder":
        for q in qubits:
            self._qubit_tags[q] = tag
        return self

    def build(self) -> Circuit:
        return schedule(self.n_qubits, self._items, self._qubit_tags)


# Basis-change prefixes, in time order (first listed acts first).
_BASIS_PREFIX = {"Z": (), "X": ("H",), "Y": ("SDag", "H")}


def compile_measurement_basis(circuit: Circuit, bases: dict[int, str],
                              labels: dict[int, str] | None = None,
                              mz_tags: dict[int, str] | None = None) -> Circuit:
    """Append basis-change prefixes and MeasureZ for the given qubits.

    ``bases`` maps qubit -> 'X' | 'Y' | 'Z'.  Default labels are
    ``m<q+1><basis>`` with the 1-based qubit index.  ``mz_tags`` tags the
    MZ instructions only (basis-change gates carry regular gate noise
    regardless).  Raises ScheduleError if a qubit was already measured.
    """
    already = set(circuit.measured_qubits())
    items = flatten(circuit)
    items.append(BARRIER)
    order = sorted(bases)
    for q in order:
        if q in already:
            raise ScheduleError(f"qubit {q} measured twice")
        if bases[q] not in _BASIS_PREFIX:
            raise ScheduleError(f"unknown basis {bases[q]!r}")
    if any(bases[q] == "Y" for q in order):
        for q in order:
            if bases[q] == "Y":
                items.append(Instruction("SDag", (q,)))
        items.append(BARRIER)
    if any(bases[q] in ("X", "Y") for q in order):
        for q in order:
            if bases[q] in ("X", "Y"):
                items.append(Instruction("H", (q,)))
        items.append(BARRIER)
    for q in order:
        name = (labels or {}).get(q, f"m{q + 1}{bases[q].lower()}")
        tag = (mz_tags or {}).get(q, "")
        items.append(Instruction("MZ", (q,), tag=tag, label=name))
    return schedule(circuit.n_qubits, items, circuit.qubit_tags)


def merge_parallel(a: Circuit, b: Circuit, offset: int = 0) -> Circuit:
    """Overlay two circuits on disjoint qubit sets, b delayed by ``offset``.

    Used for staggering the layers of two simultaneous block
    preparations.  Both circuits must share n_qubits and must not overlap
    on any non-idle qubit in any aligned moment.
    """
    if a.n_qubits != b.n_qubits:
        raise ScheduleError("merge requires equal qubit counts")
    if a.measurement_labels or b.measurement_labels:
        raise ScheduleError("merge operands must not contain measurements")
    n_m = max(a.n_moments, b.n_moments + offset)
    items: list = []
    for m in range(n_m):
        if m:
            items.append(BARRIER)
        used = set()
        for src, shift in ((a, 0), (b, offset)):
            k = m - shift
            if 0 <= k < src.n_moments:
                for instr in src.moments[k]:
                    if instr.op == "IDLE":
                        continue
                    if used & set(instr.qubits):
                        raise ScheduleError("merged circuits overlap on a qubit")
                    used.update(instr.qubits)
                    items.append(instr)
    tags = dict(a.qubit_tags)
    tags.update(b.qubit_tags)
    return schedule(a.n_qubits, items, tags)


def to_text(circuit: Circuit) -> str:
    """Line-oriented form: one moment per line, 1-based qubit indices."""
    lines = [f"# n_qubits: {circuit.n_qubits}"]
    for moment in circuit.moments:
        parts = []
        for instr in moment:
            if instr.op == "IDLE":
                continue
            qs = ",".join(str(q + 1) for q in instr.qubits)
            if instr.angle is not None:
                parts.append(f"{instr.op}({instr.angle:.12g}) {qs}")
            elif instr.op == "MZ" and instr.label:
                parts.append(f"MZ[{instr.label}] {qs}")
            else:
                parts.append(f"{instr.op} {qs}")
        lines.append("; ".join(parts) if parts else "IDLE")
    return "\n".join(lines) + "\n"


def from_text(text: str) -> Circuit:
    n_qubits = None
    items: list = []
    first_moment = True
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if body.startswith("n_qubits:"):
                n_qubits = int(body.split(":", 1)[1])
            continue
        if n_qubits is None:
            raise ScheduleError("missing '# n_qubits:' header")
        if not first_moment:
            items.append(BARRIER)
        first_moment = False
        if line == "IDLE":
            continue
        for part in line.split(";"):
            part = part.strip()
            opq, qs = part.rsplit(" ", 1)
            angle = None
            label = ""
            if "(" in opq:
                op, rest = opq.split("(", 1)
                angle = float(rest.rstrip(")"))
            elif "[" in opq:
                op, rest = opq.split("[", 1)
                label = rest.rstrip("]")
            else:
                op = opq
            qubits = tuple(int(t) - 1 for t in qs.split(","))
            items.append(Instruction(op, qubits, angle=angle, label=label))
    if n_qubits is None:
        raise ScheduleError("missing '# n_qubits:' header")
    return schedule(n_qubits, items)
