"""Shot tables: per-shot measurement values plus post-selection verdicts.

Values are stored as +1/-1 int8 arrays, one column per measurement
label.  A ShotTable is what both sampling engines emit; condition
verdicts are attached later by post-selection rules.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np


@dataclass
class ShotTable:
    """Measurement outcomes for a batch of shots.

    ``values[:, k]`` holds the +1/-1 outcome for ``labels[k]``.
    ``verdicts`` maps condition names to boolean pass arrays.
    """

    labels: list[str]
    values: np.ndarray  # (shots, len(labels)) int8, entries +1/-1
    seed: int
    circuit_hash: str = ""
    verdicts: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        if self.values.ndim != 2 or self.values.shape[1] != len(self.labels):
            raise ValueError("values shape does not match labels")
        if len(set(self.labels)) != len(self.labels):
            raise ValueError(f"duplicate measurement labels: {self.labels}")

    @property
    def n_shots(self) -> int:
        return self.values.shape[0]

    def column(self, label: str) -> np.ndarray:
        return self.values[:, self.labels.index(label)]

    def product(self, labels) -> np.ndarray:
        """Per-shot product over a set of labels."""
        out = np.ones(self.n_shots, dtype=np.int8)
        for lab in labels:
            out = out * self.column(lab)
        return out

    def records(self):
        """Iterate per-shot dicts (label -> value, condition -> bool)."""
        for s in range(self.n_shots):
            bits = {lab: int(self.values[s, k]) for k, lab in enumerate(self.labels)}
            derived = {name: bool(v[s]) for name, v in self.verdicts.items()}
            yield ShotRecord(bits, derived)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"# circuit={self.circuit_hash} seed={self.seed} shots={self.n_shots}\n")
        cond_names = sorted(self.verdicts)
        buf.write(",".join(self.labels + [f"pass:{c}" for c in cond_names]) + "\n")
        for s in range(self.n_shots):
            row = [f"{int(v):+d}" for v in self.values[s]]
            row += ["1" if self.verdicts[c][s] else "0" for c in cond_names]
            buf.write(",".join(row) + "\n")
        return buf.getvalue()


@dataclass(frozen=True)
class ShotRecord:
    """One shot: measurement values and condition verdicts."""

    bits: dict[str, int]
    derived: dict[str, bool]


def table_from_records(records, seed: int = 0) -> ShotTable:
    """Assemble a ShotTable from an iterable of ShotRecord."""
    records = list(records)
    if not records:
        raise ValueError("no records")
    labels = list(records[0].bits)
    values = np.array([[r.bits[lab] for lab in labels] for r in records], dtype=np.int8)
    table = ShotTable(labels, values, seed)
    for name in records[0].derived:
        table.verdicts[name] = np.array([r.derived[name] for r in records], dtype=bool)
    return table
