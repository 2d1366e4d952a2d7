"""Benchmark the frame-sampling backends (numba njit vs pure numpy).

Runs the device-noise Bell-state circuit at increasing shot counts on
both backends, checks the outputs are bit-identical, and prints
shots/second for each.

    python3 benchmarks/frame_bench.py [--shots N ...]
"""

import argparse
import time

import numpy as np

from d2lab._kernels import HAS_NUMBA
from d2lab.device import load_device
from d2lab.experiments import resolve
from d2lab.frame import sample_pauli_frame
from d2lab.noise import apply_noise_sites


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--shots", type=int, nargs="+",
                    default=[10_000, 100_000, 1_000_000])
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()

    setting = resolve("bell_1").settings[-1]  # the ZZ setting, 8 qubits
    nm = load_device().noise_model()
    ann = apply_noise_sites(setting.circuit, nm)
    backends = ["numpy"] + (["numba"] if HAS_NUMBA else [])
    if HAS_NUMBA:  # trigger JIT compilation outside the timed region
        sample_pauli_frame(ann, 100, args.seed, backend="numba")

    print(f"circuit: bell_1/ZZ  moments={setting.circuit.n_moments} "
          f"sites={len(ann.sites)}")
    header = f"{'shots':>10} " + "".join(f"{b + ' (shots/s)':>20}" for b in backends)
    print(header)
    for shots in args.shots:
        tables = {}
        rates = []
        for backend in backends:
            t0 = time.perf_counter()
            tables[backend] = sample_pauli_frame(ann, shots, args.seed,
                                                 backend=backend)
            dt = time.perf_counter() - t0
            rates.append(shots / dt)
        line = f"{shots:>10} " + "".join(f"{r:>20,.0f}" for r in rates)
        if len(backends) == 2:
            same = np.array_equal(tables["numpy"].values, tables["numba"].values)
            line += "   identical" if same else "   MISMATCH"
        print(line)


if __name__ == "__main__":
    main()
