"""Command-line experiment runner.

Subcommands: run, sweep, audit, validate-device, list.  Exit codes:
0 success, 1 usage error, 2 numerical non-convergence, 3 I/O failure.
The output directory comes from --out, else $D2LAB_OUTDIR, else
./d2lab_out.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from pathlib import Path

import numpy as np

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NONCONVERGENCE = 2
EXIT_IO = 3

DEFAULT_SHOTS = 50_000          # experiment-mimicking sampling depth
DEFAULT_SWEEP_SHOTS = 1_000_000  # simulation-comparison depth
THETA_GRID_POINTS = 17


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser() -> _Parser:
    p = _Parser(prog="d2lab",
                description="Distance-2 surface-code simulation lab")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a registered experiment")
    run.add_argument("experiment", nargs="+",
                     help="registry id, e.g. ft_zero, bell_1, teleport_rz(pi/4); "
                          "teleport_rz/teleport_rx without an angle sweep a "
                          f"{THETA_GRID_POINTS}-point angle grid")
    _common_flags(run)
    run.add_argument("--case", type=int, default=1, choices=(1, 2, 3),
                     help="noise case: 1 device, 2 noiseless characterization "
                          "readout, 3 also noiseless ancilla prep")
    run.add_argument("--noiseless", action="store_true",
                     help="ignore the device file; all noise off")
    run.add_argument("--dump-shots", action="store_true",
                     help="also write the raw per-shot CSV for every "
                          "measurement setting (sampling engine only)")

    sw = sub.add_parser("sweep", help="noise-strength sweep with baselines")
    sw.add_argument("--mode", default="both",
                    choices=("gate_only", "meas_only", "both", "all"))
    sw.add_argument("--p-start", type=float, default=0.01)
    sw.add_argument("--p-stop", type=float, default=0.20)
    sw.add_argument("--p-steps", type=int, default=20)
    sw.add_argument("--circuits", nargs="+",
                    default=["ft_zero_z", "ft_plus_x"],
                    help="sweep pairs: ft_zero_z ft_plus_x bell_zz bell_xx")
    _common_flags(sw)

    au = sub.add_parser("audit", help="single-fault injection audit of a prep")
    au.add_argument("experiment", nargs="+",
                    help="ft_zero | ft_one | ft_plus | ft_minus | nft(theta,phi)")
    au.add_argument("--out", default=None)
    au.add_argument("--format", default="csv,json")

    vd = sub.add_parser("validate-device", help="parse and check a device file")
    vd.add_argument("--device", default=None)

    sub.add_parser("list", help="list registered experiments")
    return p


def _common_flags(sp):
    sp.add_argument("--engine", default=None, choices=("tableau", "dense"))
    sp.add_argument("--shots", type=int, default=None)
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--device", default=None, help="device file (default bundled)")
    sp.add_argument("--out", default=None, help="output directory")
    sp.add_argument("--format", default="csv,json,svg",
                    help="comma list from csv,json,svg")


def _resolve_params(args, device, shots_builtin):
    """Flag > device-file [defaults] override > built-in default."""
    d = device.defaults
    engine = args.engine or d.get("engine", "tableau")
    shots = args.shots if args.shots is not None else int(d.get("shots", shots_builtin))
    seed = args.seed if args.seed is not None else int(d.get("seed", 2024))
    if engine not in ("tableau", "dense"):
        raise SystemExit(EXIT_USAGE)
    return engine, shots, seed


def _outdir(args) -> Path:
    out = args.out or os.environ.get("D2LAB_OUTDIR") or "d2lab_out"
    return Path(out)


def _formats(args):
    fmts = tuple(f.strip() for f in args.format.split(",") if f.strip())
    bad = [f for f in fmts if f not in ("csv", "json", "svg")]
    if bad:
        raise SystemExit(EXIT_USAGE)
    return fmts


def cmd_run(args) -> int:
    from .device import load_device
    from .experiments import LptmExperiment, UnknownExperimentError, resolve
    from .noise import NoiseModel
    from .report import emit_lptm_report, emit_rotation_curve, emit_state_report
    from .runner import (EngineMismatchError, effective_noise, noise_case,
                         run_lptm_experiment, run_state_experiment)
    from .tomography import ConvergenceError

    device = load_device(args.device)
    engine, shots, seed = _resolve_params(args, device, DEFAULT_SHOTS)
    if args.noiseless:
        base_nm = NoiseModel.noiseless(device.n_qubits)
        dev_hash = "noiseless"
    else:
        base_nm = device.noise_model()
        dev_hash = device.source_hash
    outdir = _outdir(args)
    fmts = _formats(args)

    for raw_id in args.experiment:
        exp_id = raw_id.strip()
        try:
            if exp_id in ("teleport_rz", "teleport_rx"):
                nm, skip = noise_case(base_nm, args.case)
                reports = []
                for k in range(1, THETA_GRID_POINTS + 1):
                    theta = -math.pi + k * (2.0 * math.pi / THETA_GRID_POINTS)
                    exp = resolve(f"{exp_id}({theta})")
                    reports.append(run_state_experiment(
                        exp, nm, engine, shots, seed, skip))
                files = emit_rotation_curve(reports, outdir, fmts, dev_hash,
                                            name=exp_id)
                print(f"{exp_id}: {THETA_GRID_POINTS}-point angle grid")
            else:
                exp = resolve(exp_id)
                nm, skip = noise_case(effective_noise(exp, base_nm), args.case)
                if isinstance(exp, LptmExperiment):
                    rep = run_lptm_experiment(exp, nm, engine, shots,
                                              seed, skip)
                    files = emit_lptm_report(rep, outdir, fmts, dev_hash)
                    print(f"{exp_id}: gate fidelity {rep.fidelity:.4f}")
                else:
                    rep = run_state_experiment(exp, nm, engine, shots,
                                               seed, skip)
                    files = emit_state_report(rep, outdir, fmts, dev_hash)
                    line = f"{exp_id}: state fidelity {rep.fidelity:.4f}"
                    if rep.chsh is not None:
                        line += f", u1+u2 = {rep.chsh[0]:.3f}"
                    if rep.low_statistics:
                        line += "  [warning: < 100 passing shots on a setting]"
                    print(line)
                    if args.dump_shots:
                        _dump_shots(exp, nm, engine, shots, seed, skip,
                                    outdir, exp_id)
            for kind in sorted(files.paths):
                print(f"  wrote {files.paths[kind]}")
        except UnknownExperimentError as e:
            print(f"error: {e}", file=sys.stderr)
            return EXIT_USAGE
        except EngineMismatchError as e:
            print(f"error: {e}", file=sys.stderr)
            return EXIT_USAGE
        except ConvergenceError as e:
            print(f"error: {e}", file=sys.stderr)
            return EXIT_NONCONVERGENCE
        except OSError as e:
            print(f"I/O error: {e}", file=sys.stderr)
            return EXIT_IO
    return EXIT_OK


def _dump_shots(exp, nm, engine, shots, seed, skip, outdir, exp_id):
    """Write the raw shot stream of every setting (sampling engine)."""
    from pathlib import Path

    from .frame import sample_pauli_frame
    from .noise import apply_noise_sites
    from .runner import derive_seed

    if engine != "tableau":
        print("  (shot dump skipped: only the sampling engine emits shots)")
        return
    shots_per = max(1, shots // max(1, len(exp.settings)))
    for k, setting in enumerate(exp.settings):
        ann = apply_noise_sites(setting.circuit, nm, skip)
        table = sample_pauli_frame(ann, shots_per, derive_seed(seed, k))
        for cond in setting.rule.conditions:
            table.verdicts[cond.name] = table.product(cond.labels) == 1
        slug = exp_id.replace("(", "_").replace(")", "").replace(",", "_")
        path = Path(outdir) / f"{slug}_shots_{setting.name}.csv"
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(table.to_csv())
        print(f"  wrote {path}")


def cmd_sweep(args) -> int:
    from .device import load_device
    from .report import emit_sweep
    from .sweeps import SWEEP_PAIRS, SweepConfig, run_sweep

    device = load_device(args.device)
    unknown = [c for c in args.circuits if c not in SWEEP_PAIRS]
    if unknown:
        print(f"error: unknown sweep circuits {unknown}; "
              f"choose from {sorted(SWEEP_PAIRS)}", file=sys.stderr)
        return EXIT_USAGE
    engine, shots, seed = _resolve_params(args, device, DEFAULT_SWEEP_SHOTS)
    grid = list(np.linspace(args.p_start, args.p_stop, args.p_steps))
    modes = (("gate_only", "meas_only", "both") if args.mode == "all"
             else (args.mode,))
    outdir = _outdir(args)
    fmts = _formats(args)
    try:
        for mode in modes:
            cfg = SweepConfig(mode, grid, list(args.circuits),
                              shots=shots, seed=seed,
                              engine=engine)
            result = run_sweep(cfg)
            files = emit_sweep(result, outdir, fmts, device.source_hash)
            cross = {k: (None if v is None else round(v, 4))
                     for k, v in result.crossings.items()}
            print(f"sweep {mode}: crossings {cross}")
            for kind in sorted(files.paths):
                print(f"  wrote {files.paths[kind]}")
    except OSError as e:
        print(f"I/O error: {e}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


def cmd_audit(args) -> int:
    import json

    from .experiments import UnknownExperimentError, audit_prep

    for exp_id in args.experiment:
        try:
            report = audit_prep(exp_id)
        except UnknownExperimentError as e:
            print(f"error: {e}", file=sys.stderr)
            return EXIT_USAGE
        counts = report.counts
        print(f"{exp_id}: trivial={counts['trivial']} "
              f"detected={counts['detected']} logical={counts['logical']}")
        multi = sorted(report.patterns("trivial", min_weight=2)
                       | report.patterns("detected", min_weight=2))
        print(f"  propagated multi-qubit patterns: {', '.join(multi)}")
        if counts["logical"]:
            locs = report.logical_locations()
            print(f"  logical-class faults at (moment, qubit, pauli): {locs}")
        if args.out:
            slug = exp_id.replace("(", "_").replace(")", "").replace(",", "_")
            outdir = Path(args.out)
            outdir.mkdir(parents=True, exist_ok=True)
            fmts = tuple(f.strip() for f in args.format.split(","))
            try:
                if "csv" in fmts:
                    lines = ["moment,qubit,pauli,propagated,class\n"]
                    for r in report.records:
                        lines.append(f"{r.moment},{r.qubit + 1},{r.injected},"
                                     f"{r.propagated.label()},{r.klass}\n")
                    (outdir / f"audit_{slug}.csv").write_text("".join(lines))
                    print(f"  wrote {outdir / f'audit_{slug}.csv'}")
                if "json" in fmts:
                    payload = {
                        "experiment": exp_id,
                        "counts": counts,
                        "records": [{
                            "moment": r.moment, "qubit": r.qubit + 1,
                            "pauli": r.injected,
                            "propagated": r.propagated.label(),
                            "class": r.klass,
                        } for r in report.records],
                    }
                    (outdir / f"audit_{slug}.json").write_text(
                        json.dumps(payload, sort_keys=True, indent=1) + "\n")
                    print(f"  wrote {outdir / f'audit_{slug}.json'}")
            except OSError as e:
                print(f"I/O error: {e}", file=sys.stderr)
                return EXIT_IO
    return EXIT_OK


def cmd_validate_device(args) -> int:
    from .device import DeviceFileError, load_device

    try:
        dev = load_device(args.device)
    except DeviceFileError as e:
        print(f"invalid device file: {e}", file=sys.stderr)
        return EXIT_IO
    print(f"device ok: {dev.n_qubits} qubits, {len(dev.cz_fidelity)} couplers, "
          f"hash {dev.source_hash}")
    print(f"  average p_m = {dev.average_p_m():.4f}")
    avg_cz = sum(dev.cz_fidelity.values()) / len(dev.cz_fidelity)
    print(f"  average CZ fidelity = {avg_cz:.4f}")
    return EXIT_OK


def cmd_list(_args) -> int:
    from .experiments import registry_names
    from .sweeps import SWEEP_PAIRS

    print("experiments:")
    for name in registry_names():
        print(f"  {name}")
    print("sweep circuits:")
    for name in sorted(SWEEP_PAIRS):
        print(f"  {name}")
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handler = {
        "run": cmd_run,
        "sweep": cmd_sweep,
        "audit": cmd_audit,
        "validate-device": cmd_validate_device,
        "list": cmd_list,
    }[args.command]
    return handler(args)


if __name__ == "__main__":
    raise SystemExit(main())
