"""Report emission: CSV/JSON tables and SVG figures with provenance.

Outputs are deterministic: fixed seeds produce byte-identical CSV/JSON
(no timestamps; sorted keys), and SVG rendering uses a fixed hash salt
with the creation date stripped.
"""

from __future__ import annotations

import json
import subprocess
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "d2lab"
import matplotlib.pyplot as plt  # noqa: E402

import numpy as np  # noqa: E402

from .runner import LptmReport, StateReport  # noqa: E402
from .sweeps import SweepResult  # noqa: E402
from .tomography import format_value_2sigma  # noqa: E402

SCHEMA_VERSION = 1
FORMATS = ("csv", "json", "svg")


def git_describe() -> str:
    try:
        out = subprocess.run(["git", "describe", "--always", "--dirty"],
                             capture_output=True, text=True, timeout=5)
        if out.returncode == 0:
            return out.stdout.strip()
    except OSError:
        pass
    return "unknown"


def provenance(seed: int, shots: int, device_hash: str, engine: str) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "seed": seed,
        "shots": shots,
        "device_hash": device_hash,
        "engine": engine,
        "version": git_describe(),
        "note": "sampled shots are split evenly across measurement settings",
    }


def _slug(exp_id: str) -> str:
    out = exp_id
    for ch in "(),":
        out = out.replace(ch, "_" if ch == "(" else "")
    return out.replace("/", "_").replace(" ", "").rstrip("_")


def _fmt(value, digits=10):
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.{digits}g}"
    return str(value)


def _csv_header(prov: dict) -> str:
    keys = sorted(prov)
    return "".join(f"# {k}={prov[k]}\n" for k in keys)


@dataclass
class EmittedFiles:
    paths: dict[str, Path]


def _savefig(fig, path: Path) -> None:
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


# -- state experiments ------------------------------------------------------

def state_report_rows(report: StateReport) -> list[dict]:
    rows = []
    for label in sorted(report.estimates):
        est = report.estimates[label]
        rows.append({
            "observable": label,
            "value": est.value,
            "two_sigma": est.two_sigma,
            "ps_rate": est.ps_rate,
            "n_pass": est.n_pass,
            "n_total": est.n_total,
            "formatted": ("" if est.is_empty or est.two_sigma is None else
                          format_value_2sigma(est.value, est.two_sigma,
                                              percent=False)),
        })
    return rows


def emit_state_report(report: StateReport, outdir: Path, formats,
                      device_hash: str = "") -> EmittedFiles:
    outdir = Path(outdir)
    slug = _slug(report.id)
    prov = provenance(report.seed, report.shots_per_setting, device_hash,
                      report.engine)
    paths: dict[str, Path] = {}
    rows = state_report_rows(report)

    if "csv" in formats:
        lines = [_csv_header(prov)]
        lines.append("observable,value,two_sigma,ps_rate,n_pass,n_total,formatted\n")
        for r in rows:
            lines.append(",".join(_fmt(r[k]) for k in
                                  ("observable", "value", "two_sigma", "ps_rate",
                                   "n_pass", "n_total", "formatted")) + "\n")
        lines.append(f"fidelity,{_fmt(report.fidelity)}\n")
        if report.chsh is not None:
            lines.append(f"u1_plus_u2,{_fmt(report.chsh[0])}\n")
        path = outdir / f"{slug}.csv"
        _write(path, "".join(lines))
        paths["csv"] = path

    if "json" in formats:
        payload = {
            "provenance": prov,
            "experiment": report.id,
            "n_logical": report.n_logical,
            "observables": rows,
            "ps_rates": {k: report.ps_rates[k] for k in sorted(report.ps_rates)},
            "fidelity": report.fidelity,
            "chsh_u1_plus_u2": None if report.chsh is None else report.chsh[0],
            "chsh_violated": None if report.chsh is None else report.chsh[1],
            "density_matrix": _complex_matrix(report.rho),
            "low_statistics": report.low_statistics,
        }
        path = outdir / f"{slug}.json"
        _write(path, json.dumps(payload, sort_keys=True, indent=1) + "\n")
        paths["json"] = path

    if "svg" in formats:
        fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(8, 3.2))
        labels = [r["observable"] for r in rows if r["observable"].strip("I")]
        values = [r["value"] if r["value"] is not None else 0.0
                  for r in rows if r["observable"].strip("I")]
        ax1.bar(labels, values, color="#4878d0")
        ax1.set_ylim(-1.05, 1.05)
        ax1.set_ylabel("expectation")
        ax1.set_title(f"{report.id} (F = {report.fidelity:.4f})")
        names = sorted(report.ps_rates)
        ax2.bar(names, [report.ps_rates[k] for k in names], color="#ee854a")
        ax2.set_ylim(0, 1.05)
        ax2.set_ylabel("post-selection rate")
        ax2.tick_params(axis="x", rotation=45)
        fig.tight_layout()
        path = outdir / f"{slug}.svg"
        path.parent.mkdir(parents=True, exist_ok=True)
        _savefig(fig, path)
        paths["svg"] = path
    return EmittedFiles(paths)


def _complex_matrix(m: np.ndarray) -> dict:
    """Flattened row-major (re, im) pairs with a dimension header."""
    return {
        "dim": int(m.shape[0]),
        "re_im": [[float(v.real), float(v.imag)] for v in m.reshape(-1)],
    }


# -- LPTM experiments --------------------------------------------------------

def emit_lptm_report(report: LptmReport, outdir: Path, formats,
                     device_hash: str = "") -> EmittedFiles:
    outdir = Path(outdir)
    slug = _slug(report.id)
    prov = provenance(report.seed, report.shots_per_setting, device_hash,
                      report.engine)
    paths: dict[str, Path] = {}
    from .tomography import pauli_labels

    labels = pauli_labels(1 if report.d == 2 else 2)

    if "csv" in formats:
        lines = [_csv_header(prov)]
        lines.append(f"gate,{report.id}\nfidelity,{_fmt(report.fidelity)}\n")
        lines.append("ptm_row_label," + ",".join(labels) + "\n")
        for i, lab in enumerate(labels):
            lines.append(lab + "," + ",".join(_fmt(v) for v in report.ptm[i]) + "\n")
        path = outdir / f"{slug}.csv"
        _write(path, "".join(lines))
        paths["csv"] = path

    if "json" in formats:
        payload = {
            "provenance": prov,
            "experiment": report.id,
            "d": report.d,
            "pauli_labels": labels,
            "fidelity": report.fidelity,
            "ptm": [[float(v) for v in row] for row in report.ptm],
            "ptm_raw": [[float(v) for v in row] for row in report.raw],
            "choi": _complex_matrix(report.choi),
            "input_state_fidelities": report.input_fidelities,
            "output_state_fidelities": report.output_fidelities,
            "projection_objective_log_tail":
                [float(v) for v in report.objective_log[-5:]],
        }
        path = outdir / f"{slug}.json"
        _write(path, json.dumps(payload, sort_keys=True, indent=1) + "\n")
        paths["json"] = path

    if "svg" in formats:
        fig, ax = plt.subplots(figsize=(5.2, 4.6))
        im = ax.imshow(report.ptm, cmap="RdBu_r", vmin=-1, vmax=1)
        ax.set_xticks(range(len(labels)), labels, rotation=90, fontsize=7)
        ax.set_yticks(range(len(labels)), labels, fontsize=7)
        ax.set_title(f"{report.id}: F = {report.fidelity:.4f}")
        fig.colorbar(im, ax=ax, shrink=0.8)
        fig.tight_layout()
        path = outdir / f"{slug}.svg"
        path.parent.mkdir(parents=True, exist_ok=True)
        _savefig(fig, path)
        paths["svg"] = path
    return EmittedFiles(paths)


# -- rotation-angle curves ----------------------------------------------------

def emit_rotation_curve(reports: list[StateReport], outdir: Path, formats,
                        device_hash: str = "", name: str = "rotation_curve",
                        ) -> EmittedFiles:
    """Fig-4-style summary: expectations and fidelity vs rotation angle."""
    outdir = Path(outdir)
    reports = sorted(reports, key=lambda r: r.meta.get("theta", 0.0))
    thetas = [r.meta["theta"] for r in reports]
    prov = provenance(reports[0].seed, reports[0].shots_per_setting,
                      device_hash, reports[0].engine)
    paths: dict[str, Path] = {}

    if "csv" in formats:
        lines = [_csv_header(prov)]
        lines.append("theta,exp_x,exp_y,exp_z,fidelity,ps_x,ps_y,ps_z\n")
        for r in reports:
            lines.append(",".join(_fmt(v) for v in (
                r.meta["theta"],
                r.estimates["X"].value, r.estimates["Y"].value,
                r.estimates["Z"].value, r.fidelity,
                r.ps_rates["X"], r.ps_rates["Y"], r.ps_rates["Z"])) + "\n")
        path = outdir / f"{name}.csv"
        _write(path, "".join(lines))
        paths["csv"] = path

    if "json" in formats:
        payload = {
            "provenance": prov,
            "name": name,
            "points": [{
                "theta": r.meta["theta"],
                "expectations": {k: r.estimates[k].value for k in "XYZ"},
                "fidelity": r.fidelity,
                "ps_rates": {k: r.ps_rates[k] for k in sorted(r.ps_rates)},
            } for r in reports],
        }
        path = outdir / f"{name}.json"
        _write(path, json.dumps(payload, sort_keys=True, indent=1) + "\n")
        paths["json"] = path

    if "svg" in formats:
        fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(8.4, 3.4))
        for key, style in (("X", "o-"), ("Y", "s-"), ("Z", "^-")):
            ax1.plot(thetas, [r.estimates[key].value for r in reports],
                     style, label=f"<{key}_L>", markersize=3)
        ax1.set_xlabel("rotation angle (rad)")
        ax1.set_ylabel("expectation")
        ax1.set_ylim(-1.1, 1.1)
        ax1.legend(fontsize=8)
        ax2.plot(thetas, [r.fidelity for r in reports], "o-", markersize=3)
        ax2.set_xlabel("rotation angle (rad)")
        ax2.set_ylabel("fidelity")
        ax2.set_ylim(0, 1.05)
        fig.suptitle(name)
        fig.tight_layout()
        path = outdir / f"{name}.svg"
        path.parent.mkdir(parents=True, exist_ok=True)
        _savefig(fig, path)
        paths["svg"] = path
    return EmittedFiles(paths)


# -- sweeps --------------------------------------------------------------------

def emit_sweep(result: SweepResult, outdir: Path, formats,
               device_hash: str = "") -> EmittedFiles:
    outdir = Path(outdir)
    cfg = result.config
    name = f"sweep_{cfg.noise_mode}"
    prov = provenance(cfg.seed, cfg.shots, device_hash, cfg.engine)
    paths: dict[str, Path] = {}

    if "csv" in formats:
        lines = [_csv_header(prov)]
        lines.append("mode,circuit,p,logical_error,logical_2sigma,ps_rate,"
                     "physical_error,physical_2sigma,n_pass,excluded\n")
        for pt in result.points:
            lines.append(",".join(_fmt(v) for v in (
                pt.mode, pt.circuit, pt.p, pt.logical_error, pt.logical_2sigma,
                pt.ps_rate, pt.physical_error, pt.physical_2sigma, pt.n_pass,
                int(pt.excluded))) + "\n")
        for circ in sorted(result.crossings):
            lines.append(f"crossing,{circ},{_fmt(result.crossings[circ])}\n")
        path = outdir / f"{name}.csv"
        _write(path, "".join(lines))
        paths["csv"] = path

    if "json" in formats:
        payload = {
            "provenance": prov,
            "noise_mode": cfg.noise_mode,
            "p_grid": list(cfg.p_grid),
            "circuits": list(cfg.circuits),
            "points": [vars(pt) for pt in result.points],
            "crossings": {k: result.crossings[k] for k in sorted(result.crossings)},
        }
        path = outdir / f"{name}.json"
        _write(path, json.dumps(payload, sort_keys=True, indent=1) + "\n")
        paths["json"] = path

    if "svg" in formats:
        fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(8.8, 3.6))
        for circ in cfg.circuits:
            pts = [pt for pt in result.curve(circ) if not pt.excluded]
            ax1.plot([pt.p for pt in pts], [pt.logical_error for pt in pts],
                     "o-", label=f"{circ} logical", markersize=3)
            ax1.plot([pt.p for pt in pts], [pt.physical_error for pt in pts],
                     "--", label=f"{circ} physical")
            ax2.plot([pt.p for pt in pts], [pt.ps_rate for pt in pts], "o-",
                     label=circ, markersize=3)
        ax1.set_xlabel("p")
        ax1.set_ylabel("error rate")
        ax1.set_yscale("log")
        ax1.legend(fontsize=7)
        ax1.set_title(f"mode: {cfg.noise_mode}")
        ax2.set_xlabel("p")
        ax2.set_ylabel("post-selection rate")
        ax2.set_ylim(0, 1.05)
        ax2.legend(fontsize=7)
        fig.tight_layout()
        path = outdir / f"{name}.svg"
        path.parent.mkdir(parents=True, exist_ok=True)
        _savefig(fig, path)
        paths["svg"] = path
    return EmittedFiles(paths)
