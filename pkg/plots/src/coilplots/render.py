"""Render figures from coilpose experiment artifacts.

Reads only the emitted files (summary.json, records.csv), never recomputes
physics. Four figure kinds:

    cdf       error CDF overlay, one curve per scenario per input summary
    coverage  per-pose fraction of beacons above the SNR gate
    sweep     error statistics versus SNR threshold
    outliers  3D scatter of true positions, flagged records as red circles

Rendering is deterministic: fixed style, no clocks or seeds, so re-rendering
the same inputs reproduces the output file byte for byte.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

KINDS = ("cdf", "coverage", "sweep", "outliers")
ALIASES = {"cdf_overlay": "cdf", "outlier_scatter": "outliers"}

# Outlier flags mirror the simulator's success targets.
D_TARGET_M = 0.01
ALPHA_TARGET_DEG = 1.0

REQUIRED_RECORD_COLUMNS = ("x_true", "y_true", "z_true", "e_d_m", "e_alpha_deg")
REQUIRED_SCENARIO_KEYS = ("label", "cdf_e_d_m", "cdf_e_alpha_deg")

_SAVEFIG = dict(dpi=130, metadata={"Software": "coilplots"})


class RenderError(ValueError):
    """Input file is missing or does not match the documented schema."""


def load_summary(path) -> dict:
    try:
        doc = json.loads(Path(path).read_text())
    except OSError as exc:
        raise RenderError(f"cannot read summary {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise RenderError(f"summary {path} is not valid JSON: {exc}") from exc
    if "scenarios" not in doc or not isinstance(doc["scenarios"], list):
        raise RenderError(f"summary {path}: missing 'scenarios' list")
    for i, sc in enumerate(doc["scenarios"]):
        for key in REQUIRED_SCENARIO_KEYS:
            if key not in sc:
                raise RenderError(f"summary {path}: scenarios[{i}] missing key '{key}'")
    return doc


def load_records(path) -> list[dict]:
    try:
        with Path(path).open(newline="") as fh:
            reader = csv.DictReader(fh)
            header = reader.fieldnames or []
            for column in REQUIRED_RECORD_COLUMNS:
                if column not in header:
                    raise RenderError(f"records {path}: missing column '{column}'")
            return [row for row in reader]
    except OSError as exc:
        raise RenderError(f"cannot read records {path}: {exc}") from exc


def _series_label(doc: dict, scenario: dict, n_inputs: int, file_stem: str) -> str:
    label = scenario.get("label", "scenario")
    return f"{file_stem}:{label}" if n_inputs > 1 else label


def build_cdf_figure(summaries: list[tuple[str, dict]]):
    """Euclidean and angular error CDFs, one curve per scenario."""
    fig, (ax_d, ax_a) = plt.subplots(1, 2, figsize=(10, 4))
    for stem, doc in summaries:
        for sc in doc["scenarios"]:
            label = _series_label(doc, sc, len(summaries), stem)
            xs = [v for v, _ in sc["cdf_e_d_m"]]
            ys = [f for _, f in sc["cdf_e_d_m"]]
            ax_d.step(xs, ys, where="post", label=label)
            xs = [v for v, _ in sc["cdf_e_alpha_deg"]]
            ys = [f for _, f in sc["cdf_e_alpha_deg"]]
            ax_a.step(xs, ys, where="post", label=label)
    ax_d.set_xscale("log")
    ax_d.set_xlabel("Euclidean error [m]")
    ax_d.set_ylabel("empirical CDF")
    ax_a.set_xscale("log")
    ax_a.set_xlabel("angular error [deg]")
    for ax in (ax_d, ax_a):
        ax.grid(True, alpha=0.3)
        ax.legend(fontsize=8)
    fig.tight_layout()
    return fig


def build_coverage_figure(summaries: list[tuple[str, dict]]):
    """Fraction of beacons above the SNR gate at each mobile pose."""
    fig, ax = plt.subplots(figsize=(9, 4))
    plotted = False
    for stem, doc in summaries:
        for sc in doc["scenarios"]:
            coverage = sc.get("coverage_fraction")
            if not coverage:
                continue
            plotted = True
            ax.plot(range(len(coverage)), coverage, lw=0.8,
                    label=_series_label(doc, sc, len(summaries), stem))
    if not plotted:
        raise RenderError("no scenario carries coverage_fraction data")
    ax.set_xlabel("pose index")
    ax.set_ylabel("fraction of beacons above gate")
    ax.set_ylim(-0.02, 1.02)
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    return fig


def build_sweep_figure(summaries: list[tuple[str, dict]]):
    """Mean errors versus the scenario SNR thresholds."""
    points = []
    for _, doc in summaries:
        for sc in doc["scenarios"]:
            if "snr_threshold_db" in sc:
                points.append((sc["snr_threshold_db"],
                               sc.get("e_d_mean_m"), sc.get("e_alpha_mean_deg")))
    if not points:
        raise RenderError("no scenario carries snr_threshold_db; not a sweep summary")
    points.sort()
    ths = [p[0] for p in points]
    fig, (ax_d, ax_a) = plt.subplots(2, 1, figsize=(7, 6), sharex=True)
    ax_d.plot(ths, [p[1] for p in points], "o-")
    ax_d.set_yscale("log")
    ax_d.set_ylabel("mean Euclidean error [m]")
    ax_a.plot(ths, [p[2] for p in points], "s-")
    ax_a.set_yscale("log")
    ax_a.set_ylabel("mean angular error [deg]")
    ax_a.set_xlabel("SNR threshold [dB]")
    for ax in (ax_d, ax_a):
        ax.grid(True, alpha=0.3)
    fig.tight_layout()
    return fig


def build_outlier_figure(records: list[dict], beacon_centers=None):
    """True mobile positions; records over the error targets as red circles."""
    ok, bad = [], []
    for row in records:
        p = (float(row["x_true"]), float(row["y_true"]), float(row["z_true"]))
        flagged = (float(row["e_d_m"]) > D_TARGET_M
                   or float(row["e_alpha_deg"]) > ALPHA_TARGET_DEG)
        (bad if flagged else ok).append(p)
    fig = plt.figure(figsize=(7, 6))
    ax = fig.add_subplot(projection="3d")
    if ok:
        xs, ys, zs = zip(*ok)
        ax.scatter(xs, ys, zs, s=4, c="black", marker=".", label="within targets")
    if bad:
        xs, ys, zs = zip(*bad)
        ax.scatter(xs, ys, zs, s=40, facecolors="none", edgecolors="red",
                   label="outliers")
    if beacon_centers:
        xs, ys, zs = zip(*beacon_centers)
        ax.scatter(xs, ys, zs, s=30, c="tab:blue", marker="D", label="beacons")
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.set_zlabel("z [m]")
    ax.legend(fontsize=8)
    fig.tight_layout()
    return fig


def render(kind: str, inputs: list[str], out: str, summary_for_beacons=None) -> None:
    """Build the requested figure and write it to `out`."""
    kind = ALIASES.get(kind, kind)
    if kind not in KINDS:
        raise RenderError(f"unknown figure kind {kind!r}, expected one of {KINDS}")
    if not inputs:
        raise RenderError("at least one --in file is required")
    if kind == "outliers":
        records = load_records(inputs[0])
        centers = None
        if summary_for_beacons:
            doc = load_summary(summary_for_beacons)
            centers = doc["scenarios"][0].get("beacon_centers_m")
        fig = build_outlier_figure(records, centers)
    else:
        summaries = [(Path(p).stem, load_summary(p)) for p in inputs]
        if kind == "cdf":
            fig = build_cdf_figure(summaries)
        elif kind == "coverage":
            fig = build_coverage_figure(summaries)
        else:
            fig = build_sweep_figure(summaries)
    fig.savefig(out, **_SAVEFIG)
    plt.close(fig)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="render",
        description="Render figures from coilpose records.csv / summary.json files.")
    parser.add_argument("--kind", required=True,
                        choices=sorted(set(KINDS) | set(ALIASES)))
    parser.add_argument("--in", dest="inputs", action="append", required=True,
                        metavar="FILE",
                        help="input summary.json (cdf/coverage/sweep) or records.csv (outliers); repeatable")
    parser.add_argument("--out", required=True, help="output image path")
    parser.add_argument("--beacons-from", default=None, metavar="SUMMARY",
                        help="summary.json supplying beacon positions for the outlier plot")
    args = parser.parse_args(argv)
    try:
        render(args.kind, args.inputs, args.out, summary_for_beacons=args.beacons_from)
    except RenderError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
