"""Command-line front end: named experiment recipes, config runs and artifacts.

Artifacts written per run: records.csv (one row per trial, fixed column set),
summary.json (per-scenario statistics and CDF samples) and manifest.json
(resolved config + provenance, sufficient to re-run byte-identically via
`coilpose run --config manifest.json`).

Exit codes: 0 success, 2 unknown recipe / bad usage, 3 invalid config,
4 unwritable output directory.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .config import (
    ConfigError,
    build_experiments,
    experiment_to_dict,
    validate_config,
)
from .montecarlo import ExperimentReport, run_experiment

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_CONFIG = 3
EXIT_OUTPUT = 4

CSV_COLUMNS = [
    "pose_index", "trial",
    "x_true", "y_true", "z_true", "nx_true", "ny_true", "nz_true",
    "x_est", "y_est", "z_est", "nx_est", "ny_est", "nz_est",
    "e_d_m", "e_alpha_deg", "n_used", "converged", "cost",
]

SWEEP_THRESHOLDS_DB = (0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0)
SENSITIVITY_LEVELS = {
    "axis_direction": [1.0, 2.0, 3.0, 4.0, 5.0],       # degrees
    "moment_magnitude": [0.01, 0.02, 0.03, 0.04, 0.05],  # fraction
    "center_position": [0.001, 0.002, 0.003, 0.004, 0.005],  # meters
}


def _num(x) -> str:
    return str(float(x))


def write_records_csv(reports: list[ExperimentReport], path: Path) -> None:
    """All reports' trial records, concatenated in scenario order."""
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for report in reports:
            for r in report.records:
                pt, pe = r.pose_true, r.pose_est
                writer.writerow([
                    r.pose_index, r.trial,
                    _num(pt.position[0]), _num(pt.position[1]), _num(pt.position[2]),
                    _num(pt.attitude[0]), _num(pt.attitude[1]), _num(pt.attitude[2]),
                    _num(pe.position[0]), _num(pe.position[1]), _num(pe.position[2]),
                    _num(pe.attitude[0]), _num(pe.attitude[1]), _num(pe.attitude[2]),
                    _num(r.e_d), _num(r.e_alpha_deg), r.n_used,
                    "true" if r.converged else "false", _num(r.cost),
                ])


def scenario_summary(report: ExperimentReport, config) -> dict:
    """JSON-ready statistics block for one scenario."""
    d = {
        "label": report.label,
        "n_poses": report.n_poses,
        "trials_per_pose": report.trials_per_pose,
        "master_seed": report.master_seed,
        "gain": config.gain,
        "p_d": report.p_d,
        "p_alpha": report.p_alpha,
        "p_d_alpha": report.p_d_alpha,
        "e_d_mean_m": report.e_d_mean,
        "e_d_std_m": report.e_d_std,
        "e_alpha_mean_deg": report.e_alpha_mean_deg,
        "e_alpha_std_deg": report.e_alpha_std_deg,
        "n_outliers": report.n_outliers,
        "cdf_e_d_m": [[v, f] for v, f in report.cdf_e_d],
        "cdf_e_alpha_deg": [[v, f] for v, f in report.cdf_e_alpha],
        "coverage_fraction": list(report.coverage),
        "beacon_centers_m": [[float(x) for x in b.center]
                             for b in config.constellation.beacons],
    }
    if config.selection.kind == "snr_threshold":
        d["snr_threshold_db"] = config.selection.snr_threshold_db
    else:
        d["top_n"] = config.selection.n
    return d


def write_summary_json(reports, configs, path: Path, recipe: str | None) -> None:
    doc = {
        "tool": "coilpose",
        "version": __version__,
        "recipe": recipe,
        "scenarios": [scenario_summary(rep, cfg)
                      for rep, cfg in zip(reports, configs)],
    }
    path.write_text(json.dumps(doc, indent=2) + "\n")


def write_manifest(configs, path: Path, recipe: str | None,
                   config_path: str | None, out_dir: Path, master_seed) -> None:
    doc = {
        "tool": "coilpose",
        "version": __version__,
        "recipe": recipe,
        "config_path": config_path,
        "output_dir": str(out_dir),
        "master_seed": master_seed,
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "outputs": ["records.csv", "summary.json"],
        "config": {"experiments": [experiment_to_dict(c) for c in configs]},
    }
    path.write_text(json.dumps(doc, indent=2) + "\n")


# ---------------------------------------------------------------------------
# Recipes: paper-study parameter sets, overridable via flags.

def _normalized_receiver(radius: float) -> dict:
    return {"windings": 10, "radius_m": radius}


def recipe_placement(seed: int, init_mode: str = "truth") -> dict:
    """Mono-planar vs tri-planar comparison, one mobile plane per constellation."""
    shared = {
        "receiver": _normalized_receiver(0.05),
        "noise": {"sigma_volts": 1e-5, "mode": "fast"},
        "selection": {"kind": "snr_threshold", "snr_threshold_db": 10.0},
        "init": {"mode": init_mode},
        "master_seed": seed,
    }
    return {"experiments": [
        {"label": "mono-planar", "constellation": {"kind": "mono-planar"},
         "mobile_grid": {"side_points": 20, "plane_offset_m": 0.75,
                         "extent_m": 1.5, "x_center_m": 0.55, "z_center_m": 1.0},
         **shared},
        {"label": "tri-planar", "constellation": {"kind": "tri-planar"},
         "mobile_grid": {"side_points": 20, "plane_offset_m": 1.0,
                         "extent_m": 1.5, "x_center_m": 0.4, "z_center_m": 0.8},
         **shared},
    ]}


def recipe_snr_sweep(seed: int, init_mode: str = "perturbed-truth") -> dict:
    """Threshold sweep on the tri-planar constellation, sampled-rms noise."""
    base = {
        "constellation": {"kind": "tri-planar"},
        "mobile_grid": {"side_points": 20, "plane_offset_m": 1.05,
                        "extent_m": 1.5, "x_center_m": 0.55, "z_center_m": 1.2},
        "receiver": _normalized_receiver(0.0085),
        "noise": {"sigma_volts": 1e-5, "mode": "time_domain",
                  "noise_subtraction": False},
        "init": {"mode": init_mode},
        "master_seed": seed,
    }
    return {"experiments": [
        {**base, "label": f"snr_th_{int(th):02d}db",
         "selection": {"kind": "snr_threshold", "snr_threshold_db": th}}
        for th in SWEEP_THRESHOLDS_DB
    ]}


def recipe_sensitivity(seed: int) -> dict:
    """Anchor-parameter perturbation study, truth-initialized tri-planar."""
    base = {
        "constellation": {"kind": "tri-planar"},
        "mobile_grid": {"side_points": 20, "plane_offset_m": 1.2,
                        "extent_m": 1.5, "x_center_m": 0.75, "z_center_m": 1.5},
        "receiver": _normalized_receiver(0.05),
        "noise": {"sigma_volts": 1e-5, "mode": "fast"},
        "selection": {"kind": "snr_threshold", "snr_threshold_db": 15.0},
        "init": {"mode": "truth"},
        "master_seed": seed,
    }
    bound_key = {"axis_direction": "bound_deg",
                 "moment_magnitude": "bound_fraction",
                 "center_position": "bound_m"}
    experiments = [{**base, "label": "unperturbed"}]
    for kind, levels in SENSITIVITY_LEVELS.items():
        for level in levels:
            experiments.append({
                **base,
                "label": f"{kind}_{level:g}",
                "perturbation": {"kind": kind, bound_key[kind]: level},
            })
    return {"experiments": experiments}


def recipe_realistic(seed: int, gain: float = 20.0, top_n: int = 7) -> dict:
    """Physically parameterized coils, amplifier gain, top-N selection."""
    return {"experiments": [{
        "label": f"realistic_g{gain:g}_n{top_n}",
        "constellation": {"kind": "tri-planar", "windings": 20,
                          "radius_m": 0.03, "current_rms_a": 2.0},
        "mobile_grid": {"side_points": 20, "plane_offset_m": 0.75,
                        "extent_m": 1.0, "x_center_m": 0.75, "z_center_m": 0.9},
        "receiver": {"windings": 10, "radius_m": 0.01},
        "noise": {"sigma_volts": 1e-5, "mode": "time_domain",
                  "noise_subtraction": False},
        "selection": {"kind": "top_n", "n": top_n},
        "gain": gain,
        "init": {"mode": "perturbed-truth"},
        "master_seed": seed,
    }]}


RECIPES = {
    "placement": recipe_placement,
    "snr-sweep": recipe_snr_sweep,
    "sensitivity": recipe_sensitivity,
    "realistic": recipe_realistic,
}


def _build_recipe(name: str, args) -> dict:
    if name == "placement":
        return recipe_placement(args.seed, init_mode=args.init_mode or "truth")
    if name == "snr-sweep":
        return recipe_snr_sweep(args.seed,
                                init_mode=args.init_mode or "perturbed-truth")
    if name == "sensitivity":
        return recipe_sensitivity(args.seed)
    return recipe_realistic(args.seed, gain=args.gain if args.gain else 20.0,
                            top_n=args.top_n if args.top_n else 7)


def _apply_overrides(doc: dict, args) -> dict:
    experiments = doc["experiments"] if "experiments" in doc else [doc]
    for entry in experiments:
        if args.seed is not None:
            entry["master_seed"] = args.seed
        if args.gain is not None:
            entry["gain"] = args.gain
        if args.top_n is not None:
            entry["selection"] = {"kind": "top_n", "n": args.top_n}
        if args.snr_th_db is not None:
            entry["selection"] = {"kind": "snr_threshold",
                                  "snr_threshold_db": args.snr_th_db}
        if args.trials is not None:
            entry["trials_per_pose"] = args.trials
        if args.noise_mode is not None:
            entry.setdefault("noise", {"sigma_volts": 1e-5})["mode"] = args.noise_mode
        if args.init_mode is not None:
            entry["init"] = {**entry.get("init", {}), "mode": args.init_mode}
    return {"experiments": experiments} if "experiments" in doc else experiments[0]


def _load_config_file(path: str) -> dict:
    doc = json.loads(Path(path).read_text())
    if isinstance(doc, dict) and "config" in doc and "experiments" in doc.get("config", {}):
        return doc["config"]  # a manifest: re-run its embedded config
    return doc


def cmd_run(args) -> int:
    if (args.recipe is None) == (args.config is None):
        print("error: specify exactly one of a recipe name or --config",
              file=sys.stderr)
        return EXIT_USAGE
    if args.recipe is not None:
        if args.recipe not in RECIPES:
            print(f"error: unknown recipe {args.recipe!r}; "
                  f"choose from {', '.join(sorted(RECIPES))}", file=sys.stderr)
            return EXIT_USAGE
        if args.seed is None:
            args.seed = 0
        doc = _build_recipe(args.recipe, args)
        doc = _apply_overrides(doc, args)
    else:
        try:
            doc = _load_config_file(args.config)
        except (OSError, json.JSONDecodeError) as exc:
            print(f"error: cannot read config: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        doc = _apply_overrides(doc, args)

    diagnostics = validate_config(doc)
    if diagnostics:
        for line in diagnostics:
            print(f"config error: {line}", file=sys.stderr)
        return EXIT_CONFIG
    configs = build_experiments(doc)

    out_dir = Path(args.out)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        probe = out_dir / ".write-probe"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        print(f"error: output directory not writable: {exc}", file=sys.stderr)
        return EXIT_OUTPUT

    reports = []
    for cfg in configs:
        print(f"running scenario {cfg.label!r} "
              f"({cfg.mobile.side_points ** 2} poses x {cfg.trials_per_pose} trials)")
        reports.append(run_experiment(cfg))

    write_records_csv(reports, out_dir / "records.csv")
    write_summary_json(reports, configs, out_dir / "summary.json", args.recipe)
    write_manifest(configs, out_dir / "manifest.json", args.recipe, args.config,
                   out_dir, configs[0].master_seed)
    for rep in reports:
        print(f"{rep.label}: P_d={rep.p_d:.4f} P_alpha={rep.p_alpha:.4f} "
              f"e_d_mean={rep.e_d_mean:.4g} m")
    print(f"wrote {out_dir / 'records.csv'}, {out_dir / 'summary.json'}, "
          f"{out_dir / 'manifest.json'}")
    return EXIT_OK


def cmd_validate(args) -> int:
    try:
        doc = _load_config_file(args.config_file)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    diagnostics = validate_config(doc)
    if diagnostics:
        for line in diagnostics:
            print(line)
        return EXIT_CONFIG
    print("OK")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="coilpose",
        description="Magnetic coil pose estimation: simulation studies and reports.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a named recipe or a config file")
    run.add_argument("recipe", nargs="?", help=f"one of: {', '.join(sorted(RECIPES))}")
    run.add_argument("--recipe", dest="recipe_flag", metavar="NAME",
                     help="alternative to the positional recipe name")
    run.add_argument("--config", help="JSON config (or manifest) to run")
    run.add_argument("--seed", type=int, default=None, help="master seed")
    run.add_argument("-o", "--out", default="out", help="output directory")
    run.add_argument("--gain", type=float, default=None, help="amplifier gain override")
    run.add_argument("--top-n", type=int, default=None, dest="top_n",
                     help="use top-N selection with this N")
    run.add_argument("--snr-th-db", type=float, default=None, dest="snr_th_db",
                     help="use SNR-threshold selection at this level")
    run.add_argument("--trials", type=int, default=None, help="trials per pose")
    run.add_argument("--noise-mode", choices=["fast", "time_domain"], default=None,
                     dest="noise_mode")
    run.add_argument("--init-mode", choices=["truth", "perturbed-truth", "fixed"],
                     default=None, dest="init_mode")
    run.set_defaults(func=cmd_run)

    val = sub.add_parser("validate", help="check a config file against the schema")
    val.add_argument("config_file")
    val.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "recipe_flag", None):
        args.recipe = args.recipe_flag
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
