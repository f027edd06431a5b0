"""JSON experiment configuration: schema, validation and construction.

A config document describes either a single experiment or
{"experiments": [...]}. All physical quantities carry SI unit suffixes in
their field names. The same dictionaries appear inside run manifests, so a
manifest can be re-run exactly.
"""

from __future__ import annotations

import jsonschema

from .constellation import (
    Constellation,
    ConstellationError,
    MobileGridSpec,
    PerturbationSpec,
    constellation_from_dict,
    constellation_to_dict,
    monoplanar_grid,
    triplanar_grid,
)
from .estimator import EstimationError, FitOptions
from .fieldmodel import Coil, FieldModelError, MobilePose
from .measurement import MeasurementError, NoiseModel, SelectionPolicy
from .montecarlo import ExperimentConfig, ExperimentError, InitSpec


class ConfigError(ValueError):
    """Config document does not describe a valid experiment."""

    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(self.diagnostics))


_VEC3 = {"type": "array", "items": {"type": "number"}, "minItems": 3, "maxItems": 3}

_BEACON_SCHEMA = {
    "type": "object",
    "required": ["center_m", "axis", "windings", "radius_m", "current_rms_a"],
    "additionalProperties": False,
    "properties": {
        "center_m": _VEC3,
        "axis": _VEC3,
        "windings": {"type": "integer", "minimum": 1},
        "radius_m": {"type": "number", "exclusiveMinimum": 0},
        "current_rms_a": {"type": "number", "minimum": 0},
        "frequency_hz": {"type": "number", "exclusiveMinimum": 0},
    },
}

_CONSTELLATION_SCHEMA = {
    "type": "object",
    "required": ["kind"],
    "additionalProperties": False,
    "properties": {
        "kind": {"enum": ["mono-planar", "tri-planar", "custom"]},
        "label": {"type": "string"},
        "extent_m": {"type": "number", "exclusiveMinimum": 0},
        "rows": {"type": "integer", "minimum": 1},
        "cols": {"type": "integer", "minimum": 1},
        "per_side": {"type": "integer", "minimum": 1},
        "margin_m": {"type": "number", "exclusiveMinimum": 0},
        "moment_am2": {"type": "number", "exclusiveMinimum": 0},
        "windings": {"type": "integer", "minimum": 1},
        "radius_m": {"type": "number", "exclusiveMinimum": 0},
        "current_rms_a": {"type": "number", "minimum": 0},
        "frequency_hz": {"type": "number", "exclusiveMinimum": 0},
        "beacons": {"type": "array", "items": _BEACON_SCHEMA, "minItems": 1},
    },
}

_EXPERIMENT_SCHEMA = {
    "type": "object",
    "required": ["constellation"],
    "additionalProperties": False,
    "properties": {
        "label": {"type": "string"},
        "constellation": _CONSTELLATION_SCHEMA,
        "mobile_grid": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "side_points": {"type": "integer", "minimum": 1},
                "plane_offset_m": {"type": "number"},
                "extent_m": {"type": "number", "minimum": 0},
                "x_center_m": {"type": "number"},
                "z_center_m": {"type": "number"},
            },
        },
        "receiver": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "windings": {"type": "integer", "minimum": 1},
                "radius_m": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "noise": {
            "type": "object",
            "required": ["sigma_volts"],
            "additionalProperties": False,
            "properties": {
                "sigma_volts": {"type": "number", "minimum": 0},
                "mode": {"enum": ["fast", "time_domain"]},
                "samples_per_measurement": {"type": "integer", "minimum": 2},
                "periods": {"type": "integer", "minimum": 1},
                "noise_subtraction": {"type": "boolean"},
            },
        },
        "selection": {
            "type": "object",
            "required": ["kind"],
            "additionalProperties": False,
            "properties": {
                "kind": {"enum": ["snr_threshold", "top_n"]},
                "snr_threshold_db": {"type": "number"},
                "n": {"type": "integer", "minimum": 1},
            },
        },
        "gain": {"type": "number", "exclusiveMinimum": 0},
        "init": {
            "type": "object",
            "required": ["mode"],
            "additionalProperties": False,
            "properties": {
                "mode": {"enum": ["truth", "perturbed-truth", "fixed"]},
                "position_bound_m": {"type": "number", "minimum": 0},
                "angle_bound_deg": {"type": "number", "minimum": 0},
                "position_m": _VEC3,
                "attitude": _VEC3,
            },
        },
        "perturbation": {
            "type": ["object", "null"],
            "required": ["kind"],
            "additionalProperties": False,
            "properties": {
                "kind": {"enum": ["axis_direction", "moment_magnitude", "center_position"]},
                "bound_deg": {"type": "number", "minimum": 0},
                "bound_fraction": {"type": "number", "minimum": 0},
                "bound_m": {"type": "number", "minimum": 0},
            },
        },
        "trials_per_pose": {"type": "integer", "minimum": 1},
        "master_seed": {"type": "integer", "minimum": 0},
        "fit": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "max_iterations": {"type": "integer", "minimum": 1},
                "simplex_tolerance": {"type": "number", "exclusiveMinimum": 0},
                "f_tolerance": {"type": "number", "exclusiveMinimum": 0},
                "initial_step_position_m": {"type": "number", "exclusiveMinimum": 0},
                "initial_step_angle_rad": {"type": "number", "exclusiveMinimum": 0},
                "restarts": {"type": "integer", "minimum": 1},
            },
        },
    },
}

CONFIG_SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "oneOf": [
        _EXPERIMENT_SCHEMA,
        {
            "type": "object",
            "required": ["experiments"],
            "additionalProperties": False,
            "properties": {
                "recipe": {"type": "string"},
                "experiments": {"type": "array", "items": _EXPERIMENT_SCHEMA,
                                "minItems": 1},
            },
        },
    ],
}


def _error_path(error: jsonschema.ValidationError) -> str:
    parts = []
    for p in error.absolute_path:
        if isinstance(p, int):
            parts[-1:] = [f"{parts[-1]}[{p}]"] if parts else [f"[{p}]"]
        else:
            parts.append(str(p))
    return ".".join(parts) if parts else "(root)"


def validate_config(doc) -> list[str]:
    """Schema diagnostics for a config document; empty list means valid.

    Structural checks come from the JSON schema; the remaining semantic rules
    are exercised by actually building the experiments.
    """
    validator = jsonschema.Draft7Validator(_normalized_schema(doc))
    diagnostics = [f"{_error_path(e)}: {e.message}" for e in
                   sorted(validator.iter_errors(doc), key=jsonschema.exceptions.relevance)]
    if diagnostics:
        return diagnostics
    try:
        build_experiments(doc)
    except ConfigError as exc:
        diagnostics.extend(exc.diagnostics)
    return diagnostics


def _normalized_schema(doc) -> dict:
    # Match against the branch the document is aiming for, so error paths
    # point at real fields instead of a oneOf mismatch summary.
    if isinstance(doc, dict) and "experiments" in doc:
        return {
            "type": "object",
            "required": ["experiments"],
            "additionalProperties": False,
            "properties": {
                "recipe": {"type": "string"},
                "experiments": {"type": "array", "items": _EXPERIMENT_SCHEMA,
                                "minItems": 1},
            },
        }
    return _EXPERIMENT_SCHEMA


def build_experiments(doc) -> list[ExperimentConfig]:
    """ExperimentConfig list from a validated config document."""
    if isinstance(doc, dict) and "experiments" in doc:
        entries = doc["experiments"]
    else:
        entries = [doc]
    out = []
    diagnostics = []
    for i, entry in enumerate(entries):
        prefix = f"experiments[{i}]" if len(entries) > 1 or "experiments" in doc else ""
        try:
            out.append(_build_one(entry))
        except (ConstellationError, FieldModelError, MeasurementError,
                EstimationError, ExperimentError, KeyError, TypeError) as exc:
            where = f"{prefix}: " if prefix else ""
            diagnostics.append(f"{where}{exc}")
    if diagnostics:
        raise ConfigError(diagnostics)
    return out


def _build_constellation(d: dict) -> Constellation:
    kind = d["kind"]
    if kind == "custom":
        return constellation_from_dict(d)
    common = {}
    for src, dst in (("extent_m", "extent"), ("moment_am2", "moment"),
                     ("frequency_hz", "frequency"), ("windings", "windings"),
                     ("radius_m", "radius"), ("current_rms_a", "current_rms"),
                     ("label", "label")):
        if src in d:
            common[dst] = d[src]
    if kind == "mono-planar":
        for src, dst in (("rows", "rows"), ("cols", "cols")):
            if src in d:
                common[dst] = d[src]
        return monoplanar_grid(**common)
    for src, dst in (("per_side", "per_side"), ("margin_m", "margin")):
        if src in d:
            common[dst] = d[src]
    return triplanar_grid(**common)


def _build_one(entry: dict) -> ExperimentConfig:
    constellation = _build_constellation(entry["constellation"])
    g = entry.get("mobile_grid", {})
    mobile = MobileGridSpec(
        side_points=g.get("side_points", 20),
        plane_offset=g.get("plane_offset_m", 0.75),
        extent=g.get("extent_m", 1.5),
        x_center=g.get("x_center_m", 0.55),
        z_center=g.get("z_center_m", 1.0),
    )
    r = entry.get("receiver", {})
    receiver = Coil(
        center=(0.0, 0.0, 0.0),
        axis=(0.0, 0.0, 1.0),
        windings=r.get("windings", 10),
        radius=r.get("radius_m", 0.05),
        current_rms=0.0,
        frequency=constellation.beacons[0].frequency,
    )
    n = entry.get("noise", {})
    noise = NoiseModel(
        sigma=n.get("sigma_volts", 1e-5),
        mode=n.get("mode", "fast"),
        samples_per_measurement=n.get("samples_per_measurement", 1024),
        periods=n.get("periods", 8),
        noise_subtraction=n.get("noise_subtraction", True),
    )
    s = entry.get("selection", {"kind": "snr_threshold"})
    selection = SelectionPolicy(
        kind=s["kind"],
        snr_threshold_db=s.get("snr_threshold_db", 10.0),
        n=s.get("n", 7),
    )
    i = entry.get("init", {"mode": "truth"})
    fixed_pose = None
    if i.get("mode") == "fixed":
        if "position_m" not in i or "attitude" not in i:
            raise ExperimentError("fixed init requires position_m and attitude")
        fixed_pose = MobilePose(i["position_m"], i["attitude"])
    init = InitSpec(
        mode=i.get("mode", "truth"),
        position_bound=i.get("position_bound_m", 0.10),
        angle_bound_deg=i.get("angle_bound_deg", 18.0),
        fixed_pose=fixed_pose,
    )
    perturbation = None
    p = entry.get("perturbation")
    if p is not None:
        bound_key = {"axis_direction": "bound_deg",
                     "moment_magnitude": "bound_fraction",
                     "center_position": "bound_m"}[p["kind"]]
        if bound_key not in p:
            raise ExperimentError(f"perturbation {p['kind']} requires {bound_key}")
        perturbation = PerturbationSpec(p["kind"], p[bound_key])
    f = entry.get("fit", {})
    fit = FitOptions(
        max_iterations=f.get("max_iterations", 2000),
        simplex_tolerance=f.get("simplex_tolerance", 1e-6),
        f_tolerance=f.get("f_tolerance", 1e-15),
        initial_step_position=f.get("initial_step_position_m", 0.05),
        initial_step_angle=f.get("initial_step_angle_rad", 0.1),
        restarts=f.get("restarts", 1),
    )
    return ExperimentConfig(
        constellation=constellation,
        mobile=mobile,
        receiver=receiver,
        noise=noise,
        selection=selection,
        gain=entry.get("gain", 1.0),
        init=init,
        perturbation=perturbation,
        trials_per_pose=entry.get("trials_per_pose", 1),
        master_seed=entry.get("master_seed", 0),
        fit=fit,
        label=entry.get("label", constellation.label),
    )


def experiment_to_dict(cfg: ExperimentConfig) -> dict:
    """Exact JSON form of an experiment (beacons expanded), re-runnable as-is."""
    d = {
        "label": cfg.label,
        "constellation": constellation_to_dict(cfg.constellation),
        "mobile_grid": {
            "side_points": cfg.mobile.side_points,
            "plane_offset_m": cfg.mobile.plane_offset,
            "extent_m": cfg.mobile.extent,
            "x_center_m": cfg.mobile.x_center,
            "z_center_m": cfg.mobile.z_center,
        },
        "receiver": {
            "windings": cfg.receiver.windings,
            "radius_m": cfg.receiver.radius,
        },
        "noise": {
            "sigma_volts": cfg.noise.sigma,
            "mode": cfg.noise.mode,
            "samples_per_measurement": cfg.noise.samples_per_measurement,
            "periods": cfg.noise.periods,
            "noise_subtraction": cfg.noise.noise_subtraction,
        },
        "selection": (
            {"kind": "snr_threshold",
             "snr_threshold_db": cfg.selection.snr_threshold_db}
            if cfg.selection.kind == "snr_threshold"
            else {"kind": "top_n", "n": cfg.selection.n}
        ),
        "gain": cfg.gain,
        "init": {"mode": cfg.init.mode,
                 "position_bound_m": cfg.init.position_bound,
                 "angle_bound_deg": cfg.init.angle_bound_deg},
        "trials_per_pose": cfg.trials_per_pose,
        "master_seed": cfg.master_seed,
        "fit": {
            "max_iterations": cfg.fit.max_iterations,
            "simplex_tolerance": cfg.fit.simplex_tolerance,
            "f_tolerance": cfg.fit.f_tolerance,
            "initial_step_position_m": cfg.fit.initial_step_position,
            "initial_step_angle_rad": cfg.fit.initial_step_angle,
            "restarts": cfg.fit.restarts,
        },
    }
    if cfg.init.mode == "fixed":
        d["init"]["position_m"] = [float(v) for v in cfg.init.fixed_pose.position]
        d["init"]["attitude"] = [float(v) for v in cfg.init.fixed_pose.attitude]
    if cfg.perturbation is not None:
        bound_key = {"axis_direction": "bound_deg",
                     "moment_magnitude": "bound_fraction",
                     "center_position": "bound_m"}[cfg.perturbation.kind]
        d["perturbation"] = {"kind": cfg.perturbation.kind,
                             bound_key: cfg.perturbation.bound}
    return d
